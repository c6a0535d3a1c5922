#ifndef LOFT_GROUND_TRUTH_H_
#define LOFT_GROUND_TRUTH_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "absl/container/flat_hash_map.h"
#include "loft/monitor.h"
#include "loft/types.h"

namespace loft {

// First-violation time of every flow that ever exceeded its spec.
class GroundTruth {
 public:
  void Record(FlowId flow, std::uint64_t first_violation_ns) {
    first_violation_.try_emplace(flow, first_violation_ns);
  }
  std::optional<std::uint64_t> FirstViolation(FlowId flow) const {
    auto it = first_violation_.find(flow);
    if (it == first_violation_.end()) return std::nullopt;
    return it->second;
  }
  bool Violated(FlowId flow) const { return first_violation_.contains(flow); }
  std::size_t size() const { return first_violation_.size(); }
  bool empty() const { return first_violation_.empty(); }

  // (flow, first violation) pairs sorted by flow id.
  std::vector<std::pair<FlowId, std::uint64_t>> Sorted() const;

 private:
  absl::flat_hash_map<FlowId, std::uint64_t> first_violation_;
};

// Offline per-flow leaky bucket over a whole trace.
class GroundTruthTracker {
 public:
  explicit GroundTruthTracker(FlowSpec spec) : spec_(spec) {}

  void Observe(const PacketRecord& pkt);

  const GroundTruth& truth() const { return truth_; }
  GroundTruth Release() { return std::move(truth_); }

 private:
  FlowSpec spec_;
  absl::flat_hash_map<FlowId, LeakyBucketState> buckets_;
  GroundTruth truth_;
};

}  // namespace loft

#endif  // LOFT_GROUND_TRUTH_H_
