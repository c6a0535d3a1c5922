#ifndef LOFT_ESTIMATE_PATH_H_
#define LOFT_ESTIMATE_PATH_H_

#include <cstdint>
#include <span>
#include <vector>

#include "absl/container/flat_hash_map.h"
#include "absl/status/status.h"
#include "loft/types.h"
#include "loft/update_path.h"

namespace loft {

// Per-flow accumulators since the last reset.
struct FlowTableEntry {
  FlowId flow_id = 0;
  std::uint64_t a = 0;      // volume sum
  std::uint64_t c = 0;      // cardinality sum
  std::uint32_t num_j = 0;  // major cycles in which the flow was active

  friend bool operator==(const FlowTableEntry&, const FlowTableEntry&) =
      default;
};

// Contribution of one major cycle to one flow.
struct MajorDelta {
  std::uint64_t a = 0;
  std::uint64_t c = 0;

  friend bool operator==(const MajorDelta&, const MajorDelta&) = default;
};

struct WatchlistEntry {
  FlowId flow_id = 0;
  double estimate = 0.0;
};

using Watchlist = std::vector<WatchlistEntry>;

// numFlow[x]: number of active flows hashed to counter x under `seed`.
std::vector<std::uint32_t> ReconstructCardinalities(
    std::span<const FlowId> active_flows, std::uint64_t seed,
    std::uint32_t width);

// Per-flow (sum of counters, sum of cardinalities) over the Z arrays of one
// major cycle. The result is index-aligned with `active_flows`.
std::vector<MajorDelta> AccumulateMajorCycle(
    std::span<const CounterArray> arrays, std::span<const FlowId> active_flows);

class FlowTable {
 public:
  explicit FlowTable(std::size_t capacity) : capacity_(capacity) {}

  // A += dA, C += dC, numJ += 1 for each listed flow.
  absl::Status Update(std::span<const FlowId> flows,
                      std::span<const MajorDelta> deltas);

  const FlowTableEntry* Find(FlowId flow) const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t capacity() const { return capacity_; }
  void Clear() { entries_.clear(); }

  template <typename F>
  void ForEach(F&& f) const {
    for (const auto& [id, e] : entries_) f(e);
  }

 private:
  std::size_t capacity_;
  absl::flat_hash_map<FlowId, FlowTableEntry> entries_;
};

// U = (numJ / j) * (A / C). In no-counting mode C is replaced by Z * numJ.
double ComputeEstimate(const FlowTableEntry& entry, std::uint64_t j,
                       EstimateMode mode = EstimateMode::kCounting,
                       std::uint32_t minors_per_major = 1);

// The `monitors` flows with the largest estimate; ties go to the smaller id.
Watchlist SelectWatchlist(const FlowTable& table, std::uint64_t j,
                          std::uint32_t monitors,
                          EstimateMode mode = EstimateMode::kCounting,
                          std::uint32_t minors_per_major = 1);

// Flow table plus the bookkeeping of majors since the last reset.
class EstimatePath {
 public:
  EstimatePath(std::uint32_t monitors, std::uint32_t minors_per_major,
               EstimateMode mode, std::size_t table_capacity);

  // Folds one completed major cycle into the table and returns the new
  // watchlist.
  absl::StatusOr<Watchlist> RunMajorCycle(std::span<const CounterArray> arrays,
                                          std::span<const FlowId> active_flows);

  void Reset();

  const FlowTable& table() const { return table_; }
  std::uint64_t majors_since_reset() const { return majors_since_reset_; }

 private:
  std::uint32_t monitors_;
  std::uint32_t minors_per_major_;
  EstimateMode mode_;
  FlowTable table_;
  std::uint64_t majors_since_reset_ = 0;
};

}  // namespace loft

#endif  // LOFT_ESTIMATE_PATH_H_
