#ifndef LOFT_MONITOR_H_
#define LOFT_MONITOR_H_

#include <cstdint>
#include <deque>
#include <span>

#include "absl/container/flat_hash_map.h"
#include "loft/types.h"

namespace loft {

// Slack on the burst comparison so that a flow sending exactly at its rate
// is not flagged by floating-point rounding of the drain term.
inline constexpr double kBucketToleranceBytes = 1e-6;

struct LeakyBucketState {
  FlowId flow_id = 0;
  FlowSpec spec;
  double level = 0.0;
  std::uint64_t last_update_ns = 0;
  bool started = false;
  bool violated = false;
};

// level = max(0, level - gamma * dt) + size. Returns true iff the level now
// exceeds beta.
bool MonitorPacket(LeakyBucketState& bucket, const PacketRecord& pkt);

// The W_fm precise monitors.
class MonitorBank {
 public:
  MonitorBank(std::size_t capacity, FlowSpec spec);

  // Replaces all buckets with fresh ones for the given flows.
  void InstallWatchlist(std::span<const FlowId> flows);

  // Starts monitoring one flow unless it already is. When full, the longest
  // monitored flow is dropped.
  void Suspect(FlowId flow);

  void Remove(FlowId flow);

  LeakyBucketState* Find(FlowId flow) {
    if (buckets_.empty()) return nullptr;
    auto it = buckets_.find(flow);
    return it == buckets_.end() ? nullptr : &it->second;
  }

  bool Contains(FlowId flow) const { return buckets_.contains(flow); }
  std::size_t size() const { return buckets_.size(); }
  std::size_t capacity() const { return capacity_; }
  const FlowSpec& spec() const { return spec_; }

 private:
  std::size_t capacity_;
  FlowSpec spec_;
  absl::flat_hash_map<FlowId, LeakyBucketState> buckets_;
  std::deque<FlowId> order_;
};

}  // namespace loft

#endif  // LOFT_MONITOR_H_
