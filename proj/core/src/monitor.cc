#include "loft/monitor.h"

#include <algorithm>

namespace loft {

bool MonitorPacket(LeakyBucketState& bucket, const PacketRecord& pkt) {
  if (bucket.started) {
    const double dt =
        static_cast<double>(pkt.timestamp_ns - bucket.last_update_ns) * 1e-9;
    bucket.level =
        std::max(0.0, bucket.level - bucket.spec.gamma_bytes_per_s * dt);
  }
  bucket.started = true;
  bucket.last_update_ns = pkt.timestamp_ns;
  bucket.level += pkt.size_bytes;
  if (bucket.level > bucket.spec.beta_bytes + kBucketToleranceBytes) {
    bucket.violated = true;
    return true;
  }
  return false;
}

MonitorBank::MonitorBank(std::size_t capacity, FlowSpec spec)
    : capacity_(capacity), spec_(spec) {
  buckets_.reserve(capacity);
}

void MonitorBank::InstallWatchlist(std::span<const FlowId> flows) {
  buckets_.clear();
  order_.clear();
  for (FlowId f : flows) {
    if (buckets_.size() >= capacity_) break;
    if (buckets_.contains(f)) continue;
    buckets_.emplace(f, LeakyBucketState{f, spec_});
    order_.push_back(f);
  }
}

void MonitorBank::Suspect(FlowId flow) {
  if (buckets_.contains(flow)) return;
  while (buckets_.size() >= capacity_ && !order_.empty()) {
    buckets_.erase(order_.front());
    order_.pop_front();
  }
  buckets_.emplace(flow, LeakyBucketState{flow, spec_});
  order_.push_back(flow);
}

void MonitorBank::Remove(FlowId flow) {
  if (buckets_.erase(flow) == 0) return;
  order_.erase(std::find(order_.begin(), order_.end(), flow));
}

}  // namespace loft
