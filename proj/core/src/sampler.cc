#include "loft/sampler.h"

#include <algorithm>

namespace loft {

Sampler::Sampler(double rate, std::uint64_t seed, bool exact_list)
    : rate_(rate), exact_list_(exact_list), rng_(seed) {}

bool Sampler::Observe(const PacketRecord& pkt) {
  if (exact_list_) {
    active_.insert(pkt.flow_id);
    ++samples_;
    return true;
  }
  if (static_cast<double>(pkt.timestamp_ns) < next_sample_ns_) return false;
  active_.insert(pkt.flow_id);
  ++samples_;
  next_sample_ns_ += SampleGapSeconds(UniformOpenClosed(rng_), rate_) * 1e9;
  return true;
}

std::vector<FlowId> Sampler::DrainActiveFlows() {
  std::vector<FlowId> out(active_.begin(), active_.end());
  active_.clear();
  std::sort(out.begin(), out.end());
  return out;
}

absl::StatusOr<std::vector<FlowId>> Degrade(std::span<const FlowId> flows,
                                            double r, std::mt19937_64& rng) {
  if (!(r >= 0.0 && r < 1.0)) {
    return absl::InvalidArgumentError("miss rate must be in [0, 1)");
  }
  std::vector<FlowId> kept;
  kept.reserve(flows.size());
  if (r == 0.0) {
    kept.assign(flows.begin(), flows.end());
    return kept;
  }
  std::bernoulli_distribution drop(r);
  for (FlowId f : flows) {
    if (!drop(rng)) kept.push_back(f);
  }
  return kept;
}

}  // namespace loft
