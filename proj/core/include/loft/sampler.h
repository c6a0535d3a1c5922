#ifndef LOFT_SAMPLER_H_
#define LOFT_SAMPLER_H_

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "absl/container/flat_hash_set.h"
#include "absl/status/statusor.h"
#include "loft/types.h"

namespace loft {

// Uniform draw on (0, 1].
inline double UniformOpenClosed(std::mt19937_64& rng) {
  return static_cast<double>((rng() >> 11) + 1) * 0x1.0p-53;
}

// Gap in seconds to the next sample for uniform draw u.
inline double SampleGapSeconds(double u, double rate) {
  return -std::log(u) / rate;
}

// Exponential-gap packet sampler building the per-major active-flow list.
class Sampler {
 public:
  Sampler(double rate, std::uint64_t seed, bool exact_list = false);

  // Samples the packet when its timestamp has reached the next sample time.
  bool Observe(const PacketRecord& pkt);

  // Returns the sorted active-flow list and empties it.
  std::vector<FlowId> DrainActiveFlows();

  double next_sample_time_ns() const { return next_sample_ns_; }
  std::size_t active_count() const { return active_.size(); }
  std::uint64_t samples() const { return samples_; }
  bool exact_list() const { return exact_list_; }

 private:
  double rate_;
  bool exact_list_;
  std::mt19937_64 rng_;
  double next_sample_ns_ = 0.0;
  std::uint64_t samples_ = 0;
  absl::flat_hash_set<FlowId> active_;
};

// Removes each flow independently with probability r. `flows` must be sorted
// for the result to be reproducible across containers.
absl::StatusOr<std::vector<FlowId>> Degrade(std::span<const FlowId> flows,
                                            double r, std::mt19937_64& rng);

}  // namespace loft

#endif  // LOFT_SAMPLER_H_
