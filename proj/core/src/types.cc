#include "loft/types.h"

#include <cmath>

#include "absl/strings/str_format.h"

namespace loft {

absl::Status ValidateFlowSpec(const FlowSpec& spec) {
  if (!(spec.gamma_bytes_per_s > 0.0) || !std::isfinite(spec.gamma_bytes_per_s)) {
    return absl::InvalidArgumentError("flow spec gamma must be positive");
  }
  if (!(spec.beta_bytes >= 0.0) || !std::isfinite(spec.beta_bytes)) {
    return absl::InvalidArgumentError("flow spec beta must be non-negative");
  }
  return absl::OkStatus();
}

double FlowSpecLimit(const FlowSpec& spec, double t_seconds) {
  return spec.gamma_bytes_per_s * t_seconds + spec.beta_bytes;
}

absl::Status ValidateClockConfig(const ClockConfig& clock) {
  if (clock.minor_per_second == 0) {
    return absl::InvalidArgumentError("minor cycles per second must be >= 1");
  }
  if (clock.minors_per_major == 0) {
    return absl::InvalidArgumentError("minor cycles per major must be >= 1");
  }
  if (clock.reset_minors == 0 ||
      clock.reset_minors % clock.minors_per_major != 0) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "reset cycle (%d minors) must be a positive multiple of Z=%d",
        clock.reset_minors, clock.minors_per_major));
  }
  return absl::OkStatus();
}

CycleIndex ComputeCycleIndex(std::uint64_t timestamp_ns,
                             const ClockConfig& clock) {
  CycleIndex idx;
  idx.minor_global = MinorIndex(timestamp_ns, clock.minor_per_second);
  idx.minor = static_cast<std::uint32_t>(idx.minor_global %
                                         clock.minors_per_major);
  idx.major = idx.minor_global / clock.minors_per_major;
  idx.theta = idx.minor_global % clock.reset_minors + 1;
  return idx;
}

absl::Status ValidateDetectorConfig(const DetectorConfig& config) {
  if (config.counters == 0) {
    return absl::InvalidArgumentError("counter count W must be >= 1");
  }
  if (config.monitors == 0 || config.monitors > config.counters) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "monitor count W_fm=%d must be in [1, W=%d]", config.monitors,
        config.counters));
  }
  if (absl::Status s = ValidateClockConfig(config.clock); !s.ok()) return s;
  if (!(config.sample_rate > 0.0)) {
    return absl::InvalidArgumentError("sample rate must be positive");
  }
  if (!(config.miss_rate >= 0.0 && config.miss_rate < 1.0)) {
    return absl::InvalidArgumentError("miss rate must be in [0, 1)");
  }
  if (!(config.timeout_s > 0.0)) {
    return absl::InvalidArgumentError("timeout must be positive");
  }
  if (config.table_capacity == 0) {
    return absl::InvalidArgumentError("flow table capacity must be >= 1");
  }
  return absl::OkStatus();
}

std::string DescribeDetectorConfig(const DetectorConfig& config) {
  return absl::StrFormat(
      "W=%d;Wfm=%d;omega=%d;Z=%d;P=%d;lambda=%.17g;seed=%d;timeout=%.17g;"
      "mode=%s;exact=%d;miss=%.17g",
      config.counters, config.monitors, config.clock.minor_per_second,
      config.clock.minors_per_major, config.clock.reset_minors,
      config.sample_rate, config.hash_seed, config.timeout_s,
      config.mode == EstimateMode::kCounting ? "count" : "nocount",
      config.exact_active_list ? 1 : 0, config.miss_rate);
}

}  // namespace loft
