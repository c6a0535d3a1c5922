#ifndef LOFT_TYPES_H_
#define LOFT_TYPES_H_

#include <cstddef>
#include <cstdint>
#include <string>

#include "absl/status/status.h"

namespace loft {

using FlowId = std::uint64_t;

inline constexpr std::uint64_t kNanosPerSecond = 1'000'000'000ULL;

// One packet of a trace. Records in a trace are sorted by timestamp_ns.
struct PacketRecord {
  std::uint64_t timestamp_ns = 0;
  FlowId flow_id = 0;
  std::uint32_t size_bytes = 0;

  friend bool operator==(const PacketRecord&, const PacketRecord&) = default;
};

// Permitted rate and burst of a flow. A flow overuses when it sends more
// than gamma * t + beta bytes in some interval of length t.
struct FlowSpec {
  double gamma_bytes_per_s = 0.0;
  double beta_bytes = 0.0;
};

absl::Status ValidateFlowSpec(const FlowSpec& spec);

// gamma * t + beta.
double FlowSpecLimit(const FlowSpec& spec, double t_seconds);

struct ClockConfig {
  std::uint32_t minor_per_second = 64;  // omega
  std::uint32_t minors_per_major = 16;  // Z
  std::uint64_t reset_minors = 1024;    // P_reset, multiple of Z
};

absl::Status ValidateClockConfig(const ClockConfig& clock);

struct CycleIndex {
  std::uint64_t minor_global = 0;  // m
  std::uint64_t major = 0;         // j
  std::uint32_t minor = 0;         // k
  std::uint64_t theta = 0;         // minors since the last reset, 1-based

  friend bool operator==(const CycleIndex&, const CycleIndex&) = default;
};

// Global minor index floor(ts * omega / 1e9).
inline std::uint64_t MinorIndex(std::uint64_t timestamp_ns,
                                std::uint32_t minor_per_second) {
  unsigned __int128 scaled =
      static_cast<unsigned __int128>(timestamp_ns) * minor_per_second;
  return static_cast<std::uint64_t>(scaled / kNanosPerSecond);
}

// First timestamp belonging to global minor m.
inline std::uint64_t MinorStartNs(std::uint64_t m,
                                  std::uint32_t minor_per_second) {
  unsigned __int128 scaled =
      static_cast<unsigned __int128>(m) * kNanosPerSecond +
      (minor_per_second - 1);
  return static_cast<std::uint64_t>(scaled / minor_per_second);
}

CycleIndex ComputeCycleIndex(std::uint64_t timestamp_ns,
                             const ClockConfig& clock);

enum class EstimateMode {
  kCounting,    // U = (numJ / j) * (A / C)
  kNoCounting,  // C replaced by theta-style constant Z * numJ
};

struct DetectorConfig {
  std::uint32_t counters = 2048;  // W
  std::uint32_t monitors = 64;    // W_fm
  ClockConfig clock;
  double sample_rate = 2.1e6;  // lambda, samples per second
  std::uint64_t hash_seed = 0x10f7;
  double timeout_s = 300.0;
  EstimateMode mode = EstimateMode::kCounting;
  // Register every flow seen in a major cycle instead of sampling.
  bool exact_active_list = false;
  // Artificial fraction of the active-flow list dropped before estimation.
  double miss_rate = 0.0;
  // Upper bound on flow-table entries.
  std::size_t table_capacity = 1 << 22;
};

absl::Status ValidateDetectorConfig(const DetectorConfig& config);

std::string DescribeDetectorConfig(const DetectorConfig& config);

}  // namespace loft

#endif  // LOFT_TYPES_H_
