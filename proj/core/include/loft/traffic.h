#ifndef LOFT_TRAFFIC_H_
#define LOFT_TRAFFIC_H_

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "loft/types.h"

namespace loft {

enum class ScenarioKind { kFullUtilization, kHalfUtilization, kExternal };

absl::StatusOr<ScenarioKind> ParseScenarioKind(std::string_view name);
std::string_view ScenarioKindName(ScenarioKind kind);

struct ImixConfig {
  std::array<std::uint32_t, 3> sizes = {64, 594, 1518};
  std::array<double, 3> weights = {7.0, 4.0, 1.0};
};

double ImixMean(const ImixConfig& mix);

// Draws one size from the three-point mix. `u` is uniform on [0, 1).
std::uint32_t ImixSizeFromUniform(const ImixConfig& mix, double u);
std::uint32_t ImixSize(const ImixConfig& mix, std::mt19937_64& rng);

struct PacketSizing {
  enum class Kind { kFixed, kImix };
  Kind kind = Kind::kFixed;
  std::uint32_t fixed_bytes = 1500;
  ImixConfig imix;

  std::uint32_t max_bytes() const;
};

// Rate ratio between the two halves of the half-utilization scenario.
inline constexpr double kHalfUtilizationRatio = 25.0;

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::kFullUtilization;
  std::uint64_t flows = 1000;  // N benign flows, ids 0..N-1
  FlowSpec spec{375000.0, 1500.0};
  double duration_s = 10.0;
  double overuse_ratio = 0.0;  // 0 = none; the overuse flow has id N
  PacketSizing sizing;
  std::uint64_t seed = 1;
};

absl::Status ValidateScenario(const ScenarioConfig& config);

// Sending rate of a generated flow, bytes per second.
double FlowRate(const ScenarioConfig& config, FlowId flow);

// Sum of all generated flow rates.
double AggregateRate(const ScenarioConfig& config);

std::string DescribeScenario(const ScenarioConfig& config);

// Uniform integer on [0, n) from one 64-bit draw.
inline std::uint64_t BoundedDraw(std::mt19937_64& rng, std::uint64_t n) {
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(rng()) * n) >> 64);
}

enum class GeneratorStrategy {
  kAuto,  // periodic merge for fixed sizes, event heap otherwise
  kHeap,  // event heap always
};

// Lazily produces the scenario's packets in (timestamp, flow id) order.
// Every flow is constant-rate: the gap after a packet of s bytes at rate r is
// ceil(s * 1e9 / r) ns, and the first packet falls uniformly within one gap.
class TrafficGenerator {
 public:
  static absl::StatusOr<TrafficGenerator> Create(
      const ScenarioConfig& config,
      GeneratorStrategy strategy = GeneratorStrategy::kAuto);

  bool Next(PacketRecord* out);

  const ScenarioConfig& config() const { return config_; }
  std::uint64_t emitted() const { return emitted_; }
  std::uint64_t end_ns() const { return end_ns_; }

 private:
  struct Event {
    std::uint64_t ts;
    FlowId flow;
    std::uint32_t size;
    bool operator>(const Event& o) const {
      return ts != o.ts ? ts > o.ts : flow > o.flow;
    }
  };
  // Flows sharing one period, ordered by (offset, id).
  struct PeriodClass {
    std::uint64_t period;
    std::vector<std::pair<std::uint64_t, FlowId>> members;
    std::uint64_t cycle = 0;
    std::size_t pos = 0;
  };

  explicit TrafficGenerator(const ScenarioConfig& config);
  void InitPeriodic();
  void InitHeap();
  bool NextPeriodic(PacketRecord* out);
  bool NextHeap(PacketRecord* out);
  std::uint32_t DrawSize();
  std::uint64_t Gap(FlowId flow, std::uint32_t size) const;
  void PushClassHead(std::size_t c);

  ScenarioConfig config_;
  std::uint64_t end_ns_ = 0;
  bool periodic_ = false;
  std::mt19937_64 rng_;
  std::vector<Event> heap_;
  std::vector<PeriodClass> classes_;
  struct Head {
    std::uint64_t ts;
    FlowId flow;
    std::size_t cls;
    bool operator>(const Head& o) const {
      return ts != o.ts ? ts > o.ts : flow > o.flow;
    }
  };
  std::vector<Head> class_heads_;
  std::uint64_t emitted_ = 0;
};

// Collects a whole scenario into memory.
absl::StatusOr<std::vector<PacketRecord>> GenerateAll(
    const ScenarioConfig& config,
    GeneratorStrategy strategy = GeneratorStrategy::kAuto);

// Deterministic 64-bit id of a canonical 5-tuple.
FlowId FiveTupleToFlowId(std::uint32_t src_ip, std::uint32_t dst_ip,
                         std::uint16_t src_port, std::uint16_t dst_port,
                         std::uint8_t proto);

// Drops every packet that would push its flow's bucket above beta, leaving a
// trace in which no flow violates the spec.
std::vector<PacketRecord> Regulate(const std::vector<PacketRecord>& trace,
                                   const FlowSpec& spec);

}  // namespace loft

#endif  // LOFT_TRAFFIC_H_
