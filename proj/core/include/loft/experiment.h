#ifndef LOFT_EXPERIMENT_H_
#define LOFT_EXPERIMENT_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "loft/baselines.h"
#include "loft/ground_truth.h"
#include "loft/traffic.h"
#include "loft/types.h"

namespace loft {

enum class Profile { kDesk, kPaper };

absl::StatusOr<Profile> ParseProfile(std::string_view name);

// Everything one seeded run needs apart from the seed.
struct RunConfig {
  ScenarioConfig scenario;
  DetectorConfig detector;
  DetectorKind kind = DetectorKind::kLoft;
  BaselineConfig baseline;
};

// Desk: N=16384, W=2048, 60 s. Paper: N=130000, W=16384. Both use 64
// monitors, omega=64, Z=16, gamma=375000 B/s, beta=1500 B and ratio 1.5.
RunConfig ProfileDefaults(Profile profile);

// Hex digest of every setting that shapes a run, the seed excluded.
std::string ConfigDigest(const RunConfig& config);

// Seed of the detector's hash functions for a run seed.
std::uint64_t DetectorSeedFor(std::uint64_t run_seed);

struct RunResult {
  std::uint64_t run_id = 0;
  std::string detector;
  std::uint64_t seed = 0;
  std::string config_digest;
  std::optional<FlowId> overuse_flow;
  std::optional<std::uint64_t> first_violation_ns;
  std::optional<std::uint64_t> detected_ns;  // empty on timeout
  std::size_t fp_count = 0;
  std::uint64_t packets = 0;
  double wall_time_s = 0.0;

  bool detected() const { return detected_ns.has_value(); }
  // Detection delay in seconds, +inf on timeout.
  double delay_s() const;
};

// Packet source for RunStream. Returns false at the end of the stream.
using PacketSource = std::function<absl::StatusOr<bool>(PacketRecord*)>;

// Streams packets through a policing pipeline next to an offline ground
// truth tracker. Stops once the overuse flow is blacklisted, once the
// timeout has elapsed since its first violation, or at the end of the
// stream. With no overuse flow the whole stream is processed.
absl::StatusOr<RunResult> RunStream(const RunConfig& config,
                                    std::uint64_t seed,
                                    std::optional<FlowId> overuse_flow,
                                    const PacketSource& source);

// Generates the scenario with the given seed and runs it.
absl::StatusOr<RunResult> RunOnce(const RunConfig& config, std::uint64_t seed,
                                  std::uint64_t run_id = 0);

// Runs a recorded trace. The overuse flow defaults to the flow whose
// first violation comes first.
absl::StatusOr<RunResult> RunTrace(const RunConfig& config,
                                   const std::vector<PacketRecord>& trace,
                                   std::uint64_t seed,
                                   std::optional<FlowId> overuse_flow,
                                   std::uint64_t run_id = 0);

std::string RunResultCsvHeader(bool with_timing);
std::string RunResultCsvRow(const RunResult& r, bool with_timing);

enum class SweepAxis { kRatio, kCounters, kFlows, kMissRate };

absl::StatusOr<SweepAxis> ParseSweepAxis(std::string_view name);
std::string_view SweepAxisName(SweepAxis axis);

// Applies one sweep value to a config.
absl::Status ApplySweepValue(SweepAxis axis, double value, RunConfig* config);

struct DelayStats {
  std::size_t runs = 0;
  std::size_t detected = 0;
  double timeout_rate = 0.0;
  // Undetected runs count as +inf.
  double min = 0.0;
  double median = 0.0;
  double mean = 0.0;
  double p95 = 0.0;
  double max = 0.0;
  std::size_t fp_total = 0;
};

// Order statistics with nearest-rank percentiles.
DelayStats ComputeDelayStats(const std::vector<RunResult>& runs);

struct SweepPoint {
  double value = 0.0;
  std::string config_digest;
  DelayStats stats;
  std::vector<RunResult> runs;
};

struct SweepSpec {
  RunConfig base;
  SweepAxis axis = SweepAxis::kRatio;
  std::vector<double> values;
  std::size_t repeats = 1;
  std::uint64_t base_seed = 1;
  unsigned threads = 0;  // 0 = hardware concurrency
};

// Runs every (value, repeat) pair on a worker pool. Run i of a point uses
// seed base_seed + i.
absl::StatusOr<std::vector<SweepPoint>> RunSweep(const SweepSpec& spec);

// Runs independent jobs 0..n-1 on up to `threads` workers.
void ParallelFor(std::size_t n, unsigned threads,
                 const std::function<void(std::size_t)>& job);

std::string SweepCsvHeader();
std::string SweepCsvRow(SweepAxis axis, const SweepPoint& point,
                        std::string_view detector);

struct BenchResult {
  std::uint64_t packets = 0;
  double seconds = 0.0;
  double updates_per_s = 0.0;
  double ns_per_update = 0.0;
};

struct BenchSpec {
  std::uint32_t counters = 16384;
  std::uint64_t packets = 100'000'000;
  std::uint64_t flows = 130000;
  double packets_per_s = 6e6;  // virtual-time packet rate
  ClockConfig clock;
  double sample_rate = 2.1e6;
  std::uint64_t seed = 1;
};

// Sustained update-path plus sampler rate on one thread. Zero packets
// yield a zeroed result.
BenchResult RunBench(const BenchSpec& spec);

std::string BenchCsvHeader();
std::string BenchCsvRow(const BenchSpec& spec, const BenchResult& r);

// LOFT_LAB_SEED when set and valid, otherwise the fallback.
std::uint64_t BaseSeedFromEnv(std::uint64_t fallback);

}  // namespace loft

#endif  // LOFT_EXPERIMENT_H_
