#include "loft/experiment.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <thread>

#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "loft/hash.h"
#include "loft/pipeline.h"
#include "loft/sampler.h"
#include "loft/trace_io.h"
#include "loft/update_path.h"

namespace loft {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t Fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string FormatSeconds(double s) {
  if (std::isinf(s)) return "inf";
  return absl::StrFormat("%.9f", s);
}

}  // namespace

absl::StatusOr<Profile> ParseProfile(std::string_view name) {
  if (name == "desk") return Profile::kDesk;
  if (name == "paper") return Profile::kPaper;
  return absl::InvalidArgumentError(
      absl::StrFormat("unknown profile '%s' (want desk or paper)", std::string(name)));
}

RunConfig ProfileDefaults(Profile profile) {
  RunConfig c;
  c.scenario.kind = ScenarioKind::kFullUtilization;
  c.scenario.spec = FlowSpec{375000.0, 1500.0};
  c.scenario.duration_s = 60.0;
  c.scenario.overuse_ratio = 1.5;
  c.detector.monitors = 64;
  c.detector.clock = ClockConfig{64, 16, 1024};
  if (profile == Profile::kDesk) {
    c.scenario.flows = 16384;
    c.detector.counters = 2048;
  } else {
    c.scenario.flows = 130000;
    c.detector.counters = 16384;
  }
  return c;
}

std::string ConfigDigest(const RunConfig& config) {
  DetectorConfig d = config.detector;
  d.hash_seed = 0;
  const BaselineConfig& b = config.baseline;
  const std::string canonical = absl::StrFormat(
      "kind=%s|%s|%s|msf=%d;hp=%d;hk=%d;hkb=%.17g;hku=%.17g;alpha=%.17g;"
      "link=%.17g",
      std::string(DetectorKindName(config.kind)), DescribeScenario(config.scenario),
      DescribeDetectorConfig(d), b.msf_stages, b.hashpipe_stages,
      b.heavykeeper_arrays, b.heavykeeper_decay_base, b.heavykeeper_unit_bytes,
      b.eardet_alpha_bytes, b.link_bytes_per_s);
  return absl::StrFormat("%016x", Fnv1a64(canonical));
}

std::uint64_t DetectorSeedFor(std::uint64_t run_seed) {
  return Fmix64(run_seed ^ 0x6c6f66745f686173ULL);
}

double RunResult::delay_s() const {
  if (!detected_ns || !first_violation_ns) return kInf;
  return static_cast<double>(*detected_ns - *first_violation_ns) / 1e9;
}

absl::StatusOr<RunResult> RunStream(const RunConfig& config,
                                    std::uint64_t seed,
                                    std::optional<FlowId> overuse_flow,
                                    const PacketSource& source) {
  const auto wall_start = std::chrono::steady_clock::now();
  RunConfig rc = config;
  rc.detector.hash_seed = DetectorSeedFor(seed);
  if (rc.kind == DetectorKind::kEarDet && !(rc.baseline.link_bytes_per_s > 0)) {
    rc.baseline.link_bytes_per_s = AggregateRate(rc.scenario);
  }
  const FlowSpec spec = rc.scenario.spec;
  absl::StatusOr<std::unique_ptr<Detector>> detector =
      MakeDetector(rc.kind, rc.detector, spec, rc.baseline);
  if (!detector.ok()) return detector.status();

  RunResult result;
  result.detector = std::string((*detector)->name());
  result.seed = seed;
  result.config_digest = ConfigDigest(config);
  result.overuse_flow = overuse_flow;

  PolicingPipeline pipeline(spec, rc.detector.monitors, *std::move(detector),
                            seed);
  GroundTruthTracker tracker(spec);
  const auto timeout_ns =
      static_cast<std::uint64_t>(std::llround(rc.detector.timeout_s * 1e9));
  std::optional<std::uint64_t> deadline;

  PacketRecord pkt;
  while (true) {
    absl::StatusOr<bool> more = source(&pkt);
    if (!more.ok()) return more.status();
    if (!*more) break;
    if (deadline && pkt.timestamp_ns > *deadline) break;
    tracker.Observe(pkt);
    absl::StatusOr<Disposition> d = pipeline.Process(pkt);
    if (!d.ok()) return d.status();
    if (overuse_flow && pkt.flow_id == *overuse_flow) {
      if (!deadline) {
        if (auto fv = tracker.truth().FirstViolation(*overuse_flow)) {
          deadline = *fv + timeout_ns;
        }
      }
      if (pipeline.IsBlacklisted(*overuse_flow)) break;
    }
  }

  const GroundTruth& truth = tracker.truth();
  const DetectionReport report =
      BuildDetectionReport(pipeline.events(), truth, rc.detector.timeout_s);
  result.fp_count = report.fp_count;
  result.packets = pipeline.packets();
  if (overuse_flow) {
    result.first_violation_ns = truth.FirstViolation(*overuse_flow);
    for (const DetectionEvent& e : report.events) {
      if (e.flow_id == *overuse_flow && e.within_timeout) {
        result.detected_ns = e.detected_ns;
        break;
      }
    }
  }
  result.wall_time_s = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - wall_start)
                           .count();
  return result;
}

absl::StatusOr<RunResult> RunOnce(const RunConfig& config, std::uint64_t seed,
                                  std::uint64_t run_id) {
  ScenarioConfig scenario = config.scenario;
  scenario.seed = seed;
  absl::StatusOr<TrafficGenerator> gen = TrafficGenerator::Create(scenario);
  if (!gen.ok()) return gen.status();
  std::optional<FlowId> overuse;
  if (scenario.overuse_ratio > 0.0) overuse = scenario.flows;
  absl::StatusOr<RunResult> r = RunStream(
      config, seed, overuse,
      [&](PacketRecord* p) -> absl::StatusOr<bool> { return gen->Next(p); });
  if (r.ok()) r->run_id = run_id;
  return r;
}

absl::StatusOr<RunResult> RunTrace(const RunConfig& config,
                                   const std::vector<PacketRecord>& trace,
                                   std::uint64_t seed,
                                   std::optional<FlowId> overuse_flow,
                                   std::uint64_t run_id) {
  if (!overuse_flow) {
    const GroundTruth truth = ComputeGroundTruth(trace, config.scenario.spec);
    std::optional<std::pair<std::uint64_t, FlowId>> first;
    for (const auto& [flow, ts] : truth.Sorted()) {
      if (!first || ts < first->first) first = std::make_pair(ts, flow);
    }
    if (first) overuse_flow = first->second;
  }
  std::size_t next = 0;
  absl::StatusOr<RunResult> r = RunStream(
      config, seed, overuse_flow, [&](PacketRecord* p) -> absl::StatusOr<bool> {
        if (next == trace.size()) return false;
        *p = trace[next++];
        return true;
      });
  if (r.ok()) r->run_id = run_id;
  return r;
}

std::string RunResultCsvHeader(bool with_timing) {
  std::string h =
      "run_id,detector,seed,config_digest,overuse_flow,first_violation_ns,"
      "detected_ns,delay_s,fp_count";
  if (with_timing) h += ",wall_time_s";
  return h;
}

std::string RunResultCsvRow(const RunResult& r, bool with_timing) {
  std::string overuse = r.overuse_flow ? absl::StrCat(*r.overuse_flow) : "";
  std::string fv = r.first_violation_ns ? absl::StrCat(*r.first_violation_ns) : "";
  std::string detected;
  std::string delay;
  if (r.detected_ns) {
    detected = absl::StrCat(*r.detected_ns);
    delay = FormatSeconds(r.delay_s());
  } else if (r.overuse_flow) {
    detected = "TIMEOUT";
  }
  std::string row = absl::StrFormat("%d,%s,%d,%s,%s,%s,%s,%s,%d", r.run_id,
                                    r.detector, r.seed, r.config_digest,
                                    overuse, fv, detected, delay, r.fp_count);
  if (with_timing) absl::StrAppendFormat(&row, ",%.6f", r.wall_time_s);
  return row;
}

absl::StatusOr<SweepAxis> ParseSweepAxis(std::string_view name) {
  if (name == "ratio") return SweepAxis::kRatio;
  if (name == "counters") return SweepAxis::kCounters;
  if (name == "flows") return SweepAxis::kFlows;
  if (name == "missrate") return SweepAxis::kMissRate;
  return absl::InvalidArgumentError(absl::StrFormat(
      "unknown sweep axis '%s' (want ratio, counters, flows or missrate)",
      std::string(name)));
}

std::string_view SweepAxisName(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kRatio:
      return "ratio";
    case SweepAxis::kCounters:
      return "counters";
    case SweepAxis::kFlows:
      return "flows";
    case SweepAxis::kMissRate:
      return "missrate";
  }
  return "?";
}

absl::Status ApplySweepValue(SweepAxis axis, double value, RunConfig* config) {
  auto as_count = [&](const char* what) -> absl::StatusOr<std::uint64_t> {
    if (!(value >= 1.0) || value != std::floor(value) || value > 1e12) {
      return absl::InvalidArgumentError(
          absl::StrFormat("%s must be a positive integer, got %g", what, value));
    }
    return static_cast<std::uint64_t>(value);
  };
  switch (axis) {
    case SweepAxis::kRatio:
      config->scenario.overuse_ratio = value;
      return ValidateScenario(config->scenario);
    case SweepAxis::kCounters: {
      absl::StatusOr<std::uint64_t> w = as_count("counters");
      if (!w.ok()) return w.status();
      config->detector.counters = static_cast<std::uint32_t>(*w);
      return ValidateDetectorConfig(config->detector);
    }
    case SweepAxis::kFlows: {
      absl::StatusOr<std::uint64_t> n = as_count("flows");
      if (!n.ok()) return n.status();
      config->scenario.flows = *n;
      return ValidateScenario(config->scenario);
    }
    case SweepAxis::kMissRate:
      config->detector.miss_rate = value;
      return ValidateDetectorConfig(config->detector);
  }
  return absl::InvalidArgumentError("bad sweep axis");
}

DelayStats ComputeDelayStats(const std::vector<RunResult>& runs) {
  DelayStats s;
  s.runs = runs.size();
  if (runs.empty()) return s;
  std::vector<double> d;
  d.reserve(runs.size());
  for (const RunResult& r : runs) {
    d.push_back(r.delay_s());
    if (r.detected()) ++s.detected;
    s.fp_total += r.fp_count;
  }
  std::sort(d.begin(), d.end());
  const std::size_t n = d.size();
  s.timeout_rate = static_cast<double>(n - s.detected) / static_cast<double>(n);
  s.min = d.front();
  s.max = d.back();
  s.median = n % 2 == 1 ? d[n / 2] : 0.5 * (d[n / 2 - 1] + d[n / 2]);
  double sum = 0.0;
  for (double x : d) sum += x;
  s.mean = sum / static_cast<double>(n);
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
  s.p95 = d[std::max<std::size_t>(rank, 1) - 1];
  return s;
}

void ParallelFor(std::size_t n, unsigned threads,
                 const std::function<void(std::size_t)>& job) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) job(i);
    });
  }
  for (std::thread& t : pool) t.join();
}

absl::StatusOr<std::vector<SweepPoint>> RunSweep(const SweepSpec& spec) {
  if (spec.values.empty()) {
    return absl::InvalidArgumentError("sweep axis has no values");
  }
  if (spec.repeats == 0) return absl::InvalidArgumentError("repeats must be >= 1");
  std::vector<SweepPoint> points(spec.values.size());
  std::vector<RunConfig> configs(spec.values.size(), spec.base);
  for (std::size_t p = 0; p < points.size(); ++p) {
    if (absl::Status s = ApplySweepValue(spec.axis, spec.values[p], &configs[p]);
        !s.ok()) {
      return s;
    }
    points[p].value = spec.values[p];
    points[p].config_digest = ConfigDigest(configs[p]);
    points[p].runs.resize(spec.repeats);
  }
  std::mutex mu;
  absl::Status first_error;
  ParallelFor(points.size() * spec.repeats, spec.threads, [&](std::size_t job) {
    const std::size_t p = job / spec.repeats;
    const std::size_t i = job % spec.repeats;
    absl::StatusOr<RunResult> r = RunOnce(configs[p], spec.base_seed + i, i);
    if (!r.ok()) {
      std::lock_guard<std::mutex> lock(mu);
      if (first_error.ok()) first_error = r.status();
      return;
    }
    points[p].runs[i] = *std::move(r);
  });
  if (!first_error.ok()) return first_error;
  for (SweepPoint& point : points) point.stats = ComputeDelayStats(point.runs);
  return points;
}

std::string SweepCsvHeader() {
  return "axis,value,detector,config_digest,runs,detected,timeout_rate,"
         "min_s,median_s,mean_s,p95_s,max_s,fp_total";
}

std::string SweepCsvRow(SweepAxis axis, const SweepPoint& point,
                        std::string_view detector) {
  const DelayStats& s = point.stats;
  return absl::StrFormat("%s,%.17g,%s,%s,%d,%d,%.6f,%s,%s,%s,%s,%s,%d",
                         std::string(SweepAxisName(axis)), point.value,
                         std::string(detector),
                         point.config_digest, s.runs, s.detected,
                         s.timeout_rate, FormatSeconds(s.min),
                         FormatSeconds(s.median), FormatSeconds(s.mean),
                         FormatSeconds(s.p95), FormatSeconds(s.max), s.fp_total);
}

BenchResult RunBench(const BenchSpec& spec) {
  BenchResult r;
  if (spec.packets == 0 || spec.counters == 0 || spec.flows == 0) return r;
  constexpr std::size_t kRing = 1 << 20;
  std::mt19937_64 rng(spec.seed);
  std::vector<FlowId> ring(kRing);
  for (FlowId& f : ring) f = BoundedDraw(rng, spec.flows);

  UpdatePath update(spec.counters, spec.clock.minors_per_major,
                    Fmix64(spec.seed));
  update.StartMajor(0);
  Sampler sampler(spec.sample_rate, spec.seed);
  const double step_ns = 1e9 / spec.packets_per_s;
  std::uint64_t boundary = MinorStartNs(1, spec.clock.minor_per_second);
  std::uint64_t minor = 1;
  std::size_t drained = 0;

  const auto start = std::chrono::steady_clock::now();
  PacketRecord pkt;
  pkt.size_bytes = 1500;
  for (std::uint64_t i = 0; i < spec.packets; ++i) {
    pkt.timestamp_ns = static_cast<std::uint64_t>(static_cast<double>(i) * step_ns);
    while (pkt.timestamp_ns >= boundary) {
      if (update.RotateMinorCycle()) drained += sampler.DrainActiveFlows().size();
      boundary = MinorStartNs(++minor, spec.clock.minor_per_second);
    }
    pkt.flow_id = ring[i & (kRing - 1)];
    sampler.Observe(pkt);
    update.Update(pkt);
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  // Keeps the work observable.
  if (update.current().Total() == std::numeric_limits<std::uint64_t>::max() &&
      drained == 0) {
    r.packets = 1;
  }
  r.packets = spec.packets;
  r.seconds = secs;
  r.updates_per_s = secs > 0 ? static_cast<double>(spec.packets) / secs : 0.0;
  r.ns_per_update = secs * 1e9 / static_cast<double>(spec.packets);
  return r;
}

std::string BenchCsvHeader() {
  return "counters,packets,seconds,updates_per_s,ns_per_update";
}

std::string BenchCsvRow(const BenchSpec& spec, const BenchResult& r) {
  if (r.packets == 0) return absl::StrFormat("%d,0,,,", spec.counters);
  return absl::StrFormat("%d,%d,%.6f,%.0f,%.3f", spec.counters, r.packets,
                         r.seconds, r.updates_per_s, r.ns_per_update);
}

std::uint64_t BaseSeedFromEnv(std::uint64_t fallback) {
  const char* v = std::getenv("LOFT_LAB_SEED");
  std::uint64_t seed = 0;
  if (v != nullptr && absl::SimpleAtoi(v, &seed)) return seed;
  return fallback;
}

}  // namespace loft
