// loftlab: trace generation, detector runs, sweeps, bound tables and the
// update-path benchmark. Every subcommand writes CSV.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/strings/match.h"
#include "loft/bound.h"
#include "loft/experiment.h"
#include "loft/ground_truth.h"
#include "loft/trace_io.h"
#include "loft/traffic.h"

namespace {

using loft::RunConfig;

struct ScenarioFlags {
  std::string profile = "desk";
  std::string scenario = "full";
  std::uint64_t flows = 0;
  double gamma = 0;
  double beta = 0;
  double duration = 0;
  double ratio = 0;
  std::uint32_t packet_size = 1500;
  bool imix = false;
  std::uint64_t seed = 1;
};

struct DetectorFlags {
  std::string detector = "loft";
  std::uint32_t counters = 0;
  std::uint32_t monitors = 0;
  std::uint32_t omega = 0;
  std::uint32_t z = 0;
  std::uint64_t reset_minors = 0;
  double sample_rate = 0;
  double timeout = 0;
  double miss_rate = 0;
  bool exact_active_list = false;
  std::uint32_t msf_stages = 0;
  std::uint32_t hashpipe_stages = 0;
  std::uint32_t heavykeeper_arrays = 0;
  double link_rate = 0;
};

void AddScenarioFlags(CLI::App* app, ScenarioFlags* f) {
  app->add_option("--profile", f->profile, "desk or paper defaults")
      ->check(CLI::IsMember({"desk", "paper"}));
  app->add_option("--scenario", f->scenario, "full or half utilization")
      ->check(CLI::IsMember({"full", "half"}));
  app->add_option("--flows", f->flows, "benign flows N")->check(CLI::PositiveNumber);
  app->add_option("--gamma", f->gamma, "permitted rate, bytes/s")
      ->check(CLI::PositiveNumber);
  app->add_option("--beta", f->beta, "permitted burst, bytes")
      ->check(CLI::PositiveNumber);
  app->add_option("--duration", f->duration, "simulated seconds")
      ->check(CLI::PositiveNumber);
  app->add_option("--overuse-ratio", f->ratio, "0 for none, else > 1");
  app->add_option("--packet-size", f->packet_size, "fixed packet size, bytes")
      ->check(CLI::PositiveNumber);
  app->add_flag("--imix", f->imix, "iMix packet sizes instead of fixed");
  app->add_option("--seed", f->seed, "base seed (default LOFT_LAB_SEED or 1)");
}

void AddDetectorFlags(CLI::App* app, DetectorFlags* f, bool detector_list) {
  app->add_option("--detector", f->detector,
                  detector_list
                      ? "comma-separated detectors"
                      : "loft, loft-nocount, msf, eardet, hashpipe, heavykeeper");
  app->add_option("--counters", f->counters, "counter budget W")
      ->check(CLI::PositiveNumber);
  app->add_option("--monitors", f->monitors, "precise monitors W_fm")
      ->check(CLI::PositiveNumber);
  app->add_option("--omega", f->omega, "minor cycles per second")
      ->check(CLI::PositiveNumber);
  app->add_option("--minors-per-major", f->z, "Z")->check(CLI::PositiveNumber);
  app->add_option("--reset-minors", f->reset_minors, "P_reset in minor cycles")
      ->check(CLI::PositiveNumber);
  app->add_option("--sample-rate", f->sample_rate, "samples per second")
      ->check(CLI::PositiveNumber);
  app->add_option("--timeout", f->timeout, "detection timeout, seconds")
      ->check(CLI::PositiveNumber);
  app->add_option("--miss-rate", f->miss_rate, "active-list drop fraction")
      ->check(CLI::Range(0.0, 0.999999));
  app->add_flag("--exact-active-list", f->exact_active_list,
                "register every flow instead of sampling");
  app->add_option("--msf-stages", f->msf_stages, "multistage filter depth")
      ->check(CLI::PositiveNumber);
  app->add_option("--hashpipe-stages", f->hashpipe_stages, "HashPipe stages")
      ->check(CLI::PositiveNumber);
  app->add_option("--heavykeeper-arrays", f->heavykeeper_arrays,
                  "HeavyKeeper arrays")
      ->check(CLI::PositiveNumber);
  app->add_option("--link-rate", f->link_rate,
                  "EARDet link capacity, bytes/s (default: aggregate rate)")
      ->check(CLI::PositiveNumber);
}

bool Given(const CLI::App* app, const std::string& name) {
  const CLI::Option* opt = app->get_option_no_throw(name);
  return opt != nullptr && opt->count() > 0;
}

absl::StatusOr<RunConfig> BuildConfig(const CLI::App* app,
                                      const ScenarioFlags& s,
                                      const DetectorFlags& d) {
  absl::StatusOr<loft::Profile> profile = loft::ParseProfile(s.profile);
  if (!profile.ok()) return profile.status();
  RunConfig c = loft::ProfileDefaults(*profile);
  absl::StatusOr<loft::ScenarioKind> kind = loft::ParseScenarioKind(s.scenario);
  if (!kind.ok()) return kind.status();
  c.scenario.kind = *kind;
  if (Given(app, "--flows")) c.scenario.flows = s.flows;
  if (Given(app, "--gamma")) c.scenario.spec.gamma_bytes_per_s = s.gamma;
  if (Given(app, "--beta")) c.scenario.spec.beta_bytes = s.beta;
  if (Given(app, "--duration")) c.scenario.duration_s = s.duration;
  if (Given(app, "--overuse-ratio")) c.scenario.overuse_ratio = s.ratio;
  c.scenario.sizing.fixed_bytes = s.packet_size;
  if (s.imix) c.scenario.sizing.kind = loft::PacketSizing::Kind::kImix;

  if (Given(app, "--counters")) c.detector.counters = d.counters;
  if (Given(app, "--monitors")) c.detector.monitors = d.monitors;
  if (Given(app, "--omega")) c.detector.clock.minor_per_second = d.omega;
  if (Given(app, "--minors-per-major")) c.detector.clock.minors_per_major = d.z;
  if (Given(app, "--reset-minors")) c.detector.clock.reset_minors = d.reset_minors;
  if (Given(app, "--sample-rate")) c.detector.sample_rate = d.sample_rate;
  if (Given(app, "--timeout")) c.detector.timeout_s = d.timeout;
  c.detector.miss_rate = d.miss_rate;
  c.detector.exact_active_list = d.exact_active_list;
  if (Given(app, "--msf-stages")) c.baseline.msf_stages = d.msf_stages;
  if (Given(app, "--hashpipe-stages")) c.baseline.hashpipe_stages = d.hashpipe_stages;
  if (Given(app, "--heavykeeper-arrays")) {
    c.baseline.heavykeeper_arrays = d.heavykeeper_arrays;
  }
  if (Given(app, "--link-rate")) c.baseline.link_bytes_per_s = d.link_rate;

  if (absl::Status st = loft::ValidateScenario(c.scenario); !st.ok()) return st;
  if (absl::Status st = loft::ValidateDetectorConfig(c.detector); !st.ok()) {
    return st;
  }
  return c;
}

std::uint64_t SeedFor(const CLI::App* app, const ScenarioFlags& s) {
  if (Given(app, "--seed")) return s.seed;
  return loft::BaseSeedFromEnv(s.seed);
}

absl::StatusOr<std::vector<loft::DetectorKind>> ParseDetectors(
    const std::string& list) {
  std::vector<loft::DetectorKind> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    absl::StatusOr<loft::DetectorKind> k = loft::ParseDetectorKind(item);
    if (!k.ok()) return k.status();
    out.push_back(*k);
  }
  if (out.empty()) return absl::InvalidArgumentError("no detector given");
  return out;
}

// Writes to the file when a path is given, stdout otherwise.
class Output {
 public:
  absl::Status Open(const std::string& path) {
    if (path.empty() || path == "-") return absl::OkStatus();
    file_ = std::make_unique<std::ofstream>(path, std::ios::trunc);
    if (!*file_) return absl::UnavailableError("cannot open " + path);
    return absl::OkStatus();
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

int Fail(const absl::Status& status) {
  std::cerr << "loftlab: " << status.message() << "\n";
  return 1;
}

int CmdGen(const CLI::App* app, const ScenarioFlags& s, const std::string& out) {
  absl::StatusOr<RunConfig> c = BuildConfig(app, s, DetectorFlags{});
  if (!c.ok()) return Fail(c.status());
  c->scenario.seed = SeedFor(app, s);
  absl::StatusOr<loft::TrafficGenerator> gen =
      loft::TrafficGenerator::Create(c->scenario);
  if (!gen.ok()) return Fail(gen.status());
  loft::GroundTruthTracker tracker(c->scenario.spec);
  const bool csv = absl::EndsWith(out, ".csv");
  loft::PacketRecord pkt;
  if (csv) {
    std::vector<loft::PacketRecord> all;
    while (gen->Next(&pkt)) {
      tracker.Observe(pkt);
      all.push_back(pkt);
    }
    if (absl::Status st = loft::WriteTraceCsv(out, all); !st.ok()) return Fail(st);
  } else {
    loft::TraceWriter writer;
    if (absl::Status st = writer.Open(out); !st.ok()) return Fail(st);
    while (gen->Next(&pkt)) {
      tracker.Observe(pkt);
      if (absl::Status st = writer.Append(pkt); !st.ok()) return Fail(st);
    }
    if (absl::Status st = writer.Close(); !st.ok()) return Fail(st);
  }
  if (absl::Status st =
          loft::WriteGroundTruth(loft::GroundTruthPath(out), tracker.truth());
      !st.ok()) {
    return Fail(st);
  }
  std::cerr << "wrote " << gen->emitted() << " packets to " << out << "\n";
  return 0;
}

int CmdRun(const CLI::App* app, const ScenarioFlags& s, const DetectorFlags& d,
           const std::string& trace_path, std::int64_t overuse_flow,
           std::uint64_t runs, bool timing, const std::string& out_path) {
  absl::StatusOr<RunConfig> c = BuildConfig(app, s, d);
  if (!c.ok()) return Fail(c.status());
  absl::StatusOr<loft::DetectorKind> kind = loft::ParseDetectorKind(d.detector);
  if (!kind.ok()) return Fail(kind.status());
  c->kind = *kind;
  std::optional<std::vector<loft::PacketRecord>> trace;
  if (!trace_path.empty()) {
    absl::StatusOr<std::vector<loft::PacketRecord>> t =
        loft::ReadAnyTrace(trace_path);
    if (!t.ok()) return Fail(t.status());
    trace = *std::move(t);
  }
  Output out;
  if (absl::Status st = out.Open(out_path); !st.ok()) return Fail(st);
  out.stream() << loft::RunResultCsvHeader(timing) << "\n";
  const std::uint64_t base = SeedFor(app, s);
  for (std::uint64_t i = 0; i < runs; ++i) {
    absl::StatusOr<loft::RunResult> r;
    if (trace) {
      std::optional<loft::FlowId> flow;
      if (overuse_flow >= 0) flow = static_cast<loft::FlowId>(overuse_flow);
      r = loft::RunTrace(*c, *trace, base + i, flow, i);
    } else {
      r = loft::RunOnce(*c, base + i, i);
    }
    if (!r.ok()) return Fail(r.status());
    out.stream() << loft::RunResultCsvRow(*r, timing) << "\n";
  }
  return 0;
}

absl::StatusOr<std::vector<double>> ParseValues(const std::string& list) {
  std::vector<double> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      return absl::InvalidArgumentError("bad sweep value '" + item + "'");
    }
  }
  if (out.empty()) return absl::InvalidArgumentError("sweep axis has no values");
  return out;
}

int CmdSweep(const CLI::App* app, const ScenarioFlags& s, const DetectorFlags& d,
             const std::string& axis, const std::string& values,
             std::size_t repeats, unsigned threads, const std::string& out_path) {
  absl::StatusOr<RunConfig> c = BuildConfig(app, s, d);
  if (!c.ok()) return Fail(c.status());
  absl::StatusOr<loft::SweepAxis> ax = loft::ParseSweepAxis(axis);
  if (!ax.ok()) return Fail(ax.status());
  absl::StatusOr<std::vector<double>> vals = ParseValues(values);
  if (!vals.ok()) return Fail(vals.status());
  absl::StatusOr<std::vector<loft::DetectorKind>> kinds = ParseDetectors(d.detector);
  if (!kinds.ok()) return Fail(kinds.status());
  Output out;
  if (absl::Status st = out.Open(out_path); !st.ok()) return Fail(st);
  out.stream() << loft::SweepCsvHeader() << "\n";
  for (loft::DetectorKind kind : *kinds) {
    loft::SweepSpec spec;
    spec.base = *c;
    spec.base.kind = kind;
    spec.axis = *ax;
    spec.values = *vals;
    spec.repeats = repeats;
    spec.base_seed = SeedFor(app, s);
    spec.threads = threads;
    absl::StatusOr<std::vector<loft::SweepPoint>> points = loft::RunSweep(spec);
    if (!points.ok()) return Fail(points.status());
    for (const loft::SweepPoint& p : *points) {
      const std::string name =
          p.runs.empty() ? std::string(loft::DetectorKindName(kind))
                         : p.runs.front().detector;
      out.stream() << loft::SweepCsvRow(*ax, p, name) << "\n";
    }
  }
  return 0;
}

struct BoundFlags {
  double target = 0.95;
  std::string counters = "1024,2048,4096,8192,16384";
  std::uint64_t flows = 400000;
  std::uint32_t monitors = 64;
  std::uint32_t omega = 64;
  std::uint32_t z = 64;
  double gamma = 125000;
  double beta = 1500;
  double ratio = 2;
  std::size_t max_bins = loft::kDefaultMaxBins;
  double max_seconds = 3600;
};

int CmdBound(const BoundFlags& f, const std::string& out_path) {
  absl::StatusOr<std::vector<double>> widths = ParseValues(f.counters);
  if (!widths.ok()) return Fail(widths.status());
  Output out;
  if (absl::Status st = out.Open(out_path); !st.ok()) return Fail(st);
  out.stream() << "counters,target,achievable,theta_minors,t_reset_s,p_mon\n";
  for (double w : *widths) {
    loft::BoundParams p;
    p.flows = f.flows;
    p.counters = static_cast<std::uint32_t>(w);
    p.monitors = f.monitors;
    p.minor_per_second = f.omega;
    p.minors_per_major = f.z;
    p.spec = loft::FlowSpec{f.gamma, f.beta};
    p.overuse_ratio = f.ratio;
    loft::SolverOptions opt;
    opt.max_bins = f.max_bins;
    opt.max_theta = static_cast<std::uint64_t>(f.max_seconds * f.omega);
    absl::StatusOr<loft::ResetSolution> sol =
        loft::SolveResetCycle(f.target, p, opt);
    if (!sol.ok()) {
      out.stream() << p.counters << "," << f.target << ",error,,,\n";
      std::cerr << "loftlab: W=" << p.counters << ": " << sol.status().message()
                << "\n";
      continue;
    }
    out.stream() << p.counters << "," << f.target << ","
                 << (sol->achievable ? "yes" : "no") << "," << sol->theta << ","
                 << sol->t_reset_s << "," << sol->p_mon << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LOFT low-rate overuse-flow detector lab"};
  app.require_subcommand(1);

  ScenarioFlags gen_s;
  std::string gen_out;
  CLI::App* gen = app.add_subcommand("gen", "generate a trace and its ground truth");
  AddScenarioFlags(gen, &gen_s);
  gen->add_option("--out", gen_out, "trace path (.csv for CSV)")->required();

  ScenarioFlags run_s;
  DetectorFlags run_d;
  std::string run_trace, run_out;
  std::int64_t run_overuse = -1;
  std::uint64_t run_runs = 1;
  bool run_timing = false;
  CLI::App* run = app.add_subcommand("run", "run a detector on a scenario or trace");
  AddScenarioFlags(run, &run_s);
  AddDetectorFlags(run, &run_d, false);
  run->add_option("--trace", run_trace, "recorded trace instead of a scenario");
  run->add_option("--overuse-flow", run_overuse,
                  "flow to time on a trace (default: first violator)");
  run->add_option("--runs", run_runs, "seeded runs")->check(CLI::PositiveNumber);
  run->add_flag("--timing", run_timing, "append a wall_time_s column");
  run->add_option("--out", run_out, "CSV path (default stdout)");

  ScenarioFlags sw_s;
  DetectorFlags sw_d;
  std::string sw_axis, sw_values, sw_out;
  std::size_t sw_repeats = 10;
  unsigned sw_threads = 0;
  CLI::App* sweep = app.add_subcommand("sweep", "aggregate delays over a sweep axis");
  AddScenarioFlags(sweep, &sw_s);
  AddDetectorFlags(sweep, &sw_d, true);
  sweep->add_option("--axis", sw_axis, "ratio, counters, flows or missrate")
      ->required();
  sweep->add_option("--values", sw_values, "comma-separated axis values")
      ->required();
  sweep->add_option("--repeats", sw_repeats, "runs per point")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--threads", sw_threads, "workers (0 = all cores)");
  sweep->add_option("--out", sw_out, "CSV path (default stdout)");

  BoundFlags bf;
  std::string bound_out;
  CLI::App* bound = app.add_subcommand("bound", "reset cycle per counter budget");
  bound->add_option("--target", bf.target, "detection probability")
      ->check(CLI::Range(1e-12, 1 - 1e-12));
  bound->add_option("--counters", bf.counters, "comma-separated W values");
  bound->add_option("--flows", bf.flows, "N")->check(CLI::PositiveNumber);
  bound->add_option("--monitors", bf.monitors, "W_fm")->check(CLI::PositiveNumber);
  bound->add_option("--omega", bf.omega, "minor cycles per second")
      ->check(CLI::PositiveNumber);
  bound->add_option("--minors-per-major", bf.z, "Z, theta step")
      ->check(CLI::PositiveNumber);
  bound->add_option("--gamma", bf.gamma, "bytes/s")->check(CLI::PositiveNumber);
  bound->add_option("--beta", bf.beta, "bytes")->check(CLI::PositiveNumber);
  bound->add_option("--overuse-ratio", bf.ratio, "l > 1");
  bound->add_option("--max-bins", bf.max_bins, "cardinality bins (0 = exact)");
  bound->add_option("--max-seconds", bf.max_seconds, "search cap")
      ->check(CLI::PositiveNumber);
  bound->add_option("--out", bound_out, "CSV path (default stdout)");

  loft::BenchSpec bench_spec;
  std::string bench_counters = "16384";
  CLI::App* bench = app.add_subcommand("bench", "update path + sampler throughput");
  bench->add_option("--counters", bench_counters, "comma-separated W values");
  bench->add_option("--packets", bench_spec.packets, "packets per measurement");
  bench->add_option("--flows", bench_spec.flows, "distinct flows")
      ->check(CLI::PositiveNumber);
  bench->add_option("--pps", bench_spec.packets_per_s, "virtual packet rate")
      ->check(CLI::PositiveNumber);

  std::string reg_in, reg_out;
  double reg_gamma = 375000, reg_beta = 1500;
  CLI::App* regulate =
      app.add_subcommand("regulate", "drop overuse packets from a trace");
  regulate->add_option("--in", reg_in, "input trace")->required();
  regulate->add_option("--out", reg_out, "output trace")->required();
  regulate->add_option("--gamma", reg_gamma, "bytes/s")->check(CLI::PositiveNumber);
  regulate->add_option("--beta", reg_beta, "bytes")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  if (*gen) return CmdGen(gen, gen_s, gen_out);
  if (*run) {
    return CmdRun(run, run_s, run_d, run_trace, run_overuse, run_runs,
                  run_timing, run_out);
  }
  if (*sweep) {
    return CmdSweep(sweep, sw_s, sw_d, sw_axis, sw_values, sw_repeats,
                    sw_threads, sw_out);
  }
  if (*bound) {
    if (!(bf.ratio > 1.0)) return Fail(absl::InvalidArgumentError("ratio must exceed 1"));
    return CmdBound(bf, bound_out);
  }
  if (*bench) {
    absl::StatusOr<std::vector<double>> widths = ParseValues(bench_counters);
    if (!widths.ok()) return Fail(widths.status());
    std::cout << loft::BenchCsvHeader() << "\n";
    for (double w : *widths) {
      bench_spec.counters = static_cast<std::uint32_t>(w);
      const loft::BenchResult r = loft::RunBench(bench_spec);
      if (r.packets == 0) std::cerr << "loftlab: no data\n";
      std::cout << loft::BenchCsvRow(bench_spec, r) << "\n";
    }
    return 0;
  }
  if (*regulate) {
    absl::StatusOr<std::vector<loft::PacketRecord>> in = loft::ReadAnyTrace(reg_in);
    if (!in.ok()) return Fail(in.status());
    const loft::FlowSpec spec{reg_gamma, reg_beta};
    const std::vector<loft::PacketRecord> kept = loft::Regulate(*in, spec);
    absl::Status st = absl::EndsWith(reg_out, ".csv")
                          ? loft::WriteTraceCsv(reg_out, kept)
                          : loft::WriteTrace(reg_out, kept);
    if (!st.ok()) return Fail(st);
    std::cerr << "kept " << kept.size() << " of " << in->size() << " packets\n";
    return 0;
  }
  return 0;
}
