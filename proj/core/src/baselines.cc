#include "loft/baselines.h"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

#include "absl/strings/str_format.h"
#include "loft/hash.h"
#include "loft/loft_detector.h"

namespace loft {
namespace {

std::vector<std::uint64_t> StageSeeds(std::uint64_t seed, std::uint32_t n) {
  std::vector<std::uint64_t> seeds(n);
  for (std::uint32_t i = 0; i < n; ++i) seeds[i] = MinorSeed(seed, i);
  return seeds;
}

std::vector<std::pair<FlowId, std::uint64_t>> TopOf(
    absl::flat_hash_map<FlowId, std::uint64_t>& counts, std::size_t k) {
  std::vector<std::pair<FlowId, std::uint64_t>> all(counts.begin(),
                                                    counts.end());
  auto better = [](const auto& x, const auto& y) {
    if (x.second != y.second) return x.second > y.second;
    return x.first < y.first;
  };
  const std::size_t n = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + n, all.end(), better);
  all.resize(n);
  return all;
}

}  // namespace

// ---------------------------------------------------------------------------
// MultistageFilter

MultistageFilter::MultistageFilter(std::uint32_t stages, std::uint32_t width,
                                   double threshold, std::uint64_t seed)
    : stages_(stages),
      width_(width),
      threshold_(threshold),
      seeds_(StageSeeds(seed, stages)),
      counters_(static_cast<std::size_t>(stages) * width, 0) {}

bool MultistageFilter::Process(const PacketRecord& pkt) {
  std::uint64_t* cells[64];
  assert(stages_ <= 64);
  std::uint64_t lo = std::numeric_limits<std::uint64_t>::max();
  for (std::uint32_t s = 0; s < stages_; ++s) {
    cells[s] = &counters_[static_cast<std::size_t>(s) * width_ +
                          HashFlow(seeds_[s], pkt.flow_id, width_)];
    lo = std::min(lo, *cells[s]);
  }
  const std::uint64_t raised = lo + pkt.size_bytes;
  for (std::uint32_t s = 0; s < stages_; ++s) {
    *cells[s] = std::max(*cells[s], raised);
  }
  return static_cast<double>(raised) >= threshold_;
}

std::uint64_t MultistageFilter::Estimate(FlowId flow) const {
  std::uint64_t lo = std::numeric_limits<std::uint64_t>::max();
  for (std::uint32_t s = 0; s < stages_; ++s) {
    lo = std::min(lo, counters_[static_cast<std::size_t>(s) * width_ +
                                HashFlow(seeds_[s], flow, width_)]);
  }
  return lo;
}

void MultistageFilter::Clear() {
  std::fill(counters_.begin(), counters_.end(), 0);
}

std::uint32_t MultistageFilter::StagesForDelta(double delta) {
  return static_cast<std::uint32_t>(std::ceil(std::log(1.0 / delta)));
}

// ---------------------------------------------------------------------------
// EarDet

EarDet::EarDet(const Params& params)
    : params_(params),
      beta_th_(static_cast<std::int64_t>(std::ceil(beta_threshold()))),
      slots_(params.counters) {
  free_.reserve(params.counters);
  for (std::uint32_t i = params.counters; i > 0; --i) free_.push_back(i - 1);
}

double EarDet::gamma_high() const {
  return params_.link_bytes_per_s / (params_.counters + 1.0);
}

double EarDet::beta_threshold() const {
  return (params_.counters + 1.0) * params_.beta_low_bytes + params_.alpha_bytes;
}

double EarDet::beta_high() const {
  return 2.0 * beta_threshold() + params_.alpha_bytes;
}

std::uint64_t EarDet::CountersFor(double link_bytes_per_s,
                                  double gamma_high_bytes_per_s) {
  const double n = link_bytes_per_s / gamma_high_bytes_per_s - 1.0;
  return static_cast<std::uint64_t>(std::ceil(n - 1e-9));
}

std::int64_t EarDet::Count(FlowId flow) const {
  auto it = owner_.find(flow);
  if (it == owner_.end()) return 0;
  return Effective(slots_[it->second]);
}

std::int64_t EarDet::MinCount() const {
  return by_count_.begin()->first - offset_;
}

void EarDet::Occupy(std::uint32_t slot, FlowId flow, std::int64_t count,
                    bool blank) {
  Slot& s = slots_[slot];
  s.flow = flow;
  s.raw = count + offset_;
  s.used = true;
  s.blank = blank;
  by_count_.insert({s.raw, slot});
  if (!blank) {
    owner_[flow] = slot;
    ++real_used_;
  }
}

void EarDet::Release(std::uint32_t slot) {
  Slot& s = slots_[slot];
  by_count_.erase({s.raw, slot});
  if (!s.blank) {
    owner_.erase(s.flow);
    --real_used_;
  }
  s.used = false;
  free_.push_back(slot);
}

void EarDet::DecrementAll(std::int64_t d) {
  offset_ += d;
  while (!by_count_.empty() && by_count_.begin()->first - offset_ <= 0) {
    Release(by_count_.begin()->second);
  }
}

void EarDet::AddBlank(std::int64_t bytes) {
  const std::int64_t alpha =
      std::max<std::int64_t>(1, static_cast<std::int64_t>(params_.alpha_bytes));
  while (bytes > 0) {
    if (real_used_ == 0) {
      // Only virtual traffic is left; it cannot affect any real flow.
      while (!by_count_.empty()) Release(by_count_.begin()->second);
      return;
    }
    if (!free_.empty()) {
      const std::int64_t chunk = std::min(alpha, bytes);
      const std::uint32_t slot = free_.back();
      free_.pop_back();
      Occupy(slot, 0, chunk, /*blank=*/true);
      bytes -= chunk;
      continue;
    }
    const std::int64_t d = std::min(MinCount(), bytes);
    DecrementAll(d);
    bytes -= d;
  }
}

bool EarDet::Process(const PacketRecord& pkt) {
  const double ts = static_cast<double>(pkt.timestamp_ns);
  if (!started_) {
    started_ = true;
    link_free_ns_ = ts;
  }
  if (ts > link_free_ns_) {
    const double blank =
        params_.link_bytes_per_s * (ts - link_free_ns_) * 1e-9 + blank_carry_;
    const double whole = std::floor(blank);
    blank_carry_ = blank - whole;
    link_free_ns_ = ts;
    AddBlank(static_cast<std::int64_t>(whole));
  }
  link_free_ns_ += pkt.size_bytes / params_.link_bytes_per_s * 1e9;

  const std::int64_t size = pkt.size_bytes;
  std::uint32_t slot;
  if (auto it = owner_.find(pkt.flow_id); it != owner_.end()) {
    slot = it->second;
    Slot& s = slots_[slot];
    by_count_.erase({s.raw, slot});
    s.raw += size;
    by_count_.insert({s.raw, slot});
  } else if (!free_.empty()) {
    slot = free_.back();
    free_.pop_back();
    Occupy(slot, pkt.flow_id, size, /*blank=*/false);
  } else {
    const std::int64_t d = std::min(MinCount(), size);
    DecrementAll(d);
    const std::int64_t rest = size - d;
    if (rest <= 0) return false;
    slot = free_.back();
    free_.pop_back();
    Occupy(slot, pkt.flow_id, rest, /*blank=*/false);
  }
  if (Effective(slots_[slot]) > beta_th_) {
    Release(slot);
    return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// HashPipe

HashPipe::HashPipe(std::uint32_t stages, std::uint32_t slots_per_stage,
                   std::uint64_t seed)
    : stages_(stages),
      width_(slots_per_stage),
      seeds_(StageSeeds(seed, stages)),
      table_(static_cast<std::size_t>(stages) * slots_per_stage) {}

void HashPipe::Process(const PacketRecord& pkt) {
  Entry& first = table_[HashFlow(seeds_[0], pkt.flow_id, width_)];
  if (first.count > 0 && first.flow == pkt.flow_id) {
    first.count += pkt.size_bytes;
    return;
  }
  Entry carry{pkt.flow_id, pkt.size_bytes};
  std::swap(carry, first);
  if (carry.count == 0) return;
  for (std::uint32_t s = 1; s < stages_; ++s) {
    Entry& e = table_[static_cast<std::size_t>(s) * width_ +
                      HashFlow(seeds_[s], carry.flow, width_)];
    if (e.count == 0) {
      e = carry;
      return;
    }
    if (e.flow == carry.flow) {
      e.count += carry.count;
      return;
    }
    if (e.count < carry.count) std::swap(e, carry);
  }
}

std::vector<std::pair<FlowId, std::uint64_t>> HashPipe::TopK(
    std::size_t k) const {
  absl::flat_hash_map<FlowId, std::uint64_t> counts;
  for (const Entry& e : table_) {
    if (e.count > 0) counts[e.flow] += e.count;
  }
  return TopOf(counts, k);
}

std::uint64_t HashPipe::TrackedTotal() const {
  std::uint64_t total = 0;
  for (const Entry& e : table_) total += e.count;
  return total;
}

void HashPipe::Clear() { std::fill(table_.begin(), table_.end(), Entry{}); }

// ---------------------------------------------------------------------------
// HeavyKeeper

HeavyKeeper::HeavyKeeper(std::uint32_t arrays, std::uint32_t width,
                         double decay_base, double unit_bytes,
                         std::uint64_t seed)
    : arrays_(arrays),
      width_(width),
      decay_base_(decay_base),
      unit_bytes_(unit_bytes),
      seeds_(StageSeeds(seed, arrays)),
      table_(static_cast<std::size_t>(arrays) * width),
      rng_(Fmix64(seed ^ 0x4ea7)) {}

double HeavyKeeper::DecayProbability(std::uint64_t count) const {
  return std::pow(decay_base_, -static_cast<double>(count) / unit_bytes_);
}

void HeavyKeeper::Process(const PacketRecord& pkt) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::uint32_t a = 0; a < arrays_; ++a) {
    Bucket& b = table_[static_cast<std::size_t>(a) * width_ +
                       HashFlow(seeds_[a], pkt.flow_id, width_)];
    if (b.count == 0) {
      b = Bucket{pkt.flow_id, pkt.size_bytes};
    } else if (b.flow == pkt.flow_id) {
      b.count += pkt.size_bytes;
    } else if (unit(rng_) < DecayProbability(b.count)) {
      if (b.count <= pkt.size_bytes) {
        b = Bucket{pkt.flow_id, pkt.size_bytes};
      } else {
        b.count -= pkt.size_bytes;
      }
    }
  }
}

std::uint64_t HeavyKeeper::Query(FlowId flow) const {
  std::uint64_t best = 0;
  for (std::uint32_t a = 0; a < arrays_; ++a) {
    const Bucket& b = table_[static_cast<std::size_t>(a) * width_ +
                             HashFlow(seeds_[a], flow, width_)];
    if (b.count > 0 && b.flow == flow) best = std::max(best, b.count);
  }
  return best;
}

std::vector<std::pair<FlowId, std::uint64_t>> HeavyKeeper::TopK(
    std::size_t k) const {
  absl::flat_hash_map<FlowId, std::uint64_t> counts;
  for (const Bucket& b : table_) {
    if (b.count == 0) continue;
    std::uint64_t& c = counts[b.flow];
    c = std::max(c, b.count);
  }
  return TopOf(counts, k);
}

void HeavyKeeper::Clear() { std::fill(table_.begin(), table_.end(), Bucket{}); }

// ---------------------------------------------------------------------------
// Detector adapters

namespace {

// Tracks measurement windows aligned with major cycles.
class Windowed {
 public:
  explicit Windowed(const ClockConfig& clock) : clock_(clock) {}

  // True when ts_ns starts a later window than the last one seen.
  bool Roll(std::uint64_t ts_ns) {
    const std::uint64_t w =
        MinorIndex(ts_ns, clock_.minor_per_second) / clock_.minors_per_major;
    if (!started_) {
      started_ = true;
      window_ = w;
      return false;
    }
    if (w == window_) return false;
    window_ = w;
    return true;
  }

 private:
  ClockConfig clock_;
  std::uint64_t window_ = 0;
  bool started_ = false;
};

class MsfDetector : public Detector {
 public:
  MsfDetector(const DetectorConfig& config, const FlowSpec& spec,
              std::uint32_t stages)
      : window_(config.clock),
        filter_(stages, config.counters / stages,
                FlowSpecLimit(spec, static_cast<double>(
                                        config.clock.minors_per_major) /
                                        config.clock.minor_per_second),
                config.hash_seed) {}

  std::string_view name() const override { return "msf"; }
  absl::Status AdvanceTo(std::uint64_t ts_ns, MonitorBank&) override {
    if (window_.Roll(ts_ns)) filter_.Clear();
    return absl::OkStatus();
  }
  void Observe(const PacketRecord& pkt, MonitorBank& monitors) override {
    if (filter_.Process(pkt)) monitors.Suspect(pkt.flow_id);
  }
  std::size_t counter_slots() const override { return filter_.slots(); }

 private:
  Windowed window_;
  MultistageFilter filter_;
};

class EarDetDetector : public Detector {
 public:
  explicit EarDetDetector(const EarDet::Params& params) : eardet_(params) {}

  std::string_view name() const override { return "eardet"; }
  absl::Status AdvanceTo(std::uint64_t, MonitorBank&) override {
    return absl::OkStatus();
  }
  void Observe(const PacketRecord& pkt, MonitorBank& monitors) override {
    if (eardet_.Process(pkt)) monitors.Suspect(pkt.flow_id);
  }
  std::size_t counter_slots() const override { return eardet_.slots(); }

 private:
  EarDet eardet_;
};

// Installs the window's top-W_fm flows as the next watchlist.
template <typename Sketch>
class TopKDetector : public Detector {
 public:
  TopKDetector(std::string_view name, const DetectorConfig& config,
               Sketch sketch)
      : name_(name),
        monitors_(config.monitors),
        window_(config.clock),
        sketch_(std::move(sketch)) {}

  std::string_view name() const override { return name_; }
  absl::Status AdvanceTo(std::uint64_t ts_ns, MonitorBank& monitors) override {
    if (!window_.Roll(ts_ns)) return absl::OkStatus();
    ids_.clear();
    for (const auto& [flow, bytes] : sketch_.TopK(monitors_)) {
      ids_.push_back(flow);
    }
    monitors.InstallWatchlist(ids_);
    sketch_.Clear();
    return absl::OkStatus();
  }
  void Observe(const PacketRecord& pkt, MonitorBank&) override {
    sketch_.Process(pkt);
  }
  std::size_t counter_slots() const override { return sketch_.slots(); }

 private:
  std::string_view name_;
  std::size_t monitors_;
  Windowed window_;
  Sketch sketch_;
  std::vector<FlowId> ids_;
};

absl::Status CheckDivisible(std::uint32_t counters, std::uint32_t parts,
                            std::string_view what) {
  if (parts == 0 || counters % parts != 0) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "W=%d must split evenly into %d %s", counters, parts, std::string(what)));
  }
  return absl::OkStatus();
}

}  // namespace

absl::StatusOr<DetectorKind> ParseDetectorKind(std::string_view name) {
  if (name == "loft") return DetectorKind::kLoft;
  if (name == "loft-nocount") return DetectorKind::kLoftNoCount;
  if (name == "msf") return DetectorKind::kMultistageFilter;
  if (name == "eardet") return DetectorKind::kEarDet;
  if (name == "hashpipe") return DetectorKind::kHashPipe;
  if (name == "heavykeeper") return DetectorKind::kHeavyKeeper;
  return absl::InvalidArgumentError(absl::StrFormat(
      "unknown detector '%s' (expected loft, loft-nocount, msf, eardet, "
      "hashpipe or heavykeeper)",
      std::string(name)));
}

std::string_view DetectorKindName(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::kLoft:
      return "loft";
    case DetectorKind::kLoftNoCount:
      return "loft-nocount";
    case DetectorKind::kMultistageFilter:
      return "msf";
    case DetectorKind::kEarDet:
      return "eardet";
    case DetectorKind::kHashPipe:
      return "hashpipe";
    case DetectorKind::kHeavyKeeper:
      return "heavykeeper";
  }
  return "unknown";
}

absl::StatusOr<std::unique_ptr<Detector>> MakeDetector(
    DetectorKind kind, const DetectorConfig& config, const FlowSpec& spec,
    const BaselineConfig& baseline) {
  if (absl::Status s = ValidateDetectorConfig(config); !s.ok()) return s;
  std::unique_ptr<Detector> detector;
  switch (kind) {
    case DetectorKind::kLoft:
    case DetectorKind::kLoftNoCount: {
      DetectorConfig c = config;
      c.mode = kind == DetectorKind::kLoft ? EstimateMode::kCounting
                                           : EstimateMode::kNoCounting;
      absl::StatusOr<std::unique_ptr<LoftDetector>> d = LoftDetector::Create(c);
      if (!d.ok()) return d.status();
      detector = *std::move(d);
      break;
    }
    case DetectorKind::kMultistageFilter: {
      if (absl::Status s = CheckDivisible(config.counters, baseline.msf_stages,
                                          "filter stages");
          !s.ok()) {
        return s;
      }
      detector = std::make_unique<MsfDetector>(config, spec, baseline.msf_stages);
      break;
    }
    case DetectorKind::kEarDet: {
      if (!(baseline.link_bytes_per_s > 0.0)) {
        return absl::InvalidArgumentError("EARDet needs a link capacity");
      }
      EarDet::Params p;
      p.counters = config.counters;
      p.link_bytes_per_s = baseline.link_bytes_per_s;
      p.alpha_bytes = baseline.eardet_alpha_bytes;
      p.beta_low_bytes = spec.beta_bytes;
      detector = std::make_unique<EarDetDetector>(p);
      break;
    }
    case DetectorKind::kHashPipe: {
      if (absl::Status s = CheckDivisible(
              config.counters, baseline.hashpipe_stages, "pipeline stages");
          !s.ok()) {
        return s;
      }
      detector = std::make_unique<TopKDetector<HashPipe>>(
          "hashpipe", config,
          HashPipe(baseline.hashpipe_stages,
                   config.counters / baseline.hashpipe_stages,
                   config.hash_seed));
      break;
    }
    case DetectorKind::kHeavyKeeper: {
      if (absl::Status s = CheckDivisible(
              config.counters, baseline.heavykeeper_arrays, "arrays");
          !s.ok()) {
        return s;
      }
      detector = std::make_unique<TopKDetector<HeavyKeeper>>(
          "heavykeeper", config,
          HeavyKeeper(baseline.heavykeeper_arrays,
                      config.counters / baseline.heavykeeper_arrays,
                      baseline.heavykeeper_decay_base,
                      baseline.heavykeeper_unit_bytes, config.hash_seed));
      break;
    }
  }
  if (detector->counter_slots() != config.counters) {
    return absl::InternalError(absl::StrFormat(
        "%s uses %d counting slots, budget is %d", std::string(detector->name()),
        detector->counter_slots(), config.counters));
  }
  return detector;
}

}  // namespace loft
