#include "loft/traffic.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include "absl/container/flat_hash_map.h"
#include "absl/strings/str_format.h"
#include "loft/hash.h"
#include "loft/monitor.h"

namespace loft {

absl::StatusOr<ScenarioKind> ParseScenarioKind(std::string_view name) {
  if (name == "full" || name == "full_utilization") {
    return ScenarioKind::kFullUtilization;
  }
  if (name == "half" || name == "half_utilization") {
    return ScenarioKind::kHalfUtilization;
  }
  if (name == "external") return ScenarioKind::kExternal;
  return absl::InvalidArgumentError(absl::StrFormat(
      "unknown scenario '%s' (expected full, half or external)", std::string(name)));
}

std::string_view ScenarioKindName(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kFullUtilization:
      return "full";
    case ScenarioKind::kHalfUtilization:
      return "half";
    case ScenarioKind::kExternal:
      return "external";
  }
  return "unknown";
}

double ImixMean(const ImixConfig& mix) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < mix.sizes.size(); ++i) {
    num += mix.weights[i] * mix.sizes[i];
    den += mix.weights[i];
  }
  return num / den;
}

std::uint32_t ImixSizeFromUniform(const ImixConfig& mix, double u) {
  double total = 0.0;
  for (double w : mix.weights) total += w;
  double x = u * total;
  for (std::size_t i = 0; i + 1 < mix.sizes.size(); ++i) {
    if (x < mix.weights[i]) return mix.sizes[i];
    x -= mix.weights[i];
  }
  return mix.sizes.back();
}

std::uint32_t ImixSize(const ImixConfig& mix, std::mt19937_64& rng) {
  return ImixSizeFromUniform(mix, static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

std::uint32_t PacketSizing::max_bytes() const {
  if (kind == Kind::kFixed) return fixed_bytes;
  return *std::max_element(imix.sizes.begin(), imix.sizes.end());
}

absl::Status ValidateScenario(const ScenarioConfig& config) {
  if (config.kind == ScenarioKind::kExternal) {
    return absl::InvalidArgumentError(
        "external scenarios are read from trace files, not generated");
  }
  if (config.flows == 0) return absl::InvalidArgumentError("need >= 1 flow");
  if (absl::Status s = ValidateFlowSpec(config.spec); !s.ok()) return s;
  if (!(config.duration_s > 0.0)) {
    return absl::InvalidArgumentError("duration must be positive");
  }
  if (!(config.overuse_ratio == 0.0 || config.overuse_ratio > 1.0)) {
    return absl::InvalidArgumentError("overuse ratio must be 0 or > 1");
  }
  const PacketSizing& z = config.sizing;
  if (z.kind == PacketSizing::Kind::kFixed &&
      (z.fixed_bytes == 0 || z.fixed_bytes > 65535)) {
    return absl::InvalidArgumentError("packet size must be in 1..65535");
  }
  if (z.kind == PacketSizing::Kind::kImix) {
    for (std::size_t i = 0; i < z.imix.sizes.size(); ++i) {
      if (z.imix.sizes[i] == 0 || z.imix.sizes[i] > 65535 ||
          !(z.imix.weights[i] >= 0.0)) {
        return absl::InvalidArgumentError("invalid iMix entry");
      }
    }
    if (!(ImixMean(z.imix) > 0.0)) {
      return absl::InvalidArgumentError("iMix weights must not all be zero");
    }
  }
  if (static_cast<double>(z.max_bytes()) > config.spec.beta_bytes) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "largest packet (%d B) exceeds the burst beta=%g B, so even "
        "rate-conformant flows would violate the spec",
        z.max_bytes(), config.spec.beta_bytes));
  }
  return absl::OkStatus();
}

double FlowRate(const ScenarioConfig& config, FlowId flow) {
  const double gamma = config.spec.gamma_bytes_per_s;
  if (flow == config.flows) return config.overuse_ratio * gamma;
  if (config.kind == ScenarioKind::kHalfUtilization) {
    const std::uint64_t full = (config.flows + 1) / 2;
    if (flow >= full) return gamma / kHalfUtilizationRatio;
  }
  return gamma;
}

double AggregateRate(const ScenarioConfig& config) {
  const double gamma = config.spec.gamma_bytes_per_s;
  double total = 0.0;
  if (config.kind == ScenarioKind::kHalfUtilization) {
    const std::uint64_t full = (config.flows + 1) / 2;
    total = full * gamma +
            (config.flows - full) * (gamma / kHalfUtilizationRatio);
  } else {
    total = config.flows * gamma;
  }
  return total + config.overuse_ratio * gamma;
}

std::string DescribeScenario(const ScenarioConfig& config) {
  const PacketSizing& z = config.sizing;
  std::string sizing =
      z.kind == PacketSizing::Kind::kFixed
          ? absl::StrFormat("fixed:%d", z.fixed_bytes)
          : absl::StrFormat("imix:%d/%d/%d:%.17g/%.17g/%.17g", z.imix.sizes[0],
                            z.imix.sizes[1], z.imix.sizes[2], z.imix.weights[0],
                            z.imix.weights[1], z.imix.weights[2]);
  return absl::StrFormat(
      "scenario=%s;N=%d;gamma=%.17g;beta=%.17g;duration=%.17g;ratio=%.17g;"
      "sizing=%s",
      std::string(ScenarioKindName(config.kind)), config.flows,
      config.spec.gamma_bytes_per_s, config.spec.beta_bytes, config.duration_s,
      config.overuse_ratio, sizing);
}

absl::StatusOr<TrafficGenerator> TrafficGenerator::Create(
    const ScenarioConfig& config, GeneratorStrategy strategy) {
  if (absl::Status s = ValidateScenario(config); !s.ok()) return s;
  TrafficGenerator gen(config);
  gen.periodic_ = strategy == GeneratorStrategy::kAuto &&
                  config.sizing.kind == PacketSizing::Kind::kFixed;
  if (gen.periodic_) {
    gen.InitPeriodic();
  } else {
    gen.InitHeap();
  }
  return gen;
}

TrafficGenerator::TrafficGenerator(const ScenarioConfig& config)
    : config_(config),
      end_ns_(static_cast<std::uint64_t>(
          std::llround(config.duration_s * static_cast<double>(kNanosPerSecond)))),
      rng_(config.seed) {}

std::uint32_t TrafficGenerator::DrawSize() {
  if (config_.sizing.kind == PacketSizing::Kind::kFixed) {
    return config_.sizing.fixed_bytes;
  }
  return ImixSize(config_.sizing.imix, rng_);
}

std::uint64_t TrafficGenerator::Gap(FlowId flow, std::uint32_t size) const {
  const double rate = FlowRate(config_, flow);
  auto gap = static_cast<std::uint64_t>(
      std::ceil(static_cast<double>(size) * 1e9 / rate));
  if (gap == 0) gap = 1;
  // Make the bucket's own drain arithmetic see at least `size` bytes drained
  // per gap at the nominal rate.
  const double gamma = config_.spec.gamma_bytes_per_s;
  if (rate <= gamma) {
    while (gamma * (static_cast<double>(gap) * 1e-9) <
           static_cast<double>(size)) {
      ++gap;
    }
  }
  return gap;
}

void TrafficGenerator::InitHeap() {
  const std::uint64_t total = config_.flows + (config_.overuse_ratio > 0 ? 1 : 0);
  heap_.reserve(total);
  for (FlowId f = 0; f < total; ++f) {
    const std::uint32_t size = DrawSize();
    const std::uint64_t offset = BoundedDraw(rng_, Gap(f, size));
    heap_.push_back({offset, f, size});
  }
  std::make_heap(heap_.begin(), heap_.end(), std::greater<>());
}

void TrafficGenerator::InitPeriodic() {
  const std::uint64_t total = config_.flows + (config_.overuse_ratio > 0 ? 1 : 0);
  const std::uint32_t size = config_.sizing.fixed_bytes;
  std::map<std::uint64_t, std::size_t> by_period;
  for (FlowId f = 0; f < total; ++f) {
    const std::uint64_t period = Gap(f, size);
    const std::uint64_t offset = BoundedDraw(rng_, period);
    auto [it, inserted] = by_period.try_emplace(period, classes_.size());
    if (inserted) classes_.push_back(PeriodClass{period, {}});
    classes_[it->second].members.emplace_back(offset, f);
  }
  for (std::size_t c = 0; c < classes_.size(); ++c) {
    std::sort(classes_[c].members.begin(), classes_[c].members.end());
    PushClassHead(c);
  }
}

void TrafficGenerator::PushClassHead(std::size_t c) {
  const PeriodClass& pc = classes_[c];
  const auto& [offset, flow] = pc.members[pc.pos];
  class_heads_.push_back({offset + pc.cycle * pc.period, flow, c});
  std::push_heap(class_heads_.begin(), class_heads_.end(), std::greater<>());
}

bool TrafficGenerator::NextPeriodic(PacketRecord* out) {
  if (class_heads_.empty() || class_heads_.front().ts >= end_ns_) return false;
  std::pop_heap(class_heads_.begin(), class_heads_.end(), std::greater<>());
  const Head head = class_heads_.back();
  class_heads_.pop_back();
  *out = PacketRecord{head.ts, head.flow, config_.sizing.fixed_bytes};
  PeriodClass& pc = classes_[head.cls];
  if (++pc.pos == pc.members.size()) {
    pc.pos = 0;
    ++pc.cycle;
  }
  PushClassHead(head.cls);
  return true;
}

bool TrafficGenerator::NextHeap(PacketRecord* out) {
  if (heap_.empty() || heap_.front().ts >= end_ns_) return false;
  std::pop_heap(heap_.begin(), heap_.end(), std::greater<>());
  Event& ev = heap_.back();
  *out = PacketRecord{ev.ts, ev.flow, ev.size};
  ev.ts += Gap(ev.flow, ev.size);
  ev.size = DrawSize();
  std::push_heap(heap_.begin(), heap_.end(), std::greater<>());
  return true;
}

bool TrafficGenerator::Next(PacketRecord* out) {
  const bool ok = periodic_ ? NextPeriodic(out) : NextHeap(out);
  if (ok) ++emitted_;
  return ok;
}

absl::StatusOr<std::vector<PacketRecord>> GenerateAll(
    const ScenarioConfig& config, GeneratorStrategy strategy) {
  absl::StatusOr<TrafficGenerator> gen = TrafficGenerator::Create(config, strategy);
  if (!gen.ok()) return gen.status();
  std::vector<PacketRecord> out;
  PacketRecord pkt;
  while (gen->Next(&pkt)) out.push_back(pkt);
  return out;
}

FlowId FiveTupleToFlowId(std::uint32_t src_ip, std::uint32_t dst_ip,
                         std::uint16_t src_port, std::uint16_t dst_port,
                         std::uint8_t proto) {
  const std::uint64_t addrs =
      (static_cast<std::uint64_t>(src_ip) << 32) | dst_ip;
  const std::uint64_t rest = (static_cast<std::uint64_t>(src_port) << 32) |
                             (static_cast<std::uint64_t>(dst_port) << 16) |
                             proto;
  return Fmix64(addrs ^ Fmix64(rest ^ 0x243f6a8885a308d3ULL));
}

std::vector<PacketRecord> Regulate(const std::vector<PacketRecord>& trace,
                                   const FlowSpec& spec) {
  absl::flat_hash_map<FlowId, LeakyBucketState> buckets;
  std::vector<PacketRecord> out;
  out.reserve(trace.size());
  for (const PacketRecord& pkt : trace) {
    auto [it, inserted] = buckets.try_emplace(pkt.flow_id);
    LeakyBucketState& b = it->second;
    if (inserted) {
      b.flow_id = pkt.flow_id;
      b.spec = spec;
    }
    LeakyBucketState trial = b;
    if (MonitorPacket(trial, pkt)) {
      // Drop the packet but still let the bucket drain up to now.
      if (b.started) {
        const double dt =
            static_cast<double>(pkt.timestamp_ns - b.last_update_ns) * 1e-9;
        b.level = std::max(0.0, b.level - spec.gamma_bytes_per_s * dt);
        b.last_update_ns = pkt.timestamp_ns;
      }
      continue;
    }
    b = trial;
    out.push_back(pkt);
  }
  return out;
}

}  // namespace loft
