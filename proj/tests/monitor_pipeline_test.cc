#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "loft/ground_truth.h"
#include "loft/loft_detector.h"
#include "loft/monitor.h"
#include "loft/pipeline.h"
#include "loft/trace_io.h"
#include "loft/traffic.h"

namespace loft {
namespace {

constexpr FlowSpec kSpec{375000.0, 1500.0};

TEST(MonitorPacket, ConformantFlowNeverViolates) {
  LeakyBucketState b{1, kSpec};
  for (std::uint64_t i = 0; i < 100000; ++i) {
    EXPECT_FALSE(MonitorPacket(b, {i * 4'000'000, 1, 1500})) << i;
  }
  EXPECT_FALSE(b.violated);
}

TEST(MonitorPacket, DoubleRateViolatesAfterBetaOverGamma) {
  // 100-byte packets at 2 gamma: the level after the first packet is 100
  // and grows at gamma, so it passes beta at (beta - 100) / gamma.
  LeakyBucketState b{1, kSpec};
  const double gap_ns = 100.0 / (2 * kSpec.gamma_bytes_per_s) * 1e9;
  std::uint64_t violated_at = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto ts = static_cast<std::uint64_t>(std::llround(i * gap_ns));
    if (MonitorPacket(b, {ts, 1, 100})) {
      violated_at = ts;
      break;
    }
  }
  EXPECT_NEAR(static_cast<double>(violated_at),
              (kSpec.beta_bytes - 100) / kSpec.gamma_bytes_per_s * 1e9, gap_ns);
}

TEST(MonitorPacket, IdleFlowDrains) {
  LeakyBucketState b{1, kSpec};
  EXPECT_FALSE(MonitorPacket(b, {0, 1, 1500}));
  EXPECT_FALSE(MonitorPacket(b, {10'000'000'000, 1, 1500}));
  EXPECT_DOUBLE_EQ(b.level, 1500.0);
}

TEST(MonitorBank, InstallReplacesWithFreshBuckets) {
  MonitorBank bank(4, kSpec);
  const std::vector<FlowId> wl = {1, 2, 3};
  bank.InstallWatchlist(wl);
  EXPECT_EQ(bank.size(), 3u);
  MonitorPacket(*bank.Find(1), {0, 1, 1000});
  bank.InstallWatchlist(wl);
  EXPECT_DOUBLE_EQ(bank.Find(1)->level, 0.0);
  const std::vector<FlowId> other = {9};
  bank.InstallWatchlist(other);
  EXPECT_FALSE(bank.Contains(1));
  EXPECT_TRUE(bank.Contains(9));
}

TEST(MonitorBank, SuspectEvictsOldest) {
  MonitorBank bank(2, kSpec);
  bank.Suspect(1);
  bank.Suspect(2);
  bank.Suspect(1);
  bank.Suspect(3);
  EXPECT_FALSE(bank.Contains(1));
  EXPECT_TRUE(bank.Contains(2));
  EXPECT_TRUE(bank.Contains(3));
  EXPECT_EQ(bank.size(), 2u);
}

// Puts a fixed flow list under monitoring from a given time on.
class ScriptedDetector : public Detector {
 public:
  ScriptedDetector(std::uint64_t at_ns, std::vector<FlowId> flows)
      : at_ns_(at_ns), flows_(std::move(flows)) {}
  std::string_view name() const override { return "scripted"; }
  absl::Status AdvanceTo(std::uint64_t ts_ns, MonitorBank& monitors) override {
    if (!fired_ && ts_ns >= at_ns_) {
      fired_ = true;
      monitors.InstallWatchlist(flows_);
    }
    return absl::OkStatus();
  }
  void Observe(const PacketRecord& pkt, MonitorBank&) override {
    observed.push_back(pkt);
  }
  std::size_t counter_slots() const override { return 0; }
  std::vector<PacketRecord> observed;

 private:
  std::uint64_t at_ns_;
  std::vector<FlowId> flows_;
  bool fired_ = false;
};

TEST(PolicingPipeline, TenPacketHandSimulation) {
  const FlowSpec spec{1000.0, 1000.0};
  auto det = std::make_unique<ScriptedDetector>(2'000'000, std::vector<FlowId>{1, 2});
  ScriptedDetector* raw = det.get();
  PolicingPipeline p(spec, 4, std::move(det), 5);
  using D = Disposition;
  const std::vector<std::pair<PacketRecord, D>> script = {
      {{0, 1, 500}, D::kPassed},
      {{1'000'000, 2, 600}, D::kPassed},
      {{2'000'000, 1, 600}, D::kMonitored},     // level 600
      {{3'000'000, 1, 600}, D::kMonitored},     // 1199 > 1000: blacklisted
      {{4'000'000, 1, 100}, D::kDroppedBlacklisted},
      {{5'000'000, 2, 900}, D::kMonitored},     // 900
      {{6'000'000, 2, 50}, D::kMonitored},      // 949
      {{1'006'000'000, 2, 1000}, D::kMonitored},  // drained to 0, then 1000
      {{1'007'000'000, 3, 1400}, D::kPassed},
      {{1'008'000'000, 2, 10}, D::kMonitored},  // 1009 > 1000: blacklisted
  };
  for (const auto& [pkt, want] : script) {
    absl::StatusOr<Disposition> got = p.Process(pkt);
    ASSERT_TRUE(got.ok());
    EXPECT_EQ(*got, want) << pkt.timestamp_ns;
  }
  EXPECT_TRUE(p.IsBlacklisted(1));
  EXPECT_TRUE(p.IsBlacklisted(2));
  EXPECT_FALSE(p.IsBlacklisted(3));
  ASSERT_EQ(p.events().size(), 2u);
  EXPECT_EQ(p.events()[0].detected_ns, 3'000'000u);
  EXPECT_EQ(p.events()[1].detected_ns, 1'008'000'000u);
  EXPECT_EQ(p.events()[1].seed, 5u);
  EXPECT_EQ(raw->observed.size(), 9u);
}

TEST(PolicingPipeline, RejectsOutOfOrderPackets) {
  PolicingPipeline p(kSpec, 4, std::make_unique<ScriptedDetector>(0, std::vector<FlowId>{}));
  ASSERT_TRUE(p.Process({100, 1, 10}).ok());
  EXPECT_FALSE(p.Process({99, 1, 10}).ok());
}

TEST(PolicingPipeline, BlacklistedPacketsSkipCounters) {
  DetectorConfig c;
  c.counters = 64;
  c.monitors = 4;
  c.clock = ClockConfig{64, 1, 64};
  c.exact_active_list = true;
  auto det = *LoftDetector::Create(c);
  LoftDetector* loft = det.get();
  PolicingPipeline p(FlowSpec{1000.0, 1000.0}, 4, std::move(det));
  // Flow 1 dominates minor 0 and is watchlisted from minor 1 on.
  ASSERT_TRUE(p.Process({0, 1, 1000}).ok());
  ASSERT_TRUE(p.Process({1, 2, 10}).ok());
  const std::uint64_t m1 = MinorStartNs(1, 64);
  ASSERT_TRUE(p.Process({m1, 1, 1000}).ok());
  ASSERT_TRUE(p.Process({m1 + 1, 1, 1000}).ok());
  ASSERT_TRUE(p.IsBlacklisted(1));
  const std::uint64_t before = loft->update_path().current().Total();
  EXPECT_EQ(*p.Process({m1 + 2, 1, 1000}), Disposition::kDroppedBlacklisted);
  EXPECT_EQ(loft->update_path().current().Total(), before);
  EXPECT_EQ(*p.Process({m1 + 3, 2, 10}), Disposition::kMonitored);
  EXPECT_EQ(loft->update_path().current().Total(), before + 10);
}

TEST(DetectionReport, NoOveruseMeansNoEventsAndNoFalsePositives) {
  ScenarioConfig sc;
  sc.flows = 200;
  sc.duration_s = 5.0;
  sc.overuse_ratio = 0.0;
  DetectorConfig c;
  c.counters = 64;
  c.monitors = 16;
  PolicingPipeline p(sc.spec, c.monitors, *LoftDetector::Create(c));
  GroundTruthTracker truth(sc.spec);
  auto gen = *TrafficGenerator::Create(sc);
  PacketRecord pkt;
  while (gen.Next(&pkt)) {
    truth.Observe(pkt);
    ASSERT_TRUE(p.Process(pkt).ok());
  }
  const DetectionReport r = BuildDetectionReport(p.events(), truth.truth(), 300);
  EXPECT_TRUE(r.events.empty());
  EXPECT_EQ(r.fp_count, 0u);
  EXPECT_TRUE(truth.truth().empty());
}

TEST(DetectionReport, FlagsEventsWithoutGroundTruthAsFalsePositives) {
  GroundTruth truth;
  truth.Record(1, 100);
  std::vector<DetectionEvent> events(2);
  events[0].flow_id = 1;
  events[0].detected_ns = 400;
  events[1].flow_id = 2;
  events[1].detected_ns = 500;
  const DetectionReport r = BuildDetectionReport(events, truth, 300);
  EXPECT_EQ(r.fp_count, 1u);
  EXPECT_EQ(*r.events[0].first_violation_ns, 100u);
  EXPECT_TRUE(r.events[0].within_timeout);
  EXPECT_FALSE(r.events[1].first_violation_ns.has_value());
}

TEST(Pipeline, ConformantTrafficIsNeverBlacklisted) {
  // Random sizes and gaps, shaped to the spec by dropping violating packets.
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<PacketRecord> raw;
    std::uint64_t ts = 0;
    for (int i = 0; i < 20000; ++i) {
      ts += rng() % 200'000;
      raw.push_back({ts, rng() % 40, static_cast<std::uint32_t>(64 + rng() % 1437)});
    }
    const std::vector<PacketRecord> shaped = Regulate(raw, kSpec);
    ASSERT_TRUE(ComputeGroundTruth(shaped, kSpec).empty());
    DetectorConfig c;
    c.counters = 16;
    c.monitors = 8;
    c.hash_seed = trial;
    PolicingPipeline p(kSpec, c.monitors, *LoftDetector::Create(c));
    for (const PacketRecord& pkt : shaped) ASSERT_TRUE(p.Process(pkt).ok());
    EXPECT_TRUE(p.blacklist().empty()) << trial;
  }
}

TEST(GroundTruth, ConstantRateFirstViolation) {
  // An l-fold flow of s-byte packets first exceeds beta at the first packet
  // after t0 + (beta - s) / ((l - 1) gamma).
  for (double ratio : {1.5, 2.0, 4.0, 10.0}) {
    for (std::uint32_t size : {100u, 600u, 1500u}) {
      for (double beta : {1500.0, 15000.0}) {
        ScenarioConfig sc;
        sc.flows = 1;
        sc.spec = FlowSpec{375000.0, beta};
        sc.duration_s = 2.0;
        sc.overuse_ratio = ratio;
        sc.sizing.fixed_bytes = size;
        sc.seed = 3;
        const auto trace = *GenerateAll(sc);
        std::vector<std::uint64_t> sent;
        for (const PacketRecord& p : trace) {
          if (p.flow_id == 1) sent.push_back(p.timestamp_ns);
        }
        ASSERT_GE(sent.size(), 2u);
        const double t0 = static_cast<double>(sent[0]);
        // Generated gaps are whole nanoseconds, so use the realized rate.
        const double gap_ns = static_cast<double>(sent[1] - sent[0]);
        const double rate = size / gap_ns * 1e9;
        const GroundTruth truth = ComputeGroundTruth(trace, sc.spec);
        ASSERT_TRUE(truth.Violated(1));
        EXPECT_FALSE(truth.Violated(0));
        const double expect =
            t0 + (beta - size) / (rate - sc.spec.gamma_bytes_per_s) * 1e9;
        const double got = static_cast<double>(*truth.FirstViolation(1));
        EXPECT_GT(got, expect - 1.0);
        EXPECT_LE(got, expect + gap_ns + 1.0)
            << "ratio " << ratio << " size " << size << " beta " << beta;
      }
    }
  }
}

}  // namespace
}  // namespace loft
