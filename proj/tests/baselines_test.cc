#include "loft/baselines.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "eardet_traffic.h"
#include "loft/hash.h"

namespace loft {
namespace {

TEST(MultistageFilter, LoneFlowIsExact) {
  MultistageFilter f(2, 64, 1e18, 1);
  for (int i = 0; i < 10; ++i) f.Process({0, 7, 100});
  EXPECT_EQ(f.Estimate(7), 1000u);
}

TEST(MultistageFilter, NeverUnderestimates) {
  std::mt19937_64 rng(2);
  MultistageFilter f(4, 32, 1e18, 3);
  std::map<FlowId, std::uint64_t> truth;
  for (int i = 0; i < 1000; ++i) {
    const PacketRecord p{0, rng() % 300, static_cast<std::uint32_t>(1 + rng() % 1500)};
    f.Process(p);
    truth[p.flow_id] += p.size_bytes;
  }
  for (const auto& [flow, bytes] : truth) EXPECT_GE(f.Estimate(flow), bytes);
}

TEST(MultistageFilter, FlagsAtThreshold) {
  MultistageFilter f(2, 64, 3000, 1);
  EXPECT_FALSE(f.Process({0, 1, 1500}));
  EXPECT_TRUE(f.Process({0, 1, 1500}));
}

TEST(MultistageFilter, StagesForDelta) {
  EXPECT_EQ(MultistageFilter::StagesForDelta(0.01), 5u);
}

EarDet::Params SmallEarDet() {
  EarDet::Params p;
  p.counters = 9;
  p.link_bytes_per_s = 100000;
  p.alpha_bytes = 1518;
  p.beta_low_bytes = 1500;
  return p;
}

TEST(EarDet, LoneFlowCountsItsBytes) {
  EarDet det(SmallEarDet());
  det.Process({0, 3, 700});
  det.Process({0, 3, 600});
  EXPECT_EQ(det.Count(3), 1300);
}

TEST(EarDet, SpecArithmetic) {
  EarDet det(SmallEarDet());
  EXPECT_DOUBLE_EQ(det.gamma_high(), 10000.0);
  EXPECT_DOUBLE_EQ(det.beta_threshold(), 10 * 1500.0 + 1518.0);
  EXPECT_DOUBLE_EQ(det.beta_high(), 2 * (10 * 1500.0 + 1518.0) + 1518.0);
  // 400 Gbps link, 40 Mbps high rate.
  EXPECT_EQ(EarDet::CountersFor(400e9 / 8, 40e6 / 8), 9999u);
}

TEST(EarDet, ConformantFlowsNeverFlagged) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    EarDet det(SmallEarDet());
    const auto t = testing::MakeConformantTrace(rng, det, 2000, 24);
    for (const PacketRecord& p : t.packets) {
      if (det.Process(p)) {
        ASSERT_FALSE(t.regulated[p.flow_id])
            << "trial " << trial << " flow " << p.flow_id;
      }
    }
  }
}

TEST(EarDet, HighRateFlowAlwaysFlagged) {
  std::mt19937_64 rng(32);
  const EarDet::Params params = SmallEarDet();
  for (int trial = 0; trial < 100; ++trial) {
    EarDet det(params);
    const double ratio = 1.2 + 0.1 * (trial % 10);
    const double rate = ratio * det.gamma_high();
    const double gap_ns = 1500.0 / rate * 1e9;
    const std::uint64_t t0 = rng() % 1'000'000'000;
    const FlowId attacker = 1'000'000;
    std::vector<PacketRecord> pkts;
    for (int i = 0; i < 4000; ++i) {
      pkts.push_back({t0 + static_cast<std::uint64_t>(i * gap_ns), attacker, 1500});
    }
    // Background fills part of the remaining link capacity.
    std::uint64_t ts = 0;
    const double bg_gap = 1500.0 / (params.link_bytes_per_s - rate) * 1e9 * 1.5;
    while (ts < pkts.back().timestamp_ns) {
      ts += static_cast<std::uint64_t>(bg_gap * std::uniform_real_distribution<>(0.5, 1.5)(rng));
      pkts.push_back({ts, rng() % 50, static_cast<std::uint32_t>(64 + rng() % 1437)});
    }
    std::stable_sort(pkts.begin(), pkts.end(), [](auto& a, auto& b) {
      return a.timestamp_ns < b.timestamp_ns;
    });
    pkts = testing::Serialize(std::move(pkts), params.link_bytes_per_s);
    // Deadline: the first moment the attacker's bytes since its start exceed
    // gamma_h * t + beta_h.
    std::uint64_t sent = 0, start = 0;
    std::optional<std::uint64_t> deadline, flagged;
    for (const PacketRecord& p : pkts) {
      const bool flag = det.Process(p);
      if (p.flow_id != attacker) continue;
      if (sent == 0) start = p.timestamp_ns;
      sent += p.size_bytes;
      if (!deadline && sent > det.gamma_high() * (p.timestamp_ns - start) * 1e-9 +
                                  det.beta_high()) {
        deadline = p.timestamp_ns;
      }
      if (flag && !flagged) flagged = p.timestamp_ns;
    }
    ASSERT_TRUE(deadline.has_value());
    ASSERT_TRUE(flagged.has_value()) << "trial " << trial;
    EXPECT_LE(*flagged, *deadline) << "trial " << trial;
  }
}

TEST(HashPipe, LoneFlowIsExact) {
  HashPipe hp(4, 16, 1);
  for (int i = 0; i < 10; ++i) hp.Process({0, 5, 150});
  const auto top = hp.TopK(1);
  ASSERT_EQ(top.size(), 1u);
  EXPECT_EQ(top[0], (std::pair<FlowId, std::uint64_t>{5, 1500}));
}

TEST(HashPipe, ZipfRecall) {
  // Zipf(1.1) over 100k flows, 2M packets, LOFT's desk budget of 16384 slots.
  const std::uint32_t flows = 100000;
  std::vector<double> cdf(flows);
  double acc = 0.0;
  for (std::uint32_t i = 0; i < flows; ++i) {
    acc += std::pow(i + 1.0, -1.1);
    cdf[i] = acc;
  }
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, acc);
  HashPipe hp(4, 4096, 7);
  std::map<FlowId, std::uint64_t> truth;
  std::uint64_t total = 0;
  for (int i = 0; i < 2'000'000; ++i) {
    const FlowId f = std::lower_bound(cdf.begin(), cdf.end(), u(rng)) - cdf.begin();
    const PacketRecord p{0, Fmix64(f), 1000};
    hp.Process(p);
    truth[p.flow_id] += p.size_bytes;
    total += p.size_bytes;
  }
  std::vector<std::pair<std::uint64_t, FlowId>> order;
  for (const auto& [f, b] : truth) order.push_back({b, f});
  std::sort(order.rbegin(), order.rend());
  std::set<FlowId> true_top;
  for (int i = 0; i < 64; ++i) true_top.insert(order[i].second);
  int hits = 0;
  for (const auto& [f, b] : hp.TopK(64)) hits += true_top.contains(f);
  EXPECT_GE(hits / 64.0, 0.9);
  EXPECT_LE(hp.TrackedTotal(), total);
}

TEST(HeavyKeeper, LoneFlowIsExact) {
  HeavyKeeper hk(2, 16, 1.08, 1500, 1);
  for (int i = 0; i < 10; ++i) hk.Process({0, 5, 150});
  EXPECT_EQ(hk.Query(5), 1500u);
}

TEST(HeavyKeeper, DecayProbability) {
  HeavyKeeper hk(1, 1, 1.08, 1500, 1);
  EXPECT_DOUBLE_EQ(hk.DecayProbability(0), 1.0);
  EXPECT_NEAR(hk.DecayProbability(1500 * 20), std::pow(1.08, -20), 1e-15);
}

TEST(HeavyKeeper, MouseRarelyDisplacesElephant) {
  int displaced = 0;
  const int trials = 100000;
  for (int t = 0; t < trials; ++t) {
    HeavyKeeper hk(1, 1, 1.08, 1500, t);
    for (int i = 0; i < 20; ++i) hk.Process({0, 1, 1500});
    for (int i = 0; i < 10; ++i) hk.Process({0, 2, 1500});
    displaced += hk.Query(1) == 0;
  }
  EXPECT_LT(static_cast<double>(displaced) / trials, 1e-3);
}

TEST(MakeDetector, EqualBudgetAccounting) {
  DetectorConfig c;
  c.counters = 2048;
  c.monitors = 64;
  BaselineConfig b;
  b.link_bytes_per_s = 1e9;
  for (DetectorKind k :
       {DetectorKind::kLoft, DetectorKind::kLoftNoCount,
        DetectorKind::kMultistageFilter, DetectorKind::kEarDet,
        DetectorKind::kHashPipe, DetectorKind::kHeavyKeeper}) {
    absl::StatusOr<std::unique_ptr<Detector>> d =
        MakeDetector(k, c, FlowSpec{375000, 1500}, b);
    ASSERT_TRUE(d.ok()) << DetectorKindName(k);
    EXPECT_EQ((*d)->counter_slots(), 2048u) << DetectorKindName(k);
    EXPECT_EQ((*d)->name(), DetectorKindName(k));
  }
  c.counters = 2046;
  EXPECT_FALSE(MakeDetector(DetectorKind::kMultistageFilter, c,
                            FlowSpec{375000, 1500}, b)
                   .ok());
}

TEST(DetectorKind, ParseRoundTrip) {
  for (std::string_view name :
       {"loft", "loft-nocount", "msf", "eardet", "hashpipe", "heavykeeper"}) {
    EXPECT_EQ(DetectorKindName(*ParseDetectorKind(name)), name);
  }
  EXPECT_FALSE(ParseDetectorKind("amf").ok());
}

}  // namespace
}  // namespace loft
