#include "loft/traffic.h"

#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "absl/container/flat_hash_set.h"
#include "loft/ground_truth.h"
#include "loft/monitor.h"

namespace loft {
namespace {

ScenarioConfig Small() {
  ScenarioConfig c;
  c.flows = 1;
  c.spec = {375000.0, 1500.0};
  c.duration_s = 1.0;
  c.seed = 3;
  return c;
}

TEST(Traffic, SingleFlowPacketsAndGaps) {
  absl::StatusOr<std::vector<PacketRecord>> trace = GenerateAll(Small());
  ASSERT_TRUE(trace.ok()) << trace.status();
  ASSERT_EQ(trace->size(), 250u);
  for (std::size_t i = 1; i < trace->size(); ++i) {
    EXPECT_EQ((*trace)[i].timestamp_ns - (*trace)[i - 1].timestamp_ns,
              4'000'000u);
    EXPECT_EQ((*trace)[i].size_bytes, 1500u);
    EXPECT_EQ((*trace)[i].flow_id, 0u);
  }
  EXPECT_LT(trace->front().timestamp_ns, 4'000'000u);
}

TEST(Traffic, AggregateRate) {
  ScenarioConfig c = Small();
  c.flows = 100;
  c.overuse_ratio = 2.0;
  EXPECT_DOUBLE_EQ(AggregateRate(c), 102 * 375000.0);
  c.kind = ScenarioKind::kHalfUtilization;
  EXPECT_DOUBLE_EQ(AggregateRate(c), 50 * 375000.0 + 50 * 15000.0 + 2 * 375000.0);
  EXPECT_DOUBLE_EQ(FlowRate(c, 49), 375000.0);
  EXPECT_DOUBLE_EQ(FlowRate(c, 50), 15000.0);
  EXPECT_DOUBLE_EQ(FlowRate(c, 100), 750000.0);

  c.kind = ScenarioKind::kFullUtilization;
  c.duration_s = 2.0;
  auto trace = GenerateAll(c);
  ASSERT_TRUE(trace.ok());
  double bytes = 0;
  for (const PacketRecord& p : *trace) bytes += p.size_bytes;
  EXPECT_NEAR(bytes / c.duration_s, AggregateRate(c), 0.01 * AggregateRate(c));
}

TEST(Traffic, NoOveruseMeansNoViolation) {
  for (PacketSizing::Kind kind : {PacketSizing::Kind::kFixed, PacketSizing::Kind::kImix}) {
    ScenarioConfig c = Small();
    c.flows = 300;
    c.duration_s = 3.0;
    c.kind = ScenarioKind::kHalfUtilization;
    c.sizing.kind = kind;
    c.spec.beta_bytes = 1518;
    auto trace = GenerateAll(c);
    ASSERT_TRUE(trace.ok());
    GroundTruthTracker gt(c.spec);
    for (const PacketRecord& p : *trace) gt.Observe(p);
    EXPECT_TRUE(gt.truth().empty());
  }
}

TEST(Traffic, OveruseFlowViolates) {
  ScenarioConfig c = Small();
  c.flows = 10;
  c.overuse_ratio = 1.5;
  auto trace = GenerateAll(c);
  ASSERT_TRUE(trace.ok());
  GroundTruthTracker gt(c.spec);
  for (const PacketRecord& p : *trace) gt.Observe(p);
  EXPECT_EQ(gt.truth().size(), 1u);
  EXPECT_TRUE(gt.truth().Violated(10));
}

TEST(Imix, MeanAndCategories) {
  ImixConfig mix;
  EXPECT_NEAR(ImixMean(mix), 4342.0 / 12.0, 1e-12);
  EXPECT_EQ(ImixSizeFromUniform(mix, 0.0), 64u);
  EXPECT_EQ(ImixSizeFromUniform(mix, 7.0 / 12.0 + 1e-9), 594u);
  EXPECT_EQ(ImixSizeFromUniform(mix, 0.999999), 1518u);
  std::mt19937_64 rng(5);
  double sum = 0;
  const int n = 1'000'000;
  for (int i = 0; i < n; ++i) sum += ImixSize(mix, rng);
  EXPECT_NEAR(sum / n, ImixMean(mix), 0.01 * ImixMean(mix));
}

TEST(Imix, RequiresBurstOfLargestPacket) {
  ScenarioConfig c = Small();
  c.sizing.kind = PacketSizing::Kind::kImix;
  EXPECT_FALSE(ValidateScenario(c).ok());
  c.spec.beta_bytes = 1518;
  EXPECT_TRUE(ValidateScenario(c).ok());
}

TEST(Traffic, PeriodicMatchesHeap) {
  ScenarioConfig c = Small();
  c.flows = 500;
  c.duration_s = 2.0;
  c.overuse_ratio = 1.7;
  c.kind = ScenarioKind::kHalfUtilization;
  auto a = GenerateAll(c, GeneratorStrategy::kAuto);
  auto b = GenerateAll(c, GeneratorStrategy::kHeap);
  ASSERT_TRUE(a.ok() && b.ok());
  EXPECT_EQ(*a, *b);
}

TEST(Traffic, SortedAndDeterministic) {
  ScenarioConfig c = Small();
  c.flows = 200;
  c.sizing.kind = PacketSizing::Kind::kImix;
  c.spec.beta_bytes = 1518;
  auto a = GenerateAll(c);
  auto b = GenerateAll(c);
  ASSERT_TRUE(a.ok() && b.ok());
  EXPECT_EQ(*a, *b);
  for (std::size_t i = 1; i < a->size(); ++i) {
    const auto& p = (*a)[i - 1];
    const auto& q = (*a)[i];
    ASSERT_TRUE(p.timestamp_ns < q.timestamp_ns ||
                (p.timestamp_ns == q.timestamp_ns && p.flow_id < q.flow_id));
  }
  c.seed = 4;
  auto d = GenerateAll(c);
  ASSERT_TRUE(d.ok());
  EXPECT_NE(*a, *d);
}

TEST(Traffic, HalfUtilizationSplit) {
  ScenarioConfig c = Small();
  c.flows = 7;
  c.kind = ScenarioKind::kHalfUtilization;
  EXPECT_DOUBLE_EQ(FlowRate(c, 3), 375000.0);
  EXPECT_DOUBLE_EQ(FlowRate(c, 4), 375000.0 / kHalfUtilizationRatio);
}

TEST(FiveTuple, NoCollisionsAtOneMillion) {
  absl::flat_hash_set<FlowId> ids;
  std::mt19937_64 rng(9);
  for (std::uint32_t i = 0; i < 1'000'000; ++i) {
    ids.insert(FiveTupleToFlowId(0x0a000000u + i, 0xc0a80001u,
                                 static_cast<std::uint16_t>(rng()), 443, 6));
  }
  EXPECT_EQ(ids.size(), 1'000'000u);
  EXPECT_EQ(FiveTupleToFlowId(1, 2, 3, 4, 6), FiveTupleToFlowId(1, 2, 3, 4, 6));
  EXPECT_NE(FiveTupleToFlowId(1, 2, 3, 4, 6), FiveTupleToFlowId(1, 2, 3, 4, 17));
}

TEST(Regulate, OutputConforms) {
  std::mt19937_64 rng(10);
  std::vector<PacketRecord> trace;
  std::uint64_t ts = 0;
  for (int i = 0; i < 20000; ++i) {
    ts += rng() % 200000;
    trace.push_back({ts, rng() % 20, static_cast<std::uint32_t>(64 + rng() % 1437)});
  }
  const FlowSpec spec{50000.0, 3000.0};
  const auto kept = Regulate(trace, spec);
  EXPECT_LT(kept.size(), trace.size());
  GroundTruthTracker gt(spec);
  for (const PacketRecord& p : kept) gt.Observe(p);
  EXPECT_TRUE(gt.truth().empty());
}

TEST(Scenario, Validation) {
  ScenarioConfig c = Small();
  EXPECT_TRUE(ValidateScenario(c).ok());
  c.duration_s = 0;
  EXPECT_FALSE(ValidateScenario(c).ok());
  c = Small();
  c.overuse_ratio = -1;
  EXPECT_FALSE(ValidateScenario(c).ok());
  EXPECT_EQ(*ParseScenarioKind("half"), ScenarioKind::kHalfUtilization);
  EXPECT_FALSE(ParseScenarioKind("quarter").ok());
}

}  // namespace
}  // namespace loft
