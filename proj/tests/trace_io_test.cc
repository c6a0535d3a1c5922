#include "loft/trace_io.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include <gtest/gtest.h>

namespace loft {
namespace {

std::string TempPath(const std::string& name) {
  return (std::filesystem::temp_directory_path() /
          ("loft_trace_io_" + std::to_string(::getpid()) + "_" + name))
      .string();
}

std::vector<PacketRecord> RandomTrace(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<PacketRecord> t;
  std::uint64_t ts = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ts += rng() % 1000;
    t.push_back({ts, rng(), static_cast<std::uint32_t>(1 + rng() % 9000)});
  }
  return t;
}

TEST(TraceIo, EmptyRoundTrip) {
  const std::string path = TempPath("empty.bin");
  ASSERT_TRUE(WriteTrace(path, {}).ok());
  auto back = ReadTrace(path);
  ASSERT_TRUE(back.ok()) << back.status();
  EXPECT_TRUE(back->empty());
  EXPECT_EQ(std::filesystem::file_size(path), kTraceHeaderBytes);
  std::remove(path.c_str());
}

TEST(TraceIo, MillionRecordRoundTrip) {
  const std::string path = TempPath("big.bin");
  const auto trace = RandomTrace(1'000'000, 1);
  ASSERT_TRUE(WriteTrace(path, trace).ok());
  EXPECT_EQ(std::filesystem::file_size(path),
            kTraceHeaderBytes + trace.size() * kTraceRecordBytes);
  auto back = ReadTrace(path);
  ASSERT_TRUE(back.ok());
  EXPECT_EQ(*back, trace);
  std::remove(path.c_str());
}

TEST(TraceIo, StreamingReader) {
  const std::string path = TempPath("stream.bin");
  const auto trace = RandomTrace(1000, 2);
  TraceWriter w;
  ASSERT_TRUE(w.Open(path).ok());
  for (const auto& p : trace) ASSERT_TRUE(w.Append(p).ok());
  ASSERT_TRUE(w.Close().ok());
  TraceReader r;
  ASSERT_TRUE(r.Open(path).ok());
  EXPECT_EQ(r.record_count(), 1000u);
  PacketRecord p;
  std::vector<PacketRecord> got;
  while (true) {
    auto more = r.Next(&p);
    ASSERT_TRUE(more.ok());
    if (!*more) break;
    got.push_back(p);
  }
  EXPECT_EQ(got, trace);
  std::remove(path.c_str());
}

TEST(TraceIo, RejectsOutOfOrderAppend) {
  const std::string path = TempPath("order.bin");
  TraceWriter w;
  ASSERT_TRUE(w.Open(path).ok());
  ASSERT_TRUE(w.Append({10, 1, 100}).ok());
  EXPECT_FALSE(w.Append({5, 1, 100}).ok());
  std::remove(path.c_str());
}

TEST(TraceIo, CorruptedMagic) {
  const std::string path = TempPath("bad.bin");
  ASSERT_TRUE(WriteTrace(path, RandomTrace(10, 3)).ok());
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("XOFT", 4);
  }
  auto back = ReadTrace(path);
  EXPECT_FALSE(back.ok());
  std::remove(path.c_str());
}

TEST(TraceIo, TruncatedFile) {
  const std::string path = TempPath("trunc.bin");
  ASSERT_TRUE(WriteTrace(path, RandomTrace(10, 4)).ok());
  std::filesystem::resize_file(path, kTraceHeaderBytes + 5 * kTraceRecordBytes + 3);
  EXPECT_FALSE(ReadTrace(path).ok());
  std::remove(path.c_str());
}

TEST(TraceIo, MissingFile) {
  EXPECT_FALSE(ReadTrace(TempPath("does_not_exist.bin")).ok());
}

TEST(TraceIo, CsvRoundTrip) {
  const std::string path = TempPath("t.csv");
  const auto trace = RandomTrace(5000, 5);
  ASSERT_TRUE(WriteTraceCsv(path, trace).ok());
  auto back = ReadAnyTrace(path);
  ASSERT_TRUE(back.ok()) << back.status();
  EXPECT_EQ(*back, trace);
  std::remove(path.c_str());
}

TEST(TraceIo, CsvRejectsGarbage) {
  const std::string path = TempPath("g.csv");
  {
    std::ofstream f(path);
    f << "ts_ns,flow_id,size\n1,2,x\n";
  }
  EXPECT_FALSE(ReadTraceCsv(path).ok());
  std::remove(path.c_str());
}

TEST(GroundTruthIo, RoundTripAndOfflineTruth) {
  std::vector<PacketRecord> trace;
  // Flow 1 sends 3000 B at once against a 1500 B burst: violates at t=0.
  trace.push_back({0, 1, 1500});
  trace.push_back({0, 1, 1500});
  trace.push_back({100, 2, 500});
  const GroundTruth truth = ComputeGroundTruth(trace, FlowSpec{1000.0, 1500.0});
  ASSERT_EQ(truth.size(), 1u);
  EXPECT_EQ(truth.FirstViolation(1), 0u);

  const std::string path = TempPath("gt.csv");
  ASSERT_TRUE(WriteGroundTruth(path, truth).ok());
  auto back = ReadGroundTruth(path);
  ASSERT_TRUE(back.ok());
  EXPECT_EQ(back->Sorted(), truth.Sorted());
  std::remove(path.c_str());
  EXPECT_EQ(GroundTruthPath("x/trace.bin"), "x/trace.bin.truth.csv");
}

}  // namespace
}  // namespace loft
