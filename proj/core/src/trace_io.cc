#include "loft/trace_io.h"

#include <cstring>
#include <sstream>

#include "absl/strings/match.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"

namespace loft {
namespace {

void PutLe(char* p, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) p[i] = static_cast<char>((v >> (8 * i)) & 0xff);
}

std::uint64_t GetLe(const char* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  }
  return v;
}

absl::Status Malformed(const std::string& path, std::string_view what) {
  return absl::DataLossError(absl::StrFormat("%s: %s", path, std::string(what)));
}

}  // namespace

absl::Status TraceWriter::Open(const std::string& path) {
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) return absl::UnavailableError("cannot open " + path);
  char header[kTraceHeaderBytes] = {};
  std::memcpy(header, kTraceMagic, 4);
  PutLe(header + 4, kTraceVersion, 4);
  out_.write(header, sizeof(header));
  count_ = 0;
  last_ts_ = 0;
  return out_ ? absl::OkStatus() : absl::DataLossError("write failed: " + path);
}

absl::Status TraceWriter::Append(const PacketRecord& pkt) {
  if (count_ > 0 && pkt.timestamp_ns < last_ts_) {
    return absl::InvalidArgumentError("trace records must be sorted by time");
  }
  char rec[kTraceRecordBytes] = {};
  PutLe(rec, pkt.timestamp_ns, 8);
  PutLe(rec + 8, pkt.flow_id, 8);
  PutLe(rec + 16, pkt.size_bytes, 4);
  out_.write(rec, sizeof(rec));
  last_ts_ = pkt.timestamp_ns;
  ++count_;
  return absl::OkStatus();
}

absl::Status TraceWriter::Close() {
  char count[8];
  PutLe(count, count_, 8);
  out_.seekp(8);
  out_.write(count, 8);
  out_.close();
  if (out_.fail()) return absl::DataLossError("failed to finish trace file");
  return absl::OkStatus();
}

absl::Status TraceReader::Open(const std::string& path) {
  in_.open(path, std::ios::binary);
  if (!in_) return absl::NotFoundError("cannot open " + path);
  char header[kTraceHeaderBytes];
  if (!in_.read(header, sizeof(header))) {
    return Malformed(path, "truncated header");
  }
  if (std::memcmp(header, kTraceMagic, 4) != 0) {
    return Malformed(path, "bad magic");
  }
  const std::uint64_t version = GetLe(header + 4, 4);
  if (version != kTraceVersion) {
    return Malformed(path, absl::StrFormat("unsupported version %d", version));
  }
  record_count_ = GetLe(header + 8, 8);
  in_.seekg(0, std::ios::end);
  const auto size = static_cast<std::uint64_t>(in_.tellg());
  in_.seekg(kTraceHeaderBytes);
  if (size != kTraceHeaderBytes + record_count_ * kTraceRecordBytes) {
    return Malformed(path, absl::StrFormat(
                               "header says %d records but body has %d bytes",
                               record_count_, size - kTraceHeaderBytes));
  }
  read_ = 0;
  return absl::OkStatus();
}

absl::StatusOr<bool> TraceReader::Next(PacketRecord* pkt) {
  if (read_ == record_count_) return false;
  char rec[kTraceRecordBytes];
  if (!in_.read(rec, sizeof(rec))) {
    return absl::DataLossError("truncated trace record");
  }
  pkt->timestamp_ns = GetLe(rec, 8);
  pkt->flow_id = GetLe(rec + 8, 8);
  pkt->size_bytes = static_cast<std::uint32_t>(GetLe(rec + 16, 4));
  ++read_;
  return true;
}

absl::Status WriteTrace(const std::string& path,
                        std::span<const PacketRecord> records) {
  TraceWriter w;
  if (absl::Status s = w.Open(path); !s.ok()) return s;
  for (const PacketRecord& pkt : records) {
    if (absl::Status s = w.Append(pkt); !s.ok()) return s;
  }
  return w.Close();
}

absl::StatusOr<std::vector<PacketRecord>> ReadTrace(const std::string& path) {
  TraceReader r;
  if (absl::Status s = r.Open(path); !s.ok()) return s;
  std::vector<PacketRecord> out;
  out.reserve(r.record_count());
  PacketRecord pkt;
  while (true) {
    absl::StatusOr<bool> more = r.Next(&pkt);
    if (!more.ok()) return more.status();
    if (!*more) break;
    out.push_back(pkt);
  }
  return out;
}

absl::Status WriteTraceCsv(const std::string& path,
                           std::span<const PacketRecord> records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) return absl::UnavailableError("cannot open " + path);
  out << "ts_ns,flow_id,size\n";
  for (const PacketRecord& p : records) {
    out << p.timestamp_ns << ',' << p.flow_id << ',' << p.size_bytes << '\n';
  }
  return out ? absl::OkStatus() : absl::DataLossError("write failed: " + path);
}

absl::StatusOr<std::vector<PacketRecord>> ReadTraceCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || absl::StripSuffix(line, "\r") != "ts_ns,flow_id,size") {
    return Malformed(path, "expected header ts_ns,flow_id,size");
  }
  std::vector<PacketRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    absl::string_view v = absl::StripSuffix(line, "\r");
    if (v.empty()) continue;
    std::vector<absl::string_view> f = absl::StrSplit(v, ',');
    PacketRecord p;
    if (f.size() != 3 || !absl::SimpleAtoi(f[0], &p.timestamp_ns) ||
        !absl::SimpleAtoi(f[1], &p.flow_id) ||
        !absl::SimpleAtoi(f[2], &p.size_bytes) || p.size_bytes == 0 ||
        p.size_bytes > 65535) {
      return Malformed(path, absl::StrFormat("bad record on line %d", lineno));
    }
    if (!out.empty() && p.timestamp_ns < out.back().timestamp_ns) {
      return Malformed(path, absl::StrFormat("line %d is out of order", lineno));
    }
    out.push_back(p);
  }
  return out;
}

absl::StatusOr<std::vector<PacketRecord>> ReadAnyTrace(const std::string& path) {
  if (absl::EndsWith(path, ".csv")) return ReadTraceCsv(path);
  return ReadTrace(path);
}

absl::Status WriteGroundTruth(const std::string& path, const GroundTruth& truth) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) return absl::UnavailableError("cannot open " + path);
  out << "flow_id,first_violation_ns\n";
  for (const auto& [flow, ts] : truth.Sorted()) out << flow << ',' << ts << '\n';
  return out ? absl::OkStatus() : absl::DataLossError("write failed: " + path);
}

absl::StatusOr<GroundTruth> ReadGroundTruth(const std::string& path) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) ||
      absl::StripSuffix(line, "\r") != "flow_id,first_violation_ns") {
    return Malformed(path, "expected header flow_id,first_violation_ns");
  }
  GroundTruth truth;
  while (std::getline(in, line)) {
    absl::string_view v = absl::StripSuffix(line, "\r");
    if (v.empty()) continue;
    std::vector<absl::string_view> f = absl::StrSplit(v, ',');
    FlowId flow;
    std::uint64_t ts;
    if (f.size() != 2 || !absl::SimpleAtoi(f[0], &flow) ||
        !absl::SimpleAtoi(f[1], &ts)) {
      return Malformed(path, "bad ground-truth row");
    }
    truth.Record(flow, ts);
  }
  return truth;
}

std::string GroundTruthPath(const std::string& trace_path) {
  return trace_path + ".truth.csv";
}

GroundTruth ComputeGroundTruth(std::span<const PacketRecord> trace,
                               const FlowSpec& spec) {
  GroundTruthTracker tracker(spec);
  for (const PacketRecord& p : trace) tracker.Observe(p);
  return tracker.Release();
}

}  // namespace loft
