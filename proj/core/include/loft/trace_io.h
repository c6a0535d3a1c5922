#ifndef LOFT_TRACE_IO_H_
#define LOFT_TRACE_IO_H_

#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "loft/ground_truth.h"
#include "loft/types.h"

namespace loft {

// Binary layout: "LOFT", u32 version, u64 record count, then 24-byte
// little-endian records (u64 ts_ns, u64 flow_id, u32 size, u32 reserved).
inline constexpr char kTraceMagic[4] = {'L', 'O', 'F', 'T'};
inline constexpr std::uint32_t kTraceVersion = 1;
inline constexpr std::size_t kTraceHeaderBytes = 16;
inline constexpr std::size_t kTraceRecordBytes = 24;

// Streams records to a trace file; the count is patched in on Close().
class TraceWriter {
 public:
  absl::Status Open(const std::string& path);
  absl::Status Append(const PacketRecord& pkt);
  absl::Status Close();
  std::uint64_t count() const { return count_; }

 private:
  std::ofstream out_;
  std::uint64_t count_ = 0;
  std::uint64_t last_ts_ = 0;
};

class TraceReader {
 public:
  absl::Status Open(const std::string& path);
  // Returns false at the end of the trace.
  absl::StatusOr<bool> Next(PacketRecord* pkt);
  std::uint64_t record_count() const { return record_count_; }

 private:
  std::ifstream in_;
  std::uint64_t record_count_ = 0;
  std::uint64_t read_ = 0;
};

absl::Status WriteTrace(const std::string& path,
                        std::span<const PacketRecord> records);
absl::StatusOr<std::vector<PacketRecord>> ReadTrace(const std::string& path);

// CSV with header ts_ns,flow_id,size.
absl::Status WriteTraceCsv(const std::string& path,
                           std::span<const PacketRecord> records);
absl::StatusOr<std::vector<PacketRecord>> ReadTraceCsv(const std::string& path);

// Reads either format, picking CSV for a ".csv" suffix.
absl::StatusOr<std::vector<PacketRecord>> ReadAnyTrace(const std::string& path);

// CSV with header flow_id,first_violation_ns.
absl::Status WriteGroundTruth(const std::string& path, const GroundTruth& truth);
absl::StatusOr<GroundTruth> ReadGroundTruth(const std::string& path);

// Sidecar path used next to a trace file.
std::string GroundTruthPath(const std::string& trace_path);

GroundTruth ComputeGroundTruth(std::span<const PacketRecord> trace,
                               const FlowSpec& spec);

}  // namespace loft

#endif  // LOFT_TRACE_IO_H_
