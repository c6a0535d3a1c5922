#ifndef LOFT_PIPELINE_H_
#define LOFT_PIPELINE_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "absl/container/flat_hash_set.h"
#include "absl/status/statusor.h"
#include "loft/detector.h"
#include "loft/ground_truth.h"
#include "loft/monitor.h"
#include "loft/types.h"

namespace loft {

enum class Disposition { kDroppedBlacklisted, kMonitored, kPassed };

struct DetectionEvent {
  FlowId flow_id = 0;
  std::optional<std::uint64_t> first_violation_ns;
  std::uint64_t detected_ns = 0;
  std::string detector;
  std::uint64_t seed = 0;
  bool within_timeout = true;
};

// Blacklist filter, precise monitors and a detector, in packet order.
class PolicingPipeline {
 public:
  PolicingPipeline(FlowSpec spec, std::size_t monitors,
                   std::unique_ptr<Detector> detector, std::uint64_t seed = 0);

  absl::StatusOr<Disposition> Process(const PacketRecord& pkt);

  // Fires the detector's boundaries up to ts_ns without a packet.
  absl::Status AdvanceTo(std::uint64_t ts_ns);

  bool IsBlacklisted(FlowId flow) const { return blacklist_.contains(flow); }
  const absl::flat_hash_set<FlowId>& blacklist() const { return blacklist_; }
  const std::vector<DetectionEvent>& events() const { return events_; }
  Detector& detector() { return *detector_; }
  const Detector& detector() const { return *detector_; }
  MonitorBank& monitors() { return monitors_; }
  std::uint64_t packets() const { return packets_; }

 private:
  std::unique_ptr<Detector> detector_;
  MonitorBank monitors_;
  absl::flat_hash_set<FlowId> blacklist_;
  std::vector<DetectionEvent> events_;
  std::uint64_t seed_;
  std::uint64_t last_ts_ = 0;
  std::uint64_t packets_ = 0;
};

struct DetectionReport {
  std::vector<DetectionEvent> events;
  std::size_t fp_count = 0;
};

// Joins blacklist events with ground truth. Events detected later than
// timeout_s after the first violation are marked as outside the timeout.
DetectionReport BuildDetectionReport(const std::vector<DetectionEvent>& events,
                                     const GroundTruth& truth,
                                     double timeout_s);

}  // namespace loft

#endif  // LOFT_PIPELINE_H_
