#include "loft/pipeline.h"

#include <algorithm>

#include "absl/strings/str_format.h"

namespace loft {

std::vector<std::pair<FlowId, std::uint64_t>> GroundTruth::Sorted() const {
  std::vector<std::pair<FlowId, std::uint64_t>> out(first_violation_.begin(),
                                                    first_violation_.end());
  std::sort(out.begin(), out.end());
  return out;
}

void GroundTruthTracker::Observe(const PacketRecord& pkt) {
  auto [it, inserted] = buckets_.try_emplace(pkt.flow_id);
  if (inserted) {
    it->second.flow_id = pkt.flow_id;
    it->second.spec = spec_;
  }
  if (MonitorPacket(it->second, pkt)) truth_.Record(pkt.flow_id, pkt.timestamp_ns);
}

PolicingPipeline::PolicingPipeline(FlowSpec spec, std::size_t monitors,
                                   std::unique_ptr<Detector> detector,
                                   std::uint64_t seed)
    : detector_(std::move(detector)), monitors_(monitors, spec), seed_(seed) {}

absl::StatusOr<Disposition> PolicingPipeline::Process(const PacketRecord& pkt) {
  if (pkt.timestamp_ns < last_ts_) {
    return absl::InvalidArgumentError(
        absl::StrFormat("packet at %d ns arrived after %d ns", pkt.timestamp_ns,
                        last_ts_));
  }
  last_ts_ = pkt.timestamp_ns;
  ++packets_;
  if (absl::Status s = detector_->AdvanceTo(pkt.timestamp_ns, monitors_);
      !s.ok()) {
    return s;
  }
  if (!blacklist_.empty() && blacklist_.contains(pkt.flow_id)) {
    return Disposition::kDroppedBlacklisted;
  }
  Disposition d = Disposition::kPassed;
  if (LeakyBucketState* bucket = monitors_.Find(pkt.flow_id)) {
    d = Disposition::kMonitored;
    if (MonitorPacket(*bucket, pkt)) {
      blacklist_.insert(pkt.flow_id);
      DetectionEvent ev;
      ev.flow_id = pkt.flow_id;
      ev.detected_ns = pkt.timestamp_ns;
      ev.detector = std::string(detector_->name());
      ev.seed = seed_;
      events_.push_back(std::move(ev));
      monitors_.Remove(pkt.flow_id);
    }
  }
  detector_->Observe(pkt, monitors_);
  return d;
}

absl::Status PolicingPipeline::AdvanceTo(std::uint64_t ts_ns) {
  if (ts_ns < last_ts_) return absl::OkStatus();
  last_ts_ = ts_ns;
  return detector_->AdvanceTo(ts_ns, monitors_);
}

DetectionReport BuildDetectionReport(const std::vector<DetectionEvent>& events,
                                     const GroundTruth& truth,
                                     double timeout_s) {
  DetectionReport report;
  for (DetectionEvent ev : events) {
    ev.first_violation_ns = truth.FirstViolation(ev.flow_id);
    if (!ev.first_violation_ns) {
      ++report.fp_count;
      ev.within_timeout = false;
    } else {
      const double delay =
          static_cast<double>(ev.detected_ns - *ev.first_violation_ns) * 1e-9;
      ev.within_timeout = delay <= timeout_s;
    }
    report.events.push_back(std::move(ev));
  }
  return report;
}

}  // namespace loft
