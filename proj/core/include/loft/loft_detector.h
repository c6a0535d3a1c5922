#ifndef LOFT_LOFT_DETECTOR_H_
#define LOFT_LOFT_DETECTOR_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "loft/detector.h"
#include "loft/estimate_path.h"
#include "loft/sampler.h"
#include "loft/update_path.h"

namespace loft {

// What the estimate path saw and produced at the end of one major cycle.
struct MajorCycleRecord {
  std::uint64_t major = 0;
  std::uint64_t majors_since_reset = 0;
  std::span<const FlowId> active_flows;
  std::span<const CounterArray> arrays;
  const Watchlist* watchlist = nullptr;
  bool reset_after = false;
};

class LoftDetector : public Detector {
 public:
  using MajorObserver = std::function<void(const MajorCycleRecord&)>;

  static absl::StatusOr<std::unique_ptr<LoftDetector>> Create(
      const DetectorConfig& config);

  std::string_view name() const override;
  absl::Status AdvanceTo(std::uint64_t ts_ns, MonitorBank& monitors) override;
  void Observe(const PacketRecord& pkt, MonitorBank& /*monitors*/) override {
    sampler_.Observe(pkt);
    update_.Update(pkt, ops_);
  }
  std::size_t counter_slots() const override { return config_.counters; }

  void set_major_observer(MajorObserver observer) {
    observer_ = std::move(observer);
  }
  void set_op_counter(OpCounter* ops) { ops_ = ops; }

  const DetectorConfig& config() const { return config_; }
  const FlowTable& table() const { return estimate_.table(); }
  const UpdatePath& update_path() const { return update_; }
  const Sampler& sampler() const { return sampler_; }
  const Watchlist& watchlist() const { return watchlist_; }
  std::uint64_t resets() const { return resets_; }

 private:
  explicit LoftDetector(const DetectorConfig& config);
  absl::Status FinishMajor(MonitorBank& monitors);

  DetectorConfig config_;
  UpdatePath update_;
  Sampler sampler_;
  EstimatePath estimate_;
  std::mt19937_64 miss_rng_;
  Watchlist watchlist_;
  std::vector<FlowId> watch_ids_;
  bool started_ = false;
  std::uint64_t resets_ = 0;
  OpCounter* ops_ = nullptr;
  MajorObserver observer_;
};

}  // namespace loft

#endif  // LOFT_LOFT_DETECTOR_H_
