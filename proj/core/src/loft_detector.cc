#include "loft/loft_detector.h"

#include <utility>

#include "loft/hash.h"

namespace loft {

absl::StatusOr<std::unique_ptr<LoftDetector>> LoftDetector::Create(
    const DetectorConfig& config) {
  if (absl::Status s = ValidateDetectorConfig(config); !s.ok()) return s;
  return std::unique_ptr<LoftDetector>(new LoftDetector(config));
}

LoftDetector::LoftDetector(const DetectorConfig& config)
    : config_(config),
      update_(config.counters, config.clock.minors_per_major, config.hash_seed),
      sampler_(config.sample_rate, Fmix64(config.hash_seed ^ 0x5a3c0ffee),
               config.exact_active_list),
      estimate_(config.monitors, config.clock.minors_per_major, config.mode,
                config.table_capacity),
      miss_rng_(Fmix64(config.hash_seed ^ 0xd15ea5e)) {}

std::string_view LoftDetector::name() const {
  return config_.mode == EstimateMode::kCounting ? "loft" : "loft-nocount";
}

absl::Status LoftDetector::AdvanceTo(std::uint64_t ts_ns,
                                     MonitorBank& monitors) {
  const std::uint64_t m = MinorIndex(ts_ns, config_.clock.minor_per_second);
  if (!started_) {
    started_ = true;
    update_.StartMajor(m / config_.clock.minors_per_major);
  }
  while (update_.current_minor_global() < m) {
    if (update_.RotateMinorCycle()) {
      if (absl::Status s = FinishMajor(monitors); !s.ok()) return s;
    }
  }
  return absl::OkStatus();
}

absl::Status LoftDetector::FinishMajor(MonitorBank& monitors) {
  const std::uint64_t j = update_.completed_major();
  absl::StatusOr<std::span<const CounterArray>> arrays =
      update_.MajorCycleArrays(j);
  if (!arrays.ok()) return arrays.status();

  std::vector<FlowId> active = sampler_.DrainActiveFlows();
  if (config_.miss_rate > 0.0) {
    absl::StatusOr<std::vector<FlowId>> kept =
        Degrade(active, config_.miss_rate, miss_rng_);
    if (!kept.ok()) return kept.status();
    active = *std::move(kept);
  }

  absl::StatusOr<Watchlist> wl = estimate_.RunMajorCycle(*arrays, active);
  if (!wl.ok()) return wl.status();
  watchlist_ = *std::move(wl);
  watch_ids_.clear();
  for (const WatchlistEntry& e : watchlist_) watch_ids_.push_back(e.flow_id);
  monitors.InstallWatchlist(watch_ids_);

  const std::uint64_t next_minor = (j + 1) * config_.clock.minors_per_major;
  const bool reset = next_minor % config_.clock.reset_minors == 0;
  if (observer_) {
    observer_(MajorCycleRecord{j, estimate_.majors_since_reset(), active,
                               *arrays, &watchlist_, reset});
  }
  if (reset) {
    estimate_.Reset();
    update_.ClearArchive();
    ++resets_;
  }
  return absl::OkStatus();
}

}  // namespace loft
