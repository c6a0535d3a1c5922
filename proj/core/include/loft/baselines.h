#ifndef LOFT_BASELINES_H_
#define LOFT_BASELINES_H_

#include <cstdint>
#include <memory>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

#include "absl/container/btree_set.h"
#include "absl/container/flat_hash_map.h"
#include "absl/status/statusor.h"
#include "loft/detector.h"
#include "loft/types.h"

namespace loft {

// Serial multistage filter with conservative update.
class MultistageFilter {
 public:
  MultistageFilter(std::uint32_t stages, std::uint32_t width, double threshold,
                   std::uint64_t seed);

  // Returns true when the flow's minimum counter reached the threshold.
  bool Process(const PacketRecord& pkt);

  std::uint64_t Estimate(FlowId flow) const;
  void Clear();

  std::uint32_t stages() const { return stages_; }
  std::uint32_t width() const { return width_; }
  std::size_t slots() const { return counters_.size(); }
  double threshold() const { return threshold_; }

  // ceil(ln(1 / delta)).
  static std::uint32_t StagesForDelta(double delta);

 private:
  std::uint32_t stages_;
  std::uint32_t width_;
  double threshold_;
  std::vector<std::uint64_t> seeds_;
  std::vector<std::uint64_t> counters_;
};

// Misra-Gries over bytes with idle link capacity treated as traffic from
// unique small virtual flows.
class EarDet {
 public:
  struct Params {
    std::uint32_t counters = 1;         // n
    double link_bytes_per_s = 0.0;      // rho
    double alpha_bytes = 1518.0;        // max packet size, virtual chunk size
    double beta_low_bytes = 1500.0;     // beta_l
  };

  explicit EarDet(const Params& params);

  // Returns true when the flow's counter crossed beta_TH. The counter is
  // released on a flag.
  bool Process(const PacketRecord& pkt);

  // Current counter value of a flow, 0 when untracked.
  std::int64_t Count(FlowId flow) const;

  double gamma_high() const;  // rho / (n + 1)
  double beta_threshold() const;  // (n + 1) * beta_l + alpha
  double beta_high() const;  // 2 * beta_TH + alpha
  std::size_t slots() const { return slots_.size(); }
  const Params& params() const { return params_; }

  // Smallest n with n >= link / gamma_h - 1.
  static std::uint64_t CountersFor(double link_bytes_per_s,
                                   double gamma_high_bytes_per_s);

 private:
  struct Slot {
    FlowId flow = 0;
    std::int64_t raw = 0;
    bool used = false;
    bool blank = false;
  };

  void AddBlank(std::int64_t bytes);
  void Occupy(std::uint32_t slot, FlowId flow, std::int64_t count, bool blank);
  void Release(std::uint32_t slot);
  void DecrementAll(std::int64_t d);
  std::int64_t MinCount() const;
  std::int64_t Effective(const Slot& s) const { return s.raw - offset_; }

  Params params_;
  std::int64_t beta_th_;
  std::vector<Slot> slots_;
  std::vector<std::uint32_t> free_;
  absl::flat_hash_map<FlowId, std::uint32_t> owner_;
  absl::btree_set<std::pair<std::int64_t, std::uint32_t>> by_count_;
  std::int64_t offset_ = 0;
  std::size_t real_used_ = 0;
  double link_free_ns_ = 0.0;
  double blank_carry_ = 0.0;
  bool started_ = false;
};

// p-stage pipeline of (flow, count) tables. Stage one always inserts and
// the evicted entry travels down, swapping with smaller residents.
class HashPipe {
 public:
  HashPipe(std::uint32_t stages, std::uint32_t slots_per_stage,
           std::uint64_t seed);

  void Process(const PacketRecord& pkt);

  // Up to k (flow, bytes) pairs with the largest tracked counts.
  std::vector<std::pair<FlowId, std::uint64_t>> TopK(std::size_t k) const;
  std::uint64_t TrackedTotal() const;
  void Clear();
  std::size_t slots() const { return table_.size(); }

 private:
  struct Entry {
    FlowId flow = 0;
    std::uint64_t count = 0;
  };
  std::uint32_t stages_;
  std::uint32_t width_;
  std::vector<std::uint64_t> seeds_;
  std::vector<Entry> table_;
};

// d arrays of (flow, count) buckets with count-with-exponential-decay.
class HeavyKeeper {
 public:
  HeavyKeeper(std::uint32_t arrays, std::uint32_t width, double decay_base,
              double unit_bytes, std::uint64_t seed);

  void Process(const PacketRecord& pkt);

  std::uint64_t Query(FlowId flow) const;
  std::vector<std::pair<FlowId, std::uint64_t>> TopK(std::size_t k) const;
  void Clear();
  std::size_t slots() const { return table_.size(); }

  // Probability that a mismatching packet decays a bucket holding `count`.
  double DecayProbability(std::uint64_t count) const;

 private:
  struct Bucket {
    FlowId flow = 0;
    std::uint64_t count = 0;
  };
  std::uint32_t arrays_;
  std::uint32_t width_;
  double decay_base_;
  double unit_bytes_;
  std::vector<std::uint64_t> seeds_;
  std::vector<Bucket> table_;
  std::mt19937_64 rng_;
};

enum class DetectorKind {
  kLoft,
  kLoftNoCount,
  kMultistageFilter,
  kEarDet,
  kHashPipe,
  kHeavyKeeper,
};

absl::StatusOr<DetectorKind> ParseDetectorKind(std::string_view name);
std::string_view DetectorKindName(DetectorKind kind);

struct BaselineConfig {
  std::uint32_t msf_stages = 4;
  std::uint32_t hashpipe_stages = 4;
  std::uint32_t heavykeeper_arrays = 2;
  double heavykeeper_decay_base = 1.08;
  double heavykeeper_unit_bytes = 1500.0;
  double eardet_alpha_bytes = 1518.0;
  // Link capacity seen by EARDet; 0 means the caller must fill it in.
  double link_bytes_per_s = 0.0;
};

// Builds any detector over the same counter budget (config.counters slots
// plus config.monitors monitors).
absl::StatusOr<std::unique_ptr<Detector>> MakeDetector(
    DetectorKind kind, const DetectorConfig& config, const FlowSpec& spec,
    const BaselineConfig& baseline);

}  // namespace loft

#endif  // LOFT_BASELINES_H_
