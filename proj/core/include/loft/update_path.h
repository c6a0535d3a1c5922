#ifndef LOFT_UPDATE_PATH_H_
#define LOFT_UPDATE_PATH_H_

#include <cassert>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "loft/hash.h"
#include "loft/types.h"

namespace loft {

// Per-packet operation tally used to check the update-path cost contract.
struct OpCounter {
  std::uint64_t hashes = 0;
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
};

// The W byte counters of one minor cycle.
class CounterArray {
 public:
  CounterArray() = default;
  CounterArray(std::uint64_t major, std::uint32_t minor, std::uint64_t seed,
               std::uint32_t width)
      : major_(major), minor_(minor), seed_(seed), counters_(width, 0) {}

  std::uint64_t major() const { return major_; }
  std::uint32_t minor() const { return minor_; }
  std::uint64_t seed() const { return seed_; }
  std::uint32_t width() const {
    return static_cast<std::uint32_t>(counters_.size());
  }
  std::span<const std::uint64_t> counters() const { return counters_; }
  std::uint64_t operator[](std::uint32_t x) const { return counters_[x]; }

  std::uint64_t Total() const;

  // Adds the packet's bytes to the counter its flow hashes to.
  void Update(const PacketRecord& pkt, OpCounter* ops = nullptr) {
    const std::uint32_t x = HashFlow(seed_, pkt.flow_id, width());
    const std::uint64_t before = counters_[x];
    assert(before <= std::numeric_limits<std::uint64_t>::max() - pkt.size_bytes);
    counters_[x] = before + pkt.size_bytes;
    if (ops != nullptr) {
      ++ops->hashes;
      ++ops->reads;
      ++ops->writes;
    }
  }

  // Reuses the storage for another minor cycle.
  void Reset(std::uint64_t major, std::uint32_t minor, std::uint64_t seed);

  friend bool operator==(const CounterArray&, const CounterArray&) = default;

 private:
  std::uint64_t major_ = 0;
  std::uint32_t minor_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<std::uint64_t> counters_;
};

// Owns the in-progress counter array and the archive of completed ones.
// The archive retains the most recent completed major cycle plus the minor
// cycles archived so far in the current one.
class UpdatePath {
 public:
  UpdatePath(std::uint32_t width, std::uint32_t minors_per_major,
             std::uint64_t base_seed);

  // Starts counting at the first minor cycle of major cycle j. Drops the
  // archive.
  void StartMajor(std::uint64_t j);

  void Update(const PacketRecord& pkt, OpCounter* ops = nullptr) {
    current_.Update(pkt, ops);
  }

  // Archives the current array and opens a zeroed one for the next minor
  // cycle. Returns true when the archived array completed a major cycle.
  bool RotateMinorCycle();

  // The Z arrays of major cycle j, in minor order.
  absl::StatusOr<std::span<const CounterArray>> MajorCycleArrays(
      std::uint64_t j) const;

  // Drops every archived array.
  void ClearArchive();

  const CounterArray& current() const { return current_; }
  std::uint64_t current_minor_global() const { return minor_global_; }
  std::uint32_t width() const { return width_; }
  std::uint32_t minors_per_major() const { return minors_per_major_; }
  std::uint64_t base_seed() const { return base_seed_; }
  bool has_completed_major() const { return has_completed_; }
  std::uint64_t completed_major() const { return completed_major_; }
  std::size_t archived_in_progress() const { return in_progress_.size(); }

 private:
  CounterArray TakeSpare();
  void OpenCurrent();

  std::uint32_t width_;
  std::uint32_t minors_per_major_;
  std::uint64_t base_seed_;
  std::uint64_t minor_global_ = 0;
  CounterArray current_;
  std::vector<CounterArray> in_progress_;
  std::vector<CounterArray> completed_;
  std::uint64_t completed_major_ = 0;
  bool has_completed_ = false;
  std::vector<CounterArray> spares_;
};

}  // namespace loft

#endif  // LOFT_UPDATE_PATH_H_
