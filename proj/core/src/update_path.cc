#include "loft/update_path.h"

#include <algorithm>
#include <numeric>
#include <utility>

#include "absl/strings/str_format.h"

namespace loft {

std::uint64_t CounterArray::Total() const {
  return std::accumulate(counters_.begin(), counters_.end(), std::uint64_t{0});
}

void CounterArray::Reset(std::uint64_t major, std::uint32_t minor,
                         std::uint64_t seed) {
  major_ = major;
  minor_ = minor;
  seed_ = seed;
  std::fill(counters_.begin(), counters_.end(), 0);
}

UpdatePath::UpdatePath(std::uint32_t width, std::uint32_t minors_per_major,
                       std::uint64_t base_seed)
    : width_(width), minors_per_major_(minors_per_major), base_seed_(base_seed) {
  in_progress_.reserve(minors_per_major);
  completed_.reserve(minors_per_major);
  OpenCurrent();
}

void UpdatePath::StartMajor(std::uint64_t j) {
  ClearArchive();
  minor_global_ = j * minors_per_major_;
  OpenCurrent();
}

CounterArray UpdatePath::TakeSpare() {
  if (spares_.empty()) return CounterArray(0, 0, 0, width_);
  CounterArray a = std::move(spares_.back());
  spares_.pop_back();
  return a;
}

void UpdatePath::OpenCurrent() {
  if (current_.width() != width_) current_ = TakeSpare();
  current_.Reset(minor_global_ / minors_per_major_,
                 static_cast<std::uint32_t>(minor_global_ % minors_per_major_),
                 MinorSeed(base_seed_, minor_global_));
}

bool UpdatePath::RotateMinorCycle() {
  CounterArray next = TakeSpare();
  std::swap(next, current_);
  in_progress_.push_back(std::move(next));
  ++minor_global_;
  OpenCurrent();
  if (in_progress_.size() < minors_per_major_) return false;
  for (CounterArray& a : completed_) spares_.push_back(std::move(a));
  completed_.clear();
  std::swap(completed_, in_progress_);
  completed_major_ = completed_.front().major();
  has_completed_ = true;
  return true;
}

absl::StatusOr<std::span<const CounterArray>> UpdatePath::MajorCycleArrays(
    std::uint64_t j) const {
  if (has_completed_ && completed_major_ == j) {
    return std::span<const CounterArray>(completed_);
  }
  if (j >= minor_global_ / minors_per_major_) {
    return absl::FailedPreconditionError(
        absl::StrFormat("major cycle %d has not completed", j));
  }
  return absl::NotFoundError(
      absl::StrFormat("major cycle %d is no longer archived", j));
}

void UpdatePath::ClearArchive() {
  for (CounterArray& a : in_progress_) spares_.push_back(std::move(a));
  for (CounterArray& a : completed_) spares_.push_back(std::move(a));
  in_progress_.clear();
  completed_.clear();
  has_completed_ = false;
}

}  // namespace loft
