#include "loft/estimate_path.h"

#include <algorithm>
#include <cassert>

#include "absl/strings/str_format.h"
#include "loft/hash.h"

namespace loft {

std::vector<std::uint32_t> ReconstructCardinalities(
    std::span<const FlowId> active_flows, std::uint64_t seed,
    std::uint32_t width) {
  std::vector<std::uint32_t> num_flow(width, 0);
  for (FlowId f : active_flows) ++num_flow[HashFlow(seed, f, width)];
  return num_flow;
}

std::vector<MajorDelta> AccumulateMajorCycle(
    std::span<const CounterArray> arrays,
    std::span<const FlowId> active_flows) {
  std::vector<MajorDelta> deltas(active_flows.size());
  if (arrays.empty() || active_flows.empty()) return deltas;
  const std::uint32_t width = arrays.front().width();
  std::vector<std::uint32_t> index(active_flows.size());
  std::vector<std::uint32_t> num_flow(width);
  for (const CounterArray& arr : arrays) {
    std::fill(num_flow.begin(), num_flow.end(), 0);
    for (std::size_t i = 0; i < active_flows.size(); ++i) {
      index[i] = HashFlow(arr.seed(), active_flows[i], width);
      ++num_flow[index[i]];
    }
    for (std::size_t i = 0; i < active_flows.size(); ++i) {
      deltas[i].a += arr[index[i]];
      deltas[i].c += num_flow[index[i]];
    }
  }
  return deltas;
}

absl::Status FlowTable::Update(std::span<const FlowId> flows,
                               std::span<const MajorDelta> deltas) {
  assert(flows.size() == deltas.size());
  for (std::size_t i = 0; i < flows.size(); ++i) {
    auto it = entries_.find(flows[i]);
    if (it == entries_.end()) {
      if (entries_.size() >= capacity_) {
        return absl::ResourceExhaustedError(absl::StrFormat(
            "flow table capacity %d exhausted", capacity_));
      }
      entries_.emplace(flows[i], FlowTableEntry{flows[i], deltas[i].a,
                                                deltas[i].c, 1});
      continue;
    }
    it->second.a += deltas[i].a;
    it->second.c += deltas[i].c;
    it->second.num_j += 1;
  }
  return absl::OkStatus();
}

const FlowTableEntry* FlowTable::Find(FlowId flow) const {
  auto it = entries_.find(flow);
  return it == entries_.end() ? nullptr : &it->second;
}

double ComputeEstimate(const FlowTableEntry& entry, std::uint64_t j,
                       EstimateMode mode, std::uint32_t minors_per_major) {
  assert(entry.num_j >= 1 && j >= entry.num_j);
  const double c = mode == EstimateMode::kCounting
                       ? static_cast<double>(entry.c)
                       : static_cast<double>(minors_per_major) * entry.num_j;
  assert(c > 0.0);
  return (static_cast<double>(entry.num_j) / static_cast<double>(j)) *
         (static_cast<double>(entry.a) / c);
}

Watchlist SelectWatchlist(const FlowTable& table, std::uint64_t j,
                          std::uint32_t monitors, EstimateMode mode,
                          std::uint32_t minors_per_major) {
  Watchlist all;
  all.reserve(table.size());
  table.ForEach([&](const FlowTableEntry& e) {
    all.push_back({e.flow_id, ComputeEstimate(e, j, mode, minors_per_major)});
  });
  auto better = [](const WatchlistEntry& x, const WatchlistEntry& y) {
    if (x.estimate != y.estimate) return x.estimate > y.estimate;
    return x.flow_id < y.flow_id;
  };
  const std::size_t k = std::min<std::size_t>(monitors, all.size());
  std::partial_sort(all.begin(), all.begin() + k, all.end(), better);
  all.resize(k);
  return all;
}

EstimatePath::EstimatePath(std::uint32_t monitors,
                           std::uint32_t minors_per_major, EstimateMode mode,
                           std::size_t table_capacity)
    : monitors_(monitors),
      minors_per_major_(minors_per_major),
      mode_(mode),
      table_(table_capacity) {}

absl::StatusOr<Watchlist> EstimatePath::RunMajorCycle(
    std::span<const CounterArray> arrays,
    std::span<const FlowId> active_flows) {
  std::vector<MajorDelta> deltas = AccumulateMajorCycle(arrays, active_flows);
  if (absl::Status s = table_.Update(active_flows, deltas); !s.ok()) return s;
  ++majors_since_reset_;
  return SelectWatchlist(table_, majors_since_reset_, monitors_, mode_,
                         minors_per_major_);
}

void EstimatePath::Reset() {
  table_.Clear();
  majors_since_reset_ = 0;
}

}  // namespace loft
