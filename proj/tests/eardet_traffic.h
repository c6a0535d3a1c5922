#ifndef LOFT_TESTS_EARDET_TRAFFIC_H_
#define LOFT_TESTS_EARDET_TRAFFIC_H_

// Adversarial traffic for the EARDet guarantees: random arrivals pushed
// through a link of capacity rho, then a subset regulated to the low spec.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "loft/baselines.h"
#include "loft/traffic.h"
#include "loft/types.h"

namespace loft::testing {

// Delays packets so that none starts before the previous one left a link of
// the given capacity.
inline std::vector<PacketRecord> Serialize(std::vector<PacketRecord> pkts,
                                           double link_bytes_per_s) {
  double free_ns = 0.0;
  for (PacketRecord& p : pkts) {
    const double start = std::max(static_cast<double>(p.timestamp_ns), free_ns);
    p.timestamp_ns = static_cast<std::uint64_t>(std::ceil(start));
    free_ns = static_cast<double>(p.timestamp_ns) +
              p.size_bytes / link_bytes_per_s * 1e9;
  }
  return pkts;
}

struct ConformantTrace {
  std::vector<PacketRecord> packets;
  std::vector<bool> regulated;  // by flow id
};

// Flows with even ids conform to (gamma_h, beta_l); odd ids are arbitrary.
inline ConformantTrace MakeConformantTrace(std::mt19937_64& rng,
                                           const EarDet& det,
                                           std::size_t packets,
                                           std::uint32_t flows) {
  const double rho = det.params().link_bytes_per_s;
  const FlowSpec low{det.gamma_high(), det.params().beta_low_bytes};
  std::vector<PacketRecord> raw;
  std::uint64_t ts = 0;
  const double mean_gap_ns = 1500.0 / rho * 1e9;
  for (std::size_t i = 0; i < packets; ++i) {
    ts += static_cast<std::uint64_t>(mean_gap_ns * 2.0 *
                                     std::uniform_real_distribution<>(0, 1)(rng));
    const FlowId f = rng() % flows;
    raw.push_back({ts, f, static_cast<std::uint32_t>(64 + rng() % 1437)});
  }
  raw = Serialize(std::move(raw), rho);
  std::vector<PacketRecord> even, out;
  for (const PacketRecord& p : raw) {
    if (p.flow_id % 2 == 0) even.push_back(p);
  }
  const std::vector<PacketRecord> kept = Regulate(even, low);
  std::size_t e = 0;
  for (const PacketRecord& p : raw) {
    if (p.flow_id % 2 == 1) {
      out.push_back(p);
    } else if (e < kept.size() && kept[e] == p) {
      out.push_back(p);
      ++e;
    }
  }
  ConformantTrace t;
  t.packets = std::move(out);
  t.regulated.assign(flows, false);
  for (std::uint32_t f = 0; f < flows; f += 2) t.regulated[f] = true;
  return t;
}

}  // namespace loft::testing

#endif  // LOFT_TESTS_EARDET_TRAFFIC_H_
