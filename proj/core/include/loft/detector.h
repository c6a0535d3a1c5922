#ifndef LOFT_DETECTOR_H_
#define LOFT_DETECTOR_H_

#include <cstdint>
#include <string_view>

#include "absl/status/status.h"
#include "loft/monitor.h"
#include "loft/types.h"

namespace loft {

// A suspicion stage in front of the precise monitors. Implementations decide
// which flows the monitors watch.
class Detector {
 public:
  virtual ~Detector() = default;

  virtual std::string_view name() const = 0;

  // Fires every cycle boundary that precedes ts_ns.
  virtual absl::Status AdvanceTo(std::uint64_t ts_ns, MonitorBank& monitors) = 0;

  // Sees every packet that was not dropped by the blacklist.
  virtual void Observe(const PacketRecord& pkt, MonitorBank& monitors) = 0;

  // Fast-memory counting slots, excluding the monitors.
  virtual std::size_t counter_slots() const = 0;
};

}  // namespace loft

#endif  // LOFT_DETECTOR_H_
