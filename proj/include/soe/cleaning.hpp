#pragma once

#include "soe/cycledata.hpp"
#include "soe/metrics.hpp"

namespace soe {

// Cycle cleaning rules. The first cycle is always dropped when
// `drop_first_cycle` is set; every anomaly rule can be switched off.
struct CleaningPolicy {
  bool drop_first_cycle = true;
  bool drop_empty_phase = true;           // fewer than two samples in a phase
  bool drop_non_monotonic_time = true;
  bool drop_incomplete_discharge = true;  // min discharge V > cutoff + tolerance
  double cutoff_tolerance_V = 0.1;
  bool drop_nonphysical_efficiency = true;  // SOE outside (0, max_soe]
  double max_soe = 1.02;
  IntegrationRule rule = IntegrationRule::LeftRect;
};

// Removes the first cycle and every cycle matching an enabled rule, records
// each removal (with all matching reasons) in the audit, and re-indexes the
// survivors t = 1..n. Throws Error(NoData, "no usable cycles") if nothing is
// left.
BatteryHistory clean_history(const BatteryHistory& h, const CleaningPolicy& policy = {});

}  // namespace soe
