#pragma once

#include <span>
#include <string>
#include <vector>

#include "soe/cycledata.hpp"

namespace soe {

// LeftRect is the rectangular sum sum_i V_i I_i (t_{i+1} - t_i); the last
// sample only closes the final interval.
enum class IntegrationRule { LeftRect, Trapezoid };

std::string_view to_string(IntegrationRule rule);

// Energy of one phase in joules. Requires >= 2 samples with strictly
// increasing time; throws Error(Domain, "degenerate trace") otherwise.
double integrate_power(const PhaseTrace& trace,
                       IntegrationRule rule = IntegrationRule::LeftRect);

// Charge moved in one phase, in ampere-hours.
double integrate_charge(const PhaseTrace& trace,
                        IntegrationRule rule = IntegrationRule::LeftRect);

constexpr double kJoulesPerWattHour = 3600.0;

struct CycleMetrics {
  double e_charged_J = 0.0;
  double e_discharged_J = 0.0;
  double e_dissipated_J = 0.0;  // e_charged_J - e_discharged_J
  double soe = 0.0;             // e_discharged_J / e_charged_J
  double charge_capacity_Ah = 0.0;
  double discharge_capacity_Ah = 0.0;
  double ce = 0.0;   // discharge_capacity_Ah / charge_capacity_Ah
  double soh = 0.0;  // discharge_capacity_Ah / rated capacity

  double e_charged_Wh() const { return e_charged_J / kJoulesPerWattHour; }
  double e_discharged_Wh() const { return e_discharged_J / kJoulesPerWattHour; }
  double e_dissipated_Wh() const { return e_dissipated_J / kJoulesPerWattHour; }
};

// SOH uses the cycle's own discharge capacity as the maximum-capacity
// estimate. Throws Error(Domain, "zero-energy charge phase") when the charge
// integral is not positive.
CycleMetrics compute_cycle_metrics(const CycleRecord& cycle, double rated_capacity_Ah,
                                   IntegrationRule rule = IntegrationRule::LeftRect);

struct SeriesPoint {
  int t = 0;
  int cycle_index = 0;
  CycleMetrics metrics;
};

struct MetricsSeries {
  std::string battery_id;
  std::vector<SeriesPoint> points;     // t = 1..n
  std::vector<RemovedCycle> skipped;   // cycles whose metrics could not be computed

  std::vector<double> soe() const;
  std::vector<double> soh() const;
  std::vector<double> t() const;
};

// One point per cycle of `h`. Cycles that fail compute_cycle_metrics are
// skipped and recorded; surviving points are numbered 1..n.
MetricsSeries compute_series(const BatteryHistory& h,
                             IntegrationRule rule = IntegrationRule::LeftRect);

// Pearson correlation coefficient. Equal lengths >= 2. Throws
// Error(Domain, "undefined correlation") when both inputs are constant; when
// exactly one is constant the covariance is zero and 0 is returned.
double pearson(std::span<const double> x, std::span<const double> y);

}  // namespace soe
