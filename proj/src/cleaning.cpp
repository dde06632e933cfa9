#include "soe/cleaning.hpp"

#include <algorithm>

#include "soe/error.hpp"

namespace soe {

namespace {

// Applies the anomaly rules that need the sample data; parse-time flags are
// carried over unchanged.
std::set<Anomaly> evaluate(const CycleRecord& cycle, const CleaningPolicy& policy) {
  std::set<Anomaly> flags = cycle.flags;
  if (cycle.charge.samples.size() < 2 || cycle.discharge.samples.size() < 2)
    flags.insert(Anomaly::EmptyPhase);

  if (!cycle.discharge.samples.empty()) {
    const auto lowest = std::min_element(
        cycle.discharge.samples.begin(), cycle.discharge.samples.end(),
        [](const Sample& a, const Sample& b) { return a.voltage_V < b.voltage_V; });
    if (lowest->voltage_V > cycle.conditions.cutoff_voltage_V + policy.cutoff_tolerance_V)
      flags.insert(Anomaly::IncompleteDischarge);
  }

  if (!flags.contains(Anomaly::EmptyPhase) && !flags.contains(Anomaly::NonMonotonicTime)) {
    const double e_in = integrate_power(cycle.charge, policy.rule);
    const double e_out = integrate_power(cycle.discharge, policy.rule);
    if (!(e_in > 0.0)) {
      flags.insert(Anomaly::ZeroEnergyCharge);
    } else {
      const double soe = e_out / e_in;
      if (!(soe > 0.0 && soe <= policy.max_soe))
        flags.insert(Anomaly::NonphysicalEfficiency);
      else if (soe > 1.0)
        flags.insert(Anomaly::EfficiencyAboveUnity);
    }
  }
  return flags;
}

bool enabled(Anomaly a, const CleaningPolicy& policy) {
  switch (a) {
    case Anomaly::EmptyPhase: return policy.drop_empty_phase;
    case Anomaly::NonMonotonicTime: return policy.drop_non_monotonic_time;
    case Anomaly::IncompleteDischarge: return policy.drop_incomplete_discharge;
    case Anomaly::NonphysicalEfficiency:
    case Anomaly::ZeroEnergyCharge: return policy.drop_nonphysical_efficiency;
    case Anomaly::EfficiencyAboveUnity: return false;
  }
  return false;
}

}  // namespace

BatteryHistory clean_history(const BatteryHistory& h, const CleaningPolicy& policy) {
  BatteryHistory out = h;
  out.cycles.clear();
  out.acquired_range = acquired_range(h);

  for (std::size_t i = 0; i < h.cycles.size(); ++i) {
    const auto& cycle = h.cycles[i];
    RemovedCycle removed{cycle.cycle_index, {}};
    if (i == 0 && policy.drop_first_cycle) removed.reasons.emplace_back("first-cycle");

    auto flags = evaluate(cycle, policy);
    for (Anomaly a : flags)
      if (enabled(a, policy)) removed.reasons.emplace_back(to_string(a));

    if (removed.reasons.empty()) {
      auto kept = cycle;
      kept.flags = std::move(flags);
      out.cycles.push_back(std::move(kept));
    } else {
      out.audit.push_back(std::move(removed));
    }
  }

  if (out.cycles.empty()) throw Error(ErrorCode::NoData, "no usable cycles");
  reindex(out);
  return out;
}

}  // namespace soe
