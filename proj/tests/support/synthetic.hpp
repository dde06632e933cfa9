#pragma once

// Deterministic synthetic telemetry: CC charge with a rising voltage ramp, CC
// discharge with a falling ramp whose level is solved so that the
// left-rectangle SOE of each cycle equals a prescribed target.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "soe/cycledata.hpp"

namespace soe::testing {

struct SyntheticSpec {
  std::string id = "SYN01";
  int cycles = 30;  // including the first cycle, which cleaning drops
  double soe_start = 0.88;
  double soe_slope = -0.0003;  // per cycle
  double soe_noise = 0.002;    // standard deviation of the per-cycle target noise
  double capacity_start_Ah = 1.85;
  double capacity_fade_Ah = 0.004;  // per cycle
  double rated_capacity_Ah = 2.0;
  OperatingConditions conditions{24.0, 2.0, 2.7, 1.5};
  int samples_per_phase = 40;
  unsigned seed = 1;
  std::vector<Segment> segments;
};

// Charge at `conditions.charge_current_A`, discharge at the discharge current;
// both phases move `capacity_Ah`. The discharge ramp ends 20 mV below cutoff.
inline CycleRecord make_cycle(int cycle_index, double target_soe, double capacity_Ah,
                              const OperatingConditions& c, int samples) {
  CycleRecord rec;
  rec.cycle_index = cycle_index;
  rec.conditions = c;
  const int n = samples;

  const double t_charge = capacity_Ah * 3600.0 / c.charge_current_A;
  const double dt_c = t_charge / (n - 1);
  double e_charged = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = 3.7 + 0.5 * i / (n - 1);
    rec.charge.samples.push_back({i * dt_c, v, c.charge_current_A});
    if (i + 1 < n) e_charged += v * c.charge_current_A * dt_c;
  }

  const double t_discharge = capacity_Ah * 3600.0 / c.discharge_current_A;
  const double dt_d = t_discharge / (n - 1);
  const double v_low = c.cutoff_voltage_V - 0.02;
  // Left sum of a linear ramp: sum_{i<n-1} V_i = V_hi n/2 + V_lo (n-2)/2.
  const double needed = target_soe * e_charged / (c.discharge_current_A * dt_d);
  const double v_high = (2.0 * needed - v_low * (n - 2)) / n;
  for (int i = 0; i < n; ++i) {
    const double v = v_high - (v_high - v_low) * i / (n - 1);
    rec.discharge.samples.push_back({i * dt_d, v, c.discharge_current_A});
  }
  return rec;
}

inline BatteryMetadata make_metadata(const SyntheticSpec& spec) {
  BatteryMetadata m;
  m.battery_id = spec.id;
  m.rated_capacity_Ah = spec.rated_capacity_Ah;
  m.rated_voltage_V = 3.7;
  m.conditions = spec.conditions;
  m.segments = spec.segments;
  return m;
}

// Target SOE per cycle follows soe_start + soe_slope * k plus Gaussian noise;
// inside a segment the conditions and level come from `segment_levels`
// (if given, indexed like spec.segments).
inline BatteryHistory make_history(const SyntheticSpec& spec,
                                   const std::vector<double>& segment_levels = {}) {
  std::mt19937 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.soe_noise);
  BatteryHistory h;
  h.battery_id = spec.id;
  h.rated_capacity_Ah = spec.rated_capacity_Ah;
  h.rated_voltage_V = 3.7;
  h.segments = spec.segments;
  for (int k = 0; k < spec.cycles; ++k) {
    OperatingConditions c = spec.conditions;
    double level = spec.soe_start;
    for (std::size_t s = 0; s < spec.segments.size(); ++s) {
      if (k >= spec.segments[s].first_cycle && k <= spec.segments[s].last_cycle) {
        c = spec.segments[s].conditions;
        if (s < segment_levels.size()) level = segment_levels[s];
      }
    }
    const double target = level + spec.soe_slope * k + (spec.soe_noise > 0 ? noise(rng) : 0.0);
    const double capacity = spec.capacity_start_Ah - spec.capacity_fade_Ah * k;
    h.cycles.push_back(make_cycle(k, target, capacity, c, spec.samples_per_phase));
  }
  h.acquired_range = std::pair{0, spec.cycles - 1};
  return h;
}

inline void write_battery(const std::filesystem::path& dir, const SyntheticSpec& spec,
                          const std::vector<double>& segment_levels = {}) {
  std::filesystem::create_directories(dir);
  const auto h = make_history(spec, segment_levels);
  std::ofstream(dir / (spec.id + ".csv"), std::ios::binary) << serialize_history(h);
  std::ofstream(dir / (spec.id + ".json"), std::ios::binary)
      << serialize_metadata(make_metadata(spec));
}

// The fixture set used by the CLI and acceptance tests: two constant-condition
// batteries sharing temperature and cutoff but not current, and one battery
// with three condition segments separated by a skipped jump cycle.
inline void write_fixture_set(const std::filesystem::path& dir) {
  SyntheticSpec a;
  a.id = "SYN01";
  a.conditions = {24.0, 2.0, 2.2, 1.5};
  a.soe_start = 0.87;
  a.seed = 11;
  write_battery(dir, a);

  SyntheticSpec b;
  b.id = "SYN02";
  b.conditions = {24.0, 4.0, 2.2, 1.5};
  b.soe_start = 0.74;
  b.cycles = 24;
  b.seed = 12;
  write_battery(dir, b);

  SyntheticSpec c;
  c.id = "SYN03";
  c.cycles = 40;
  c.soe_slope = -0.0002;
  c.seed = 13;
  c.conditions = {24.0, 4.0, 2.2, 1.5};
  c.segments = {{"24C-4A", 0, 9, {24.0, 4.0, 2.2, 1.5}},
                {"43C-1A", 11, 24, {43.0, 1.0, 2.2, 1.5}},
                {"43C-2A", 25, 38, {43.0, 2.0, 2.2, 1.5}}};
  write_battery(dir, c, {0.74, 0.90, 0.86});
}

}  // namespace soe::testing
