#pragma once

// Telemetry data model and the long-form interchange format.
//
// A battery is described by two files sharing a stem:
//   <stem>.csv   one sample per row,
//                header `battery_id,cycle_index,phase,time_s,voltage_V,current_A`
//   <stem>.json  metadata: rated values, default operating conditions,
//                optional per-range condition overrides and segment definitions.
//
// Currents are magnitudes in both phases. Time is seconds from phase start.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace soe {

enum class Phase { Charge, Discharge };

std::string_view to_string(Phase phase);

struct Sample {
  double time_s = 0.0;
  double voltage_V = 0.0;
  double current_A = 0.0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct PhaseTrace {
  Phase kind = Phase::Charge;
  std::vector<Sample> samples;

  friend bool operator==(const PhaseTrace&, const PhaseTrace&) = default;
};

struct OperatingConditions {
  double ambient_temp_C = 0.0;
  double discharge_current_A = 0.0;
  double cutoff_voltage_V = 0.0;
  double charge_current_A = 0.0;

  friend bool operator==(const OperatingConditions&,
                         const OperatingConditions&) = default;
};

enum class Anomaly {
  EmptyPhase,        // phase has fewer than two samples
  NonMonotonicTime,  // timestamps not strictly increasing within a phase
  IncompleteDischarge,
  NonphysicalEfficiency,
  ZeroEnergyCharge,
  EfficiencyAboveUnity,  // retained, SOE in (1, max_soe]; audit only
};

std::string_view to_string(Anomaly anomaly);

struct CycleRecord {
  int cycle_index = 0;  // original acquisition order
  int t = 0;            // position after cleaning/segmenting, 1-based; 0 = unassigned
  PhaseTrace charge{Phase::Charge, {}};
  PhaseTrace discharge{Phase::Discharge, {}};
  OperatingConditions conditions;
  std::set<Anomaly> flags;

  friend bool operator==(const CycleRecord&, const CycleRecord&) = default;
};

struct Segment {
  std::string label;
  int first_cycle = 0;  // inclusive, original cycle_index
  int last_cycle = 0;   // inclusive
  OperatingConditions conditions;

  friend bool operator==(const Segment&, const Segment&) = default;
};

struct ConditionOverride {
  int first_cycle = 0;
  int last_cycle = 0;
  OperatingConditions conditions;

  friend bool operator==(const ConditionOverride&,
                         const ConditionOverride&) = default;
};

struct BatteryMetadata {
  std::string battery_id;
  double rated_capacity_Ah = 0.0;
  double rated_voltage_V = 0.0;
  double max_charge_voltage_V = 4.2;
  OperatingConditions conditions;
  std::vector<ConditionOverride> overrides;
  std::vector<Segment> segments;

  friend bool operator==(const BatteryMetadata&,
                         const BatteryMetadata&) = default;
};

// A cycle removed by cleaning or segmentation, with the reasons.
struct RemovedCycle {
  int cycle_index = 0;
  std::vector<std::string> reasons;

  friend bool operator==(const RemovedCycle&, const RemovedCycle&) = default;
};

struct BatteryHistory {
  std::string battery_id;
  double rated_capacity_Ah = 0.0;
  double rated_voltage_V = 0.0;
  std::vector<CycleRecord> cycles;
  std::vector<Segment> segments;
  // Cycle-index span of the telemetry as acquired; survives cleaning so that
  // segment bounds can be validated against the original numbering.
  std::optional<std::pair<int, int>> acquired_range;
  // Set on sub-histories produced by segment_history.
  std::optional<std::string> segment_label;
  std::vector<RemovedCycle> audit;

  friend bool operator==(const BatteryHistory&,
                         const BatteryHistory&) = default;
};

// Cycle-index span of `h`: the stored acquisition range, or the span of the
// cycles present.
std::optional<std::pair<int, int>> acquired_range(const BatteryHistory& h);

void validate(const OperatingConditions& c, double max_charge_voltage_V);

BatteryMetadata parse_metadata(std::string_view json_text);
std::string serialize_metadata(const BatteryMetadata& meta);

// Reads a JSON array of {label, first_cycle, last_cycle, conditions}.
std::vector<Segment> parse_segment_list(std::string_view json_text,
                                        double max_charge_voltage_V = 4.2);

// Parses the telemetry document. Malformed rows and unknown phase labels throw
// soe::Error(Parse) naming the line; non-monotonic timestamps and short phases
// only flag the cycle.
BatteryHistory parse_history(std::istream& telemetry, const BatteryMetadata& meta);
BatteryHistory parse_history(std::string_view telemetry, const BatteryMetadata& meta);

BatteryHistory load_history(const std::filesystem::path& telemetry_csv,
                            const std::filesystem::path& metadata_json);

// Writes `h` back in the telemetry format. Doubles use the shortest
// round-trip representation, so parse(serialize(h)) reproduces every sample.
void serialize_history(const BatteryHistory& h, std::ostream& out);
std::string serialize_history(const BatteryHistory& h);

// Segment bound checks: first <= last, ordered, non-overlapping, inside `range`.
void validate_segments(const std::vector<Segment>& segments,
                       std::pair<int, int> range);

// One sub-history per segment. Cycles outside every segment (e.g. the cycle at
// a temperature jump) are dropped; each output is re-indexed from t = 1 and
// takes the segment's conditions.
std::vector<BatteryHistory> segment_history(const BatteryHistory& h,
                                            const std::vector<Segment>& boundaries);

// Assigns t = 1..n in acquisition order.
void reindex(BatteryHistory& h);

}  // namespace soe
