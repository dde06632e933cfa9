#include "soe/cycledata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "numfmt.hpp"
#include "soe/error.hpp"

namespace soe {

namespace {

constexpr std::string_view kHeader =
    "battery_id,cycle_index,phase,time_s,voltage_V,current_A";

using ordered_json = nlohmann::ordered_json;

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::Parse, "line " + std::to_string(line) + ": " + what);
}

[[noreturn]] void meta_fail(const std::string& what) {
  throw Error(ErrorCode::Parse, "metadata: " + what);
}

double number_field(const ordered_json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) meta_fail(std::string("missing key '") + key + "'");
  if (!it->is_number()) meta_fail(std::string("key '") + key + "' is not a number");
  return it->get<double>();
}

int int_field(const ordered_json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) meta_fail(std::string("missing key '") + key + "'");
  if (!it->is_number_integer()) meta_fail(std::string("key '") + key + "' is not an integer");
  return it->get<int>();
}

OperatingConditions conditions_from(const ordered_json& obj) {
  if (!obj.is_object()) meta_fail("conditions must be an object");
  OperatingConditions c;
  c.ambient_temp_C = number_field(obj, "ambient_temp_C");
  c.discharge_current_A = number_field(obj, "discharge_current_A");
  c.cutoff_voltage_V = number_field(obj, "cutoff_voltage_V");
  c.charge_current_A = number_field(obj, "charge_current_A");
  return c;
}

ordered_json conditions_to(const OperatingConditions& c) {
  ordered_json j;
  j["ambient_temp_C"] = c.ambient_temp_C;
  j["discharge_current_A"] = c.discharge_current_A;
  j["cutoff_voltage_V"] = c.cutoff_voltage_V;
  j["charge_current_A"] = c.charge_current_A;
  return j;
}

std::vector<Segment> segments_from(const ordered_json& arr) {
  if (!arr.is_array()) meta_fail("'segments' must be an array");
  std::vector<Segment> out;
  for (const auto& s : arr) {
    if (!s.is_object()) meta_fail("segment must be an object");
    Segment seg;
    auto label = s.find("label");
    if (label == s.end() || !label->is_string()) meta_fail("segment without string 'label'");
    seg.label = label->get<std::string>();
    seg.first_cycle = int_field(s, "first_cycle");
    seg.last_cycle = int_field(s, "last_cycle");
    auto sc = s.find("conditions");
    if (sc == s.end()) meta_fail("segment without 'conditions'");
    seg.conditions = conditions_from(*sc);
    out.push_back(std::move(seg));
  }
  return out;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::string_view to_string(Phase phase) {
  return phase == Phase::Charge ? "charge" : "discharge";
}

std::string_view to_string(Anomaly anomaly) {
  switch (anomaly) {
    case Anomaly::EmptyPhase: return "empty-phase";
    case Anomaly::NonMonotonicTime: return "non-monotonic-time";
    case Anomaly::IncompleteDischarge: return "incomplete-discharge";
    case Anomaly::NonphysicalEfficiency: return "nonphysical-efficiency";
    case Anomaly::ZeroEnergyCharge: return "zero-energy-charge";
    case Anomaly::EfficiencyAboveUnity: return "efficiency-above-unity";
  }
  return "unknown";
}

std::optional<std::pair<int, int>> acquired_range(const BatteryHistory& h) {
  if (h.acquired_range) return h.acquired_range;
  if (h.cycles.empty()) return std::nullopt;
  return std::pair{h.cycles.front().cycle_index, h.cycles.back().cycle_index};
}

void validate(const OperatingConditions& c, double max_charge_voltage_V) {
  if (!(c.discharge_current_A > 0.0))
    throw Error(ErrorCode::Domain, "discharge_current_A must be positive");
  if (!(c.cutoff_voltage_V > 0.0 && c.cutoff_voltage_V < max_charge_voltage_V))
    throw Error(ErrorCode::Domain,
                "cutoff_voltage_V must lie in (0, " +
                    detail::shortest(max_charge_voltage_V) + ")");
  if (!(c.charge_current_A >= 0.0))
    throw Error(ErrorCode::Domain, "charge_current_A must be non-negative");
  if (!std::isfinite(c.ambient_temp_C))
    throw Error(ErrorCode::Domain, "ambient_temp_C must be finite");
}

BatteryMetadata parse_metadata(std::string_view json_text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    meta_fail(e.what());
  }
  if (!doc.is_object()) meta_fail("document must be an object");

  BatteryMetadata meta;
  auto id = doc.find("battery_id");
  if (id == doc.end() || !id->is_string() || id->get<std::string>().empty())
    meta_fail("missing or empty 'battery_id'");
  meta.battery_id = id->get<std::string>();
  meta.rated_capacity_Ah = number_field(doc, "rated_capacity_Ah");
  meta.rated_voltage_V = number_field(doc, "rated_voltage_V");
  if (!(meta.rated_capacity_Ah > 0.0)) meta_fail("rated_capacity_Ah must be positive");
  if (!(meta.rated_voltage_V > 0.0)) meta_fail("rated_voltage_V must be positive");
  if (doc.contains("max_charge_voltage_V"))
    meta.max_charge_voltage_V = number_field(doc, "max_charge_voltage_V");

  auto cond = doc.find("conditions");
  if (cond == doc.end()) meta_fail("missing key 'conditions'");
  meta.conditions = conditions_from(*cond);

  if (auto it = doc.find("condition_overrides"); it != doc.end()) {
    if (!it->is_array()) meta_fail("'condition_overrides' must be an array");
    for (const auto& o : *it) {
      ConditionOverride ov;
      ov.first_cycle = int_field(o, "first_cycle");
      ov.last_cycle = int_field(o, "last_cycle");
      if (ov.first_cycle > ov.last_cycle) meta_fail("override with first_cycle > last_cycle");
      auto oc = o.find("conditions");
      if (oc == o.end()) meta_fail("override without 'conditions'");
      ov.conditions = conditions_from(*oc);
      meta.overrides.push_back(ov);
    }
  }

  if (auto it = doc.find("segments"); it != doc.end()) meta.segments = segments_from(*it);

  try {
    validate(meta.conditions, meta.max_charge_voltage_V);
    for (const auto& ov : meta.overrides) validate(ov.conditions, meta.max_charge_voltage_V);
    for (const auto& seg : meta.segments) validate(seg.conditions, meta.max_charge_voltage_V);
  } catch (const Error& e) {
    meta_fail(e.what());
  }
  return meta;
}

std::vector<Segment> parse_segment_list(std::string_view json_text,
                                        double max_charge_voltage_V) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    meta_fail(e.what());
  }
  auto segments = segments_from(doc);
  try {
    for (const auto& seg : segments) validate(seg.conditions, max_charge_voltage_V);
  } catch (const Error& e) {
    meta_fail(e.what());
  }
  return segments;
}

std::string serialize_metadata(const BatteryMetadata& meta) {
  ordered_json doc;
  doc["battery_id"] = meta.battery_id;
  doc["rated_capacity_Ah"] = meta.rated_capacity_Ah;
  doc["rated_voltage_V"] = meta.rated_voltage_V;
  doc["max_charge_voltage_V"] = meta.max_charge_voltage_V;
  doc["conditions"] = conditions_to(meta.conditions);
  if (!meta.overrides.empty()) {
    auto& arr = doc["condition_overrides"] = ordered_json::array();
    for (const auto& ov : meta.overrides) {
      ordered_json o;
      o["first_cycle"] = ov.first_cycle;
      o["last_cycle"] = ov.last_cycle;
      o["conditions"] = conditions_to(ov.conditions);
      arr.push_back(std::move(o));
    }
  }
  if (!meta.segments.empty()) {
    auto& arr = doc["segments"] = ordered_json::array();
    for (const auto& seg : meta.segments) {
      ordered_json s;
      s["label"] = seg.label;
      s["first_cycle"] = seg.first_cycle;
      s["last_cycle"] = seg.last_cycle;
      s["conditions"] = conditions_to(seg.conditions);
      arr.push_back(std::move(s));
    }
  }
  return doc.dump(2) + "\n";
}

BatteryHistory parse_history(std::istream& telemetry, const BatteryMetadata& meta) {
  BatteryHistory h;
  h.battery_id = meta.battery_id;
  h.rated_capacity_Ah = meta.rated_capacity_Ah;
  h.rated_voltage_V = meta.rated_voltage_V;

  std::string line;
  std::size_t line_no = 0;
  bool saw_header = false;
  Phase current_phase = Phase::Charge;
  bool seen_charge = false;
  bool seen_discharge = false;

  while (std::getline(telemetry, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!saw_header) {
      // Tolerate a UTF-8 byte order mark on the header.
      std::string_view header = line;
      if (header.starts_with("\xEF\xBB\xBF")) header.remove_prefix(3);
      if (header != kHeader)
        parse_fail(line_no, "expected header '" + std::string(kHeader) + "'");
      saw_header = true;
      continue;
    }
    if (line.empty()) continue;

    auto fields = split(line, ',');
    if (fields.size() != 6)
      parse_fail(line_no, "expected 6 fields, found " + std::to_string(fields.size()));
    if (fields[0] != meta.battery_id)
      parse_fail(line_no, "battery_id '" + std::string(fields[0]) +
                              "' does not match metadata '" + meta.battery_id + "'");

    int cycle_index = 0;
    if (!detail::parse_int(fields[1], cycle_index) || cycle_index < 0)
      parse_fail(line_no, "invalid cycle_index '" + std::string(fields[1]) + "'");

    Phase phase;
    if (fields[2] == "charge") {
      phase = Phase::Charge;
    } else if (fields[2] == "discharge") {
      phase = Phase::Discharge;
    } else {
      parse_fail(line_no, "unknown phase label '" + std::string(fields[2]) + "'");
    }

    Sample s;
    if (!detail::parse_double(fields[3], s.time_s) || !std::isfinite(s.time_s) || s.time_s < 0.0)
      parse_fail(line_no, "invalid time_s '" + std::string(fields[3]) + "'");
    if (!detail::parse_double(fields[4], s.voltage_V) || !std::isfinite(s.voltage_V) ||
        s.voltage_V <= 0.0)
      parse_fail(line_no, "invalid voltage_V '" + std::string(fields[4]) + "'");
    if (!detail::parse_double(fields[5], s.current_A) || !std::isfinite(s.current_A) ||
        s.current_A < 0.0)
      parse_fail(line_no, "invalid current_A '" + std::string(fields[5]) +
                              "' (expected a non-negative magnitude)");

    if (h.cycles.empty() || h.cycles.back().cycle_index != cycle_index) {
      if (!h.cycles.empty() && cycle_index < h.cycles.back().cycle_index)
        parse_fail(line_no, "cycle_index " + std::to_string(cycle_index) +
                                " follows " + std::to_string(h.cycles.back().cycle_index));
      CycleRecord rec;
      rec.cycle_index = cycle_index;
      h.cycles.push_back(std::move(rec));
      seen_charge = seen_discharge = false;
    } else if (phase != current_phase) {
      if ((phase == Phase::Charge && seen_charge) ||
          (phase == Phase::Discharge && seen_discharge))
        parse_fail(line_no, "rows of cycle " + std::to_string(cycle_index) + " phase '" +
                                std::string(to_string(phase)) + "' are not contiguous");
    }
    current_phase = phase;
    (phase == Phase::Charge ? seen_charge : seen_discharge) = true;

    auto& rec = h.cycles.back();
    auto& trace = phase == Phase::Charge ? rec.charge : rec.discharge;
    if (!trace.samples.empty() && s.time_s <= trace.samples.back().time_s)
      rec.flags.insert(Anomaly::NonMonotonicTime);
    trace.samples.push_back(s);
  }

  if (!saw_header) throw Error(ErrorCode::Parse, "line 1: telemetry document is empty");
  if (h.cycles.empty()) throw Error(ErrorCode::NoData, "telemetry contains no samples");

  for (auto& rec : h.cycles) {
    if (rec.charge.samples.size() < 2 || rec.discharge.samples.size() < 2)
      rec.flags.insert(Anomaly::EmptyPhase);
    rec.conditions = meta.conditions;
    for (const auto& ov : meta.overrides)
      if (rec.cycle_index >= ov.first_cycle && rec.cycle_index <= ov.last_cycle)
        rec.conditions = ov.conditions;
  }
  h.acquired_range = std::pair{h.cycles.front().cycle_index, h.cycles.back().cycle_index};

  if (!meta.segments.empty()) {
    validate_segments(meta.segments, *h.acquired_range);
    h.segments = meta.segments;
  }
  return h;
}

BatteryHistory parse_history(std::string_view telemetry, const BatteryMetadata& meta) {
  std::istringstream in{std::string(telemetry)};
  return parse_history(in, meta);
}

BatteryHistory load_history(const std::filesystem::path& telemetry_csv,
                            const std::filesystem::path& metadata_json) {
  std::ifstream meta_in(metadata_json, std::ios::binary);
  if (!meta_in) throw Error(ErrorCode::Io, "cannot open " + metadata_json.string());
  std::stringstream meta_text;
  meta_text << meta_in.rdbuf();

  BatteryMetadata meta;
  try {
    meta = parse_metadata(meta_text.str());
  } catch (const Error& e) {
    throw Error(e.code(), metadata_json.filename().string() + ": " + e.what());
  }

  std::ifstream csv_in(telemetry_csv, std::ios::binary);
  if (!csv_in) throw Error(ErrorCode::Io, "cannot open " + telemetry_csv.string());
  try {
    return parse_history(csv_in, meta);
  } catch (const Error& e) {
    throw Error(e.code(), telemetry_csv.filename().string() + ": " + e.what());
  }
}

void serialize_history(const BatteryHistory& h, std::ostream& out) {
  out << kHeader << '\n';
  auto emit = [&](int cycle_index, const PhaseTrace& trace) {
    for (const auto& s : trace.samples) {
      out << h.battery_id << ',' << cycle_index << ',' << to_string(trace.kind) << ','
          << detail::shortest(s.time_s) << ',' << detail::shortest(s.voltage_V) << ','
          << detail::shortest(s.current_A) << '\n';
    }
  };
  for (const auto& rec : h.cycles) {
    emit(rec.cycle_index, rec.charge);
    emit(rec.cycle_index, rec.discharge);
  }
}

std::string serialize_history(const BatteryHistory& h) {
  std::ostringstream out;
  serialize_history(h, out);
  return out.str();
}

void validate_segments(const std::vector<Segment>& segments, std::pair<int, int> range) {
  std::set<std::string> labels;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& seg = segments[i];
    if (seg.label.empty())
      throw Error(ErrorCode::InvalidArgument, "segment label must not be empty");
    if (!labels.insert(seg.label).second)
      throw Error(ErrorCode::InvalidArgument, "duplicate segment label '" + seg.label + "'");
    if (seg.first_cycle > seg.last_cycle)
      throw Error(ErrorCode::InvalidArgument,
                  "segment '" + seg.label + "' has first_cycle > last_cycle");
    if (seg.first_cycle < range.first || seg.last_cycle > range.second)
      throw Error(ErrorCode::InvalidArgument,
                  "segment '" + seg.label + "' [" + std::to_string(seg.first_cycle) + ", " +
                      std::to_string(seg.last_cycle) + "] outside cycle range [" +
                      std::to_string(range.first) + ", " + std::to_string(range.second) + "]");
    if (i > 0 && seg.first_cycle <= segments[i - 1].last_cycle)
      throw Error(ErrorCode::InvalidArgument,
                  "segment '" + seg.label + "' overlaps or precedes '" +
                      segments[i - 1].label + "'");
  }
}

void reindex(BatteryHistory& h) {
  int t = 0;
  for (auto& rec : h.cycles) rec.t = ++t;
}

std::vector<BatteryHistory> segment_history(const BatteryHistory& h,
                                            const std::vector<Segment>& boundaries) {
  if (boundaries.empty())
    throw Error(ErrorCode::InvalidArgument, "no segments given");
  auto range = acquired_range(h);
  if (!range) throw Error(ErrorCode::NoData, "cannot segment an empty history");
  validate_segments(boundaries, *range);

  std::vector<BatteryHistory> out;
  out.reserve(boundaries.size());
  for (const auto& seg : boundaries) {
    BatteryHistory sub;
    sub.battery_id = h.battery_id;
    sub.rated_capacity_Ah = h.rated_capacity_Ah;
    sub.rated_voltage_V = h.rated_voltage_V;
    sub.acquired_range = std::pair{seg.first_cycle, seg.last_cycle};
    sub.segment_label = seg.label;
    for (const auto& rec : h.cycles) {
      if (rec.cycle_index < seg.first_cycle || rec.cycle_index > seg.last_cycle) continue;
      auto copy = rec;
      copy.conditions = seg.conditions;
      sub.cycles.push_back(std::move(copy));
    }
    for (const auto& removed : h.audit)
      if (removed.cycle_index >= seg.first_cycle && removed.cycle_index <= seg.last_cycle)
        sub.audit.push_back(removed);
    reindex(sub);
    out.push_back(std::move(sub));
  }
  return out;
}

}  // namespace soe
