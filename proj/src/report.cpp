#include "soe/report.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "numfmt.hpp"
#include "soe/error.hpp"

namespace soe {

namespace {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr std::size_t kMinTrendCycles = 4;

ordered_json conditions_json(const OperatingConditions& c) {
  ordered_json j;
  j["ambient_temp_C"] = c.ambient_temp_C;
  j["discharge_current_A"] = c.discharge_current_A;
  j["cutoff_voltage_V"] = c.cutoff_voltage_V;
  j["charge_current_A"] = c.charge_current_A;
  return j;
}

std::map<std::string, std::vector<Segment>> load_segments_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open segments file " + path.string());
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::Parse, "segments file: " + std::string(e.what()));
  }
  if (!doc.is_object()) throw Error(ErrorCode::Parse, "segments file: expected an object");

  std::map<std::string, std::vector<Segment>> out;
  for (const auto& [battery, list] : doc.items()) {
    try {
      out[battery] = parse_segment_list(list.dump());
    } catch (const Error& e) {
      throw Error(ErrorCode::Parse, "segments file, battery " + battery + ": " + e.what());
    }
  }
  return out;
}

double factor_value(const OperatingConditions& c, Factor f) {
  switch (f) {
    case Factor::Temperature: return c.ambient_temp_C;
    case Factor::Current: return c.discharge_current_A;
    case Factor::Cutoff: return c.cutoff_voltage_V;
  }
  return 0.0;
}

std::string_view factor_name(Factor f) {
  switch (f) {
    case Factor::Temperature: return "ambient_temp_C";
    case Factor::Current: return "discharge_current_A";
    case Factor::Cutoff: return "cutoff_voltage_V";
  }
  return "";
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace

std::string BatteryReport::series_id() const {
  return segment ? battery_id + "/" + *segment : battery_id;
}

std::size_t ConditionMatrix::entry_count() const {
  std::size_t n = 0;
  for (const auto& cell : cells) n += cell.entries.size();
  return n;
}

BatteryReport build_report(const BatteryHistory& prepared, const AnalysisConfig& config) {
  BatteryReport r;
  r.battery_id = prepared.battery_id;
  r.segment = prepared.segment_label;
  r.rated_capacity_Ah = prepared.rated_capacity_Ah;
  r.removed = prepared.audit;

  r.series = compute_series(prepared, config.rule);
  for (const auto& skipped : r.series.skipped) r.removed.push_back(skipped);
  std::sort(r.removed.begin(), r.removed.end(),
            [](const RemovedCycle& a, const RemovedCycle& b) { return a.cycle_index < b.cycle_index; });

  if (r.series.points.size() < kMinTrendCycles)
    throw Error(ErrorCode::NoData, "need at least " + std::to_string(kMinTrendCycles) +
                                       " usable cycles, have " +
                                       std::to_string(r.series.points.size()));

  // Conditions of the first analysed cycle; segments carry uniform conditions.
  const int first_index = r.series.points.front().cycle_index;
  for (const auto& c : prepared.cycles)
    if (c.cycle_index == first_index) r.conditions = c.conditions;

  const auto soe = r.series.soe();
  const auto soh = r.series.soh();
  r.pcc_soe_soh = pearson(soe, soh);
  r.linearity = verify_linearity(soe, config.mk, r.series_id());
  r.fit = ols_fit(r.series);
  r.soe_range = lifetime_range(r.fit);
  return r;
}

BatteryOutcome analyze_history(const BatteryHistory& parsed, const AnalysisConfig& config,
                               const std::vector<Segment>* segments_override) {
  BatteryOutcome out;
  BatteryHistory prepared;
  if (config.clean) {
    auto policy = config.policy;
    policy.rule = config.rule;
    prepared = clean_history(parsed, policy);
  } else {
    prepared = parsed;
    prepared.acquired_range = acquired_range(parsed);
    reindex(prepared);
  }

  const auto& segments = segments_override ? *segments_override : parsed.segments;
  if (segments.empty()) {
    out.reports.push_back(build_report(prepared, config));
    return out;
  }

  for (const auto& sub : segment_history(prepared, segments)) {
    const std::string source = sub.battery_id + "/" + sub.segment_label.value_or("");
    try {
      out.reports.push_back(build_report(sub, config));
    } catch (const Error& e) {
      out.errors.push_back({source, e.what()});
    }
  }
  return out;
}

ConditionMatrix build_matrix(std::span<const BatteryReport> reports) {
  using Key = std::tuple<double, double, double>;
  std::map<Key, std::vector<MatrixEntry>> grouped;
  for (const auto& r : reports) {
    Key key{r.conditions.ambient_temp_C, r.conditions.discharge_current_A,
            r.conditions.cutoff_voltage_V};
    grouped[key].push_back({r.series_id(), r.fit.alpha, r.fit.eta, r.soe_range.first,
                            r.soe_range.second, static_cast<int>(r.series.points.size())});
  }
  ConditionMatrix m;
  for (auto& [key, entries] : grouped) {
    std::sort(entries.begin(), entries.end(),
              [](const MatrixEntry& a, const MatrixEntry& b) { return a.series_id < b.series_id; });
    m.cells.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), std::move(entries)});
  }
  return m;
}

Analysis analyze(const fs::path& input_dir, const AnalysisConfig& config) {
  classify(1.0, config.mk);  // rejects bad thresholds before any battery is read
  std::error_code ec;
  if (!fs::is_directory(input_dir, ec))
    throw Error(ErrorCode::Io, "input directory not found: " + input_dir.string());

  std::vector<fs::path> telemetry;
  for (const auto& entry : fs::directory_iterator(input_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".csv")
      telemetry.push_back(entry.path());
  std::sort(telemetry.begin(), telemetry.end());
  if (telemetry.empty())
    throw Error(ErrorCode::NoData, "no telemetry files (*.csv) in " + input_dir.string());

  std::map<std::string, std::vector<Segment>> segment_overrides;
  if (config.segments_file) segment_overrides = load_segments_file(*config.segments_file);

  // Batteries are independent; workers fill fixed slots so the merge order
  // does not depend on scheduling.
  std::vector<BatteryOutcome> outcomes(telemetry.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < telemetry.size(); i = next++) {
      const auto& csv = telemetry[i];
      const std::string stem = csv.stem().string();
      auto meta = csv;
      meta.replace_extension(".json");
      try {
        if (!fs::exists(meta)) throw Error(ErrorCode::Io, "missing metadata file " + meta.filename().string());
        const auto history = load_history(csv, meta);
        auto it = segment_overrides.find(history.battery_id);
        outcomes[i] = analyze_history(history, config,
                                      it == segment_overrides.end() ? nullptr : &it->second);
      } catch (const std::exception& e) {
        outcomes[i].errors.push_back({stem, e.what()});
      }
    }
  };
  unsigned threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(telemetry.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  Analysis a;
  for (auto& o : outcomes) {
    for (auto& r : o.reports) a.reports.push_back(std::move(r));
    for (auto& e : o.errors) a.errors.push_back(std::move(e));
  }
  std::stable_sort(a.reports.begin(), a.reports.end(),
                   [](const BatteryReport& x, const BatteryReport& y) { return x.series_id() < y.series_id(); });
  std::stable_sort(a.errors.begin(), a.errors.end(),
                   [](const AnalysisError& x, const AnalysisError& y) { return x.source < y.source; });
  a.matrix = build_matrix(a.reports);
  return a;
}

PlotExport export_plot_series(std::span<const BatteryReport> reports, PlotKind kind,
                              std::optional<Factor> factor) {
  if (reports.empty()) throw Error(ErrorCode::NoData, "no reports to export");
  PlotExport out;
  std::ostringstream os;
  using detail::shortest;

  switch (kind) {
    case PlotKind::Trajectory:
      os << "series_id,t,value\n";
      for (const auto& r : reports)
        for (const auto& p : r.series.points)
          os << r.series_id() << ',' << p.t << ',' << shortest(p.metrics.soe) << '\n';
      break;

    case PlotKind::FittedTrend:
      os << "series_id,t,value\n";
      for (const auto& r : reports)
        for (const auto& p : r.series.points)
          os << r.series_id() << ',' << p.t << ',' << shortest(r.fit.alpha * p.t + r.fit.eta)
             << '\n';
      break;

    case PlotKind::Range:
      os << "series_id,low,high\n";
      for (const auto& r : reports)
        os << r.series_id() << ',' << shortest(r.soe_range.first) << ','
           << shortest(r.soe_range.second) << '\n';
      break;

    case PlotKind::FactorComparison: {
      if (!factor)
        throw Error(ErrorCode::InvalidArgument, "factor comparison needs a factor");
      const Factor f = *factor;
      os << "group_id,series_id," << factor_name(f) << ",t,value\n";

      // Key on the two factors held fixed, in declaration order.
      std::vector<Factor> fixed;
      for (Factor g : {Factor::Temperature, Factor::Current, Factor::Cutoff})
        if (g != f) fixed.push_back(g);
      std::map<std::pair<double, double>, std::vector<const BatteryReport*>> groups;
      for (const auto& r : reports)
        groups[{factor_value(r.conditions, fixed[0]), factor_value(r.conditions, fixed[1])}]
            .push_back(&r);

      bool any = false;
      for (auto& [key, members] : groups) {
        std::set<double> levels;
        for (const auto* r : members) levels.insert(factor_value(r->conditions, f));
        if (levels.size() < 2) continue;
        any = true;
        std::stable_sort(members.begin(), members.end(), [&](const BatteryReport* a, const BatteryReport* b) {
          const double va = factor_value(a->conditions, f);
          const double vb = factor_value(b->conditions, f);
          return va != vb ? va < vb : a->series_id() < b->series_id();
        });
        const std::string group_id = std::string(factor_name(fixed[0])) + "=" + shortest(key.first) +
                                     ";" + std::string(factor_name(fixed[1])) + "=" +
                                     shortest(key.second);
        for (const auto* r : members)
          for (const auto& p : r->series.points)
            os << group_id << ',' << r->series_id() << ','
               << shortest(factor_value(r->conditions, f)) << ',' << p.t << ','
               << shortest(p.metrics.soe) << '\n';
      }
      if (!any)
        out.warnings.push_back("no group varies " + std::string(factor_name(f)) +
                               " with the other two factors fixed");
      break;
    }
  }
  out.text = os.str();
  return out;
}

std::string_view verdict_label(TrendClass c) {
  switch (c) {
    case TrendClass::NoTrend: return "linear";
    case TrendClass::TrendPresent: return "nonlinear";
    case TrendClass::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

std::string render_summary(std::span<const BatteryReport> reports, SummaryFormat format) {
  std::vector<const BatteryReport*> sorted;
  for (const auto& r : reports) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(), [](const BatteryReport* a, const BatteryReport* b) {
    return a->series_id() < b->series_id();
  });

  using detail::sig6;
  std::vector<std::vector<std::string>> rows;
  for (const auto* r : sorted) {
    rows.push_back({r->series_id(), std::to_string(r->series.points.size()), sig6(r->pcc_soe_soh),
                    sig6(r->linearity.mk.p_two_sided),
                    std::string(verdict_label(r->linearity.mk.classification)), sig6(r->fit.alpha),
                    sig6(r->fit.eta), sig6(r->soe_range.first), sig6(r->soe_range.second)});
  }

  std::ostringstream os;
  if (format == SummaryFormat::Csv) {
    os << "battery_id,n_cycles,pcc,mk_p,verdict,alpha,eta,soe_low,soe_high\n";
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
      os << '\n';
    }
    return os.str();
  }

  const std::vector<std::string> header{"battery_id", "n_cycles", "PCC",  "MK_p",
                                        "verdict",    "alpha",    "eta", "SOE_range"};
  std::vector<std::vector<std::string>> table;
  table.push_back(header);
  for (const auto& row : rows) {
    auto cells = std::vector<std::string>(row.begin(), row.begin() + 7);
    cells.push_back("[" + row[7] + ", " + row[8] + "]");
    table.push_back(std::move(cells));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : table)
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  for (const auto& row : table) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i)
      line += i + 1 < row.size() ? pad(row[i], width[i] + 2) : row[i];
    os << line << '\n';
  }
  return os.str();
}

std::string report_json(const BatteryReport& r) {
  ordered_json j;
  j["series_id"] = r.series_id();
  j["battery_id"] = r.battery_id;
  j["segment"] = r.segment ? ordered_json(*r.segment) : ordered_json(nullptr);
  j["conditions"] = conditions_json(r.conditions);
  j["rated_capacity_Ah"] = r.rated_capacity_Ah;
  j["n_cycles"] = r.series.points.size();

  auto& removed = j["removed_cycles"] = ordered_json::array();
  for (const auto& rc : r.removed)
    removed.push_back({{"cycle_index", rc.cycle_index}, {"reasons", rc.reasons}});

  j["pcc_soe_soh"] = r.pcc_soe_soh;

  const auto& mk = r.linearity.mk;
  ordered_json mkj;
  mkj["input"] = "first_difference_soe";
  mkj["n"] = mk.n;
  mkj["s"] = mk.s_stat;
  mkj["var_s"] = mk.var_s;
  mkj["z"] = mk.z_mk;
  mkj["p_two_sided"] = mk.p_two_sided;
  auto& ties = mkj["tie_groups"] = ordered_json::array();
  for (const auto& g : mk.tie_groups) ties.push_back({g.value, g.multiplicity});
  mkj["classification"] = to_string(mk.classification);
  j["mann_kendall"] = std::move(mkj);
  j["linear_trend"] = r.linearity.linear;

  ordered_json fit;
  fit["alpha"] = r.fit.alpha;
  fit["eta"] = r.fit.eta;
  fit["n"] = r.fit.n;
  fit["fitted_range"] = {r.fit.soe_range.first, r.fit.soe_range.second};
  fit["residuals"] = r.fit.residuals;
  j["fit"] = std::move(fit);
  j["soe_range"] = {r.soe_range.first, r.soe_range.second};

  auto& series = j["series"] = ordered_json::array();
  for (const auto& p : r.series.points) {
    const auto& m = p.metrics;
    ordered_json pj;
    pj["t"] = p.t;
    pj["cycle_index"] = p.cycle_index;
    pj["e_charged_J"] = m.e_charged_J;
    pj["e_discharged_J"] = m.e_discharged_J;
    pj["e_dissipated_J"] = m.e_dissipated_J;
    pj["e_charged_Wh"] = m.e_charged_Wh();
    pj["e_discharged_Wh"] = m.e_discharged_Wh();
    pj["e_dissipated_Wh"] = m.e_dissipated_Wh();
    pj["soe"] = m.soe;
    pj["charge_capacity_Ah"] = m.charge_capacity_Ah;
    pj["discharge_capacity_Ah"] = m.discharge_capacity_Ah;
    pj["ce"] = m.ce;
    pj["soh"] = m.soh;
    series.push_back(std::move(pj));
  }
  return j.dump(2) + "\n";
}

std::string matrix_json(const ConditionMatrix& matrix) {
  ordered_json j;
  auto& cells = j["cells"] = ordered_json::array();
  for (const auto& c : matrix.cells) {
    ordered_json cj;
    cj["ambient_temp_C"] = c.ambient_temp_C;
    cj["discharge_current_A"] = c.discharge_current_A;
    cj["cutoff_voltage_V"] = c.cutoff_voltage_V;
    auto& entries = cj["entries"] = ordered_json::array();
    for (const auto& e : c.entries) {
      ordered_json ej;
      ej["series_id"] = e.series_id;
      ej["alpha"] = e.alpha;
      ej["eta"] = e.eta;
      ej["soe_low"] = e.soe_low;
      ej["soe_high"] = e.soe_high;
      ej["n_cycles"] = e.n_cycles;
      entries.push_back(std::move(ej));
    }
    cells.push_back(std::move(cj));
  }
  j["entry_count"] = matrix.entry_count();
  return j.dump(2) + "\n";
}

std::string errors_json(std::span<const AnalysisError> errors) {
  auto j = ordered_json::array();
  for (const auto& e : errors) j.push_back({{"source", e.source}, {"message", e.message}});
  return j.dump(2) + "\n";
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::Io, "cannot rename onto " + path.string());
  }
}

std::string file_stem_for(std::string_view series_id) {
  std::string out(series_id);
  for (char& c : out) {
    const bool keep = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
                      c == '-' || c == '_' || c == '.';
    if (!keep) c = '_';
  }
  return out;
}

void write_outputs(const Analysis& analysis, const fs::path& out_dir, SummaryFormat summary_format) {
  std::error_code ec;
  fs::create_directories(out_dir / "reports", ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + (out_dir / "reports").string());
  for (const auto& r : analysis.reports)
    write_file_atomic(out_dir / "reports" / (file_stem_for(r.series_id()) + ".json"), report_json(r));
  write_file_atomic(out_dir / "matrix.json", matrix_json(analysis.matrix));
  write_file_atomic(out_dir / "errors.json", errors_json(analysis.errors));
  write_file_atomic(out_dir / (summary_format == SummaryFormat::Csv ? "summary.csv" : "summary.txt"),
                    render_summary(analysis.reports, summary_format));
}

}  // namespace soe
