#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "soe/cleaning.hpp"
#include "soe/cycledata.hpp"
#include "soe/metrics.hpp"
#include "soe/trend.hpp"

namespace soe {

struct AnalysisConfig {
  IntegrationRule rule = IntegrationRule::LeftRect;
  MKOptions mk;
  bool clean = true;
  CleaningPolicy policy;  // policy.rule is overridden by `rule`
  // JSON object mapping battery_id to a segment list; replaces the segments
  // from the metadata of the batteries it names.
  std::optional<std::filesystem::path> segments_file;
  unsigned threads = 0;  // 0 = hardware concurrency
};

// Per-battery (or per-segment) result. Every number is an operation output;
// serialization only formats.
struct BatteryReport {
  std::string battery_id;
  std::optional<std::string> segment;
  OperatingConditions conditions;
  double rated_capacity_Ah = 0.0;
  std::vector<RemovedCycle> removed;  // cleaning audit plus cycles skipped by metrics
  MetricsSeries series;
  double pcc_soe_soh = 0.0;
  LinearityResult linearity;
  FitResult fit;
  std::pair<double, double> soe_range;  // lifetime_range(fit)

  std::string series_id() const;
};

struct MatrixEntry {
  std::string series_id;
  double alpha = 0.0;
  double eta = 0.0;
  double soe_low = 0.0;
  double soe_high = 0.0;
  int n_cycles = 0;
};

struct MatrixCell {
  double ambient_temp_C = 0.0;
  double discharge_current_A = 0.0;
  double cutoff_voltage_V = 0.0;
  std::vector<MatrixEntry> entries;
};

// Reports grouped by (ambient temperature, discharge current, cutoff voltage).
struct ConditionMatrix {
  std::vector<MatrixCell> cells;

  std::size_t entry_count() const;
};

struct AnalysisError {
  std::string source;
  std::string message;
};

struct Analysis {
  std::vector<BatteryReport> reports;  // sorted by series_id
  ConditionMatrix matrix;
  std::vector<AnalysisError> errors;   // sorted by source
};

// Builds one report from a prepared (cleaned and/or segmented) history.
BatteryReport build_report(const BatteryHistory& prepared, const AnalysisConfig& config);

struct BatteryOutcome {
  std::vector<BatteryReport> reports;
  std::vector<AnalysisError> errors;
};

// clean -> segment -> metrics -> trend for one parsed history. Segment
// failures are isolated; a failure before segmentation fails the battery.
BatteryOutcome analyze_history(const BatteryHistory& parsed, const AnalysisConfig& config,
                               const std::vector<Segment>* segments_override = nullptr);

ConditionMatrix build_matrix(std::span<const BatteryReport> reports);

// Runs the pipeline over every <stem>.csv / <stem>.json pair in `input_dir`.
// Battery failures become error entries; a missing directory or one without
// telemetry files throws.
Analysis analyze(const std::filesystem::path& input_dir, const AnalysisConfig& config);

enum class PlotKind { Trajectory, FittedTrend, Range, FactorComparison };
enum class Factor { Temperature, Current, Cutoff };

struct PlotExport {
  std::string text;  // delimited file content, header included
  std::vector<std::string> warnings;
};

// Columns: `series_id,t,value` (Trajectory, FittedTrend), `series_id,low,high`
// (Range), `group_id,series_id,factor_value,t,value` (FactorComparison).
// FactorComparison keeps groups where the other two factors are equal and the
// chosen factor takes at least two values; with none it warns and emits only
// the header.
PlotExport export_plot_series(std::span<const BatteryReport> reports, PlotKind kind,
                              std::optional<Factor> factor = std::nullopt);

enum class SummaryFormat { Text, Csv };

std::string_view verdict_label(TrendClass c);

std::string render_summary(std::span<const BatteryReport> reports,
                           SummaryFormat format = SummaryFormat::Text);

std::string report_json(const BatteryReport& report);
std::string matrix_json(const ConditionMatrix& matrix);
std::string errors_json(std::span<const AnalysisError> errors);

// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// out_dir/reports/<series>.json, matrix.json, errors.json, summary.{txt,csv}.
void write_outputs(const Analysis& analysis, const std::filesystem::path& out_dir,
                   SummaryFormat summary_format = SummaryFormat::Text);

std::string file_stem_for(std::string_view series_id);

}  // namespace soe
