// soe - battery energy-efficiency analysis from charge/discharge telemetry.
//
// Usage:
//   soe analyze  --input DIR --out DIR [options]
//   soe plotdata --input DIR --out FILE --kind trajectory|fitted|range|factor
//                [--factor temperature|current|cutoff] [options]
//   soe summary  --input DIR [--out FILE] [--format text|csv] [options]
//
// Exit codes: 0 success, 1 partial (some batteries failed), 2 fatal.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "soe/soe.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitFatal = 2;

struct CommonOptions {
  std::string input;
  std::string integration = "left";
  double significance = 0.05;
  bool no_clean = false;
  std::string segments;
  unsigned threads = 0;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--input", o.input, "Directory of <stem>.csv / <stem>.json pairs")
      ->required()
      ->check(CLI::ExistingDirectory);
  cmd->add_option("--integration", o.integration, "Power integration rule")
      ->check(CLI::IsMember({"left", "trapezoid"}))
      ->capture_default_str();
  cmd->add_option("--significance", o.significance, "MK significance level for a trend")
      ->check(CLI::Range(1e-12, 0.10))
      ->capture_default_str();
  cmd->add_flag("--no-clean", o.no_clean, "Skip the cycle cleaning rules");
  cmd->add_option("--segments", o.segments, "Segments file overriding metadata segments")
      ->check(CLI::ExistingFile);
  cmd->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
}

struct AnalysisHandle {
  soe_analysis* ptr = nullptr;
  ~AnalysisHandle() { soe_analysis_free(ptr); }
};

struct OwnedString {
  char* ptr = nullptr;
  ~OwnedString() { soe_string_free(ptr); }
};

int report_fatal(const char* what) {
  std::cerr << "soe: " << what << ": " << soe_last_error() << "\n";
  return kExitFatal;
}

// Runs the analysis and prints per-battery failures. Returns false on a fatal
// error.
bool run_analysis(const CommonOptions& o, AnalysisHandle& out) {
  soe_config cfg;
  soe_config_init(&cfg);
  cfg.integration = o.integration == "trapezoid" ? SOE_INTEGRATION_TRAPEZOID : SOE_INTEGRATION_LEFT;
  cfg.significance = o.significance;
  cfg.clean = o.no_clean ? 0 : 1;
  cfg.segments_path = o.segments.empty() ? nullptr : o.segments.c_str();
  cfg.threads = o.threads;

  if (soe_analyze_dir(o.input.c_str(), &cfg, &out.ptr) != SOE_OK) {
    report_fatal("analysis failed");
    return false;
  }
  const size_t errors = soe_analysis_error_count(out.ptr);
  for (size_t i = 0; i < errors; ++i)
    std::cerr << "soe: " << soe_analysis_error_source(out.ptr, i) << ": "
              << soe_analysis_error_message(out.ptr, i) << "\n";
  if (soe_analysis_report_count(out.ptr) == 0) {
    std::cerr << "soe: no battery could be analysed\n";
    return false;
  }
  return true;
}

int outcome(const AnalysisHandle& a) {
  return soe_analysis_error_count(a.ptr) == 0 ? kExitOk : kExitPartial;
}

soe_summary_format summary_format(const std::string& f) {
  return f == "csv" ? SOE_SUMMARY_CSV : SOE_SUMMARY_TEXT;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Battery state-of-efficiency analysis"};
  app.require_subcommand(1);
  app.set_version_flag("--version", soe_version());

  CommonOptions common;
  std::string out;
  std::string format = "text";

  auto* analyze = app.add_subcommand("analyze", "Analyse every battery and write reports");
  add_common(analyze, common);
  analyze->add_option("--out", out, "Output directory")->required();
  analyze->add_option("--format", format, "Summary format")
      ->check(CLI::IsMember({"text", "csv"}))
      ->capture_default_str();

  std::string kind;
  std::string factor;
  auto* plotdata = app.add_subcommand("plotdata", "Export plot-ready series");
  add_common(plotdata, common);
  plotdata->add_option("--out", out, "Output file")->required();
  plotdata->add_option("--kind", kind, "Series kind")
      ->required()
      ->check(CLI::IsMember({"trajectory", "fitted", "range", "factor"}));
  plotdata->add_option("--factor", factor, "Factor for --kind factor")
      ->check(CLI::IsMember({"temperature", "current", "cutoff"}));

  auto* summary = app.add_subcommand("summary", "Print the per-battery summary table");
  add_common(summary, common);
  summary->add_option("--out", out, "Write to this file instead of stdout");
  summary->add_option("--format", format, "Table format")
      ->check(CLI::IsMember({"text", "csv"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitFatal;
  }

  AnalysisHandle analysis;

  if (analyze->parsed()) {
    if (!run_analysis(common, analysis)) return kExitFatal;
    if (soe_analysis_write(analysis.ptr, out.c_str(), summary_format(format)) != SOE_OK)
      return report_fatal("writing outputs");
    OwnedString table;
    if (soe_analysis_summary(analysis.ptr, summary_format(format), &table.ptr) != SOE_OK)
      return report_fatal("rendering summary");
    std::cout << table.ptr;
    return outcome(analysis);
  }

  if (plotdata->parsed()) {
    if (kind == "factor" && factor.empty()) {
      std::cerr << "soe: --kind factor requires --factor\n";
      return kExitFatal;
    }
    const std::map<std::string, soe_plot_kind> kinds{{"trajectory", SOE_PLOT_TRAJECTORY},
                                                      {"fitted", SOE_PLOT_FITTED_TREND},
                                                      {"range", SOE_PLOT_RANGE},
                                                      {"factor", SOE_PLOT_FACTOR_COMPARISON}};
    const std::map<std::string, soe_factor> factors{{"temperature", SOE_FACTOR_TEMPERATURE},
                                                     {"current", SOE_FACTOR_CURRENT},
                                                     {"cutoff", SOE_FACTOR_CUTOFF}};
    if (!run_analysis(common, analysis)) return kExitFatal;
    OwnedString warnings;
    const soe_factor f = factor.empty() ? SOE_FACTOR_NONE : factors.at(factor);
    if (soe_analysis_export_plot(analysis.ptr, kinds.at(kind), f, out.c_str(), &warnings.ptr) !=
        SOE_OK)
      return report_fatal("exporting plot data");
    if (warnings.ptr) std::cerr << "soe: warning: " << warnings.ptr;
    return outcome(analysis);
  }

  if (!run_analysis(common, analysis)) return kExitFatal;
  OwnedString table;
  if (soe_analysis_summary(analysis.ptr, summary_format(format), &table.ptr) != SOE_OK)
    return report_fatal("rendering summary");
  if (out.empty()) {
    std::cout << table.ptr;
  } else {
    std::ofstream file(out, std::ios::binary);
    if (!file || !(file << table.ptr)) {
      std::cerr << "soe: cannot write " << out << "\n";
      return kExitFatal;
    }
  }
  return outcome(analysis);
}
