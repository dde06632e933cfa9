#include "soe/soe.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include "soe/cleaning.hpp"
#include "soe/error.hpp"
#include "soe/report.hpp"

struct soe_history {
  soe::BatteryHistory history;
};

struct soe_analysis {
  soe::Analysis analysis;
  std::vector<std::string> ids;
};

namespace {

thread_local std::string g_last_error;

soe_status to_status(soe::ErrorCode code) {
  switch (code) {
    case soe::ErrorCode::InvalidArgument: return SOE_E_INVALID_ARGUMENT;
    case soe::ErrorCode::Parse: return SOE_E_PARSE;
    case soe::ErrorCode::Io: return SOE_E_IO;
    case soe::ErrorCode::Domain: return SOE_E_DOMAIN;
    case soe::ErrorCode::NoData: return SOE_E_NO_DATA;
  }
  return SOE_E_INTERNAL;
}

soe_status fail(soe_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

// Runs `body`, translating exceptions into status codes.
template <class F>
soe_status guarded(F&& body) noexcept {
  try {
    body();
    return SOE_OK;
  } catch (const soe::Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(SOE_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SOE_E_INTERNAL, e.what());
  } catch (...) {
    return fail(SOE_E_INTERNAL, "unknown error");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

soe::IntegrationRule to_rule(soe_integration rule) {
  switch (rule) {
    case SOE_INTEGRATION_LEFT: return soe::IntegrationRule::LeftRect;
    case SOE_INTEGRATION_TRAPEZOID: return soe::IntegrationRule::Trapezoid;
  }
  throw soe::Error(soe::ErrorCode::InvalidArgument, "unknown integration rule");
}

soe_trend_class to_c(soe::TrendClass c) {
  switch (c) {
    case soe::TrendClass::TrendPresent: return SOE_TREND_PRESENT;
    case soe::TrendClass::NoTrend: return SOE_TREND_NONE;
    case soe::TrendClass::Inconclusive: return SOE_TREND_INCONCLUSIVE;
  }
  return SOE_TREND_INCONCLUSIVE;
}

soe::MKOptions mk_options(const soe_config* c) {
  soe::MKOptions o;
  if (c) {
    o.significance = c->significance;
    o.no_trend_above = c->no_trend_above;
    o.tie_epsilon = c->tie_epsilon;
  }
  return o;
}

soe::AnalysisConfig analysis_config(const soe_config* c) {
  soe::AnalysisConfig cfg;
  if (!c) return cfg;
  cfg.rule = to_rule(c->integration);
  cfg.mk = mk_options(c);
  cfg.clean = c->clean != 0;
  cfg.policy.cutoff_tolerance_V = c->cutoff_tolerance_V;
  cfg.policy.max_soe = c->max_soe;
  cfg.policy.rule = cfg.rule;
  if (c->segments_path && *c->segments_path) cfg.segments_file = c->segments_path;
  cfg.threads = c->threads;
  return cfg;
}

void require(bool ok, const char* what) {
  if (!ok) throw soe::Error(soe::ErrorCode::InvalidArgument, what);
}

soe::PhaseTrace make_trace(const double* t, const double* v, const double* i, size_t n) {
  soe::PhaseTrace trace;
  trace.samples.reserve(n);
  for (size_t k = 0; k < n; ++k) trace.samples.push_back({t[k], v ? v[k] : 1.0, i[k]});
  return trace;
}

}  // namespace

extern "C" {

const char* soe_version(void) { return "1.0.0"; }

const char* soe_last_error(void) { return g_last_error.c_str(); }

const char* soe_status_string(soe_status status) {
  switch (status) {
    case SOE_OK: return "ok";
    case SOE_E_INVALID_ARGUMENT: return "invalid argument";
    case SOE_E_PARSE: return "parse error";
    case SOE_E_IO: return "i/o error";
    case SOE_E_DOMAIN: return "domain error";
    case SOE_E_NO_DATA: return "no data";
    case SOE_E_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void soe_string_free(char* s) { std::free(s); }

void soe_config_init(soe_config* config) {
  if (!config) return;
  const soe::AnalysisConfig defaults;
  config->integration = SOE_INTEGRATION_LEFT;
  config->significance = defaults.mk.significance;
  config->no_trend_above = defaults.mk.no_trend_above;
  config->tie_epsilon = defaults.mk.tie_epsilon;
  config->clean = 1;
  config->cutoff_tolerance_V = defaults.policy.cutoff_tolerance_V;
  config->max_soe = defaults.policy.max_soe;
  config->segments_path = nullptr;
  config->threads = 0;
}

soe_status soe_history_load(const char* telemetry_csv, const char* metadata_json,
                            soe_history** out) {
  return guarded([&] {
    require(telemetry_csv && metadata_json && out, "null argument");
    auto h = std::make_unique<soe_history>();
    h->history = soe::load_history(telemetry_csv, metadata_json);
    *out = h.release();
  });
}

void soe_history_free(soe_history* h) { delete h; }

soe_status soe_history_cycle_count(const soe_history* h, size_t* out) {
  return guarded([&] {
    require(h && out, "null argument");
    *out = h->history.cycles.size();
  });
}

soe_status soe_history_removed_count(const soe_history* h, size_t* out) {
  return guarded([&] {
    require(h && out, "null argument");
    *out = h->history.audit.size();
  });
}

soe_status soe_history_clean(const soe_history* h, const soe_config* config, soe_history** out) {
  return guarded([&] {
    require(h && out, "null argument");
    auto cfg = analysis_config(config);
    auto cleaned = std::make_unique<soe_history>();
    cleaned->history = soe::clean_history(h->history, cfg.policy);
    *out = cleaned.release();
  });
}

soe_status soe_history_cycle_metrics(const soe_history* h, size_t index, soe_integration rule,
                                     soe_cycle_metrics* out) {
  return guarded([&] {
    require(h && out, "null argument");
    require(index < h->history.cycles.size(), "cycle index out of range");
    const auto& cycle = h->history.cycles[index];
    const auto m = soe::compute_cycle_metrics(cycle, h->history.rated_capacity_Ah, to_rule(rule));
    *out = {cycle.cycle_index, cycle.t,  m.e_charged_J, m.e_discharged_J, m.e_dissipated_J, m.soe,
            m.charge_capacity_Ah, m.discharge_capacity_Ah, m.ce, m.soh};
  });
}

soe_status soe_history_write_telemetry(const soe_history* h, const char* path) {
  return guarded([&] {
    require(h && path, "null argument");
    soe::write_file_atomic(path, soe::serialize_history(h->history));
  });
}

soe_status soe_integrate_power(const double* time_s, const double* voltage_V,
                               const double* current_A, size_t n, soe_integration rule,
                               double* joules) {
  return guarded([&] {
    require(time_s && voltage_V && current_A && joules, "null argument");
    *joules = soe::integrate_power(make_trace(time_s, voltage_V, current_A, n), to_rule(rule));
  });
}

soe_status soe_integrate_charge(const double* time_s, const double* current_A, size_t n,
                                soe_integration rule, double* amp_hours) {
  return guarded([&] {
    require(time_s && current_A && amp_hours, "null argument");
    *amp_hours = soe::integrate_charge(make_trace(time_s, nullptr, current_A, n), to_rule(rule));
  });
}

soe_status soe_pearson(const double* x, const double* y, size_t n, double* out) {
  return guarded([&] {
    require(x && y && out, "null argument");
    *out = soe::pearson({x, n}, {y, n});
  });
}

soe_status soe_first_difference(const double* x, size_t n, double* out) {
  return guarded([&] {
    require(x && out, "null argument");
    const auto d = soe::first_difference({x, n});
    std::copy(d.values.begin(), d.values.end(), out);
  });
}

soe_status soe_mk_test(const double* x, size_t n, const soe_config* config, soe_mk_result* out) {
  return guarded([&] {
    require(x && out, "null argument");
    const auto r = soe::mk_test({x, n}, mk_options(config));
    *out = {r.s_stat,
            r.var_s,
            r.z_mk,
            r.p_two_sided,
            static_cast<size_t>(r.n),
            r.tie_groups.size(),
            to_c(r.classification)};
  });
}

soe_status soe_ols_fit(const double* t, const double* y, size_t n, soe_fit_result* out) {
  return guarded([&] {
    require(t && y && out, "null argument");
    const auto f = soe::ols_fit({t, n}, {y, n});
    *out = {f.alpha, f.eta, f.soe_range.first, f.soe_range.second, static_cast<size_t>(f.n)};
  });
}

soe_status soe_analyze_dir(const char* input_dir, const soe_config* config, soe_analysis** out) {
  return guarded([&] {
    require(input_dir && out, "null argument");
    auto a = std::make_unique<soe_analysis>();
    a->analysis = soe::analyze(input_dir, analysis_config(config));
    for (const auto& r : a->analysis.reports) a->ids.push_back(r.series_id());
    *out = a.release();
  });
}

void soe_analysis_free(soe_analysis* a) { delete a; }

size_t soe_analysis_report_count(const soe_analysis* a) {
  return a ? a->analysis.reports.size() : 0;
}

size_t soe_analysis_error_count(const soe_analysis* a) {
  return a ? a->analysis.errors.size() : 0;
}

const char* soe_analysis_report_id(const soe_analysis* a, size_t index) {
  if (!a || index >= a->ids.size()) return nullptr;
  return a->ids[index].c_str();
}

const char* soe_analysis_error_source(const soe_analysis* a, size_t index) {
  if (!a || index >= a->analysis.errors.size()) return nullptr;
  return a->analysis.errors[index].source.c_str();
}

const char* soe_analysis_error_message(const soe_analysis* a, size_t index) {
  if (!a || index >= a->analysis.errors.size()) return nullptr;
  return a->analysis.errors[index].message.c_str();
}

soe_status soe_analysis_report_json(const soe_analysis* a, size_t index, char** out) {
  return guarded([&] {
    require(a && out, "null argument");
    require(index < a->analysis.reports.size(), "report index out of range");
    *out = dup_string(soe::report_json(a->analysis.reports[index]));
  });
}

soe_status soe_analysis_matrix_json(const soe_analysis* a, char** out) {
  return guarded([&] {
    require(a && out, "null argument");
    *out = dup_string(soe::matrix_json(a->analysis.matrix));
  });
}

soe_status soe_analysis_summary(const soe_analysis* a, soe_summary_format format, char** out) {
  return guarded([&] {
    require(a && out, "null argument");
    *out = dup_string(soe::render_summary(
        a->analysis.reports,
        format == SOE_SUMMARY_CSV ? soe::SummaryFormat::Csv : soe::SummaryFormat::Text));
  });
}

soe_status soe_analysis_write(const soe_analysis* a, const char* out_dir, soe_summary_format format) {
  return guarded([&] {
    require(a && out_dir, "null argument");
    soe::write_outputs(a->analysis, out_dir,
                       format == SOE_SUMMARY_CSV ? soe::SummaryFormat::Csv : soe::SummaryFormat::Text);
  });
}

soe_status soe_analysis_export_plot(const soe_analysis* a, soe_plot_kind kind, soe_factor factor,
                                    const char* path, char** warnings) {
  return guarded([&] {
    require(a && path, "null argument");
    if (warnings) *warnings = nullptr;
    soe::PlotKind k;
    switch (kind) {
      case SOE_PLOT_TRAJECTORY: k = soe::PlotKind::Trajectory; break;
      case SOE_PLOT_FITTED_TREND: k = soe::PlotKind::FittedTrend; break;
      case SOE_PLOT_RANGE: k = soe::PlotKind::Range; break;
      case SOE_PLOT_FACTOR_COMPARISON: k = soe::PlotKind::FactorComparison; break;
      default: throw soe::Error(soe::ErrorCode::InvalidArgument, "unknown plot kind");
    }
    std::optional<soe::Factor> f;
    switch (factor) {
      case SOE_FACTOR_NONE: break;
      case SOE_FACTOR_TEMPERATURE: f = soe::Factor::Temperature; break;
      case SOE_FACTOR_CURRENT: f = soe::Factor::Current; break;
      case SOE_FACTOR_CUTOFF: f = soe::Factor::Cutoff; break;
      default: throw soe::Error(soe::ErrorCode::InvalidArgument, "unknown factor");
    }
    const auto exported = soe::export_plot_series(a->analysis.reports, k, f);
    soe::write_file_atomic(path, exported.text);
    if (warnings && !exported.warnings.empty()) {
      std::string joined;
      for (const auto& w : exported.warnings) joined += w + "\n";
      *warnings = dup_string(joined);
    }
  });
}

}  // extern "C"
