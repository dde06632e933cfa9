/*
 * soe.h - C interface to the battery energy-efficiency (SOE) analysis library.
 *
 * Objects are opaque handles created by soe_*_load / soe_analyze_dir and
 * released with the matching *_free function. Every fallible call returns a
 * soe_status; on failure soe_last_error() describes the problem for the
 * calling thread until the next failing call on that thread.
 *
 * Strings returned through char** out-parameters are owned by the caller and
 * must be released with soe_string_free.
 */
#ifndef SOE_SOE_H
#define SOE_SOE_H

#include <stddef.h>

#if defined(_WIN32)
#  if defined(SOE_BUILDING_LIBRARY)
#    define SOE_API __declspec(dllexport)
#  else
#    define SOE_API __declspec(dllimport)
#  endif
#else
#  define SOE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum soe_status {
  SOE_OK = 0,
  SOE_E_INVALID_ARGUMENT = 1,
  SOE_E_PARSE = 2,
  SOE_E_IO = 3,
  SOE_E_DOMAIN = 4,
  SOE_E_NO_DATA = 5,
  SOE_E_INTERNAL = 6
} soe_status;

typedef enum soe_integration {
  SOE_INTEGRATION_LEFT = 0,
  SOE_INTEGRATION_TRAPEZOID = 1
} soe_integration;

typedef enum soe_trend_class {
  SOE_TREND_PRESENT = 0,
  SOE_TREND_NONE = 1,
  SOE_TREND_INCONCLUSIVE = 2
} soe_trend_class;

typedef enum soe_plot_kind {
  SOE_PLOT_TRAJECTORY = 0,
  SOE_PLOT_FITTED_TREND = 1,
  SOE_PLOT_RANGE = 2,
  SOE_PLOT_FACTOR_COMPARISON = 3
} soe_plot_kind;

typedef enum soe_factor {
  SOE_FACTOR_NONE = -1,
  SOE_FACTOR_TEMPERATURE = 0,
  SOE_FACTOR_CURRENT = 1,
  SOE_FACTOR_CUTOFF = 2
} soe_factor;

typedef enum soe_summary_format {
  SOE_SUMMARY_TEXT = 0,
  SOE_SUMMARY_CSV = 1
} soe_summary_format;

/* Analysis settings. Initialise with soe_config_init before changing fields. */
typedef struct soe_config {
  soe_integration integration;
  double significance;       /* p below this: trend present (default 0.05) */
  double no_trend_above;     /* p above this: no trend (default 0.10) */
  double tie_epsilon;        /* 0: exact ties */
  int clean;                 /* non-zero: apply cleaning rules */
  double cutoff_tolerance_V; /* incomplete-discharge margin (default 0.1) */
  double max_soe;            /* upper SOE bound for retained cycles (default 1.02) */
  const char* segments_path; /* optional segments file, may be NULL */
  unsigned threads;          /* 0: hardware concurrency */
} soe_config;

typedef struct soe_cycle_metrics {
  int cycle_index;
  int t;
  double e_charged_J;
  double e_discharged_J;
  double e_dissipated_J;
  double soe;
  double charge_capacity_Ah;
  double discharge_capacity_Ah;
  double ce;
  double soh;
} soe_cycle_metrics;

typedef struct soe_mk_result {
  long long s;
  double var_s;
  double z;
  double p_two_sided;
  size_t n;
  size_t tie_group_count;
  soe_trend_class classification;
} soe_mk_result;

typedef struct soe_fit_result {
  double alpha;
  double eta;
  double range_low;  /* fitted value range over the observed t */
  double range_high;
  size_t n;
} soe_fit_result;

typedef struct soe_history soe_history;
typedef struct soe_analysis soe_analysis;

SOE_API const char* soe_version(void);
SOE_API const char* soe_last_error(void);
SOE_API const char* soe_status_string(soe_status status);
SOE_API void soe_string_free(char* s);
SOE_API void soe_config_init(soe_config* config);

/* ---- telemetry histories ---- */

SOE_API soe_status soe_history_load(const char* telemetry_csv, const char* metadata_json,
                                    soe_history** out);
SOE_API void soe_history_free(soe_history* h);
SOE_API soe_status soe_history_cycle_count(const soe_history* h, size_t* out);
SOE_API soe_status soe_history_removed_count(const soe_history* h, size_t* out);
/* Cleaned copy; the input is unchanged. */
SOE_API soe_status soe_history_clean(const soe_history* h, const soe_config* config,
                                     soe_history** out);
SOE_API soe_status soe_history_cycle_metrics(const soe_history* h, size_t index,
                                             soe_integration rule, soe_cycle_metrics* out);
SOE_API soe_status soe_history_write_telemetry(const soe_history* h, const char* path);

/* ---- numerical primitives ---- */

SOE_API soe_status soe_integrate_power(const double* time_s, const double* voltage_V,
                                       const double* current_A, size_t n,
                                       soe_integration rule, double* joules);
SOE_API soe_status soe_integrate_charge(const double* time_s, const double* current_A,
                                        size_t n, soe_integration rule, double* amp_hours);
SOE_API soe_status soe_pearson(const double* x, const double* y, size_t n, double* out);
/* Writes n - 1 values to `out`. */
SOE_API soe_status soe_first_difference(const double* x, size_t n, double* out);
/* `config` may be NULL for the defaults. */
SOE_API soe_status soe_mk_test(const double* x, size_t n, const soe_config* config,
                               soe_mk_result* out);
SOE_API soe_status soe_ols_fit(const double* t, const double* y, size_t n,
                               soe_fit_result* out);

/* ---- directory analysis ---- */

SOE_API soe_status soe_analyze_dir(const char* input_dir, const soe_config* config,
                                   soe_analysis** out);
SOE_API void soe_analysis_free(soe_analysis* a);
SOE_API size_t soe_analysis_report_count(const soe_analysis* a);
SOE_API size_t soe_analysis_error_count(const soe_analysis* a);
/* Borrowed strings, valid until soe_analysis_free. NULL when out of range. */
SOE_API const char* soe_analysis_report_id(const soe_analysis* a, size_t index);
SOE_API const char* soe_analysis_error_source(const soe_analysis* a, size_t index);
SOE_API const char* soe_analysis_error_message(const soe_analysis* a, size_t index);
SOE_API soe_status soe_analysis_report_json(const soe_analysis* a, size_t index, char** out);
SOE_API soe_status soe_analysis_matrix_json(const soe_analysis* a, char** out);
SOE_API soe_status soe_analysis_summary(const soe_analysis* a, soe_summary_format format,
                                        char** out);
SOE_API soe_status soe_analysis_write(const soe_analysis* a, const char* out_dir,
                                      soe_summary_format format);
/* `warnings` (may be NULL) receives newline-separated warnings or NULL. */
SOE_API soe_status soe_analysis_export_plot(const soe_analysis* a, soe_plot_kind kind,
                                            soe_factor factor, const char* path,
                                            char** warnings);

#ifdef __cplusplus
}
#endif

#endif /* SOE_SOE_H */
