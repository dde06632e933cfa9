#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "soe/metrics.hpp"

namespace soe {

struct DiffSeries {
  std::string source_id;
  std::vector<double> values;  // values[i] = input[i + 1] - input[i]
};

DiffSeries first_difference(std::span<const double> series, std::string source_id = {});

enum class TrendClass { TrendPresent, NoTrend, Inconclusive };

std::string_view to_string(TrendClass c);

struct TieGroup {
  double value = 0.0;  // smallest member of the group
  int multiplicity = 0;
};

// Decision thresholds for the two-sided Mann-Kendall p-value:
// p < significance -> TrendPresent, p > no_trend_above -> NoTrend, otherwise
// Inconclusive. `tie_epsilon` > 0 merges values closer than epsilon (chained
// over the sorted values) into one tie group; 0 means exact equality.
struct MKOptions {
  double significance = 0.05;
  double no_trend_above = 0.10;
  double tie_epsilon = 0.0;
};

struct MKResult {
  long long s_stat = 0;
  double var_s = 0.0;
  double z_mk = 0.0;
  double p_two_sided = 1.0;
  int n = 0;
  std::vector<TieGroup> tie_groups;  // groups with multiplicity >= 2
  TrendClass classification = TrendClass::NoTrend;
};

// Mann-Kendall trend test with tie-corrected variance and continuity
// correction z = (S -+ 1) / sqrt(Var S). Requires n >= 3. When every value is
// tied the variance is 0; the result is then S = 0, z = 0, p = 1, NoTrend.
MKResult mk_test(std::span<const double> series, const MKOptions& options = {});

TrendClass classify(double p_two_sided, const MKOptions& options);

// Two-sided standard normal tail probability 2 (1 - Phi(|z|)).
double normal_two_sided_p(double z);

struct FitResult {
  double alpha = 0.0;  // slope per cycle
  double eta = 0.0;    // intercept, the fitted efficiency at t = 0
  std::vector<double> residuals;
  int n = 0;
  std::pair<double, double> soe_range;  // (min, max) of the fitted values at t_min and t_max
};

// Least-squares line y = alpha t + eta. Throws Error(Domain,
// "degenerate design") when all t coincide.
FitResult ols_fit(std::span<const double> t, std::span<const double> y);
FitResult ols_fit(const MetricsSeries& series);

// Fitted line over the whole test, from t = 0 (eta, the initial efficiency) to
// t = n, as (low, high).
std::pair<double, double> lifetime_range(const FitResult& fit);

struct LinearityResult {
  DiffSeries diff;
  MKResult mk;
  bool linear = false;  // true iff the differenced series shows NoTrend
};

// First-differences the series and runs mk_test on the differences. Requires
// at least 4 points.
LinearityResult verify_linearity(std::span<const double> series,
                                 const MKOptions& options = {},
                                 std::string source_id = {});

}  // namespace soe
