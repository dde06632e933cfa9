#include "soe/trend.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "soe/error.hpp"

namespace soe {

namespace {

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x))
      throw Error(ErrorCode::InvalidArgument, std::string(what) + ": non-finite value");
}

// Fenwick tree over ranks 0..size-1 counting inserted elements.
class RankCounter {
 public:
  explicit RankCounter(std::size_t size) : tree_(size + 1, 0) {}

  void add(std::size_t rank) {
    for (std::size_t i = rank + 1; i < tree_.size(); i += i & (~i + 1)) ++tree_[i];
  }

  // Number of inserted elements with rank < `rank`.
  long long below(std::size_t rank) const {
    long long sum = 0;
    for (std::size_t i = rank; i > 0; i -= i & (~i + 1)) sum += tree_[i];
    return sum;
  }

 private:
  std::vector<long long> tree_;
};

long long tie_term(long long q) { return q * (q - 1) * (2 * q + 5); }

}  // namespace

DiffSeries first_difference(std::span<const double> series, std::string source_id) {
  if (series.size() < 2)
    throw Error(ErrorCode::InvalidArgument, "first_difference: need at least 2 values");
  DiffSeries d;
  d.source_id = std::move(source_id);
  d.values.reserve(series.size() - 1);
  for (std::size_t i = 0; i + 1 < series.size(); ++i)
    d.values.push_back(series[i + 1] - series[i]);
  return d;
}

std::string_view to_string(TrendClass c) {
  switch (c) {
    case TrendClass::TrendPresent: return "trend";
    case TrendClass::NoTrend: return "no-trend";
    case TrendClass::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

double normal_two_sided_p(double z) {
  // 2 (1 - Phi(|z|)) = erfc(|z| / sqrt 2), without cancellation in the tail.
  return std::clamp(std::erfc(std::fabs(z) / std::sqrt(2.0)), 0.0, 1.0);
}

TrendClass classify(double p, const MKOptions& options) {
  if (!(options.significance > 0.0 && options.significance <= options.no_trend_above &&
        options.no_trend_above < 1.0))
    throw Error(ErrorCode::InvalidArgument,
                "MK thresholds must satisfy 0 < significance <= no_trend_above < 1");
  if (p < options.significance) return TrendClass::TrendPresent;
  if (p > options.no_trend_above) return TrendClass::NoTrend;
  return TrendClass::Inconclusive;
}

MKResult mk_test(std::span<const double> series, const MKOptions& options) {
  if (series.size() < 3)
    throw Error(ErrorCode::InvalidArgument, "mk_test: need at least 3 values");
  require_finite(series, "mk_test");
  if (!(options.tie_epsilon >= 0.0))
    throw Error(ErrorCode::InvalidArgument, "mk_test: tie_epsilon must be non-negative");

  const std::size_t n = series.size();
  MKResult r;
  r.n = static_cast<int>(n);

  // Dense ranks by value; equal (or epsilon-close) values share a rank.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return series[a] < series[b]; });
  std::vector<std::size_t> rank(n);
  std::size_t current = 0;
  std::size_t group_start = 0;
  auto close_group = [&](std::size_t end) {
    const auto size = static_cast<int>(end - group_start);
    if (size >= 2) r.tie_groups.push_back({series[order[group_start]], size});
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && series[order[i]] - series[order[i - 1]] > options.tie_epsilon) {
      close_group(i);
      group_start = i;
      ++current;
    }
    rank[order[i]] = current;
  }
  close_group(n);
  const std::size_t distinct = current + 1;

  // S = sum over i < j of sgn(x_j - x_i), accumulated left to right.
  RankCounter seen(distinct);
  long long s = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const long long less = seen.below(rank[j]);
    const long long less_or_equal = seen.below(rank[j] + 1);
    const long long greater = static_cast<long long>(j) - less_or_equal;
    s += less - greater;
    seen.add(rank[j]);
  }
  r.s_stat = s;

  const auto nn = static_cast<long long>(n);
  long long numerator = tie_term(nn);
  for (const auto& g : r.tie_groups) numerator -= tie_term(g.multiplicity);
  r.var_s = static_cast<double>(numerator) / 18.0;

  if (r.var_s <= 0.0) {
    r.z_mk = 0.0;
    r.p_two_sided = 1.0;
    r.classification = TrendClass::NoTrend;
    return r;
  }

  const double sd = std::sqrt(r.var_s);
  if (s > 0)
    r.z_mk = static_cast<double>(s - 1) / sd;
  else if (s < 0)
    r.z_mk = static_cast<double>(s + 1) / sd;
  r.p_two_sided = normal_two_sided_p(r.z_mk);
  r.classification = classify(r.p_two_sided, options);
  return r;
}

FitResult ols_fit(std::span<const double> t, std::span<const double> y) {
  if (t.size() != y.size())
    throw Error(ErrorCode::InvalidArgument, "ols_fit: t and y lengths differ");
  if (t.size() < 2) throw Error(ErrorCode::InvalidArgument, "ols_fit: need at least 2 points");
  require_finite(t, "ols_fit");
  require_finite(y, "ols_fit");

  const double n = static_cast<double>(t.size());
  const double t_mean = std::accumulate(t.begin(), t.end(), 0.0) / n;
  const double y_mean = std::accumulate(y.begin(), y.end(), 0.0) / n;

  double stt = 0.0, sty = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double dt = t[i] - t_mean;
    stt += dt * dt;
    sty += dt * (y[i] - y_mean);
  }
  if (std::all_of(t.begin(), t.end(), [&](double v) { return v == t.front(); }) || stt == 0.0)
    throw Error(ErrorCode::Domain, "degenerate design");

  FitResult fit;
  fit.alpha = sty / stt;
  fit.eta = y_mean - fit.alpha * t_mean;
  fit.n = static_cast<int>(t.size());
  fit.residuals.reserve(t.size());
  for (std::size_t i = 0; i < t.size(); ++i)
    fit.residuals.push_back(y[i] - (fit.alpha * t[i] + fit.eta));

  const auto [t_min, t_max] = std::minmax_element(t.begin(), t.end());
  const double at_min = fit.alpha * *t_min + fit.eta;
  const double at_max = fit.alpha * *t_max + fit.eta;
  fit.soe_range = std::minmax(at_min, at_max);
  return fit;
}

FitResult ols_fit(const MetricsSeries& series) {
  const auto t = series.t();
  const auto y = series.soe();
  return ols_fit(t, y);
}

std::pair<double, double> lifetime_range(const FitResult& fit) {
  const double start = fit.eta;
  const double end = fit.alpha * fit.n + fit.eta;
  return std::minmax(start, end);
}

LinearityResult verify_linearity(std::span<const double> series, const MKOptions& options,
                                 std::string source_id) {
  if (series.size() < 4)
    throw Error(ErrorCode::InvalidArgument, "verify_linearity: need at least 4 values");
  LinearityResult out;
  out.diff = first_difference(series, std::move(source_id));
  out.mk = mk_test(out.diff.values, options);
  out.linear = out.mk.classification == TrendClass::NoTrend;
  return out;
}

}  // namespace soe
