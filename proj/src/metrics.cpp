#include "soe/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "soe/error.hpp"

namespace soe {

namespace {

constexpr double kSecondsPerHour = 3600.0;

void require_integrable(const PhaseTrace& trace) {
  if (trace.samples.size() < 2)
    throw Error(ErrorCode::Domain, "degenerate trace");
  for (std::size_t i = 1; i < trace.samples.size(); ++i)
    if (!(trace.samples[i].time_s > trace.samples[i - 1].time_s))
      throw Error(ErrorCode::Domain, "degenerate trace: time not strictly increasing");
}

template <class Integrand>
double integrate(const PhaseTrace& trace, IntegrationRule rule, Integrand f) {
  require_integrable(trace);
  const auto& s = trace.samples;
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    const double dt = s[i + 1].time_s - s[i].time_s;
    if (rule == IntegrationRule::LeftRect)
      sum += f(s[i]) * dt;
    else
      sum += 0.5 * (f(s[i]) + f(s[i + 1])) * dt;
  }
  return sum;
}

}  // namespace

std::string_view to_string(IntegrationRule rule) {
  return rule == IntegrationRule::LeftRect ? "left" : "trapezoid";
}

double integrate_power(const PhaseTrace& trace, IntegrationRule rule) {
  return integrate(trace, rule, [](const Sample& s) { return s.voltage_V * s.current_A; });
}

double integrate_charge(const PhaseTrace& trace, IntegrationRule rule) {
  return integrate(trace, rule, [](const Sample& s) { return s.current_A; }) /
         kSecondsPerHour;
}

CycleMetrics compute_cycle_metrics(const CycleRecord& cycle, double rated_capacity_Ah,
                                   IntegrationRule rule) {
  if (!(rated_capacity_Ah > 0.0))
    throw Error(ErrorCode::InvalidArgument, "rated capacity must be positive");

  CycleMetrics m;
  m.e_charged_J = integrate_power(cycle.charge, rule);
  m.e_discharged_J = integrate_power(cycle.discharge, rule);
  if (!(m.e_charged_J > 0.0))
    throw Error(ErrorCode::Domain, "zero-energy charge phase");
  m.e_dissipated_J = m.e_charged_J - m.e_discharged_J;
  m.soe = m.e_discharged_J / m.e_charged_J;

  m.charge_capacity_Ah = integrate_charge(cycle.charge, rule);
  m.discharge_capacity_Ah = integrate_charge(cycle.discharge, rule);
  // Positive energy implies positive charge flow, so the division is safe.
  m.ce = m.discharge_capacity_Ah / m.charge_capacity_Ah;
  m.soh = m.discharge_capacity_Ah / rated_capacity_Ah;
  return m;
}

std::vector<double> MetricsSeries::soe() const {
  std::vector<double> v;
  v.reserve(points.size());
  for (const auto& p : points) v.push_back(p.metrics.soe);
  return v;
}

std::vector<double> MetricsSeries::soh() const {
  std::vector<double> v;
  v.reserve(points.size());
  for (const auto& p : points) v.push_back(p.metrics.soh);
  return v;
}

std::vector<double> MetricsSeries::t() const {
  std::vector<double> v;
  v.reserve(points.size());
  for (const auto& p : points) v.push_back(static_cast<double>(p.t));
  return v;
}

MetricsSeries compute_series(const BatteryHistory& h, IntegrationRule rule) {
  MetricsSeries series;
  series.battery_id = h.battery_id;
  int t = 0;
  for (const auto& cycle : h.cycles) {
    try {
      auto m = compute_cycle_metrics(cycle, h.rated_capacity_Ah, rule);
      series.points.push_back({++t, cycle.cycle_index, m});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Domain) throw;
      series.skipped.push_back({cycle.cycle_index, {e.what()}});
    }
  }
  return series;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw Error(ErrorCode::InvalidArgument, "pearson: series lengths differ");
  if (x.size() < 2)
    throw Error(ErrorCode::InvalidArgument, "pearson: need at least two points");

  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;

  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
  };
  const bool x_const = constant(x);
  const bool y_const = constant(y);
  if (x_const && y_const)
    throw Error(ErrorCode::Domain, "undefined correlation");
  if (x_const || y_const) return 0.0;

  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

}  // namespace soe
