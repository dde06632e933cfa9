#include <doctest.h>

#include <algorithm>
#include <random>

#include "soe/error.hpp"
#include "soe/metrics.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace soe;

namespace {

PhaseTrace constant_trace(Phase kind, double v, double i, int n, double dt = 1.0) {
  PhaseTrace p{kind, {}};
  for (int k = 0; k < n; ++k) p.samples.push_back({k * dt, v, i});
  return p;
}

PhaseTrace random_trace(std::mt19937& rng, int n) {
  // Time steps are multiples of 1/64 s so that integer shifts are exact.
  std::uniform_real_distribution<double> v(2.0, 4.2), cur(0.5, 4.0);
  PhaseTrace p{Phase::Discharge, {}};
  double t = 0.0;
  for (int k = 0; k < n; ++k) {
    p.samples.push_back({t, v(rng), cur(rng)});
    t += static_cast<double>(1 + rng() % 1920) / 64.0;
  }
  return p;
}

bool rel_close(double a, double b, double tol) {
  return std::fabs(a - b) <= tol * std::max(std::fabs(a), std::fabs(b));
}

}  // namespace

TEST_CASE("integrate_power closed forms") {
  auto flat = constant_trace(Phase::Charge, 4.0, 2.0, 10);
  CHECK(integrate_power(flat) == 72.0);
  CHECK(integrate_power(flat, IntegrationRule::Trapezoid) == 72.0);

  PhaseTrace ramp{Phase::Charge, {{0.0, 0.0, 1.0}, {1.0, 1.0, 1.0}}};
  CHECK(integrate_power(ramp, IntegrationRule::LeftRect) == 0.0);
  CHECK(integrate_power(ramp, IntegrationRule::Trapezoid) == 0.5);

  CHECK_THROWS_WITH_AS(integrate_power(constant_trace(Phase::Charge, 4, 2, 1)),
                       "degenerate trace", Error);
  PhaseTrace stuck{Phase::Charge, {{0, 4, 2}, {5, 4, 2}, {5, 4, 2}}};
  CHECK_THROWS_AS(integrate_power(stuck), Error);
}

TEST_CASE("integrate_charge closed forms") {
  CHECK(integrate_charge(constant_trace(Phase::Discharge, 3.5, 2.0, 2, 3600.0)) == 2.0);
  CHECK(integrate_charge(constant_trace(Phase::Discharge, 3.5, 1.0, 2, 1800.0)) == 0.5);
  CHECK(integrate_charge(constant_trace(Phase::Discharge, 3.5, 1.0, 19, 100.0)) ==
        doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("integrate_power matches the sample-by-sample oracle") {
  std::mt19937 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    auto p = random_trace(rng, 2 + trial * 7);
    CHECK(rel_close(integrate_power(p), oracle::energy_left(p), 1e-9));
  }
}

TEST_CASE("property: LeftRect and Trapezoid on monotone voltage") {
  // For a non-increasing power profile the left sum over-estimates and the
  // trapezoid lies below it; for non-decreasing power the order flips.
  std::mt19937 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    auto p = random_trace(rng, 3 + trial % 50);
    for (auto& s : p.samples) s.current_A = 2.0;
    std::sort(p.samples.begin(), p.samples.end(),
              [](const Sample& a, const Sample& b) { return a.voltage_V > b.voltage_V; });
    double t = 0;
    for (auto& s : p.samples) {
      s.time_s = t;
      t += 1.0 + (rng() % 100) / 10.0;
    }
    const double left = integrate_power(p, IntegrationRule::LeftRect);
    const double trap = integrate_power(p, IntegrationRule::Trapezoid);
    CHECK(left >= trap);
    // |left - trap| = 1/2 sum |dP| dt <= 1/2 (P_max - P_min) max dt
    double max_dt = 0;
    for (std::size_t i = 1; i < p.samples.size(); ++i)
      max_dt = std::max(max_dt, p.samples[i].time_s - p.samples[i - 1].time_s);
    const double span =
        (p.samples.front().voltage_V - p.samples.back().voltage_V) * 2.0;
    CHECK(left - trap <= 0.5 * span * max_dt * (1 + 1e-12));

    std::reverse(p.samples.begin(), p.samples.end());
    double t2 = 0;
    for (std::size_t i = 0; i < p.samples.size(); ++i) {
      p.samples[i].time_s = t2;
      t2 += 1.0 + static_cast<double>(i % 5);
    }
    CHECK(integrate_power(p, IntegrationRule::LeftRect) <=
          integrate_power(p, IntegrationRule::Trapezoid));
  }
}

TEST_CASE("compute_cycle_metrics") {
  SUBCASE("85 J out of 100 J") {
    CycleRecord c;
    c.charge = constant_trace(Phase::Charge, 4.0, 2.5, 2, 10.0);       // 100 J
    c.discharge = constant_trace(Phase::Discharge, 3.4, 2.5, 2, 10.0);  // 85 J
    auto m = compute_cycle_metrics(c, 2.0);
    CHECK(m.e_charged_J == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(m.e_discharged_J == doctest::Approx(85.0).epsilon(1e-12));
    CHECK(m.soe == doctest::Approx(0.85).epsilon(1e-12));
    CHECK(m.e_dissipated_J == doctest::Approx(15.0).epsilon(1e-12));
    CHECK(m.ce == 1.0);
    CHECK(m.soh == doctest::Approx(25.0 / 3600.0 / 2.0).epsilon(1e-12));
    CHECK(m.e_charged_Wh() == doctest::Approx(100.0 / 3600.0));
  }

  SUBCASE("zero charged energy") {
    CycleRecord c;
    c.charge = constant_trace(Phase::Charge, 4.0, 0.0, 5);
    c.discharge = constant_trace(Phase::Discharge, 3.4, 2.0, 5);
    CHECK_THROWS_WITH_AS(compute_cycle_metrics(c, 2.0), "zero-energy charge phase", Error);
  }

  SUBCASE("synthetic cycles hit their SOE target") {
    const OperatingConditions cond{24, 2, 2.7, 1.5};
    for (double target : {0.6, 0.75, 0.88, 0.99}) {
      auto m = compute_cycle_metrics(testing::make_cycle(1, target, 1.8, cond, 40), 2.0);
      CHECK(m.soe == doctest::Approx(target).epsilon(1e-12));
      CHECK(m.discharge_capacity_Ah == doctest::Approx(1.8).epsilon(1e-12));
      CHECK(m.soh == doctest::Approx(0.9).epsilon(1e-12));
    }
  }
}

TEST_CASE("property: SOE invariant to current scaling and time shift") {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> scale(0.1, 10.0), shift(-1e4, 1e5);
  for (int trial = 0; trial < 100; ++trial) {
    CycleRecord c;
    c.charge = random_trace(rng, 10 + trial);
    c.charge.kind = Phase::Charge;
    c.discharge = random_trace(rng, 10 + trial);
    const double base = compute_cycle_metrics(c, 2.0).soe;

    auto scaled = c;
    const double k = scale(rng);
    for (auto* p : {&scaled.charge, &scaled.discharge})
      for (auto& s : p->samples) s.current_A *= k;
    CHECK(rel_close(compute_cycle_metrics(scaled, 2.0).soe, base, 1e-12));

    auto shifted = c;
    const double dc = std::floor(shift(rng)), dd = std::floor(shift(rng)) + 1e5;
    for (auto& s : shifted.charge.samples) s.time_s += dc;
    for (auto& s : shifted.discharge.samples) s.time_s += dd;
    CHECK(rel_close(compute_cycle_metrics(shifted, 2.0).soe, base, 1e-12));
  }
}

TEST_CASE("compute_series") {
  testing::SyntheticSpec spec;
  spec.cycles = 4;
  auto h = testing::make_history(spec);
  reindex(h);
  auto s = compute_series(h);
  REQUIRE(s.points.size() == 4);
  CHECK(s.t() == std::vector<double>{1, 2, 3, 4});
  CHECK(s.skipped.empty());

  for (auto& smp : h.cycles[2].charge.samples) smp.current_A = 0.0;
  s = compute_series(h);
  REQUIRE(s.points.size() == 3);
  CHECK(s.t() == std::vector<double>{1, 2, 3});
  CHECK(s.points[2].cycle_index == 3);
  REQUIRE(s.skipped.size() == 1);
  CHECK(s.skipped[0].cycle_index == 2);
}

TEST_CASE("pearson") {
  const std::vector<double> x{1, 2, 3};
  CHECK(pearson(x, std::vector<double>{2, 4, 6}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pearson(x, std::vector<double>{3, 2, 1}) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(std::fabs(pearson(x, std::vector<double>{1, 3, 2}) - 0.5) <= 1e-12);

  CHECK_THROWS_WITH_AS(pearson(std::vector<double>{2, 2, 2}, std::vector<double>{5, 5, 5}),
                       "undefined correlation", Error);
  CHECK(pearson(x, std::vector<double>{5, 5, 5}) == 0.0);
  CHECK_THROWS_AS(pearson(x, std::vector<double>{1, 2}), Error);
  CHECK_THROWS_AS(pearson(std::vector<double>{1}, std::vector<double>{1}), Error);
}

TEST_CASE("property: pearson bounds, symmetry and affine invariance") {
  std::mt19937 rng(8);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 60;
    std::vector<double> x(n), y(n), ya(n);
    for (int i = 0; i < n; ++i) {
      x[i] = g(rng);
      y[i] = 0.3 * x[i] + g(rng);
      ya[i] = 7.5 * y[i] - 3.0;
    }
    const double r = pearson(x, y);
    CHECK(r >= -1.0);
    CHECK(r <= 1.0);
    CHECK(r == doctest::Approx(pearson(y, x)).epsilon(1e-12));
    CHECK(r == doctest::Approx(pearson(x, ya)).epsilon(1e-9));
    CHECK(r == doctest::Approx(oracle::pearson_naive(x, y)).epsilon(1e-9));
  }
}
