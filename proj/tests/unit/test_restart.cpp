#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rtsec/restart.hpp"

using namespace rtsec;

namespace {

RestartConfig periodic(double p, double b) { return {p, b, false}; }

std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> out;
  for (double p = lo; p <= hi + 1e-9; p += step) out.push_back(p);
  return out;
}

}  // namespace

TEST_SUITE("restart") {
  TEST_CASE("limits of the compromise rate") {
    const auto slow = analytic_metrics(periodic(60, 1), AttackModel::exponential(1e-12, 1.0));
    CHECK(slow.unavailability == doctest::Approx(1.0 / 60.0));
    CHECK(slow.compromised_time == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(slow.damage_per_second == doctest::Approx(0.0).epsilon(1e-6));
    const auto fast = analytic_metrics(periodic(60, 1), AttackModel::exponential(1e6, 1.0));
    CHECK(fast.compromised_time == doctest::Approx(59.0).epsilon(1e-5));
    CHECK(fast.cycle_length == 60.0);
  }

  TEST_CASE("closed form for the periodic case") {
    const auto m = analytic_metrics(periodic(60, 1), AttackModel::exponential(0.1, 1.0, 2.0));
    const double expected = 59.0 - 10.0 * (1.0 - std::exp(-5.9));
    CHECK(m.compromised_time == doctest::Approx(expected));
    CHECK(m.damage_per_cycle == doctest::Approx(2.0 * expected));
    CHECK(m.damage_per_second == doctest::Approx(2.0 * expected / 60.0));
  }

  TEST_CASE("Monte Carlo agrees with the closed form") {
    const auto atk = AttackModel::exponential(0.1, 0.5);
    for (bool triggered : {false, true}) {
      const RestartConfig cfg{60, 1, triggered};
      const auto exact = analytic_metrics(cfg, atk);
      const auto mc = monte_carlo_metrics(cfg, atk, 1'000'000, 7);
      CHECK(mc.trials == 1'000'000);
      CHECK(std::abs(mc.mean.compromised_time - exact.compromised_time) <= 0.01 * exact.compromised_time);
      CHECK(std::abs(mc.mean.unavailability - exact.unavailability) <= 3 * mc.half_width.unavailability + 1e-12);
      CHECK(std::abs(mc.mean.damage_per_second - exact.damage_per_second) <=
            3 * mc.half_width.damage_per_second + 1e-12);
    }
  }

  TEST_CASE("Monte Carlo is reproducible and handles zero damage") {
    const RestartConfig cfg{30, 2, true};
    const AttackModel atk{Delay::uniform(1, 20), Delay::fixed(3), 0.0};
    const auto a = monte_carlo_metrics(cfg, atk, 70'000, 4);
    const auto b = monte_carlo_metrics(cfg, atk, 70'000, 4);
    CHECK(a.mean.compromised_time == b.mean.compromised_time);
    CHECK(a.mean.damage_per_second == 0.0);
    CHECK(a.mean.compromised_time > 0.0);
    CHECK_THROWS_AS(analytic_metrics(cfg, atk), Error);
  }

  TEST_CASE("fast detection removes compromised time") {
    const RestartConfig cfg{60, 1, true};
    const auto m = analytic_metrics(cfg, AttackModel::exponential(0.1, 1e9));
    CHECK(m.compromised_time == doctest::Approx(0.0).epsilon(1e-6));
    const auto mc = monte_carlo_metrics(cfg, AttackModel::exponential(0.1, 1e9), 10'000, 1);
    CHECK(mc.mean.compromised_time < 1e-6);
  }

  TEST_CASE("confidence intervals shrink with the square root of trials") {
    const RestartConfig cfg{60, 1, false};
    const auto atk = AttackModel::exponential(0.05, 1.0);
    const auto small = monte_carlo_metrics(cfg, atk, 10'000, 3);
    const auto large = monte_carlo_metrics(cfg, atk, 1'000'000, 3);
    const double ratio = small.half_width.compromised_time / large.half_width.compromised_time;
    CHECK(ratio == doctest::Approx(10.0).epsilon(0.15));
  }

  TEST_CASE("monotonicity over grids") {
    const auto atk = AttackModel::exponential(0.05, 1.0);
    double prev_u = 2.0;
    double prev_c = -1.0;
    for (double p : grid(5, 300, 5)) {
      const auto m = analytic_metrics(periodic(p, 1), atk);
      CHECK(m.unavailability < prev_u);
      CHECK(m.unavailability >= 0.0);
      CHECK(m.unavailability <= 1.0);
      CHECK(m.compromised_time >= prev_c);
      prev_u = m.unavailability;
      prev_c = m.compromised_time;
    }
    prev_u = -1.0;
    for (double b : grid(0.5, 10, 0.5)) {
      const auto m = analytic_metrics(periodic(60, b), atk);
      CHECK(m.unavailability > prev_u);
      prev_u = m.unavailability;
    }
    // Faster compromise can only lengthen the compromised part of a cycle.
    prev_c = -1.0;
    for (double lambda : grid(0.01, 2, 0.01)) {
      const auto m = analytic_metrics(periodic(60, 1), AttackModel::exponential(lambda, 1.0));
      CHECK(m.compromised_time >= prev_c);
      prev_c = m.compromised_time;
    }
  }

  TEST_CASE("optimizer cases") {
    const auto periods = grid(5, 300, 1);
    const auto atk = AttackModel::exponential(0.05, 1.0);
    CHECK(optimize_period(periods, periodic(60, 1), atk, 1.0).best_period == 300.0);
    CHECK(optimize_period(periods, periodic(60, 1), AttackModel::exponential(10.0, 1.0), 0.0).best_period == 5.0);
    const auto mid = optimize_period(periods, periodic(60, 1), atk, 0.5);
    CHECK(mid.best_period > 5.0);
    CHECK(mid.best_period < 300.0);
    CHECK(mid.curve.size() == periods.size());
    double max_damage = 0.0;
    for (const auto& pt : mid.curve) max_damage = std::max(max_damage, pt.expected_damage);
    double best = 1e300;
    for (const auto& pt : mid.curve) {
      CHECK(pt.objective == doctest::Approx(0.5 * pt.unavailability + 0.5 * pt.expected_damage / max_damage));
      best = std::min(best, pt.objective);
    }
    for (const auto& pt : mid.curve) {
      if (pt.period == mid.best_period) CHECK(pt.objective == best);
      if (pt.period > mid.best_period) CHECK(pt.objective > best);
    }
    CHECK_THROWS_AS(optimize_period(std::vector<double>{}, periodic(60, 1), atk, 0.5), Error);
  }

  TEST_CASE("invalid configurations") {
    const auto atk = AttackModel::exponential(0.1, 1.0);
    CHECK_THROWS_AS(validate(periodic(1, 1), atk), Error);
    CHECK_THROWS_AS(validate(periodic(10, 0), atk), Error);
    CHECK_THROWS_AS(validate(periodic(10, 1), AttackModel::exponential(-1, 1.0)), Error);
    CHECK_THROWS_AS(monte_carlo_metrics(periodic(10, 1), atk, 0, 1), Error);
  }

  TEST_CASE("curve CSV") {
    const std::vector<CurvePoint> curve{{10, 0.1, 0.5, 0.3}};
    std::ostringstream out;
    write_curve_csv(out, curve);
    CHECK(out.str() == "P,unavailability,expected_damage\n10,0.10000000000000001,0.5\n");
  }
}
