#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "rtsec/rng.hpp"
#include "rtsec/types.hpp"

namespace rtsec {

// Continuous-time delay distribution (seconds).
struct Delay {
  enum class Kind { exponential, fixed, uniform };
  Kind kind = Kind::exponential;
  double a = 1.0;  // rate for exponential, value for fixed, lower bound for uniform
  double b = 0.0;  // upper bound for uniform

  static Delay exponential(double rate) { return {Kind::exponential, rate, 0.0}; }
  static Delay fixed(double value) { return {Kind::fixed, value, 0.0}; }
  static Delay uniform(double lo, double hi) { return {Kind::uniform, lo, hi}; }

  double sample(Rng& rng) const;
};

struct RestartConfig {
  double period = 60.0;  // P, restart timer
  double reboot_time = 1.0;  // b
  // Also restart as soon as a compromise is detected.
  bool detection_triggered = false;

  bool operator==(const RestartConfig&) const = default;
};

struct AttackModel {
  Delay compromise = Delay::exponential(0.1);  // clean boot to compromise
  Delay detection = Delay::exponential(1.0);   // compromise to detection
  double damage_rate = 1.0;                    // damage units per compromised second

  static AttackModel exponential(double lambda, double mu, double damage_rate = 1.0) {
    return {Delay::exponential(lambda), Delay::exponential(mu), damage_rate};
  }
};

struct RestartMetrics {
  double cycle_length = 0.0;
  double unavailability = 0.0;
  double compromised_time = 0.0;  // per cycle
  double damage_per_cycle = 0.0;
  double damage_per_second = 0.0;
};

// Renewal cycle: reboot b, then operation until compromise, then compromised
// until the timer (P after the cycle start) or, if detection_triggered, the
// detection, whichever is first. Closed form for exponential delays only;
// throws Error otherwise.
RestartMetrics analytic_metrics(const RestartConfig& cfg, const AttackModel& atk);

struct MonteCarloResult {
  RestartMetrics mean;
  // 95% normal-approximation half-widths; ratios use the delta method.
  RestartMetrics half_width;
  std::uint64_t trials = 0;
};

// Deterministic for a given seed: trials are split into fixed-size chunks,
// each with its own derived seed, and merged in chunk order.
MonteCarloResult monte_carlo_metrics(const RestartConfig& cfg, const AttackModel& atk, std::uint64_t trials,
                                     std::uint64_t seed);

struct CurvePoint {
  double period = 0.0;
  double unavailability = 0.0;
  double expected_damage = 0.0;  // per second
  double objective = 0.0;
};

struct PeriodChoice {
  double best_period = 0.0;
  std::vector<CurvePoint> curve;
};

// Minimizes w * unavailability + (1 - w) * damage_per_second / (largest
// damage_per_second on the grid). Ties go to the larger period.
PeriodChoice optimize_period(std::span<const double> periods, const RestartConfig& base, const AttackModel& atk,
                             double weight);

void validate(const RestartConfig& cfg, const AttackModel& atk);

void write_curve_csv(std::ostream& out, std::span<const CurvePoint> curve);

}  // namespace rtsec
