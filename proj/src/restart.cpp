#include "rtsec/restart.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <ostream>
#include <string>
#include <thread>

#include "rtsec/types.hpp"

namespace rtsec {

double Delay::sample(Rng& rng) const {
  switch (kind) {
    case Kind::exponential: return rng.exponential(a);
    case Kind::fixed: return a;
    case Kind::uniform: return a + (b - a) * rng.uniform();
  }
  return a;
}

namespace {

void validate_delay(const Delay& d, const char* what) {
  const bool ok = d.kind == Delay::Kind::exponential ? d.a > 0.0
                  : d.kind == Delay::Kind::fixed     ? d.a >= 0.0
                                                     : (d.a >= 0.0 && d.b >= d.a);
  if (!ok || !std::isfinite(d.a) || !std::isfinite(d.b)) throw ValidationError(std::string("restart: invalid ") + what);
}

// E[min(tau, X)] for X ~ Exp(rate).
double truncated_mean(double rate, double tau) { return -std::expm1(-rate * tau) / rate; }

// E[min(tau, X + Y)] for independent X ~ Exp(l), Y ~ Exp(m).
double truncated_sum_mean(double l, double m, double tau) {
  if (std::abs(m - l) <= 1e-9 * std::max(l, m)) {
    return (2.0 - std::exp(-l * tau) * (2.0 + l * tau)) / l;
  }
  return (m * truncated_mean(l, tau) - l * truncated_mean(m, tau)) / (m - l);
}

struct Sums {
  double n = 0;
  double cycle = 0, cycle2 = 0;
  double comp = 0, comp2 = 0;
  double cross = 0;  // cycle * comp

  void add(const Sums& o) {
    n += o.n;
    cycle += o.cycle;
    cycle2 += o.cycle2;
    comp += o.comp;
    comp2 += o.comp2;
    cross += o.cross;
  }
};

Sums run_chunk(const RestartConfig& cfg, const AttackModel& atk, std::uint64_t count, std::uint64_t seed) {
  Rng rng(seed);
  Sums s;
  const double tau = cfg.period - cfg.reboot_time;
  for (std::uint64_t i = 0; i < count; ++i) {
    const double x = atk.compromise.sample(rng);
    double comp = 0.0;
    double up = tau;
    if (x < tau) {
      double end = tau;
      if (cfg.detection_triggered) end = std::min(tau, x + atk.detection.sample(rng));
      comp = end - x;
      up = end;
    }
    const double cycle = cfg.reboot_time + up;
    s.n += 1;
    s.cycle += cycle;
    s.cycle2 += cycle * cycle;
    s.comp += comp;
    s.comp2 += comp * comp;
    s.cross += cycle * comp;
  }
  return s;
}

constexpr std::uint64_t kChunk = 1 << 16;
constexpr double kZ95 = 1.959963984540054;

}  // namespace

void validate(const RestartConfig& cfg, const AttackModel& atk) {
  if (!(cfg.reboot_time > 0.0) || !(cfg.period > cfg.reboot_time) || !std::isfinite(cfg.period)) {
    throw ValidationError("restart: need period > reboot_time > 0");
  }
  validate_delay(atk.compromise, "compromise delay");
  validate_delay(atk.detection, "detection delay");
  if (!(atk.damage_rate >= 0.0)) throw ValidationError("restart: damage_rate must be >= 0");
}

RestartMetrics analytic_metrics(const RestartConfig& cfg, const AttackModel& atk) {
  validate(cfg, atk);
  if (atk.compromise.kind != Delay::Kind::exponential ||
      (cfg.detection_triggered && atk.detection.kind != Delay::Kind::exponential)) {
    throw Error("analytic_metrics: closed form needs exponential delays; use monte_carlo_metrics");
  }
  const double tau = cfg.period - cfg.reboot_time;
  const double l = atk.compromise.a;
  RestartMetrics m;
  double up = tau;
  if (cfg.detection_triggered) {
    up = truncated_sum_mean(l, atk.detection.a, tau);
    m.compromised_time = up - truncated_mean(l, tau);
  } else {
    m.compromised_time = tau - truncated_mean(l, tau);
  }
  m.cycle_length = cfg.reboot_time + up;
  m.unavailability = cfg.reboot_time / m.cycle_length;
  m.damage_per_cycle = atk.damage_rate * m.compromised_time;
  m.damage_per_second = m.damage_per_cycle / m.cycle_length;
  return m;
}

MonteCarloResult monte_carlo_metrics(const RestartConfig& cfg, const AttackModel& atk, std::uint64_t trials,
                                     std::uint64_t seed) {
  validate(cfg, atk);
  if (trials < 1) throw Error("monte_carlo_metrics: trials must be >= 1");
  const std::uint64_t chunks = (trials + kChunk - 1) / kChunk;
  std::vector<Sums> parts(chunks);
  const unsigned workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), 16));
  for (std::uint64_t first = 0; first < chunks; first += workers) {
    std::vector<std::future<Sums>> jobs;
    for (std::uint64_t c = first; c < std::min(chunks, first + workers); ++c) {
      const std::uint64_t count = std::min(kChunk, trials - c * kChunk);
      jobs.push_back(std::async(std::launch::async, run_chunk, std::cref(cfg), std::cref(atk), count,
                                derive_seed(seed, c)));
    }
    for (std::size_t k = 0; k < jobs.size(); ++k) parts[first + k] = jobs[k].get();
  }
  Sums s;
  for (const Sums& p : parts) s.add(p);

  const double n = s.n;
  const double mc = s.cycle / n;
  const double mx = s.comp / n;
  const double var_c = std::max(0.0, s.cycle2 / n - mc * mc);
  const double var_x = std::max(0.0, s.comp2 / n - mx * mx);
  const double cov = s.cross / n - mc * mx;
  const double b = cfg.reboot_time;

  MonteCarloResult r;
  r.trials = trials;
  r.mean.cycle_length = mc;
  r.mean.compromised_time = mx;
  r.mean.unavailability = b / mc;
  r.mean.damage_per_cycle = atk.damage_rate * mx;
  r.mean.damage_per_second = atk.damage_rate * mx / mc;

  const double se = 1.0 / std::sqrt(n);
  r.half_width.cycle_length = kZ95 * std::sqrt(var_c) * se;
  r.half_width.compromised_time = kZ95 * std::sqrt(var_x) * se;
  r.half_width.damage_per_cycle = atk.damage_rate * r.half_width.compromised_time;
  // b / C: derivative -b / C^2.
  r.half_width.unavailability = kZ95 * b * std::sqrt(var_c) / (mc * mc) * se;
  // X / C: gradient (1/C, -X/C^2).
  const double ratio = mx / mc;
  const double var_ratio = std::max(0.0, var_x - 2.0 * ratio * cov + ratio * ratio * var_c) / (mc * mc);
  r.half_width.damage_per_second = atk.damage_rate * kZ95 * std::sqrt(var_ratio) * se;
  return r;
}

PeriodChoice optimize_period(std::span<const double> periods, const RestartConfig& base, const AttackModel& atk,
                             double weight) {
  if (periods.empty()) throw Error("optimize_period: empty period grid");
  if (!(weight >= 0.0 && weight <= 1.0)) throw Error("optimize_period: weight must lie in [0, 1]");
  PeriodChoice out;
  double worst = 0.0;
  for (double p : periods) {
    RestartConfig cfg = base;
    cfg.period = p;
    const RestartMetrics m = analytic_metrics(cfg, atk);
    out.curve.push_back({p, m.unavailability, m.damage_per_second, 0.0});
    worst = std::max(worst, m.damage_per_second);
  }
  std::size_t best = 0;
  for (std::size_t i = 0; i < out.curve.size(); ++i) {
    CurvePoint& c = out.curve[i];
    const double damage = worst > 0.0 ? c.expected_damage / worst : 0.0;
    c.objective = weight * c.unavailability + (1.0 - weight) * damage;
    const CurvePoint& b = out.curve[best];
    const bool tie = std::abs(c.objective - b.objective) <= 1e-12 * std::max(1.0, std::abs(b.objective));
    if (i == 0 || (!tie && c.objective < b.objective) || (tie && c.period > b.period)) best = i;
  }
  out.best_period = out.curve[best].period;
  return out;
}

void write_curve_csv(std::ostream& out, std::span<const CurvePoint> curve) {
  out << "P,unavailability,expected_damage\n";
  const auto old = out.precision(17);
  for (const CurvePoint& c : curve) out << c.period << ',' << c.unavailability << ',' << c.expected_damage << '\n';
  out.precision(old);
}

}  // namespace rtsec
