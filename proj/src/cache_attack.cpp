#include "rtsec/cache_attack.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <string>

#include "rtsec/kernels.hpp"

namespace rtsec {

void prime(CacheModel& cache) {
  std::fill(cache.owner.begin(), cache.owner.end(), static_cast<std::uint8_t>(LineOwner::attacker));
  cache.primed = true;
}

void victim_touch(CacheModel& cache, std::size_t lines, Rng& rng) {
  const std::size_t n = cache.num_lines();
  if (lines > n) {
    throw Error("victim_touch: " + std::to_string(lines) + " lines requested, cache has " + std::to_string(n));
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates: the first `lines` entries are a uniform sample.
  for (std::size_t i = 0; i < lines; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
    cache.owner[idx[i]] = static_cast<std::uint8_t>(LineOwner::victim);
  }
}

void victim_touch(CacheModel& cache, std::size_t lines, std::uint64_t seed) {
  Rng rng(seed);
  victim_touch(cache, lines, rng);
}

std::size_t probe(CacheModel& cache, double epsilon, Rng& rng) {
  if (!cache.primed) throw Error("probe: cache was not primed");
  cache.primed = false;
  const std::size_t held = kernels::count_equal(cache.owner, static_cast<std::uint8_t>(LineOwner::attacker));
  std::size_t evicted = cache.num_lines() - held;
  if (epsilon <= 0.0) return evicted;
  for (std::uint8_t o : cache.owner) {
    if (!rng.bernoulli(epsilon)) continue;
    if (o == static_cast<std::uint8_t>(LineOwner::attacker)) ++evicted; else --evicted;
  }
  return evicted;
}

UsageSeries targeted_inference(const TaskSet& ts, const ScheduleTrace& trace, TaskId victim,
                               std::span<const std::size_t> usage_profile, const CacheConfig& config,
                               std::span<const Tick> inferred_starts) {
  if (!ts.find(victim)) throw Error("targeted_inference: unknown victim task " + std::to_string(victim));
  if (usage_profile.empty()) throw Error("targeted_inference: empty usage profile");
  for (std::size_t u : usage_profile) {
    if (u > config.num_lines) throw Error("targeted_inference: usage exceeds the number of cache lines");
  }
  if (config.other_lines > config.num_lines) throw Error("targeted_inference: other_lines exceeds the cache");
  if (config.round_length < 1) throw Error("targeted_inference: round_length must be >= 1");

  // Lines loaded at each tick, in job order.
  std::multimap<Tick, std::size_t> loads;
  std::vector<std::size_t> actual;
  for (const Job& j : trace.jobs) {
    std::size_t lines = config.other_lines;
    if (j.task_id == victim) {
      lines = usage_profile[actual.size() % usage_profile.size()];
      actual.push_back(lines);
    }
    if (j.start && lines > 0) loads.emplace(*j.start, lines);
  }

  Rng rng(config.seed);
  CacheModel cache(config.num_lines);
  UsageSeries out;
  const std::size_t rounds = std::min(actual.size(), inferred_starts.size());
  for (std::size_t k = 0; k < rounds; ++k) {
    const Tick s = inferred_starts[k];
    prime(cache);
    for (auto it = loads.lower_bound(s); it != loads.end() && it->first < s + config.round_length; ++it) {
      victim_touch(cache, it->second, rng);
    }
    out.samples.push_back({k, actual[k], probe(cache, config.epsilon, rng)});
  }
  return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("pearson: length mismatch");
  if (x.size() < 2) return 0.0;
  const auto centered = [](std::span<const double> v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    std::vector<double> c(v.begin(), v.end());
    for (double& e : c) e -= mean;
    return c;
  };
  const auto cx = centered(x);
  const auto cy = centered(y);
  const double sxx = kernels::dot(cx, cx);
  const double syy = kernels::dot(cy, cy);
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return kernels::dot(cx, cy) / std::sqrt(sxx * syy);
}

double pearson(const UsageSeries& series) {
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& s : series.samples) {
    x.push_back(static_cast<double>(s.actual));
    y.push_back(static_cast<double>(s.inferred));
  }
  return pearson(x, y);
}

void write_usage_csv(std::ostream& out, const UsageSeries& series) {
  out << "job,actual,inferred\n";
  for (const auto& s : series.samples) out << s.job << ',' << s.actual << ',' << s.inferred << '\n';
}

}  // namespace rtsec
