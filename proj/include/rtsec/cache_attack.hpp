#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "rtsec/engine.hpp"

namespace rtsec {

enum class LineOwner : std::uint8_t { none = 0, attacker = 1, victim = 2 };

// Fully associative cache; only line ownership is modeled.
struct CacheModel {
  std::vector<std::uint8_t> owner;  // LineOwner per line
  bool primed = false;

  explicit CacheModel(std::size_t lines = 0) : owner(lines, static_cast<std::uint8_t>(LineOwner::none)) {}
  std::size_t num_lines() const { return owner.size(); }
};

// Fills every line with attacker data.
void prime(CacheModel& cache);
// Marks `lines` distinct lines, chosen uniformly, as victim-owned.
void victim_touch(CacheModel& cache, std::size_t lines, Rng& rng);
void victim_touch(CacheModel& cache, std::size_t lines, std::uint64_t seed);
// Lines no longer attacker-owned; each line's reading flips with probability
// `epsilon`. Consumes the prime. Throws Error when the cache is not primed.
std::size_t probe(CacheModel& cache, double epsilon, Rng& rng);

struct CacheConfig {
  std::size_t num_lines = 64;
  double epsilon = 0.0;
  // Ticks between prime and probe; touches from jobs starting inside the
  // round are observed.
  Tick round_length = 1;
  // Lines touched by a job of any task other than the victim.
  std::size_t other_lines = 0;
  std::uint64_t seed = 0;
};

struct UsageSample {
  std::size_t job = 0;
  std::size_t actual = 0;
  std::size_t inferred = 0;
};

struct UsageSeries {
  std::vector<UsageSample> samples;
};

// Each job loads its working set at its first executed slot: job k of the
// victim touches usage_profile[k % size] lines, other jobs touch
// other_lines. One prime+probe round is aligned to each inferred start;
// round k is compared against the k-th victim job of `trace`.
UsageSeries targeted_inference(const TaskSet& ts, const ScheduleTrace& trace, TaskId victim,
                               std::span<const std::size_t> usage_profile, const CacheConfig& config,
                               std::span<const Tick> inferred_starts);

// Pearson correlation of actual vs inferred; 0 when either side is constant.
double pearson(const UsageSeries& series);
double pearson(std::span<const double> x, std::span<const double> y);

void write_usage_csv(std::ostream& out, const UsageSeries& series);

}  // namespace rtsec
