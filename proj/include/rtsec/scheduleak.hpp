#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "rtsec/engine.hpp"

namespace rtsec {

using PhaseVector = std::vector<Tick>;  // one phase per task, in TaskSet order

// What the observer learns: busy intervals inside [begin, end), plus the
// victim's (C, T, D, priority). Phases in `known` are ignored.
struct Observation {
  Tick begin = 0;
  Tick end = 0;
  std::vector<BusyInterval> busy;
  TaskSet known;
};

struct InferredSchedule {
  // Sorted, duplicate-free.
  std::vector<PhaseVector> candidates;
  std::optional<PhaseVector> point_estimate;
  std::size_t ambiguity = 0;
  // Window shorter than one hyperperiod.
  bool low_confidence = false;
};

enum class AttackOutcome { exact, ambiguous_containing_truth, failed };

std::string_view to_string(AttackOutcome outcome);

// Simulates `ts` under fixed priority for [0, duration) and keeps its busy
// intervals. The observer is virtual and consumes no processor time.
Observation observe(const TaskSet& ts, Tick duration, std::uint64_t seed = 0);
// Observation of an already simulated trace (any policy).
Observation observe_trace(const ScheduleTrace& trace, const TaskSet& ts);

// Busy mask of [begin, end) for the given phases. Any work-conserving policy
// yields the same mask, so priorities do not matter.
std::vector<std::uint8_t> busy_mask(const TaskSet& ts, std::span<const Tick> phases, Tick begin, Tick end);
std::vector<std::uint8_t> busy_mask(const Observation& obs);

struct SearchLimits {
  std::size_t max_candidates = 1'000'000;
  // brute_force_phases refuses when the product of periods exceeds this.
  std::uint64_t brute_force_cap = 10'000'000;
};

// Every phase vector (phi_i in [0, T_i)) that reproduces the observed busy
// intervals. Requires periodic tasks with fixed execution times. Throws
// Error when no candidate exists or the candidate count exceeds the limit.
InferredSchedule scheduleak(const Observation& obs, const SearchLimits& limits = {});

// Exhaustive reference for scheduleak.
std::vector<PhaseVector> brute_force_phases(const Observation& obs, const SearchLimits& limits = {});

AttackOutcome attack_success(const InferredSchedule& inferred, const PhaseVector& truth);

// Start ticks of every job of `task` when `ts` runs with `phases` under fixed
// priority for [0, duration).
std::vector<Tick> inferred_job_starts(const TaskSet& ts, const PhaseVector& phases, TaskId task, Tick duration);

void write_observation_csv(std::ostream& out, const Observation& obs);
// Reads `begin,end` rows into obs.busy; the window is left to the caller.
std::vector<BusyInterval> read_observation_csv(std::istream& in);

}  // namespace rtsec
