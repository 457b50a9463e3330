#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rtsec/types.hpp"

namespace rtsec {

enum class TaskKind { periodic, sporadic };

// A (C, T, D) task. Lower priority number means higher priority. The
// execution-time model is fixed when bcet == wcet, otherwise each job draws
// its demand uniformly from [bcet, wcet].
struct Task {
  TaskId id = 0;
  Tick wcet = 1;
  Tick period = 1;  // minimum inter-arrival for sporadic tasks
  Tick deadline = 1;
  Tick phase = 0;
  TaskKind kind = TaskKind::periodic;
  int priority = 0;
  // Ordinal security level; a smaller value is a more secure task.
  int security_level = 0;
  Tick bcet = 1;

  bool fixed_execution() const { return bcet == wcet; }
  bool operator==(const Task&) const = default;
};

struct TaskSet {
  std::string name;
  std::vector<Task> tasks;

  bool empty() const { return tasks.empty(); }
  std::size_t size() const { return tasks.size(); }
  const Task* find(TaskId id) const;
  // Indices into tasks, highest priority first.
  std::vector<std::size_t> priority_order() const;
  bool all_periodic() const;
  bool operator==(const TaskSet&) const = default;
};

struct Violation {
  std::optional<TaskId> task;
  std::string rule;
};

// Exact non-negative rational in lowest terms.
struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Fraction&) const = default;
};

Fraction make_fraction(std::int64_t num, std::int64_t den);

// LCM of all periods. Throws Error for sporadic tasks or when the LCM does
// not fit in a Tick.
Tick hyperperiod(const TaskSet& ts);
Fraction utilization(const TaskSet& ts);
std::vector<Violation> validate(const TaskSet& ts);
// Throws ValidationError listing every violation, if any.
void require_valid(const TaskSet& ts);

// Rate-monotonic priorities: shorter period first, ties by id. Returns a copy
// with priorities 1..n.
TaskSet assign_rate_monotonic(TaskSet ts);

struct GeneratorOptions {
  // Accept a draw only if |U - target| is within this bound.
  double tolerance = 0.01;
  int max_attempts = 10000;
};

// n tasks with implicit deadlines, zero phases and rate-monotonic priorities.
// Per-task utilizations come from UUniFast; C_i = max(1, round(u_i * T_i)).
TaskSet generate_taskset(int n, double target_utilization, const std::set<Tick>& period_choices,
                         std::uint64_t seed, const GeneratorOptions& options = {});

}  // namespace rtsec
