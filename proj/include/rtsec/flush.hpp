#pragma once

#include <map>
#include <set>
#include <utility>
#include <vector>

#include "rtsec/engine.hpp"

namespace rtsec {

enum class SecurityMode { total_order, pairwise };

// Leakage constraints between tasks.
//
// total_order: each task has an ordinal level (smaller = more secure); a
// transition from a more secure task to a less secure one leaks.
// pairwise: noleak holds (from, to) pairs; information must not flow from
// `from` to `to`.
struct SecurityPolicy {
  SecurityMode mode = SecurityMode::total_order;
  // Level overrides; tasks not listed use Task::security_level.
  std::map<TaskId, int> levels;
  std::set<std::pair<TaskId, TaskId>> noleak;
  Tick flush_cost = 0;

  bool operator==(const SecurityPolicy&) const = default;
};

std::vector<Violation> validate(const SecurityPolicy& policy, const TaskSet& ts);

// True when running `next` right after `prev` (with no flush between) leaks.
// Throws Error for ids not in the task set.
bool needs_flush(TaskId prev, TaskId next, const SecurityPolicy& policy, const TaskSet& ts);

// Equivalent pairwise policy: noleak(a, b) iff level(a) is more secure than level(b).
SecurityPolicy compile_to_pairwise(const SecurityPolicy& policy, const TaskSet& ts);

// True when at least one ordered pair of distinct tasks needs a flush.
bool any_leaking_pair(const SecurityPolicy& policy, const TaskSet& ts);

// Fixed-priority scheduling that inserts a non-preemptible FLUSH of
// flush_cost ticks before any job whose start or resumption would follow a
// leaking task. The taint is the last task to run since the last flush; idle
// slots do not clear it.
class FlushPolicy final : public SchedulingPolicy {
 public:
  explicit FlushPolicy(SecurityPolicy policy) : policy_(std::move(policy)) {}

  std::string name() const override { return "flush"; }
  void bind(const TaskSet& ts) override;
  Choice select(SchedulerContext& ctx) override;
  void on_slot(SchedulerContext& ctx, const Choice& executed) override;
  void on_flush_end(SchedulerContext& ctx) override;

 private:
  SecurityPolicy policy_;
  std::vector<std::vector<char>> leaks_;  // [prev task index][next task index]
  std::optional<std::size_t> taint_;
};

// Adjacent task-to-task transitions (idle slots skipped, a FLUSH slot resets)
// where needs_flush holds and no flush intervened. A zero flush cost means
// every switch is flushed for free, so nothing is counted.
std::size_t count_violations(const ScheduleTrace& trace, const SecurityPolicy& policy, const TaskSet& ts);

}  // namespace rtsec
