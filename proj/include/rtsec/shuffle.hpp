#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rtsec/engine.hpp"

namespace rtsec {

enum class ShuffleMode { task_only, with_idle, fine_grained };
enum class ShuffleGuard { budget, none };

std::string_view to_string(ShuffleMode mode);
std::optional<ShuffleMode> parse_shuffle_mode(std::string_view text);

struct ShuffleConfig {
  ShuffleMode mode = ShuffleMode::task_only;
  std::uint64_t seed = 0;
  // `none` disables the budget check entirely; deadlines are then unprotected.
  ShuffleGuard guard = ShuffleGuard::budget;

  bool idle_candidate() const { return mode != ShuffleMode::task_only; }
};

struct InversionBudget {
  // Ticks a job of the task may lose to lower-priority work or idling.
  std::map<TaskId, Tick> budget;
  // Response bound each task keeps while its own and all higher budgets are
  // spent in the worst way.
  std::map<TaskId, Tick> response_bound;
};

// Maximum work a task with response bound `response` can execute inside any
// window of length `window`.
Tick workload_with_carry_in(const Task& t, Tick response, Tick window);

// A budget V_i is admissible when some w <= D_i satisfies
// w >= C_i + V_i + sum_hp workload_with_carry_in(h, Rhat_h, w). Budgets are
// assigned from the highest priority down, each the largest value that keeps
// every lower task admissible with a zero budget.
// Throws PolicyRejected when even all-zero budgets are not admissible.
InversionBudget compute_budgets(const TaskSet& ts);

struct ShuffleCandidate {
  int priority = 0;
  Tick budget = 0;  // remaining budget of the job
};

// `ready` is ordered highest priority first. Returns an index into `ready`,
// or nullopt for IDLE. Picking X costs one tick of budget from every ready
// job with strictly higher priority than X; IDLE costs every ready job. Picks
// that would overdraw a budget are excluded, unless `guarded` is false.
std::optional<std::size_t> select_next(std::span<const ShuffleCandidate> ready, bool idle_allowed, bool guarded,
                                       Rng& rng);

class ShufflePolicy final : public SchedulingPolicy {
 public:
  explicit ShufflePolicy(ShuffleConfig config);
  // Uses the given budgets instead of compute_budgets (testing hook).
  ShufflePolicy(ShuffleConfig config, InversionBudget budgets);

  std::string name() const override;
  void bind(const TaskSet& ts) override;
  void on_release(SchedulerContext& ctx, std::size_t job) override;
  bool reschedule(const SchedulerContext& ctx, const Choice& current) const override;
  Choice select(SchedulerContext& ctx) override;
  void on_slot(SchedulerContext& ctx, const Choice& executed) override;

  const InversionBudget& budgets() const { return budgets_; }

 private:
  Tick job_budget(std::size_t job) const { return job < remaining_.size() ? remaining_[job] : 0; }

  ShuffleConfig config_;
  std::optional<InversionBudget> fixed_;
  InversionBudget budgets_;
  std::vector<Tick> static_;     // by task index
  std::vector<Tick> remaining_;  // by job index
  Rng rng_;
};

struct EntropySeries {
  std::vector<double> bits;  // one entry per offset within the fold period
  double mean = 0.0;
};

// Shannon entropy of the slot occupant at each offset modulo `period`, pooled
// over every trace and every repetition. Requires >= 2 traces of equal
// duration, and a duration that is a multiple of `period`.
EntropySeries schedule_entropy(std::span<const ScheduleTrace> traces, Tick period);
// Folds by the full duration (one sample per trace and tick).
EntropySeries schedule_entropy(std::span<const ScheduleTrace> traces);

void write_entropy_csv(std::ostream& out, const EntropySeries& series);

}  // namespace rtsec
