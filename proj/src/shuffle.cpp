#include "rtsec/shuffle.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <map>

namespace rtsec {

std::string_view to_string(ShuffleMode mode) {
  switch (mode) {
    case ShuffleMode::task_only: return "task_only";
    case ShuffleMode::with_idle: return "with_idle";
    case ShuffleMode::fine_grained: return "fine_grained";
  }
  return "unknown";
}

std::optional<ShuffleMode> parse_shuffle_mode(std::string_view text) {
  for (auto mode : {ShuffleMode::task_only, ShuffleMode::with_idle, ShuffleMode::fine_grained}) {
    if (to_string(mode) == text) return mode;
  }
  return std::nullopt;
}

Tick workload_with_carry_in(const Task& t, Tick response, Tick window) {
  if (window <= 0) return 0;
  const Tick jitter = response - t.wcet;
  const Tick span = window + jitter;
  const Tick n = span / t.period;
  return n * t.wcet + std::min(t.wcet, span - n * t.period);
}

namespace {

struct Level {
  const Task* task;
  Tick response;  // valid for levels already fixed
};

// Largest w - C - interference(w) over w in [1, D].
Tick max_slack(const Task& t, std::span<const Level> higher) {
  Tick best = -t.deadline - 1;
  for (Tick w = 1; w <= t.deadline; ++w) {
    Tick load = t.wcet;
    for (const Level& h : higher) load += workload_with_carry_in(*h.task, h.response, w);
    best = std::max(best, w - load);
  }
  return best;
}

// Smallest w with w - C - interference(w) >= budget, or nullopt past D.
std::optional<Tick> response_bound(const Task& t, Tick budget, std::span<const Level> higher) {
  for (Tick w = 1; w <= t.deadline; ++w) {
    Tick load = t.wcet + budget;
    for (const Level& h : higher) load += workload_with_carry_in(*h.task, h.response, w);
    if (load <= w) return w;
  }
  return std::nullopt;
}

// Every level from `from` on is admissible with a zero budget.
bool lower_levels_admissible(std::vector<Level> levels, std::size_t from) {
  for (std::size_t k = from; k < levels.size(); ++k) {
    const auto r = response_bound(*levels[k].task, 0, std::span(levels).first(k));
    if (!r) return false;
    levels[k].response = *r;
  }
  return true;
}

}  // namespace

InversionBudget compute_budgets(const TaskSet& ts) {
  require_valid(ts);
  std::vector<Level> levels;
  for (std::size_t i : ts.priority_order()) levels.push_back({&ts.tasks[i], 0});
  if (!lower_levels_admissible(levels, 0)) {
    throw PolicyRejected("shuffle: task set is not schedulable under the inversion guard");
  }

  InversionBudget out;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    const Task& t = *levels[k].task;
    const auto higher = std::span<const Level>(levels).first(k);
    const auto fits = [&](Tick v) {
      const auto r = response_bound(t, v, higher);
      if (!r) return false;
      levels[k].response = *r;
      return lower_levels_admissible(levels, k + 1);
    };
    // Admissibility is monotone in v: a larger budget only raises the bound.
    Tick lo = 0;
    Tick hi = std::max<Tick>(0, max_slack(t, higher));
    while (lo < hi) {
      const Tick mid = lo + (hi - lo + 1) / 2;
      if (fits(mid)) lo = mid; else hi = mid - 1;
    }
    if (!fits(lo)) throw PolicyRejected("shuffle: no admissible budget for task " + std::to_string(t.id));
    out.budget[t.id] = lo;
    out.response_bound[t.id] = levels[k].response;
  }
  return out;
}

std::optional<std::size_t> select_next(std::span<const ShuffleCandidate> ready, bool idle_allowed, bool guarded,
                                       Rng& rng) {
  if (ready.empty()) return std::nullopt;
  std::vector<std::size_t> legal;
  // Budgets of every job strictly above the current priority band are >= 1.
  bool above_ok = true;
  bool band_ok = true;
  for (std::size_t k = 0; k < ready.size(); ++k) {
    if (k > 0 && ready[k].priority != ready[k - 1].priority) {
      above_ok = above_ok && band_ok;
      band_ok = true;
    }
    if (!guarded || above_ok) legal.push_back(k);
    band_ok = band_ok && ready[k].budget >= 1;
  }
  above_ok = above_ok && band_ok;
  const bool idle_legal = idle_allowed && (!guarded || above_ok);
  const std::size_t options = legal.size() + (idle_legal ? 1 : 0);
  const auto pick = static_cast<std::size_t>(rng.below(options));
  if (pick == legal.size()) return std::nullopt;
  return legal[pick];
}

ShufflePolicy::ShufflePolicy(ShuffleConfig config) : config_(config), rng_(config.seed) {}

ShufflePolicy::ShufflePolicy(ShuffleConfig config, InversionBudget budgets)
    : config_(config), fixed_(std::move(budgets)), rng_(config.seed) {}

std::string ShufflePolicy::name() const { return "shuffle_" + std::string(to_string(config_.mode)); }

void ShufflePolicy::bind(const TaskSet& ts) {
  if (fixed_) {
    budgets_ = *fixed_;
  } else if (config_.guard == ShuffleGuard::budget) {
    budgets_ = compute_budgets(ts);
  } else {
    budgets_ = {};
  }
  static_.assign(ts.tasks.size(), 0);
  for (std::size_t i = 0; i < ts.tasks.size(); ++i) {
    const auto it = budgets_.budget.find(ts.tasks[i].id);
    if (it != budgets_.budget.end()) {
      if (it->second < 0) throw PolicyRejected("shuffle: negative budget for task " + std::to_string(it->first));
      static_[i] = it->second;
    }
  }
  remaining_.clear();
}

void ShufflePolicy::on_release(SchedulerContext& ctx, std::size_t job) {
  if (remaining_.size() <= job) remaining_.resize(job + 1, 0);
  remaining_[job] = static_[ctx.job(job).task_index];
}

bool ShufflePolicy::reschedule(const SchedulerContext& ctx, const Choice& current) const {
  if (config_.mode == ShuffleMode::fine_grained) return true;
  if (config_.guard == ShuffleGuard::none) return false;
  const auto ready = ctx.ready();
  if (current.kind == Choice::Kind::idle) {
    return std::any_of(ready.begin(), ready.end(), [&](std::size_t j) { return job_budget(j) < 1; });
  }
  const int prio = ctx.priority_of_job(current.job);
  for (std::size_t j : ready) {
    if (ctx.priority_of_job(j) >= prio) break;
    if (job_budget(j) < 1) return true;
  }
  return false;
}

Choice ShufflePolicy::select(SchedulerContext& ctx) {
  const auto ready = ctx.ready();
  std::vector<ShuffleCandidate> view;
  view.reserve(ready.size());
  for (std::size_t j : ready) view.push_back({ctx.priority_of_job(j), job_budget(j)});
  const auto pick = select_next(view, config_.idle_candidate(), config_.guard == ShuffleGuard::budget, rng_);
  return pick ? Choice::run(ready[*pick]) : Choice::idle();
}

void ShufflePolicy::on_slot(SchedulerContext& ctx, const Choice& executed) {
  if (config_.guard == ShuffleGuard::none) return;
  const auto ready = ctx.ready();
  if (executed.kind == Choice::Kind::idle) {
    for (std::size_t j : ready) --remaining_[j];
    return;
  }
  if (executed.kind != Choice::Kind::job) return;
  const int prio = ctx.priority_of_job(executed.job);
  for (std::size_t j : ready) {
    if (ctx.priority_of_job(j) >= prio) break;
    --remaining_[j];
  }
}

EntropySeries schedule_entropy(std::span<const ScheduleTrace> traces, Tick period) {
  if (traces.size() < 2) throw Error("schedule_entropy: need at least two traces");
  const Tick duration = traces.front().duration;
  for (const auto& t : traces) {
    if (t.duration != duration) throw Error("schedule_entropy: traces have mismatched durations");
    if (static_cast<Tick>(t.slots.size()) != duration) throw Error("schedule_entropy: incomplete trace");
  }
  if (period < 1 || duration % period != 0) {
    throw Error("schedule_entropy: duration must be a positive multiple of the fold period");
  }
  EntropySeries out;
  out.bits.assign(static_cast<std::size_t>(period), 0.0);
  std::map<TaskId, std::size_t> counts;
  for (Tick o = 0; o < period; ++o) {
    counts.clear();
    std::size_t total = 0;
    for (const auto& t : traces) {
      for (Tick k = o; k < duration; k += period) {
        ++counts[t.slots[static_cast<std::size_t>(k)].occupant];
        ++total;
      }
    }
    double h = 0.0;
    for (const auto& [occupant, c] : counts) {
      const double p = static_cast<double>(c) / static_cast<double>(total);
      h -= p * std::log2(p);
    }
    out.bits[static_cast<std::size_t>(o)] = h + 0.0;  // no negative zero
  }
  double sum = 0.0;
  for (double b : out.bits) sum += b;
  out.mean = sum / static_cast<double>(period);
  return out;
}

EntropySeries schedule_entropy(std::span<const ScheduleTrace> traces) {
  if (traces.empty()) throw Error("schedule_entropy: need at least two traces");
  return schedule_entropy(traces, std::max<Tick>(1, traces.front().duration));
}

void write_entropy_csv(std::ostream& out, const EntropySeries& series) {
  out << "offset,entropy_bits\n";
  for (std::size_t o = 0; o < series.bits.size(); ++o) out << o << ',' << series.bits[o] << '\n';
}

}  // namespace rtsec
