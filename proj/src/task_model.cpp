#include "rtsec/task_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "rtsec/rng.hpp"

namespace rtsec {

const Task* TaskSet::find(TaskId id) const {
  for (const Task& t : tasks) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

std::vector<std::size_t> TaskSet::priority_order() const {
  std::vector<std::size_t> order(tasks.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return tasks[a].priority < tasks[b].priority;
  });
  return order;
}

bool TaskSet::all_periodic() const {
  return std::all_of(tasks.begin(), tasks.end(),
                     [](const Task& t) { return t.kind == TaskKind::periodic; });
}

Fraction make_fraction(std::int64_t num, std::int64_t den) {
  if (den == 0) throw Error("fraction with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  return g == 0 ? Fraction{0, 1} : Fraction{num / g, den / g};
}

Tick hyperperiod(const TaskSet& ts) {
  if (ts.empty()) throw Error("hyperperiod of an empty task set");
  Tick h = 1;
  for (const Task& t : ts.tasks) {
    if (t.kind != TaskKind::periodic) {
      throw Error("hyperperiod undefined: task " + std::to_string(t.id) + " is sporadic");
    }
    if (t.period <= 0) throw Error("non-positive period on task " + std::to_string(t.id));
    const Tick g = std::gcd(h, t.period);
    const Tick factor = t.period / g;
    if (h > std::numeric_limits<Tick>::max() / factor) throw Error("hyperperiod overflows the tick range");
    h *= factor;
  }
  return h;
}

Fraction utilization(const TaskSet& ts) {
  // Accumulate in 128 bits and reduce after each term.
  __int128 num = 0;
  __int128 den = 1;
  for (const Task& t : ts.tasks) {
    num = num * t.period + static_cast<__int128>(t.wcet) * den;
    den *= t.period;
    __int128 a = num < 0 ? -num : num;
    __int128 b = den;
    while (b != 0) {
      const __int128 r = a % b;
      a = b;
      b = r;
    }
    if (a > 1) {
      num /= a;
      den /= a;
    }
  }
  const auto max = static_cast<__int128>(std::numeric_limits<std::int64_t>::max());
  if (num > max || den > max) throw Error("utilization fraction overflows 64 bits");
  return make_fraction(static_cast<std::int64_t>(num), static_cast<std::int64_t>(den));
}

std::vector<Violation> validate(const TaskSet& ts) {
  std::vector<Violation> out;
  if (ts.empty()) out.push_back({std::nullopt, "task set is empty"});
  std::map<TaskId, int> ids;
  std::map<int, TaskId> priorities;
  for (const Task& t : ts.tasks) {
    auto fail = [&](std::string rule) { out.push_back({t.id, std::move(rule)}); };
    if (t.wcet < 1) fail("C >= 1");
    if (t.period < t.wcet) fail("T >= C");
    if (t.deadline > t.period) fail("D <= T");
    if (t.deadline < t.wcet) fail("D >= C");
    if (t.phase < 0) fail("phase >= 0");
    if (t.bcet < 1 || t.bcet > t.wcet) fail("1 <= bcet <= C");
    if (++ids[t.id] == 2) fail("task ids are unique");
    auto [it, inserted] = priorities.emplace(t.priority, t.id);
    if (!inserted) {
      fail("priorities are unique (shared with task " + std::to_string(it->second) + ")");
    }
  }
  return out;
}

void require_valid(const TaskSet& ts) {
  const auto violations = validate(ts);
  if (violations.empty()) return;
  std::string msg = "invalid task set";
  if (!ts.name.empty()) msg += " '" + ts.name + "'";
  msg += ":";
  for (const auto& v : violations) {
    msg += v.task ? " [task " + std::to_string(*v.task) + ": " + v.rule + "]" : " [" + v.rule + "]";
  }
  throw ValidationError(msg);
}

TaskSet assign_rate_monotonic(TaskSet ts) {
  std::vector<std::size_t> order(ts.tasks.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Task& x = ts.tasks[a];
    const Task& y = ts.tasks[b];
    return x.period != y.period ? x.period < y.period : x.id < y.id;
  });
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    ts.tasks[order[rank]].priority = static_cast<int>(rank) + 1;
  }
  return ts;
}

namespace {

// Bini & Buttazzo's UUniFast: uniform over the simplex sum(u) = total.
std::vector<double> uunifast(int n, double total, Rng& rng) {
  std::vector<double> u(static_cast<std::size_t>(n));
  double remaining = total;
  for (int i = 1; i < n; ++i) {
    const double next = remaining * std::pow(rng.uniform(), 1.0 / static_cast<double>(n - i));
    u[static_cast<std::size_t>(i - 1)] = remaining - next;
    remaining = next;
  }
  u[static_cast<std::size_t>(n - 1)] = remaining;
  return u;
}

}  // namespace

TaskSet generate_taskset(int n, double target_utilization, const std::set<Tick>& period_choices,
                         std::uint64_t seed, const GeneratorOptions& options) {
  if (n < 1) throw Error("generate_taskset: n must be >= 1");
  if (!(target_utilization > 0.0 && target_utilization <= 1.0)) {
    throw Error("generate_taskset: target utilization must be in (0, 1]");
  }
  if (period_choices.empty()) throw Error("generate_taskset: no period choices");
  if (*period_choices.begin() < 1) throw Error("generate_taskset: periods must be positive");

  const std::vector<Tick> periods(period_choices.begin(), period_choices.end());
  Rng rng(seed);
  for (int attempt = 0; attempt < options.max_attempts; ++attempt) {
    const auto shares = uunifast(n, target_utilization, rng);
    TaskSet ts;
    ts.name = "generated-" + std::to_string(seed);
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) {
      Task t;
      t.id = i + 1;
      t.period = periods[rng.below(periods.size())];
      t.wcet = std::max<Tick>(1, std::llround(shares[static_cast<std::size_t>(i)] *
                                              static_cast<double>(t.period)));
      t.deadline = t.period;
      t.bcet = t.wcet;
      ok = t.wcet <= t.period;
      ts.tasks.push_back(t);
    }
    if (!ok) continue;
    if (std::abs(utilization(ts).value() - target_utilization) > options.tolerance) continue;
    return assign_rate_monotonic(std::move(ts));
  }
  throw Error("generate_taskset: target utilization infeasible after " +
              std::to_string(options.max_attempts) + " attempts");
}

}  // namespace rtsec
