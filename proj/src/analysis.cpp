#include "rtsec/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace rtsec {

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::schedulable: return "schedulable";
    case Verdict::unschedulable: return "unschedulable";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "unknown";
}

namespace {

Tick ceil_div(Tick a, Tick b) { return (a + b - 1) / b; }

struct Charges {
  Tick self_extra = 0;   // added once to C_i
  Tick per_hp_job = 0;   // added to each higher-priority C_j
};

// Shared fixed-point loop. Aborts a task once its iterate exceeds D.
AnalysisReport preemptive_rta(const TaskSet& ts, const Charges& charges, std::string method) {
  require_valid(ts);
  AnalysisReport report;
  report.method = std::move(method);
  report.utilization = utilization(ts).value();
  report.verdict = Verdict::schedulable;
  const auto order = ts.priority_order();
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const Task& task = ts.tasks[order[rank]];
    const Tick own = task.wcet + charges.self_extra;
    Tick r = own;
    bool converged = false;
    for (long iter = 0; iter < kRtaIterationCap; ++iter) {
      Tick next = own;
      for (std::size_t h = 0; h < rank; ++h) {
        const Task& hp = ts.tasks[order[h]];
        next += ceil_div(r, hp.period) * (hp.wcet + charges.per_hp_job);
      }
      if (next == r) {
        converged = true;
        break;
      }
      r = next;
      if (r > task.deadline) break;
    }
    report.response[task.id] = r;
    if (r > task.deadline) {
      report.verdict = Verdict::unschedulable;
    } else if (!converged && report.verdict == Verdict::schedulable) {
      report.verdict = Verdict::inconclusive;
    }
  }
  return report;
}

}  // namespace

AnalysisReport utilization_bound_test(const TaskSet& ts) {
  require_valid(ts);
  for (const Task& t : ts.tasks) {
    if (t.deadline != t.period) {
      throw Error("utilization bound needs implicit deadlines (task " + std::to_string(t.id) + ")");
    }
  }
  const auto order = ts.priority_order();
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (ts.tasks[order[k - 1]].period > ts.tasks[order[k]].period) {
      throw Error("utilization bound needs rate-monotonic priorities (task " +
                  std::to_string(ts.tasks[order[k]].id) + ")");
    }
  }
  AnalysisReport report;
  report.method = "utilization_bound";
  const auto n = static_cast<double>(ts.size());
  const double bound = n * (std::pow(2.0, 1.0 / n) - 1.0);
  const Fraction u = utilization(ts);
  report.bound_value = bound;
  report.utilization = u.value();
  if (u.num > u.den) {
    report.verdict = Verdict::unschedulable;
  } else if (report.utilization <= bound + 1e-12) {
    report.verdict = Verdict::schedulable;
  } else {
    report.verdict = Verdict::inconclusive;
  }
  return report;
}

AnalysisReport response_time_analysis(const TaskSet& ts) { return preemptive_rta(ts, {}, "rta"); }

AnalysisReport rta_with_flush(const TaskSet& ts, const SecurityPolicy& policy) {
  if (policy.flush_cost < 0) throw Error("rta_with_flush: negative flush cost");
  require_valid(ts);
  const auto problems = validate(policy, ts);
  if (!problems.empty()) throw ValidationError("rta_with_flush: " + problems.front().rule);
  Charges charges;
  if (policy.flush_cost > 0 && any_leaking_pair(policy, ts)) {
    charges.self_extra = policy.flush_cost;
    charges.per_hp_job = 2 * policy.flush_cost;
  }
  return preemptive_rta(ts, charges, "rta_with_flush");
}

std::map<TaskId, Tick> blocking_term_nonpreemptive(const TaskSet& ts) {
  std::map<TaskId, Tick> out;
  for (const Task& t : ts.tasks) {
    Tick b = 0;
    for (const Task& other : ts.tasks) {
      if (other.priority > t.priority) b = std::max(b, other.wcet - 1);
    }
    out[t.id] = b;
  }
  return out;
}

AnalysisReport rta_nonpreemptive(const TaskSet& ts) {
  require_valid(ts);
  AnalysisReport report;
  report.method = "rta_nonpreemptive";
  report.utilization = utilization(ts).value();
  report.verdict = Verdict::schedulable;
  const auto blocking = blocking_term_nonpreemptive(ts);
  const auto order = ts.priority_order();
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const Task& task = ts.tasks[order[rank]];
    const Tick b = blocking.at(task.id);
    bool converged = true;

    Fraction level_u{0, 1};
    {
      TaskSet level;
      for (std::size_t h = 0; h <= rank; ++h) level.tasks.push_back(ts.tasks[order[h]]);
      level_u = utilization(level);
    }
    if (level_u.num > level_u.den) {
      report.response[task.id] = task.deadline + 1;
      report.verdict = Verdict::unschedulable;
      continue;
    }

    // Level-i busy period: t = B + sum_{hep} ceil(t / T_j) C_j.
    Tick busy = b + task.wcet;
    for (long iter = 0;; ++iter) {
      if (iter == kRtaIterationCap) {
        converged = false;
        break;
      }
      Tick next = b;
      for (std::size_t h = 0; h <= rank; ++h) {
        const Task& t = ts.tasks[order[h]];
        next += ceil_div(busy, t.period) * t.wcet;
      }
      if (next == busy) break;
      busy = next;
      // Past the hyperperiod-scale guard the set is overloaded at this level.
      if (busy > 1'000'000'000) {
        converged = false;
        break;
      }
    }

    Tick worst = 0;
    const Tick jobs = converged ? ceil_div(busy, task.period) : 1;
    for (Tick q = 0; q < jobs && converged; ++q) {
      // Start time of job q: w = B + q C_i + sum_{hp} (floor(w / T_j) + 1) C_j.
      Tick w = b + q * task.wcet;
      for (long iter = 0;; ++iter) {
        if (iter == kRtaIterationCap) {
          converged = false;
          break;
        }
        Tick next = b + q * task.wcet;
        for (std::size_t h = 0; h < rank; ++h) {
          const Task& hp = ts.tasks[order[h]];
          next += (w / hp.period + 1) * hp.wcet;
        }
        if (next == w) break;
        w = next;
        if (w - q * task.period + task.wcet > task.deadline) break;
      }
      worst = std::max(worst, std::max(w, q * task.period) - q * task.period + task.wcet);
      if (worst > task.deadline) break;
    }
    report.response[task.id] = worst;
    if (worst > task.deadline) {
      report.verdict = Verdict::unschedulable;
    } else if (!converged && report.verdict == Verdict::schedulable) {
      report.verdict = Verdict::inconclusive;
    }
  }
  return report;
}

}  // namespace rtsec
