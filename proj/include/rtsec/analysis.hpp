#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "rtsec/flush.hpp"
#include "rtsec/task_model.hpp"

namespace rtsec {

enum class Verdict { schedulable, unschedulable, inconclusive };

std::string_view to_string(Verdict v);

struct AnalysisReport {
  Verdict verdict = Verdict::inconclusive;
  // Worst-case response per task. For a task whose iteration overran its
  // deadline this is the first iterate above D.
  std::map<TaskId, Tick> response;
  // Liu & Layland bound n(2^(1/n) - 1); set by utilization_bound_test only.
  std::optional<double> bound_value;
  double utilization = 0.0;
  std::string method;
};

inline constexpr long kRtaIterationCap = 1'000'000;

// Rate-monotonic utilization bound. Throws Error when priorities are not
// rate-monotonic or deadlines are not implicit.
AnalysisReport utilization_bound_test(const TaskSet& ts);

// Preemptive fixed-priority response-time analysis:
// R_i = C_i + sum_{hp j} ceil(R_i / T_j) C_j, least fixed point from C_i.
AnalysisReport response_time_analysis(const TaskSet& ts);

// Conservative RTA for FlushPolicy: every higher-priority job is charged
// C_j + 2F and the task itself C_i + F. Equals response_time_analysis when no
// pair of tasks can leak or F == 0.
AnalysisReport rta_with_flush(const TaskSet& ts, const SecurityPolicy& policy);

// B_i = max over lower-priority tasks of (C_j - 1), 0 for the lowest.
std::map<TaskId, Tick> blocking_term_nonpreemptive(const TaskSet& ts);

// Fully non-preemptive fixed-priority analysis using the blocking term. Checks
// every job of the level-i busy period, so it stays sound when that busy
// period outlasts T_i.
AnalysisReport rta_nonpreemptive(const TaskSet& ts);

}  // namespace rtsec
