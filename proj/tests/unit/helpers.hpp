#pragma once

#include <vector>

#include "oracles/reference.hpp"
#include "rtsec/engine.hpp"
#include "rtsec/rng.hpp"
#include "rtsec/task_model.hpp"

namespace testing {

inline rtsec::Task make_task(rtsec::TaskId id, rtsec::Tick c, rtsec::Tick t, int priority, rtsec::Tick d = 0,
                             rtsec::Tick phase = 0) {
  rtsec::Task task;
  task.id = id;
  task.wcet = c;
  task.bcet = c;
  task.period = t;
  task.deadline = d == 0 ? t : d;
  task.phase = phase;
  task.priority = priority;
  return task;
}

// (C, T) pairs with rate-monotonic priorities and ids 1..n.
inline rtsec::TaskSet rm_set(std::initializer_list<std::pair<rtsec::Tick, rtsec::Tick>> ct) {
  rtsec::TaskSet ts;
  int id = 1;
  for (auto [c, t] : ct) ts.tasks.push_back(make_task(id++, c, t, 0));
  return rtsec::assign_rate_monotonic(ts);
}

inline std::vector<oracle::RefTask> to_ref(const rtsec::TaskSet& ts) {
  std::vector<oracle::RefTask> out;
  for (const auto& t : ts.tasks) out.push_back({t.wcet, t.period, t.deadline, t.phase, t.priority});
  return out;
}

// Library slots mapped to task indices (-1 idle, -2 flush), comparable with
// oracle::RefRun::occupant.
inline std::vector<int> occupant_indices(const rtsec::ScheduleTrace& trace, const rtsec::TaskSet& ts) {
  std::vector<int> out;
  for (const auto& s : trace.slots) {
    if (s.occupant == rtsec::kIdle) {
      out.push_back(-1);
    } else if (s.occupant == rtsec::kFlush) {
      out.push_back(-2);
    } else {
      int idx = -3;
      for (std::size_t i = 0; i < ts.size(); ++i) {
        if (ts.tasks[i].id == s.occupant) idx = static_cast<int>(i);
      }
      out.push_back(idx);
    }
  }
  return out;
}

// Small random task set with periods drawn from `periods`, U <= max_u,
// rate-monotonic priorities.
inline rtsec::TaskSet random_set(rtsec::Rng& rng, int max_n, double max_u, const std::vector<rtsec::Tick>& periods) {
  for (;;) {
    const int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_n)));
    rtsec::TaskSet ts;
    double u = 0.0;
    for (int i = 0; i < n; ++i) {
      const rtsec::Tick t = periods[rng.below(periods.size())];
      const rtsec::Tick c = rng.between(1, std::max<rtsec::Tick>(1, t / 2));
      ts.tasks.push_back(make_task(i + 1, c, t, 0));
      u += static_cast<double>(c) / static_cast<double>(t);
    }
    if (u <= max_u) return rtsec::assign_rate_monotonic(ts);
  }
}

}  // namespace testing
