#include "rtsec/scheduleak.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "rtsec/kernels.hpp"

namespace rtsec {

std::string_view to_string(AttackOutcome outcome) {
  switch (outcome) {
    case AttackOutcome::exact: return "exact";
    case AttackOutcome::ambiguous_containing_truth: return "ambiguous_containing_truth";
    case AttackOutcome::failed: return "failed";
  }
  return "unknown";
}

namespace {

TaskSet strip_phases(TaskSet ts) {
  for (Task& t : ts.tasks) t.phase = 0;
  return ts;
}

void require_fixed_periodic(const TaskSet& ts, std::string_view what) {
  for (const Task& t : ts.tasks) {
    if (t.kind != TaskKind::periodic) {
      throw Error(std::string(what) + ": task " + std::to_string(t.id) + " is sporadic");
    }
    if (!t.fixed_execution()) {
      throw Error(std::string(what) + ": task " + std::to_string(t.id) + " has a variable execution time");
    }
  }
}

// Busy mask of [begin, end) for `tasks` (pointers into a task set) with the
// matching phases. Returns false early when `limit` is given and a busy tick
// falls outside it.
bool subset_mask(std::span<const Task* const> tasks, std::span<const Tick> phases, Tick begin, Tick end,
                 std::vector<std::uint8_t>& out, const std::vector<std::uint8_t>* limit) {
  out.assign(static_cast<std::size_t>(end - begin), 0);
  std::vector<Tick> next(phases.begin(), phases.end());
  Tick backlog = 0;
  for (Tick t = 0; t < end; ++t) {
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      if (next[i] == t) {
        backlog += tasks[i]->wcet;
        next[i] += tasks[i]->period;
      }
    }
    if (backlog > 0) {
      --backlog;
      if (t >= begin) {
        const auto k = static_cast<std::size_t>(t - begin);
        if (limit && !(*limit)[k]) return false;
        out[k] = 1;
      }
    }
  }
  return true;
}

void check_intervals(const Observation& obs) {
  if (obs.end < obs.begin) throw Error("observation: window end precedes begin");
  Tick prev_end = obs.begin - 1;
  for (const BusyInterval& b : obs.busy) {
    if (b.start < obs.begin || b.end > obs.end || b.start >= b.end) {
      throw Error("observation: interval outside the window or empty");
    }
    if (b.start <= prev_end) throw Error("observation: intervals overlap, touch or are out of order");
    prev_end = b.end;
  }
}

struct Search {
  const Observation& obs;
  const SearchLimits& limits;
  std::vector<std::uint8_t> observed;
  std::vector<const Task*> order;         // search order
  std::vector<std::size_t> order_index;   // TaskSet index per search position
  std::vector<std::vector<Tick>> allowed; // per search position
  std::vector<std::vector<std::uint8_t>> coverable;  // per depth: union of releases of positions >= depth
  std::vector<Tick> starts;               // interval starts that must be releases
  std::vector<Tick> max_demand;           // per depth: suffix bound on demand before `end`
  Tick observed_busy = 0;
  std::vector<Tick> phases;
  std::vector<PhaseVector> found;
  std::vector<std::uint8_t> scratch;

  std::size_t at(Tick t) const { return static_cast<std::size_t>(t - obs.begin); }

  bool release_at(std::size_t depth, Tick t) const {
    const Task& task = *order[depth];
    return t >= phases[depth] && (t - phases[depth]) % task.period == 0;
  }

  bool prune(std::size_t depth) {
    const auto fixed = std::span<const Task* const>(order).first(depth + 1);
    const auto fixed_phases = std::span<const Tick>(phases).first(depth + 1);
    if (!subset_mask(fixed, fixed_phases, obs.begin, obs.end, scratch, &observed)) return true;
    const Tick busy = std::accumulate(scratch.begin(), scratch.end(), Tick{0});
    if (observed_busy - busy > max_demand[depth + 1]) return true;
    for (Tick s : starts) {
      bool covered = false;
      for (std::size_t k = 0; k <= depth && !covered; ++k) covered = release_at(k, s);
      if (!covered && !coverable[depth + 1][at(s)]) return true;
    }
    return false;
  }

  void leaf() {
    const auto fixed_phases = std::span<const Tick>(phases);
    subset_mask(order, fixed_phases, obs.begin, obs.end, scratch, nullptr);
    if (kernels::first_mismatch(scratch, observed) != observed.size()) return;
    PhaseVector v(order.size());
    for (std::size_t k = 0; k < order.size(); ++k) v[order_index[k]] = phases[k];
    found.push_back(std::move(v));
    if (found.size() > limits.max_candidates) throw Error("scheduleak: candidate limit exceeded");
  }

  void descend(std::size_t depth) {
    if (depth == order.size()) {
      leaf();
      return;
    }
    for (Tick phi : allowed[depth]) {
      phases[depth] = phi;
      if (prune(depth)) continue;
      descend(depth + 1);
    }
  }
};

}  // namespace

std::vector<std::uint8_t> busy_mask(const TaskSet& ts, std::span<const Tick> phases, Tick begin, Tick end) {
  if (phases.size() != ts.tasks.size()) throw Error("busy_mask: phase vector size mismatch");
  std::vector<const Task*> tasks;
  for (const Task& t : ts.tasks) tasks.push_back(&t);
  std::vector<std::uint8_t> out;
  subset_mask(tasks, phases, begin, end, out, nullptr);
  return out;
}

std::vector<std::uint8_t> busy_mask(const Observation& obs) {
  check_intervals(obs);
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(obs.end - obs.begin), 0);
  for (const BusyInterval& b : obs.busy) {
    std::fill(mask.begin() + (b.start - obs.begin), mask.begin() + (b.end - obs.begin), 1);
  }
  return mask;
}

Observation observe(const TaskSet& ts, Tick duration, std::uint64_t seed) {
  Tick longest = 0;
  for (const Task& t : ts.tasks) longest = std::max(longest, t.period);
  if (duration < longest || duration < 1) {
    throw Error("observe: window of " + std::to_string(duration) + " ticks is shorter than the longest period");
  }
  if (ts.empty()) return {0, duration, {}, ts};
  return observe_trace(simulate(ts, duration, seed), ts);
}

Observation observe_trace(const ScheduleTrace& trace, const TaskSet& ts) {
  return {0, trace.duration, extract_busy_intervals(trace), strip_phases(ts)};
}

InferredSchedule scheduleak(const Observation& obs, const SearchLimits& limits) {
  const TaskSet& ts = obs.known;
  require_valid(ts);
  require_fixed_periodic(ts, "scheduleak");

  Search s{obs, limits, busy_mask(obs), {}, {}, {}, {}, {}, {}, 0, {}, {}, {}};
  const std::size_t n = ts.tasks.size();
  const Tick len = obs.end - obs.begin;
  s.observed_busy = std::accumulate(s.observed.begin(), s.observed.end(), Tick{0});

  InferredSchedule out;
  try {
    out.low_confidence = n > 0 && len < hyperperiod(ts);
  } catch (const Error&) {
    out.low_confidence = true;
  }

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  // Heaviest utilization first: these have the fewest admissible phases.
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const Task& x = ts.tasks[a];
    const Task& y = ts.tasks[b];
    return static_cast<__int128>(x.wcet) * y.period > static_cast<__int128>(y.wcet) * x.period;
  });
  for (std::size_t i : idx) {
    s.order.push_back(&ts.tasks[i]);
    s.order_index.push_back(i);
  }

  // A release at r keeps the processor busy for at least C ticks from r.
  for (const Task* t : s.order) {
    std::vector<Tick> ok;
    for (Tick phi = 0; phi < t->period; ++phi) {
      bool good = true;
      for (Tick r = phi; r < obs.end && good; r += t->period) {
        for (Tick k = std::max(r, obs.begin); k < std::min(r + t->wcet, obs.end) && good; ++k) {
          good = s.observed[s.at(k)] != 0;
        }
      }
      if (good) ok.push_back(phi);
    }
    s.allowed.push_back(std::move(ok));
  }

  s.coverable.assign(n + 1, std::vector<std::uint8_t>(static_cast<std::size_t>(len), 0));
  s.max_demand.assign(n + 1, 0);
  for (std::size_t d = n; d-- > 0;) {
    s.coverable[d] = s.coverable[d + 1];
    const Task& t = *s.order[d];
    for (Tick phi : s.allowed[d]) {
      for (Tick r = phi; r < obs.end; r += t.period) {
        if (r >= obs.begin) s.coverable[d][s.at(r)] = 1;
      }
    }
    s.max_demand[d] = s.max_demand[d + 1] + (obs.end + t.period - 1) / t.period * t.wcet;
  }
  // Every interval that opens inside the window (not carried over from
  // before it) opens with a release.
  for (const BusyInterval& b : obs.busy) {
    if (b.start > obs.begin || obs.begin == 0) s.starts.push_back(b.start);
  }

  s.phases.assign(n, 0);
  if (n == 0) {
    if (s.observed_busy == 0) s.found.push_back({});
  } else if (s.max_demand[0] >= s.observed_busy) {
    for (Tick st : s.starts) {
      if (!s.coverable[0][s.at(st)]) {
        s.starts.clear();
        s.allowed.assign(n, {});
        break;
      }
    }
    s.descend(0);
  }

  if (s.found.empty()) throw Error("scheduleak: no phase assignment reproduces the observation");
  std::sort(s.found.begin(), s.found.end());
  s.found.erase(std::unique(s.found.begin(), s.found.end()), s.found.end());
  out.candidates = std::move(s.found);
  out.ambiguity = out.candidates.size();
  if (out.ambiguity == 1) out.point_estimate = out.candidates.front();
  return out;
}

std::vector<PhaseVector> brute_force_phases(const Observation& obs, const SearchLimits& limits) {
  const TaskSet& ts = obs.known;
  require_valid(ts);
  require_fixed_periodic(ts, "brute_force_phases");
  const auto observed = busy_mask(obs);
  std::uint64_t space = 1;
  for (const Task& t : ts.tasks) {
    space *= static_cast<std::uint64_t>(t.period);
    if (space > limits.brute_force_cap) throw Error("brute_force_phases: search space exceeds the cap");
  }
  std::vector<const Task*> tasks;
  for (const Task& t : ts.tasks) tasks.push_back(&t);

  std::vector<PhaseVector> out;
  PhaseVector v(ts.tasks.size(), 0);
  std::vector<std::uint8_t> mask;
  while (true) {
    if (subset_mask(tasks, v, obs.begin, obs.end, mask, &observed) &&
        kernels::first_mismatch(mask, observed) == observed.size()) {
      out.push_back(v);
    }
    std::size_t k = 0;
    for (; k < v.size(); ++k) {
      if (++v[k] < ts.tasks[k].period) break;
      v[k] = 0;
    }
    if (k == v.size()) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

AttackOutcome attack_success(const InferredSchedule& inferred, const PhaseVector& truth) {
  if (inferred.point_estimate) {
    return *inferred.point_estimate == truth ? AttackOutcome::exact : AttackOutcome::failed;
  }
  if (std::binary_search(inferred.candidates.begin(), inferred.candidates.end(), truth)) {
    return AttackOutcome::ambiguous_containing_truth;
  }
  return AttackOutcome::failed;
}

std::vector<Tick> inferred_job_starts(const TaskSet& ts, const PhaseVector& phases, TaskId task, Tick duration) {
  if (phases.size() != ts.tasks.size()) throw Error("inferred_job_starts: phase vector size mismatch");
  TaskSet shifted = ts;
  for (std::size_t i = 0; i < phases.size(); ++i) shifted.tasks[i].phase = phases[i];
  const auto trace = simulate(shifted, duration, 0);
  std::vector<Tick> starts;
  for (const Job& j : trace.jobs) {
    if (j.task_id == task && j.start) starts.push_back(*j.start);
  }
  return starts;
}

void write_observation_csv(std::ostream& out, const Observation& obs) {
  out << "begin,end\n";
  for (const BusyInterval& b : obs.busy) out << b.start << ',' << b.end << '\n';
}

std::vector<BusyInterval> read_observation_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("observation CSV: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "begin,end") throw Error("observation CSV: unexpected header '" + line + "'");
  std::vector<BusyInterval> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error("observation CSV row " + std::to_string(row) + ": expected 2 columns");
    try {
      out.push_back({std::stoll(line.substr(0, comma)), std::stoll(line.substr(comma + 1))});
    } catch (const std::logic_error&) {
      throw Error("observation CSV row " + std::to_string(row) + ": malformed value");
    }
  }
  return out;
}

}  // namespace rtsec
