#include "rtsec/engine.hpp"

#include <algorithm>
#include <map>

namespace rtsec {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::release: return "release";
    case EventKind::start: return "start";
    case EventKind::preempt: return "preempt";
    case EventKind::resume: return "resume";
    case EventKind::complete: return "complete";
    case EventKind::deadline_miss: return "deadline_miss";
    case EventKind::flush_begin: return "flush_begin";
    case EventKind::flush_end: return "flush_end";
    case EventKind::mode_switch: return "mode_switch";
    case EventKind::restart_begin: return "restart_begin";
    case EventKind::restart_end: return "restart_end";
  }
  return "unknown";
}

std::optional<EventKind> parse_event_kind(std::string_view text) {
  for (int k = 0; k <= static_cast<int>(EventKind::restart_end); ++k) {
    const auto kind = static_cast<EventKind>(k);
    if (to_string(kind) == text) return kind;
  }
  return std::nullopt;
}

Choice FixedPriorityPolicy::select(SchedulerContext& ctx) {
  const auto ready = ctx.ready();
  return ready.empty() ? Choice::idle() : Choice::run(ready.front());
}

namespace {

struct TaskRuntime {
  int priority = 0;
  Tick period = 1;
  Tick deadline = 1;
  Tick next_release = 0;
  std::optional<Tick> last_release;
  std::int64_t released = 0;
  int pending = 0;
};

class Engine final : public SchedulerContext {
 public:
  Engine(const TaskSet& ts, SchedulingPolicy& policy, std::uint64_t seed, const SimConfig& config)
      : ts_(ts),
        policy_(policy),
        config_(config),
        workload_rng_(derive_seed(seed, 0)),
        policy_rng_(derive_seed(seed, 1)) {
    runtime_.reserve(ts.tasks.size());
    for (const Task& t : ts.tasks) {
      runtime_.push_back({t.priority, t.period, t.deadline, t.phase, std::nullopt, 0, 0});
    }
    for (const auto& o : config.overrides) overrides_[{o.task, o.job_index}] = o.demand;
    trace_.seed = seed;
  }

  ScheduleTrace run(Tick duration) {
    trace_.duration = duration;
    trace_.slots.reserve(static_cast<std::size_t>(duration));
    for (now_ = 0; now_ < duration; ++now_) step();
    // Jobs whose deadline coincides with the end of the window.
    for (std::size_t j : ready_) {
      Job& job = jobs_[j];
      if (!job.missed && job.absolute_deadline == duration) {
        job.missed = true;
        record(EventKind::deadline_miss, job.task_id, job.id);
      }
    }
    trace_.jobs = std::move(jobs_);
    return std::move(trace_);
  }

  // SchedulerContext
  Tick now() const override { return now_; }
  const TaskSet& task_set() const override { return ts_; }
  std::span<const std::size_t> ready() const override { return ready_; }
  const Job& job(std::size_t index) const override { return jobs_[index]; }
  int priority_of_task(std::size_t task_index) const override { return runtime_[task_index].priority; }
  Rng& rng() override { return policy_rng_; }

  void set_task_priority(std::size_t task_index, int priority) override {
    if (runtime_[task_index].priority == priority) return;
    runtime_[task_index].priority = priority;
    sort_ready();
    need_decision_ = true;
  }
  void set_task_period(std::size_t task_index, Tick period) override {
    runtime_[task_index].period = period;
  }
  void set_task_deadline(std::size_t task_index, Tick deadline) override {
    runtime_[task_index].deadline = deadline;
  }
  void set_next_release(std::size_t task_index, Tick tick) override {
    runtime_[task_index].next_release = tick;
  }
  std::optional<Tick> last_release(std::size_t task_index) const override {
    return runtime_[task_index].last_release;
  }
  bool has_pending_job(std::size_t task_index) const override { return runtime_[task_index].pending > 0; }
  void record(EventKind kind, TaskId task, JobId job) override {
    trace_.events.push_back({now_ + event_offset_, kind, task, job});
  }

 private:
  void step() {
    policy_.on_tick(*this);
    check_deadlines();
    release_jobs();
    dispatch();
  }

  void check_deadlines() {
    for (std::size_t i = 0; i < ready_.size();) {
      Job& job = jobs_[ready_[i]];
      if (!job.missed && job.absolute_deadline == now_) {
        job.missed = true;
        record(EventKind::deadline_miss, job.task_id, job.id);
        if (config_.abort_on_miss) {
          job.aborted = true;
          --runtime_[job.task_index].pending;
          ready_.erase(ready_.begin() + static_cast<std::ptrdiff_t>(i));
          need_decision_ = true;
          continue;
        }
      }
      ++i;
    }
  }

  Tick draw_demand(const Task& t, std::int64_t job_index) {
    if (auto it = overrides_.find({t.id, job_index}); it != overrides_.end()) return it->second;
    if (t.fixed_execution()) return t.wcet;
    return workload_rng_.between(t.bcet, t.wcet);
  }

  void release_jobs() {
    bool released = false;
    for (std::size_t ti = 0; ti < ts_.tasks.size(); ++ti) {
      TaskRuntime& rt = runtime_[ti];
      const Task& t = ts_.tasks[ti];
      while (rt.next_release == now_) {
        Job job;
        job.task_id = t.id;
        job.id = static_cast<JobId>(jobs_.size());
        job.task_index = ti;
        job.release = now_;
        job.absolute_deadline = now_ + rt.deadline;
        job.exec_demand = draw_demand(t, rt.released);
        job.remaining = job.exec_demand;
        jobs_.push_back(job);
        ready_.push_back(jobs_.size() - 1);
        ++rt.released;
        ++rt.pending;
        rt.last_release = now_;
        Tick gap = rt.period;
        if (t.kind == TaskKind::sporadic) gap += workload_rng_.geometric(config_.sporadic_mean_extra);
        rt.next_release = now_ + gap;
        record(EventKind::release, t.id, job.id);
        policy_.on_release(*this, jobs_.size() - 1);
        released = true;
      }
    }
    if (released) {
      sort_ready();
      need_decision_ = true;
    }
  }

  void sort_ready() {
    std::sort(ready_.begin(), ready_.end(), [&](std::size_t a, std::size_t b) {
      const Job& x = jobs_[a];
      const Job& y = jobs_[b];
      const int px = runtime_[x.task_index].priority;
      const int py = runtime_[y.task_index].priority;
      if (px != py) return px < py;
      if (x.release != y.release) return x.release < y.release;
      return x.id < y.id;
    });
  }

  bool current_valid() const {
    if (current_.kind != Choice::Kind::job) return true;
    return std::find(ready_.begin(), ready_.end(), current_.job) != ready_.end();
  }

  void note_preemption_of_previous(std::optional<std::size_t> next) {
    if (!last_ran_ || (next && *next == *last_ran_)) return;
    const Job& prev = jobs_[*last_ran_];
    if (!prev.completion && !prev.aborted) record(EventKind::preempt, prev.task_id, prev.id);
  }

  void dispatch() {
    if (flush_left_ == 0) {
      const bool running_job = current_.kind == Choice::Kind::job && current_valid();
      bool decide = need_decision_ || !current_valid();
      if (!decide) decide = policy_.reschedule(*this, current_);
      if (running_job && !config_.preemptive && jobs_[current_.job].start) decide = false;
      if (decide) {
        current_ = policy_.select(*this);
        need_decision_ = false;
        if (current_.kind == Choice::Kind::flush) {
          if (current_.length <= 0) throw Error("policy emitted a flush of non-positive length");
          flush_left_ = current_.length;
          record(EventKind::flush_begin, kFlush, kNoJob);
        }
      }
    }

    if (flush_left_ > 0) {
      note_preemption_of_previous(std::nullopt);
      last_ran_.reset();
      trace_.slots.push_back({now_, kFlush, kNoJob});
      policy_.on_slot(*this, Choice::flush(flush_left_));
      if (--flush_left_ == 0) {
        event_offset_ = 1;
        record(EventKind::flush_end, kFlush, kNoJob);
        policy_.on_flush_end(*this);
        event_offset_ = 0;
        current_ = Choice::idle();
        need_decision_ = true;
      }
      return;
    }

    if (current_.kind != Choice::Kind::job) {
      note_preemption_of_previous(std::nullopt);
      last_ran_.reset();
      trace_.slots.push_back({now_, kIdle, kNoJob});
      policy_.on_slot(*this, Choice::idle());
      return;
    }

    const std::size_t j = current_.job;
    note_preemption_of_previous(j);
    Job& job = jobs_[j];
    if (!last_ran_ || *last_ran_ != j) {
      if (!job.start) {
        job.start = now_;
        record(EventKind::start, job.task_id, job.id);
      } else {
        record(EventKind::resume, job.task_id, job.id);
      }
      if (config_.context_switch_cost > 0 && last_job_ && *last_job_ != j) {
        job.overhead += config_.context_switch_cost;
        job.remaining += config_.context_switch_cost;
      }
    }
    last_ran_ = j;
    last_job_ = j;
    trace_.slots.push_back({now_, job.task_id, job.id});
    policy_.on_slot(*this, current_);
    if (--job.remaining == 0) {
      job.completion = now_ + 1;
      // Completion happens at the end of this slot.
      event_offset_ = 1;
      record(EventKind::complete, job.task_id, job.id);
      --runtime_[job.task_index].pending;
      ready_.erase(std::find(ready_.begin(), ready_.end(), j));
      policy_.on_complete(*this, j);
      event_offset_ = 0;
      need_decision_ = true;
    }
  }

  const TaskSet& ts_;
  SchedulingPolicy& policy_;
  const SimConfig& config_;
  Rng workload_rng_;
  Rng policy_rng_;
  std::vector<TaskRuntime> runtime_;
  std::map<std::pair<TaskId, std::int64_t>, Tick> overrides_;
  std::vector<Job> jobs_;
  std::vector<std::size_t> ready_;
  ScheduleTrace trace_;
  Tick now_ = 0;
  Tick event_offset_ = 0;
  Choice current_ = Choice::idle();
  Tick flush_left_ = 0;
  bool need_decision_ = true;
  std::optional<std::size_t> last_ran_;  // job that occupied the previous slot
  std::optional<std::size_t> last_job_;  // most recent job to run at all
};

}  // namespace

ScheduleTrace simulate(const TaskSet& ts, SchedulingPolicy& policy, Tick duration, std::uint64_t seed,
                       const SimConfig& config) {
  require_valid(ts);
  if (duration < 1) throw Error("simulate: duration must be >= 1");
  if (config.context_switch_cost < 0) throw Error("simulate: negative context-switch cost");
  for (const auto& o : config.overrides) {
    if (o.demand < 1) throw Error("simulate: demand override must be >= 1");
  }
  policy.bind(ts);
  Engine engine(ts, policy, seed, config);
  return engine.run(duration);
}

ScheduleTrace simulate(const TaskSet& ts, Tick duration, std::uint64_t seed, const SimConfig& config) {
  FixedPriorityPolicy fp;
  return simulate(ts, fp, duration, seed, config);
}

std::vector<BusyInterval> extract_busy_intervals(const ScheduleTrace& trace) {
  std::vector<BusyInterval> out;
  std::optional<Tick> open;
  for (const SlotRecord& s : trace.slots) {
    if (s.occupant != kIdle) {
      if (!open) open = s.tick;
    } else if (open) {
      out.push_back({*open, s.tick});
      open.reset();
    }
  }
  if (open) out.push_back({*open, trace.slots.empty() ? *open : trace.slots.back().tick + 1});
  return out;
}

std::string_view to_string(TraceViolationKind kind) {
  switch (kind) {
    case TraceViolationKind::occupancy: return "occupancy";
    case TraceViolationKind::before_release: return "before_release";
    case TraceViolationKind::after_completion: return "after_completion";
    case TraceViolationKind::demand_mismatch: return "demand_mismatch";
    case TraceViolationKind::deadline_miss: return "deadline_miss";
    case TraceViolationKind::unknown_task: return "unknown_task";
  }
  return "unknown";
}

std::vector<TraceViolation> check_trace(const ScheduleTrace& trace, const TaskSet& ts) {
  std::vector<TraceViolation> out;
  std::vector<char> seen(static_cast<std::size_t>(std::max<Tick>(trace.duration, 0)), 0);
  std::map<JobId, Tick> executed;
  std::map<JobId, Tick> last_slot;
  std::map<JobId, const Job*> jobs;
  for (const Job& j : trace.jobs) jobs[j.id] = &j;
  std::map<JobId, bool> completed;
  for (const Event& e : trace.events) {
    if (e.kind == EventKind::complete) completed[e.job_id] = true;
  }

  for (const SlotRecord& s : trace.slots) {
    if (s.tick < 0 || s.tick >= trace.duration) {
      out.push_back({TraceViolationKind::occupancy, s.tick, s.occupant, s.job_id, "slot outside the trace"});
      continue;
    }
    auto& mark = seen[static_cast<std::size_t>(s.tick)];
    if (mark) {
      out.push_back({TraceViolationKind::occupancy, s.tick, s.occupant, s.job_id, "tick occupied twice"});
      continue;
    }
    mark = 1;
    if (s.occupant == kIdle || s.occupant == kFlush) continue;
    if (ts.find(s.occupant) == nullptr) {
      out.push_back({TraceViolationKind::unknown_task, s.tick, s.occupant, s.job_id, "occupant not in task set"});
      continue;
    }
    auto it = jobs.find(s.job_id);
    if (it == jobs.end() || it->second->task_id != s.occupant) {
      out.push_back({TraceViolationKind::unknown_task, s.tick, s.occupant, s.job_id, "slot names an unknown job"});
      continue;
    }
    const Job& job = *it->second;
    if (s.tick < job.release) {
      out.push_back({TraceViolationKind::before_release, s.tick, s.occupant, s.job_id, "executed before release"});
    }
    if (job.completion && s.tick >= *job.completion) {
      out.push_back({TraceViolationKind::after_completion, s.tick, s.occupant, s.job_id,
                     "executed after completion"});
    }
    ++executed[s.job_id];
    last_slot[s.job_id] = s.tick;
  }
  for (std::size_t t = 0; t < seen.size(); ++t) {
    if (!seen[t]) {
      out.push_back({TraceViolationKind::occupancy, static_cast<Tick>(t), kIdle, kNoJob, "tick has no occupant"});
    }
  }

  for (const Job& job : trace.jobs) {
    const Tick ran = executed[job.id];
    const bool done = completed.count(job.id) > 0;
    const Tick demand = job.exec_demand + job.overhead;
    if (!job.aborted && (done != (ran == demand) || ran > demand)) {
      out.push_back({TraceViolationKind::demand_mismatch, job.release, job.task_id, job.id,
                     "executed " + std::to_string(ran) + " of demand " + std::to_string(demand)});
    }
    // Deadline conformance, from slots: finish time is one past the last slot.
    if (done) {
      const Tick finish = last_slot.count(job.id) ? last_slot[job.id] + 1 : job.release;
      if (finish > job.absolute_deadline) {
        out.push_back({TraceViolationKind::deadline_miss, job.absolute_deadline, job.task_id, job.id,
                       "finished at " + std::to_string(finish)});
      }
    } else if (job.absolute_deadline <= trace.duration) {
      out.push_back({TraceViolationKind::deadline_miss, job.absolute_deadline, job.task_id, job.id,
                     "unfinished at deadline"});
    }
  }
  return out;
}

std::size_t count_deadline_misses(const ScheduleTrace& trace) {
  return static_cast<std::size_t>(std::count_if(trace.events.begin(), trace.events.end(), [](const Event& e) {
    return e.kind == EventKind::deadline_miss;
  }));
}

std::size_t count_deadline_misses(const ScheduleTrace& trace, std::span<const TaskId> tasks) {
  return static_cast<std::size_t>(std::count_if(trace.events.begin(), trace.events.end(), [&](const Event& e) {
    return e.kind == EventKind::deadline_miss && std::find(tasks.begin(), tasks.end(), e.task_id) != tasks.end();
  }));
}

}  // namespace rtsec
