#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rtsec/rng.hpp"
#include "rtsec/task_model.hpp"

namespace rtsec {

// Slot occupants that are not tasks.
inline constexpr TaskId kIdle = -1;
inline constexpr TaskId kFlush = -2;
inline constexpr JobId kNoJob = -1;

struct Job {
  TaskId task_id = 0;
  JobId id = kNoJob;
  std::size_t task_index = 0;
  Tick release = 0;
  Tick absolute_deadline = 0;
  Tick exec_demand = 0;
  // Context-switch overhead charged to this job on top of exec_demand.
  Tick overhead = 0;
  std::optional<Tick> start;
  // Time the job finished, i.e. one past its last executed slot.
  std::optional<Tick> completion;
  Tick remaining = 0;
  bool missed = false;
  bool aborted = false;
};

struct SlotRecord {
  Tick tick = 0;
  TaskId occupant = kIdle;
  JobId job_id = kNoJob;
  bool operator==(const SlotRecord&) const = default;
};

enum class EventKind {
  release,
  start,
  preempt,
  resume,
  complete,
  deadline_miss,
  flush_begin,
  flush_end,
  mode_switch,
  restart_begin,
  restart_end,
};

std::string_view to_string(EventKind kind);
std::optional<EventKind> parse_event_kind(std::string_view text);

// For mode_switch events job_id carries the new mode: 1 = elevated
// (fine-grained checking), 0 = passive.
struct Event {
  Tick tick = 0;
  EventKind kind = EventKind::release;
  TaskId task_id = kIdle;
  JobId job_id = kNoJob;
  bool operator==(const Event&) const = default;
};

struct ScheduleTrace {
  Tick duration = 0;
  std::vector<SlotRecord> slots;
  std::vector<Event> events;
  std::vector<Job> jobs;
  std::uint64_t seed = 0;
};

// Maximal run of non-idle slots, [start, end).
struct BusyInterval {
  Tick start = 0;
  Tick end = 0;
  Tick length() const { return end - start; }
  bool operator==(const BusyInterval&) const = default;
};

// Forces the demand of one job (0-based per-task release index), overriding
// the task's execution-time model. Used for fault injection.
struct DemandOverride {
  TaskId task = 0;
  std::int64_t job_index = 0;
  Tick demand = 1;
};

struct SimConfig {
  Tick context_switch_cost = 0;
  bool abort_on_miss = false;
  bool preemptive = true;
  // Mean of the geometric extra delay added to sporadic inter-arrivals.
  double sporadic_mean_extra = 0.0;
  std::vector<DemandOverride> overrides;
};

struct Choice {
  enum class Kind { job, idle, flush };
  Kind kind = Kind::idle;
  std::size_t job = 0;  // index into the engine's job table when kind == job
  Tick length = 0;      // flush length when kind == flush

  static Choice run(std::size_t job) { return {Kind::job, job, 0}; }
  static Choice idle() { return {Kind::idle, 0, 0}; }
  static Choice flush(Tick length) { return {Kind::flush, 0, length}; }
};

// What a policy sees and may change while a simulation runs.
class SchedulerContext {
 public:
  virtual ~SchedulerContext() = default;

  virtual Tick now() const = 0;
  virtual const TaskSet& task_set() const = 0;
  // Unfinished jobs, highest effective priority first (ties: earlier release,
  // then lower job id).
  virtual std::span<const std::size_t> ready() const = 0;
  virtual const Job& job(std::size_t index) const = 0;
  virtual int priority_of_task(std::size_t task_index) const = 0;
  int priority_of_job(std::size_t job_index) const { return priority_of_task(job(job_index).task_index); }
  virtual Rng& rng() = 0;

  virtual void set_task_priority(std::size_t task_index, int priority) = 0;
  virtual void set_task_period(std::size_t task_index, Tick period) = 0;
  virtual void set_task_deadline(std::size_t task_index, Tick deadline) = 0;
  virtual void set_next_release(std::size_t task_index, Tick tick) = 0;
  virtual std::optional<Tick> last_release(std::size_t task_index) const = 0;
  virtual bool has_pending_job(std::size_t task_index) const = 0;
  virtual void record(EventKind kind, TaskId task, JobId job) = 0;
};

// A scheduling policy. The engine calls select() at scheduling points:
// releases, completions, the end of a flush, priority changes, and whenever
// reschedule() returns true for the current choice.
class SchedulingPolicy {
 public:
  virtual ~SchedulingPolicy() = default;

  virtual std::string name() const = 0;
  // Called once before the first tick; throws PolicyRejected if the task set
  // cannot be run under this policy.
  virtual void bind(const TaskSet& /*ts*/) {}
  // Start of every tick, before deadline checks and releases.
  virtual void on_tick(SchedulerContext& /*ctx*/) {}
  virtual void on_release(SchedulerContext& /*ctx*/, std::size_t /*job*/) {}
  virtual void on_complete(SchedulerContext& /*ctx*/, std::size_t /*job*/) {}
  virtual void on_flush_end(SchedulerContext& /*ctx*/) {}
  virtual bool reschedule(const SchedulerContext& /*ctx*/, const Choice& /*current*/) const {
    return false;
  }
  virtual Choice select(SchedulerContext& ctx) = 0;
  // After the slot for `executed` is committed, before completion handling.
  virtual void on_slot(SchedulerContext& /*ctx*/, const Choice& /*executed*/) {}
};

class PolicyRejected : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Plain preemptive fixed-priority: the highest-priority ready job, else idle.
class FixedPriorityPolicy final : public SchedulingPolicy {
 public:
  std::string name() const override { return "vanilla"; }
  Choice select(SchedulerContext& ctx) override;
};

// Runs [0, duration). Deterministic for fixed (ts, policy state, seed,
// config). Workload draws (variable demands, sporadic gaps) and policy draws
// use separate streams derived from `seed`.
ScheduleTrace simulate(const TaskSet& ts, SchedulingPolicy& policy, Tick duration, std::uint64_t seed,
                       const SimConfig& config = {});
// Convenience overload using FixedPriorityPolicy.
ScheduleTrace simulate(const TaskSet& ts, Tick duration, std::uint64_t seed = 0, const SimConfig& config = {});

std::vector<BusyInterval> extract_busy_intervals(const ScheduleTrace& trace);

enum class TraceViolationKind {
  occupancy,
  before_release,
  after_completion,
  demand_mismatch,
  deadline_miss,
  unknown_task,
};

std::string_view to_string(TraceViolationKind kind);

struct TraceViolation {
  TraceViolationKind kind;
  Tick tick = 0;
  TaskId task = kIdle;
  JobId job = kNoJob;
  std::string detail;
};

std::vector<TraceViolation> check_trace(const ScheduleTrace& trace, const TaskSet& ts);

// Count of deadline_miss events, optionally restricted to some task ids.
std::size_t count_deadline_misses(const ScheduleTrace& trace);
std::size_t count_deadline_misses(const ScheduleTrace& trace, std::span<const TaskId> tasks);

// CSV export/import. Slots: `tick,occupant,job_id`; events:
// `tick,kind,task_id,job_id`. Occupants are task ids or IDLE / FLUSH.
void write_slots_csv(std::ostream& out, const ScheduleTrace& trace);
void write_events_csv(std::ostream& out, const ScheduleTrace& trace);
std::vector<SlotRecord> read_slots_csv(std::istream& in);
std::vector<Event> read_events_csv(std::istream& in);

}  // namespace rtsec
