#include "rtsec/flush.hpp"

#include <map>

namespace rtsec {

namespace {

int level_of(const Task& t, const SecurityPolicy& policy) {
  auto it = policy.levels.find(t.id);
  return it != policy.levels.end() ? it->second : t.security_level;
}

bool leaks(const Task& prev, const Task& next, const SecurityPolicy& policy) {
  if (prev.id == next.id) return false;
  if (policy.mode == SecurityMode::total_order) return level_of(prev, policy) < level_of(next, policy);
  return policy.noleak.count({prev.id, next.id}) > 0;
}

const Task& lookup(TaskId id, const TaskSet& ts) {
  const Task* t = ts.find(id);
  if (t == nullptr) throw Error("unknown task id " + std::to_string(id) + " in security policy");
  return *t;
}

}  // namespace

std::vector<Violation> validate(const SecurityPolicy& policy, const TaskSet& ts) {
  std::vector<Violation> out;
  if (policy.flush_cost < 0) out.push_back({std::nullopt, "flush_cost >= 0"});
  for (const auto& [id, level] : policy.levels) {
    if (ts.find(id) == nullptr) out.push_back({id, "security level for unknown task"});
  }
  for (const auto& [from, to] : policy.noleak) {
    if (from == to) out.push_back({from, "noleak diagonal must be false"});
    if (ts.find(from) == nullptr) out.push_back({from, "noleak names unknown task"});
    if (ts.find(to) == nullptr) out.push_back({to, "noleak names unknown task"});
  }
  return out;
}

bool needs_flush(TaskId prev, TaskId next, const SecurityPolicy& policy, const TaskSet& ts) {
  if (prev == kIdle || prev == kFlush || next == kIdle || next == kFlush) {
    throw Error("needs_flush is defined between tasks only");
  }
  return leaks(lookup(prev, ts), lookup(next, ts), policy);
}

SecurityPolicy compile_to_pairwise(const SecurityPolicy& policy, const TaskSet& ts) {
  SecurityPolicy out;
  out.mode = SecurityMode::pairwise;
  out.flush_cost = policy.flush_cost;
  for (const Task& a : ts.tasks) {
    for (const Task& b : ts.tasks) {
      if (leaks(a, b, policy)) out.noleak.insert({a.id, b.id});
    }
  }
  return out;
}

bool any_leaking_pair(const SecurityPolicy& policy, const TaskSet& ts) {
  for (const Task& a : ts.tasks) {
    for (const Task& b : ts.tasks) {
      if (leaks(a, b, policy)) return true;
    }
  }
  return false;
}

void FlushPolicy::bind(const TaskSet& ts) {
  const auto problems = validate(policy_, ts);
  if (!problems.empty()) {
    throw PolicyRejected("flush policy: " + problems.front().rule +
                         (problems.front().task ? " (task " + std::to_string(*problems.front().task) + ")" : ""));
  }
  const std::size_t n = ts.tasks.size();
  leaks_.assign(n, std::vector<char>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) leaks_[i][j] = leaks(ts.tasks[i], ts.tasks[j], policy_) ? 1 : 0;
  }
  taint_.reset();
}

Choice FlushPolicy::select(SchedulerContext& ctx) {
  const auto ready = ctx.ready();
  if (ready.empty()) return Choice::idle();
  const std::size_t next = ready.front();
  if (policy_.flush_cost > 0 && taint_ && leaks_[*taint_][ctx.job(next).task_index]) {
    return Choice::flush(policy_.flush_cost);
  }
  return Choice::run(next);
}

void FlushPolicy::on_slot(SchedulerContext& ctx, const Choice& executed) {
  if (executed.kind == Choice::Kind::job) taint_ = ctx.job(executed.job).task_index;
}

void FlushPolicy::on_flush_end(SchedulerContext& /*ctx*/) { taint_.reset(); }

std::size_t count_violations(const ScheduleTrace& trace, const SecurityPolicy& policy, const TaskSet& ts) {
  std::map<TaskId, const Task*> by_id;
  for (const Task& t : ts.tasks) by_id[t.id] = &t;
  std::size_t count = 0;
  const bool free_flush = policy.flush_cost == 0;
  const Task* prev = nullptr;
  for (const SlotRecord& s : trace.slots) {
    if (s.occupant == kIdle) continue;
    if (s.occupant == kFlush) {
      prev = nullptr;
      continue;
    }
    auto it = by_id.find(s.occupant);
    if (it == by_id.end()) throw Error("trace names task " + std::to_string(s.occupant) + " not in the task set");
    const Task* next = it->second;
    if (prev != nullptr && !free_flush && leaks(*prev, *next, policy)) ++count;
    prev = next;
  }
  return count;
}

}  // namespace rtsec
