#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rtsec/cache_attack.hpp"
#include "rtsec/engine.hpp"
#include "rtsec/flush.hpp"
#include "rtsec/monitor.hpp"
#include "rtsec/restart.hpp"
#include "rtsec/shuffle.hpp"

namespace rtsec {

enum class PolicyKind { vanilla, shuffle, flush, monitor };
enum class AttackKind { none, scheduleak, scheduleak_cache };

std::string_view to_string(PolicyKind kind);
std::string_view to_string(AttackKind kind);

struct RestartBlock {
  RestartConfig config;
  double lambda = 0.1;
  double mu = 1.0;
  double damage_rate = 1.0;
  double weight = 0.5;
  // Periods evaluated by optimize_period; empty means none.
  std::vector<double> grid;
  std::uint64_t trials = 0;  // Monte Carlo trials, 0 to skip

  bool operator==(const RestartBlock&) const = default;
};

struct MonitorBlock {
  SecurityTaskConfig task;
  std::vector<Tick> anomalies;

  bool operator==(const MonitorBlock& o) const {
    return task.id == o.task.id && task.check_cost == o.task.check_cost &&
           task.passive_period == o.task.passive_period && task.fine_priority == o.task.fine_priority &&
           task.escalation == o.task.escalation && anomalies == o.anomalies;
  }
};

struct CacheBlock {
  TaskId victim = 0;
  CacheConfig config;
  std::vector<std::size_t> usage;

  bool operator==(const CacheBlock& o) const {
    return victim == o.victim && config.num_lines == o.config.num_lines && config.epsilon == o.config.epsilon &&
           config.round_length == o.config.round_length && config.other_lines == o.config.other_lines &&
           config.seed == o.config.seed && usage == o.usage;
  }
};

struct ShuffleBlock {
  ShuffleMode mode = ShuffleMode::task_only;
  std::uint64_t seed = 0;
  ShuffleGuard guard = ShuffleGuard::budget;

  bool operator==(const ShuffleBlock&) const = default;
};

struct Scenario {
  std::string name;
  TaskSet tasks;
  PolicyKind policy = PolicyKind::vanilla;
  AttackKind attack = AttackKind::none;
  Tick duration = 0;
  std::size_t ensemble = 1;
  std::uint64_t seed = 0;
  std::string out;  // default output directory; may be empty
  Tick context_switch_cost = 0;
  bool preemptive = true;
  bool abort_on_miss = false;
  double sporadic_mean_extra = 0.0;
  // Each member draws phase_i uniformly from [0, T_i) off its own seed.
  bool random_phases = false;

  std::optional<ShuffleBlock> shuffle;
  std::optional<SecurityPolicy> security;
  std::optional<RestartBlock> restart;
  std::optional<MonitorBlock> monitor;
  std::optional<CacheBlock> cache;

  bool operator==(const Scenario&) const = default;
};

// INI-style text: `[section]` headers, `key = value` lines, `#` comments.
// Sections: [scenario], one [task] per task, and optional [shuffle],
// [security], [restart], [monitor], [cache]. Unknown sections or keys,
// duplicates and malformed values are reported with their line numbers;
// all errors are gathered into one ValidationError.
Scenario parse_scenario(std::string_view text, std::string_view origin = "<scenario>");
Scenario load_scenario(const std::filesystem::path& path);
std::string emit_scenario(const Scenario& s);

// Cross-field checks: task-set validity, the block each policy or attack
// needs, and attack/defense compatibility. Throws ValidationError.
void validate(const Scenario& s);

// Sets one numeric field named `section.key` (e.g. restart.period,
// security.flush_cost, task.<id>.C). Throws ValidationError for unknown
// fields or values that do not parse.
void set_field(Scenario& s, std::string_view field, std::string_view value);

}  // namespace rtsec
