#include "rtsec/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace rtsec {

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::vanilla: return "vanilla";
    case PolicyKind::shuffle: return "shuffle";
    case PolicyKind::flush: return "flush";
    case PolicyKind::monitor: return "monitor";
  }
  return "unknown";
}

std::string_view to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::none: return "none";
    case AttackKind::scheduleak: return "scheduleak";
    case AttackKind::scheduleak_cache: return "scheduleak+cache";
  }
  return "unknown";
}

namespace {

// Thrown by value parsers; the caller attaches the location.
struct BadValue {
  std::string message;
};

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  if (trim(s).empty()) return out;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find(sep, pos);
    out.push_back(trim(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view text) {
  text = trim(text);
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw BadValue{"'" + std::string(text) + "' is not a valid number"};
  }
  return value;
}

bool parse_bool(std::string_view text) {
  text = trim(text);
  if (text == "true") return true;
  if (text == "false") return false;
  throw BadValue{"'" + std::string(text) + "' is not true or false"};
}

template <typename T>
std::vector<T> parse_list(std::string_view text) {
  std::vector<T> out;
  for (auto item : split(text, ',')) out.push_back(parse_number<T>(item));
  return out;
}

// `a:b:step` (inclusive range) or a comma list.
std::vector<double> parse_grid(std::string_view text) {
  const auto parts = split(text, ':');
  if (parts.size() != 3) return parse_list<double>(text);
  const double a = parse_number<double>(parts[0]);
  const double b = parse_number<double>(parts[1]);
  const double step = parse_number<double>(parts[2]);
  if (!(step > 0.0) || b < a) throw BadValue{"range needs start <= stop and a positive step"};
  std::vector<double> out;
  for (std::int64_t i = 0;; ++i) {
    const double v = a + static_cast<double>(i) * step;
    if (v > b + 1e-9 * step) break;
    out.push_back(v);
    if (out.size() > 1'000'000) throw BadValue{"range has too many points"};
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>) {
      out += format_double(values[i]);
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

using Handlers = std::map<std::string, std::function<void(std::string_view)>, std::less<>>;

template <typename T>
std::function<void(std::string_view)> number_into(T& target) {
  return [&target](std::string_view v) { target = parse_number<T>(v); };
}

std::function<void(std::string_view)> bool_into(bool& target) {
  return [&target](std::string_view v) { target = parse_bool(v); };
}

struct TaskDraft {
  Task task;
  bool has_id = false, has_c = false, has_t = false, has_d = false, has_priority = false, has_bcet = false;
  std::size_t line = 0;
};

Handlers scenario_handlers(Scenario& s) {
  return {
      {"name", [&s](std::string_view v) { s.name = std::string(trim(v)); }},
      {"policy",
       [&s](std::string_view v) {
         for (auto k : {PolicyKind::vanilla, PolicyKind::shuffle, PolicyKind::flush, PolicyKind::monitor}) {
           if (to_string(k) == trim(v)) {
             s.policy = k;
             return;
           }
         }
         throw BadValue{"unknown policy '" + std::string(trim(v)) + "' (vanilla, shuffle, flush, monitor)"};
       }},
      {"attack",
       [&s](std::string_view v) {
         for (auto k : {AttackKind::none, AttackKind::scheduleak, AttackKind::scheduleak_cache}) {
           if (to_string(k) == trim(v)) {
             s.attack = k;
             return;
           }
         }
         throw BadValue{"unknown attack '" + std::string(trim(v)) + "' (none, scheduleak, scheduleak+cache)"};
       }},
      {"duration", number_into(s.duration)},
      {"ensemble", number_into(s.ensemble)},
      {"seed", number_into(s.seed)},
      {"out", [&s](std::string_view v) { s.out = std::string(trim(v)); }},
      {"context_switch_cost", number_into(s.context_switch_cost)},
      {"preemptive", bool_into(s.preemptive)},
      {"abort_on_miss", bool_into(s.abort_on_miss)},
      {"sporadic_mean_extra", number_into(s.sporadic_mean_extra)},
      {"random_phases", bool_into(s.random_phases)},
  };
}

Handlers task_handlers(TaskDraft& d) {
  Task& t = d.task;
  return {
      {"id", [&](std::string_view v) { t.id = parse_number<TaskId>(v); d.has_id = true; }},
      {"C", [&](std::string_view v) { t.wcet = parse_number<Tick>(v); d.has_c = true; }},
      {"T", [&](std::string_view v) { t.period = parse_number<Tick>(v); d.has_t = true; }},
      {"D", [&](std::string_view v) { t.deadline = parse_number<Tick>(v); d.has_d = true; }},
      {"phase", number_into(t.phase)},
      {"kind",
       [&](std::string_view v) {
         v = trim(v);
         if (v == "periodic") t.kind = TaskKind::periodic;
         else if (v == "sporadic") t.kind = TaskKind::sporadic;
         else throw BadValue{"unknown kind '" + std::string(v) + "' (periodic, sporadic)"};
       }},
      {"priority", [&](std::string_view v) { t.priority = parse_number<int>(v); d.has_priority = true; }},
      {"security_level", number_into(t.security_level)},
      {"bcet", [&](std::string_view v) { t.bcet = parse_number<Tick>(v); d.has_bcet = true; }},
  };
}

Handlers shuffle_handlers(ShuffleBlock& b) {
  return {
      {"mode",
       [&b](std::string_view v) {
         const auto m = parse_shuffle_mode(trim(v));
         if (!m) throw BadValue{"unknown shuffle mode '" + std::string(trim(v)) + "'"};
         b.mode = *m;
       }},
      {"seed", number_into(b.seed)},
      {"guard",
       [&b](std::string_view v) {
         v = trim(v);
         if (v == "budget") b.guard = ShuffleGuard::budget;
         else if (v == "none") b.guard = ShuffleGuard::none;
         else throw BadValue{"unknown guard '" + std::string(v) + "' (budget, none)"};
       }},
  };
}

Handlers security_handlers(SecurityPolicy& p) {
  return {
      {"mode",
       [&p](std::string_view v) {
         v = trim(v);
         if (v == "total_order") p.mode = SecurityMode::total_order;
         else if (v == "pairwise") p.mode = SecurityMode::pairwise;
         else throw BadValue{"unknown security mode '" + std::string(v) + "'"};
       }},
      {"levels",
       [&p](std::string_view v) {
         p.levels.clear();
         for (auto item : split(v, ',')) {
           const auto kv = split(item, ':');
           if (kv.size() != 2) throw BadValue{"level entry '" + std::string(item) + "' is not id:level"};
           p.levels[parse_number<TaskId>(kv[0])] = parse_number<int>(kv[1]);
         }
       }},
      {"noleak_pairs",
       [&p](std::string_view v) {
         p.noleak.clear();
         for (auto item : split(v, ',')) {
           const auto ab = split(item, '>');
           if (ab.size() != 2) throw BadValue{"noleak entry '" + std::string(item) + "' is not from>to"};
           p.noleak.insert({parse_number<TaskId>(ab[0]), parse_number<TaskId>(ab[1])});
         }
       }},
      {"flush_cost", number_into(p.flush_cost)},
  };
}

Handlers restart_handlers(RestartBlock& r) {
  return {
      {"period", number_into(r.config.period)},
      {"reboot_time", number_into(r.config.reboot_time)},
      {"detection_triggered", bool_into(r.config.detection_triggered)},
      {"lambda", number_into(r.lambda)},
      {"mu", number_into(r.mu)},
      {"damage_rate", number_into(r.damage_rate)},
      {"weight", number_into(r.weight)},
      {"grid", [&r](std::string_view v) { r.grid = parse_grid(v); }},
      {"trials", number_into(r.trials)},
  };
}

Handlers monitor_handlers(MonitorBlock& m) {
  return {
      {"security_id", number_into(m.task.id)},
      {"check_cost", number_into(m.task.check_cost)},
      {"passive_period", number_into(m.task.passive_period)},
      {"fine_priority", number_into(m.task.fine_priority)},
      {"escalation", bool_into(m.task.escalation)},
      {"anomalies", [&m](std::string_view v) { m.anomalies = parse_list<Tick>(v); }},
  };
}

Handlers cache_handlers(CacheBlock& c) {
  return {
      {"victim", number_into(c.victim)},
      {"num_lines", number_into(c.config.num_lines)},
      {"epsilon", number_into(c.config.epsilon)},
      {"round_length", number_into(c.config.round_length)},
      {"other_lines", number_into(c.config.other_lines)},
      {"seed", number_into(c.config.seed)},
      {"usage", [&c](std::string_view v) { c.usage = parse_list<std::size_t>(v); }},
  };
}

}  // namespace

Scenario parse_scenario(std::string_view text, std::string_view origin) {
  Scenario s;
  std::vector<std::string> errors;
  const auto fail = [&](std::size_t line, const std::string& msg) {
    errors.push_back(std::string(origin) + ":" + std::to_string(line) + ": " + msg);
  };

  std::vector<TaskDraft> drafts;
  bool seen_scenario = false;
  bool has_duration = false;
  Handlers handlers;
  std::string section;
  std::map<std::string, std::size_t, std::less<>> seen_keys;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const auto line = trim(raw);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') {
        fail(line_no, "malformed section header");
        handlers.clear();
        section = "?";
        continue;
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      seen_keys.clear();
      const auto once = [&](bool present) {
        if (present) fail(line_no, "duplicate [" + section + "] section");
      };
      if (section == "scenario") {
        once(seen_scenario);
        seen_scenario = true;
        handlers = scenario_handlers(s);
      } else if (section == "task") {
        drafts.push_back({});
        drafts.back().line = line_no;
        handlers = task_handlers(drafts.back());
      } else if (section == "shuffle") {
        once(s.shuffle.has_value());
        handlers = shuffle_handlers(s.shuffle.emplace());
      } else if (section == "security") {
        once(s.security.has_value());
        handlers = security_handlers(s.security.emplace());
      } else if (section == "restart") {
        once(s.restart.has_value());
        handlers = restart_handlers(s.restart.emplace());
      } else if (section == "monitor") {
        once(s.monitor.has_value());
        handlers = monitor_handlers(s.monitor.emplace());
      } else if (section == "cache") {
        once(s.cache.has_value());
        handlers = cache_handlers(s.cache.emplace());
      } else {
        fail(line_no, "unknown section [" + section + "]");
        handlers.clear();
        section = "?";
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(line_no, "expected 'key = value'");
      continue;
    }
    const std::string key(trim(line.substr(0, eq)));
    const auto value = trim(line.substr(eq + 1));
    if (section.empty()) {
      fail(line_no, "key '" + key + "' outside any section");
      continue;
    }
    if (section == "?") continue;
    const auto h = handlers.find(key);
    if (h == handlers.end()) {
      fail(line_no, "unknown key '" + key + "' in [" + section + "]");
      continue;
    }
    if (const auto dup = seen_keys.find(key); dup != seen_keys.end()) {
      fail(line_no, "duplicate key '" + key + "' (first set on line " + std::to_string(dup->second) + ")");
      continue;
    }
    seen_keys[key] = line_no;
    if (section == "scenario" && key == "duration") has_duration = true;
    try {
      h->second(value);
    } catch (const BadValue& e) {
      fail(line_no, key + ": " + e.message);
    }
  }

  if (!seen_scenario) fail(line_no, "missing [scenario] section");
  else if (!has_duration) fail(line_no, "[scenario] needs a duration");

  bool any_priority = false;
  bool all_priority = true;
  for (TaskDraft& d : drafts) {
    if (!d.has_id) fail(d.line, "[task] needs an id");
    if (!d.has_c) fail(d.line, "[task] needs C");
    if (!d.has_t) fail(d.line, "[task] needs T");
    if (!d.has_d) d.task.deadline = d.task.period;
    if (!d.has_bcet) d.task.bcet = d.task.wcet;
    any_priority = any_priority || d.has_priority;
    all_priority = all_priority && d.has_priority;
    s.tasks.tasks.push_back(d.task);
  }
  if (any_priority && !all_priority) fail(line_no, "either every [task] sets a priority or none does");
  if (!errors.empty()) {
    std::string msg;
    for (const auto& e : errors) msg += (msg.empty() ? "" : "\n") + e;
    throw ValidationError(msg);
  }
  if (!any_priority) s.tasks = assign_rate_monotonic(std::move(s.tasks));
  s.tasks.name = s.name;
  try {
    validate(s);
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(origin) + ": " + e.what());
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scenario file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path.string());
}

std::string emit_scenario(const Scenario& s) {
  std::ostringstream out;
  out << "[scenario]\n";
  if (!s.name.empty()) out << "name = " << s.name << '\n';
  out << "policy = " << to_string(s.policy) << '\n';
  out << "attack = " << to_string(s.attack) << '\n';
  out << "duration = " << s.duration << '\n';
  out << "ensemble = " << s.ensemble << '\n';
  out << "seed = " << s.seed << '\n';
  if (!s.out.empty()) out << "out = " << s.out << '\n';
  out << "context_switch_cost = " << s.context_switch_cost << '\n';
  out << "preemptive = " << (s.preemptive ? "true" : "false") << '\n';
  out << "abort_on_miss = " << (s.abort_on_miss ? "true" : "false") << '\n';
  out << "sporadic_mean_extra = " << format_double(s.sporadic_mean_extra) << '\n';
  out << "random_phases = " << (s.random_phases ? "true" : "false") << '\n';
  for (const Task& t : s.tasks.tasks) {
    out << "\n[task]\n";
    out << "id = " << t.id << "\nC = " << t.wcet << "\nT = " << t.period << "\nD = " << t.deadline
        << "\nphase = " << t.phase << "\nkind = " << (t.kind == TaskKind::periodic ? "periodic" : "sporadic")
        << "\npriority = " << t.priority << "\nsecurity_level = " << t.security_level << "\nbcet = " << t.bcet
        << '\n';
  }
  if (s.shuffle) {
    out << "\n[shuffle]\nmode = " << to_string(s.shuffle->mode) << "\nseed = " << s.shuffle->seed
        << "\nguard = " << (s.shuffle->guard == ShuffleGuard::budget ? "budget" : "none") << '\n';
  }
  if (s.security) {
    const auto& p = *s.security;
    out << "\n[security]\nmode = " << (p.mode == SecurityMode::total_order ? "total_order" : "pairwise") << '\n';
    std::string levels;
    for (const auto& [id, level] : p.levels) {
      levels += (levels.empty() ? "" : ",") + std::to_string(id) + ":" + std::to_string(level);
    }
    std::string pairs;
    for (const auto& [a, b] : p.noleak) pairs += (pairs.empty() ? "" : ",") + std::to_string(a) + ">" + std::to_string(b);
    out << "levels = " << levels << "\nnoleak_pairs = " << pairs << "\nflush_cost = " << p.flush_cost << '\n';
  }
  if (s.restart) {
    const auto& r = *s.restart;
    out << "\n[restart]\nperiod = " << format_double(r.config.period)
        << "\nreboot_time = " << format_double(r.config.reboot_time)
        << "\ndetection_triggered = " << (r.config.detection_triggered ? "true" : "false")
        << "\nlambda = " << format_double(r.lambda) << "\nmu = " << format_double(r.mu)
        << "\ndamage_rate = " << format_double(r.damage_rate) << "\nweight = " << format_double(r.weight)
        << "\ngrid = " << join(r.grid) << "\ntrials = " << r.trials << '\n';
  }
  if (s.monitor) {
    const auto& m = *s.monitor;
    out << "\n[monitor]\nsecurity_id = " << m.task.id << "\ncheck_cost = " << m.task.check_cost
        << "\npassive_period = " << m.task.passive_period << "\nfine_priority = " << m.task.fine_priority
        << "\nescalation = " << (m.task.escalation ? "true" : "false") << "\nanomalies = " << join(m.anomalies)
        << '\n';
  }
  if (s.cache) {
    const auto& c = *s.cache;
    out << "\n[cache]\nvictim = " << c.victim << "\nnum_lines = " << c.config.num_lines
        << "\nepsilon = " << format_double(c.config.epsilon) << "\nround_length = " << c.config.round_length
        << "\nother_lines = " << c.config.other_lines << "\nseed = " << c.config.seed << "\nusage = " << join(c.usage)
        << '\n';
  }
  return out.str();
}

void validate(const Scenario& s) {
  std::vector<std::string> errors;
  for (const Violation& v : rtsec::validate(s.tasks)) {
    errors.push_back(v.task ? "task " + std::to_string(*v.task) + ": " + v.rule : v.rule);
  }
  if (s.tasks.empty()) errors.push_back("scenario has no tasks");
  if (s.duration < 1) errors.push_back("duration must be >= 1");
  if (s.ensemble < 1) errors.push_back("ensemble must be >= 1");
  if (s.context_switch_cost < 0) errors.push_back("context_switch_cost must be >= 0");
  if (s.sporadic_mean_extra < 0.0) errors.push_back("sporadic_mean_extra must be >= 0");

  if (s.policy == PolicyKind::shuffle && !s.shuffle) errors.push_back("policy shuffle needs a [shuffle] section");
  if (s.policy == PolicyKind::flush && !s.security) errors.push_back("policy flush needs a [security] section");
  if (s.policy == PolicyKind::monitor && !s.monitor) errors.push_back("policy monitor needs a [monitor] section");
  if (s.security) {
    for (const Violation& v : rtsec::validate(*s.security, s.tasks)) {
      errors.push_back(v.task ? "security, task " + std::to_string(*v.task) + ": " + v.rule : "security: " + v.rule);
    }
  }
  if (s.monitor) {
    const auto& m = s.monitor->task;
    if (s.tasks.find(m.id)) errors.push_back("monitor: security_id " + std::to_string(m.id) + " is already a task id");
    if (m.check_cost < 1) errors.push_back("monitor: check_cost must be >= 1");
    if (m.passive_period / 2 < m.check_cost) errors.push_back("monitor: passive_period / 2 must be >= check_cost");
    for (Tick a : s.monitor->anomalies) {
      if (a < 0 || a >= s.duration) errors.push_back("monitor: anomaly tick " + std::to_string(a) + " outside the run");
    }
  }
  if (s.attack != AttackKind::none) {
    if (s.policy == PolicyKind::monitor) errors.push_back("scheduleak is not combined with the monitor policy");
    for (const Task& t : s.tasks.tasks) {
      if (t.kind != TaskKind::periodic || !t.fixed_execution()) {
        errors.push_back("scheduleak needs periodic fixed-execution tasks; task " + std::to_string(t.id) + " is not");
      }
    }
  }
  if (s.attack == AttackKind::scheduleak_cache) {
    if (!s.cache) {
      errors.push_back("attack scheduleak+cache needs a [cache] section");
    } else {
      const auto& c = *s.cache;
      if (!s.tasks.find(c.victim)) errors.push_back("cache: victim " + std::to_string(c.victim) + " is not a task");
      if (c.usage.empty()) errors.push_back("cache: usage profile is empty");
      for (std::size_t u : c.usage) {
        if (u > c.config.num_lines) errors.push_back("cache: usage " + std::to_string(u) + " exceeds num_lines");
      }
      if (c.config.other_lines > c.config.num_lines) errors.push_back("cache: other_lines exceeds num_lines");
      if (!(c.config.epsilon >= 0.0 && c.config.epsilon <= 1.0)) errors.push_back("cache: epsilon outside [0, 1]");
      if (c.config.round_length < 1) errors.push_back("cache: round_length must be >= 1");
    }
  }
  if (s.restart) {
    const auto& r = *s.restart;
    try {
      rtsec::validate(r.config, AttackModel::exponential(r.lambda, r.mu, r.damage_rate));
    } catch (const ValidationError& e) {
      errors.push_back(e.what());
    }
    if (!(r.weight >= 0.0 && r.weight <= 1.0)) errors.push_back("restart: weight outside [0, 1]");
    for (double p : r.grid) {
      if (!(p > r.config.reboot_time)) errors.push_back("restart: grid period " + format_double(p) + " <= reboot_time");
    }
  }
  if (!errors.empty()) {
    std::string msg;
    for (const auto& e : errors) msg += (msg.empty() ? "" : "\n") + e;
    throw ValidationError(msg);
  }
}

void set_field(Scenario& s, std::string_view field, std::string_view value) {
  const auto dot = field.find('.');
  if (dot == std::string_view::npos) throw ValidationError("axis '" + std::string(field) + "' is not section.key");
  const std::string section(field.substr(0, dot));
  std::string key(field.substr(dot + 1));

  Handlers handlers;
  std::optional<TaskDraft> draft;
  Task* task = nullptr;
  if (section == "scenario") {
    handlers = scenario_handlers(s);
  } else if (section == "task") {
    const auto dot2 = key.find('.');
    if (dot2 == std::string::npos) throw ValidationError("task axis must be task.<id>.<field>");
    TaskId id = 0;
    try {
      id = parse_number<TaskId>(std::string_view(key).substr(0, dot2));
    } catch (const BadValue& e) {
      throw ValidationError("axis '" + std::string(field) + "': " + e.message);
    }
    for (Task& t : s.tasks.tasks) {
      if (t.id == id) task = &t;
    }
    if (!task) throw ValidationError("axis '" + std::string(field) + "': no task " + std::to_string(id));
    key = key.substr(dot2 + 1);
    draft.emplace();
    draft->task = *task;
    handlers = task_handlers(*draft);
  } else if (section == "shuffle" && s.shuffle) {
    handlers = shuffle_handlers(*s.shuffle);
  } else if (section == "security" && s.security) {
    handlers = security_handlers(*s.security);
  } else if (section == "restart" && s.restart) {
    handlers = restart_handlers(*s.restart);
  } else if (section == "monitor" && s.monitor) {
    handlers = monitor_handlers(*s.monitor);
  } else if (section == "cache" && s.cache) {
    handlers = cache_handlers(*s.cache);
  } else {
    throw ValidationError("axis '" + std::string(field) + "': scenario has no [" + section + "] section");
  }
  const auto h = handlers.find(key);
  if (h == handlers.end()) throw ValidationError("axis '" + std::string(field) + "' is not a scenario field");
  try {
    h->second(value);
  } catch (const BadValue& e) {
    throw ValidationError("axis '" + std::string(field) + "': " + e.message);
  }
  if (task) {
    // A fixed execution time stays fixed when C moves.
    if (key == "C" && task->bcet == task->wcet) draft->task.bcet = draft->task.wcet;
    *task = draft->task;
  }
  validate(s);
}

}  // namespace rtsec
