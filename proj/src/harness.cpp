#include "rtsec/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <future>
#include <memory>
#include <sstream>
#include <set>
#include <thread>

#include "rtsec/analysis.hpp"
#include "rtsec/scheduleak.hpp"

namespace rtsec {

using nlohmann::json;

std::vector<std::uint64_t> ensemble_seeds(std::uint64_t master, std::size_t count) {
  std::vector<std::uint64_t> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = master + i * kEnsembleStride;
  return out;
}

namespace {

std::string number_text(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string member_name(std::size_t i, const char* what) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "member_%03zu_%s.csv", i, what);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  f << text;
}

json report_json(const AnalysisReport& r) {
  json responses = json::object();
  for (const auto& [id, resp] : r.response) responses[std::to_string(id)] = resp;
  json j = {{"method", r.method}, {"verdict", to_string(r.verdict)}, {"utilization", r.utilization},
            {"response", responses}};
  if (r.bound_value) j["bound"] = *r.bound_value;
  return j;
}

json metrics_json(const RestartMetrics& m) {
  return {{"cycle_length", m.cycle_length},
          {"unavailability", m.unavailability},
          {"compromised_time", m.compromised_time},
          {"damage_per_cycle", m.damage_per_cycle},
          {"damage_per_second", m.damage_per_second}};
}

TaskSet member_tasks(const Scenario& s, std::uint64_t member_seed) {
  TaskSet ts = s.tasks;
  if (!s.random_phases) return ts;
  Rng rng(derive_seed(member_seed, 48));
  for (Task& t : ts.tasks) t.phase = static_cast<Tick>(rng.below(static_cast<std::uint64_t>(t.period)));
  return ts;
}

TaskSet simulated_set(const Scenario& s, const TaskSet& tasks) {
  return s.policy == PolicyKind::monitor ? with_security_task(tasks, s.monitor->task) : tasks;
}

SimConfig sim_config(const Scenario& s) {
  SimConfig c;
  c.context_switch_cost = s.context_switch_cost;
  c.abort_on_miss = s.abort_on_miss;
  c.preemptive = s.preemptive;
  c.sporadic_mean_extra = s.sporadic_mean_extra;
  return c;
}

std::unique_ptr<SchedulingPolicy> make_policy(const Scenario& s, std::uint64_t member_seed, bool escalation = true) {
  switch (s.policy) {
    case PolicyKind::vanilla: return std::make_unique<FixedPriorityPolicy>();
    case PolicyKind::shuffle: {
      ShuffleConfig cfg{s.shuffle->mode, derive_seed(member_seed, 16 + s.shuffle->seed), s.shuffle->guard};
      return std::make_unique<ShufflePolicy>(cfg);
    }
    case PolicyKind::flush: return std::make_unique<FlushPolicy>(*s.security);
    case PolicyKind::monitor: {
      SecurityTaskConfig cfg = s.monitor->task;
      cfg.escalation = cfg.escalation && escalation;
      return std::make_unique<MonitorPolicy>(cfg, std::set<Tick>(s.monitor->anomalies.begin(), s.monitor->anomalies.end()));
    }
  }
  throw Error("unknown policy");
}

struct MemberResult {
  ScheduleTrace trace;
  json summary;
  json scheduleak;  // null when not run
  json cache;
  json monitor;
  std::string observation_csv;
  std::string usage_csv;
  std::optional<AttackOutcome> outcome;
  std::optional<double> pearson_r;
  std::vector<Tick> latencies;
  std::vector<Tick> passive_latencies;
};

MemberResult run_member(const Scenario& s, std::size_t index, std::uint64_t seed, const RunOptions& options) {
  MemberResult r;
  const TaskSet tasks = member_tasks(s, seed);
  const TaskSet ts = simulated_set(s, tasks);
  const SimConfig config = sim_config(s);
  auto policy = make_policy(s, seed);
  r.trace = simulate(ts, *policy, s.duration, seed, config);

  std::vector<TaskId> rt_ids;
  for (const Task& t : s.tasks.tasks) rt_ids.push_back(t.id);
  r.summary = {{"index", index},
               {"seed", seed},
               {"policy", policy->name()},
               {"deadline_misses", count_deadline_misses(r.trace, rt_ids)},
               {"watchdog_anomalies", watchdog_check(r.trace, make_profile(tasks)).size()}};
  if (s.security) r.summary["flush_violations"] = count_violations(r.trace, *s.security, ts);

  if (s.policy == PolicyKind::monitor) {
    auto passive = make_policy(s, seed, false);
    const auto passive_trace = simulate(ts, *passive, s.duration, seed, config);
    json detections = json::array();
    for (Tick a : s.monitor->anomalies) {
      const auto lat = detection_latency(r.trace, s.monitor->task.id, a);
      const auto plat = detection_latency(passive_trace, s.monitor->task.id, a);
      if (lat) r.latencies.push_back(*lat);
      if (plat) r.passive_latencies.push_back(*plat);
      detections.push_back({{"anomaly", a}, {"latency", lat ? json(*lat) : json(nullptr)},
                            {"passive_latency", plat ? json(*plat) : json(nullptr)}});
    }
    r.monitor = detections;
  }

  if (options.attacks && s.attack != AttackKind::none) {
    const Observation obs = observe_trace(r.trace, tasks);
    std::ostringstream csv;
    write_observation_csv(csv, obs);
    r.observation_csv = csv.str();
    PhaseVector truth;
    for (const Task& t : tasks.tasks) truth.push_back(t.phase);
    json j = {{"busy_intervals", obs.busy.size()}};
    std::optional<PhaseVector> inferred;
    try {
      const InferredSchedule inf = scheduleak(obs);
      r.outcome = attack_success(inf, truth);
      j["ambiguity"] = inf.ambiguity;
      j["low_confidence"] = inf.low_confidence;
      j["point_estimate"] = inf.point_estimate ? json(*inf.point_estimate) : json(nullptr);
      inferred = inf.candidates.front();
    } catch (const Error& e) {
      r.outcome = AttackOutcome::failed;
      j["ambiguity"] = 0;
      j["error"] = e.what();
    }
    j["outcome"] = to_string(*r.outcome);
    r.scheduleak = j;

    if (s.attack == AttackKind::scheduleak_cache) {
      const auto& c = *s.cache;
      std::vector<Tick> starts;
      if (inferred) starts = inferred_job_starts(tasks, *inferred, c.victim, s.duration);
      CacheConfig cfg = c.config;
      cfg.seed = derive_seed(seed, 32 + c.config.seed);
      const UsageSeries series = targeted_inference(tasks, r.trace, c.victim, c.usage, cfg, starts);
      std::ostringstream ucsv;
      write_usage_csv(ucsv, series);
      r.usage_csv = ucsv.str();
      if (series.samples.size() >= 2) r.pearson_r = pearson(series);
      std::size_t exact = 0;
      for (const auto& smp : series.samples) exact += smp.actual == smp.inferred ? 1 : 0;
      r.cache = {{"rounds", series.samples.size()}, {"exact_rounds", exact},
                 {"pearson", r.pearson_r ? json(*r.pearson_r) : json(nullptr)}};
    }
  }
  return r;
}

std::optional<Tick> fold_period(const Scenario& s, const TaskSet& ts) {
  if (!ts.all_periodic()) return std::nullopt;
  try {
    const Tick h = hyperperiod(ts);
    if (s.duration % h == 0) return h;
  } catch (const Error&) {
  }
  return std::nullopt;
}

double mean_of(const std::vector<Tick>& v) {
  if (v.empty()) return 0.0;
  double sum = 0.0;
  for (Tick x : v) sum += static_cast<double>(x);
  return sum / static_cast<double>(v.size());
}

}  // namespace

json analyze(const Scenario& s) {
  validate(s);
  json a = json::object();
  a["utilization"] = utilization(s.tasks).value();
  try {
    a["utilization_bound"] = report_json(utilization_bound_test(s.tasks));
  } catch (const Error& e) {
    a["utilization_bound"] = {{"skipped", e.what()}};
  }
  a["rta"] = report_json(s.preemptive ? response_time_analysis(s.tasks) : rta_nonpreemptive(s.tasks));
  if (s.security) a["rta_with_flush"] = report_json(rta_with_flush(s.tasks, *s.security));
  if (s.policy == PolicyKind::shuffle) {
    try {
      const InversionBudget b = compute_budgets(s.tasks);
      json budgets = json::object();
      json bounds = json::object();
      for (const auto& [id, v] : b.budget) budgets[std::to_string(id)] = v;
      for (const auto& [id, v] : b.response_bound) bounds[std::to_string(id)] = v;
      a["shuffle_budgets"] = {{"budget", budgets}, {"response_bound", bounds}};
    } catch (const PolicyRejected& e) {
      a["shuffle_budgets"] = {{"rejected", e.what()}};
    }
  }
  if (s.monitor) {
    const TaskSet with = with_security_task(s.tasks, s.monitor->task);
    a["rta_monitor_passive"] = report_json(response_time_analysis(with));
    TaskSet fine = with;
    Task& sec = fine.tasks.back();
    sec.priority = s.monitor->task.fine_priority;
    sec.period = sec.deadline = s.monitor->task.passive_period / 2;
    a["rta_monitor_fine"] = report_json(response_time_analysis(fine));
  }
  return a;
}

json run(const Scenario& s, const std::filesystem::path& out, const RunOptions& options) {
  validate(s);
  const bool write = !out.empty();
  if (write) std::filesystem::create_directories(out);

  json report = json::object();
  report["scenario"] = {{"name", s.name},           {"policy", to_string(s.policy)},
                        {"attack", to_string(s.attack)}, {"duration", s.duration},
                        {"ensemble", s.ensemble},   {"seed", s.seed}};
  report["analysis"] = analyze(s);

  if (options.simulate) {
    const auto seeds = ensemble_seeds(s.seed, s.ensemble);
    report["seeds"] = seeds;
    std::vector<MemberResult> members(s.ensemble);
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), 16));
    for (std::size_t first = 0; first < s.ensemble; first += workers) {
      std::vector<std::future<MemberResult>> jobs;
      for (std::size_t i = first; i < std::min(s.ensemble, first + workers); ++i) {
        jobs.push_back(std::async(std::launch::async, run_member, std::cref(s), i, seeds[i], std::cref(options)));
      }
      for (std::size_t k = 0; k < jobs.size(); ++k) members[first + k] = jobs[k].get();
    }

    json sim_members = json::array();
    std::size_t misses = 0;
    std::size_t violations = 0;
    for (std::size_t i = 0; i < members.size(); ++i) {
      MemberResult& m = members[i];
      if (write && options.write_traces) {
        std::ostringstream slots, events;
        write_slots_csv(slots, m.trace);
        write_events_csv(events, m.trace);
        write_file(out / member_name(i, "slots"), slots.str());
        write_file(out / member_name(i, "events"), events.str());
        m.summary["slots_file"] = member_name(i, "slots");
        m.summary["events_file"] = member_name(i, "events");
      }
      misses += m.summary["deadline_misses"].get<std::size_t>();
      if (m.summary.contains("flush_violations")) violations += m.summary["flush_violations"].get<std::size_t>();
      sim_members.push_back(m.summary);
    }
    std::vector<TaskId> rt_ids;
    for (const Task& t : s.tasks.tasks) rt_ids.push_back(t.id);
    report["simulation"] = {{"members", sim_members}, {"real_time_tasks", rt_ids}, {"deadline_misses_total", misses}};
    if (s.security) report["simulation"]["flush_violations_total"] = violations;

    if (members.size() >= 2) {
      std::vector<ScheduleTrace> traces;
      for (const auto& m : members) traces.push_back(m.trace);
      const auto period = fold_period(s, simulated_set(s, s.tasks));
      const EntropySeries e = period ? schedule_entropy(traces, *period) : schedule_entropy(traces);
      report["entropy"] = {{"fold_period", period ? *period : s.duration}, {"mean", e.mean}};
      if (write) {
        std::ostringstream csv;
        write_entropy_csv(csv, e);
        write_file(out / "entropy.csv", csv.str());
        report["entropy"]["file"] = "entropy.csv";
      }
    }

    if (s.policy == PolicyKind::monitor) {
      json detections = json::array();
      std::vector<Tick> fine, passive;
      for (std::size_t i = 0; i < members.size(); ++i) {
        detections.push_back({{"member", i}, {"detections", members[i].monitor}});
        fine.insert(fine.end(), members[i].latencies.begin(), members[i].latencies.end());
        passive.insert(passive.end(), members[i].passive_latencies.begin(), members[i].passive_latencies.end());
      }
      report["monitor"] = {{"members", detections},
                           {"detected", fine.size()},
                           {"mean_latency", mean_of(fine)},
                           {"passive_detected", passive.size()},
                           {"mean_passive_latency", mean_of(passive)}};
    }

    if (options.attacks && s.attack != AttackKind::none) {
      json leak = json::array();
      std::size_t exact = 0, ambiguous = 0, failed = 0;
      for (std::size_t i = 0; i < members.size(); ++i) {
        json j = members[i].scheduleak;
        if (write) {
          write_file(out / member_name(i, "observation"), members[i].observation_csv);
          j["file"] = member_name(i, "observation");
        }
        switch (*members[i].outcome) {
          case AttackOutcome::exact: ++exact; break;
          case AttackOutcome::ambiguous_containing_truth: ++ambiguous; break;
          case AttackOutcome::failed: ++failed; break;
        }
        leak.push_back(j);
      }
      const auto n = static_cast<double>(members.size());
      report["scheduleak"] = {{"members", leak},
                              {"exact_rate", static_cast<double>(exact) / n},
                              {"ambiguous_rate", static_cast<double>(ambiguous) / n},
                              {"success_including_ambiguous", static_cast<double>(exact + ambiguous) / n},
                              {"failed_rate", static_cast<double>(failed) / n}};
      if (s.attack == AttackKind::scheduleak_cache) {
        json cache = json::array();
        double sum = 0.0;
        std::size_t counted = 0;
        for (std::size_t i = 0; i < members.size(); ++i) {
          json j = members[i].cache;
          if (write) {
            write_file(out / member_name(i, "usage"), members[i].usage_csv);
            j["file"] = member_name(i, "usage");
          }
          if (members[i].pearson_r) {
            sum += *members[i].pearson_r;
            ++counted;
          }
          cache.push_back(j);
        }
        report["cache"] = {{"members", cache},
                           {"mean_pearson", counted ? json(sum / static_cast<double>(counted)) : json(nullptr)}};
      }
    }
  }

  if (s.restart) {
    const auto& r = *s.restart;
    const AttackModel atk = AttackModel::exponential(r.lambda, r.mu, r.damage_rate);
    json rj = {{"analytic", metrics_json(analytic_metrics(r.config, atk))}};
    if (r.trials > 0) {
      const auto mc = monte_carlo_metrics(r.config, atk, r.trials, derive_seed(s.seed, 99));
      rj["monte_carlo"] = {{"trials", mc.trials}, {"mean", metrics_json(mc.mean)},
                           {"half_width", metrics_json(mc.half_width)}};
    }
    if (!r.grid.empty()) {
      const PeriodChoice choice = optimize_period(r.grid, r.config, atk, r.weight);
      rj["optimize"] = {{"best_period", choice.best_period}, {"weight", r.weight}, {"points", choice.curve.size()}};
      if (write) {
        std::ostringstream csv;
        write_curve_csv(csv, choice.curve);
        write_file(out / "restart_curve.csv", csv.str());
        rj["optimize"]["file"] = "restart_curve.csv";
      }
    }
    report["restart"] = rj;
  }

  if (write) write_file(out / "report.json", report.dump(2) + "\n");
  return report;
}

std::vector<SweepRow> sweep(const Scenario& base, const std::string& axis, const std::vector<std::string>& values,
                            const std::filesystem::path& out) {
  if (values.empty()) throw Error("sweep: empty value list");
  std::vector<Scenario> variants;
  for (const auto& v : values) {
    Scenario s = base;
    set_field(s, axis, v);
    variants.push_back(std::move(s));
  }
  std::vector<SweepRow> rows;
  std::ostringstream csv;
  csv << "value,rta_verdict,deadline_misses,entropy_mean,exact_rate,mean_pearson,unavailability,"
         "damage_per_second,mean_latency\n";
  const auto field = [](const json& j, std::initializer_list<const char*> path) -> std::string {
    const json* cur = &j;
    for (const char* p : path) {
      if (!cur->is_object() || !cur->contains(p)) return "";
      cur = &(*cur)[p];
    }
    if (cur->is_number_float()) return number_text(cur->get<double>());
    if (cur->is_number()) return cur->dump();
    if (cur->is_string()) return cur->get<std::string>();
    return "";
  };
  for (std::size_t i = 0; i < variants.size(); ++i) {
    const auto dir = out.empty() ? out : out / (axis + "=" + values[i]);
    json report = run(variants[i], dir);
    const char* verdict_key = report["analysis"].contains("rta_with_flush") ? "rta_with_flush" : "rta";
    csv << values[i] << ',' << field(report, {"analysis", verdict_key, "verdict"}) << ','
        << field(report, {"simulation", "deadline_misses_total"}) << ',' << field(report, {"entropy", "mean"}) << ','
        << field(report, {"scheduleak", "exact_rate"}) << ',' << field(report, {"cache", "mean_pearson"}) << ','
        << field(report, {"restart", "analytic", "unavailability"}) << ','
        << field(report, {"restart", "analytic", "damage_per_second"}) << ','
        << field(report, {"monitor", "mean_latency"}) << '\n';
    rows.push_back({values[i], std::move(report)});
  }
  if (!out.empty()) {
    std::filesystem::create_directories(out);
    write_file(out / "sweep.csv", csv.str());
  }
  return rows;
}

ReportCheck check_report(const std::filesystem::path& dir) {
  std::ifstream in(dir / "report.json");
  if (!in) throw Error("no report.json in '" + dir.string() + "'");
  json report;
  try {
    report = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(std::string("report.json: ") + e.what());
  }
  ReportCheck check;
  const auto note = [&](bool ok, const std::string& line) {
    check.consistent = check.consistent && ok;
    check.lines.push_back((ok ? "ok       " : "MISMATCH ") + line);
  };
  if (report.contains("scenario")) {
    const auto& sc = report["scenario"];
    check.lines.push_back("scenario " + sc.value("name", std::string()) + ": policy " + sc.value("policy", std::string()) +
                          ", attack " + sc.value("attack", std::string()) + ", ensemble " +
                          std::to_string(sc.value("ensemble", 0)));
  }
  if (report.contains("analysis")) {
    check.lines.push_back("rta verdict: " + report["analysis"]["rta"].value("verdict", std::string("?")));
  }
  if (!report.contains("simulation")) return check;

  // Misses are counted for the real-time tasks only, not the security task.
  std::set<TaskId> rt;
  for (const auto& id : report["simulation"]["real_time_tasks"]) rt.insert(id.get<TaskId>());
  std::vector<ScheduleTrace> traces;
  for (const auto& m : report["simulation"]["members"]) {
    if (!m.contains("events_file") || !m.contains("slots_file")) continue;
    std::ifstream ev(dir / m["events_file"].get<std::string>());
    std::ifstream sl(dir / m["slots_file"].get<std::string>());
    if (!ev || !sl) {
      note(false, "member " + m["index"].dump() + ": trace files missing");
      continue;
    }
    ScheduleTrace t;
    t.events = read_events_csv(ev);
    t.slots = read_slots_csv(sl);
    t.duration = static_cast<Tick>(t.slots.size());
    std::size_t misses = 0;
    for (const Event& e : t.events) {
      if (e.kind == EventKind::deadline_miss && rt.count(e.task_id)) ++misses;
    }
    const auto reported = m["deadline_misses"].get<std::size_t>();
    note(misses == reported,
         "member " + m["index"].dump() + ": deadline misses " + std::to_string(misses) + " (report " +
             std::to_string(reported) + ")");
    traces.push_back(std::move(t));
  }
  if (report.contains("entropy") && traces.size() >= 2) {
    const Tick period = report["entropy"]["fold_period"].get<Tick>();
    const double mean = schedule_entropy(traces, period).mean;
    const double reported = report["entropy"]["mean"].get<double>();
    note(std::abs(mean - reported) <= 1e-12, "entropy mean " + number_text(mean) + " (report " +
                                                 number_text(reported) + ")");
  }
  return check;
}

}  // namespace rtsec
