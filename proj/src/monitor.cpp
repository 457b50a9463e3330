#include "rtsec/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "rtsec/analysis.hpp"
#include "rtsec/kernels.hpp"

namespace rtsec {

// ---- Watchdog ----

ExecutionProfile make_profile(const TaskSet& ts, Tick tolerance) {
  ExecutionProfile p;
  p.tolerance = tolerance;
  for (const Task& t : ts.tasks) p.tasks[t.id] = {t.wcet, t.period};
  return p;
}

std::string_view to_string(AnomalyKind kind) {
  return kind == AnomalyKind::overrun ? "overrun" : "period_violation";
}

std::vector<TimingAnomaly> watchdog_check(const ScheduleTrace& trace, const ExecutionProfile& profile) {
  if (profile.tolerance < 0) throw Error("watchdog_check: negative tolerance");
  std::vector<TimingAnomaly> out;
  std::map<JobId, const Job*> jobs;
  for (const Job& j : trace.jobs) jobs[j.id] = &j;

  std::map<JobId, Tick> executed;
  for (const SlotRecord& s : trace.slots) {
    if (s.job_id == kNoJob) continue;
    const auto it = profile.tasks.find(s.occupant);
    if (it == profile.tasks.end()) continue;
    if (++executed[s.job_id] == it->second.wcet + profile.tolerance + 1) {
      out.push_back({s.tick, s.occupant, s.job_id, AnomalyKind::overrun});
    }
  }

  std::map<TaskId, Tick> last_release;
  for (const Job& j : trace.jobs) {
    const auto it = profile.tasks.find(j.task_id);
    if (it == profile.tasks.end()) continue;
    const auto prev = last_release.find(j.task_id);
    if (prev != last_release.end() && j.release - prev->second < it->second.period - profile.tolerance) {
      out.push_back({j.release, j.task_id, j.id, AnomalyKind::period_violation});
    }
    last_release[j.task_id] = j.release;
  }
  std::stable_sort(out.begin(), out.end(), [](const TimingAnomaly& a, const TimingAnomaly& b) {
    return a.tick < b.tick;
  });
  return out;
}

// ---- Clustering ----

namespace {

struct Partition {
  std::vector<FrequencyVector> centers;
  std::vector<std::size_t> assign;
  double objective = 0.0;
};

std::size_t nearest(std::span<const double> x, const std::vector<FrequencyVector>& centers, double* dist) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const double d = kernels::squared_distance(x, centers[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (dist) *dist = best_d;
  return best;
}

Partition lloyd(std::span<const FrequencyVector> xs, std::vector<FrequencyVector> centers, int max_iterations) {
  const std::size_t d = xs.front().size();
  Partition p;
  p.assign.assign(xs.size(), centers.size());
  for (int it = 0; it < max_iterations; ++it) {
    bool changed = false;
    for (std::size_t n = 0; n < xs.size(); ++n) {
      const std::size_t c = nearest(xs[n], centers, nullptr);
      changed = changed || c != p.assign[n];
      p.assign[n] = c;
    }
    if (!changed) break;
    std::vector<FrequencyVector> sums(centers.size(), FrequencyVector(d, 0.0));
    std::vector<std::size_t> counts(centers.size(), 0);
    for (std::size_t n = 0; n < xs.size(); ++n) {
      for (std::size_t j = 0; j < d; ++j) sums[p.assign[n]][j] += xs[n][j];
      ++counts[p.assign[n]];
    }
    // An empty cluster keeps its previous center.
    for (std::size_t c = 0; c < centers.size(); ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t j = 0; j < d; ++j) centers[c][j] = sums[c][j] / static_cast<double>(counts[c]);
    }
  }
  p.objective = 0.0;
  for (std::size_t n = 0; n < xs.size(); ++n) {
    double dist = 0.0;
    p.assign[n] = nearest(xs[n], centers, &dist);
    p.objective += dist;
  }
  p.centers = std::move(centers);
  return p;
}

std::vector<double> whiten(const Eigen::MatrixXd& w, std::span<const double> x) {
  const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::VectorXd y = w.triangularView<Eigen::Lower>() * v;
  return {y.data(), y.data() + y.size()};
}

double quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace

ClusterModel learn_profiles(std::span<const FrequencyVector> samples, std::size_t k, std::uint64_t seed,
                            const ClusterOptions& options) {
  if (k < 1) throw Error("learn_profiles: k must be >= 1");
  if (samples.empty()) throw Error("learn_profiles: no samples");
  const std::size_t d = samples.front().size();
  if (d == 0) throw Error("learn_profiles: zero-dimensional samples");
  for (const auto& s : samples) {
    if (s.size() != d) throw Error("learn_profiles: samples have mixed dimensions");
  }
  if (samples.size() < k * d) {
    throw Error("learn_profiles: need at least k*d = " + std::to_string(k * d) + " samples, got " +
                std::to_string(samples.size()));
  }
  if (!(options.quantile > 0.0 && options.quantile <= 1.0)) throw Error("learn_profiles: quantile outside (0, 1]");

  ClusterModel model;
  FrequencyVector mean(d, 0.0);
  for (const auto& s : samples) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += s[j];
  }
  for (double& m : mean) m /= static_cast<double>(samples.size());
  Partition best = lloyd(samples, {mean}, options.max_lloyd_iterations);
  model.objective.push_back(best.objective);

  std::vector<std::size_t> pool(samples.size());
  std::iota(pool.begin(), pool.end(), 0);
  if (pool.size() > options.max_candidates) {
    Rng rng(seed);
    for (std::size_t i = 0; i < options.max_candidates; ++i) {
      std::swap(pool[i], pool[i + static_cast<std::size_t>(rng.below(pool.size() - i))]);
    }
    pool.resize(options.max_candidates);
    std::sort(pool.begin(), pool.end());
  }
  for (std::size_t stage = 2; stage <= k; ++stage) {
    Partition stage_best;
    stage_best.objective = std::numeric_limits<double>::infinity();
    for (std::size_t n : pool) {
      auto init = best.centers;
      init.push_back(samples[n]);
      Partition p = lloyd(samples, std::move(init), options.max_lloyd_iterations);
      if (p.objective < stage_best.objective) stage_best = std::move(p);
    }
    best = std::move(stage_best);
    model.objective.push_back(best.objective);
  }
  model.centers = best.centers;

  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t n = 0; n < samples.size(); ++n) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < d; ++j) r[static_cast<Eigen::Index>(j)] = samples[n][j] - model.centers[best.assign[n]][j];
    s += r * r.transpose();
  }
  s /= static_cast<double>(std::max<std::size_t>(1, samples.size() - std::min(samples.size() - 1, k)));
  const double scale = s.trace() / static_cast<double>(d);
  if (!(scale > 0.0)) throw Error("learn_profiles: degenerate data (zero within-cluster variance)");

  Eigen::LLT<Eigen::MatrixXd> llt;
  for (double ridge = 1e-6 * scale;; ridge *= 10.0) {
    if (ridge > 1e-1 * scale) throw Error("learn_profiles: covariance singular at the regularization cap");
    const Eigen::MatrixXd a = s + ridge * Eigen::MatrixXd::Identity(s.rows(), s.cols());
    llt.compute(a);
    if (llt.info() != Eigen::Success) continue;
    const Eigen::VectorXd diag = Eigen::MatrixXd(llt.matrixL()).diagonal();
    if (diag.minCoeff() <= 0.0 || std::pow(diag.minCoeff() / diag.maxCoeff(), 2) < 1e-12) continue;
    model.ridge = ridge;
    model.covariance = a;
    break;
  }
  model.whitening = llt.matrixL().solve(Eigen::MatrixXd::Identity(s.rows(), s.cols()));
  for (const auto& c : model.centers) model.whitened_centers.push_back(whiten(model.whitening, c));

  std::vector<double> dist;
  dist.reserve(samples.size());
  for (std::size_t n = 0; n < samples.size(); ++n) {
    const auto w = whiten(model.whitening, samples[n]);
    dist.push_back(std::sqrt(kernels::squared_distance(w, model.whitened_centers[best.assign[n]])));
  }
  model.threshold = quantile(std::move(dist), options.quantile);
  return model;
}

double mahalanobis(const FrequencyVector& a, const FrequencyVector& b, const ClusterModel& model) {
  if (a.size() != model.dimension() || b.size() != model.dimension()) throw Error("mahalanobis: dimension mismatch");
  return std::sqrt(kernels::squared_distance(whiten(model.whitening, a), whiten(model.whitening, b)));
}

Classification classify(const FrequencyVector& v, const ClusterModel& model) {
  if (model.centers.empty()) throw Error("classify: model is not trained");
  if (v.size() != model.dimension()) {
    throw Error("classify: vector has dimension " + std::to_string(v.size()) + ", model expects " +
                std::to_string(model.dimension()));
  }
  const auto w = whiten(model.whitening, v);
  double best_d = 0.0;
  const std::size_t c = nearest(w, model.whitened_centers, &best_d);
  Classification out;
  out.cluster = c;
  out.distance = std::sqrt(best_d);
  out.anomalous = out.distance > model.threshold;
  return out;
}

namespace {

FrequencyVector draw_frequencies(const FrequencyVector& p, std::size_t calls, Rng& rng) {
  FrequencyVector f(p.size(), 0.0);
  for (std::size_t i = 0; i < calls; ++i) {
    double u = rng.uniform();
    std::size_t j = 0;
    while (j + 1 < p.size() && u >= p[j]) u -= p[j++];
    f[j] += 1.0;
  }
  for (double& x : f) x /= static_cast<double>(calls);
  return f;
}

}  // namespace

SyntheticBenchmark make_syscall_benchmark(std::uint64_t seed, const BenchmarkOptions& options) {
  const std::size_t d = options.dimension;
  if (d < 2 || options.contexts < 1 || options.calls < 1) throw Error("make_syscall_benchmark: bad options");
  Rng rng(seed);
  SyntheticBenchmark b;
  for (std::size_t c = 0; c < options.contexts; ++c) {
    FrequencyVector p(d);
    for (double& x : p) x = 0.5 + rng.uniform();
    p[c % d] += 3.0;
    const double sum = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& x : p) x /= sum;
    b.context_profiles.push_back(std::move(p));
  }

  // Pooled sampling covariance of the frequency vectors, (diag(p) - p p^T) / calls.
  const auto di = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(di, di);
  for (const auto& p : b.context_profiles) {
    const Eigen::Map<const Eigen::VectorXd> v(p.data(), di);
    cov += (Eigen::MatrixXd(v.asDiagonal()) - v * v.transpose()) / static_cast<double>(options.calls);
  }
  cov /= static_cast<double>(options.contexts);
  // The sum-to-one direction has zero variance; shifts never move along it.
  cov += 1e-12 * cov.trace() * Eigen::MatrixXd::Identity(di, di);
  const Eigen::LDLT<Eigen::MatrixXd> solver(cov);
  const auto distance = [&](const FrequencyVector& a, const FrequencyVector& c) {
    Eigen::VectorXd delta(di);
    for (Eigen::Index j = 0; j < di; ++j) delta[j] = a[static_cast<std::size_t>(j)] - c[static_cast<std::size_t>(j)];
    return std::sqrt(delta.dot(solver.solve(delta)));
  };

  // An attack injects `injected` calls to one category into a window drawn
  // from a context, which shifts the context's distribution: the mean moves
  // to (1 - a) base + a e_target with a = injected / calls.
  struct Attack {
    std::size_t context = 0;
    std::size_t target = 0;
    std::size_t injected = 0;
  };
  std::vector<Attack> attacks;
  for (int a = 0; a < 5; ++a) {
    Attack atk{static_cast<std::size_t>(rng.below(options.contexts)), static_cast<std::size_t>(rng.below(d)), 0};
    const auto& base = b.context_profiles[atk.context];
    for (;; ++atk.injected) {
      if (atk.injected >= options.calls) throw Error("make_syscall_benchmark: cannot reach the requested shift");
      const double alpha = static_cast<double>(atk.injected) / static_cast<double>(options.calls);
      FrequencyVector p(d);
      for (std::size_t j = 0; j < d; ++j) p[j] = (1.0 - alpha) * base[j] + (j == atk.target ? alpha : 0.0);
      double closest = std::numeric_limits<double>::infinity();
      for (const auto& c : b.context_profiles) closest = std::min(closest, distance(p, c));
      if (closest >= options.shift) break;
    }
    attacks.push_back(atk);
  }

  const auto normal = [&] {
    return draw_frequencies(b.context_profiles[static_cast<std::size_t>(rng.below(options.contexts))], options.calls,
                            rng);
  };
  for (std::size_t i = 0; i < options.train; ++i) b.train.push_back(normal());
  for (std::size_t i = 0; i < options.test_normal; ++i) b.test.push_back({normal(), false});
  for (std::size_t i = 0; i < options.test_anomalous; ++i) {
    const Attack& atk = attacks[static_cast<std::size_t>(rng.below(attacks.size()))];
    const std::size_t own = options.calls - atk.injected;
    FrequencyVector f(d, 0.0);
    if (own > 0) f = draw_frequencies(b.context_profiles[atk.context], own, rng);
    for (double& x : f) x *= static_cast<double>(own) / static_cast<double>(options.calls);
    f[atk.target] += static_cast<double>(atk.injected) / static_cast<double>(options.calls);
    b.test.push_back({std::move(f), true});
  }
  return b;
}

DetectionRates evaluate(const ClusterModel& model, std::span<const LabeledSample> test) {
  std::size_t pos = 0, neg = 0, tp = 0, fp = 0;
  for (const auto& s : test) {
    const bool flagged = classify(s.freq, model).anomalous;
    if (s.anomalous) {
      ++pos;
      tp += flagged ? 1 : 0;
    } else {
      ++neg;
      fp += flagged ? 1 : 0;
    }
  }
  return {pos ? static_cast<double>(tp) / static_cast<double>(pos) : 0.0,
          neg ? static_cast<double>(fp) / static_cast<double>(neg) : 0.0};
}

void write_samples_csv(std::ostream& out, std::span<const LabeledSample> samples) {
  const std::size_t d = samples.empty() ? 0 : samples.front().freq.size();
  out << "label";
  for (std::size_t j = 0; j < d; ++j) out << ",f" << j;
  out << '\n';
  const auto old = out.precision(17);
  for (const auto& s : samples) {
    out << (s.anomalous ? 1 : 0);
    for (double x : s.freq) out << ',' << x;
    out << '\n';
  }
  out.precision(old);
}

std::vector<LabeledSample> read_samples_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("label", 0) != 0) throw Error("samples CSV: missing header");
  std::vector<LabeledSample> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    LabeledSample s;
    bool first = true;
    try {
      while (std::getline(ss, cell, ',')) {
        if (first) {
          s.anomalous = std::stoi(cell) != 0;
          first = false;
        } else {
          s.freq.push_back(std::stod(cell));
        }
      }
    } catch (const std::logic_error&) {
      throw Error("samples CSV row " + std::to_string(row) + ": malformed value");
    }
    if (!out.empty() && out.front().freq.size() != s.freq.size()) {
      throw Error("samples CSV row " + std::to_string(row) + ": wrong number of columns");
    }
    out.push_back(std::move(s));
  }
  return out;
}

// ---- Security task ----

TaskSet with_security_task(const TaskSet& ts, const SecurityTaskConfig& cfg) {
  TaskSet out = ts;
  int lowest = 0;
  for (const Task& t : ts.tasks) lowest = std::max(lowest, t.priority);
  Task sec;
  sec.id = cfg.id;
  sec.wcet = cfg.check_cost;
  sec.bcet = cfg.check_cost;
  sec.period = cfg.passive_period;
  sec.deadline = cfg.passive_period;
  sec.priority = lowest + 1;
  out.tasks.push_back(sec);
  return out;
}

MonitorPolicy::MonitorPolicy(SecurityTaskConfig cfg, std::set<Tick> anomaly_ticks)
    : cfg_(cfg), anomalies_(std::move(anomaly_ticks)) {}

void MonitorPolicy::bind(const TaskSet& ts) {
  const Task* sec = ts.find(cfg_.id);
  if (!sec) throw PolicyRejected("monitor: task set has no security task " + std::to_string(cfg_.id));
  if (cfg_.check_cost < 1) throw PolicyRejected("monitor: check_cost must be >= 1");
  if (sec->wcet != cfg_.check_cost || sec->period != cfg_.passive_period) {
    throw PolicyRejected("monitor: security task does not match the configuration");
  }
  const Tick half = cfg_.passive_period / 2;
  if (half < cfg_.check_cost) throw PolicyRejected("monitor: passive_period / 2 is shorter than check_cost");
  for (std::size_t i = 0; i < ts.tasks.size(); ++i) {
    const Task& t = ts.tasks[i];
    if (t.id == cfg_.id) {
      sec_index_ = i;
      continue;
    }
    if (t.priority >= sec->priority) throw PolicyRejected("monitor: security task must have the lowest priority");
    if (t.priority == cfg_.fine_priority) {
      throw PolicyRejected("monitor: fine_priority collides with task " + std::to_string(t.id));
    }
  }
  passive_priority_ = sec->priority;

  if (response_time_analysis(ts).verdict != Verdict::schedulable) {
    throw PolicyRejected("monitor: task set is not schedulable with the passive security task");
  }
  if (cfg_.escalation) {
    TaskSet fine = ts;
    Task& s = fine.tasks[sec_index_];
    s.priority = cfg_.fine_priority;
    s.period = half;
    s.deadline = half;
    if (response_time_analysis(fine).verdict != Verdict::schedulable) {
      throw PolicyRejected("monitor: fine-grained placement breaks response-time analysis");
    }
  }
  fine_ = false;
  awaiting_detection_ = false;
}

void MonitorPolicy::escalate(SchedulerContext& ctx) {
  const Tick half = cfg_.passive_period / 2;
  const Tick now = ctx.now();
  fine_ = true;
  ctx.record(EventKind::mode_switch, cfg_.id, 1);
  ctx.set_task_priority(sec_index_, cfg_.fine_priority);
  ctx.set_task_period(sec_index_, half);
  ctx.set_task_deadline(sec_index_, half);
  if (const auto last = ctx.last_release(sec_index_)) {
    // A pending job now competes at the elevated priority as if released now.
    const Tick origin = ctx.has_pending_job(sec_index_) ? now : *last;
    ctx.set_next_release(sec_index_, std::max({now, *last + half, origin + half}));
  }
}

void MonitorPolicy::relax(SchedulerContext& ctx) {
  fine_ = false;
  ctx.record(EventKind::mode_switch, cfg_.id, 0);
  ctx.set_task_priority(sec_index_, passive_priority_);
  ctx.set_task_period(sec_index_, cfg_.passive_period);
  ctx.set_task_deadline(sec_index_, cfg_.passive_period);
  const Tick last = ctx.last_release(sec_index_).value_or(0);
  ctx.set_next_release(sec_index_, std::max(ctx.now() + 1, last + cfg_.passive_period));
}

void MonitorPolicy::on_tick(SchedulerContext& ctx) {
  if (!cfg_.escalation || !anomalies_.count(ctx.now())) return;
  awaiting_detection_ = true;
  if (!fine_) escalate(ctx);
}

void MonitorPolicy::on_complete(SchedulerContext& ctx, std::size_t job) {
  if (ctx.job(job).task_index != sec_index_ || !fine_) return;
  if (awaiting_detection_) {
    awaiting_detection_ = false;
  } else {
    relax(ctx);
  }
}

Choice MonitorPolicy::select(SchedulerContext& ctx) {
  const auto ready = ctx.ready();
  return ready.empty() ? Choice::idle() : Choice::run(ready.front());
}

std::optional<Tick> detection_latency(const ScheduleTrace& trace, TaskId security_task, Tick anomaly_tick) {
  std::optional<Tick> first;
  for (const Job& j : trace.jobs) {
    if (j.task_id != security_task || !j.completion || *j.completion <= anomaly_tick) continue;
    if (!first || *j.completion < *first) first = j.completion;
  }
  if (!first) return std::nullopt;
  return *first - anomaly_tick;
}

}  // namespace rtsec
