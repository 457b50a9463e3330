#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rtsec/engine.hpp"

namespace rtsec {

// ---- Execution-profile watchdog ----

struct ProfileEntry {
  Tick wcet = 1;
  Tick period = 1;
};

struct ExecutionProfile {
  std::map<TaskId, ProfileEntry> tasks;
  Tick tolerance = 0;
};

ExecutionProfile make_profile(const TaskSet& ts, Tick tolerance = 0);

enum class AnomalyKind { overrun, period_violation };
std::string_view to_string(AnomalyKind kind);

struct TimingAnomaly {
  Tick tick = 0;  // slot that exceeded the budget, or the early release
  TaskId task = 0;
  JobId job = kNoJob;
  AnomalyKind kind = AnomalyKind::overrun;
};

// Jobs of tasks missing from the profile are ignored.
std::vector<TimingAnomaly> watchdog_check(const ScheduleTrace& trace, const ExecutionProfile& profile);

// ---- Syscall-frequency clustering ----

using FrequencyVector = std::vector<double>;

struct ClusterOptions {
  double quantile = 0.99;
  // Global k-means tries at most this many samples as the new center of each
  // stage (a seeded subset when there are more).
  std::size_t max_candidates = 256;
  int max_lloyd_iterations = 100;
};

struct ClusterModel {
  std::vector<FrequencyVector> centers;
  Eigen::MatrixXd covariance;  // pooled within-cluster, ridge included
  double ridge = 0.0;
  double threshold = 0.0;      // Mahalanobis distance
  // Sum of squared Euclidean distances after each global k-means stage.
  std::vector<double> objective;
  // Lower-triangular L^{-1} with covariance = L L^T.
  Eigen::MatrixXd whitening;
  std::vector<std::vector<double>> whitened_centers;

  std::size_t dimension() const { return centers.empty() ? 0 : centers.front().size(); }
};

// Global k-means on Euclidean distance, then a pooled covariance for
// Mahalanobis scoring. Throws Error when fewer than k*d samples are given,
// dimensions disagree, or the covariance stays singular at the ridge cap.
ClusterModel learn_profiles(std::span<const FrequencyVector> samples, std::size_t k, std::uint64_t seed,
                            const ClusterOptions& options = {});

struct Classification {
  bool anomalous = false;
  std::size_t cluster = 0;  // nearest center by Mahalanobis distance
  double distance = 0.0;
};

Classification classify(const FrequencyVector& v, const ClusterModel& model);
double mahalanobis(const FrequencyVector& a, const FrequencyVector& b, const ClusterModel& model);

struct LabeledSample {
  FrequencyVector freq;
  bool anomalous = false;
};

struct BenchmarkOptions {
  std::size_t dimension = 8;
  std::size_t contexts = 3;
  std::size_t calls = 200;  // syscalls per window
  std::size_t train = 600;
  std::size_t test_normal = 1000;
  std::size_t test_anomalous = 1000;
  // Anomalies are context windows with a fixed number of injected calls to
  // one category; the injected count is the smallest that puts the shifted
  // mean this many Mahalanobis units from every context profile, under the
  // true sampling covariance.
  double shift = 6.0;
};

struct SyntheticBenchmark {
  std::vector<FrequencyVector> context_profiles;
  std::vector<FrequencyVector> train;
  std::vector<LabeledSample> test;
};

SyntheticBenchmark make_syscall_benchmark(std::uint64_t seed, const BenchmarkOptions& options = {});

struct DetectionRates {
  double tpr = 0.0;
  double fpr = 0.0;
};

DetectionRates evaluate(const ClusterModel& model, std::span<const LabeledSample> test);

// `label,f0,f1,...`; label is 1 for anomalous samples.
void write_samples_csv(std::ostream& out, std::span<const LabeledSample> samples);
std::vector<LabeledSample> read_samples_csv(std::istream& in);

// ---- Mode-switched security task ----

struct SecurityTaskConfig {
  TaskId id = 1000;
  Tick check_cost = 1;
  Tick passive_period = 20;
  // Priority while in fine-grained mode; must not collide with a task.
  int fine_priority = 0;
  // When false the task stays passive whatever the anomaly signals.
  bool escalation = true;
};

// `ts` plus the security task (check_cost, passive_period) at a priority
// below every task.
TaskSet with_security_task(const TaskSet& ts, const SecurityTaskConfig& cfg);

// Fixed-priority scheduling of a task set that contains the security task.
// An anomaly signal at tick a raises the task to fine_priority with period
// passive_period / 2; a job already pending counts as released at a. The
// first completion after a is the detection; one more completion switches
// back to passive. bind() runs response-time analysis at both placements and
// throws PolicyRejected if either fails.
class MonitorPolicy final : public SchedulingPolicy {
 public:
  MonitorPolicy(SecurityTaskConfig cfg, std::set<Tick> anomaly_ticks);

  std::string name() const override { return cfg_.escalation ? "monitor" : "monitor_passive"; }
  void bind(const TaskSet& ts) override;
  void on_tick(SchedulerContext& ctx) override;
  void on_complete(SchedulerContext& ctx, std::size_t job) override;
  Choice select(SchedulerContext& ctx) override;

 private:
  void escalate(SchedulerContext& ctx);
  void relax(SchedulerContext& ctx);

  SecurityTaskConfig cfg_;
  std::set<Tick> anomalies_;
  std::size_t sec_index_ = 0;
  int passive_priority_ = 0;
  bool fine_ = false;
  bool awaiting_detection_ = false;
};

// Ticks from `anomaly_tick` to the first completion of `security_task` after
// it, or nullopt when there is none in the trace.
std::optional<Tick> detection_latency(const ScheduleTrace& trace, TaskId security_task, Tick anomaly_tick);

}  // namespace rtsec
