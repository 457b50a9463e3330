#include <doctest.h>

#include "helpers.hpp"
#include "rtsec/analysis.hpp"
#include "rtsec/engine.hpp"
#include "rtsec/shuffle.hpp"

using namespace rtsec;
using testing::make_task;
using testing::rm_set;

namespace {

constexpr ShuffleMode kModes[] = {ShuffleMode::task_only, ShuffleMode::with_idle, ShuffleMode::fine_grained};

std::vector<long> budget_vector(const TaskSet& ts, const InversionBudget& b) {
  std::vector<long> out;
  for (const auto& t : ts.tasks) out.push_back(b.budget.at(t.id));
  return out;
}

double ensemble_entropy(const TaskSet& ts, std::optional<ShuffleMode> mode, int members) {
  std::vector<ScheduleTrace> traces;
  const Tick h = hyperperiod(ts);
  for (int i = 0; i < members; ++i) {
    if (mode) {
      ShufflePolicy policy({*mode, static_cast<std::uint64_t>(i), ShuffleGuard::budget});
      traces.push_back(simulate(ts, policy, h, 0));
    } else {
      traces.push_back(simulate(ts, h, 0));
    }
  }
  return schedule_entropy(traces, h).mean;
}

}  // namespace

TEST_SUITE("shuffle") {
  TEST_CASE("budgets on the three-task example") {
    const auto ts = rm_set({{1, 4}, {2, 6}, {3, 12}});
    REQUIRE(response_time_analysis(ts).response == std::map<TaskId, Tick>{{1, 1}, {2, 3}, {3, 10}});
    const auto b = compute_budgets(ts);
    CHECK(budget_vector(ts, b) == std::vector<long>{2, 0, 0});
    for (const auto& t : ts.tasks) CHECK(b.response_bound.at(t.id) <= t.deadline);
  }

  TEST_CASE("slack-only budgets admit a miss that computed budgets exclude") {
    const auto ts = rm_set({{1, 4}, {2, 6}, {3, 12}});
    const auto ref = testing::to_ref(ts);
    // D_i - R_i for each task.
    CHECK(oracle::guarded_miss_exists(ref, {3, 3, 2}, 36));
    CHECK_FALSE(oracle::guarded_miss_exists(ref, budget_vector(ts, compute_budgets(ts)), 36));
  }

  TEST_CASE("computed budgets are safe against every guarded schedule") {
    Rng rng(606);
    int checked = 0;
    while (checked < 40) {
      const auto ts = testing::random_set(rng, 3, 0.8, {4, 5, 6, 8, 10, 12});
      InversionBudget b;
      try {
        b = compute_budgets(ts);
      } catch (const PolicyRejected&) {
        continue;
      }
      ++checked;
      const Tick h = hyperperiod(ts);
      REQUIRE_FALSE(oracle::guarded_miss_exists(testing::to_ref(ts), budget_vector(ts, b), std::min<Tick>(3 * h, 72)));
    }
  }

  TEST_CASE("budget boundaries") {
    // A task whose response equals its deadline gets no budget.
    const auto tight = rm_set({{2, 4}, {2, 4}});
    CHECK(compute_budgets(tight).budget.at(1) == 0);
    CHECK(compute_budgets(tight).budget.at(2) == 0);
    const auto roomy = rm_set({{1, 10}});
    CHECK(compute_budgets(roomy).budget.at(1) == 9);
    CHECK_THROWS_AS(compute_budgets(rm_set({{3, 5}, {3, 6}})), PolicyRejected);
    Rng rng(1);
    for (int trial = 0; trial < 200; ++trial) {
      const auto ts = testing::random_set(rng, 5, 1.0, {4, 5, 6, 8, 10, 12, 20});
      try {
        for (const auto& [id, v] : compute_budgets(ts).budget) CHECK(v >= 0);
      } catch (const PolicyRejected&) {
        CHECK(true);
      }
    }
  }

  TEST_CASE("select_next") {
    Rng rng(4);
    const std::vector<ShuffleCandidate> none;
    CHECK_FALSE(select_next(none, false, true, rng).has_value());
    const std::vector<ShuffleCandidate> exhausted{{1, 0}, {2, 0}, {3, 0}};
    for (int i = 0; i < 50; ++i) CHECK(select_next(exhausted, true, true, rng) == std::optional<std::size_t>(0));
    const std::vector<ShuffleCandidate> open{{1, 5}, {2, 5}};
    std::map<int, int> seen;
    for (int i = 0; i < 3000; ++i) {
      const auto pick = select_next(open, true, true, rng);
      ++seen[pick ? static_cast<int>(*pick) : -1];
    }
    CHECK(seen.size() == 3);
    for (const auto& [k, n] : seen) CHECK(n == doctest::Approx(1000).epsilon(0.1));
    // The second job is legal only while the first has budget.
    const std::vector<ShuffleCandidate> partial{{1, 1}, {2, 0}, {3, 4}};
    for (int i = 0; i < 100; ++i) {
      const auto pick = select_next(partial, true, true, rng);
      REQUIRE(pick.has_value());
      CHECK(*pick <= 1);
    }
  }

  TEST_CASE("zero budgets reduce to vanilla fixed priority") {
    const auto ts = rm_set({{1, 4}, {2, 6}, {3, 12}});
    InversionBudget zero;
    for (const auto& t : ts.tasks) zero.budget[t.id] = 0;
    for (auto mode : kModes) {
      ShufflePolicy policy({mode, 5, ShuffleGuard::budget}, zero);
      CHECK(simulate(ts, policy, 96, 0).slots == simulate(ts, 96).slots);
    }
  }

  TEST_CASE("task_only never idles while work is ready") {
    const auto ts = rm_set({{1, 10}, {2, 20}, {3, 40}});
    ShufflePolicy policy({ShuffleMode::task_only, 3, ShuffleGuard::budget});
    const auto shuffled = simulate(ts, policy, 400, 0);
    const auto vanilla = simulate(ts, 400);
    for (std::size_t k = 0; k < shuffled.slots.size(); ++k) {
      CHECK((shuffled.slots[k].occupant == kIdle) == (vanilla.slots[k].occupant == kIdle));
    }
  }

  TEST_CASE("guarded shuffling never misses a deadline") {
    Rng rng(77);
    int sets = 0;
    while (sets < 100) {
      auto ts = testing::random_set(rng, 5, 0.9, {5, 8, 10, 20, 25, 40});
      try {
        compute_budgets(ts);
      } catch (const PolicyRejected&) {
        continue;
      }
      ++sets;
      const Tick h = hyperperiod(ts);
      for (auto mode : kModes) {
        ShufflePolicy policy({mode, static_cast<std::uint64_t>(sets), ShuffleGuard::budget});
        const auto trace = simulate(ts, policy, 100 * h, 0);
        REQUIRE(count_deadline_misses(trace) == 0);
        REQUIRE(check_trace(trace, ts).empty());
      }
    }
  }

  TEST_CASE("unguarded shuffling can miss") {
    const auto ts = rm_set({{1, 4}, {2, 6}, {3, 12}});
    std::size_t misses = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      ShufflePolicy policy({ShuffleMode::fine_grained, seed, ShuffleGuard::none});
      misses += count_deadline_misses(simulate(ts, policy, 120, 0));
    }
    CHECK(misses > 0);
  }

  TEST_CASE("entropy examples") {
    const auto ts = rm_set({{1, 4}, {2, 6}, {3, 12}});
    CHECK(ensemble_entropy(ts, std::nullopt, 10) == 0.0);

    ScheduleTrace a, b;
    a.duration = b.duration = 1;
    a.slots = {{0, 1, 0}};
    b.slots = {{0, 2, 0}};
    const std::vector<ScheduleTrace> coin{a, b};
    const auto e = schedule_entropy(coin);
    CHECK(e.bits == std::vector<double>{1.0});
    CHECK(e.mean == 1.0);

    ScheduleTrace longer = b;
    longer.duration = 2;
    longer.slots.push_back({1, 2, 0});
    const std::vector<ScheduleTrace> mismatched{a, longer};
    CHECK_THROWS_AS(schedule_entropy(mismatched), Error);
    const std::vector<ScheduleTrace> single{a};
    CHECK_THROWS_AS(schedule_entropy(single), Error);
  }

  TEST_CASE("entropy grows with the shuffling mode") {
    const auto ts = rm_set({{1, 4}, {2, 6}, {3, 12}});
    const double vanilla = ensemble_entropy(ts, std::nullopt, 1000);
    const double task_only = ensemble_entropy(ts, ShuffleMode::task_only, 1000);
    const double with_idle = ensemble_entropy(ts, ShuffleMode::with_idle, 1000);
    const double fine = ensemble_entropy(ts, ShuffleMode::fine_grained, 1000);
    CHECK(vanilla == 0.0);
    CHECK(task_only > vanilla);
    CHECK(with_idle >= task_only);
    CHECK(fine >= with_idle);
  }

  TEST_CASE("shuffled runs are reproducible") {
    const auto ts = rm_set({{1, 10}, {2, 20}, {3, 40}});
    ShufflePolicy p1({ShuffleMode::fine_grained, 9, ShuffleGuard::budget});
    ShufflePolicy p2({ShuffleMode::fine_grained, 9, ShuffleGuard::budget});
    CHECK(simulate(ts, p1, 400, 1).slots == simulate(ts, p2, 400, 1).slots);
  }
}
