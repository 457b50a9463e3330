#include <doctest.h>

#include "helpers.hpp"
#include "rtsec/analysis.hpp"
#include "rtsec/engine.hpp"
#include "rtsec/flush.hpp"

using namespace rtsec;
using testing::make_task;
using testing::rm_set;

namespace {

const std::vector<Tick> kPeriods{4, 5, 6, 8, 10, 12, 15, 20, 24, 30};

SecurityPolicy mutual_noleak(const TaskSet& ts, Tick flush_cost) {
  SecurityPolicy p;
  p.mode = SecurityMode::pairwise;
  p.flush_cost = flush_cost;
  for (const auto& a : ts.tasks) {
    for (const auto& b : ts.tasks) {
      if (a.id != b.id) p.noleak.insert({a.id, b.id});
    }
  }
  return p;
}

SecurityPolicy random_levels(const TaskSet& ts, Tick flush_cost, Rng& rng) {
  SecurityPolicy p;
  p.flush_cost = flush_cost;
  for (const auto& t : ts.tasks) p.levels[t.id] = static_cast<int>(rng.below(3));
  return p;
}

}  // namespace

TEST_SUITE("analysis") {
  TEST_CASE("utilization bound verdicts") {
    const auto one = utilization_bound_test(rm_set({{10, 10}}));
    CHECK(one.verdict == Verdict::schedulable);
    CHECK(*one.bound_value == doctest::Approx(1.0));

    const auto two_ts = rm_set({{2, 5}, {43, 100}});
    const auto two = utilization_bound_test(two_ts);
    CHECK(two.utilization == doctest::Approx(0.83));
    CHECK(*two.bound_value == doctest::Approx(0.8284).epsilon(1e-4));
    CHECK(two.verdict == Verdict::inconclusive);
    // The inconclusive set is in fact schedulable.
    CHECK(oracle::run_fp(testing::to_ref(two_ts), 2 * hyperperiod(two_ts)).misses == 0);

    CHECK(utilization_bound_test(rm_set({{6, 10}, {6, 10}})).verdict == Verdict::unschedulable);
  }

  TEST_CASE("utilization bound refuses non rate-monotonic priorities") {
    TaskSet ts;
    ts.tasks = {make_task(1, 1, 10, 1), make_task(2, 1, 5, 2)};
    CHECK_THROWS_AS(utilization_bound_test(ts), Error);
  }

  TEST_CASE("RTA on the three-task example matches the critical-instant oracle") {
    const auto ts = rm_set({{1, 4}, {2, 6}, {3, 12}});
    const auto worst = oracle::worst_response(testing::to_ref(ts));
    CHECK(worst == std::vector<long>{1, 3, 10});
    const auto report = response_time_analysis(ts);
    CHECK(report.verdict == Verdict::schedulable);
    CHECK(report.response.at(1) == 1);
    CHECK(report.response.at(2) == 3);
    CHECK(report.response.at(3) == 10);
    CHECK(response_time_analysis(rm_set({{3, 10}})).response.at(1) == 3);
  }

  TEST_CASE("RTA verdict is sound and exact against simulation") {
    Rng rng(2024);
    int schedulable = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      const auto ts = testing::random_set(rng, 5, 1.0, kPeriods);
      const auto report = response_time_analysis(ts);
      const auto ref = testing::to_ref(ts);
      const auto worst = oracle::worst_response(ref);
      if (report.verdict == Verdict::schedulable) {
        ++schedulable;
        REQUIRE(oracle::run_fp(ref, hyperperiod(ts)).misses == 0);
        // Synchronous release is the critical instant, so the bound is tight.
        for (std::size_t i = 0; i < ts.size(); ++i) CHECK(report.response.at(ts.tasks[i].id) == worst[i]);
      }
    }
    CHECK(schedulable > 100);
  }

  TEST_CASE("RTA responses are fixed points") {
    Rng rng(5);
    for (int trial = 0; trial < 300; ++trial) {
      const auto ts = testing::random_set(rng, 5, 1.0, kPeriods);
      const auto report = response_time_analysis(ts);
      if (report.verdict != Verdict::schedulable) continue;
      for (const auto& t : ts.tasks) {
        const Tick r = report.response.at(t.id);
        Tick again = t.wcet;
        for (const auto& h : ts.tasks) {
          if (h.priority < t.priority) again += (r + h.period - 1) / h.period * h.wcet;
        }
        CHECK(again == r);
      }
    }
  }

  TEST_CASE("raising a WCET never makes a set schedulable") {
    Rng rng(77);
    for (int trial = 0; trial < 300; ++trial) {
      const auto ts = testing::random_set(rng, 4, 1.2, kPeriods);
      const auto before = response_time_analysis(ts).verdict;
      auto bigger = ts;
      auto& t = bigger.tasks[rng.below(bigger.size())];
      if (t.wcet == t.deadline) continue;
      ++t.wcet;
      t.bcet = t.wcet;
      const auto after = response_time_analysis(bigger).verdict;
      if (before != Verdict::schedulable) CHECK(after != Verdict::schedulable);
    }
  }

  TEST_CASE("flush-aware RTA with zero cost equals plain RTA") {
    const auto ts = rm_set({{1, 4}, {2, 6}, {3, 12}});
    const auto plain = response_time_analysis(ts);
    const auto flushed = rta_with_flush(ts, mutual_noleak(ts, 0));
    CHECK(flushed.verdict == plain.verdict);
    CHECK(flushed.response == plain.response);
  }

  TEST_CASE("flush-aware RTA on two mutually leaking tasks") {
    const auto ts = rm_set({{1, 4}, {1, 8}});
    const auto policy = mutual_noleak(ts, 1);
    const auto report = rta_with_flush(ts, policy);
    CHECK(report.verdict == Verdict::schedulable);
    CHECK(report.response.at(1) == 2);
    CHECK(report.response.at(2) == 8);
    FlushPolicy fp(policy);
    const auto trace = simulate(ts, fp, 2 * hyperperiod(ts), 0);
    CHECK(count_deadline_misses(trace) == 0);
    CHECK(count_violations(trace, policy, ts) == 0);
  }

  TEST_CASE("flush-aware RTA rejects negative cost") {
    const auto ts = rm_set({{1, 4}});
    CHECK_THROWS_AS(rta_with_flush(ts, mutual_noleak(ts, -1)), Error);
  }

  TEST_CASE("flush-aware RTA is sound against the flush-inserting simulator") {
    Rng rng(99);
    int passed = 0;
    for (int trial = 0; trial < 500; ++trial) {
      const auto ts = testing::random_set(rng, 4, 0.8, kPeriods);
      const Tick f = 1 + static_cast<Tick>(rng.below(2));
      const auto policy = random_levels(ts, f, rng);
      const auto report = rta_with_flush(ts, policy);
      if (report.verdict != Verdict::schedulable) continue;
      ++passed;
      FlushPolicy fp(policy);
      const auto trace = simulate(ts, fp, 2 * hyperperiod(ts), 0);
      REQUIRE(count_deadline_misses(trace) == 0);
    }
    CHECK(passed > 50);
  }

  TEST_CASE("raising the flush cost never makes a set schedulable") {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
      const auto ts = testing::random_set(rng, 4, 0.9, kPeriods);
      auto policy = random_levels(ts, 1, rng);
      const auto lo = rta_with_flush(ts, policy).verdict;
      policy.flush_cost = 2;
      const auto hi = rta_with_flush(ts, policy).verdict;
      if (lo != Verdict::schedulable) CHECK(hi != Verdict::schedulable);
    }
  }

  TEST_CASE("non-preemptive blocking term") {
    TaskSet ts;
    ts.tasks = {make_task(1, 1, 10, 1), make_task(2, 2, 20, 2), make_task(3, 3, 30, 3)};
    const auto b = blocking_term_nonpreemptive(ts);
    CHECK(b.at(1) == 2);
    CHECK(b.at(2) == 2);
    CHECK(b.at(3) == 0);
  }

  TEST_CASE("non-preemptive RTA is sound for any phasing") {
    Rng rng(41);
    int passed = 0;
    for (int trial = 0; trial < 200; ++trial) {
      auto ts = testing::random_set(rng, 4, 0.9, kPeriods);
      if (rta_nonpreemptive(ts).verdict != Verdict::schedulable) continue;
      ++passed;
      const Tick h = hyperperiod(ts);
      for (int shift = 0; shift < 5; ++shift) {
        for (auto& t : ts.tasks) t.phase = shift == 0 ? 0 : static_cast<Tick>(rng.below(static_cast<std::uint64_t>(t.period)));
        const auto ref = oracle::run_fp(testing::to_ref(ts), 3 * h, false);
        REQUIRE(ref.misses == 0);
        SimConfig cfg;
        cfg.preemptive = false;
        const auto trace = simulate(ts, 3 * h, 0, cfg);
        CHECK(count_deadline_misses(trace) == 0);
        CHECK(testing::occupant_indices(trace, ts) == ref.occupant);
      }
    }
    CHECK(passed > 30);
  }
}
