#include <doctest.h>

#include "helpers.hpp"
#include "rtsec/engine.hpp"
#include "rtsec/flush.hpp"

using namespace rtsec;
using testing::make_task;
using testing::rm_set;

namespace {

// Task 1 (H) is more secure than task 2 (L).
TaskSet high_low() {
  TaskSet ts;
  ts.tasks = {make_task(1, 1, 4, 1), make_task(2, 1, 4, 2)};
  ts.tasks[0].security_level = 0;
  ts.tasks[1].security_level = 1;
  return ts;
}

std::vector<std::vector<bool>> leak_matrix(const TaskSet& ts, const SecurityPolicy& p) {
  std::vector<std::vector<bool>> m(ts.size(), std::vector<bool>(ts.size(), false));
  for (std::size_t i = 0; i < ts.size(); ++i) {
    for (std::size_t j = 0; j < ts.size(); ++j) {
      if (i == j) continue;
      // Independent of the library: compare levels directly, or consult the pairs.
      const auto& a = ts.tasks[i];
      const auto& b = ts.tasks[j];
      if (p.mode == SecurityMode::pairwise) {
        m[i][j] = p.noleak.count({a.id, b.id}) > 0;
      } else {
        const int la = p.levels.count(a.id) ? p.levels.at(a.id) : a.security_level;
        const int lb = p.levels.count(b.id) ? p.levels.at(b.id) : b.security_level;
        m[i][j] = la < lb;
      }
    }
  }
  return m;
}

}  // namespace

TEST_SUITE("flush") {
  TEST_CASE("needs_flush follows the flow direction") {
    const auto ts = high_low();
    const SecurityPolicy p;
    CHECK(needs_flush(1, 2, p, ts));
    CHECK_FALSE(needs_flush(2, 1, p, ts));
    CHECK_FALSE(needs_flush(1, 1, p, ts));
    CHECK_THROWS_AS(needs_flush(1, 7, p, ts), Error);
    CHECK_THROWS_AS(needs_flush(kIdle, 1, p, ts), Error);

    SecurityPolicy pairs;
    pairs.mode = SecurityMode::pairwise;
    pairs.noleak = {{2, 1}};
    CHECK(needs_flush(2, 1, pairs, ts));
    CHECK_FALSE(needs_flush(1, 2, pairs, ts));
  }

  TEST_CASE("high then low inserts one flush per period") {
    const auto ts = high_low();
    SecurityPolicy p;
    p.flush_cost = 1;
    FlushPolicy policy(p);
    const auto trace = simulate(ts, 12, 0);
    const auto flushed = simulate(ts, policy, 12, 0);
    std::vector<TaskId> got;
    for (const auto& s : flushed.slots) got.push_back(s.occupant);
    const std::vector<TaskId> expected{1, kFlush, 2, kIdle, 1, kFlush, 2, kIdle, 1, kFlush, 2, kIdle};
    CHECK(got == expected);
    CHECK(count_violations(flushed, p, ts) == 0);
    CHECK(count_violations(trace, p, ts) == 3);
    CHECK(count_deadline_misses(flushed) == 0);
  }

  TEST_CASE("zero flush cost reproduces vanilla") {
    const auto ts = rm_set({{1, 4}, {2, 6}, {3, 12}});
    SecurityPolicy p;
    p.levels = {{1, 2}, {2, 0}, {3, 1}};
    FlushPolicy policy(p);
    CHECK(simulate(ts, policy, 48, 0).slots == simulate(ts, 48).slots);
  }

  TEST_CASE("empty and idle-only traces have no violations") {
    const auto ts = high_low();
    ScheduleTrace empty;
    CHECK(count_violations(empty, SecurityPolicy{}, ts) == 0);
  }

  TEST_CASE("idle does not clear the taint") {
    TaskSet ts;
    ts.tasks = {make_task(1, 1, 10, 1), make_task(2, 1, 10, 2, 0, 5)};
    ts.tasks[1].security_level = 1;
    SecurityPolicy p;
    p.flush_cost = 2;
    FlushPolicy policy(p);
    const auto trace = simulate(ts, policy, 10, 0);
    CHECK(trace.slots[5].occupant == kFlush);
    CHECK(trace.slots[6].occupant == kFlush);
    CHECK(trace.slots[7].occupant == 2);
  }

  TEST_CASE("violation counts match the naive oracle and the flush policy never leaks") {
    Rng rng(31);
    Tick simulated = 0;
    std::size_t vanilla_leaks = 0;
    while (simulated < 1'000'000) {
      auto ts = testing::random_set(rng, 5, 0.7, {5, 8, 10, 16, 20, 25, 40});
      for (auto& t : ts.tasks) t.phase = static_cast<Tick>(rng.below(static_cast<std::uint64_t>(t.period)));
      SecurityPolicy p;
      if (rng.bernoulli(0.5)) {
        for (const auto& t : ts.tasks) p.levels[t.id] = static_cast<int>(rng.below(3));
      } else {
        p.mode = SecurityMode::pairwise;
        for (const auto& a : ts.tasks) {
          for (const auto& b : ts.tasks) {
            if (a.id != b.id && rng.bernoulli(0.4)) p.noleak.insert({a.id, b.id});
          }
        }
      }
      p.flush_cost = 1 + static_cast<Tick>(rng.below(2));
      const Tick duration = 5000;
      const auto m = leak_matrix(ts, p);

      const auto vanilla = simulate(ts, duration, 0);
      const auto expected = oracle::count_leaks(testing::occupant_indices(vanilla, ts), m, -2, -1);
      REQUIRE(count_violations(vanilla, p, ts) == static_cast<std::size_t>(expected));
      vanilla_leaks += static_cast<std::size_t>(expected);

      FlushPolicy policy(p);
      const auto flushed = simulate(ts, policy, duration, 0);
      REQUIRE(count_violations(flushed, p, ts) == 0);
      REQUIRE(oracle::count_leaks(testing::occupant_indices(flushed, ts), m, -2, -1) == 0);
      simulated += duration;
    }
    CHECK(vanilla_leaks > 0);
  }

  TEST_CASE("total order compiles to an equivalent pairwise policy") {
    Rng rng(12);
    for (int trial = 0; trial < 100; ++trial) {
      auto ts = testing::random_set(rng, 5, 0.7, {5, 8, 10, 20});
      for (auto& t : ts.tasks) t.phase = static_cast<Tick>(rng.below(static_cast<std::uint64_t>(t.period)));
      SecurityPolicy p;
      p.flush_cost = 1;
      for (const auto& t : ts.tasks) p.levels[t.id] = static_cast<int>(rng.below(4));
      const auto pairwise = compile_to_pairwise(p, ts);
      CHECK(pairwise.mode == SecurityMode::pairwise);
      FlushPolicy a(p), b(pairwise);
      CHECK(simulate(ts, a, 400, 0).slots == simulate(ts, b, 400, 0).slots);
    }
  }

  TEST_CASE("malformed policies are rejected") {
    const auto ts = high_low();
    SecurityPolicy diag;
    diag.mode = SecurityMode::pairwise;
    diag.noleak = {{1, 1}};
    CHECK(validate(diag, ts).size() == 1);
    FlushPolicy policy(diag);
    CHECK_THROWS_AS(simulate(ts, policy, 10, 0), PolicyRejected);
  }
}
