#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "rtsec/engine.hpp"
#include "rtsec/task_model.hpp"

using namespace rtsec;
using testing::make_task;
using testing::rm_set;

TEST_SUITE("task_model") {
  TEST_CASE("hyperperiod is the LCM of all periods") {
    CHECK(hyperperiod(rm_set({{1, 4}, {2, 6}, {3, 12}})) == 12);
    CHECK(hyperperiod(rm_set({{1, 5}})) == 5);
    CHECK(hyperperiod(rm_set({{1, 4}, {2, 6}})) == 12);
  }

  TEST_CASE("hyperperiod rejects sporadic tasks and overflow") {
    auto ts = rm_set({{1, 4}, {1, 6}});
    ts.tasks[1].kind = TaskKind::sporadic;
    CHECK_THROWS_AS(hyperperiod(ts), Error);

    TaskSet big;
    const Tick primes[] = {1000003, 1000033, 1000037, 1000039};
    int id = 1;
    for (Tick p : primes) big.tasks.push_back(make_task(id, 1, p, id)), ++id;
    CHECK_THROWS_AS(hyperperiod(big), Error);
  }

  TEST_CASE("zero-phase schedule repeats every hyperperiod") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
      const auto ts = testing::random_set(rng, 4, 1.0, {4, 5, 6, 8, 10, 12, 15, 20});
      const Tick h = hyperperiod(ts);
      for (const auto& t : ts.tasks) CHECK(h % t.period == 0);
      const auto trace = simulate(ts, 2 * h);
      for (Tick k = 0; k < h; ++k) {
        REQUIRE(trace.slots[static_cast<std::size_t>(k)].occupant ==
                trace.slots[static_cast<std::size_t>(k + h)].occupant);
      }
    }
  }

  TEST_CASE("utilization is exact") {
    const auto u = utilization(rm_set({{1, 4}, {2, 6}, {3, 12}}));
    CHECK(u == make_fraction(5, 6));
    CHECK(u.value() == doctest::Approx(10.0 / 12.0));
    CHECK(utilization(rm_set({{1, 1}})).value() == 1.0);
  }

  TEST_CASE("validate accepts a valid set") {
    CHECK(validate(rm_set({{1, 4}, {2, 6}, {3, 12}})).empty());
  }

  TEST_CASE("validate reports one violation per single-field mutation") {
    const auto base = rm_set({{1, 4}, {2, 6}, {3, 12}});
    auto expect_one = [&](auto mutate, TaskId who) {
      auto ts = base;
      mutate(ts);
      const auto v = validate(ts);
      REQUIRE(v.size() == 1);
      REQUIRE(v[0].task.has_value());
      CHECK(*v[0].task == who);
    };
    expect_one([](TaskSet& ts) { ts.tasks[1].deadline = 7; }, 2);
    expect_one([](TaskSet& ts) { ts.tasks[2].priority = ts.tasks[0].priority; }, 3);
    expect_one([](TaskSet& ts) { ts.tasks[0].phase = -1; }, 1);
    expect_one([](TaskSet& ts) { ts.tasks[2].id = 2; }, 2);
    expect_one([](TaskSet& ts) { ts.tasks[1].bcet = 0; }, 2);
    expect_one([](TaskSet& ts) { ts.tasks[2].bcet = 4; }, 3);
    expect_one([](TaskSet& ts) { ts.tasks[1].deadline = 1; }, 2);
  }

  TEST_CASE("validate flags an empty set and require_valid throws") {
    CHECK(validate(TaskSet{}).size() == 1);
    auto ts = rm_set({{1, 4}});
    ts.tasks[0].deadline = 5;
    CHECK_THROWS_AS(require_valid(ts), ValidationError);
  }

  TEST_CASE("rate-monotonic assignment breaks period ties by id") {
    TaskSet ts;
    ts.tasks = {make_task(3, 1, 10, 0), make_task(1, 1, 10, 0), make_task(2, 1, 5, 0)};
    const auto rm = assign_rate_monotonic(ts);
    CHECK(rm.find(2)->priority == 1);
    CHECK(rm.find(1)->priority == 2);
    CHECK(rm.find(3)->priority == 3);
  }

  TEST_CASE("generator is deterministic and hits single-task targets") {
    const std::set<Tick> periods{10, 20, 25, 40, 50, 100};
    CHECK(generate_taskset(5, 0.7, periods, 42) == generate_taskset(5, 0.7, periods, 42));
    const auto one = generate_taskset(1, 0.5, {10}, 1);
    REQUIRE(one.size() == 1);
    CHECK(one.tasks[0].wcet == 5);
    CHECK(one.tasks[0].period == 10);
    CHECK(one.tasks[0].priority == 1);
  }

  TEST_CASE("generated sets track the target utilization") {
    const std::set<Tick> periods{10, 20, 25, 40, 50, 100, 200};
    double total_error = 0.0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
      const auto ts = generate_taskset(1 + static_cast<int>(seed % 5), 0.7, periods, seed);
      const double err = std::abs(utilization(ts).value() - 0.7);
      CHECK(err <= 0.01 + 1e-12);
      CHECK(validate(ts).empty());
      total_error += err;
    }
    CHECK(total_error / 1000.0 <= 0.02);
  }

  TEST_CASE("generator rejects bad arguments") {
    CHECK_THROWS_AS(generate_taskset(0, 0.5, {10}, 1), Error);
    CHECK_THROWS_AS(generate_taskset(2, 1.5, {10}, 1), Error);
    CHECK_THROWS_AS(generate_taskset(2, 0.5, {}, 1), Error);
    // Two tasks of period 1 can only reach U = 2.
    CHECK_THROWS_AS(generate_taskset(2, 0.5, {1}, 1), Error);
  }
}
