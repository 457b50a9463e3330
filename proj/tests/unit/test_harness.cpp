#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rtsec/harness.hpp"
#include "rtsec/restart.hpp"
#include "rtsec/scenario.hpp"

using namespace rtsec;
namespace fs = std::filesystem;

namespace {

const char* kBase = R"(
[scenario]
name = base
duration = 240
ensemble = 4
seed = 3

[task]
id = 1
C = 1
T = 10

[task]
id = 2
C = 2
T = 20

[task]
id = 3
C = 3
T = 40
)";

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("rtsec_harness_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int rank(const std::string& verdict) { return verdict == "schedulable" ? 0 : verdict == "inconclusive" ? 1 : 2; }

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("ensemble seeds use a fixed stride") {
    const auto seeds = ensemble_seeds(10, 3);
    CHECK(seeds == std::vector<std::uint64_t>{10, 10 + kEnsembleStride, 10 + 2 * kEnsembleStride});
  }

  TEST_CASE("vanilla run on a schedulable set has no misses") {
    const auto report = run(parse_scenario(kBase), {});
    CHECK(report["analysis"]["rta"]["verdict"] == "schedulable");
    CHECK(report["simulation"]["deadline_misses_total"] == 0);
    CHECK(report["entropy"]["mean"].get<double>() == 0.0);
    CHECK(report["seeds"].size() == 4);
  }

  TEST_CASE("shuffling adds entropy on the same seed family") {
    auto s = parse_scenario(std::string(kBase) + "[shuffle]\nmode = with_idle\n");
    const auto vanilla = run(s, {});
    s.policy = PolicyKind::shuffle;
    const auto shuffled = run(s, {});
    CHECK(vanilla["entropy"]["mean"].get<double>() == 0.0);
    CHECK(shuffled["entropy"]["mean"].get<double>() > 0.0);
    CHECK(shuffled["simulation"]["deadline_misses_total"] == 0);
  }

  TEST_CASE("shuffling lowers the exact-inference rate") {
    auto s = parse_scenario(std::string(kBase) + "[shuffle]\nmode = with_idle\n");
    s.attack = AttackKind::scheduleak;
    s.random_phases = true;
    s.ensemble = 12;
    const auto vanilla = run(s, {});
    s.policy = PolicyKind::shuffle;
    const auto shuffled = run(s, {});
    CHECK(shuffled["scheduleak"]["exact_rate"].get<double>() < vanilla["scheduleak"]["exact_rate"].get<double>());
  }

  TEST_CASE("runs are byte-identical and self-consistent") {
    auto text = std::string(kBase);
    text.insert(text.find("seed = 3"), "attack = scheduleak+cache\n");
    text += "[cache]\nvictim = 2\nusage = 4, 40\nepsilon = 0.1\n[restart]\ngrid = 5:60:5\ntrials = 5000\n";
    const auto full = parse_scenario(text);
    const auto a = scratch("a");
    const auto b = scratch("b");
    run(full, a);
    run(full, b);
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
      ++files;
      CHECK(slurp(entry.path()) == slurp(b / entry.path().filename()));
    }
    CHECK(files > 10);
    const auto check = check_report(a);
    CHECK(check.consistent);

    // Tampering with a trace is detected.
    {
      std::ofstream out(a / "member_000_events.csv", std::ios::app);
      out << "7,deadline_miss,1,0\n";
    }
    CHECK_FALSE(check_report(a).consistent);
    CHECK_THROWS_AS(check_report(scratch("missing")), Error);
    fs::remove_all(a);
    fs::remove_all(b);
  }

  TEST_CASE("restart period sweep reproduces the optimizer curve") {
    auto s = parse_scenario(std::string(kBase) + "[restart]\nreboot_time = 1\nlambda = 0.05\ngrid = 5:50:5\n");
    std::vector<std::string> values;
    for (double p : s.restart->grid) values.push_back(std::to_string(static_cast<int>(p)));
    const auto dir = scratch("sweep");
    const auto rows = sweep(s, "restart.period", values, dir);
    const auto r = *s.restart;
    const auto curve = optimize_period(r.grid, r.config, AttackModel::exponential(r.lambda, r.mu, r.damage_rate), r.weight).curve;
    REQUIRE(rows.size() == curve.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& an = rows[i].report["restart"]["analytic"];
      CHECK(an["unavailability"].get<double>() == curve[i].unavailability);
      CHECK(an["damage_per_second"].get<double>() == curve[i].expected_damage);
      CHECK(fs::exists(dir / ("restart.period=" + values[i]) / "report.json"));
    }
    const auto csv = slurp(dir / "sweep.csv");
    CHECK(csv.rfind("value,rta_verdict,deadline_misses,entropy_mean,exact_rate,mean_pearson,unavailability,", 0) == 0);
    fs::remove_all(dir);
  }

  TEST_CASE("flush cost sweep degrades schedulability monotonically") {
    auto text = std::string(kBase);
    text.insert(text.find("ensemble = 4"), "policy = flush\n");
    auto s = parse_scenario(text + "[security]\nmode = pairwise\nnoleak_pairs = 1>2, 2>3, 3>1\n");
    s.tasks.tasks[0].wcet = s.tasks.tasks[0].bcet = 3;
    s.tasks.tasks[1].wcet = s.tasks.tasks[1].bcet = 6;
    s.tasks.tasks[2].wcet = s.tasks.tasks[2].bcet = 8;
    const auto rows = sweep(s, "security.flush_cost", {"0", "1", "2", "3", "4"}, {});
    int prev = 0;
    bool degraded = false;
    for (const auto& row : rows) {
      const int r = rank(row.report["analysis"]["rta_with_flush"]["verdict"].get<std::string>());
      CHECK(r >= prev);
      degraded |= r > 0;
      prev = r;
      if (r == 0) CHECK(row.report["simulation"]["deadline_misses_total"] == 0);
      CHECK(row.report["simulation"]["flush_violations_total"] == 0);
    }
    CHECK(degraded);
  }

  TEST_CASE("sweep argument errors") {
    const auto s = parse_scenario(kBase);
    CHECK_THROWS_AS(sweep(s, "restart.period", {}, {}), Error);
    CHECK_THROWS_AS(sweep(s, "scenario.colour", {"1"}, {}), ValidationError);
  }
}
