// rtseclab: batch front end for scenarios (analyze, simulate, attack, sweep,
// report). Exit status: 0 success, 2 invalid input, 1 runtime failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "rtsec/harness.hpp"

namespace {

struct Common {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> ensemble;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("scenario", c.scenario, "Scenario file")->required();
  cmd->add_option("--seed", c.seed, "Master seed (overrides the scenario)");
  cmd->add_option("--out", c.out, "Output directory (overrides the scenario)");
  cmd->add_option("--ensemble", c.ensemble, "Ensemble size (overrides the scenario)")->check(CLI::PositiveNumber);
}

rtsec::Scenario load(const Common& c) {
  rtsec::Scenario s = rtsec::load_scenario(c.scenario);
  if (c.seed) s.seed = *c.seed;
  if (c.ensemble) s.ensemble = *c.ensemble;
  if (c.out) s.out = *c.out;
  if (s.out.empty()) s.out = "rtsec_out";
  return s;
}

void print_summary(const nlohmann::json& r, const std::filesystem::path& out) {
  std::cout << "report: " << (out / "report.json").string() << '\n';
  std::cout << "rta: " << r["analysis"]["rta"]["verdict"].get<std::string>() << '\n';
  if (r.contains("simulation")) {
    std::cout << "deadline misses: " << r["simulation"]["deadline_misses_total"] << '\n';
  }
  if (r.contains("entropy")) std::cout << "mean entropy (bits): " << r["entropy"]["mean"] << '\n';
  if (r.contains("scheduleak")) {
    std::cout << "scheduleak exact rate: " << r["scheduleak"]["exact_rate"]
              << ", with ambiguous: " << r["scheduleak"]["success_including_ambiguous"] << '\n';
  }
  if (r.contains("cache")) std::cout << "cache mean pearson: " << r["cache"]["mean_pearson"] << '\n';
  if (r.contains("monitor")) {
    std::cout << "detection latency: fine " << r["monitor"]["mean_latency"] << ", passive "
              << r["monitor"]["mean_passive_latency"] << '\n';
  }
  if (r.contains("restart")) {
    std::cout << "restart unavailability: " << r["restart"]["analytic"]["unavailability"] << '\n';
    if (r["restart"].contains("optimize")) std::cout << "restart best period: " << r["restart"]["optimize"]["best_period"] << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Real-time scheduling security lab"};
  app.require_subcommand(1);

  Common analyze_opts, simulate_opts, attack_opts, sweep_opts;
  auto* analyze = app.add_subcommand("analyze", "Schedulability analysis of a scenario");
  add_common(analyze, analyze_opts);
  auto* simulate = app.add_subcommand("simulate", "Run the ensemble and write traces");
  add_common(simulate, simulate_opts);
  auto* attack = app.add_subcommand("attack", "Run the ensemble with the scenario's attacks");
  add_common(attack, attack_opts);
  auto* sweep = app.add_subcommand("sweep", "One run per value of a scenario field");
  add_common(sweep, sweep_opts);
  std::string axis;
  std::vector<std::string> values;
  sweep->add_option("--axis", axis, "Field to vary, e.g. restart.period or task.1.C")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required()->delimiter(',');
  auto* report = app.add_subcommand("report", "Summarize and re-check an output directory");
  std::string report_dir;
  report->add_option("dir", report_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*analyze) {
      const auto s = load(analyze_opts);
      const auto a = rtsec::analyze(s);
      std::cout << a.dump(2) << '\n';
      if (analyze_opts.out) {
        std::filesystem::create_directories(s.out);
        std::ofstream(std::filesystem::path(s.out) / "analysis.json") << a.dump(2) << '\n';
      }
    } else if (*simulate || *attack) {
      const bool with_attacks = static_cast<bool>(*attack);
      const auto s = load(with_attacks ? attack_opts : simulate_opts);
      if (with_attacks && s.attack == rtsec::AttackKind::none) {
        throw rtsec::ValidationError("scenario selects no attack (set attack = scheduleak or scheduleak+cache)");
      }
      rtsec::RunOptions opts;
      opts.attacks = with_attacks;
      const auto r = rtsec::run(s, s.out, opts);
      print_summary(r, s.out);
    } else if (*sweep) {
      const auto s = load(sweep_opts);
      const auto rows = rtsec::sweep(s, axis, values, s.out);
      std::cout << "sweep: " << rows.size() << " runs, curve " << (std::filesystem::path(s.out) / "sweep.csv").string()
                << '\n';
    } else if (*report) {
      const auto check = rtsec::check_report(report_dir);
      for (const auto& line : check.lines) std::cout << line << '\n';
      if (!check.consistent) {
        std::cerr << "report does not match its traces\n";
        return 1;
      }
    }
  } catch (const rtsec::ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
