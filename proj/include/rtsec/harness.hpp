#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rtsec/scenario.hpp"

namespace rtsec {

// Member i of an ensemble runs with seed master + i * kEnsembleStride.
inline constexpr std::uint64_t kEnsembleStride = 0x9E3779B97F4A7C15ULL;

std::vector<std::uint64_t> ensemble_seeds(std::uint64_t master, std::size_t count);

struct RunOptions {
  bool simulate = true;
  bool attacks = true;
  // Write per-member slot/event CSVs next to the report.
  bool write_traces = true;
};

// Schedulability analysis for the scenario's policy.
nlohmann::json analyze(const Scenario& s);

// Runs analysis, the ensemble, attacks and defense metrics. When `out` is
// non-empty, report.json and every CSV are written there. The report is a
// pure function of the scenario.
nlohmann::json run(const Scenario& s, const std::filesystem::path& out, const RunOptions& options = {});

struct SweepRow {
  std::string value;
  nlohmann::json report;
};

// One run per value of `axis` (a set_field name), each under
// out/<axis>=<value>/, plus out/sweep.csv. Throws Error for an empty value
// list and ValidationError for an unknown axis.
std::vector<SweepRow> sweep(const Scenario& base, const std::string& axis, const std::vector<std::string>& values,
                            const std::filesystem::path& out);

struct ReportCheck {
  bool consistent = true;
  std::vector<std::string> lines;
};

// Re-derives deadline-miss counts and entropy from the CSVs in `dir` and
// compares them with dir/report.json.
ReportCheck check_report(const std::filesystem::path& dir);

}  // namespace rtsec
