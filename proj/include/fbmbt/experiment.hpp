#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace fbmbt {

enum class ExperimentKind {
  RhoTable,
  Constants,
  TaylorTable,
  IdentitySuite,
  ConvergeHGt,
  LawHEq,
  DivergeHLt,
  SkeletonSuite,
};

std::string to_string(ExperimentKind kind);

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::Constants;
  double H = 1.0 / 6.0;
  std::vector<int> levels;
  double t = 1.0;
  std::string function = "x3";
  std::string ito_function = "sin_cos";  // law-h-eq: function for the O~ check
  std::int64_t replications = 1000;
  std::uint64_t master_seed = 20240601;
  double mesh = 0x1.0p-10;
  std::int64_t instances = 1000;
  std::vector<std::int64_t> truncations{10, 1000, 1000000};
  int max_order = 13;
  bool brownian_time = true;
  std::map<std::string, double> thresholds;  // overrides of the default verdict thresholds
  std::string csv_name = "replications.csv";
  std::string json_name = "summary.json";
  nlohmann::json raw;  // the document as given

  double threshold(const std::string& name, double fallback) const;
};

/// Parses and validates a config document; throws ConfigError naming the key.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

struct CsvRow {
  std::int64_t replication;
  std::uint64_t seed;
  std::string statistic;
  double value;
};

struct ExperimentReport {
  nlohmann::json summary;
  std::vector<CsvRow> rows;
  bool all_pass = true;
};

/// Runs the experiment. `workers` sets replication parallelism only; `log`
/// receives progress lines when non-null.
ExperimentReport run_experiment(const ExperimentConfig& config, unsigned workers = 1, std::ostream* log = nullptr);

void write_csv(const ExperimentReport& report, std::ostream& out);
/// Writes the CSV and JSON files named in the config into `dir`.
void write_report(const ExperimentReport& report, const ExperimentConfig& config, const std::filesystem::path& dir);

}  // namespace fbmbt
