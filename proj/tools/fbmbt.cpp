#include <exception>
#include <filesystem>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "fbmbt/errors.hpp"
#include "fbmbt/experiment.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and verification runner for fBm in Brownian time"};
  std::string config_path;
  std::string out_dir = "out";
  unsigned workers = 1;
  bool verbose = false;
  app.add_option("--config", config_path, "JSON experiment config")->required();
  app.add_option("--out", out_dir, "directory for the CSV and JSON outputs");
  app.add_option("--workers", workers, "replication threads (0 = all cores); does not change results");
  app.add_flag("--verbose", verbose, "progress on stderr");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitConfig;
  }

  try {
    const auto config = fbmbt::load_config(config_path);
    const auto report = fbmbt::run_experiment(config, workers, verbose ? &std::cerr : nullptr);
    fbmbt::write_report(report, config, out_dir);
    for (const auto& t : report.summary["tests"]) {
      std::cout << t["verdict"].get<std::string>() << "  " << t["name"].get<std::string>() << "  "
                << t["statistic"] << '\n';
    }
    std::cout << "verdict: " << (report.all_pass ? "pass" : "fail") << '\n';
    return report.all_pass ? kExitPass : kExitFail;
  } catch (const fbmbt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}
