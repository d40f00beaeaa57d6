#include <chrono>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "natmaplab/experiments.hpp"

namespace {

/* exit codes: 0 all checks pass, 2 checks failed, 3 bad input */
constexpr int kExitChecksFailed = 2;
constexpr int kExitBadInput = 3;

int cmd_run(const std::string& config_path) {
  natmaplab::Json user;
  {
    std::ifstream is(config_path);
    if (!is) {
      std::cerr << "cannot open config " << config_path << "\n";
      return kExitBadInput;
    }
    try {
      user = natmaplab::Json::parse(is);
    } catch (const std::exception& e) {
      std::cerr << "config is not valid JSON: " << e.what() << "\n";
      return kExitBadInput;
    }
  }

  auto t0 = std::chrono::steady_clock::now();
  natmaplab::ExperimentResult res = natmaplab::run_experiment(user);
  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                    .count();

  std::string outdir = res.config.at("output_dir").get<std::string>();
  natmaplab::RunOutput files = natmaplab::write_result(res, outdir, wall);

  int failed = 0;
  for (const auto& r : res.rows) {
    std::cout << (r.pass ? "  ok   " : "  FAIL ") << res.experiment << "/"
              << r.check;
    for (const auto& v : r.values)
      if (v.first == "measured" || v.first == "bound")
        std::cout << "  " << v.first << "=" << v.second;
    if (!r.error.empty()) std::cout << "  [" << r.error << "]";
    std::cout << "\n";
    if (!r.pass) ++failed;
  }
  std::cout << res.rows.size() << " checks, " << failed << " failed; wrote "
            << files.result_file.string() << "\n";
  return failed == 0 ? 0 : kExitChecksFailed;
}

int cmd_report(const std::string& dir) {
  auto files = natmaplab::find_results(dir);
  std::string csv;
  std::string table = natmaplab::render_report(files, &csv);
  std::cout << table;
  std::ofstream os(std::filesystem::path(dir) / "report.csv");
  os << csv;
  bool failed = table.find(" FAIL") != std::string::npos;
  return failed ? kExitChecksFailed : 0;
}

int cmd_list() {
  for (const auto& name : natmaplab::experiment_names())
    std::cout << name << "\n    " << natmaplab::experiment_summary(name) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for boundary maps of the hyperbolic ball"};
  app.require_subcommand(1);

  std::string config_path, report_dir;
  CLI::App* run = app.add_subcommand("run", "run one experiment from a JSON config");
  run->add_option("config", config_path, "path to the config file")->required();
  CLI::App* report =
      app.add_subcommand("report", "consolidate result files under a directory");
  report->add_option("dir", report_dir, "directory holding run outputs")->required();
  app.add_subcommand("list-experiments", "list experiment names");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path);
    if (report->parsed()) return cmd_report(report_dir);
    return cmd_list();
  } catch (const natmaplab::ConfigInvalid& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const natmaplab::NoResults& e) {
    std::cerr << e.what() << "\n";
    return kExitBadInput;
  } catch (const natmaplab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
