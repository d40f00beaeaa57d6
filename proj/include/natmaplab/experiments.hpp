#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "natmaplab/backend.hpp"
#include "natmaplab/grid.hpp"

namespace natmaplab {

using Json = nlohmann::ordered_json;

/* One verdict row. Rows are per checked unit (a point, a level, a c value,
   or an aggregate over a scan whose per-sample data goes to CSV). */
struct CheckRow {
  std::string check;
  std::string anchor; /* the claim the row tests, as a bare formula */
  std::vector<std::pair<std::string, double>> values;
  bool pass = true;
  std::string error; /* populated when the row aborted with an exception */
};

/* Per-sample data behind an aggregate row, one CSV file per table */
struct CheckTable {
  std::string check;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> data;
};

struct ExperimentResult {
  std::string experiment;
  Json config; /* fully resolved, defaults included */
  std::string config_hash;
  std::vector<CheckRow> rows;
  std::vector<CheckTable> tables;

  bool all_pass() const;
  Json to_json() const; /* wall time deliberately excluded: reruns of one
                           config must serialize bit-identically */
};

std::vector<std::string> experiment_names();
std::string experiment_summary(const std::string& name);

/* validate against the experiment's schema (unknown keys rejected) and
   materialize every default */
Json resolve_config(const Json& config);

ExperimentResult run_experiment(const Json& config);

/* shared constructors for config sub-objects */
BackendPtr make_backend(int n, const Json& backend_cfg);
GridPtr make_grid(int n, const Json& grid_cfg);

/* ---- filesystem layer ---- */

struct RunOutput {
  std::filesystem::path dir;
  std::filesystem::path result_file;
};

/* writes result.json plus one <check>.csv per table/check under the run
   directory; takes the directory lock while writing; wall time goes to a
   side file so result.json stays reproducible */
RunOutput write_result(const ExperimentResult& res, const std::string& output_dir,
                       double wall_seconds);

std::vector<std::filesystem::path> find_results(const std::string& dir);

/* consolidated table across runs; also fills csv_out when non-null */
std::string render_report(const std::vector<std::filesystem::path>& result_files,
                          std::string* csv_out);

uint64_t fnv1a(const std::string& s);

}  // namespace natmaplab
