#pragma once

#include <climits>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dunkl/bounds.hpp"

namespace dunkl {

// One structured config drives every experiment; CLI flags override fields.
struct RunConfig {
  std::string root_system = "trivial:1";
  std::vector<double> box_lo = {0.0};
  std::vector<double> box_hi = {1.0};
  int resolution = 64;
  double delta = 0.5;
  int kmin = INT_MIN, kmax = INT_MAX;  // sentinel = scale chosen automatically
  int bundle = 3;  // adjacent systems backing the containing-cube search
  std::uint64_t dyadic_seed = 1;
  std::string kernel = "riesz:0";
  std::string weight_u = "dunkl_power:1";
  std::string weight_v = "dunkl_power:-1";
  std::string symbol = "coord:0";
  std::vector<double> p_list = {1.5, 2.0, 3.0};
  std::uint64_t seed = 1;
  int trials = 8;
  int ball_samples = 25;
  std::vector<double> lower_center;  // empty = quarter-box default
  double lower_radius = 0;           // 0 = 5% of the shortest box edge
  std::string cache_dir;             // DUNKL_SPARSE_CACHE overrides when set
  std::string out_dir;
  std::vector<std::string> experiments;  // empty = config echo only

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// All known experiments, in dependency order (grid/dyadic first, weighted
// bounds last).
const std::vector<std::string>& experiment_names();

RunConfig config_from_json(const std::string& text);
std::string config_to_json(const RunConfig& c);

struct ExperimentBlock {
  std::string name;
  bool pass = false;
  std::string error;        // non-empty when the block aborted
  double wall_seconds = 0;  // the only field allowed to differ across reruns
  std::string payload;      // JSON object with the experiment report
  std::vector<std::pair<std::string, double>> trial_rows;  // CSV rows

  friend bool operator==(const ExperimentBlock&, const ExperimentBlock&) = default;
};

struct RunReport {
  std::string format = "dunkl-report/1";
  RunConfig config;
  std::vector<ExperimentBlock> blocks;

  bool all_pass() const {
    for (const ExperimentBlock& b : blocks)
      if (!b.pass) return false;
    return true;
  }
  friend bool operator==(const RunReport&, const RunReport&) = default;
};

// Executes the requested experiments in dependency order. An error inside a
// block is recorded on that block and the run continues; unknown experiment
// names throw before anything executes.
RunReport run(const RunConfig& config);

std::string report_to_json(const RunReport& r);
RunReport report_from_json(const std::string& text);
std::string report_to_csv(const RunReport& r);

// Writes report.json / report.csv under dir; format is "json", "csv" or
// "both". Returns the paths written.
std::vector<std::string> emit(const RunReport& r, const std::string& dir,
                              const std::string& format);

}  // namespace dunkl
