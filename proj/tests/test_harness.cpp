#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "dunkl/harness.hpp"
#include "json.hpp"

using namespace dunkl;
namespace fs = std::filesystem;

namespace {

RunConfig small_config() {
  RunConfig c;
  c.resolution = 64;
  c.trials = 2;
  c.ball_samples = 15;
  c.p_list = {2.0};
  return c;
}

std::string strip_wall(const std::string& text) {
  std::istringstream in(text);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line))
    if (line.find("wall_seconds") == std::string::npos) out << line << '\n';
  return out.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const char* tag) {
    path = fs::temp_directory_path() / (std::string("dunkl_") + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("harness: config round-trips through json") {
  RunConfig c;
  CHECK(config_from_json(config_to_json(c)) == c);
  CHECK(config_from_json("{}") == c);

  c.root_system = "b2:1.0,0.5";
  c.box_lo = {-1.0, -1.0};
  c.box_hi = {1.0, 1.0};
  c.resolution = 32;
  c.kmin = 2;
  c.kmax = 5;
  c.experiments = {"dyadic_build", "sparse_dominate"};
  c.lower_center = {0.2, 0.1};
  c.lower_radius = 0.03;
  c.p_list = {2.0};
  c.seed = 9;
  CHECK(config_from_json(config_to_json(c)) == c);

  CHECK_THROWS_AS(config_from_json("not json"), Error);
  CHECK_THROWS_AS(config_from_json("[1,2]"), Error);
  CHECK_THROWS_AS(config_from_json("{\"resolution\": \"big\"}"), Error);
}

TEST_CASE("harness: empty experiment list echoes the config") {
  RunConfig c = small_config();
  RunReport rep = run(c);
  CHECK(rep.blocks.empty());
  CHECK(rep.all_pass());
  CHECK(rep.format == "dunkl-report/1");
  CHECK(rep.config == c);

  const std::string text = report_to_json(rep);
  CHECK(report_from_json(text) == rep);
  CHECK(report_to_csv(rep) == "experiment,trial,label,value\n");
}

TEST_CASE("harness: dyadic blocks run in dependency order") {
  RunConfig c = small_config();
  c.experiments = {"dyadic_verify", "dyadic_build"};  // deliberately reversed
  RunReport rep = run(c);
  REQUIRE(rep.blocks.size() == 2);
  CHECK(rep.blocks[0].name == "dyadic_build");
  CHECK(rep.blocks[1].name == "dyadic_verify");
  CHECK(rep.all_pass());

  auto build = nlohmann::json::parse(rep.blocks[0].payload);
  CHECK(build["cube_count"].get<int>() > 0);
  auto verify = nlohmann::json::parse(rep.blocks[1].payload);
  CHECK(verify["ok"].get<bool>());
  CHECK(verify["c_in"].get<double>() >= 1.0 / 24.0);

  c.experiments = {"nonsense"};
  CHECK_THROWS_AS(run(c), Error);
}

TEST_CASE("harness: a failing block is recorded and the run continues") {
  RunConfig c = small_config();
  c.kernel = "riesz:5";  // out of range for a 1-D grid
  c.experiments = {"kernel_check", "dyadic_verify"};
  RunReport rep = run(c);
  REQUIRE(rep.blocks.size() == 2);
  CHECK(rep.blocks[0].name == "dyadic_verify");
  CHECK(rep.blocks[0].pass);
  CHECK(rep.blocks[1].name == "kernel_check");
  CHECK_FALSE(rep.blocks[1].pass);
  CHECK_FALSE(rep.blocks[1].error.empty());
  CHECK_FALSE(rep.all_pass());
}

TEST_CASE("harness: full run passes every block and emits both formats") {
  RunConfig c = small_config();
  c.trials = 8;  // enough draws for the max ratio to concentrate per batch
  c.experiments = experiment_names();
  RunReport rep = run(c);
  REQUIRE(rep.blocks.size() == experiment_names().size());
  for (const ExperimentBlock& b : rep.blocks) {
    MESSAGE("block ", b.name, " pass ", b.pass, " error ", b.error);
    CHECK(b.pass);
    CHECK(b.error.empty());
    CHECK(b.wall_seconds >= 0);
    CHECK_NOTHROW((void)nlohmann::json::parse(b.payload));
  }
  CHECK(rep.all_pass());

  // round trip and row accounting
  CHECK(report_from_json(report_to_json(rep)) == rep);
  std::size_t rows = 0;
  for (const ExperimentBlock& b : rep.blocks) rows += b.trial_rows.size();
  std::istringstream csv(report_to_csv(rep));
  std::string line;
  std::size_t lines = 0;
  while (std::getline(csv, line)) ++lines;
  CHECK(lines == rows + 1);

  // determinism modulo wall-clock
  RunReport again = run(c);
  CHECK(strip_wall(report_to_json(again)) == strip_wall(report_to_json(rep)));

  TempDir dir("emit");
  std::vector<std::string> files = emit(rep, dir.path.string(), "both");
  REQUIRE(files.size() == 2);
  for (const std::string& f : files) CHECK(fs::exists(f));
  std::ifstream in(files[0], std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str() == report_to_json(rep));

  CHECK_THROWS_AS(emit(rep, dir.path.string(), "yaml"), Error);
}

TEST_CASE("harness: cached grids and systems reproduce the fresh run") {
  TempDir dir("cache");
  RunConfig c = small_config();
  c.experiments = {"dyadic_build", "dyadic_verify"};

  RunReport fresh = run(c);  // no cache
  c.cache_dir = dir.path.string();
  RunReport cold = run(c);   // populates the cache
  RunReport warm = run(c);   // reuses it

  bool has_system_file = false, has_grid_file = false;
  for (const auto& entry : fs::directory_iterator(dir.path)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("dunkl_sys_", 0) == 0) has_system_file = true;
    else has_grid_file = true;
  }
  CHECK(has_system_file);
  CHECK(has_grid_file);

  for (std::size_t i = 0; i < fresh.blocks.size(); ++i) {
    CHECK(cold.blocks[i].payload == fresh.blocks[i].payload);
    CHECK(warm.blocks[i].payload == fresh.blocks[i].payload);
    CHECK(warm.blocks[i].pass);
  }

  // the env var wins over the config field
  TempDir env_dir("cache_env");
  setenv("DUNKL_SPARSE_CACHE", env_dir.path.string().c_str(), 1);
  RunConfig c2 = small_config();
  c2.experiments = {"dyadic_build"};
  RunReport via_env = run(c2);
  unsetenv("DUNKL_SPARSE_CACHE");
  CHECK(via_env.all_pass());
  CHECK(!fs::is_empty(env_dir.path));
}
