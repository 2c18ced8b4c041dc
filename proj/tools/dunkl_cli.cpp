#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dunkl/harness.hpp"

namespace {

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw dunkl::Error("cannot read config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse domination experiments for Dunkl-type singular integrals"};
  app.require_subcommand(1);

  std::string config_path, exp_csv, out_dir;
  std::uint64_t seed = 0;
  int resolution = 0;
  auto* opt_config = app.add_option("--config", config_path, "JSON config file");
  auto* opt_exp = app.add_option("--exp", exp_csv, "comma-separated experiments (run only)");
  auto* opt_seed = app.add_option("--seed", seed, "override the trial seed");
  auto* opt_res = app.add_option("--resolution", resolution, "override the grid resolution");
  auto* opt_out = app.add_option("--out", out_dir, "write report.json/report.csv here");

  const auto sub = [&](CLI::App* parent, const char* name, const char* desc) {
    CLI::App* s = parent->add_subcommand(name, desc);
    s->fallthrough();
    return s;
  };

  CLI::App* c_run = sub(&app, "run", "run the configured experiment list");
  CLI::App* c_dyadic = sub(&app, "dyadic", "dyadic system construction and checks");
  c_dyadic->require_subcommand(1);
  CLI::App* c_dy_build = sub(c_dyadic, "build", "build the system and report its shape");
  CLI::App* c_dy_verify = sub(c_dyadic, "verify", "check the cube-system properties");
  CLI::App* c_weights = sub(&app, "weights", "weight characteristic experiments");
  c_weights->require_subcommand(1);
  CLI::App* c_w_ap = sub(c_weights, "ap", "Muckenhoupt characteristics and substitution");
  CLI::App* c_w_rh = sub(c_weights, "rh", "reverse Hoelder exponents");
  CLI::App* c_w_bmo = sub(c_weights, "bmo", "oscillation norms of the symbol");
  CLI::App* c_w_rdf = sub(c_weights, "rdf", "iterated-maximal majorant properties");
  CLI::App* c_sparse = sub(&app, "sparse", "stopping-time domination experiments");
  c_sparse->require_subcommand(1);
  CLI::App* c_s_dom = sub(c_sparse, "dominate", "dominate the operator by sparse averages");
  CLI::App* c_s_com = sub(c_sparse, "commutator", "dominate the commutator");
  CLI::App* c_bounds = sub(&app, "bounds", "weighted norm experiments");
  c_bounds->require_subcommand(1);
  CLI::App* c_b_w = sub(c_bounds, "weighted", "weighted operator bounds");
  CLI::App* c_b_tw = sub(c_bounds, "two-weight", "two-weight commutator bounds");
  CLI::App* c_b_low = sub(c_bounds, "lower", "median-value lower-bound chain");
  CLI::App* c_b_rdf = sub(c_bounds, "rdf-transfer", "duality transfer inequality");
  CLI::App* c_kernel = sub(&app, "kernel", "kernel certification");
  c_kernel->require_subcommand(1);
  CLI::App* c_k_check = sub(c_kernel, "check", "empirical size and smoothness constants");

  CLI11_PARSE(app, argc, argv);

  try {
    dunkl::RunConfig cfg;
    if (opt_config->count()) cfg = dunkl::config_from_json(slurp(config_path));
    if (opt_seed->count()) cfg.seed = seed;
    if (opt_res->count()) cfg.resolution = resolution;
    if (opt_out->count()) cfg.out_dir = out_dir;

    std::vector<std::string> exps;
    if (c_run->parsed()) {
      if (opt_exp->count())
        exps = split_csv(exp_csv);
      else if (!cfg.experiments.empty())
        exps = cfg.experiments;
      else
        exps = dunkl::experiment_names();
    } else if (c_dy_build->parsed()) {
      exps = {"dyadic_build"};
    } else if (c_dy_verify->parsed()) {
      exps = {"dyadic_verify"};
    } else if (c_w_ap->parsed()) {
      exps = {"weights_ap"};
    } else if (c_w_rh->parsed()) {
      exps = {"weights_rh"};
    } else if (c_w_bmo->parsed()) {
      exps = {"weights_bmo"};
    } else if (c_w_rdf->parsed()) {
      exps = {"weights_rdf"};
    } else if (c_s_dom->parsed()) {
      exps = {"sparse_dominate"};
    } else if (c_s_com->parsed()) {
      exps = {"sparse_commutator"};
    } else if (c_b_w->parsed()) {
      exps = {"bounds_weighted"};
    } else if (c_b_tw->parsed()) {
      exps = {"bounds_two_weight"};
    } else if (c_b_low->parsed()) {
      exps = {"bounds_lower"};
    } else if (c_b_rdf->parsed()) {
      exps = {"bounds_rdf_transfer"};
    } else if (c_k_check->parsed()) {
      exps = {"kernel_check"};
    }
    cfg.experiments = exps;

    const dunkl::RunReport report = dunkl::run(cfg);
    if (!cfg.out_dir.empty()) {
      for (const std::string& f : dunkl::emit(report, cfg.out_dir, "both"))
        std::cout << f << "\n";
    } else {
      std::cout << dunkl::report_to_json(report);
    }
    for (const dunkl::ExperimentBlock& b : report.blocks)
      std::cerr << (b.pass ? "[PASS] " : "[FAIL] ") << b.name
                << (b.error.empty() ? "" : ": " + b.error) << "\n";
    return report.all_pass() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
