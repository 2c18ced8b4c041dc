#include "dunkl/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "dunkl/operators.hpp"
#include "dunkl/rng.hpp"
#include "json.hpp"

namespace dunkl {

namespace {

using nlohmann::json;

const std::vector<std::string> kExperiments = {
    "dyadic_build",   "dyadic_verify",    "kernel_check",   "weights_ap",
    "weights_rh",     "weights_bmo",      "weights_rdf",    "sparse_dominate",
    "sparse_commutator", "bounds_weighted", "bounds_two_weight", "bounds_lower",
    "bounds_rdf_transfer"};

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

Pt to_pt(const std::vector<double>& v, const char* what) {
  if (v.empty() || v.size() > static_cast<std::size_t>(kMaxDim))
    throw Error(std::string("harness: ") + what + " must have 1..3 coordinates");
  Pt p{};
  for (std::size_t d = 0; d < v.size(); ++d) p[d] = v[d];
  return p;
}

std::string cache_root(const RunConfig& c) {
  if (const char* env = std::getenv("DUNKL_SPARSE_CACHE"))
    if (*env) return env;
  return c.cache_dir;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// max/min with the convention that equal values (including 0/0) give 1.
double symmetric_ratio(double a, double b) {
  if (a == b) return 1.0;
  const double lo = std::min(a, b), hi = std::max(a, b);
  return lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
}

// Lazily built shared artifacts; construction errors surface in whichever
// block asked first. Objects stay put once built (the dyadic system and the
// operator hold pointers into the grid).
struct Workspace {
  RunConfig cfg;
  explicit Workspace(RunConfig c) : cfg(std::move(c)) {}

  const WeightedGrid& grid() {
    if (!grid_)
      grid_ = grid_cached(catalog(cfg.root_system), to_pt(cfg.box_lo, "box_lo"),
                          to_pt(cfg.box_hi, "box_hi"), cfg.resolution, cache_root(cfg));
    return *grid_;
  }

  // Independent systems seeded dyadic_seed, dyadic_seed + 1, ... back the
  // containing-cube search; the first one carries every single-system step.
  const DyadicBundle& bundle() {
    if (!bundle_) {
      const WeightedGrid& g = grid();
      DyadicBundle b;
      const int count = std::max(1, cfg.bundle);
      for (int i = 0; i < count; ++i)
        b.systems.push_back(load_system(g, cfg.dyadic_seed + static_cast<std::uint64_t>(i)));
      bundle_ = std::move(b);
    }
    return *bundle_;
  }

  const DyadicSystem& system() { return bundle().systems.front(); }

  const DiscreteOperator& op() {
    if (!op_) op_.emplace(grid(), kernel_catalog(grid().rs, cfg.kernel));
    return *op_;
  }

  const SetFamily& sets() {
    if (!sets_) sets_ = test_sets(grid(), &system(), cfg.ball_samples, cfg.seed);
    return *sets_;
  }

  const std::vector<double>& wu() {
    if (u_.empty()) u_ = weight_catalog(grid(), cfg.weight_u);
    return u_;
  }
  const std::vector<double>& wv() {
    if (v_.empty()) v_ = weight_catalog(grid(), cfg.weight_v);
    return v_;
  }
  const std::vector<double>& sym() {
    if (b_.empty()) b_ = symbol_catalog(grid(), &system(), cfg.symbol);
    return b_;
  }

  // One seeded stopping-time family shared by the sparse-bound block.
  const std::vector<SparseEntry>& family() {
    if (!fam_) {
      const Trial t = trial_function(grid(), &system(), cfg.seed);
      fam_ = dominate_T(op(), bundle(), t.f, t.support).build.recubed;
    }
    return *fam_;
  }

  // Resolution-doubled twin used by the stability columns.
  Workspace& doubled() {
    if (!dbl_) {
      RunConfig c2 = cfg;
      c2.resolution *= 2;
      dbl_ = std::make_unique<Workspace>(std::move(c2));
    }
    return *dbl_;
  }

 private:
  DyadicSystem load_system(const WeightedGrid& g, std::uint64_t seed) {
    DyadicOptions opt;
    opt.delta = cfg.delta;
    opt.seed = seed;
    opt.kmin = cfg.kmin;
    opt.kmax = cfg.kmax;
    const std::string cache = cache_root(cfg);
    if (cache.empty()) return build_dyadic_system(g, opt);
    std::ostringstream key;
    key << cfg.root_system;
    for (double x : cfg.box_lo) key << '|' << x;
    for (double x : cfg.box_hi) key << '|' << x;
    key << '|' << cfg.resolution << '|' << cfg.delta << '|' << seed << '|' << cfg.kmin << '|'
        << cfg.kmax;
    std::ostringstream name;
    name << "dunkl_sys_" << std::hex << fnv1a(key.str()) << ".txt";
    const std::filesystem::path path = std::filesystem::path(cache) / name.str();
    if (std::filesystem::exists(path)) return deserialize_dyadic(g, slurp(path.string()));
    DyadicSystem sys = build_dyadic_system(g, opt);
    std::filesystem::create_directories(cache);
    std::ofstream out(path, std::ios::binary);
    out << serialize_dyadic(sys);
    return sys;
  }

  std::optional<WeightedGrid> grid_;
  std::optional<DyadicBundle> bundle_;
  std::optional<DiscreteOperator> op_;
  std::optional<SetFamily> sets_;
  std::vector<double> u_, v_, b_;
  std::optional<std::vector<SparseEntry>> fam_;
  std::unique_ptr<Workspace> dbl_;
};

struct BlockResult {
  json payload = json::object();
  std::vector<std::pair<std::string, double>> rows;
  bool pass = false;
};

BlockResult run_dyadic_build(Workspace& w) {
  BlockResult r;
  const DyadicSystem& sys = w.system();
  int cubes = 0;
  for (int t = 0; t < sys.row_count(); ++t) {
    const int n = static_cast<int>(sys.rows[t].size());
    cubes += n;
    r.rows.push_back({"cubes_row_" + std::to_string(t), static_cast<double>(n)});
  }
  r.payload["experiment"] = "dyadic_build";
  r.payload["points"] = w.grid().size();
  r.payload["rows"] = sys.row_count();
  r.payload["cube_count"] = cubes;
  r.payload["delta"] = sys.delta;
  r.payload["kmin"] = sys.kmin;
  r.payload["kmax"] = sys.kmax;
  r.payload["doubling_all"] = sys.doubling_all;
  r.payload["doubling_largest"] = sys.doubling_largest;
  if (w.cfg.bundle > 1) {
    json counts = json::array();
    for (const DyadicSystem& s : w.bundle().systems) {
      int c = 0;
      for (const auto& row : s.rows) c += static_cast<int>(row.size());
      counts.push_back(c);
    }
    r.payload["bundle_cubes"] = counts;
  }
  r.pass = cubes > 0;
  return r;
}

BlockResult run_dyadic_verify(Workspace& w) {
  BlockResult r;
  const DyadicReport rep = verify_dyadic_properties(w.system());
  r.payload["experiment"] = "dyadic_verify";
  r.payload["separation_ok"] = rep.separation_ok;
  r.payload["covering_ok"] = rep.covering_ok;
  r.payload["partition_ok"] = rep.partition_ok;
  r.payload["nesting_ok"] = rep.nesting_ok;
  r.payload["outer_ok"] = rep.outer_ok;
  r.payload["c_in"] = rep.c_in;
  r.payload["outer_max"] = rep.outer_max;
  r.payload["doubling_all"] = rep.doubling_all;
  r.payload["doubling_largest"] = rep.doubling_largest;
  r.payload["cube_count"] = rep.cube_count;
  r.payload["ok"] = rep.ok;
  r.rows.push_back({"c_in", rep.c_in});
  r.rows.push_back({"doubling_all", rep.doubling_all});
  r.pass = rep.ok;
  return r;
}

BlockResult run_kernel_check(Workspace& w) {
  BlockResult r;
  const int samples = std::max(200, 40 * w.cfg.trials);
  const CzReport rep = cz_check(w.grid(), kernel_catalog(w.grid().rs, w.cfg.kernel),
                                samples, w.cfg.seed);
  r.payload["experiment"] = "kernel_check";
  r.payload["kernel"] = w.cfg.kernel;
  r.payload["samples"] = rep.samples;
  r.payload["size_max"] = rep.size_max;
  r.payload["holder_max"] = rep.holder_max;
  r.rows.push_back({"size_max", rep.size_max});
  r.rows.push_back({"holder_max", rep.holder_max});
  r.pass = rep.samples > 0 && std::isfinite(rep.size_max) && std::isfinite(rep.holder_max);
  return r;
}

BlockResult run_weights_ap(Workspace& w) {
  BlockResult r;
  const WeightedGrid& g = w.grid();
  json reports = json::array();
  bool ok = true;
  for (double p : w.cfg.p_list) {
    const double cu = ap_constant(g, w.sets(), w.wu(), p).constant;
    const double cv = ap_constant(g, w.sets(), w.wv(), p).constant;
    reports.push_back({{"p", p}, {"u_constant", cu}, {"v_constant", cv}});
    r.rows.push_back({"ap_u_p" + std::to_string(p), cu});
    ok = ok && std::isfinite(cu) && std::isfinite(cv);
  }
  const WpReport wp = verify_wp(g, w.system(), w.wu(), w.cfg.p_list.front(),
                                std::max(100, 20 * w.cfg.trials), w.cfg.seed);
  r.payload["experiment"] = "weights_ap";
  r.payload["u"] = w.cfg.weight_u;
  r.payload["v"] = w.cfg.weight_v;
  r.payload["reports"] = reports;
  r.payload["substitute_ok"] = wp.ok;
  r.payload["substitute_worst"] = wp.worst_ratio;
  ok = ok && wp.ok;
  if (w.cfg.p_list.size() >= 2) {
    const InclusionReport inc = verify_inclusion(g, w.sets(), w.wu(), w.cfg.p_list[0],
                                                 w.cfg.p_list[1]);
    r.payload["inclusion_ok"] = inc.monotone_ok;
    ok = ok && inc.monotone_ok;
  }
  r.pass = ok;
  return r;
}

BlockResult run_weights_rh(Workspace& w) {
  BlockResult r;
  const RhReport ru = reverse_holder(w.grid(), w.sets(), w.wu());
  const RhReport rv = reverse_holder(w.grid(), w.sets(), w.wv());
  r.payload["experiment"] = "weights_rh";
  r.payload["u"] = json{{"gamma", ru.gamma}, {"constant", ru.constant}, {"ok", ru.ok}};
  r.payload["v"] = json{{"gamma", rv.gamma}, {"constant", rv.constant}, {"ok", rv.ok}};
  r.rows.push_back({"gamma_u", ru.gamma});
  r.rows.push_back({"constant_u", ru.constant});
  r.rows.push_back({"gamma_v", rv.gamma});
  r.rows.push_back({"constant_v", rv.constant});
  r.pass = ru.ok && rv.ok;
  return r;
}

BlockResult run_weights_bmo(Workspace& w) {
  BlockResult r;
  const WeightedGrid& g = w.grid();
  const double plain = bmo_norm(g, w.sets(), w.sym());
  std::vector<double> vartheta(static_cast<std::size_t>(g.size()));
  const double p0 = w.cfg.p_list.front();
  for (int i = 0; i < g.size(); ++i)
    vartheta[i] = std::pow(w.wu()[i] / w.wv()[i], 1.0 / p0);
  const double weighted = bmo_norm(g, w.sets(), w.sym(), &vartheta);
  const std::vector<int>& sample = w.sets().sets.front();
  r.payload["experiment"] = "weights_bmo";
  r.payload["b"] = w.cfg.symbol;
  r.payload["bmo"] = plain;
  r.payload["bmo_weighted"] = weighted;
  r.payload["median_sample"] = median_value(g, sample, w.sym());
  r.payload["oscillation_sample"] = oscillation(g, sample, w.sym());
  r.rows.push_back({"bmo", plain});
  r.rows.push_back({"bmo_weighted", weighted});
  r.pass = std::isfinite(plain) && std::isfinite(weighted) && plain >= 0 && weighted >= 0;
  return r;
}

BlockResult run_weights_rdf(Workspace& w) {
  BlockResult r;
  const WeightedGrid& g = w.grid();
  const double p0 = w.cfg.p_list.front();
  json ratios = json::array();
  double slack = 0;
  bool ok = true;
  for (int t = 0; t < w.cfg.trials; ++t) {
    std::vector<double> probe =
        trial_function(g, &w.system(), w.cfg.seed + 31 * static_cast<std::uint64_t>(t + 1)).f;
    double top = 0;
    for (double& x : probe) {
      x = std::abs(x);
      top = std::max(top, x);
    }
    for (double& x : probe) x /= top;
    const RdfResult res = rubio_de_francia(w.system(), probe, p0);
    ratios.push_back(res.norm_ratio);
    slack = std::max(slack, res.slack_max);
    ok = ok && res.ok;
    r.rows.push_back({"norm_ratio", res.norm_ratio});
  }
  r.payload["experiment"] = "weights_rdf";
  r.payload["p"] = p0;
  r.payload["trials"] = w.cfg.trials;
  r.payload["norm_ratios"] = ratios;
  r.payload["slack_max"] = slack;
  r.payload["ok"] = ok;
  r.pass = ok;
  return r;
}

json sparse_constants(const SparseBuild& b, const DyadicSystem& sys) {
  return json{{"C0", SparseConstants{}.C0},
              {"Ctilde0", b.ctilde0},
              {"C_E", b.ce_max},
              {"Ctilde_d", sys.doubling_all}};
}

BlockResult run_sparse_dominate(Workspace& w) {
  BlockResult r;
  const WeightedGrid& g = w.grid();
  std::vector<double> ratios;
  json sizes = json::array();
  double ce_max = 0;
  bool ok = true;
  json constants;
  for (int t = 0; t < w.cfg.trials; ++t) {
    const Trial tr = trial_function(g, &w.system(), w.cfg.seed + static_cast<std::uint64_t>(t));
    const DominationRun run = dominate_T(w.op(), w.bundle(), tr.f, tr.support);
    const SparseCheckReport sc = verify_sparse(g, run.build.generations, 0.5, 1);
    ok = ok && run.report.covered && sc.ok;
    ratios.push_back(run.report.ratio_max);
    sizes.push_back(static_cast<int>(run.build.recubed.size()));
    ce_max = std::max(ce_max, run.build.ce_max);
    constants = sparse_constants(run.build, w.system());
    r.rows.push_back({"ratio", run.report.ratio_max});
  }
  constants["C_E"] = ce_max;
  r.payload["experiment"] = "sparse_dominate";
  r.payload["trials"] = w.cfg.trials;
  r.payload["ratios"] = ratios;
  r.payload["max_ratio"] = *std::max_element(ratios.begin(), ratios.end());
  r.payload["median_ratio"] = median_of(ratios);
  r.payload["family_sizes"] = sizes;
  r.payload["constants"] = constants;
  r.payload["ok"] = ok;
  r.pass = ok && std::isfinite(r.payload["max_ratio"].get<double>());
  return r;
}

BlockResult run_sparse_commutator(Workspace& w) {
  BlockResult r;
  const WeightedGrid& g = w.grid();
  std::vector<double> ratios;
  double ce_max = 0, theta_min = 1.0;
  bool ok = true;
  json constants;
  for (int t = 0; t < w.cfg.trials; ++t) {
    const Trial tr = trial_function(g, &w.system(), w.cfg.seed + static_cast<std::uint64_t>(t));
    const DominationRun run = dominate_commutator(w.op(), w.bundle(), w.sym(), tr.f, tr.support);
    const SparseCheckReport sc = verify_sparse(g, run.build.generations, 0.5, 1);
    const AugmentReport aug = augment_family(w.bundle(), run.build.recubed, w.sym());
    ok = ok && run.report.covered && sc.ok && aug.theta_tilde >= 0.5 - 1e-9;
    ratios.push_back(run.report.ratio_max);
    ce_max = std::max(ce_max, run.build.ce_max);
    theta_min = std::min(theta_min, aug.theta_tilde);
    constants = sparse_constants(run.build, w.system());
    r.rows.push_back({"ratio", run.report.ratio_max});
  }
  constants["C_E"] = ce_max;
  r.payload["experiment"] = "sparse_commutator";
  r.payload["b"] = w.cfg.symbol;
  r.payload["trials"] = w.cfg.trials;
  r.payload["ratios"] = ratios;
  r.payload["max_ratio"] = *std::max_element(ratios.begin(), ratios.end());
  r.payload["median_ratio"] = median_of(ratios);
  r.payload["theta_tilde_min"] = theta_min;
  r.payload["constants"] = constants;
  r.payload["ok"] = ok;
  r.pass = ok && std::isfinite(r.payload["max_ratio"].get<double>());
  return r;
}

// Stability columns shared by the weighted blocks: one resolution doubling
// and five seed batches, each compared through the max ratio.
struct Stability {
  double resolution_factor = 1, seed_spread = 1;
};

template <typename F>
Stability stability_for(double base, double doubled, const F& rerun_max,
                        std::uint64_t seed) {
  Stability s;
  s.resolution_factor = symmetric_ratio(base, doubled);
  double lo = base, hi = base;
  for (int k = 1; k <= 4; ++k) {
    const double m = rerun_max(seed + 1000ull * static_cast<std::uint64_t>(k));
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  s.seed_spread = symmetric_ratio(lo, hi);
  return s;
}

BlockResult run_bounds_weighted(Workspace& w) {
  BlockResult r;
  json reports = json::array();
  bool ok = true;
  for (double p : w.cfg.p_list) {
    const NormReport base = verify_T_weighted(w.op(), w.bundle(), w.sets(), w.wu(), p,
                                              w.cfg.trials, w.cfg.seed);
    const NormReport sparse = verify_sparse_weighted_bound(
        w.grid(), w.family(), &w.system(), w.sets(), w.wu(), p, w.cfg.trials, w.cfg.seed);
    Workspace& d = w.doubled();
    const NormReport res2 = verify_T_weighted(d.op(), d.bundle(), d.sets(), d.wu(), p,
                                              w.cfg.trials, w.cfg.seed);
    const Stability st = stability_for(
        base.max_ratio, res2.max_ratio,
        [&](std::uint64_t s) {
          return verify_T_weighted(w.op(), w.bundle(), w.sets(), w.wu(), p, w.cfg.trials, s)
              .max_ratio;
        },
        w.cfg.seed);
    json obj = {{"experiment", "bounds_weighted"},
                {"p", p},
                {"u", w.cfg.weight_u},
                {"v", ""},
                {"b", ""},
                {"trials", w.cfg.trials},
                {"max_ratio", base.max_ratio},
                {"median_ratio", base.median_ratio},
                {"constants",
                 {{"u_constant", base.u_constant},
                  {"reference", base.reference},
                  {"sparse_max_ratio", sparse.max_ratio}}},
                {"stability",
                 {{"resolution_factor", st.resolution_factor},
                  {"seed_spread", st.seed_spread}}}};
    reports.push_back(obj);
    for (double x : base.ratios) r.rows.push_back({"p" + std::to_string(p), x});
    ok = ok && std::isfinite(base.max_ratio) && std::isfinite(sparse.max_ratio) &&
         st.resolution_factor <= 2.0 && st.seed_spread <= 2.0;
  }
  r.payload["experiment"] = "bounds_weighted";
  r.payload["reports"] = reports;
  r.payload["ok"] = ok;
  r.pass = ok;
  return r;
}

BlockResult run_bounds_two_weight(Workspace& w) {
  BlockResult r;
  json reports = json::array();
  bool ok = true;
  for (double p : w.cfg.p_list) {
    const NormReport base = verify_commutator_two_weight(
        w.op(), w.bundle(), w.sets(), w.sym(), w.wu(), w.wv(), p, w.cfg.trials, w.cfg.seed);
    Workspace& d = w.doubled();
    const NormReport res2 = verify_commutator_two_weight(
        d.op(), d.bundle(), d.sets(), d.sym(), d.wu(), d.wv(), p, w.cfg.trials, w.cfg.seed);
    const Stability st = stability_for(
        base.max_ratio, res2.max_ratio,
        [&](std::uint64_t s) {
          return verify_commutator_two_weight(w.op(), w.bundle(), w.sets(), w.sym(), w.wu(),
                                              w.wv(), p, w.cfg.trials, s)
              .max_ratio;
        },
        w.cfg.seed);
    json obj = {{"experiment", "bounds_two_weight"},
                {"p", p},
                {"u", w.cfg.weight_u},
                {"v", w.cfg.weight_v},
                {"b", w.cfg.symbol},
                {"trials", w.cfg.trials},
                {"max_ratio", base.max_ratio},
                {"median_ratio", base.median_ratio},
                {"constants",
                 {{"u_constant", base.u_constant},
                  {"v_constant", base.v_constant},
                  {"bmo_constant", base.bmo_constant},
                  {"reference", base.reference},
                  {"split_b1", base.split_b1},
                  {"split_b2", base.split_b2}}},
                {"stability",
                 {{"resolution_factor", st.resolution_factor},
                  {"seed_spread", st.seed_spread}}}};
    reports.push_back(obj);
    for (double x : base.ratios) r.rows.push_back({"p" + std::to_string(p), x});
    ok = ok && std::isfinite(base.max_ratio) && st.resolution_factor <= 2.0 &&
         st.seed_spread <= 2.0;
  }
  r.payload["experiment"] = "bounds_two_weight";
  r.payload["reports"] = reports;
  r.payload["ok"] = ok;
  r.pass = ok;
  return r;
}

BlockResult run_bounds_lower(Workspace& w) {
  BlockResult r;
  const WeightedGrid& g = w.grid();
  Pt center{};
  if (!w.cfg.lower_center.empty()) {
    center = to_pt(w.cfg.lower_center, "lower_center");
  } else {
    for (int d = 0; d < g.dim; ++d) center[d] = g.lo[d] + 0.25 * (g.hi[d] - g.lo[d]);
  }
  double radius = w.cfg.lower_radius;
  if (radius <= 0) {
    double span = std::numeric_limits<double>::infinity();
    for (int d = 0; d < g.dim; ++d) span = std::min(span, g.hi[d] - g.lo[d]);
    radius = 0.05 * span;
  }
  const LowerBoundReport rep = lower_bound_experiment(
      w.op(), 0, w.sym(), w.wv(), w.wu(), w.cfg.p_list.front(),
      BallSpec{center, radius, false}, w.sets());
  json links = json::array();
  for (const ChainLink& l : rep.links) {
    links.push_back({{"name", l.name}, {"lhs", l.lhs}, {"rhs", l.rhs}, {"ok", l.ok}});
    r.rows.push_back({l.name, l.lhs});
  }
  r.payload["experiment"] = "bounds_lower";
  r.payload["b"] = w.cfg.symbol;
  r.payload["p"] = w.cfg.p_list.front();
  r.payload["links"] = links;
  r.payload["oscillation"] = rep.oscillation;
  r.payload["median"] = rep.median;
  r.payload["kernel_min"] = rep.kernel_min;
  r.payload["mass_e1"] = rep.mass_e1;
  r.payload["mass_e2"] = rep.mass_e2;
  r.payload["chain_constant"] = rep.chain_constant;
  r.payload["rh_gamma"] = rep.rh_gamma;
  r.payload["rh_constant"] = rep.rh_constant;
  r.payload["ok"] = rep.ok;
  r.pass = rep.ok;
  return r;
}

BlockResult run_bounds_rdf_transfer(Workspace& w) {
  BlockResult r;
  const RdfTransferReport rep = rdf_transfer_check(w.op(), w.system(), w.cfg.p_list.front(),
                                                   w.cfg.trials, w.cfg.seed);
  r.payload["experiment"] = "bounds_rdf_transfer";
  r.payload["p"] = rep.p;
  r.payload["trials"] = rep.trials;
  r.payload["constants"] = rep.constants;
  r.payload["c_max"] = rep.c_max;
  r.payload["slack_max"] = rep.slack_max;
  r.payload["properties_ok"] = rep.properties_ok;
  r.payload["ok"] = rep.ok;
  for (double c : rep.constants) r.rows.push_back({"constant", c});
  r.pass = rep.ok;
  return r;
}

BlockResult dispatch(const std::string& name, Workspace& w) {
  if (name == "dyadic_build") return run_dyadic_build(w);
  if (name == "dyadic_verify") return run_dyadic_verify(w);
  if (name == "kernel_check") return run_kernel_check(w);
  if (name == "weights_ap") return run_weights_ap(w);
  if (name == "weights_rh") return run_weights_rh(w);
  if (name == "weights_bmo") return run_weights_bmo(w);
  if (name == "weights_rdf") return run_weights_rdf(w);
  if (name == "sparse_dominate") return run_sparse_dominate(w);
  if (name == "sparse_commutator") return run_sparse_commutator(w);
  if (name == "bounds_weighted") return run_bounds_weighted(w);
  if (name == "bounds_two_weight") return run_bounds_two_weight(w);
  if (name == "bounds_lower") return run_bounds_lower(w);
  if (name == "bounds_rdf_transfer") return run_bounds_rdf_transfer(w);
  throw Error("harness: unknown experiment " + name);
}

json config_json(const RunConfig& c) {
  json j;
  j["ball_samples"] = c.ball_samples;
  j["box_hi"] = c.box_hi;
  j["box_lo"] = c.box_lo;
  j["bundle"] = c.bundle;
  j["cache_dir"] = c.cache_dir;
  j["delta"] = c.delta;
  j["dyadic_seed"] = c.dyadic_seed;
  j["experiments"] = c.experiments;
  j["kernel"] = c.kernel;
  j["kmax"] = c.kmax == INT_MAX ? json() : json(c.kmax);
  j["kmin"] = c.kmin == INT_MIN ? json() : json(c.kmin);
  j["lower_center"] = c.lower_center;
  j["lower_radius"] = c.lower_radius;
  j["out_dir"] = c.out_dir;
  j["p_list"] = c.p_list;
  j["resolution"] = c.resolution;
  j["root_system"] = c.root_system;
  j["seed"] = c.seed;
  j["symbol"] = c.symbol;
  j["trials"] = c.trials;
  j["weight_u"] = c.weight_u;
  j["weight_v"] = c.weight_v;
  return j;
}

RunConfig config_parse(const json& j) {
  RunConfig c;
  c.ball_samples = j.value("ball_samples", c.ball_samples);
  c.box_hi = j.value("box_hi", c.box_hi);
  c.box_lo = j.value("box_lo", c.box_lo);
  c.bundle = j.value("bundle", c.bundle);
  c.cache_dir = j.value("cache_dir", c.cache_dir);
  c.delta = j.value("delta", c.delta);
  c.dyadic_seed = j.value("dyadic_seed", c.dyadic_seed);
  c.experiments = j.value("experiments", c.experiments);
  c.kernel = j.value("kernel", c.kernel);
  if (j.contains("kmax") && !j["kmax"].is_null()) c.kmax = j["kmax"].get<int>();
  if (j.contains("kmin") && !j["kmin"].is_null()) c.kmin = j["kmin"].get<int>();
  c.lower_center = j.value("lower_center", c.lower_center);
  c.lower_radius = j.value("lower_radius", c.lower_radius);
  c.out_dir = j.value("out_dir", c.out_dir);
  c.p_list = j.value("p_list", c.p_list);
  c.resolution = j.value("resolution", c.resolution);
  c.root_system = j.value("root_system", c.root_system);
  c.seed = j.value("seed", c.seed);
  c.symbol = j.value("symbol", c.symbol);
  c.trials = j.value("trials", c.trials);
  c.weight_u = j.value("weight_u", c.weight_u);
  c.weight_v = j.value("weight_v", c.weight_v);
  return c;
}

}  // namespace

const std::vector<std::string>& experiment_names() { return kExperiments; }

RunConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("harness: config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error("harness: config must be a JSON object");
  try {
    return config_parse(j);
  } catch (const json::exception& e) {
    throw Error(std::string("harness: config field has the wrong type: ") + e.what());
  }
}

std::string config_to_json(const RunConfig& c) { return config_json(c).dump(2) + "\n"; }

RunReport run(const RunConfig& config) {
  std::vector<std::string> requested;
  for (const std::string& name : config.experiments) {
    if (std::find(kExperiments.begin(), kExperiments.end(), name) == kExperiments.end())
      throw Error("harness: unknown experiment " + name);
    if (std::find(requested.begin(), requested.end(), name) == requested.end())
      requested.push_back(name);
  }
  std::stable_sort(requested.begin(), requested.end(),
                   [](const std::string& a, const std::string& b) {
                     return std::find(kExperiments.begin(), kExperiments.end(), a) <
                            std::find(kExperiments.begin(), kExperiments.end(), b);
                   });

  RunReport rep;
  rep.config = config;
  Workspace w(config);
  for (const std::string& name : requested) {
    ExperimentBlock block;
    block.name = name;
    block.payload = "{}";
    const auto t0 = std::chrono::steady_clock::now();
    try {
      BlockResult res = dispatch(name, w);
      block.pass = res.pass;
      block.payload = res.payload.dump();
      block.trial_rows = std::move(res.rows);
    } catch (const std::exception& e) {
      block.pass = false;
      block.error = e.what();
    }
    block.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rep.blocks.push_back(std::move(block));
  }
  return rep;
}

std::string report_to_json(const RunReport& r) {
  json j;
  j["format"] = r.format;
  j["config"] = config_json(r.config);
  json blocks = json::array();
  for (const ExperimentBlock& b : r.blocks) {
    json rows = json::array();
    for (const auto& [label, value] : b.trial_rows) rows.push_back({{"label", label}, {"value", value}});
    blocks.push_back({{"name", b.name},
                      {"pass", b.pass},
                      {"error", b.error},
                      {"wall_seconds", b.wall_seconds},
                      {"payload", json::parse(b.payload)},
                      {"trial_rows", rows}});
  }
  j["blocks"] = blocks;
  return j.dump(2) + "\n";
}

RunReport report_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("harness: report is not valid JSON: ") + e.what());
  }
  RunReport r;
  r.format = j.value("format", r.format);
  r.config = config_parse(j.value("config", json::object()));
  for (const json& jb : j.value("blocks", json::array())) {
    ExperimentBlock b;
    b.name = jb.value("name", "");
    b.pass = jb.value("pass", false);
    b.error = jb.value("error", "");
    b.wall_seconds = jb.value("wall_seconds", 0.0);
    b.payload = jb.contains("payload") ? jb["payload"].dump() : "{}";
    for (const json& row : jb.value("trial_rows", json::array()))
      b.trial_rows.push_back({row.value("label", ""), row.value("value", 0.0)});
    r.blocks.push_back(std::move(b));
  }
  return r;
}

std::string report_to_csv(const RunReport& r) {
  std::ostringstream out;
  out << "experiment,trial,label,value\n";
  for (const ExperimentBlock& b : r.blocks) {
    int i = 0;
    for (const auto& [label, value] : b.trial_rows)
      out << b.name << ',' << i++ << ',' << label << ',' << json(value).dump() << '\n';
  }
  return out.str();
}

std::vector<std::string> emit(const RunReport& r, const std::string& dir,
                              const std::string& format) {
  if (format != "json" && format != "csv" && format != "both")
    throw Error("harness: unknown emit format " + format);
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("harness: cannot create output directory " + dir);
  std::vector<std::string> written;
  const auto write = [&](const char* name, const std::string& text) {
    const fs::path path = fs::path(dir) / name;
    std::ofstream out(path, std::ios::binary);
    out << text;
    out.close();
    if (!out) throw Error("harness: cannot write " + path.string());
    written.push_back(path.string());
  };
  if (format == "json" || format == "both") write("report.json", report_to_json(r));
  if (format == "csv" || format == "both") write("report.csv", report_to_csv(r));
  return written;
}

}  // namespace dunkl
