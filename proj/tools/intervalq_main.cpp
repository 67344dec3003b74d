#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "intervalq/conditional.hpp"
#include "intervalq/csv.hpp"
#include "intervalq/dgp.hpp"
#include "intervalq/errors.hpp"
#include "intervalq/experiments.hpp"
#include "intervalq/functionals.hpp"
#include "intervalq/moment_inference.hpp"
#include "intervalq/quantile_sets.hpp"
#include "intervalq/set_lp.hpp"

namespace {

using namespace intervalq;

struct InputFlags {
  std::string path;
  std::string lower_col = "lower";
  std::string upper_col = "upper";
  std::vector<std::string> x_cols;
  bool skip_malformed = false;
};

void add_input_flags(CLI::App* cmd, InputFlags* in) {
  cmd->add_option("--input", in->path, "interval CSV file")->required();
  cmd->add_option("--lower-col", in->lower_col, "lower endpoint column name");
  cmd->add_option("--upper-col", in->upper_col, "upper endpoint column name");
  cmd->add_option("--x-cols", in->x_cols, "covariate column names")->delimiter(',');
  cmd->add_flag("--skip-malformed", in->skip_malformed, "drop malformed rows instead of failing");
}

IntervalDataset load_input(const InputFlags& in) {
  CsvSchema schema;
  schema.lower = in.lower_col;
  schema.upper = in.upper_col;
  schema.covariates = in.x_cols;
  schema.skip_malformed = in.skip_malformed;
  CsvLoadResult res = load_csv(in.path, schema);
  if (res.skipped > 0) {
    std::cerr << "note: skipped " << res.skipped << " malformed rows\n";
  }
  return std::move(res.data);
}

std::ostream& open_output(std::ofstream& file, const std::string& path) {
  if (path.empty()) return std::cout;
  file.open(path);
  if (!file) throw io_error("cannot open output file '" + path + "'");
  return file;
}

SetMetric metric_from_string(const std::string& name) {
  if (name == "h") return SetMetric::hausdorff;
  if (name == "dh") return SetMetric::directed_hausdorff;
  if (name == "dh2") return SetMetric::squared_directed;
  throw invariant_error("unknown metric '" + name + "' (expected h, dh, or dh2)");
}

nlohmann::ordered_json sigma_json(const Cov2& sigma) {
  return nlohmann::ordered_json::array(
      {nlohmann::ordered_json::array({sigma.m(0, 0), sigma.m(0, 1)}),
       nlohmann::ordered_json::array({sigma.m(1, 0), sigma.m(1, 1)})});
}

Eigen::MatrixXd load_grid(const std::string& path, std::size_t p) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open grid file '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r,") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        row.push_back(v);
        (void)used;
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (lineno == 1) continue;  // header line
      throw io_error("unparseable grid row " + std::to_string(lineno));
    }
    if (row.size() != p) {
      throw io_error("grid row " + std::to_string(lineno) + " has " +
                     std::to_string(row.size()) + " values, expected " + std::to_string(p));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw io_error("grid file has no parameter rows");
  Eigen::MatrixXd grid(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      grid(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return grid;
}

int run_functionals(const InputFlags& in, const std::vector<double>& grid_values,
                    double grid_min, double grid_max, std::size_t grid_count,
                    const std::string& out_path) {
  const IntervalDataset ds = load_input(in);
  std::vector<double> grid = grid_values;
  if (grid.empty()) {
    if (grid_count < 2) throw invariant_error("grid needs at least two points");
    if (!(grid_max > grid_min)) throw invariant_error("grid-max must exceed grid-min");
    for (std::size_t i = 0; i < grid_count; ++i) {
      grid.push_back(grid_min + (grid_max - grid_min) * static_cast<double>(i) /
                                    static_cast<double>(grid_count - 1));
    }
  }
  const FunctionalCurve curve = evaluate_curves(ds, grid);
  std::ofstream file;
  std::ostream& out = open_output(file, out_path);
  out << "t,containment,capacity\n";
  char buf[96];
  for (std::size_t i = 0; i < curve.t.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", curve.t[i], curve.containment[i],
                  curve.capacity[i]);
    out << buf;
  }
  return 0;
}

int run_qset(const InputFlags& in, double tau, const std::string& variant, double alpha,
             const std::string& metric_name, double hypo_lower, double hypo_upper,
             bool have_hypo, std::size_t draws, std::uint64_t seed,
             const std::string& out_path) {
  const IntervalDataset ds = load_input(in);
  const SetMetric metric = metric_from_string(metric_name);
  nlohmann::ordered_json j;
  j["tau"] = tau;

  if (have_hypo) {
    const IntervalObs hypo{hypo_lower, hypo_upper};
    SetTestResult res;
    if (variant == "cont") {
      res = test_quantile_set(ds, tau, hypo, alpha, metric, draws, RngState{seed, 0});
    } else if (variant == "disc") {
      const QuantileSetEstimate est = quantile_set_discrete(ds, tau);
      j["lower"] = est.lower;
      j["upper"] = est.upper;
      j["statistic"] = hausdorff(est.as_interval(), hypo);
      j["reject"] = j["statistic"].get<double>() > 0.0;
      std::ofstream file;
      open_output(file, out_path) << j.dump(2) << '\n';
      return 0;
    } else if (variant == "jitter") {
      res = test_quantile_set_jittered(ds, tau, hypo, alpha, metric, draws, RngState{seed, 0});
    } else {
      throw invariant_error("unknown variant '" + variant + "' (expected cont, disc, jitter)");
    }
    j["lower"] = res.estimate.lower;
    j["upper"] = res.estimate.upper;
    j["sigma"] = sigma_json(res.sigma);
    j["statistic"] = res.statistic;
    j["critical_value"] = res.critical_value;
    j["reject"] = res.reject;
  } else {
    if (variant == "cont") {
      const QuantileSetEstimate est = quantile_set_continuous(ds, tau);
      j["lower"] = est.lower;
      j["upper"] = est.upper;
      j["sigma"] = sigma_json(sigma_continuous(ds, tau));
    } else if (variant == "disc") {
      const QuantileSetEstimate est = quantile_set_discrete(ds, tau);
      j["lower"] = est.lower;
      j["upper"] = est.upper;
    } else if (variant == "jitter") {
      const JitteredEstimate est = quantile_set_jittered(ds, tau, RngState{seed, 0});
      j["lower"] = est.estimate.lower;
      j["upper"] = est.estimate.upper;
      j["sigma"] = sigma_json(est.sigma);
    } else {
      throw invariant_error("unknown variant '" + variant + "' (expected cont, disc, jitter)");
    }
  }
  std::ofstream file;
  open_output(file, out_path) << j.dump(2) << '\n';
  return 0;
}

int run_cqset(const InputFlags& in, double tau, const std::vector<double>& xstar_list,
              double gamma, double alpha, std::uint64_t seed, std::size_t draws,
              const std::string& metric_name, double hypo_lower, double hypo_upper,
              bool have_hypo, const std::string& out_path) {
  const IntervalDataset ds = load_input(in);
  const SetMetric metric = metric_from_string(metric_name);
  if (ds.p() == 0) throw invariant_error("conditional estimation needs covariate columns");

  // The list is one point per value for scalar covariates; for vector
  // covariates it is the coordinates of a single point.
  std::vector<Eigen::VectorXd> points;
  if (ds.p() == 1) {
    for (double v : xstar_list) {
      Eigen::VectorXd x(1);
      x[0] = v;
      points.push_back(x);
    }
  } else {
    if (xstar_list.size() != ds.p()) {
      throw invariant_error("--xstar must list exactly p coordinates for vector covariates");
    }
    Eigen::VectorXd x(static_cast<Eigen::Index>(ds.p()));
    for (std::size_t k = 0; k < ds.p(); ++k) x[static_cast<Eigen::Index>(k)] = xstar_list[k];
    points.push_back(x);
  }
  if (points.empty()) throw invariant_error("--xstar needs at least one point");

  nlohmann::ordered_json out_array = nlohmann::ordered_json::array();
  for (std::size_t pi = 0; pi < points.size(); ++pi) {
    nlohmann::ordered_json j;
    j["tau"] = tau;
    j["x_star"] = nlohmann::ordered_json::array();
    for (Eigen::Index k = 0; k < points[pi].size(); ++k) j["x_star"].push_back(points[pi][k]);
    try {
      if (have_hypo) {
        const SetTestResult res = test_conditional_quantile_set(
            ds, tau, points[pi], IntervalObs{hypo_lower, hypo_upper}, alpha, metric, draws,
            RngState{seed, pi}, gamma);
        j["lower"] = res.estimate.lower;
        j["upper"] = res.estimate.upper;
        j["sigma"] = sigma_json(res.sigma);
        j["statistic"] = res.statistic;
        j["critical_value"] = res.critical_value;
        j["reject"] = res.reject;
      } else {
        const Eigen::VectorXd h = bandwidth_rule(ds, points[pi], gamma);
        const LocalFit fit = local_quantile_set(ds, tau, points[pi], h);
        j["lower"] = fit.estimate.lower;
        j["upper"] = fit.estimate.upper;
        j["sigma"] = sigma_json(fit.sigma);
        j["local_n"] = fit.local_n;
        j["bandwidths"] = nlohmann::ordered_json::array();
        for (Eigen::Index k = 0; k < h.size(); ++k) j["bandwidths"].push_back(h[k]);
      }
    } catch (const invariant_error& e) {
      j["error"] = e.what();
    }
    out_array.push_back(std::move(j));
  }
  std::ofstream file;
  open_output(file, out_path) << out_array.dump(2) << '\n';
  return 0;
}

int run_mitest(const InputFlags& in, double tau, const std::string& grid_file, double alpha,
               std::size_t depth, std::size_t bootstrap, std::uint64_t seed,
               const std::string& out_path) {
  const IntervalDataset ds = load_input(in);
  if (ds.p() == 0) throw invariant_error("moment test needs covariate columns");
  const Eigen::MatrixXd grid = load_grid(grid_file, ds.p());

  MomentConfig cfg;
  cfg.instrument_depth = depth;
  cfg.bootstrap_count = bootstrap;
  cfg.alpha = alpha;
  const std::vector<ScanPoint> scan =
      confidence_set_scan(ds, tau, grid, cfg, RngState{seed, 0});

  std::ofstream file;
  std::ostream& out = open_output(file, out_path);
  for (std::size_t j = 0; j < ds.p(); ++j) out << "theta" << (j + 1) << ',';
  out << "statistic,critical,accepted\n";
  char buf[64];
  for (const ScanPoint& pt : scan) {
    for (Eigen::Index j = 0; j < pt.theta.size(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g,", pt.theta[j]);
      out << buf;
    }
    if (pt.failed) {
      out << "nan,nan,error\n";
    } else {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,", pt.statistic, pt.critical_value);
      out << buf << (pt.accepted ? 1 : 0) << '\n';
    }
  }
  return 0;
}

int run_setblp(const InputFlags& in, double tau, std::size_t probe_budget, std::size_t cell_cap,
               std::size_t lattice, const std::string& betas_out, const std::string& out_path) {
  const IntervalDataset ds = load_input(in);
  if (ds.p() == 0) throw invariant_error("coefficient enumeration needs covariate columns");

  if (lattice > 0) {
    const Eigen::MatrixXd betas = brute_force_lattice(ds, tau, lattice);
    std::ofstream file;
    std::ostream& out = open_output(file, out_path);
    for (std::size_t j = 0; j < ds.p(); ++j) out << "beta" << (j + 1) << (j + 1 < ds.p() ? ',' : '\n');
    char buf[64];
    for (Eigen::Index i = 0; i < betas.rows(); ++i) {
      for (Eigen::Index j = 0; j < betas.cols(); ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", betas(i, j));
        out << buf << (j + 1 < betas.cols() ? ',' : '\n');
      }
    }
    return 0;
  }

  SetLpOptions opt;
  opt.probe_budget = probe_budget;
  opt.max_cells = cell_cap;
  const EnumerationResult res = enumerate_cells(ds, tau, opt);

  nlohmann::ordered_json j;
  j["tau"] = tau;
  j["status"] = res.status == EnumerationStatus::ok
                    ? "ok"
                    : (res.status == EnumerationStatus::low_coverage ? "low_coverage"
                                                                     : "truncated");
  j["coverage"] = res.coverage;
  j["lp_solves"] = res.lp_solves;
  j["cells"] = nlohmann::ordered_json::array();
  const CanonicalLP lp = make_canonical(ds.covariates(), tau);
  for (const BasisCell& cell : res.cells) {
    nlohmann::ordered_json jc;
    jc["basis"] = cell.basis;
    jc["witness"] = std::vector<double>(cell.witness.data(),
                                        cell.witness.data() + cell.witness.size());
    nlohmann::ordered_json bm = nlohmann::ordered_json::array();
    for (Eigen::Index r = 0; r < cell.beta_map.rows(); ++r) {
      bm.push_back(std::vector<double>(cell.beta_map.row(r).begin(), cell.beta_map.row(r).end()));
    }
    jc["beta_map"] = std::move(bm);
    // Full inequality systems are only manageable for small samples; larger
    // instances keep the structural description from which they follow.
    if (ds.n() <= 64) {
      nlohmann::ordered_json rows = nlohmann::ordered_json::array();
      const std::size_t m = lp.m();
      Eigen::MatrixXd lmap = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m),
                                                   static_cast<Eigen::Index>(ds.n()));
      for (std::size_t i = 0; i < m; ++i) {
        lmap(static_cast<Eigen::Index>(i), lp.free_rows[i]) = 1.0;
        for (std::size_t q = 0; q < ds.p(); ++q) {
          lmap(static_cast<Eigen::Index>(i), lp.pivot_rows[q]) -=
              lp.w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q));
        }
      }
      for (std::size_t i = 0; i < m; ++i) {
        rows.push_back(std::vector<double>(lmap.row(static_cast<Eigen::Index>(i)).begin(),
                                           lmap.row(static_cast<Eigen::Index>(i)).end()));
      }
      jc["rhs_map"] = std::move(rows);
    }
    j["cells"].push_back(std::move(jc));
  }

  if (!betas_out.empty()) {
    std::ofstream bf(betas_out);
    if (!bf) throw io_error("cannot open output file '" + betas_out + "'");
    for (std::size_t q = 0; q < ds.p(); ++q) bf << "beta" << (q + 1) << (q + 1 < ds.p() ? ',' : '\n');
    char buf[64];
    for (Eigen::Index i = 0; i < res.beta_samples.rows(); ++i) {
      for (Eigen::Index q = 0; q < res.beta_samples.cols(); ++q) {
        std::snprintf(buf, sizeof(buf), "%.17g", res.beta_samples(i, q));
        bf << buf << (q + 1 < res.beta_samples.cols() ? ',' : '\n');
      }
    }
  }

  std::ofstream file;
  open_output(file, out_path) << j.dump(2) << '\n';
  return 0;
}

int run_mc(const std::string& config_path, std::string design_name_arg, std::size_t reps,
           std::uint64_t seed, std::string out_dir, bool have_design, bool have_reps,
           bool have_seed, bool have_out) {
  McConfig cfg;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw io_error("cannot open config file '" + config_path + "'");
    cfg = parse_mc_config(in);
  }
  if (have_design) cfg.design = design_from_string(design_name_arg);
  if (have_reps) cfg.replications = reps;
  if (have_seed) cfg.seed = seed;
  if (have_out) cfg.out_dir = out_dir;

  const ExperimentReport report = run_table(cfg.design, cfg.replications, cfg.seed);
  const std::string base = cfg.out_dir + "/" + report.design;
  {
    std::ofstream csv(base + ".csv");
    if (!csv) throw io_error("cannot open output file '" + base + ".csv'");
    write_report_csv(report, csv);
  }
  {
    std::ofstream json(base + ".json");
    if (!json) throw io_error("cannot open output file '" + base + ".json'");
    write_report_json(report, json);
  }
  std::cout << report.design << ": " << report.cells.size() << " cells, "
            << report.replications << " replications, " << report.wall_seconds << " s\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Partial identification of quantiles for interval-valued outcomes"};
  app.require_subcommand(1);

  // functionals
  InputFlags fn_in;
  std::vector<double> fn_grid;
  double fn_min = 0.0, fn_max = 1.0;
  std::size_t fn_count = 0;
  std::string fn_out;
  CLI::App* fn = app.add_subcommand("functionals", "cumulative containment and capacity curves");
  add_input_flags(fn, &fn_in);
  fn->add_option("--grid", fn_grid, "explicit grid values")->delimiter(',');
  fn->add_option("--grid-min", fn_min, "uniform grid start");
  fn->add_option("--grid-max", fn_max, "uniform grid end");
  fn->add_option("--grid-count", fn_count, "uniform grid size");
  fn->add_option("--out", fn_out, "output CSV path (default stdout)");

  // qset
  InputFlags qs_in;
  double qs_tau = 0.5, qs_alpha = 0.05, qs_hlo = 0.0, qs_hup = 0.0;
  std::string qs_variant = "cont", qs_metric = "h", qs_out;
  std::size_t qs_draws = 25000;
  std::uint64_t qs_seed = 1;
  CLI::App* qs = app.add_subcommand("qset", "quantile set estimate and test");
  add_input_flags(qs, &qs_in);
  qs->add_option("--tau", qs_tau, "quantile level")->required();
  qs->add_option("--variant", qs_variant, "cont, disc, or jitter");
  qs->add_option("--alpha", qs_alpha, "test size");
  qs->add_option("--metric", qs_metric, "h, dh, or dh2");
  CLI::Option* qs_hlo_opt = qs->add_option("--hypo-lower", qs_hlo, "hypothesized lower endpoint");
  CLI::Option* qs_hup_opt = qs->add_option("--hypo-upper", qs_hup, "hypothesized upper endpoint");
  qs->add_option("--draws", qs_draws, "critical value simulation draws");
  qs->add_option("--seed", qs_seed, "random seed");
  qs->add_option("--out", qs_out, "output JSON path (default stdout)");

  // cqset
  InputFlags cq_in;
  double cq_tau = 0.5, cq_gamma = 1.0, cq_alpha = 0.05, cq_hlo = 0.0, cq_hup = 0.0;
  std::vector<double> cq_xstar;
  std::string cq_metric = "h", cq_out;
  std::size_t cq_draws = 25000;
  std::uint64_t cq_seed = 1;
  CLI::App* cq = app.add_subcommand("cqset", "conditional quantile set at covariate points");
  add_input_flags(cq, &cq_in);
  cq->add_option("--tau", cq_tau, "quantile level")->required();
  cq->add_option("--xstar", cq_xstar, "covariate point(s), comma separated")
      ->delimiter(',')
      ->required();
  cq->add_option("--gamma", cq_gamma, "smoothness order in the bandwidth rule");
  cq->add_option("--alpha", cq_alpha, "test size");
  cq->add_option("--metric", cq_metric, "h, dh, or dh2");
  CLI::Option* cq_hlo_opt = cq->add_option("--hypo-lower", cq_hlo, "hypothesized lower endpoint");
  CLI::Option* cq_hup_opt = cq->add_option("--hypo-upper", cq_hup, "hypothesized upper endpoint");
  cq->add_option("--draws", cq_draws, "critical value simulation draws");
  cq->add_option("--seed", cq_seed, "random seed");
  cq->add_option("--out", cq_out, "output JSON path (default stdout)");

  // mitest
  InputFlags mi_in;
  double mi_tau = 0.5, mi_alpha = 0.05;
  std::string mi_grid, mi_out;
  std::size_t mi_depth = 2, mi_bootstrap = 500;
  std::uint64_t mi_seed = 1;
  CLI::App* mi = app.add_subcommand("mitest", "moment-inequality test over a parameter grid");
  add_input_flags(mi, &mi_in);
  mi->add_option("--tau", mi_tau, "quantile level")->required();
  mi->add_option("--grid-file", mi_grid, "CSV of parameter rows")->required();
  mi->add_option("--alpha", mi_alpha, "test size");
  mi->add_option("--R", mi_depth, "instrument depth");
  mi->add_option("--bootstrap", mi_bootstrap, "bootstrap replications");
  mi->add_option("--seed", mi_seed, "random seed");
  mi->add_option("--out", mi_out, "output CSV path (default stdout)");

  // setblp
  InputFlags sb_in;
  double sb_tau = 0.5;
  std::size_t sb_budget = 512, sb_cap = 256, sb_lattice = 0;
  std::string sb_betas, sb_out;
  std::uint64_t sb_seed = 1;
  CLI::App* sb = app.add_subcommand("setblp", "best-linear-predictor coefficient regions");
  add_input_flags(sb, &sb_in);
  sb->add_option("--tau", sb_tau, "quantile level")->required();
  sb->add_option("--probe-budget", sb_budget, "selection probes");
  sb->add_option("--cell-cap", sb_cap, "maximum recorded regions");
  sb->add_option("--lattice", sb_lattice, "oracle mode: lattice points per interval");
  sb->add_option("--seed", sb_seed, "accepted for interface stability; enumeration is deterministic");
  sb->add_option("--betas-out", sb_betas, "write the coefficient samples CSV here");
  sb->add_option("--out", sb_out, "output JSON path (default stdout)");

  // mc
  std::string mc_config, mc_design, mc_out = ".";
  std::size_t mc_reps = 2000;
  std::uint64_t mc_seed = 1;
  CLI::App* mc = app.add_subcommand("mc", "Monte Carlo experiment designs");
  mc->add_option("--config", mc_config, "key=value configuration file");
  CLI::Option* mc_design_opt =
      mc->add_option("--design", mc_design, "table2, table5, table6, or figure1");
  CLI::Option* mc_reps_opt = mc->add_option("--reps", mc_reps, "replication count");
  CLI::Option* mc_seed_opt = mc->add_option("--seed", mc_seed, "random seed");
  CLI::Option* mc_out_opt = mc->add_option("--out", mc_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (fn->parsed()) {
      return run_functionals(fn_in, fn_grid, fn_min, fn_max, fn_count, fn_out);
    }
    if (qs->parsed()) {
      const bool have_hypo = qs_hlo_opt->count() > 0 || qs_hup_opt->count() > 0;
      if (have_hypo && (qs_hlo_opt->count() == 0 || qs_hup_opt->count() == 0)) {
        throw invariant_error("--hypo-lower and --hypo-upper must be given together");
      }
      return run_qset(qs_in, qs_tau, qs_variant, qs_alpha, qs_metric, qs_hlo, qs_hup, have_hypo,
                      qs_draws, qs_seed, qs_out);
    }
    if (cq->parsed()) {
      const bool have_hypo = cq_hlo_opt->count() > 0 || cq_hup_opt->count() > 0;
      if (have_hypo && (cq_hlo_opt->count() == 0 || cq_hup_opt->count() == 0)) {
        throw invariant_error("--hypo-lower and --hypo-upper must be given together");
      }
      return run_cqset(cq_in, cq_tau, cq_xstar, cq_gamma, cq_alpha, cq_seed, cq_draws, cq_metric,
                       cq_hlo, cq_hup, have_hypo, cq_out);
    }
    if (mi->parsed()) {
      return run_mitest(mi_in, mi_tau, mi_grid, mi_alpha, mi_depth, mi_bootstrap, mi_seed, mi_out);
    }
    if (sb->parsed()) {
      return run_setblp(sb_in, sb_tau, sb_budget, sb_cap, sb_lattice, sb_betas, sb_out);
    }
    if (mc->parsed()) {
      return run_mc(mc_config, mc_design, mc_reps, mc_seed, mc_out, mc_design_opt->count() > 0,
                    mc_reps_opt->count() > 0, mc_seed_opt->count() > 0, mc_out_opt->count() > 0);
    }
  } catch (const invariant_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const io_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
