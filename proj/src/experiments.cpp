#include "intervalq/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "intervalq/conditional.hpp"
#include "intervalq/dgp.hpp"
#include "intervalq/errors.hpp"
#include "intervalq/quantile_sets.hpp"
#include "intervalq/moment_inference.hpp"

namespace intervalq {

namespace {

// Reference identification sets used by the pre-flight check; closed forms
// must reproduce these before any experiment runs.
struct ReferenceRow {
  double tau, lower, upper;
};
constexpr ReferenceRow kContinuousReference[] = {
    {0.20, 0.550, 1.225}, {0.30, 0.700, 1.500}, {0.40, 0.850, 1.750}, {0.50, 1.000, 2.000},
    {0.60, 1.150, 2.250}, {0.70, 1.300, 2.500}, {0.80, 1.450, 2.775},
};
constexpr ReferenceRow kDiscreteReference[] = {
    {0.20, -3.5, -2.5}, {0.30, -2.5, -1.5}, {0.40, -1.5, -0.5}, {0.50, -0.5, 0.5},
    {0.60, 0.5, 1.5},   {0.70, 1.5, 2.5},   {0.80, 2.5, 3.5},
};

RngState chain(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return RngState{seed, 0}.substream(a).substream(b).substream(c);
}

std::vector<double> or_default(const std::vector<double>& given, std::vector<double> fallback) {
  return given.empty() ? fallback : given;
}

std::vector<std::size_t> or_default_n(const std::vector<std::size_t>& given,
                                      std::vector<std::size_t> fallback) {
  return given.empty() ? fallback : given;
}

ExperimentReport run_table2(std::size_t reps, std::uint64_t seed, const RunOptions& opt) {
  const std::vector<double> taus = or_default(opt.taus, {0.25, 0.50, 0.75});
  const std::vector<std::size_t> sizes = or_default_n(opt.sizes, {250, 500, 1000, 2000});
  const std::vector<double> deltas = or_default(opt.deltas, {0.0, 0.5, 1.0, 2.0, 4.0, 8.0});

  ExperimentReport report;
  std::vector<std::vector<std::size_t>> rejects(taus.size(),
                                                std::vector<std::size_t>(deltas.size(), 0));
  std::vector<std::size_t> discards(taus.size(), 0);
  for (std::size_t ni = 0; ni < sizes.size(); ++ni) {
    const std::size_t n = sizes[ni];
    for (auto& row : rejects) std::fill(row.begin(), row.end(), 0);
    std::fill(discards.begin(), discards.end(), 0);
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const IntervalDataset ds = generate(DgpSpec{DgpKind::continuous, n},
                                          chain(seed, 2, ni, rep));
      for (std::size_t ti = 0; ti < taus.size(); ++ti) {
        const double tau = taus[ti];
        try {
          const QuantileSetEstimate est = quantile_set_continuous(ds, tau);
          const Cov2 sigma = sigma_continuous(ds, tau);
          const double cv = simulate_critical_value(sigma, SetMetric::hausdorff, opt.alpha,
                                                    opt.cv_draws,
                                                    chain(seed, 2, ni, rep).substream(1000 + ti));
          const IntervalObs truth = continuous_identified_set(tau);
          for (std::size_t di = 0; di < deltas.size(); ++di) {
            const IntervalObs hypo = local_alternative(truth, deltas[di], n);
            const double stat =
                std::sqrt(static_cast<double>(n)) * hausdorff(est.as_interval(), hypo);
            if (stat > cv) ++rejects[ti][di];
          }
        } catch (const invariant_error&) {
          ++discards[ti];
        }
      }
    }
    for (std::size_t ti = 0; ti < taus.size(); ++ti) {
      const std::size_t done = reps - discards[ti];
      for (std::size_t di = 0; di < deltas.size(); ++di) {
        ExperimentCell cell;
        cell.tau = taus[ti];
        cell.n = n;
        cell.delta = deltas[di];
        cell.replications = done;
        cell.discarded = discards[ti];
        cell.frequency = done == 0 ? 0.0
                                   : static_cast<double>(rejects[ti][di]) /
                                         static_cast<double>(done);
        report.cells.push_back(cell);
      }
    }
  }
  return report;
}

ExperimentReport run_table5(std::size_t reps, std::uint64_t seed, const RunOptions& opt) {
  const std::vector<double> taus = or_default(opt.taus, {0.25, 0.50, 0.75});
  const std::vector<std::size_t> sizes = or_default_n(opt.sizes, {250, 500, 1000, 2000});

  ExperimentReport report;
  DgpSpec spec{DgpKind::discrete, 0};
  for (std::size_t ni = 0; ni < sizes.size(); ++ni) {
    const std::size_t n = sizes[ni];
    spec.n = n;
    std::vector<std::size_t> events(taus.size(), 0);
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const IntervalDataset ds = generate(spec, chain(seed, 5, ni, rep));
      for (std::size_t ti = 0; ti < taus.size(); ++ti) {
        const QuantileSetEstimate est = quantile_set_discrete(ds, taus[ti]);
        const IntervalObs truth = discrete_identified_set(taus[ti], spec.discrete_sd);
        if (hausdorff(est.as_interval(), truth) > 0.0) ++events[ti];
      }
    }
    for (std::size_t ti = 0; ti < taus.size(); ++ti) {
      ExperimentCell cell;
      cell.tau = taus[ti];
      cell.n = n;
      cell.replications = reps;
      cell.frequency = static_cast<double>(events[ti]) / static_cast<double>(reps);
      report.cells.push_back(cell);
    }
  }
  return report;
}

ExperimentReport run_table6(std::size_t reps, std::uint64_t seed, const RunOptions& opt) {
  const std::vector<double> x_stars = or_default(opt.x_stars, {-1.0, 0.0, 1.0});
  const std::vector<double> taus = or_default(opt.taus, {0.25, 0.50, 0.75});
  const std::vector<std::size_t> sizes = or_default_n(opt.sizes, {1000, 2000, 4000});
  const std::vector<double> deltas =
      or_default(opt.deltas, {0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0});

  ExperimentReport report;
  const std::size_t rows = x_stars.size() * taus.size();
  std::vector<std::vector<std::size_t>> rejects(rows,
                                                std::vector<std::size_t>(deltas.size(), 0));
  std::vector<std::size_t> discards(rows, 0);
  for (std::size_t ni = 0; ni < sizes.size(); ++ni) {
    const std::size_t n = sizes[ni];
    for (auto& row : rejects) std::fill(row.begin(), row.end(), 0);
    std::fill(discards.begin(), discards.end(), 0);
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const IntervalDataset ds = generate(DgpSpec{DgpKind::conditional, n},
                                          chain(seed, 6, ni, rep));
      for (std::size_t xi = 0; xi < x_stars.size(); ++xi) {
        Eigen::VectorXd x_star(1);
        x_star[0] = x_stars[xi];
        for (std::size_t ti = 0; ti < taus.size(); ++ti) {
          const double tau = taus[ti];
          const std::size_t row = xi * taus.size() + ti;
          try {
            const Eigen::VectorXd h = bandwidth_rule(ds, x_star, 1.0);
            const LocalFit fit = local_quantile_set(ds, tau, x_star, h);
            const double cv = simulate_critical_value(
                fit.sigma, SetMetric::hausdorff, opt.alpha, opt.cv_draws,
                chain(seed, 6, ni, rep).substream(1000 + row));
            const IntervalObs truth = conditional_identified_set(tau, x_stars[xi]);
            // The alternative shrinks at the root-n rate while the statistic
            // scales with the local window count.
            for (std::size_t di = 0; di < deltas.size(); ++di) {
              const IntervalObs hypo = local_alternative(truth, deltas[di], n);
              const double stat = std::sqrt(static_cast<double>(fit.local_n)) *
                                  hausdorff(fit.estimate.as_interval(), hypo);
              if (stat > cv) ++rejects[row][di];
            }
          } catch (const invariant_error&) {
            ++discards[row];
          }
        }
      }
    }
    for (std::size_t xi = 0; xi < x_stars.size(); ++xi) {
      for (std::size_t ti = 0; ti < taus.size(); ++ti) {
        const std::size_t row = xi * taus.size() + ti;
        const std::size_t done = reps - discards[row];
        for (std::size_t di = 0; di < deltas.size(); ++di) {
          ExperimentCell cell;
          cell.x_star = x_stars[xi];
          cell.tau = taus[ti];
          cell.n = n;
          cell.delta = deltas[di];
          cell.replications = done;
          cell.discarded = discards[row];
          cell.frequency = done == 0 ? 0.0
                                     : static_cast<double>(rejects[row][di]) /
                                           static_cast<double>(done);
          report.cells.push_back(cell);
        }
      }
    }
  }
  return report;
}

ExperimentReport run_figure1(std::size_t reps, std::uint64_t seed, const RunOptions& opt) {
  const std::vector<double> taus = or_default(opt.taus, {0.25, 0.50, 0.75});
  const std::vector<std::size_t> sizes = or_default_n(opt.sizes, {100, 200});
  std::vector<double> slopes = opt.slope_grid;
  if (slopes.empty()) {
    for (int i = 0; i <= 8; ++i) slopes.push_back(-0.5 + 0.25 * i);
  }

  MomentConfig cfg;
  cfg.bootstrap_count = opt.bootstrap;
  cfg.alpha = opt.alpha;

  ExperimentReport report;
  const std::size_t rows = taus.size() * slopes.size();
  std::vector<std::size_t> rejects(rows, 0), discards(rows, 0);
  for (std::size_t ni = 0; ni < sizes.size(); ++ni) {
    const std::size_t n = sizes[ni];
    std::fill(rejects.begin(), rejects.end(), 0);
    std::fill(discards.begin(), discards.end(), 0);
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const IntervalDataset ds = generate(DgpSpec{DgpKind::parametric, n},
                                          chain(seed, 1, ni, rep));
      for (std::size_t ti = 0; ti < taus.size(); ++ti) {
        const double tau = taus[ti];
        for (std::size_t si = 0; si < slopes.size(); ++si) {
          const std::size_t row = ti * slopes.size() + si;
          Eigen::VectorXd theta(2);
          theta << 1.0 + tau, slopes[si];
          try {
            const MomentTestResult res =
                moment_test(ds, theta, tau, cfg,
                            chain(seed, 1, ni, rep).substream(2000 + ti).substream(si));
            if (res.reject) ++rejects[row];
          } catch (const invariant_error&) {
            ++discards[row];
          }
        }
      }
    }
    for (std::size_t ti = 0; ti < taus.size(); ++ti) {
      for (std::size_t si = 0; si < slopes.size(); ++si) {
        const std::size_t row = ti * slopes.size() + si;
        const std::size_t done = reps - discards[row];
        ExperimentCell cell;
        cell.tau = taus[ti];
        cell.n = n;
        cell.slope = slopes[si];
        cell.replications = done;
        cell.discarded = discards[row];
        cell.frequency = done == 0 ? 0.0
                                   : static_cast<double>(rejects[row]) /
                                         static_cast<double>(done);
        report.cells.push_back(cell);
      }
    }
  }
  return report;
}

}  // namespace

Design design_from_string(const std::string& name) {
  if (name == "table2") return Design::table2;
  if (name == "table5") return Design::table5;
  if (name == "table6") return Design::table6;
  if (name == "figure1") return Design::figure1;
  throw invariant_error("unknown design '" + name + "'");
}

std::string design_name(Design d) {
  switch (d) {
    case Design::table2: return "table2";
    case Design::table5: return "table5";
    case Design::table6: return "table6";
    case Design::figure1: return "figure1";
  }
  return "unknown";
}

PreflightResult preflight_identification_check() {
  PreflightResult out;
  for (const ReferenceRow& row : kContinuousReference) {
    const IntervalObs set = continuous_identified_set(row.tau);
    out.continuous_deviation = std::max(
        {out.continuous_deviation, std::abs(set.lower - row.lower), std::abs(set.upper - row.upper)});
  }
  const double sd = DgpSpec{}.discrete_sd;
  for (const ReferenceRow& row : kDiscreteReference) {
    const IntervalObs set = discrete_identified_set(row.tau, sd);
    out.discrete_deviation = std::max(
        {out.discrete_deviation, std::abs(set.lower - row.lower), std::abs(set.upper - row.upper)});
  }
  return out;
}

ExperimentReport run_table(Design d, std::size_t replications, std::uint64_t seed,
                           const RunOptions& opt) {
  if (replications < 100) {
    throw invariant_error("replication count below 100 gives meaningless frequencies");
  }
  const PreflightResult pf = preflight_identification_check();
  if (pf.continuous_deviation > 0.01 || pf.discrete_deviation > 0.01) {
    throw invariant_error("identification-set pre-flight check failed");
  }

  const auto start = std::chrono::steady_clock::now();
  ExperimentReport report;
  switch (d) {
    case Design::table2: report = run_table2(replications, seed, opt); break;
    case Design::table5: report = run_table5(replications, seed, opt); break;
    case Design::table6: report = run_table6(replications, seed, opt); break;
    case Design::figure1: report = run_figure1(replications, seed, opt); break;
  }
  report.design = design_name(d);
  report.seed = seed;
  report.replications = replications;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void write_report_csv(const ExperimentReport& report, std::ostream& out) {
  out << "tau,n,delta,x_star,slope,frequency,replications,discarded\n";
  char buf[64];
  for (const ExperimentCell& c : report.cells) {
    out << c.tau << ',' << c.n << ',' << c.delta << ',' << c.x_star << ',' << c.slope << ',';
    std::snprintf(buf, sizeof(buf), "%.6f", c.frequency);
    out << buf << ',' << c.replications << ',' << c.discarded << '\n';
  }
}

void write_report_json(const ExperimentReport& report, std::ostream& out) {
  nlohmann::ordered_json j;
  j["design"] = report.design;
  j["seed"] = report.seed;
  j["replications"] = report.replications;
  j["cells"] = nlohmann::ordered_json::array();
  for (const ExperimentCell& c : report.cells) {
    nlohmann::ordered_json jc;
    jc["tau"] = c.tau;
    jc["n"] = c.n;
    jc["delta"] = c.delta;
    jc["x_star"] = c.x_star;
    jc["slope"] = c.slope;
    jc["frequency"] = c.frequency;
    jc["replications"] = c.replications;
    jc["discarded"] = c.discarded;
    j["cells"].push_back(std::move(jc));
  }
  out << j.dump(2) << '\n';
}

McConfig parse_mc_config(std::istream& in) {
  McConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw io_error("config line " + std::to_string(lineno) + " is not key=value");
    }
    auto strip = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      if (a == std::string::npos) return std::string();
      const auto b = s.find_last_not_of(" \t");
      return s.substr(a, b - a + 1);
    };
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    try {
      if (key == "design") {
        try {
          cfg.design = design_from_string(value);
        } catch (const invariant_error& e) {
          throw io_error(e.what());
        }
      } else if (key == "replications") {
        cfg.replications = static_cast<std::size_t>(std::stoull(value));
      } else if (key == "seed") {
        cfg.seed = static_cast<std::uint64_t>(std::stoull(value));
      } else if (key == "out") {
        cfg.out_dir = value;
      } else {
        throw io_error("unknown config key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw io_error("bad value for config key '" + key + "'");
    } catch (const std::out_of_range&) {
      throw io_error("bad value for config key '" + key + "'");
    }
  }
  return cfg;
}

}  // namespace intervalq
