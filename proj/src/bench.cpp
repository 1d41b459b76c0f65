#include "survborrow/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "survborrow/parallel.hpp"

namespace survborrow {

namespace {

std::string format_cell(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

constexpr std::array<EstimatorKind, 3> kKinds = {EstimatorKind::Aipw, EstimatorKind::Acw,
                                                 EstimatorKind::Adapt};

}  // namespace

MetricsTable run_benchmark(const BenchmarkConfig& cfg) {
  if (cfg.replications < 1) throw ConfigError("replications must be at least 1");

  MetricsTable table;
  table.truth_by_n0.resize(cfg.n0_grid.size());
  table.replications.assign(cfg.n0_grid.size(),
                            std::vector<ReplicationOutcome>(
                                static_cast<std::size_t>(cfg.replications)));

  const auto sim_config = [&](std::size_t n0, std::uint64_t seed) {
    SimulationConfig sim;
    sim.setting = cfg.setting;
    sim.n_trial = cfg.n_treated + n0;
    sim.n_external = cfg.n_external;
    sim.n_treated = cfg.n_treated;
    sim.p = cfg.p;
    sim.beta_c = cfg.beta_c;
    sim.tau = cfg.tau;
    sim.seed = seed;
    return sim;
  };

  for (std::size_t g = 0; g < cfg.n0_grid.size(); ++g) {
    table.truth_by_n0[g] = true_theta(sim_config(cfg.n0_grid[g], derive_seed(cfg.seed, 900 + g)),
                                      cfg.tau, cfg.truth_draws);
  }

  const std::size_t total =
      cfg.n0_grid.size() * static_cast<std::size_t>(cfg.replications);
  std::vector<std::string> failures(total);
  parallel_for(total, cfg.threads, [&](std::size_t task) {
    const std::size_t g = task / static_cast<std::size_t>(cfg.replications);
    const std::size_t rep = task % static_cast<std::size_t>(cfg.replications);
    ReplicationOutcome& out = table.replications[g][rep];
    try {
      SimulationConfig sim =
          sim_config(cfg.n0_grid[g], derive_seed(derive_seed(cfg.seed, g), rep));
      const Dataset data = simulate(sim);

      EstimateOptions opt = cfg.est;
      opt.seed = derive_seed(sim.seed, 17);
      opt.bootstrap = cfg.bootstrap;
      opt.threads = 1;  // parallelism lives at the replication level

      const PipelineResult point = run_pipeline(data, cfg.tau, opt);
      const BootstrapResult boot = bootstrap_pipeline(data, cfg.tau, opt, point);
      for (std::size_t k = 0; k < 3; ++k) {
        out.theta[k] = point.theta(kKinds[k]);
        out.se[k] = boot.se[k];
      }
      out.borrow_frac = point.borrow_fraction();
      out.ok = true;
    } catch (const Error& e) {
      failures[task] = e.what();
    }
  });

  std::size_t n_failed = 0;
  std::string first_failure;
  for (const auto& f : failures)
    if (!f.empty()) {
      ++n_failed;
      if (first_failure.empty()) first_failure = f;
    }
  if (static_cast<double>(n_failed) > 0.05 * static_cast<double>(total))
    throw Error("benchmark aborted: " + std::to_string(n_failed) + "/" + std::to_string(total) +
                " replications failed; first failure: " + first_failure);

  const double z_two = normal_quantile(0.975);
  const double z_one = normal_quantile(1.0 - cfg.test_level);
  for (std::size_t g = 0; g < cfg.n0_grid.size(); ++g) {
    const double truth = table.truth_by_n0[g];
    std::array<double, 3> mean_se{};
    std::array<MetricsCell, 3> cells;
    for (std::size_t k = 0; k < 3; ++k) {
      double sum = 0.0, sum_sq_dev = 0.0, n_ok = 0.0;
      double cover = 0.0, type1 = 0.0, power = 0.0, borrow = 0.0, se_sum = 0.0;
      for (const auto& rep : table.replications[g]) {
        if (!rep.ok) continue;
        n_ok += 1.0;
        sum += rep.theta[k];
        se_sum += rep.se[k];
      }
      const double mean = sum / n_ok;
      for (const auto& rep : table.replications[g]) {
        if (!rep.ok) continue;
        const double dev = rep.theta[k] - mean;
        sum_sq_dev += dev * dev;
        const double se = rep.se[k];
        cover += std::abs(rep.theta[k] - truth) <= z_two * se;
        type1 += se > 0.0 ? (rep.theta[k] - truth) / se > z_one : rep.theta[k] > truth;
        power += se > 0.0 ? (rep.theta[k] - cfg.power_threshold) / se > z_one
                          : rep.theta[k] > cfg.power_threshold;
        borrow += rep.borrow_frac;
      }
      MetricsCell& cell = cells[k];
      cell.setting = cfg.setting;
      cell.estimator = to_string(kKinds[k]);
      cell.n0 = cfg.n0_grid[g];
      cell.bias = mean - truth;
      cell.se = std::sqrt(sum_sq_dev / n_ok);
      cell.rmse = std::sqrt(cell.bias * cell.bias + cell.se * cell.se);
      cell.coverage = cover / n_ok;
      cell.type1 = type1 / n_ok;
      cell.power = power / n_ok;
      cell.borrow_frac = k == 0 ? 0.0 : (k == 1 ? 1.0 : borrow / n_ok);
      mean_se[k] = se_sum / n_ok;
    }
    for (std::size_t k = 0; k < 3; ++k) {
      cells[k].rel_ci_width = mean_se[0] > 0.0 ? mean_se[k] / mean_se[0] : 1.0;
      table.cells.push_back(cells[k]);
    }
  }
  return table;
}

void write_metrics_csv(const MetricsTable& table, std::ostream& out) {
  out << "setting,estimator,n0,bias,se,rmse,coverage,type1,power,borrow_frac,rel_ci_width\n";
  for (const auto& c : table.cells) {
    out << c.setting << ',' << c.estimator << ',' << c.n0 << ',' << format_cell(c.bias) << ','
        << format_cell(c.se) << ',' << format_cell(c.rmse) << ',' << format_cell(c.coverage) << ','
        << format_cell(c.type1) << ',' << format_cell(c.power) << ','
        << format_cell(c.borrow_frac) << ',' << format_cell(c.rel_ci_width) << "\n";
  }
}

std::vector<PrssCell> run_prss(const Dataset& data, const PrssConfig& cfg) {
  data.validate();
  std::vector<std::size_t> treated, controls, externals;
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    const auto& rec = data.records[i];
    if (rec.r == 1)
      (rec.a == 1 ? treated : controls).push_back(i);
    else
      externals.push_back(i);
  }
  if (treated.empty() || controls.empty() || externals.empty())
    throw ContractError("prss needs a treated arm, a control arm and external controls");
  for (std::size_t s : cfg.subsample_sizes)
    if (s > controls.size())
      throw ConfigError("subsample size " + std::to_string(s) +
                        " exceeds the control arm size " + std::to_string(controls.size()));
  if (cfg.repeats < 1) throw ConfigError("repeats must be at least 1");

  const double z_one = normal_quantile(1.0 - cfg.test_level);
  const std::size_t n_tau = cfg.taus.size();
  const std::size_t n_thr = cfg.thresholds.size();
  const std::size_t per_task = n_tau * n_thr * 2;  // aipw + adapt

  const std::size_t total =
      cfg.subsample_sizes.size() * static_cast<std::size_t>(cfg.repeats);
  std::vector<std::vector<double>> detect(total, std::vector<double>(per_task, 0.0));

  parallel_for(total, cfg.threads, [&](std::size_t task) {
    const std::size_t s = task / static_cast<std::size_t>(cfg.repeats);
    const std::size_t n0c = cfg.subsample_sizes[s];

    Rng rng(derive_seed(cfg.seed, 0xB0000 + task));
    std::vector<std::size_t> pick = controls;
    std::shuffle(pick.begin(), pick.end(), rng.engine());
    pick.resize(n0c);

    Dataset sub;
    sub.covariate_names = data.covariate_names;
    for (std::size_t i : treated) sub.records.push_back(data.records[i]);
    for (std::size_t i : pick) sub.records.push_back(data.records[i]);
    for (std::size_t i : externals) sub.records.push_back(data.records[i]);

    EstimateOptions opt = cfg.est;
    opt.bootstrap = cfg.bootstrap;
    opt.threads = 1;
    opt.seed = derive_seed(cfg.seed, 0xA0000 + task);

    for (std::size_t ti = 0; ti < n_tau; ++ti) {
      const double tau = cfg.taus[ti];
      const PipelineResult point = run_pipeline(sub, tau, opt);
      const BootstrapResult boot = bootstrap_pipeline(sub, tau, opt, point);
      const std::array<std::pair<double, double>, 2> est = {
          std::make_pair(point.theta_aipw, boot.se[0]),
          std::make_pair(point.theta_adapt, boot.se[2])};
      for (std::size_t ci = 0; ci < n_thr; ++ci) {
        const double c = cfg.thresholds[ci];
        for (std::size_t k = 0; k < 2; ++k) {
          const auto [theta, se] = est[k];
          bool success;
          if (!std::isfinite(c))
            success = false;
          else if (se > 0.0)
            success = (theta - c) / se < -z_one;
          else
            success = theta < c;
          detect[task][(ti * n_thr + ci) * 2 + k] = success ? 1.0 : 0.0;
        }
      }
    }
  });

  std::vector<PrssCell> cells;
  for (std::size_t s = 0; s < cfg.subsample_sizes.size(); ++s) {
    for (std::size_t ti = 0; ti < n_tau; ++ti) {
      for (std::size_t ci = 0; ci < n_thr; ++ci) {
        for (std::size_t k = 0; k < 2; ++k) {
          double acc = 0.0;
          for (int rep = 0; rep < cfg.repeats; ++rep)
            acc += detect[s * cfg.repeats + rep][(ti * n_thr + ci) * 2 + k];
          PrssCell cell;
          cell.n0_sub = cfg.subsample_sizes[s];
          cell.tau = cfg.taus[ti];
          cell.threshold = cfg.thresholds[ci];
          cell.estimator = k == 0 ? "aipw" : "adapt";
          cell.prss = acc / static_cast<double>(cfg.repeats);
          cells.push_back(cell);
        }
      }
    }
  }
  return cells;
}

void write_prss_csv(const std::vector<PrssCell>& cells, std::ostream& out) {
  out << "n0,tau,threshold,estimator,prss\n";
  for (const auto& c : cells) {
    out << c.n0_sub << ',' << format_cell(c.tau) << ',' << format_cell(c.threshold) << ','
        << c.estimator << ',' << format_cell(c.prss) << "\n";
  }
}

}  // namespace survborrow
