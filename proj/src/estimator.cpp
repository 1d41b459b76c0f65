#include "survborrow/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>

#include <json.hpp>

#include "survborrow/parallel.hpp"
#include "survborrow/rng.hpp"

namespace survborrow {

EstimatorKind estimator_kind_from_string(const std::string& name) {
  if (name == "aipw") return EstimatorKind::Aipw;
  if (name == "acw") return EstimatorKind::Acw;
  if (name == "adapt") return EstimatorKind::Adapt;
  throw ConfigError("unknown estimator kind '" + name + "'");
}

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Aipw: return "aipw";
    case EstimatorKind::Acw: return "acw";
    case EstimatorKind::Adapt: return "adapt";
  }
  return "?";
}

double PipelineResult::theta(EstimatorKind kind) const {
  switch (kind) {
    case EstimatorKind::Aipw: return theta_aipw;
    case EstimatorKind::Acw: return theta_acw;
    case EstimatorKind::Adapt: return theta_adapt;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

FoldPlan assign_folds(const Dataset& data, int folds, FoldMode mode, std::uint64_t seed) {
  if (folds < 2) throw ContractError("fold count must be at least 2");
  FoldPlan plan;
  plan.folds = folds;
  plan.mode = mode;
  plan.fold_of.assign(data.records.size(), 0);

  for (int cell = 0; cell < 4; ++cell) {
    const int r = cell / 2, a = cell % 2;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < data.records.size(); ++i)
      if (data.records[i].r == r && data.records[i].a == a) idx.push_back(i);
    if (idx.empty()) continue;
    // order by id so the assignment of trial records does not depend on
    // whatever else is in the file
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) {
      return data.records[i].id < data.records[j].id;
    });
    Rng rng(derive_seed(seed, 101 + static_cast<std::uint64_t>(cell)));
    std::shuffle(idx.begin(), idx.end(), rng.engine());
    for (std::size_t pos = 0; pos < idx.size(); ++pos)
      plan.fold_of[idx[pos]] = static_cast<int>(pos % static_cast<std::size_t>(folds));
    if (mode == FoldMode::SwapAverage && idx.size() < static_cast<std::size_t>(folds))
      throw FoldError("a (R,A) cell is smaller than the fold count; use single-split mode");
  }
  return plan;
}

namespace {

LogisticModel constant_logistic(double prob) {
  LogisticModel m;
  m.intercept = std::log(prob / (1.0 - prob));
  m.converged = true;
  return m;
}

// Nuisances when the dataset carries no externals (trial-only estimation):
// the external-facing components are placeholders that the trial-only
// influence function never reads.
NuisanceSet fit_nuisances_trial_only(const std::vector<const SubjectRecord*>& recs, double p_r1,
                                     const NuisanceOptions& options) {
  std::vector<const SubjectRecord*> all = recs;
  NuisanceSet ns = [&] {
    // reuse fit_nuisances by lending it a fake external? simpler to fit parts
    NuisanceSet out;
    std::vector<const SubjectRecord*> r1a1, r1a0;
    for (const auto* rec : all) (rec->a == 1 ? r1a1 : r1a0).push_back(rec);
    if (r1a1.empty() || r1a0.empty())
      throw FoldError("fold lacks a trial arm: cannot fit treatment-specific survival");
    std::vector<double> time;
    std::vector<int> event;
    const auto survfit = [&](const std::vector<const SubjectRecord*>& part) {
      time.resize(part.size());
      event.resize(part.size());
      Matrix x(part.size(), options.outcomes_intercept_only ? 0 : part.front()->x.size());
      for (std::size_t i = 0; i < part.size(); ++i) {
        time[i] = part[i]->y;
        event[i] = part[i]->delta;
        if (!options.outcomes_intercept_only)
          for (std::size_t j = 0; j < part[i]->x.size(); ++j) x(i, j) = part[i]->x[j];
      }
      return fit_cox(time, event, x);
    };
    out.surv_r1a1 = survfit(r1a1);
    out.surv_r1a0 = survfit(r1a0);
    out.surv_r0 = out.surv_r1a0;
    try {
      out.cens_trial = fit_censoring(all, true, false);
    } catch (const NoCensoringError&) {
      out.cens_trial.constant = true;
    }
    out.cens_ext.constant = true;
    out.pi_r = constant_logistic(0.5);
    {
      std::vector<int> labels(all.size());
      Matrix x(all.size(), options.propensities_intercept_only ? 0 : all.front()->x.size());
      for (std::size_t i = 0; i < all.size(); ++i) {
        labels[i] = all[i]->a;
        if (!options.propensities_intercept_only)
          for (std::size_t j = 0; j < all[i]->x.size(); ++j) x(i, j) = all[i]->x[j];
      }
      out.pi_a = fit_logistic(x, labels);
    }
    return out;
  }();
  ns.p_r1 = p_r1;
  return ns;
}

}  // namespace

PipelineResult run_pipeline(const Dataset& data, double tau, const EstimateOptions& options) {
  data.validate();
  if (data.count(1, 1) == 0 || data.count(1, 0) == 0)
    throw ContractError("estimation needs at least one trial-treated and one trial-control record");
  if (!(tau > 0.0)) throw ContractError("tau must be positive");

  PipelineResult res;
  res.n_trial = data.count_trial();
  res.n_external = data.count_external();
  res.has_external = res.n_external > 0;

  const TimeGrid grid = event_time_grid(data, tau);
  const FoldPlan plan = assign_folds(data, options.folds, options.mode,
                                     derive_seed(options.seed, 77));
  const double p_r1 =
      res.has_external
          ? static_cast<double>(res.n_trial) / static_cast<double>(data.records.size())
          : 1.0;

  // one nuisance set per fold, each fit on the fold's complement
  // (single-split: one set fit on fold 0, evaluated everywhere)
  const int n_sets = plan.mode == FoldMode::SingleSplit ? 1 : options.folds;
  std::vector<NuisanceSet> sets(static_cast<std::size_t>(n_sets));
  for (int f = 0; f < n_sets; ++f) {
    std::vector<const SubjectRecord*> fit_records;
    for (std::size_t i = 0; i < data.records.size(); ++i) {
      const bool in_fit = plan.mode == FoldMode::SingleSplit ? plan.fold_of[i] == 0
                                                             : plan.fold_of[i] != f;
      if (in_fit) fit_records.push_back(&data.records[i]);
    }
    sets[static_cast<std::size_t>(f)] =
        res.has_external ? fit_nuisances(fit_records, p_r1, options.nuisance)
                         : fit_nuisances_trial_only(fit_records, p_r1, options.nuisance);
  }

  std::vector<const NuisanceSet*> ns_of(data.records.size());
  for (std::size_t i = 0; i < data.records.size(); ++i)
    ns_of[i] = plan.mode == FoldMode::SingleSplit
                   ? &sets[0]
                   : &sets[static_cast<std::size_t>(plan.fold_of[i])];

  EifContext ctx = build_eif_context(data, grid, ns_of);

  res.memb_by_subject.assign(data.records.size(), 0);
  res.ids.reserve(data.records.size());
  for (const auto& rec : data.records) res.ids.push_back(rec.id);

  if (res.has_external) {
    // pseudo-outcomes on the held-out part: every external in swap mode,
    // the fold-0 complement in single-split mode
    for (std::size_t i = 0; i < data.records.size(); ++i) {
      if (data.records[i].r != 0) continue;
      if (plan.mode == FoldMode::SingleSplit && plan.fold_of[i] == 0) continue;
      res.pseudo.push_back(pseudo_outcome(ctx, data, i));
    }

    ctx.has_selection = true;
    if (options.selection_override == SelectionOverride::All) {
      for (std::size_t i = 0; i < data.records.size(); ++i)
        if (data.records[i].r == 0) res.memb_by_subject[i] = 1;
      std::fill(ctx.pb0.begin(), ctx.pb0.end(), 1.0);
      res.n_borrowed = res.n_external;
    } else if (options.selection_override == SelectionOverride::Empty) {
      std::fill(ctx.pb0.begin(), ctx.pb0.end(), 0.0);
      res.n_borrowed = 0;
    } else {
      SelectorOptions sel = options.selector;
      sel.standardize = options.lambda_rule == LambdaRule::Standardized;
      SelectionResult selres;
      if (options.lambda_fixed) {
        selres = refine_biases(data, res.pseudo, *options.lambda_fixed, sel);
      } else if (options.lambda_rule == LambdaRule::ExactTest) {
        selres = select_comparable_exact(data, res.pseudo, options.selection_alpha,
                                         options.selection_global_z);
      } else if (options.lambda_rule == LambdaRule::Standardized) {
        const double lambda = 2.0 * std::pow(options.selection_z, 1.0 + sel.weight_gamma);
        selres = refine_biases(data, res.pseudo, lambda, sel);
      } else {
        selres = refine_biases(
            data, res.pseudo, select_lambda(res.pseudo, default_lambda_grid(res.pseudo), sel),
            sel);
      }
      res.lambda = selres.lambda;
      res.n_borrowed = selres.n_selected;
      for (std::size_t j = 0; j < selres.subject_index.size(); ++j)
        res.memb_by_subject[selres.subject_index[j]] = selres.selected[j];
      for (std::size_t i = 0; i < data.records.size(); ++i)
        ctx.pb0[i] = selres.prob_model.predict(data.records[i].x);
    }
    for (std::size_t i = 0; i < data.records.size(); ++i) ctx.memb[i] = res.memb_by_subject[i];
  }

  res.influence = integrate_influence(ctx);
  const double n = static_cast<double>(data.records.size());
  double aipw = 0.0, acw = 0.0, adapt = 0.0;
  for (const auto& row : res.influence) {
    aipw += row.phi1 - row.phi0_rct;
    acw += row.phi1 - row.phi0_full;
    adapt += row.phi1 - row.phi0_sel;
  }
  res.theta_aipw = aipw / n;
  res.theta_acw = res.has_external ? acw / n : std::numeric_limits<double>::quiet_NaN();
  res.theta_adapt = res.has_external ? adapt / n : std::numeric_limits<double>::quiet_NaN();
  return res;
}

namespace {

Dataset stratified_resample(const Dataset& data, Rng& rng) {
  Dataset out;
  out.covariate_names = data.covariate_names;
  out.records.reserve(data.records.size());
  for (int cell = 0; cell < 4; ++cell) {
    const int r = cell / 2, a = cell % 2;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < data.records.size(); ++i)
      if (data.records[i].r == r && data.records[i].a == a) idx.push_back(i);
    for (std::size_t k = 0; k < idx.size(); ++k)
      out.records.push_back(data.records[idx[rng.index(idx.size())]]);
  }
  for (std::size_t i = 0; i < out.records.size(); ++i)
    out.records[i].id = std::to_string(i + 1);
  return out;
}

}  // namespace

BootstrapResult bootstrap_pipeline(const Dataset& data, double tau,
                                   const EstimateOptions& options,
                                   const PipelineResult& original) {
  const int b = options.bootstrap;
  if (b < 2) throw ContractError("bootstrap needs B >= 2");

  EstimateOptions boot = options;
  boot.bootstrap = 0;
  // Resamples rerun the whole pipeline; the penalty level stays at the
  // originally selected value (the exact-test level is a constant already).
  if (!boot.refit_lambda_in_bootstrap && original.has_external &&
      options.selection_override == SelectionOverride::None && !options.lambda_fixed &&
      options.lambda_rule == LambdaRule::BicGrid)
    boot.lambda_fixed = original.lambda;

  BootstrapResult out;
  out.thetas.assign(static_cast<std::size_t>(b), {});
  parallel_for(static_cast<std::size_t>(b), options.threads, [&](std::size_t rep) {
    Rng rng(derive_seed(options.seed, 0x9B000000ULL + rep));
    for (int attempt = 0;; ++attempt) {
      Dataset resample = stratified_resample(data, rng);
      try {
        const PipelineResult r = run_pipeline(resample, tau, boot);
        out.thetas[rep] = {r.theta_aipw, r.theta_acw, r.theta_adapt};
        return;
      } catch (const Error& e) {
        if (attempt >= 9)
          throw ResampleError("bootstrap resample kept failing after 10 attempts: " +
                              std::string(e.what()));
      }
    }
  });

  for (int k = 0; k < 3; ++k) {
    double mean = 0.0;
    for (const auto& row : out.thetas) mean += row[static_cast<std::size_t>(k)];
    mean /= static_cast<double>(b);
    double ss = 0.0;
    for (const auto& row : out.thetas) {
      const double d = row[static_cast<std::size_t>(k)] - mean;
      ss += d * d;
    }
    out.se[static_cast<std::size_t>(k)] = std::sqrt(ss / static_cast<double>(b - 1));
  }
  return out;
}

std::pair<double, std::pair<double, double>> bootstrap(const Dataset& data, EstimatorKind kind,
                                                       int b, double tau, std::uint64_t seed,
                                                       EstimateOptions options) {
  options.bootstrap = b;
  options.seed = seed;
  const PipelineResult original = run_pipeline(data, tau, options);
  const BootstrapResult boot = bootstrap_pipeline(data, tau, options, original);
  const double se = boot.se[static_cast<std::size_t>(kind)];
  const double z = normal_quantile(0.5 + options.ci_level / 2.0);
  const double theta = original.theta(kind);
  return {se, {theta - z * se, theta + z * se}};
}

EstimateReport estimate(const Dataset& data, EstimatorKind kind, double tau,
                        const EstimateOptions& options) {
  if (kind != EstimatorKind::Aipw && data.count_external() == 0)
    throw ContractError(to_string(kind) + " needs external controls in the dataset");

  const PipelineResult pipeline = run_pipeline(data, tau, options);
  EstimateReport report;
  report.kind = kind;
  report.theta_hat = pipeline.theta(kind);
  report.tau = tau;
  report.level = options.ci_level;
  report.n_trial = pipeline.n_trial;
  report.n_external = pipeline.n_external;
  report.n_borrowed = kind == EstimatorKind::Adapt  ? pipeline.n_borrowed
                      : kind == EstimatorKind::Acw ? pipeline.n_external
                                                   : 0;
  if (kind == EstimatorKind::Adapt) report.lambda = pipeline.lambda;
  report.seed = options.seed;

  if (options.bootstrap >= 2) {
    const BootstrapResult boot = bootstrap_pipeline(data, tau, options, pipeline);
    report.se = boot.se[static_cast<std::size_t>(kind)];
  }
  const double z = normal_quantile(0.5 + options.ci_level / 2.0);
  report.ci_lower = report.theta_hat - z * report.se;
  report.ci_upper = report.theta_hat + z * report.se;
  return report;
}

EstimateReport estimate_aipw(const Dataset& data, double tau, const EstimateOptions& options) {
  return estimate(data, EstimatorKind::Aipw, tau, options);
}
EstimateReport estimate_acw(const Dataset& data, double tau, const EstimateOptions& options) {
  return estimate(data, EstimatorKind::Acw, tau, options);
}
EstimateReport estimate_adapt(const Dataset& data, double tau, const EstimateOptions& options) {
  return estimate(data, EstimatorKind::Adapt, tau, options);
}

std::string to_json(const EstimateReport& report) {
  nlohmann::json j;
  j["kind"] = to_string(report.kind);
  j["theta_hat"] = report.theta_hat;
  j["se"] = report.se;
  j["ci"] = {report.ci_lower, report.ci_upper};
  j["level"] = report.level;
  j["tau"] = report.tau;
  j["n_trial"] = report.n_trial;
  j["n_external"] = report.n_external;
  j["n_borrowed"] = report.n_borrowed;
  if (report.lambda) j["lambda"] = *report.lambda;
  j["seed"] = report.seed;
  return j.dump(2) + "\n";
}

}  // namespace survborrow
