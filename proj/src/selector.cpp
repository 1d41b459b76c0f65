#include "survborrow/selector.hpp"

#include <algorithm>
#include <cmath>

#include "survborrow/cox.hpp"

namespace survborrow {

PenaltyKind penalty_kind_from_string(const std::string& name) {
  if (name == "adaptive-lasso" || name == "alasso") return PenaltyKind::AdaptiveLasso;
  if (name == "scad") return PenaltyKind::Scad;
  if (name == "mcp") return PenaltyKind::Mcp;
  throw ConfigError("unknown penalty kind '" + name + "'");
}

std::string to_string(PenaltyKind kind) {
  switch (kind) {
    case PenaltyKind::AdaptiveLasso: return "adaptive-lasso";
    case PenaltyKind::Scad: return "scad";
    case PenaltyKind::Mcp: return "mcp";
  }
  return "?";
}

PseudoOutcome pseudo_outcome(const EifContext& ctx, const Dataset& data, std::size_t i) {
  if (ctx.r[i] != 0) throw ContractError("pseudo_outcome: subject is not an external control");
  const std::size_t nt = ctx.n_times();
  const double inv = 1.0 / (1.0 - ctx.pi_r[i]);

  PseudoOutcome po;
  po.subject_index = i;
  po.id = data.records[i].id;

  // Moments of xi under the comparable law (own outcome drawn from the
  // trial control curve): mean mu0 and the variance of the inverse-weighted
  // follow-up integral, scaled by 1/(1 - pi_R).
  double k0_plug = 0.0;
  double eg = 0.0, eg2 = 0.0, prefix = 0.0;
  for (std::size_t k = 0; k + 1 < nt; ++k) {
    const double w = ctx.t[k + 1] - ctx.t[k];
    const double s0t = ctx.at(ctx.s0T, i, k);
    const double s0e = ctx.at(ctx.s0E, i, k);
    const double scv = ctx.at(ctx.sc, i, k);
    const double ind = ctx.y[i] > ctx.t[k] ? 1.0 : 0.0;

    po.k1 += w * s0t;
    k0_plug += w * s0e;
    po.k0 += w * (s0e + inv * (ind / scv - s0e) + inv * ctx.at(ctx.mg, i, k));

    const double wk = w / scv;
    const double sy = s0t * scv;  // P(Y > t_k) under the comparable law
    eg += wk * sy;
    eg2 += wk * sy * (2.0 * prefix + wk);
    prefix += wk;
  }
  po.xi = po.k1 - po.k0;
  po.mu0 = po.k1 - (k0_plug + inv * (po.k1 - k0_plug));
  const double var_g = std::max(eg2 - eg * eg, 0.0);
  po.se = std::max(inv * std::sqrt(var_g), 1e-6);

  // exact two-sided tail probability of Y under the comparable law:
  // P(Y < y) = 1 - S_0(y- | X, R=1) * S^C(y- | X, R=0)
  const double y = ctx.y[i];
  std::size_t k = 0;
  while (k + 1 < nt && ctx.t[k + 1] < y) ++k;  // largest grid time < y
  const double surv_left = ctx.at(ctx.s0T, i, k) * ctx.at(ctx.sc, i, k);
  const double p_early = 1.0 - surv_left;
  po.p_value = std::min(1.0, 2.0 * std::min(p_early, surv_left));
  return po;
}

std::vector<PseudoOutcome> pseudo_outcomes(const EifContext& ctx, const Dataset& data) {
  std::vector<PseudoOutcome> out;
  for (std::size_t i = 0; i < ctx.n_subjects(); ++i)
    if (ctx.r[i] == 0) out.push_back(pseudo_outcome(ctx, data, i));
  return out;
}

double adaptive_weight(const PseudoOutcome& po, const SelectorOptions& opts) {
  const double g = opts.weight_gamma;
  double w = 1.0 / std::pow(std::max(std::abs(po.xi), 1e-6), g);
  if (opts.standardize) w *= std::pow(po.se, 1.0 + g);
  return w;
}

double penalty_value(double b, double lambda, PenaltyKind kind, double weight, double scad_a,
                     double mcp_gamma) {
  const double lam = lambda * weight;
  const double t = std::abs(b);
  switch (kind) {
    case PenaltyKind::AdaptiveLasso:
      return lam * t;
    case PenaltyKind::Scad: {
      if (!(scad_a > 2.0)) throw DomainError("SCAD requires a > 2");
      if (t <= lam) return lam * t;
      if (t <= scad_a * lam)
        return (2.0 * scad_a * lam * t - t * t - lam * lam) / (2.0 * (scad_a - 1.0));
      return lam * lam * (scad_a + 1.0) / 2.0;
    }
    case PenaltyKind::Mcp: {
      if (!(mcp_gamma > 1.0)) throw DomainError("MCP requires gamma > 1");
      if (t <= mcp_gamma * lam) return lam * t - t * t / (2.0 * mcp_gamma);
      return mcp_gamma * lam * lam / 2.0;
    }
  }
  throw DomainError("unknown penalty kind");
}

double threshold(double xi, double lambda, PenaltyKind kind, double weight, double scad_a,
                 double mcp_gamma) {
  if (!(lambda >= 0.0)) throw DomainError("lambda must be nonnegative");
  if (!(weight > 0.0)) throw DomainError("weight must be positive");
  const double lam = lambda * weight;
  const double z = std::abs(xi);
  const double sgn = xi < 0.0 ? -1.0 : 1.0;
  switch (kind) {
    case PenaltyKind::AdaptiveLasso:
      // stationarity of (xi-b)^2 + lam|b|
      return sgn * std::max(0.0, z - lam / 2.0);
    case PenaltyKind::Scad: {
      if (!(scad_a > 2.0)) throw DomainError("SCAD requires a > 2");
      if (z <= lam * 1.5) return sgn * std::max(0.0, z - lam / 2.0);
      if (z <= scad_a * lam)
        return sgn * (2.0 * (scad_a - 1.0) * z - scad_a * lam) / (2.0 * scad_a - 3.0);
      return xi;
    }
    case PenaltyKind::Mcp: {
      if (!(mcp_gamma > 1.0)) throw DomainError("MCP requires gamma > 1");
      if (z <= mcp_gamma * lam)
        return sgn * mcp_gamma * std::max(0.0, 2.0 * z - lam) / (2.0 * mcp_gamma - 1.0);
      return xi;
    }
  }
  throw DomainError("unknown penalty kind");
}

namespace {

std::vector<double> refined_values(const std::vector<PseudoOutcome>& pseudo, double lambda,
                                   const SelectorOptions& opts) {
  std::vector<double> b(pseudo.size());
  for (std::size_t i = 0; i < pseudo.size(); ++i)
    b[i] = threshold(pseudo[i].xi, lambda, opts.kind, adaptive_weight(pseudo[i], opts),
                     opts.scad_a, opts.mcp_gamma);
  return b;
}

double mad_sigma(const std::vector<PseudoOutcome>& pseudo) {
  std::vector<double> v(pseudo.size());
  for (std::size_t i = 0; i < pseudo.size(); ++i) v[i] = pseudo[i].xi;
  const auto median_of = [](std::vector<double> w) {
    const std::size_t m = w.size() / 2;
    std::nth_element(w.begin(), w.begin() + m, w.end());
    double hi = w[m];
    if (w.size() % 2 == 0) {
      std::nth_element(w.begin(), w.begin() + m - 1, w.end());
      return 0.5 * (hi + w[m - 1]);
    }
    return hi;
  };
  const double med = median_of(v);
  for (auto& x : v) x = std::abs(x - med);
  return 1.4826 * median_of(v);
}

}  // namespace

namespace {

// Wald test of the source indicator in a Cox fit on the pooled controls
// (trial controls plus the still-selected externals), adjusted for X.
bool drift_in_survivors(const Dataset& data, const std::vector<PseudoOutcome>& pseudo,
                        const std::vector<double>& b_tilde, double z_cut) {
  std::vector<const SubjectRecord*> pool;
  for (const auto& rec : data.records)
    if (rec.r == 1 && rec.a == 0) pool.push_back(&rec);
  const std::size_t n_trial_controls = pool.size();
  for (std::size_t k = 0; k < pseudo.size(); ++k)
    if (b_tilde[k] == 0.0) pool.push_back(&data.records[pseudo[k].subject_index]);
  if (n_trial_controls == 0 || pool.size() == n_trial_controls) return false;

  const std::size_t p = data.covariate_names.size();
  std::vector<double> time(pool.size());
  std::vector<int> event(pool.size());
  Matrix x(pool.size(), p + 1);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    time[i] = pool[i]->y;
    event[i] = pool[i]->delta;
    for (std::size_t j = 0; j < p; ++j) x(i, j) = pool[i]->x[j];
    x(i, p) = pool[i]->r == 0 ? 1.0 : 0.0;
  }
  try {
    const CoxModel fit = fit_cox(time, event, x);
    const double se = fit.coefficient_se[p];
    if (!(se > 0.0)) return false;
    return std::abs(fit.coefficients[p]) / se > z_cut;
  } catch (const SeparationError&) {
    return true;  // a diverging source effect is extreme drift
  } catch (const Error&) {
    return false;  // untestable; keep the subject-level decision
  }
}

void finish_selection(const Dataset& data, const std::vector<PseudoOutcome>& pseudo,
                      SelectionResult& res) {
  res.subject_index.reserve(pseudo.size());
  for (std::size_t i = 0; i < pseudo.size(); ++i) {
    res.subject_index.push_back(pseudo[i].subject_index);
    res.ids.push_back(pseudo[i].id);
    res.xi.push_back(pseudo[i].xi);
    const bool zero = res.b_tilde[i] == 0.0;
    res.selected.push_back(zero ? 1 : 0);
    res.n_selected += zero;
  }

  // P(b0 = 0 | X, R=0) by logistic regression of membership on X, with the
  // constant empirical proportion as the separation fallback
  res.prob_model.constant = true;
  res.prob_model.prob =
      static_cast<double>(res.n_selected) / static_cast<double>(pseudo.size());
  if (res.n_selected > 0 && res.n_selected < pseudo.size()) {
    const std::size_t p = data.covariate_names.size();
    Matrix x(pseudo.size(), p);
    std::vector<int> labels(pseudo.size());
    for (std::size_t i = 0; i < pseudo.size(); ++i) {
      const auto& rec = data.records[pseudo[i].subject_index];
      for (std::size_t j = 0; j < p; ++j) x(i, j) = rec.x[j];
      labels[i] = res.selected[i];
    }
    try {
      res.prob_model.lm = fit_logistic(x, labels);
      res.prob_model.constant = false;
    } catch (const Error&) {
      // keep the constant fallback
    }
  }
}

}  // namespace

SelectionResult refine_biases(const Dataset& data, const std::vector<PseudoOutcome>& pseudo,
                              double lambda, const SelectorOptions& opts) {
  if (pseudo.empty()) throw ContractError("refine_biases: no pseudo-outcomes");
  SelectionResult res;
  res.lambda = lambda;
  res.kind = opts.kind;
  res.b_tilde = refined_values(pseudo, lambda, opts);
  finish_selection(data, pseudo, res);
  return res;
}

SelectionResult select_comparable_exact(const Dataset& data,
                                        const std::vector<PseudoOutcome>& pseudo, double alpha,
                                        double global_z_cut) {
  if (pseudo.empty()) throw ContractError("select_comparable_exact: no pseudo-outcomes");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
  const std::size_t n = pseudo.size();

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return pseudo[i].p_value < pseudo[j].p_value; });
  std::size_t n_excluded = 0;
  for (std::size_t k = n; k-- > 0;) {
    if (pseudo[order[k]].p_value <=
        alpha * static_cast<double>(k + 1) / static_cast<double>(n)) {
      n_excluded = k + 1;
      break;
    }
  }

  SelectionResult res;
  res.lambda = alpha;
  res.b_tilde.assign(n, 0.0);
  for (std::size_t k = 0; k < n_excluded; ++k)
    res.b_tilde[order[k]] = pseudo[order[k]].xi == 0.0 ? 1e-12 : pseudo[order[k]].xi;

  // Dataset-level drift in the survivors: a Cox source-effect test on the
  // pooled controls, adjusted for the covariates. Diffuse drift that the
  // subject-level tests cannot attribute leaves no certifiable comparable
  // subset, so a rejection refines the whole set away.
  if (n_excluded < n && drift_in_survivors(data, pseudo, res.b_tilde, global_z_cut)) {
    for (std::size_t k = 0; k < n; ++k)
      if (res.b_tilde[k] == 0.0) res.b_tilde[k] = pseudo[k].xi == 0.0 ? 1e-12 : pseudo[k].xi;
  }
  finish_selection(data, pseudo, res);
  return res;
}

double select_lambda(const std::vector<PseudoOutcome>& pseudo,
                     const std::vector<double>& lambda_grid, const SelectorOptions& opts) {
  if (lambda_grid.empty()) throw ContractError("select_lambda: empty grid");
  for (std::size_t k = 1; k < lambda_grid.size(); ++k)
    if (!(lambda_grid[k] > lambda_grid[k - 1]))
      throw ContractError("select_lambda: grid must be ascending");

  const double sigma = mad_sigma(pseudo);
  const double sigma2 = sigma * sigma;
  const double logn = std::log(static_cast<double>(pseudo.size()));

  double best_lambda = lambda_grid.front();
  double best_bic = 0.0;
  bool first = true;
  for (double lam : lambda_grid) {
    const auto b = refined_values(pseudo, lam, opts);
    double rss = 0.0;
    std::size_t nonzero = 0;
    for (std::size_t i = 0; i < pseudo.size(); ++i) {
      const double e = pseudo[i].xi - b[i];
      rss += e * e;
      nonzero += b[i] != 0.0;
    }
    const double bic = rss + sigma2 * logn * static_cast<double>(nonzero);
    // ties go to the larger lambda (more borrowing)
    if (first || bic <= best_bic) {
      best_bic = bic;
      best_lambda = lam;
      first = false;
    }
  }
  return best_lambda;
}

std::vector<double> default_lambda_grid(const std::vector<PseudoOutcome>& pseudo) {
  double sigma = mad_sigma(pseudo);
  if (!(sigma > 0.0)) sigma = 1.0;
  std::vector<double> grid(50);
  const double lo = std::log(1e-3 * sigma);
  const double hi = std::log(10.0 * sigma);
  for (std::size_t k = 0; k < grid.size(); ++k)
    grid[k] = std::exp(lo + (hi - lo) * static_cast<double>(k) /
                                static_cast<double>(grid.size() - 1));
  return grid;
}

}  // namespace survborrow
