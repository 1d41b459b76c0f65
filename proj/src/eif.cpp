#include "survborrow/eif.hpp"

#include <algorithm>
#include <cmath>

namespace survborrow {

namespace {

constexpr double kEps = 1e-3;
constexpr double kRatioFloor = 1e-3;
constexpr double kRatioCeil = 1e3;

double floor_den(double v) { return std::max(v, kEps); }

}  // namespace

EifContext make_context_shell(const Dataset& data, const TimeGrid& grid) {
  grid.validate();
  EifContext ctx;
  ctx.tau = grid.tau;
  ctx.t.reserve(grid.times.size() + 1);
  ctx.t.push_back(0.0);
  ctx.t.insert(ctx.t.end(), grid.times.begin(), grid.times.end());

  const std::size_t n = data.records.size();
  ctx.y.resize(n);
  ctx.delta.resize(n);
  ctx.a.resize(n);
  ctx.r.resize(n);
  std::size_t n_trial = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& rec = data.records[i];
    ctx.y[i] = rec.y;
    ctx.delta[i] = rec.delta;
    ctx.a[i] = rec.a;
    ctx.r[i] = rec.r;
    n_trial += rec.r == 1;
  }
  ctx.p_r1 = n == 0 ? 0.5 : static_cast<double>(n_trial) / static_cast<double>(n);

  ctx.pi_a.assign(n, 0.5);
  ctx.pi_r.assign(n, ctx.p_r1);
  ctx.q_r.assign(n, 1.0);
  ctx.memb.assign(n, 1);
  ctx.pb0.assign(n, 1.0);

  const std::size_t nm = n * ctx.t.size();
  ctx.s1.assign(nm, 1.0);
  ctx.s0T.assign(nm, 1.0);
  ctx.s0E.assign(nm, 1.0);
  ctx.sc.assign(nm, 1.0);
  ctx.mg.assign(nm, 0.0);
  return ctx;
}

namespace {

// Baseline cumulative hazard of a Cox model at every grid time.
std::vector<double> baseline_on_grid(const CoxModel& m, const std::vector<double>& t, bool left) {
  std::vector<double> out(t.size(), 0.0);
  std::size_t j = 0;
  double cum = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    while (j < m.step_times.size() &&
           (left ? m.step_times[j] < t[k] : m.step_times[j] <= t[k])) {
      cum += m.step_increments[j];
      ++j;
    }
    out[k] = cum;
  }
  return out;
}

// Censoring-model baseline steps up to tau, paired with the survival-curve
// baseline cumulative hazard at each step (right-continuous).
struct StepPairs {
  std::vector<double> time;
  std::vector<double> c_inc;   // baseline hazard increment of the censoring model
  std::vector<double> c_cum;   // censoring baseline cum hazard including the step
  std::vector<double> s_cum;   // survival-curve baseline cum hazard at the step
};

StepPairs pair_steps(const CensoringModel& cens, const CoxModel& surv, double tau) {
  StepPairs out;
  if (cens.constant) return out;
  const auto& ct = cens.cox.step_times;
  std::size_t sj = 0;
  double scum = 0.0;
  for (std::size_t j = 0; j < ct.size(); ++j) {
    if (ct[j] > tau) break;
    while (sj < surv.step_times.size() && surv.step_times[sj] <= ct[j]) {
      scum += surv.step_increments[sj];
      ++sj;
    }
    out.time.push_back(ct[j]);
    out.c_inc.push_back(cens.cox.step_increments[j]);
    out.c_cum.push_back(cens.cox.step_cumhaz[j]);
    out.s_cum.push_back(scum);
  }
  return out;
}

struct FoldCache {
  const NuisanceSet* ns = nullptr;
  std::vector<double> cum_s1, cum_s0T, cum_s0E;      // at grid times, right-continuous
  std::vector<double> cumL_censT, cumL_censE;        // at grid times, left limit
  StepPairs steps_t_s1, steps_t_s0T, steps_e_s0E;    // martingale step tables
};

}  // namespace

EifContext build_eif_context(const Dataset& data, const TimeGrid& grid,
                             const std::vector<const NuisanceSet*>& ns_of) {
  EifContext ctx = make_context_shell(data, grid);
  const std::size_t n = ctx.n_subjects();
  const std::size_t nt = ctx.n_times();
  if (ns_of.size() != n) throw ContractError("build_eif_context: one nuisance set per subject");

  // cache grid walks per distinct nuisance set
  std::vector<FoldCache> caches;
  std::vector<std::size_t> cache_of(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = caches.size();
    for (std::size_t k = 0; k < caches.size(); ++k)
      if (caches[k].ns == ns_of[i]) {
        c = k;
        break;
      }
    if (c == caches.size()) {
      FoldCache fc;
      fc.ns = ns_of[i];
      fc.cum_s1 = baseline_on_grid(fc.ns->surv_r1a1, ctx.t, false);
      fc.cum_s0T = baseline_on_grid(fc.ns->surv_r1a0, ctx.t, false);
      fc.cum_s0E = baseline_on_grid(fc.ns->surv_r0, ctx.t, false);
      fc.cumL_censT = fc.ns->cens_trial.constant
                          ? std::vector<double>(nt, 0.0)
                          : baseline_on_grid(fc.ns->cens_trial.cox, ctx.t, true);
      fc.cumL_censE = fc.ns->cens_ext.constant ? std::vector<double>(nt, 0.0)
                                               : baseline_on_grid(fc.ns->cens_ext.cox, ctx.t, true);
      fc.steps_t_s1 = pair_steps(fc.ns->cens_trial, fc.ns->surv_r1a1, ctx.tau);
      fc.steps_t_s0T = pair_steps(fc.ns->cens_trial, fc.ns->surv_r1a0, ctx.tau);
      fc.steps_e_s0E = pair_steps(fc.ns->cens_ext, fc.ns->surv_r0, ctx.tau);
      caches.push_back(std::move(fc));
    }
    cache_of[i] = c;
  }

  for (std::size_t i = 0; i < n; ++i) {
    const FoldCache& fc = caches[cache_of[i]];
    const NuisanceSet& ns = *fc.ns;
    const auto& x = data.records[i].x;
    const std::size_t off = i * nt;

    ctx.pi_a[i] = clamp_prob(ns.pi_a.predict(x), kEps);
    ctx.pi_r[i] = clamp_prob(ns.pi_r.predict(x), kEps);
    ctx.q_r[i] = ctx.pi_r[i] / (1.0 - ctx.pi_r[i]);

    const double risk_s1 = std::exp(ns.surv_r1a1.linear_predictor(x));
    const double risk_s0T = std::exp(ns.surv_r1a0.linear_predictor(x));
    const double risk_s0E = std::exp(ns.surv_r0.linear_predictor(x));
    for (std::size_t k = 0; k < nt; ++k) {
      ctx.s1[off + k] = std::exp(-fc.cum_s1[k] * risk_s1);
      ctx.s0T[off + k] = std::exp(-fc.cum_s0T[k] * risk_s0T);
      ctx.s0E[off + k] = std::exp(-fc.cum_s0E[k] * risk_s0E);
    }

    // own-source censoring survival (left limit) on the grid
    const bool trial = ctx.r[i] == 1;
    const CensoringModel& cens = trial ? ns.cens_trial : ns.cens_ext;
    const std::vector<double>& cumL = trial ? fc.cumL_censT : fc.cumL_censE;
    double risk_c = 1.0;
    if (!cens.constant)
      risk_c = std::exp(cens.cox.linear_predictor(cens.features(x, ctx.a[i])));
    for (std::size_t k = 0; k < nt; ++k)
      ctx.sc[off + k] =
          cens.constant ? 1.0 : std::max(kEps, std::min(1.0, std::exp(-cumL[k] * risk_c)));

    // martingale transform for the subject's own role
    const StepPairs& sp = trial ? (ctx.a[i] == 1 ? fc.steps_t_s1 : fc.steps_t_s0T) : fc.steps_e_s0E;
    const std::vector<double>& role_cum = trial ? (ctx.a[i] == 1 ? fc.cum_s1 : fc.cum_s0T)
                                                : fc.cum_s0E;
    const double role_risk = trial ? (ctx.a[i] == 1 ? risk_s1 : risk_s0T) : risk_s0E;
    const CoxModel& role_model = trial ? (ctx.a[i] == 1 ? ns.surv_r1a1 : ns.surv_r1a0)
                                       : ns.surv_r0;

    double jump = 0.0;
    if (ctx.delta[i] == 0 && !cens.constant) {
      const double sc_y =
          std::max(kEps, std::min(1.0, cens.survival(x, ctx.a[i], ctx.y[i])));
      const double s_y = floor_den(role_model.survival(x, ctx.y[i]));
      jump = 1.0 / (sc_y * s_y);
    } else if (ctx.delta[i] == 0 && cens.constant) {
      jump = 1.0 / floor_den(role_model.survival(x, ctx.y[i]));
    }

    std::size_t j = 0;
    double comp = 0.0;
    for (std::size_t k = 0; k < nt; ++k) {
      while (j < sp.time.size() && sp.time[j] <= std::min(ctx.t[k], ctx.y[i])) {
        const double h = 1.0 - std::exp(-sp.c_inc[j] * risk_c);
        const double sc_j = std::max(kEps, std::min(1.0, std::exp(-sp.c_cum[j] * risk_c)));
        const double s_j = floor_den(std::exp(-sp.s_cum[j] * role_risk));
        comp += h / (sc_j * s_j);
        ++j;
      }
      const double role_s = std::exp(-role_cum[k] * role_risk);
      const double jump_now = (ctx.delta[i] == 0 && ctx.y[i] <= ctx.t[k]) ? jump : 0.0;
      ctx.mg[off + k] = role_s * (jump_now - comp);
    }
  }
  return ctx;
}

double variance_ratio_r(const EifContext& ctx, std::size_t i, std::size_t k) {
  const double st = ctx.at(ctx.s0T, i, k);
  const double se = ctx.at(ctx.s0E, i, k);
  const double num = st * (1.0 - st);
  const double den = se * (1.0 - se);
  if (den < 1e-12) return num < 1e-12 ? 1.0 : kRatioCeil;
  return std::clamp(num / den, kRatioFloor, kRatioCeil);
}

double pooling_denominator_d(const EifContext& ctx, std::size_t i, std::size_t k) {
  return variance_ratio_r(ctx, i, k) + (1.0 - ctx.pi_a[i]) * ctx.q_r[i];
}

double phi_s1(const EifContext& ctx, std::size_t i, std::size_t k) {
  if (ctx.r[i] == 0) return 0.0;
  const double p = ctx.p_r1;
  const double pa = ctx.pi_a[i];
  double res = ctx.at(ctx.s1, i, k) * (1.0 - ctx.a[i] / pa) / p;
  if (ctx.a[i] == 1) {
    if (ctx.y[i] > ctx.t[k]) res += 1.0 / (p * pa * ctx.at(ctx.sc, i, k));
    res += ctx.at(ctx.mg, i, k) / (p * pa);
  }
  return res;
}

double phi_s0_full(const EifContext& ctx, std::size_t i, std::size_t k) {
  const double p = ctx.p_r1;
  const double q = ctx.q_r[i];
  const double rr = variance_ratio_r(ctx, i, k);
  const double d = rr + (1.0 - ctx.pi_a[i]) * q;
  const double s0t = ctx.at(ctx.s0T, i, k);
  if (ctx.r[i] == 1) {
    double res = s0t * (q * (ctx.a[i] - ctx.pi_a[i]) + rr) / (p * d);
    if (ctx.a[i] == 0) {
      if (ctx.y[i] > ctx.t[k]) res += q / (p * d * ctx.at(ctx.sc, i, k));
      res += q * ctx.at(ctx.mg, i, k) / (p * d);
    }
    return res;
  }
  double res = -s0t * rr * q / (p * d);
  if (ctx.y[i] > ctx.t[k]) res += q * rr / (p * d * ctx.at(ctx.sc, i, k));
  res += q * rr * ctx.at(ctx.mg, i, k) / (p * d);
  return res;
}

double phi_s0_trial_only(const EifContext& ctx, std::size_t i, std::size_t k) {
  if (ctx.r[i] == 0) return 0.0;
  const double p = ctx.p_r1;
  const double pa = ctx.pi_a[i];
  double res = (ctx.a[i] - pa) * ctx.at(ctx.s0T, i, k) / (p * (1.0 - pa));
  if (ctx.a[i] == 0) {
    if (ctx.y[i] > ctx.t[k]) res += 1.0 / (p * (1.0 - pa) * ctx.at(ctx.sc, i, k));
    res += ctx.at(ctx.mg, i, k) / (p * (1.0 - pa));
  }
  return res;
}

double phi_s0_selective(const EifContext& ctx, std::size_t i, std::size_t k) {
  if (!ctx.has_selection)
    throw ContractError("phi_s0_selective: selection inputs are missing");
  const double p = ctx.p_r1;
  const double q = ctx.q_r[i];
  const double rr = variance_ratio_r(ctx, i, k);
  const double pb = ctx.pb0[i];
  const double d = rr * pb + (1.0 - ctx.pi_a[i]) * q;
  const double s0t = ctx.at(ctx.s0T, i, k);
  if (ctx.r[i] == 1) {
    double res = s0t * (q * (ctx.a[i] - ctx.pi_a[i]) + rr * pb) / (p * d);
    if (ctx.a[i] == 0) {
      if (ctx.y[i] > ctx.t[k]) res += q / (p * d * ctx.at(ctx.sc, i, k));
      res += q * ctx.at(ctx.mg, i, k) / (p * d);
    }
    return res;
  }
  if (ctx.memb[i] == 0) return 0.0;
  double res = -s0t * rr * q / (p * d);
  if (ctx.y[i] > ctx.t[k]) res += q * rr / (p * d * ctx.at(ctx.sc, i, k));
  res += q * rr * ctx.at(ctx.mg, i, k) / (p * d);
  return res;
}

std::vector<InfluenceRow> integrate_influence(const EifContext& ctx) {
  const std::size_t n = ctx.n_subjects();
  const std::size_t nt = ctx.n_times();
  std::vector<InfluenceRow> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    InfluenceRow row;
    for (std::size_t k = 0; k + 1 < nt; ++k) {
      const double w = ctx.t[k + 1] - ctx.t[k];
      row.phi1 += w * phi_s1(ctx, i, k);
      row.phi0_full += w * phi_s0_full(ctx, i, k);
      row.phi0_rct += w * phi_s0_trial_only(ctx, i, k);
      if (ctx.has_selection) row.phi0_sel += w * phi_s0_selective(ctx, i, k);
    }
    rows[i] = row;
  }
  return rows;
}

double rmst_integrate(const std::vector<double>& values, const TimeGrid& grid,
                      double value_at_zero) {
  grid.validate();
  if (values.size() != grid.times.size())
    throw ContractError("rmst_integrate: one value per grid time");
  double acc = value_at_zero * grid.times.front();
  for (std::size_t j = 0; j + 1 < grid.times.size(); ++j)
    acc += values[j] * (grid.times[j + 1] - grid.times[j]);
  return acc;
}

double censoring_martingale_transform(const SubjectRecord& subject, double t,
                                      const std::function<double(double)>& surv_at,
                                      const CensoringModel& cens) {
  const double s_t = surv_at(t);
  double res = 0.0;
  if (subject.delta == 0 && subject.y <= t) {
    const double sc_y = cens.constant
                            ? 1.0
                            : std::max(kEps, std::min(1.0, cens.survival(subject.x, subject.a,
                                                                         subject.y)));
    res += s_t / (sc_y * floor_den(surv_at(subject.y)));
  }
  if (!cens.constant) {
    const auto feat = cens.features(subject.x, subject.a);
    const double risk = std::exp(cens.cox.linear_predictor(feat));
    const double cap = std::min(t, subject.y);
    for (std::size_t j = 0; j < cens.cox.step_times.size(); ++j) {
      const double u = cens.cox.step_times[j];
      if (u > cap) break;
      const double h = 1.0 - std::exp(-cens.cox.step_increments[j] * risk);
      const double sc_u = std::max(kEps, std::min(1.0, std::exp(-cens.cox.step_cumhaz[j] * risk)));
      res -= h / (sc_u * floor_den(surv_at(u))) * s_t;
    }
  }
  return res;
}

}  // namespace survborrow
