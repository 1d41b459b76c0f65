#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "survborrow/data.hpp"
#include "survborrow/nuisance.hpp"

namespace survborrow {

// Everything the influence functions need, precomputed on the evaluation
// grid. Arrays are flattened subject-major: index i * n_times() + k, where
// k = 0 is t = 0 and k = n_times()-1 is tau. All probabilities feeding
// denominators are already clamped.
struct EifContext {
  std::vector<double> t;  // 0, grid times..., tau
  double tau = 0.0;
  double p_r1 = 0.5;

  // subject data
  std::vector<double> y;
  std::vector<int> delta, a, r;

  // per-subject scalars
  std::vector<double> pi_a;  // clamped to [eps, 1-eps]
  std::vector<double> pi_r;  // clamped to [eps, 1-eps]
  std::vector<double> q_r;   // pi_r / (1 - pi_r)

  // selective-borrowing inputs
  bool has_selection = false;
  std::vector<std::uint8_t> memb;  // 1(i in comparable set); externals only meaningful
  std::vector<double> pb0;         // P(b0 = 0 | X, R=0) prediction

  // per subject x time
  std::vector<double> s1;   // S_1(t | X, R=1)
  std::vector<double> s0T;  // S_0(t | X, R=1)
  std::vector<double> s0E;  // S_0(t | X, R=0)
  std::vector<double> sc;   // own-source censoring survival P(C >= t | X[, A]), clamped
  std::vector<double> mg;   // own-role censoring martingale transform at t

  std::size_t n_subjects() const { return y.size(); }
  std::size_t n_times() const { return t.size(); }
  double at(const std::vector<double>& v, std::size_t i, std::size_t k) const {
    return v[i * n_times() + k];
  }
};

// Subject layout, grid and neutral fills; callers overwrite the nuisance
// arrays (tests use this to plug in closed-form oracles).
EifContext make_context_shell(const Dataset& data, const TimeGrid& grid);

// Fills the context from fitted nuisance sets; ns_of[i] points at the set
// fitted on the complement of subject i's fold.
EifContext build_eif_context(const Dataset& data, const TimeGrid& grid,
                             const std::vector<const NuisanceSet*>& ns_of);

// Bernoulli-variance ratio r(t,X) and the pooling denominator
// D(t,X) = r + (1 - pi_A) q_R.
double variance_ratio_r(const EifContext& ctx, std::size_t i, std::size_t k);
double pooling_denominator_d(const EifContext& ctx, std::size_t i, std::size_t k);

// Pointwise influence-function terms at grid index k.
double phi_s1(const EifContext& ctx, std::size_t i, std::size_t k);
double phi_s0_full(const EifContext& ctx, std::size_t i, std::size_t k);
double phi_s0_trial_only(const EifContext& ctx, std::size_t i, std::size_t k);
double phi_s0_selective(const EifContext& ctx, std::size_t i, std::size_t k);

// Integrated per-subject contributions of each phi over [0, tau].
struct InfluenceRow {
  double phi1 = 0.0;
  double phi0_full = 0.0;
  double phi0_rct = 0.0;
  double phi0_sel = 0.0;
};
std::vector<InfluenceRow> integrate_influence(const EifContext& ctx);

// Left-Riemann step integral over [0, tau]: values are taken at the grid
// times; value_at_zero covers [0, t_1). Survival integrands start at 1.
double rmst_integrate(const std::vector<double>& values, const TimeGrid& grid,
                      double value_at_zero = 1.0);

// int_0^t dM^C(u)/S^C(u) * S(t)/S(u) for one subject, by counting-process
// summation over the censoring model's baseline steps. Reference path; the
// context builder produces the same values on the grid.
double censoring_martingale_transform(const SubjectRecord& subject, double t,
                                      const std::function<double(double)>& surv_at,
                                      const CensoringModel& cens);

}  // namespace survborrow
