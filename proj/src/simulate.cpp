#include "survborrow/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "survborrow/linalg.hpp"

namespace survborrow {

namespace {

// Intercept of the censoring log-hazard. The covariate slope 0.1 per
// coordinate is fixed; this constant pins the trial censoring fraction at
// beta_c = 1 to roughly 40% under the default design.
constexpr double kCensoringIntercept = -1.73;

double sum(const std::vector<double>& x) {
  return std::accumulate(x.begin(), x.end(), 0.0);
}

}  // namespace

double sample_survival_time(HazardForm form, double rate, double u) {
  if (!(rate > 0.0)) throw DomainError("hazard rate must be positive");
  if (!(u > 0.0 && u < 1.0)) throw DomainError("u must lie in (0,1)");
  if (form == HazardForm::ConstantRate) return -std::log(u) / rate;
  // Lambda(t) = rate * t^2 / 2
  return std::sqrt(-2.0 * std::log(u) / rate);
}

double conditional_rmst(const HazardLaw& law, double tau) {
  if (law.form == HazardForm::ConstantRate) {
    return (1.0 - std::exp(-law.rate * tau)) / law.rate;
  }
  // int_0^tau exp(-c t^2/2) dt = sqrt(pi/(2c)) * erf(tau sqrt(c/2))
  const double c = law.rate;
  return std::sqrt(M_PI / (2.0 * c)) * std::erf(tau * std::sqrt(c / 2.0));
}

HazardLaw event_law(const SimulationConfig& cfg, int a, int r, const std::vector<double>& x,
                    double u, double delta_shift) {
  const double xs = sum(x);
  switch (static_cast<Setting>(cfg.setting)) {
    case Setting::SelectionBias:
      return {HazardForm::ConstantRate, std::exp(-0.5 * a - 0.2 * xs)};
    case Setting::UnmeasuredConfounder:
      return {HazardForm::ConstantRate,
              std::exp(-0.5 * a - 0.2 * xs + 3.0 * (u + (r == 0 ? 1.0 : 0.0)))};
    case Setting::LackOfConcurrency:
      return {HazardForm::ConstantRate,
              std::exp(-0.5 * a - 0.2 * xs + 3.0 * (r == 0 ? delta_shift : 0.0))};
    case Setting::CovariateEffect:
      if (r == 0) return {HazardForm::ConstantRate, std::exp(-0.5 * xs)};
      return {HazardForm::ConstantRate, std::exp(-0.5 * a - 0.2 * xs)};
    case Setting::BaselineHazard:
      if (r == 0) return {HazardForm::LinearInTime, 2.0 * std::exp(-0.2 * xs)};
      return {HazardForm::LinearInTime, std::exp(-0.5 * a - 0.2 * xs)};
  }
  throw ConfigError("unknown setting id " + std::to_string(cfg.setting));
}

HazardLaw censoring_law(const SimulationConfig& cfg, const std::vector<double>& x) {
  return {HazardForm::ConstantRate, std::exp(0.1 * sum(x) + cfg.beta_c + kCensoringIntercept)};
}

double conditional_rmst_diff(const SimulationConfig& cfg, const std::vector<double>& x, double u,
                             double tau) {
  const auto law1 = event_law(cfg, 1, 1, x, u, 0.0);
  const auto law0 = event_law(cfg, 0, 1, x, u, 0.0);
  return conditional_rmst(law1, tau) - conditional_rmst(law0, tau);
}

double calibrate_intercept(double target_mean, const std::function<double(Rng&)>& eta_sampler,
                           std::uint64_t seed, std::size_t n_draws) {
  if (!(target_mean > 0.01 && target_mean < 0.99))
    throw DomainError("target_mean must lie in (0.01, 0.99)");
  if (n_draws < 100000) n_draws = 100000;

  Rng rng(seed);
  std::vector<double> eta(n_draws);
  for (auto& e : eta) e = eta_sampler(rng);

  const auto mc_mean = [&](double alpha) {
    double s = 0.0;
    for (double e : eta) s += expit(alpha + e);
    return s / static_cast<double>(n_draws);
  };

  double lo = -20.0, hi = 20.0;
  double flo = mc_mean(lo) - target_mean;
  double fhi = mc_mean(hi) - target_mean;
  if (flo > 0.0 || fhi < 0.0)
    throw CalibrationError("cannot bracket the intercept on [-20, 20]");
  for (int it = 0; it < 100 && hi - lo > 1e-9; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mc_mean(mid) - target_mean < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

// Draws (x, u) from the trial-conditional distribution by rejection.
struct TrialCovariateSampler {
  const SimulationConfig& cfg;
  double alpha_r;

  template <typename F>
  void draw(Rng& rng, F&& accept_body) const {
    std::vector<double> x(cfg.p);
    for (;;) {
      for (auto& v : x) v = rng.normal();
      const double u = cfg.setting == 2 ? rng.normal() : 0.0;
      double eta = std::accumulate(x.begin(), x.end(), 0.0);
      if (cfg.setting == 2) eta -= u;
      if (rng.bernoulli(expit(alpha_r + eta))) {
        accept_body(x, u);
        return;
      }
    }
  }
};

}  // namespace

CalibratedIntercepts calibrate_config_intercepts(const SimulationConfig& cfg) {
  cfg.validate();
  CalibratedIntercepts out;
  const double target_r =
      static_cast<double>(cfg.n_trial) / static_cast<double>(cfg.n_trial + cfg.n_external);
  const std::size_t p = cfg.p;
  const bool with_u = cfg.setting == 2;
  out.alpha_r = calibrate_intercept(
      target_r,
      [p, with_u](Rng& rng) {
        double eta = 0.0;
        for (std::size_t j = 0; j < p; ++j) eta += rng.normal();
        if (with_u) eta -= rng.normal();
        return eta;
      },
      derive_seed(cfg.seed, 1));

  const double target_a = static_cast<double>(cfg.n_treated) / static_cast<double>(cfg.n_trial);
  TrialCovariateSampler sampler{cfg, out.alpha_r};
  out.alpha_a = calibrate_intercept(
      target_a,
      [&sampler](Rng& rng) {
        double eta = 0.0;
        sampler.draw(rng, [&eta](const std::vector<double>& x, double) {
          eta = std::accumulate(x.begin(), x.end(), 0.0);
        });
        return eta;
      },
      derive_seed(cfg.seed, 2));
  return out;
}

Dataset simulate(const SimulationConfig& cfg) {
  cfg.validate();
  const auto alpha = calibrate_config_intercepts(cfg);
  const std::size_t n = cfg.n_trial + cfg.n_external;

  Dataset data;
  data.covariate_names.reserve(cfg.p);
  for (std::size_t j = 1; j <= cfg.p; ++j) data.covariate_names.push_back("x" + std::to_string(j));
  data.records.reserve(n);

  Rng rng(derive_seed(cfg.seed, 3));
  for (std::size_t i = 0; i < n; ++i) {
    SubjectRecord rec;
    rec.id = std::to_string(i + 1);
    rec.x.resize(cfg.p);
    for (auto& v : rec.x) v = rng.normal();
    const double xs = sum(rec.x);

    // The latent confounder raises the event hazard and pushes subjects
    // toward the external source, so conditioning on X cannot remove the
    // outcome drift it creates.
    const double u = cfg.setting == 2 ? rng.normal() : 0.0;
    double eta_r = xs;
    if (cfg.setting == 2) eta_r -= u;
    rec.r = rng.bernoulli(expit(alpha.alpha_r + eta_r)) ? 1 : 0;
    rec.a = rec.r == 1 && rng.bernoulli(expit(alpha.alpha_a + xs)) ? 1 : 0;

    double delta_shift = 0.0;
    if (cfg.setting == 3 && rec.r == 0) delta_shift = rng.bernoulli(0.5) ? 5.0 : 0.0;

    const auto elaw = event_law(cfg, rec.a, rec.r, rec.x, u, delta_shift);
    const auto claw = censoring_law(cfg, rec.x);
    const double t = sample_survival_time(elaw.form, elaw.rate, rng.uniform());
    const double c = sample_survival_time(claw.form, claw.rate, rng.uniform());
    rec.y = std::min(t, c);
    rec.delta = t < c ? 1 : 0;
    data.records.push_back(std::move(rec));
  }
  data.validate();
  return data;
}

double true_theta(const SimulationConfig& cfg, double tau, std::size_t n_mc) {
  cfg.validate();
  if (n_mc < 100000) throw ContractError("true_theta needs n_mc >= 1e5");
  const auto alpha = calibrate_config_intercepts(cfg);
  TrialCovariateSampler sampler{cfg, alpha.alpha_r};
  Rng rng(derive_seed(cfg.seed, 4));
  double acc = 0.0;
  for (std::size_t i = 0; i < n_mc; ++i) {
    sampler.draw(rng, [&](const std::vector<double>& x, double u) {
      acc += conditional_rmst_diff(cfg, x, u, tau);
    });
  }
  return acc / static_cast<double>(n_mc);
}

}  // namespace survborrow
