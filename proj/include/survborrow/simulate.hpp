#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "survborrow/data.hpp"
#include "survborrow/rng.hpp"

namespace survborrow {

enum class HazardForm { ConstantRate, LinearInTime };

// lambda(t) = rate for the constant form, lambda(t) = rate * t for the
// linear-in-time form.
struct HazardLaw {
  HazardForm form = HazardForm::ConstantRate;
  double rate = 1.0;
};

// Inverts the survival function at a uniform draw u.
double sample_survival_time(HazardForm form, double rate, double u);

// int_0^tau S(t) dt under the law.
double conditional_rmst(const HazardLaw& law, double tau);

// Event-time law for one subject. u is the latent confounder (setting 2
// only) and delta_shift the latent concurrency shift (setting 3 externals).
HazardLaw event_law(const SimulationConfig& cfg, int a, int r, const std::vector<double>& x,
                    double u, double delta_shift);
HazardLaw censoring_law(const SimulationConfig& cfg, const std::vector<double>& x);

// RMST difference between the two trial arms at fixed covariates.
double conditional_rmst_diff(const SimulationConfig& cfg, const std::vector<double>& x, double u,
                             double tau);

// Finds alpha with E[expit(alpha + eta)] = target_mean by bisection on
// [-20, 20] over a common set of Monte Carlo draws of eta.
double calibrate_intercept(double target_mean, const std::function<double(Rng&)>& eta_sampler,
                           std::uint64_t seed, std::size_t n_draws = 200000);

// Calibrated source and treatment intercepts for a configuration.
struct CalibratedIntercepts {
  double alpha_r = 0.0;
  double alpha_a = 0.0;
};
CalibratedIntercepts calibrate_config_intercepts(const SimulationConfig& cfg);

Dataset simulate(const SimulationConfig& cfg);

// Monte Carlo ground truth: the RMST difference over trial-distributed
// covariates with the true conditional hazards and no censoring.
double true_theta(const SimulationConfig& cfg, double tau, std::size_t n_mc);

}  // namespace survborrow
