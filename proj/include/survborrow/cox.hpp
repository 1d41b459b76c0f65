#pragma once

#include <vector>

#include "survborrow/linalg.hpp"

namespace survborrow {

// Cox proportional hazards fit with a Breslow baseline. Coefficients may be
// empty (baseline-only model).
struct CoxModel {
  std::vector<double> coefficients;
  std::vector<double> coefficient_se;   // from the inverse information at the optimum
  std::vector<double> step_times;       // strictly increasing event times
  std::vector<double> step_increments;  // Breslow baseline hazard increments
  std::vector<double> step_cumhaz;      // prefix sums of step_increments
  bool converged = false;
  int iterations = 0;

  double linear_predictor(const std::vector<double>& x) const;
  // Baseline cumulative hazard over steps <= t (strictly < t for the left
  // limit, which is the P(C >= t) convention used by censoring weights).
  double baseline_cumhaz(double t) const;
  double baseline_cumhaz_left(double t) const;
  double survival(const std::vector<double>& x, double t) const;
  double survival_left(const std::vector<double>& x, double t) const;
};

// Newton maximization of the Breslow partial likelihood. Throws
// ContractError (no events), RankError (singular Hessian), SeparationError
// (a coefficient diverged past |beta| > 50).
CoxModel fit_cox(const std::vector<double>& time, const std::vector<int>& event,
                 const Matrix& covariates);

double predict_survival(const CoxModel& model, const std::vector<double>& x, double t);

}  // namespace survborrow
