#pragma once

#include <cstddef>
#include <vector>

#include "survborrow/cox.hpp"
#include "survborrow/data.hpp"
#include "survborrow/logistic.hpp"

namespace survborrow {

// Censoring distribution for one source stratum, fit as a Cox model with
// censoring treated as the event. The trial stratum carries the arm as an
// extra covariate; a stratum without censored subjects falls back to the
// constant model S^C = 1.
struct CensoringModel {
  bool constant = false;
  bool includes_arm = false;
  CoxModel cox;

  std::vector<double> features(const std::vector<double>& x, int a) const;
  // P(C > t | x, a), right-continuous step convention
  double survival(const std::vector<double>& x, int a, double t) const;
  // P(C >= t | x, a): the left limit used by inverse weighting at t
  double survival_left(const std::vector<double>& x, int a, double t) const;
};

struct NuisanceOptions {
  // Intercept-only fits, used by the double-robustness experiments.
  bool propensities_intercept_only = false;
  bool outcomes_intercept_only = false;
};

// All fitted nuisance functions for one cross-fitting fold.
struct NuisanceSet {
  CoxModel surv_r1a1;  // S_1(t | X, R=1)
  CoxModel surv_r1a0;  // S_0(t | X, R=1)
  CoxModel surv_r0;    // S_0(t | X, R=0)
  CensoringModel cens_trial;
  CensoringModel cens_ext;
  LogisticModel pi_r;
  LogisticModel pi_a;
  double p_r1 = 0.5;  // marginal P(R=1); the global sample fraction
};

CensoringModel fit_censoring(const std::vector<const SubjectRecord*>& stratum, bool includes_arm,
                             bool intercept_only = false);

// Fits every nuisance on the given records (the complement of the fold the
// set will be evaluated on). p_r1 is supplied by the caller because it is
// the global count ratio. Errors are annotated with the failing nuisance.
NuisanceSet fit_nuisances(const std::vector<const SubjectRecord*>& fit_records, double p_r1,
                          const NuisanceOptions& options = {});

}  // namespace survborrow
