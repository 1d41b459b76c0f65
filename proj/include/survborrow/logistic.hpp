#pragma once

#include <vector>

#include "survborrow/linalg.hpp"

namespace survborrow {

struct LogisticModel {
  double intercept = 0.0;
  std::vector<double> coefficients;
  bool converged = false;
  int iterations = 0;

  double predict(const std::vector<double>& x) const;
};

// Maximum likelihood by iteratively reweighted least squares. covariates may
// have zero columns (intercept-only fit). Throws ContractError when only one
// label class is present, SeparationError on divergence, RankError on a
// singular weighted design.
LogisticModel fit_logistic(const Matrix& covariates, const std::vector<int>& labels,
                           const std::vector<double>* weights = nullptr);

}  // namespace survborrow
