#include "survborrow/logistic.hpp"

#include <algorithm>
#include <cmath>

namespace survborrow {

double LogisticModel::predict(const std::vector<double>& x) const {
  double eta = intercept;
  for (std::size_t j = 0; j < coefficients.size(); ++j) eta += coefficients[j] * x[j];
  return expit(eta);
}

namespace {

double loglik(const Matrix& x, const std::vector<int>& y, const std::vector<double>* w,
              const std::vector<double>& beta) {
  const std::size_t n = y.size();
  const std::size_t p = x.cols();
  double ll = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double eta = beta[0];
    for (std::size_t j = 0; j < p; ++j) eta += beta[j + 1] * x(i, j);
    const double wi = w ? (*w)[i] : 1.0;
    // log p for y=1, log(1-p) for y=0, in a stable form
    ll += wi * (y[i] * eta - (eta > 30.0 ? eta : std::log1p(std::exp(eta))));
  }
  return ll;
}

}  // namespace

LogisticModel fit_logistic(const Matrix& covariates, const std::vector<int>& labels,
                           const std::vector<double>* weights) {
  const std::size_t n = labels.size();
  if (covariates.cols() > 0 && covariates.rows() != n)
    throw ContractError("fit_logistic: input length mismatch");
  bool any0 = false, any1 = false;
  for (int v : labels) (v == 1 ? any1 : any0) = true;
  if (!any0 || !any1) throw ContractError("fit_logistic: both label classes must be present");

  const std::size_t p = covariates.cols();
  const std::size_t q = p + 1;  // intercept first
  std::vector<double> beta(q, 0.0);
  double ll = loglik(covariates, labels, weights, beta);

  LogisticModel model;
  for (int iter = 1; iter <= 100; ++iter) {
    model.iterations = iter;
    std::vector<double> score(q, 0.0);
    Matrix info(q, q);
    for (std::size_t i = 0; i < n; ++i) {
      double eta = beta[0];
      for (std::size_t j = 0; j < p; ++j) eta += beta[j + 1] * covariates(i, j);
      const double pi = expit(eta);
      const double wi = weights ? (*weights)[i] : 1.0;
      const double res = wi * (labels[i] - pi);
      const double wv = wi * pi * (1.0 - pi);
      score[0] += res;
      info(0, 0) += wv;
      for (std::size_t j = 0; j < p; ++j) {
        score[j + 1] += res * covariates(i, j);
        info(0, j + 1) += wv * covariates(i, j);
        for (std::size_t k = j; k < p; ++k)
          info(j + 1, k + 1) += wv * covariates(i, j) * covariates(i, k);
      }
    }
    for (std::size_t j = 0; j < q; ++j)
      for (std::size_t k = 0; k < j; ++k) info(j, k) = info(k, j);

    double smax = 0.0;
    for (double s : score) smax = std::max(smax, std::abs(s));
    if (smax < 1e-8) {
      model.converged = true;
      break;
    }

    const std::vector<double> dir = solve_spd(info, score);
    double stepsize = 1.0;
    std::vector<double> candidate(q);
    for (int h = 0; h <= 10; ++h) {
      for (std::size_t j = 0; j < q; ++j) candidate[j] = beta[j] + stepsize * dir[j];
      const double llnew = loglik(covariates, labels, weights, candidate);
      if (llnew >= ll || h == 10) {
        ll = llnew;
        break;
      }
      stepsize *= 0.5;
    }
    beta = candidate;
    for (double b : beta)
      if (std::abs(b) > 50.0)
        throw SeparationError("fit_logistic: perfect separation, coefficient diverged");
  }

  model.intercept = beta[0];
  model.coefficients.assign(beta.begin() + 1, beta.end());
  return model;
}

}  // namespace survborrow
