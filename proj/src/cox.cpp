#include "survborrow/cox.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace survborrow {

double CoxModel::linear_predictor(const std::vector<double>& x) const {
  double s = 0.0;
  for (std::size_t j = 0; j < coefficients.size(); ++j) s += coefficients[j] * x[j];
  return s;
}

double CoxModel::baseline_cumhaz(double t) const {
  // steps <= t
  const auto it = std::upper_bound(step_times.begin(), step_times.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - step_times.begin());
  return k == 0 ? 0.0 : step_cumhaz[k - 1];
}

double CoxModel::baseline_cumhaz_left(double t) const {
  // steps < t
  const auto it = std::lower_bound(step_times.begin(), step_times.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - step_times.begin());
  return k == 0 ? 0.0 : step_cumhaz[k - 1];
}

double CoxModel::survival(const std::vector<double>& x, double t) const {
  return std::exp(-baseline_cumhaz(t) * std::exp(linear_predictor(x)));
}

double CoxModel::survival_left(const std::vector<double>& x, double t) const {
  return std::exp(-baseline_cumhaz_left(t) * std::exp(linear_predictor(x)));
}

double predict_survival(const CoxModel& model, const std::vector<double>& x, double t) {
  return model.survival(x, t);
}

namespace {

struct PartialLikelihood {
  double loglik = 0.0;
  std::vector<double> gradient;
  Matrix hessian;  // negative of the second derivative (information)
};

// Walks subjects from the latest time to the earliest, accumulating the
// risk-set sums S0, S1, S2 once per Newton iteration.
PartialLikelihood evaluate(const std::vector<double>& time, const std::vector<int>& event,
                           const Matrix& x, const std::vector<std::size_t>& order,
                           const std::vector<double>& beta, bool with_derivatives) {
  const std::size_t n = time.size();
  const std::size_t p = x.cols();
  PartialLikelihood out;
  out.gradient.assign(p, 0.0);
  out.hessian = Matrix(p, p);

  std::vector<double> eta(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < p; ++j) s += beta[j] * x(i, j);
    eta[i] = s;
  }

  double s0 = 0.0;
  std::vector<double> s1(p, 0.0);
  Matrix s2(p, p);

  std::size_t pos = 0;
  while (pos < n) {
    const double t = time[order[pos]];
    // enter everyone tied at this time into the risk set
    std::size_t end = pos;
    while (end < n && time[order[end]] == t) {
      const std::size_t i = order[end];
      const double w = std::exp(eta[i]);
      s0 += w;
      if (with_derivatives) {
        for (std::size_t jj = 0; jj < p; ++jj) {
          s1[jj] += w * x(i, jj);
          for (std::size_t kk = jj; kk < p; ++kk) s2(jj, kk) += w * x(i, jj) * x(i, kk);
        }
      }
      ++end;
    }
    // Breslow contribution of the events tied at this time
    std::size_t d = 0;
    for (std::size_t q = pos; q < end; ++q) {
      const std::size_t i = order[q];
      if (event[i] == 1) {
        ++d;
        out.loglik += eta[i];
        if (with_derivatives)
          for (std::size_t jj = 0; jj < p; ++jj) out.gradient[jj] += x(i, jj);
      }
    }
    if (d > 0) {
      out.loglik -= static_cast<double>(d) * std::log(s0);
      if (with_derivatives) {
        for (std::size_t jj = 0; jj < p; ++jj) {
          const double mj = s1[jj] / s0;
          out.gradient[jj] -= static_cast<double>(d) * mj;
          for (std::size_t kk = jj; kk < p; ++kk) {
            const double mk = s1[kk] / s0;
            out.hessian(jj, kk) += static_cast<double>(d) * (s2(jj, kk) / s0 - mj * mk);
          }
        }
      }
    }
    pos = end;
  }
  for (std::size_t jj = 0; jj < p; ++jj)
    for (std::size_t kk = 0; kk < jj; ++kk) out.hessian(jj, kk) = out.hessian(kk, jj);
  return out;
}

}  // namespace

CoxModel fit_cox(const std::vector<double>& time, const std::vector<int>& event,
                 const Matrix& covariates) {
  const std::size_t n = time.size();
  if (event.size() != n || (covariates.cols() > 0 && covariates.rows() != n))
    throw ContractError("fit_cox: input length mismatch");
  if (std::accumulate(event.begin(), event.end(), 0) == 0)
    throw ContractError("fit_cox: no events in the risk set");
  const std::size_t p = covariates.cols();

  // descending time order; ties resolved by index for determinism
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    if (time[i] != time[j]) return time[i] > time[j];
    return i < j;
  });

  CoxModel model;
  model.coefficients.assign(p, 0.0);
  model.iterations = 0;
  model.converged = p == 0;

  if (p > 0) {
    auto state = evaluate(time, event, covariates, order, model.coefficients, true);
    for (int iter = 1; iter <= 100; ++iter) {
      model.iterations = iter;
      double gmax = 0.0;
      for (double g : state.gradient) gmax = std::max(gmax, std::abs(g));
      if (gmax < 1e-8) {
        model.converged = true;
        break;
      }
      const std::vector<double> dir = solve_spd(state.hessian, state.gradient);
      double stepsize = 1.0;
      std::vector<double> candidate(p);
      PartialLikelihood next;
      for (int h = 0; h <= 10; ++h) {
        for (std::size_t j = 0; j < p; ++j)
          candidate[j] = model.coefficients[j] + stepsize * dir[j];
        next = evaluate(time, event, covariates, order, candidate, true);
        if (next.loglik >= state.loglik || h == 10) break;
        stepsize *= 0.5;
      }
      model.coefficients = candidate;
      state = std::move(next);
      for (double b : model.coefficients)
        if (std::abs(b) > 50.0)
          throw SeparationError("fit_cox: monotone likelihood, coefficient diverged");
    }
    if (!model.converged) {
      double gmax = 0.0;
      for (double g : state.gradient) gmax = std::max(gmax, std::abs(g));
      model.converged = gmax < 1e-8;
    }
    model.coefficient_se.resize(p);
    for (std::size_t j = 0; j < p; ++j) {
      std::vector<double> unit(p, 0.0);
      unit[j] = 1.0;
      model.coefficient_se[j] = std::sqrt(std::max(solve_spd(state.hessian, unit)[j], 0.0));
    }
  }

  // Breslow baseline: increment d_j / sum_{risk} exp(beta' x) at event times
  std::vector<double> eta(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < p; ++j) s += model.coefficients[j] * covariates(i, j);
    eta[i] = std::exp(s);
  }
  double s0 = 0.0;
  std::vector<std::pair<double, double>> steps;  // descending time
  std::size_t pos = 0;
  while (pos < n) {
    const double t = time[order[pos]];
    std::size_t end = pos;
    std::size_t d = 0;
    while (end < n && time[order[end]] == t) {
      s0 += eta[order[end]];
      d += event[order[end]] == 1;
      ++end;
    }
    if (d > 0) steps.emplace_back(t, static_cast<double>(d) / s0);
    pos = end;
  }
  std::reverse(steps.begin(), steps.end());
  model.step_times.reserve(steps.size());
  model.step_increments.reserve(steps.size());
  model.step_cumhaz.reserve(steps.size());
  double cum = 0.0;
  for (const auto& [t, inc] : steps) {
    model.step_times.push_back(t);
    model.step_increments.push_back(inc);
    cum += inc;
    model.step_cumhaz.push_back(cum);
  }
  return model;
}

}  // namespace survborrow
