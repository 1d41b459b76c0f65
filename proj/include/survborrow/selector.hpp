#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "survborrow/data.hpp"
#include "survborrow/eif.hpp"
#include "survborrow/logistic.hpp"

namespace survborrow {

enum class PenaltyKind { AdaptiveLasso, Scad, Mcp };

PenaltyKind penalty_kind_from_string(const std::string& name);
std::string to_string(PenaltyKind kind);

// DR-Learner pseudo-outcome for one external subject.
struct PseudoOutcome {
  std::size_t subject_index = 0;  // into Dataset::records
  std::string id;
  double xi = 0.0;
  double k1 = 0.0;   // integral of kappa_0(t | R=1): the trial-curve plug-in
  double k0 = 0.0;   // integral of kappa_0(t | R=0)
  double mu0 = 0.0;  // mean of xi under the comparable law
  double se = 1.0;   // sd of xi under the comparable law
  // Two-sided exact tail probability of the follow-up time under the
  // comparable law (trial outcome curve x external censoring curve).
  double p_value = 1.0;

  double z() const { return (xi - mu0) / se; }
};

PseudoOutcome pseudo_outcome(const EifContext& ctx, const Dataset& data, std::size_t i);
std::vector<PseudoOutcome> pseudo_outcomes(const EifContext& ctx, const Dataset& data);

struct SelectorOptions {
  PenaltyKind kind = PenaltyKind::AdaptiveLasso;
  double scad_a = 3.7;
  double mcp_gamma = 3.0;
  double weight_gamma = 1.0;  // adaptive weight exponent
  // Standardized weights scale the per-subject threshold by the model-based
  // noise of xi, so the zero set is {|xi/se| <= (lambda/2)^(1/(1+gamma))}.
  bool standardize = false;
};

double adaptive_weight(const PseudoOutcome& po, const SelectorOptions& opts);

// Scalar penalty evaluated at |b| (lambda and the adaptive weight folded in).
double penalty_value(double b, double lambda, PenaltyKind kind, double weight,
                     double scad_a = 3.7, double mcp_gamma = 3.0);

// argmin_b (xi - b)^2 + penalty(|b|), in closed form.
double threshold(double xi, double lambda, PenaltyKind kind, double weight, double scad_a = 3.7,
                 double mcp_gamma = 3.0);

// Selection-probability model P(b0 = 0 | X, R=0); constant fallback when the
// logistic fit separates or the labels are one-sided.
struct SelectionModel {
  bool constant = true;
  double prob = 1.0;
  LogisticModel lm;

  double predict(const std::vector<double>& x) const {
    return constant ? prob : lm.predict(x);
  }
};

struct SelectionResult {
  std::vector<std::size_t> subject_index;
  std::vector<std::string> ids;
  std::vector<double> xi;
  std::vector<double> b_tilde;
  std::vector<std::uint8_t> selected;  // 1 iff b_tilde == 0
  double lambda = 0.0;
  PenaltyKind kind = PenaltyKind::AdaptiveLasso;
  std::size_t n_selected = 0;
  SelectionModel prob_model;
};

SelectionResult refine_biases(const Dataset& data, const std::vector<PseudoOutcome>& pseudo,
                              double lambda, const SelectorOptions& opts);

// Comparable-set extraction in two stages. Stage one runs the exact tail
// tests through a Benjamini-Hochberg cascade at level alpha, refining
// subjects whose follow-up is inconsistent with the comparable law to
// b = xi. Stage two tests the survivors for dataset-level drift via the
// mean standardized pseudo-outcome; when it exceeds global_z_cut the
// remaining drift is not attributable to individual subjects and the whole
// set is refined away.
SelectionResult select_comparable_exact(const Dataset& data,
                                        const std::vector<PseudoOutcome>& pseudo, double alpha,
                                        double global_z_cut);

// BIC over the grid: sum_i (xi_i - b_i(lambda))^2 + sigma^2 log(N_e) #nonzero
// with the MAD-based variance of {xi}; ties broken toward the larger lambda.
double select_lambda(const std::vector<PseudoOutcome>& pseudo,
                     const std::vector<double>& lambda_grid, const SelectorOptions& opts);

// 50-point logarithmic grid spanning [1e-3, 10] * sigma_hat.
std::vector<double> default_lambda_grid(const std::vector<PseudoOutcome>& pseudo);

}  // namespace survborrow
