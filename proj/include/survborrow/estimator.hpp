#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "survborrow/data.hpp"
#include "survborrow/eif.hpp"
#include "survborrow/selector.hpp"

namespace survborrow {

enum class EstimatorKind { Aipw, Acw, Adapt };

EstimatorKind estimator_kind_from_string(const std::string& name);
std::string to_string(EstimatorKind kind);

enum class FoldMode { SingleSplit, SwapAverage };
enum class SelectionOverride { None, All, Empty };
// How the adaptive pipeline extracts the comparable set: exact tail tests
// with a Benjamini-Hochberg cascade (default), a standardized soft
// threshold, or the BIC grid search over the penalty level.
enum class LambdaRule { ExactTest, Standardized, BicGrid };

struct EstimateOptions {
  int folds = 2;
  FoldMode mode = FoldMode::SwapAverage;
  std::uint64_t seed = 0;
  int bootstrap = 50;
  double ci_level = 0.95;
  int threads = 1;

  SelectorOptions selector;
  LambdaRule lambda_rule = LambdaRule::ExactTest;
  double selection_alpha = 0.1;   // exact-test false-discovery level
  double selection_global_z = 3.0;  // dataset-level drift Wald cutoff
  double selection_z = 1.4;      // standardized-threshold cutoff
  std::optional<double> lambda_fixed;
  bool refit_lambda_in_bootstrap = false;
  SelectionOverride selection_override = SelectionOverride::None;

  NuisanceOptions nuisance;
};

// Fold assignment, stratified by the (R, A) cell so every fold complement
// satisfies the fitter preconditions.
struct FoldPlan {
  std::vector<int> fold_of;  // per record index
  int folds = 2;
  FoldMode mode = FoldMode::SwapAverage;
};

FoldPlan assign_folds(const Dataset& data, int folds, FoldMode mode, std::uint64_t seed);

// One full pass of the cross-fitted pipeline; all three estimators are
// assembled from the same nuisances and influence rows.
struct PipelineResult {
  double theta_aipw = 0.0;
  double theta_acw = 0.0;
  double theta_adapt = 0.0;
  double lambda = 0.0;
  std::size_t n_trial = 0;
  std::size_t n_external = 0;
  std::size_t n_borrowed = 0;
  bool has_external = false;

  std::vector<PseudoOutcome> pseudo;          // externals with a pseudo-outcome
  std::vector<std::uint8_t> memb_by_subject;  // per record index
  std::vector<InfluenceRow> influence;        // per record index
  std::vector<std::string> ids;               // per record index

  double theta(EstimatorKind kind) const;
  double borrow_fraction() const {
    return n_external == 0 ? 0.0
                           : static_cast<double>(n_borrowed) / static_cast<double>(n_external);
  }
};

PipelineResult run_pipeline(const Dataset& data, double tau, const EstimateOptions& options);

struct EstimateReport {
  EstimatorKind kind = EstimatorKind::Adapt;
  double theta_hat = 0.0;
  double se = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  double level = 0.95;
  double tau = 0.0;
  std::size_t n_trial = 0;
  std::size_t n_external = 0;
  std::size_t n_borrowed = 0;
  std::optional<double> lambda;
  std::uint64_t seed = 0;
};

std::string to_json(const EstimateReport& report);

// Stratified (R, A)-cell bootstrap with replacement; the full pipeline
// reruns per resample and every estimator is read off the same resamples.
struct BootstrapResult {
  std::array<double, 3> se{};  // indexed by EstimatorKind
  std::vector<std::array<double, 3>> thetas;
};

BootstrapResult bootstrap_pipeline(const Dataset& data, double tau, const EstimateOptions& options,
                                   const PipelineResult& original);

std::pair<double, std::pair<double, double>> bootstrap(const Dataset& data, EstimatorKind kind,
                                                       int b, double tau, std::uint64_t seed,
                                                       EstimateOptions options);

EstimateReport estimate(const Dataset& data, EstimatorKind kind, double tau,
                        const EstimateOptions& options);
EstimateReport estimate_aipw(const Dataset& data, double tau, const EstimateOptions& options);
EstimateReport estimate_acw(const Dataset& data, double tau, const EstimateOptions& options);
EstimateReport estimate_adapt(const Dataset& data, double tau, const EstimateOptions& options);

}  // namespace survborrow
