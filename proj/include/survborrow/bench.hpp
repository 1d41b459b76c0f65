#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "survborrow/estimator.hpp"
#include "survborrow/simulate.hpp"

namespace survborrow {

struct BenchmarkConfig {
  int setting = 1;
  std::vector<std::size_t> n0_grid = {200};  // concurrent-control sizes
  std::size_t n_treated = 200;
  std::size_t n_external = 500;
  std::size_t p = 3;
  double beta_c = 1.0;
  double tau = 2.0;
  int replications = 200;
  int bootstrap = 50;
  double power_threshold = -0.3;  // one-sided alternative theta > threshold
  double test_level = 0.05;
  std::uint64_t seed = 1;
  int threads = 1;
  std::size_t truth_draws = 400000;
  EstimateOptions est;
};

struct MetricsCell {
  int setting = 0;
  std::string estimator;
  std::size_t n0 = 0;
  double bias = 0.0;
  double se = 0.0;
  double rmse = 0.0;
  double coverage = 0.0;
  double type1 = 0.0;  // one-sided rejection at the boundary null (truth)
  double power = 0.0;  // one-sided rejection at the power threshold
  double borrow_frac = 0.0;
  double rel_ci_width = 1.0;
};

struct ReplicationOutcome {
  bool ok = false;
  std::array<double, 3> theta{};  // indexed by EstimatorKind
  std::array<double, 3> se{};
  double borrow_frac = 0.0;
};

struct MetricsTable {
  std::vector<MetricsCell> cells;
  std::vector<double> truth_by_n0;
  // per n0 index, per replication
  std::vector<std::vector<ReplicationOutcome>> replications;
};

MetricsTable run_benchmark(const BenchmarkConfig& cfg);

// CSV with the header
// setting,estimator,n0,bias,se,rmse,coverage,type1,power,borrow_frac,rel_ci_width
void write_metrics_csv(const MetricsTable& table, std::ostream& out);

// Probability-of-study-success subsampling analysis: repeatedly subsample the
// trial control arm, augment with the externals, and count detections of
// theta_tau below each threshold.
struct PrssConfig {
  std::vector<std::size_t> subsample_sizes;
  int repeats = 50;
  std::vector<double> thresholds = {-0.1};
  std::vector<double> taus = {2.0};
  int bootstrap = 50;
  double test_level = 0.05;
  std::uint64_t seed = 1;
  int threads = 1;
  EstimateOptions est;
};

struct PrssCell {
  std::size_t n0_sub = 0;
  double tau = 0.0;
  double threshold = 0.0;
  std::string estimator;
  double prss = 0.0;
};

std::vector<PrssCell> run_prss(const Dataset& data, const PrssConfig& cfg);
void write_prss_csv(const std::vector<PrssCell>& cells, std::ostream& out);

}  // namespace survborrow
