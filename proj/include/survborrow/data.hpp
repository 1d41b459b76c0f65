#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "survborrow/errors.hpp"

namespace survborrow {

// One observed unit from the trial (r = 1) or the external source (r = 0).
struct SubjectRecord {
  std::string id;
  double y = 0.0;          // follow-up time, min(T, C)
  int delta = 0;           // 1 = event observed, 0 = censored
  int a = 0;               // treatment arm
  std::vector<double> x;   // covariates
  int r = 1;               // 1 = trial, 0 = external control

  void validate() const;
};

struct Dataset {
  std::vector<SubjectRecord> records;
  std::vector<std::string> covariate_names;

  std::size_t n_covariates() const { return covariate_names.size(); }
  std::size_t size() const { return records.size(); }
  std::size_t count(int r, int a) const;
  std::size_t count_trial() const;
  std::size_t count_external() const { return size() - count_trial(); }

  // Row-level invariants plus id uniqueness.
  void validate() const;
};

// Evaluation times for all RMST integrals: strictly increasing, in (0, tau],
// last element equal to tau.
struct TimeGrid {
  std::vector<double> times;
  double tau = 0.0;

  void validate() const;
};

// Grid used by every estimator: sorted unique observed event times <= tau,
// with tau appended.
TimeGrid event_time_grid(const Dataset& data, double tau);

enum class Setting : int {
  SelectionBias = 1,
  UnmeasuredConfounder = 2,
  LackOfConcurrency = 3,
  CovariateEffect = 4,
  BaselineHazard = 5,
};

struct SimulationConfig {
  int setting = 1;
  std::size_t n_trial = 0;
  std::size_t n_external = 0;
  std::size_t n_treated = 0;
  std::size_t p = 3;
  double beta_c = 1.0;
  double tau = 2.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Parses key=value text with keys
// setting,n_trial,n_external,n_treated,p,beta_c,tau,seed.
SimulationConfig parse_simulation_config(std::istream& in);
SimulationConfig parse_simulation_config_file(const std::string& path);

// CSV schema (bit-exact header): id,y,delta,a,r,x1,...,xp
Dataset load_dataset(std::istream& in, std::size_t p);
Dataset load_dataset(std::istream& in);  // infers p from the header
Dataset load_dataset_file(const std::string& path);
void write_dataset(const Dataset& data, std::ostream& out);
void write_dataset_file(const Dataset& data, const std::string& path);

}  // namespace survborrow
