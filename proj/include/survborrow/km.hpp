#pragma once

#include <vector>

namespace survborrow {

// Right-continuous step survival function starting at 1.
struct StepSurvival {
  std::vector<double> times;   // jump times, increasing
  std::vector<double> values;  // value right after each jump, nonincreasing

  double at(double t) const;
};

StepSurvival km_curve(const std::vector<double>& times, const std::vector<int>& events);

struct LogRankResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Two-sample log-rank chi-square test with one degree of freedom.
LogRankResult logrank_test(const std::vector<double>& times_a, const std::vector<int>& events_a,
                           const std::vector<double>& times_b, const std::vector<int>& events_b);

}  // namespace survborrow
