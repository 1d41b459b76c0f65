#include "survborrow/km.hpp"

#include <algorithm>
#include <numeric>

#include "survborrow/errors.hpp"
#include "survborrow/linalg.hpp"

namespace survborrow {

double StepSurvival::at(double t) const {
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - times.begin());
  return k == 0 ? 1.0 : values[k - 1];
}

StepSurvival km_curve(const std::vector<double>& times, const std::vector<int>& events) {
  const std::size_t n = times.size();
  if (n == 0) throw ContractError("km_curve: empty input");
  if (events.size() != n) throw ContractError("km_curve: input length mismatch");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return times[i] < times[j]; });

  StepSurvival out;
  double surv = 1.0;
  std::size_t at_risk = n;
  std::size_t pos = 0;
  while (pos < n) {
    const double t = times[order[pos]];
    std::size_t d = 0, removed = 0;
    while (pos < n && times[order[pos]] == t) {
      d += events[order[pos]] == 1;
      ++removed;
      ++pos;
    }
    if (d > 0) {
      surv *= 1.0 - static_cast<double>(d) / static_cast<double>(at_risk);
      out.times.push_back(t);
      out.values.push_back(surv);
    }
    at_risk -= removed;
  }
  return out;
}

LogRankResult logrank_test(const std::vector<double>& times_a, const std::vector<int>& events_a,
                           const std::vector<double>& times_b, const std::vector<int>& events_b) {
  struct Obs {
    double t;
    int event;
    int group;
  };
  std::vector<Obs> obs;
  obs.reserve(times_a.size() + times_b.size());
  for (std::size_t i = 0; i < times_a.size(); ++i) obs.push_back({times_a[i], events_a[i], 0});
  for (std::size_t i = 0; i < times_b.size(); ++i) obs.push_back({times_b[i], events_b[i], 1});
  if (obs.empty()) throw ContractError("logrank_test: empty input");
  std::sort(obs.begin(), obs.end(), [](const Obs& l, const Obs& r) { return l.t < r.t; });

  bool any_event = false;
  for (const auto& o : obs) any_event |= o.event == 1;
  if (!any_event) throw ContractError("logrank_test: needs at least one event");

  double n_a = static_cast<double>(times_a.size());
  double n_b = static_cast<double>(times_b.size());
  double u = 0.0, v = 0.0;
  std::size_t pos = 0;
  while (pos < obs.size()) {
    const double t = obs[pos].t;
    double d = 0.0, d_a = 0.0, rm_a = 0.0, rm_b = 0.0;
    while (pos < obs.size() && obs[pos].t == t) {
      if (obs[pos].event == 1) {
        d += 1.0;
        d_a += obs[pos].group == 0;
      }
      (obs[pos].group == 0 ? rm_a : rm_b) += 1.0;
      ++pos;
    }
    const double n = n_a + n_b;
    if (d > 0.0 && n_a > 0.0 && n_b > 0.0) {
      u += d_a - d * n_a / n;
      if (n > 1.0) v += d * (n_a / n) * (n_b / n) * (n - d) / (n - 1.0);
    }
    n_a -= rm_a;
    n_b -= rm_b;
  }

  LogRankResult out;
  out.statistic = v > 0.0 ? u * u / v : 0.0;
  out.p_value = chisq1_upper_tail(out.statistic);
  return out;
}

}  // namespace survborrow
