#include "survborrow/nuisance.hpp"

#include <string>

namespace survborrow {

std::vector<double> CensoringModel::features(const std::vector<double>& x, int a) const {
  std::vector<double> f;
  f.reserve(x.size() + (includes_arm ? 1 : 0));
  f = x;
  if (includes_arm) f.push_back(static_cast<double>(a));
  return f;
}

double CensoringModel::survival(const std::vector<double>& x, int a, double t) const {
  if (constant) return 1.0;
  return cox.survival(features(x, a), t);
}

double CensoringModel::survival_left(const std::vector<double>& x, int a, double t) const {
  if (constant) return 1.0;
  return cox.survival_left(features(x, a), t);
}

namespace {

Matrix design(const std::vector<const SubjectRecord*>& recs, bool with_arm, bool intercept_only) {
  if (intercept_only) return Matrix(recs.size(), 0);
  const std::size_t p = recs.empty() ? 0 : recs.front()->x.size();
  Matrix x(recs.size(), p + (with_arm ? 1 : 0));
  for (std::size_t i = 0; i < recs.size(); ++i) {
    for (std::size_t j = 0; j < p; ++j) x(i, j) = recs[i]->x[j];
    if (with_arm) x(i, p) = static_cast<double>(recs[i]->a);
  }
  return x;
}

CoxModel fit_survival(const std::vector<const SubjectRecord*>& recs, bool intercept_only) {
  std::vector<double> time(recs.size());
  std::vector<int> event(recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    time[i] = recs[i]->y;
    event[i] = recs[i]->delta;
  }
  return fit_cox(time, event, design(recs, false, intercept_only));
}

template <typename Fit>
auto annotated(const char* what, Fit&& fit) {
  try {
    return fit();
  } catch (const Error& e) {
    throw FitError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

CensoringModel fit_censoring(const std::vector<const SubjectRecord*>& stratum, bool includes_arm,
                             bool intercept_only) {
  std::size_t n_censored = 0;
  for (const auto* rec : stratum) n_censored += rec->delta == 0;
  if (n_censored == 0)
    throw NoCensoringError("no censored subjects in the stratum; use the constant model S^C=1");

  std::vector<double> time(stratum.size());
  std::vector<int> event(stratum.size());
  for (std::size_t i = 0; i < stratum.size(); ++i) {
    time[i] = stratum[i]->y;
    event[i] = stratum[i]->delta == 0 ? 1 : 0;  // censoring is the event here
  }
  CensoringModel model;
  model.includes_arm = includes_arm && !intercept_only;
  model.cox = fit_cox(time, event, design(stratum, model.includes_arm, intercept_only));
  return model;
}

NuisanceSet fit_nuisances(const std::vector<const SubjectRecord*>& fit_records, double p_r1,
                          const NuisanceOptions& options) {
  std::vector<const SubjectRecord*> r1a1, r1a0, r0, trial;
  for (const auto* rec : fit_records) {
    if (rec->r == 1) {
      trial.push_back(rec);
      (rec->a == 1 ? r1a1 : r1a0).push_back(rec);
    } else {
      r0.push_back(rec);
    }
  }
  if (r1a1.empty() || r1a0.empty())
    throw FoldError("fold lacks a trial arm: cannot fit treatment-specific survival");
  if (r0.empty()) throw FoldError("fold lacks external controls");

  NuisanceSet ns;
  ns.p_r1 = p_r1;
  const bool io = options.outcomes_intercept_only;
  ns.surv_r1a1 = annotated("survival model (R=1,A=1)", [&] { return fit_survival(r1a1, io); });
  ns.surv_r1a0 = annotated("survival model (R=1,A=0)", [&] { return fit_survival(r1a0, io); });
  ns.surv_r0 = annotated("survival model (R=0)", [&] { return fit_survival(r0, io); });

  const auto fit_cens = [&](const std::vector<const SubjectRecord*>& stratum, bool with_arm,
                            const char* what) {
    return annotated(what, [&]() -> CensoringModel {
      try {
        return fit_censoring(stratum, with_arm);
      } catch (const NoCensoringError&) {
        CensoringModel constant;
        constant.constant = true;
        return constant;
      }
    });
  };
  ns.cens_trial = fit_cens(trial, true, "censoring model (R=1)");
  ns.cens_ext = fit_cens(r0, false, "censoring model (R=0)");

  const bool po = options.propensities_intercept_only;
  ns.pi_r = annotated("study propensity pi_R", [&] {
    std::vector<int> labels(fit_records.size());
    for (std::size_t i = 0; i < fit_records.size(); ++i) labels[i] = fit_records[i]->r;
    return fit_logistic(design(fit_records, false, po), labels);
  });
  ns.pi_a = annotated("treatment propensity pi_A", [&] {
    std::vector<int> labels(trial.size());
    for (std::size_t i = 0; i < trial.size(); ++i) labels[i] = trial[i]->a;
    return fit_logistic(design(trial, false, po), labels);
  });
  return ns;
}

}  // namespace survborrow
