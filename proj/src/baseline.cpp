#include "goaltime/baseline.hpp"

#include <algorithm>
#include <cmath>

#include "goaltime/coxfit.hpp"
#include "goaltime/errors.hpp"

namespace goaltime {

namespace {

constexpr double kZ95 = 1.959963984540054;

std::vector<double> frailty_offsets(const Dataset& dataset, const FitResult& fit) {
  if (fit.theta <= 0.0 || fit.frailty_values.empty()) return {};
  std::vector<double> offsets;
  offsets.reserve(dataset.rows.size());
  for (const auto& r : dataset.rows) {
    auto it = fit.frailty_values.find(r.game_id);
    if (it == fit.frailty_values.end()) {
      throw ContractError("breslow_baseline: no frailty value for game " + r.game_id);
    }
    offsets.push_back(std::log(it->second));
  }
  return offsets;
}

Eigen::VectorXd profile_covariates(const ModelSpec& spec, const Profile& profile, double time) {
  const int p = static_cast<int>(spec.terms.size());
  const bool second = profile.time_of_first_goal.has_value();
  Eigen::VectorXd x(p);
  for (int k = 0; k < p; ++k) {
    switch (spec.terms[k]) {
      case Term::ProbWin: x[k] = profile.prob_win; break;
      case Term::Season: x[k] = profile.season; break;
      case Term::Goal: x[k] = second ? 1.0 : 0.0; break;
      case Term::TimeOfFirstGoal: x[k] = second ? *profile.time_of_first_goal : 0.0; break;
      case Term::FirstGoalTeam:
        x[k] = (second && profile.first_goal_team.value_or(false)) ? 1.0 : 0.0;
        break;
      case Term::TimeFromFirstGoal: {
        if (second) {
          const double dt = time - *profile.time_of_first_goal;
          x[k] = spec.transform == TimeTransform::Log ? std::log(dt) : dt;
        } else {
          x[k] = 0.0;
        }
        break;
      }
    }
  }
  return x;
}

}  // namespace

std::vector<BaselineHazard> breslow_baseline(const Dataset& dataset, const ModelSpec& spec,
                                             const FitResult& fit) {
  if (!fit.converged) throw ContractError("breslow_baseline: fit did not converge");
  spec.validate();
  // Frailty fits were estimated with Breslow ties; keep the baseline
  // consistent with the estimator that produced the coefficients.
  ModelSpec eng_spec = spec;
  eng_spec.frailty = false;
  if (fit.theta > 0.0) eng_spec.ties = Ties::Breslow;
  CoxEngine engine(dataset, eng_spec);
  const auto offsets = frailty_offsets(dataset, fit);
  const auto jumps = engine.baseline_jumps(fit.coefficients, offsets);

  std::vector<BaselineHazard> out;
  for (int s = 0; s < engine.n_strata(); ++s) {
    BaselineHazard bh;
    bh.stratum = spec.stratify_by_goal ? (s == 0 ? "first" : "second") : "all";
    const auto& js = jumps[s];
    if (js.empty()) {
      bh.no_events = true;
      out.push_back(std::move(bh));
      continue;
    }
    const int p = static_cast<int>(spec.terms.size());
    bh.steps.push_back(BaselineStep{0.0, 0.0, 0.0});
    bh.increments.reserve(js.size());
    bh.var_increments.reserve(js.size());
    bh.dinc_dbeta.setZero(static_cast<int>(js.size()), p);
    double cum = 0.0, var_naive = 0.0;
    Eigen::VectorXd q = Eigen::VectorXd::Zero(p);
    for (std::size_t k = 0; k < js.size(); ++k) {
      cum += js[k].increment;
      var_naive += js[k].var_increment;
      q += js[k].dinc_dbeta;
      const double var = var_naive + q.dot(fit.covariance * q);
      bh.steps.push_back(BaselineStep{js[k].time, cum, var});
      bh.increments.push_back(js[k].increment);
      bh.var_increments.push_back(js[k].var_increment);
      bh.dinc_dbeta.row(static_cast<int>(k)) = js[k].dinc_dbeta.transpose();
    }
    out.push_back(std::move(bh));
  }
  return out;
}

SurvivalCurve survival_curve(const FitResult& fit, const std::vector<BaselineHazard>& baselines,
                             const Profile& profile) {
  const ModelSpec& spec = fit.spec;
  const bool second = profile.time_of_first_goal.has_value();
  if (!(profile.prob_win >= 0.0 && profile.prob_win <= 1.0)) {
    throw ContractError("survival_curve: prob_win must lie in [0, 1]");
  }
  if (profile.season != 0 && profile.season != 1) {
    throw ContractError("survival_curve: season must be 0 or 1");
  }
  if (second) {
    if (!(*profile.time_of_first_goal >= 0.0)) {
      throw ContractError("survival_curve: time_of_first_goal must be >= 0");
    }
    if (*profile.time_of_first_goal >= 90.0) {
      throw ContractError("survival_curve: profile extrapolates beyond minute 90");
    }
    if (spec.has(Term::FirstGoalTeam) && !profile.first_goal_team) {
      throw ContractError("survival_curve: profile needs first_goal_team for this model");
    }
  }

  const std::string want = spec.stratify_by_goal ? (second ? "second" : "first") : "all";
  const BaselineHazard* base = nullptr;
  for (const auto& b : baselines) {
    if (b.stratum == want) base = &b;
  }
  if (!base) throw ContractError("survival_curve: no baseline for stratum " + want);
  if (base->no_events) throw ContractError("survival_curve: baseline stratum " + want + " has no events");

  const double entry = second ? *profile.time_of_first_goal : 0.0;

  SurvivalCurve curve;
  curve.profile = profile;
  curve.points.push_back(SurvivalCurvePoint{entry, 1.0, 1.0, 1.0});

  const int p = static_cast<int>(spec.terms.size());
  double H = 0.0, var_naive = 0.0;
  Eigen::VectorXd q = Eigen::VectorXd::Zero(p);
  for (std::size_t k = 0; k + 1 < base->steps.size(); ++k) {
    const double t = base->steps[k + 1].time;  // jump times skip the origin row
    if (!(t > entry)) continue;
    const Eigen::VectorXd x = profile_covariates(spec, profile, t);
    const double risk = std::exp(x.dot(fit.coefficients));
    H += base->increments[k] * risk;
    var_naive += base->var_increments[k] * risk * risk;
    q += risk * (base->dinc_dbeta.row(static_cast<int>(k)).transpose() +
                 base->increments[k] * x);
    const double var = var_naive + q.dot(fit.covariance * q);
    const double se = std::sqrt(std::max(0.0, var));

    double s_val = std::exp(-H);
    double lo = s_val, hi = s_val;
    if (H > 0.0 && se > 0.0) {
      const double ratio = kZ95 * se / H;  // band on the log-cumulative-hazard scale
      lo = std::exp(-H * std::exp(ratio));
      hi = std::exp(-H * std::exp(-ratio));
    }
    lo = std::clamp(lo, 0.0, 1.0);
    hi = std::clamp(hi, 0.0, 1.0);
    s_val = std::clamp(s_val, lo, hi);
    curve.points.push_back(SurvivalCurvePoint{t, s_val, lo, hi});
  }
  return curve;
}

}  // namespace goaltime
