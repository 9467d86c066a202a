#include "goaltime/diagnostics.hpp"

#include <cmath>

#include "goaltime/coxfit.hpp"
#include "goaltime/errors.hpp"

namespace goaltime {

std::vector<double> martingale_residuals(const Dataset& dataset, const ModelSpec& spec,
                                         const FitResult& fit,
                                         const std::vector<BaselineHazard>& baseline) {
  if (!fit.converged) throw ContractError("martingale_residuals: fit did not converge");
  (void)baseline;  // increments are recomputed; tied death rows need their
                   // downweighted share, which the pooled steps cannot carry
  ModelSpec eng_spec = spec;
  eng_spec.frailty = false;
  if (fit.theta > 0.0) eng_spec.ties = Ties::Breslow;
  CoxEngine engine(dataset, eng_spec);

  std::vector<double> offsets;
  if (fit.theta > 0.0 && !fit.frailty_values.empty()) {
    offsets.reserve(dataset.rows.size());
    for (const auto& r : dataset.rows) {
      auto it = fit.frailty_values.find(r.game_id);
      if (it == fit.frailty_values.end()) {
        throw ContractError("martingale_residuals: no frailty value for game " + r.game_id);
      }
      offsets.push_back(std::log(it->second));
    }
  }

  const std::vector<double> cum = engine.row_cumhaz(fit.coefficients, offsets);
  std::vector<double> res(dataset.rows.size());
  for (std::size_t i = 0; i < dataset.rows.size(); ++i) {
    res[i] = (dataset.rows[i].event ? 1.0 : 0.0) - cum[i];
  }
  return res;
}

std::vector<double> deviance_residuals(const std::vector<double>& martingale,
                                       const std::vector<bool>& events) {
  if (martingale.size() != events.size()) {
    throw ContractError("deviance_residuals: size mismatch");
  }
  std::vector<double> out(martingale.size());
  for (std::size_t i = 0; i < martingale.size(); ++i) {
    const double r = martingale[i];
    const double delta = events[i] ? 1.0 : 0.0;
    if (r > delta) {
      throw ContractError("deviance_residuals: martingale residual exceeds event indicator");
    }
    double inner = r;
    if (events[i]) inner += std::log(delta - r);
    const double mag = std::sqrt(-2.0 * inner);
    out[i] = r > 0.0 ? mag : (r < 0.0 ? -mag : 0.0);
  }
  return out;
}

double immediate_effect(double beta_goal, double beta_time_of_first_goal, double t_first) {
  if (!std::isfinite(beta_goal) || !std::isfinite(beta_time_of_first_goal) ||
      !std::isfinite(t_first)) {
    throw ContractError("immediate_effect: inputs must be finite");
  }
  return std::exp(beta_goal + beta_time_of_first_goal * t_first);
}

double crossover_minute(double beta_goal, double beta_time_of_first_goal) {
  if (beta_time_of_first_goal == 0.0) {
    throw ContractError("crossover_minute: zero TimeOfFirstGoal coefficient");
  }
  return -beta_goal / beta_time_of_first_goal;
}

double elapsed_effect(double beta_log_elapsed, double minutes_since_goal) {
  if (!(minutes_since_goal > 0.0)) {
    throw ContractError("elapsed_effect: minutes_since_goal must be > 0");
  }
  return std::exp(beta_log_elapsed * std::log(minutes_since_goal));
}

double probwin_ratio(double beta_probwin, double delta_probwin) {
  if (!std::isfinite(beta_probwin) || !std::isfinite(delta_probwin)) {
    throw ContractError("probwin_ratio: inputs must be finite");
  }
  return std::exp(beta_probwin * delta_probwin);
}

}  // namespace goaltime
