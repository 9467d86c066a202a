#pragma once

#include <vector>

#include "goaltime/domain.hpp"
#include "goaltime/ingest.hpp"

namespace goaltime {

/// Martingale residuals r_ij = delta_ij - H_ij(exposure), accumulated over
/// (entry, exit] with the fit's tie correction; they sum to zero.
std::vector<double> martingale_residuals(const Dataset& dataset, const ModelSpec& spec,
                                         const FitResult& fit,
                                         const std::vector<BaselineHazard>& baseline);

/// Deviance residuals from martingale residuals and event flags.
std::vector<double> deviance_residuals(const std::vector<double>& martingale,
                                       const std::vector<bool>& events);

/// Immediate multiplicative effect of a first goal at t_first on the hazard.
double immediate_effect(double beta_goal, double beta_time_of_first_goal, double t_first);

/// First-goal minute at which the immediate effect is exactly neutral.
double crossover_minute(double beta_goal, double beta_time_of_first_goal);

/// Hazard multiplier a given number of minutes after the first goal under a
/// log elapsed-time effect.
double elapsed_effect(double beta_log_elapsed, double minutes_since_goal);

/// Hazard ratio between two teams separated by delta_probwin.
double probwin_ratio(double beta_probwin, double delta_probwin);

}  // namespace goaltime
