#pragma once

#include <vector>

#include "goaltime/domain.hpp"
#include "goaltime/ingest.hpp"

namespace goaltime {

/// Breslow cumulative baseline hazard per stratum ("all", or "first" and
/// "second" under stratification), referenced to the all-zero covariate
/// profile, with the tie correction of the fitted spec. Variance combines
/// the step variance with the delta-method term for coefficient
/// uncertainty.
std::vector<BaselineHazard> breslow_baseline(const Dataset& dataset, const ModelSpec& spec,
                                             const FitResult& fit);

/// Predicted survival curve for a covariate profile. Second-goal profiles
/// start at their first-goal time; the 95% band is computed on the log
/// cumulative-hazard scale and mapped back.
SurvivalCurve survival_curve(const FitResult& fit, const std::vector<BaselineHazard>& baselines,
                             const Profile& profile);

}  // namespace goaltime
