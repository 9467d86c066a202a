#pragma once

#include <Eigen/Core>
#include <map>
#include <string>
#include <vector>

#include "goaltime/coxfit.hpp"
#include "goaltime/domain.hpp"
#include "goaltime/ingest.hpp"

namespace goaltime {

/// State of the shared gamma frailty EM at a fixed variance theta.
struct FrailtyState {
  double theta = 0.0;
  Eigen::VectorXd beta;
  std::vector<double> posterior_means;  // per game, engine game order
  std::vector<double> loads;            // per game C_i behind the posteriors
  std::vector<int> event_counts;        // per game D_i
  double profile_loglik = 0.0;          // marginal loglik, full scale
  int em_iterations = 0;
};

/// One inner EM solve at fixed theta > 0: alternates the gamma posterior
/// E-step with an offset Cox refit and Breslow baseline until the marginal
/// log-likelihood moves less than 1e-8. loglik_trace records the marginal
/// after every sweep (nondecreasing).
FrailtyState em_solve(const CoxEngine& engine, double theta, const Eigen::VectorXd& beta_init,
                      std::vector<double>* loglik_trace = nullptr);

/// Fit the shared gamma frailty model: profile the marginal log-likelihood
/// over theta by golden-section search on log theta in [log 1e-6, log 10].
FitResult fit_frailty(const Dataset& dataset, const ModelSpec& spec);

}  // namespace goaltime
