#pragma once

#include <Eigen/Core>
#include <memory>
#include <string>
#include <vector>

#include "goaltime/domain.hpp"
#include "goaltime/ingest.hpp"

namespace goaltime {

struct LoglikParts {
  double loglik = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;  // of the log partial likelihood (negative semidefinite)
};

/// One risk set: the rows at risk at an event time with their covariates
/// evaluated at that time. entry < event_time <= exit.
struct RiskSetView {
  double event_time = 0.0;
  int stratum = 0;
  std::vector<int> event_rows;    // indices into Dataset::rows
  std::vector<int> at_risk_rows;  // indices into Dataset::rows
  Eigen::MatrixXd covariates;     // |at_risk_rows| x |terms|, at event_time
};

struct FitOptions {
  Eigen::VectorXd init;          // starting coefficients; empty = zeros
  std::vector<double> offsets;   // per-row linear-predictor offsets; empty = zeros
  double tol = 1e-9;             // relative loglik change
  int max_iterations = 25;
  int max_halvings = 10;
  double divergence_bound = 20.0;
  bool want_null_loglik = true;  // EM sweeps skip the beta = 0 evaluation
};

struct BaselineJump {
  double time = 0.0;
  int deaths = 0;
  double increment = 0.0;       // tie-corrected hazard jump
  double var_increment = 0.0;   // naive variance of the jump
  Eigen::VectorXd dinc_dbeta;   // derivative of the jump w.r.t. coefficients
};

/// Prepared view over (dataset, spec) for repeated likelihood and
/// post-fit evaluations. Frailty is handled by the caller via offsets.
class CoxEngine {
 public:
  CoxEngine(const Dataset& dataset, const ModelSpec& spec);
  ~CoxEngine();
  CoxEngine(CoxEngine&&) noexcept;
  CoxEngine& operator=(CoxEngine&&) noexcept;

  int n_rows() const;
  int n_terms() const;
  int n_events() const;
  int n_strata() const;

  LoglikParts loglik(const Eigen::VectorXd& beta,
                     const std::vector<double>& offsets = {}) const;
  double loglik_value(const Eigen::VectorXd& beta,
                      const std::vector<double>& offsets = {}) const;

  FitResult fit(const FitOptions& options = {}) const;

  /// Baseline hazard jumps per stratum at the given coefficients.
  std::vector<std::vector<BaselineJump>> baseline_jumps(
      const Eigen::VectorXd& beta, const std::vector<double>& offsets = {},
      bool breslow_ties = false) const;

  /// Per-row accumulated hazard over (entry, exit]. With death_downweight,
  /// rows dying in a tie get the Efron-downweighted share so that
  /// event flags minus the result sum to zero exactly. offsets always enter
  /// the denominators; offset_in_numerator controls the per-row weight
  /// (false yields the frailty-free exposure load of the EM E-step).
  std::vector<double> row_cumhaz(const Eigen::VectorXd& beta,
                                 const std::vector<double>& offsets = {},
                                 bool breslow_ties = false,
                                 bool death_downweight = true,
                                 bool offset_in_numerator = true) const;

  /// Sum over tied event times of d*log(d) - d; converts between partial
  /// and full (Breslow-profiled) log-likelihood scales.
  double loglik_scale_constant() const;

  /// Frailty grouping: sorted game ids, per-row game index, per-game
  /// event counts.
  const std::vector<std::string>& game_ids() const;
  std::vector<int> game_of_row() const;
  std::vector<int> events_per_game() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

LoglikParts partial_loglik(const Dataset& dataset, const ModelSpec& spec,
                           const Eigen::VectorXd& beta,
                           const std::vector<double>& offsets = {});

FitResult fit(const Dataset& dataset, const ModelSpec& spec, const FitOptions& options = {});

/// exp(coef), the multiplicative effect reported next to each coefficient.
double hazard_ratio(double coef);

struct LrtResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Likelihood-ratio test of a nested against a full fit on the same data.
/// When the full fit is a frailty model tested against its own theta = 0
/// boundary, the statistic stored by fit_frailty is used.
LrtResult lrt(const FitResult& nested, const FitResult& full, int df);

std::vector<RiskSetView> enumerate_risk_sets(const Dataset& dataset, const ModelSpec& spec);

}  // namespace goaltime
