#include "goaltime/frailty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "goaltime/errors.hpp"
#include "goaltime/stats.hpp"

namespace goaltime {

namespace {

constexpr double kThetaLo = 1e-6;
constexpr double kThetaHi = 10.0;
constexpr double kLogThetaTol = 1e-4;
constexpr double kEmTol = 1e-8;
constexpr int kEmMaxSweeps = 2000;

// Gamma-integrated contribution of one game: sum_{m<D} log(1+m*theta)
// - D*log(1+theta*C) - (1/theta)*log1p(theta*C). Tends to -C as theta -> 0.
double game_marginal_part(double theta, int events, double load) {
  double a = 0.0;
  for (int m = 0; m < events; ++m) a += std::log1p(m * theta);
  a -= events * std::log1p(theta * load);
  a -= std::log1p(theta * load) / theta;
  return a;
}

}  // namespace

FrailtyState em_solve(const CoxEngine& engine, double theta, const Eigen::VectorXd& beta_init,
                      std::vector<double>* loglik_trace) {
  if (!(theta > 0.0)) throw ContractError("em_solve: theta must be > 0");
  const int n_games = static_cast<int>(engine.game_ids().size());
  const std::vector<int> game_of_row = engine.game_of_row();
  const int n_rows = engine.n_rows();

  (void)n_rows;
  const std::vector<int> events_per_game = engine.events_per_game();

  // sum over tie groups of d*log(d), recovered from the scale constant.
  const double log_sum_d = engine.loglik_scale_constant() + engine.n_events();

  std::vector<double> w(n_games, 1.0);
  Eigen::VectorXd beta = beta_init;
  std::vector<double> offsets(engine.n_rows(), 0.0);

  FrailtyState state;
  state.theta = theta;
  double prev = -std::numeric_limits<double>::infinity();

  FitOptions opts;
  opts.want_null_loglik = false;
  for (int sweep = 1; sweep <= kEmMaxSweeps; ++sweep) {
    for (int i = 0; i < engine.n_rows(); ++i) offsets[i] = std::log(w[game_of_row[i]]);
    opts.init = beta;
    opts.offsets = offsets;
    FitResult m = engine.fit(opts);
    beta = m.coefficients;

    // Frailty-free exposure load per game under the current baseline.
    const std::vector<double> row_load =
        engine.row_cumhaz(beta, offsets, /*breslow_ties=*/true, /*death_downweight=*/false,
                          /*offset_in_numerator=*/false);
    std::vector<double> load(n_games, 0.0);
    for (int i = 0; i < engine.n_rows(); ++i) load[game_of_row[i]] += row_load[i];

    double marginal = m.loglik_final + log_sum_d;
    for (int g = 0; g < n_games; ++g) {
      if (!(load[g] > 0.0)) {
        throw ContractError("em_solve: non-positive cumulative hazard load for game " +
                            engine.game_ids()[g] + " (empty exposure)");
      }
      marginal += game_marginal_part(theta, events_per_game[g], load[g]);
      marginal -= events_per_game[g] * std::log(w[g]);
    }
    if (loglik_trace) loglik_trace->push_back(marginal);

    state.beta = beta;
    state.profile_loglik = marginal;
    state.em_iterations = sweep;

    // E-step: gamma posterior means given current (beta, baseline).
    const double inv_theta = 1.0 / theta;
    for (int g = 0; g < n_games; ++g) {
      w[g] = (inv_theta + events_per_game[g]) / (inv_theta + load[g]);
    }
    state.posterior_means = w;
    state.loads = load;
    state.event_counts = events_per_game;

    if (std::fabs(marginal - prev) < kEmTol) break;
    prev = marginal;
  }
  return state;
}

FitResult fit_frailty(const Dataset& dataset, const ModelSpec& spec) {
  if (!spec.frailty) throw ContractError("fit_frailty: spec.frailty must be true");
  spec.validate();

  // The EM is run with Breslow tie handling throughout so that each sweep
  // exactly maximizes the expected complete-data likelihood; the profile
  // trace is then nondecreasing and the theta = 0 limit matches the plain
  // Breslow fit.
  ModelSpec inner = spec;
  inner.frailty = false;
  inner.ties = Ties::Breslow;
  CoxEngine engine(dataset, inner);

  FitResult base = engine.fit();
  const double scale_const = engine.loglik_scale_constant();
  const double full0 = base.loglik_final + scale_const;

  int total_sweeps = 0;
  Eigen::VectorXd warm = base.coefficients;
  auto profile = [&](double log_theta) {
    FrailtyState s = em_solve(engine, std::exp(log_theta), warm);
    warm = s.beta;
    total_sweeps += s.em_iterations;
    return s;
  };

  // Golden-section maximization of the profile marginal over log theta.
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = std::log(kThetaLo), b = std::log(kThetaHi);
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  FrailtyState s1 = profile(x1);
  FrailtyState s2 = profile(x2);
  while (b - a > kLogThetaTol) {
    if (s1.profile_loglik >= s2.profile_loglik) {
      b = x2;
      x2 = x1;
      s2 = s1;
      x1 = b - invphi * (b - a);
      s1 = profile(x1);
    } else {
      a = x1;
      x1 = x2;
      s1 = s2;
      x2 = a + invphi * (b - a);
      s2 = profile(x2);
    }
  }
  const double log_theta_hat = 0.5 * (a + b);
  FrailtyState best = profile(log_theta_hat);
  const double theta_hat = best.theta;
  const bool at_upper = std::log(kThetaHi) - log_theta_hat < 2.0 * kLogThetaTol;

  // Final M-step fit at theta_hat for coefficients and covariance.
  std::vector<double> offsets(engine.n_rows());
  const std::vector<int> game_of_row = engine.game_of_row();
  for (int i = 0; i < engine.n_rows(); ++i) {
    offsets[i] = std::log(best.posterior_means[game_of_row[i]]);
  }
  FitOptions final_opts;
  final_opts.init = best.beta;
  final_opts.offsets = offsets;
  final_opts.want_null_loglik = false;
  FitResult final_fit = engine.fit(final_opts);

  FitResult res;
  res.spec = spec;
  res.spec.ties = Ties::Breslow;
  res.coefficients = final_fit.coefficients;
  res.covariance = final_fit.covariance;
  res.loglik_null = base.loglik_null;
  res.loglik_final = best.profile_loglik - scale_const;  // partial scale
  res.theta = theta_hat;
  res.iterations = total_sweeps;
  res.converged = final_fit.converged && !at_upper;
  res.loglik_path = final_fit.loglik_path;
  const auto& ids = engine.game_ids();
  for (std::size_t g = 0; g < ids.size(); ++g) {
    res.frailty_values[ids[g]] = best.posterior_means[g];
  }

  FrailtyTest test;
  test.statistic = std::max(0.0, 2.0 * (best.profile_loglik - full0));
  test.p_value = chisq_upper_tail(test.statistic, 1);
  test.at_upper_bound = at_upper;
  res.frailty_test = test;
  return res;
}

}  // namespace goaltime
