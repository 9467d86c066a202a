#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "goaltime/domain.hpp"
#include "goaltime/ingest.hpp"

namespace goaltime {

/// Deterministic RNG: fixed mappings over the standardized mt19937_64
/// stream, so a seed produces identical draws on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform01();  // in (0, 1]
  double uniform(double lo, double hi);
  double exponential(double rate);
  bool bernoulli(double p);
  double normal();
  double gamma(double shape, double scale);

 private:
  std::mt19937_64 gen_;
};

std::uint64_t child_seed(std::uint64_t master, std::uint64_t index);

/// Generating parameters: coefficients on the spec's terms (absent = 0),
/// a constant per-minute baseline rate for home goals, an independent
/// constant away rate, and an optional shared gamma frailty variance.
struct SimParams {
  ModelSpec spec;
  std::map<Term, double> beta;
  double baseline_rate = 0.01;
  double away_rate = 0.01;
  double theta = 0.0;
  double probwin_lo = 0.15;
  double probwin_hi = 0.80;
  double season_p = 0.5;
  int stoppage_minutes = 0;  // > 0 piles extra exposure onto minutes 45/90

  double coef(Term t) const {
    auto it = beta.find(t);
    return it == beta.end() ? 0.0 : it->second;
  }
  void validate() const;
};

MatchRecord simulate_game(const SimParams& params, double prob_win, int season,
                          std::uint64_t seed);

std::vector<MatchRecord> simulate_league(int n_games, const SimParams& params,
                                         std::uint64_t seed);

/// Testing oracle: materializes every risk set by exhaustive scan and
/// computes the tie-corrected partial likelihood (and optionally its exact
/// derivatives) with no shared-computation shortcuts. Max 12 rows.
double brute_force_partial_loglik(const Dataset& dataset, const ModelSpec& spec,
                                  const Eigen::VectorXd& beta,
                                  Eigen::VectorXd* gradient = nullptr,
                                  Eigen::MatrixXd* hessian = nullptr);

}  // namespace goaltime
