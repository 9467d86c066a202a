#include "goaltime/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "goaltime/errors.hpp"
#include "goaltime/ingest.hpp"

namespace goaltime {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 6.283185307179586476925286766559;
}  // namespace

double Rng::uniform01() {
  // 53-bit mantissa, shifted into (0, 1].
  return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

double Rng::exponential(double rate) {
  if (!(rate > 0.0)) throw ContractError("Rng::exponential: rate must be > 0");
  return -std::log(uniform01()) / rate;
}

bool Rng::bernoulli(double p) { return uniform01() <= p; }

double Rng::normal() {
  // Box-Muller; consumes exactly two uniforms per call.
  const double u1 = uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

double Rng::gamma(double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0)) throw ContractError("Rng::gamma: bad parameters");
  if (shape < 1.0) {
    // Boost to shape + 1 and correct by U^(1/shape).
    const double u = uniform01();
    return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
  }
  // Marsaglia-Tsang squeeze.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform01();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
  }
}

std::uint64_t child_seed(std::uint64_t master, std::uint64_t index) {
  // splitmix64 over master + index steps.
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void SimParams::validate() const {
  spec.validate();
  if (!(baseline_rate > 0.0)) throw ContractError("SimParams: baseline_rate must be > 0");
  if (away_rate < 0.0) throw ContractError("SimParams: away_rate must be >= 0");
  if (theta < 0.0) throw ContractError("SimParams: theta must be >= 0");
  if (!(probwin_lo > 0.0 && probwin_hi < 1.0 && probwin_lo < probwin_hi)) {
    throw ContractError("SimParams: probwin range must satisfy 0 < lo < hi < 1");
  }
  if (!(season_p >= 0.0 && season_p <= 1.0)) throw ContractError("SimParams: bad season_p");
  if (stoppage_minutes < 0) throw ContractError("SimParams: stoppage_minutes must be >= 0");
  for (const auto& [t, v] : beta) {
    if (!std::isfinite(v)) throw ContractError("SimParams: coefficient for " + term_name(t) + " not finite");
  }
  if (spec.has(Term::TimeFromFirstGoal) && spec.transform == TimeTransform::Log &&
      coef(Term::TimeFromFirstGoal) <= -1.0) {
    throw ContractError("SimParams: log transform requires TimeFromFirstGoal coefficient > -1");
  }
}

namespace {

// Integrated second-goal hazard over (0, tau] after the first goal:
// rho * integral exp(b6 * g(s)) ds with g identity or log.
double cumhaz_after_goal(double rho, double b6, TimeTransform g, double tau) {
  if (tau <= 0.0) return 0.0;
  if (g == TimeTransform::Identity) {
    if (b6 == 0.0) return rho * tau;
    return rho * (std::exp(b6 * tau) - 1.0) / b6;
  }
  return rho * std::pow(tau, b6 + 1.0) / (b6 + 1.0);
}

// Inversion by bisection: smallest tau with cumhaz(tau) >= target,
// to 1e-9 minutes. Returns tau_max + 1 when the budget never reaches it.
double invert_cumhaz(double rho, double b6, TimeTransform g, double target, double tau_max) {
  if (cumhaz_after_goal(rho, b6, g, tau_max) < target) return tau_max + 1.0;
  double lo = 0.0, hi = tau_max;
  while (hi - lo > 1e-9) {
    const double mid = 0.5 * (lo + hi);
    if (cumhaz_after_goal(rho, b6, g, mid) >= target) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

// Virtual clock (0, 90 + 2s] -> recorded minute; stoppage spans map to 45/90.
int record_minute(double tv, int s) {
  double adj = tv;
  if (s > 0) {
    if (tv > 45.0 && tv <= 45.0 + s) {
      adj = 45.0;
    } else if (tv > 45.0 + s) {
      adj = tv - s;
      if (adj > 90.0) adj = 90.0;
    }
  }
  const int m = static_cast<int>(std::ceil(adj));
  return std::clamp(m, 1, 90);
}

}  // namespace

MatchRecord simulate_game(const SimParams& params, double prob_win, int season,
                          std::uint64_t seed) {
  params.validate();
  if (!(prob_win > 0.0 && prob_win < 1.0)) {
    throw ContractError("simulate_game: prob_win must lie in (0, 1)");
  }
  Rng rng(seed);
  const double horizon = 90.0 + 2.0 * params.stoppage_minutes;

  const double z = params.theta > 0.0 ? rng.gamma(1.0 / params.theta, params.theta) : 1.0;
  const double eta_fixed =
      params.coef(Term::ProbWin) * prob_win + params.coef(Term::Season) * season;
  const double home_rate1 = z * params.baseline_rate * std::exp(eta_fixed);

  MatchRecord m;
  m.game_id = "sim";
  m.season = season;
  m.home_team = "home";
  m.away_team = "away";
  // Odds consistent with prob_win under proportional normalization, no
  // overround: ingest recovers prob_win exactly.
  m.odds_home = 1.0 / prob_win;
  m.odds_draw = 1.0 / ((1.0 - prob_win) * 0.4);
  m.odds_away = 1.0 / ((1.0 - prob_win) * 0.6);

  const double t_home1 = rng.exponential(home_rate1);
  const double t_away1 = params.away_rate > 0.0 ? rng.exponential(params.away_rate) : kInf;
  const double t1 = std::min(t_home1, t_away1);
  if (t1 > horizon) return m;  // goalless

  const bool first_home = t_home1 <= t_away1;
  m.goals.push_back({record_minute(t1, params.stoppage_minutes), first_home});

  const double eta_second = eta_fixed + params.coef(Term::Goal) +
                            params.coef(Term::TimeOfFirstGoal) * t1 +
                            (first_home ? params.coef(Term::FirstGoalTeam) : 0.0);
  const double rho = z * params.baseline_rate * std::exp(eta_second);
  const double b6 = params.spec.has(Term::TimeFromFirstGoal)
                        ? params.coef(Term::TimeFromFirstGoal)
                        : 0.0;
  const double tau_max = horizon - t1;
  const double target = rng.exponential(1.0);
  const double tau_home = invert_cumhaz(rho, b6, params.spec.transform, target, tau_max);
  const double tau_away = params.away_rate > 0.0 ? rng.exponential(params.away_rate) : kInf;
  const double tau2 = std::min(tau_home, tau_away);
  if (tau2 <= tau_max) {
    const bool second_home = tau_home <= tau_away;
    m.goals.push_back({record_minute(t1 + tau2, params.stoppage_minutes), second_home});
  }
  return m;
}

std::vector<MatchRecord> simulate_league(int n_games, const SimParams& params,
                                         std::uint64_t seed) {
  if (n_games < 1) throw ContractError("simulate_league: n_games must be >= 1");
  params.validate();
  std::vector<MatchRecord> out;
  out.reserve(n_games);
  char buf[16];
  for (int g = 0; g < n_games; ++g) {
    Rng meta(child_seed(seed, 2 * static_cast<std::uint64_t>(g)));
    const double pw = meta.uniform(params.probwin_lo, params.probwin_hi);
    const int season = meta.bernoulli(params.season_p) ? 1 : 0;
    MatchRecord m =
        simulate_game(params, pw, season, child_seed(seed, 2 * static_cast<std::uint64_t>(g) + 1));
    std::snprintf(buf, sizeof(buf), "G%06d", g + 1);
    m.game_id = buf;
    out.push_back(std::move(m));
  }
  return out;
}

double brute_force_partial_loglik(const Dataset& dataset, const ModelSpec& spec,
                                  const Eigen::VectorXd& beta, Eigen::VectorXd* gradient,
                                  Eigen::MatrixXd* hessian) {
  if (dataset.rows.size() > 12) {
    throw ContractError("brute_force_partial_loglik: dataset too large (max 12 rows)");
  }
  spec.validate();
  const int n = static_cast<int>(dataset.rows.size());
  const int p = static_cast<int>(spec.terms.size());
  if (beta.size() != p) throw ContractError("brute_force_partial_loglik: beta dimension");

  auto stratum_of = [&](const ObservationRow& r) {
    return spec.stratify_by_goal ? r.goal_index - 1 : 0;
  };
  auto covariate = [&](const ObservationRow& r, Term t, double u) -> double {
    const bool second = r.goal_index == 2;
    switch (t) {
      case Term::ProbWin: return r.prob_win;
      case Term::Season: return r.season;
      case Term::Goal: return second ? 1.0 : 0.0;
      case Term::TimeOfFirstGoal: return second ? *r.time_of_first_goal : 0.0;
      case Term::FirstGoalTeam: return (second && *r.first_goal_team) ? 1.0 : 0.0;
      case Term::TimeFromFirstGoal: {
        if (!second) return 0.0;
        const double dt = u - *r.time_of_first_goal;
        return spec.transform == TimeTransform::Log ? std::log(dt) : dt;
      }
    }
    return 0.0;
  };

  // Distinct (stratum, event time) pairs, each handled from scratch.
  std::vector<std::pair<int, double>> keys;
  for (const auto& r : dataset.rows) {
    if (!r.event) continue;
    std::pair<int, double> k{stratum_of(r), r.exit};
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
  }
  std::sort(keys.begin(), keys.end());

  double loglik = 0.0;
  if (gradient) gradient->setZero(p);
  if (hessian) hessian->setZero(p, p);

  for (const auto& [s, u] : keys) {
    std::vector<int> at_risk, deaths;
    for (int i = 0; i < n; ++i) {
      const auto& r = dataset.rows[i];
      if (stratum_of(r) != s) continue;
      if (r.entry < u && u <= r.exit) at_risk.push_back(i);
      if (r.event && r.exit == u) deaths.push_back(i);
    }
    const int d = static_cast<int>(deaths.size());

    auto eta_of = [&](int i) {
      double e = 0.0;
      for (int k = 0; k < p; ++k) e += beta[k] * covariate(dataset.rows[i], spec.terms[k], u);
      return e;
    };

    for (int i : deaths) loglik += eta_of(i);
    if (gradient) {
      for (int i : deaths) {
        for (int k = 0; k < p; ++k) (*gradient)[k] += covariate(dataset.rows[i], spec.terms[k], u);
      }
    }

    for (int m = 0; m < d; ++m) {
      const double f = spec.ties == Ties::Efron ? static_cast<double>(m) / d : 0.0;
      double denom = 0.0;
      std::vector<double> num(p, 0.0);
      std::vector<double> num2(p * p, 0.0);
      for (int i : at_risk) {
        double weight = std::exp(eta_of(i));
        if (std::find(deaths.begin(), deaths.end(), i) != deaths.end()) weight *= 1.0 - f;
        denom += weight;
        for (int k = 0; k < p; ++k) {
          const double xk = covariate(dataset.rows[i], spec.terms[k], u);
          num[k] += weight * xk;
          for (int l = 0; l < p; ++l) {
            num2[k * p + l] += weight * xk * covariate(dataset.rows[i], spec.terms[l], u);
          }
        }
      }
      loglik -= std::log(denom);
      if (gradient) {
        for (int k = 0; k < p; ++k) (*gradient)[k] -= num[k] / denom;
      }
      if (hessian) {
        for (int k = 0; k < p; ++k) {
          for (int l = 0; l < p; ++l) {
            (*hessian)(k, l) -= num2[k * p + l] / denom - num[k] * num[l] / (denom * denom);
          }
        }
      }
    }
  }
  return loglik;
}

}  // namespace goaltime
