#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "goaltime/domain.hpp"
#include "goaltime/ingest.hpp"
#include "goaltime/simulate.hpp"

namespace testutil {

inline bool rel_close(double a, double b, double tol) {
  const double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
  return std::fabs(a - b) <= tol * scale;
}

inline goaltime::MatchRecord make_match(std::string id, int season,
                                        std::vector<std::pair<int, char>> goals,
                                        double oh = 2.5, double od = 3.3, double oa = 3.1) {
  goaltime::MatchRecord m;
  m.game_id = std::move(id);
  m.date = "2008-08-16";
  m.season = season;
  m.home_team = "H";
  m.away_team = "A";
  m.odds_home = oh;
  m.odds_draw = od;
  m.odds_away = oa;
  for (auto [minute, side] : goals) m.goals.push_back({minute, side == 'H'});
  return m;
}

// Random two-goal structures with realistic truncation, censoring, ties and
// the occasional minute-90 first goal; at most 2 * max_games rows.
inline goaltime::Dataset random_small_dataset(goaltime::Rng& rng, int max_games = 4) {
  using namespace goaltime;
  const int n_games = 1 + static_cast<int>(rng.uniform01() * max_games) % max_games;
  std::vector<MatchRecord> ms;
  for (int g = 0; g < n_games; ++g) {
    const double pw = rng.uniform(0.15, 0.8);
    MatchRecord m = make_match("G" + std::to_string(g + 1), rng.bernoulli(0.5) ? 1 : 0, {},
                               1.0 / pw, 1.0 / ((1.0 - pw) * 0.4), 1.0 / ((1.0 - pw) * 0.6));
    const double u = rng.uniform01();
    if (u >= 0.15) {
      const int m1 = u < 0.25 ? 90 : 1 + static_cast<int>(rng.uniform01() * 89.0);
      m.goals.push_back({m1, rng.bernoulli(0.55)});
      if (m1 < 90 && rng.bernoulli(0.7)) {
        const int m2 = std::min(90, m1 + static_cast<int>(rng.uniform01() * (91.0 - m1)));
        m.goals.push_back({m2, rng.bernoulli(0.55)});
      }
    }
    ms.push_back(std::move(m));
  }
  return build_dataset(ms);
}

inline goaltime::ModelSpec random_spec(goaltime::Rng& rng) {
  using namespace goaltime;
  ModelSpec s;
  const bool strat = rng.bernoulli(0.2);
  for (Term t : kAllTerms) {
    const bool second_only = t != Term::ProbWin && t != Term::Season;
    if (strat && second_only) continue;
    if (rng.bernoulli(0.65)) s.terms.push_back(t);
  }
  s.stratify_by_goal = strat;
  s.transform = rng.bernoulli(0.5) ? TimeTransform::Log : TimeTransform::Identity;
  s.ties = rng.bernoulli(0.5) ? Ties::Efron : Ties::Breslow;
  return s;
}

// Moderate coefficients; minute-scaled terms kept small so linear
// predictors stay O(1).
inline Eigen::VectorXd random_beta(goaltime::Rng& rng, const goaltime::ModelSpec& s) {
  using namespace goaltime;
  Eigen::VectorXd b(static_cast<int>(s.terms.size()));
  for (int i = 0; i < b.size(); ++i) {
    double scale = 0.3;
    if (s.terms[i] == Term::TimeOfFirstGoal) scale = 0.02;
    if (s.terms[i] == Term::TimeFromFirstGoal && s.transform == TimeTransform::Identity) {
      scale = 0.02;
    }
    b[i] = rng.uniform(-scale, scale);
  }
  return b;
}

}  // namespace testutil
