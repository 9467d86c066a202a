#include "goaltime/domain.hpp"

#include <algorithm>
#include <cmath>

#include "goaltime/errors.hpp"

namespace goaltime {

namespace {

const std::array<std::string, 6> kTermNames = {
    "ProbWin",         "Season",        "Goal",
    "TimeOfFirstGoal", "FirstGoalTeam", "TimeFromFirstGoal",
};

const std::array<Term, 4> kSecondGoalTerms = {
    Term::Goal, Term::TimeOfFirstGoal, Term::FirstGoalTeam, Term::TimeFromFirstGoal};

}  // namespace

const std::string& term_name(Term t) { return kTermNames[static_cast<int>(t)]; }

Term term_from_name(const std::string& name) {
  for (std::size_t i = 0; i < kTermNames.size(); ++i) {
    if (kTermNames[i] == name) return static_cast<Term>(i);
  }
  throw ContractError("unknown term name: " + name);
}

void MatchRecord::validate() const {
  if (game_id.empty()) throw ContractError("MatchRecord: empty game_id");
  if (season != 0 && season != 1) {
    throw ContractError("MatchRecord " + game_id + ": season must be 0 or 1");
  }
  if (!(odds_home > 1.0)) throw ContractError("MatchRecord " + game_id + ": odds_home must be > 1");
  if (!(odds_draw > 1.0)) throw ContractError("MatchRecord " + game_id + ": odds_draw must be > 1");
  if (!(odds_away > 1.0)) throw ContractError("MatchRecord " + game_id + ": odds_away must be > 1");
  int prev = 0;
  for (const auto& g : goals) {
    if (g.minute < 1 || g.minute > 90) {
      throw ContractError("MatchRecord " + game_id + ": goal minute outside [1, 90]");
    }
    if (g.minute < prev) {
      throw ContractError("MatchRecord " + game_id + ": goals not sorted by minute");
    }
    prev = g.minute;
  }
}

void ObservationRow::validate() const {
  if (goal_index != 1 && goal_index != 2) {
    throw ContractError("ObservationRow " + game_id + ": goal_index must be 1 or 2");
  }
  if (!(entry >= 0.0)) throw ContractError("ObservationRow " + game_id + ": entry must be >= 0");
  if (!(entry < exit)) throw ContractError("ObservationRow " + game_id + ": requires entry < exit");
  if (!(exit <= 90.0)) throw ContractError("ObservationRow " + game_id + ": exit must be <= 90");
  if (!(prob_win > 0.0 && prob_win < 1.0)) {
    throw ContractError("ObservationRow " + game_id + ": prob_win must lie in (0, 1)");
  }
  if (season != 0 && season != 1) {
    throw ContractError("ObservationRow " + game_id + ": season must be 0 or 1");
  }
  const bool has_context = time_of_first_goal.has_value() && first_goal_team.has_value();
  if (goal_index == 2) {
    if (!has_context) {
      throw ContractError("ObservationRow " + game_id + ": j=2 rows need first-goal context");
    }
    if (*time_of_first_goal != entry) {
      throw ContractError("ObservationRow " + game_id + ": j=2 entry must equal time_of_first_goal");
    }
  } else if (time_of_first_goal || first_goal_team) {
    throw ContractError("ObservationRow " + game_id + ": j=1 rows carry no first-goal context");
  }
}

bool ModelSpec::has(Term t) const {
  return std::find(terms.begin(), terms.end(), t) != terms.end();
}

int ModelSpec::index_of(Term t) const {
  auto it = std::find(terms.begin(), terms.end(), t);
  return it == terms.end() ? -1 : static_cast<int>(it - terms.begin());
}

void ModelSpec::validate() const {
  for (std::size_t i = 1; i < terms.size(); ++i) {
    if (!(static_cast<int>(terms[i - 1]) < static_cast<int>(terms[i]))) {
      throw ContractError("ModelSpec: terms must be unique and in canonical order");
    }
  }
  if (stratify_by_goal) {
    for (Term t : kSecondGoalTerms) {
      if (has(t)) {
        throw ContractError("ModelSpec: stratified specs exclude second-goal terms (" +
                            term_name(t) + ")");
      }
    }
  }
}

ModelSpec expand_preset(const std::string& name) {
  ModelSpec spec;
  spec.label = name;
  if (name == "I" || name == "II") {
    spec.terms = {Term::ProbWin, Term::Season, Term::Goal, Term::TimeOfFirstGoal,
                  Term::FirstGoalTeam, Term::TimeFromFirstGoal};
    spec.frailty = (name == "II");
  } else if (name == "III") {
    spec.terms = {Term::ProbWin, Term::Season};
  } else if (name == "IV") {
    spec.terms = {Term::ProbWin, Term::Season, Term::TimeOfFirstGoal};
  } else if (name == "V" || name == "VI") {
    spec.terms = {Term::ProbWin, Term::Season, Term::Goal, Term::TimeOfFirstGoal,
                  Term::TimeFromFirstGoal};
    spec.transform = (name == "VI") ? TimeTransform::Log : TimeTransform::Identity;
  } else if (name == "VII") {
    spec.terms = {Term::ProbWin, Term::Season};
    spec.stratify_by_goal = true;
  } else {
    throw ContractError("unknown model preset: " + name + " (expected I..VII)");
  }
  spec.validate();
  return spec;
}

double FitResult::coefficient(Term t) const {
  const int i = spec.index_of(t);
  if (i < 0) throw ContractError("FitResult: model has no term " + term_name(t));
  return coefficients[i];
}

double FitResult::standard_error(Term t) const {
  const int i = spec.index_of(t);
  if (i < 0) throw ContractError("FitResult: model has no term " + term_name(t));
  return std::sqrt(covariance(i, i));
}

}  // namespace goaltime
