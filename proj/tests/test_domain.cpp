#include <doctest.h>

#include <algorithm>

#include "goaltime/domain.hpp"
#include "goaltime/errors.hpp"
#include "helpers.hpp"

using namespace goaltime;

TEST_CASE("preset expansions match the model catalog") {
  const ModelSpec iii = expand_preset("III");
  CHECK(iii.terms == std::vector<Term>{Term::ProbWin, Term::Season});
  CHECK_FALSE(iii.stratify_by_goal);
  CHECK_FALSE(iii.frailty);
  CHECK(iii.ties == Ties::Efron);

  const ModelSpec vi = expand_preset("VI");
  CHECK(vi.terms == std::vector<Term>{Term::ProbWin, Term::Season, Term::Goal,
                                      Term::TimeOfFirstGoal, Term::TimeFromFirstGoal});
  CHECK(vi.transform == TimeTransform::Log);
  CHECK_FALSE(vi.frailty);

  const ModelSpec ii = expand_preset("II");
  const ModelSpec i = expand_preset("I");
  CHECK(ii.terms == i.terms);
  CHECK(i.terms.size() == 6);
  CHECK(ii.frailty);
  CHECK_FALSE(i.frailty);

  const ModelSpec iv = expand_preset("IV");
  CHECK(iv.terms == std::vector<Term>{Term::ProbWin, Term::Season, Term::TimeOfFirstGoal});

  const ModelSpec vii = expand_preset("VII");
  CHECK(vii.stratify_by_goal);
  CHECK(vii.terms == iii.terms);
}

TEST_CASE("preset expansion is idempotent and total over I..VII") {
  for (const char* name : {"I", "II", "III", "IV", "V", "VI", "VII"}) {
    const ModelSpec a = expand_preset(name);
    const ModelSpec b = expand_preset(name);
    CHECK(a.terms == b.terms);
    CHECK(a.transform == b.transform);
    CHECK(a.stratify_by_goal == b.stratify_by_goal);
    CHECK(a.frailty == b.frailty);
  }
  CHECK_THROWS_AS(expand_preset("VIII"), ContractError);
  CHECK_THROWS_AS(expand_preset("ii"), ContractError);
}

TEST_CASE("model nesting is machine-checkable") {
  auto subset = [](const std::vector<Term>& a, const std::vector<Term>& b) {
    return std::all_of(a.begin(), a.end(), [&](Term t) {
      return std::find(b.begin(), b.end(), t) != b.end();
    });
  };
  const auto iii = expand_preset("III"), iv = expand_preset("IV"), v = expand_preset("V"),
             vi = expand_preset("VI");
  CHECK(subset(iii.terms, iv.terms));
  CHECK(iii.terms.size() < iv.terms.size());
  CHECK(subset(iv.terms, v.terms));
  CHECK(iv.terms.size() < v.terms.size());
  CHECK(v.terms == vi.terms);
  CHECK(v.transform != vi.transform);
}

TEST_CASE("spec validation rejects stratified second-goal terms") {
  ModelSpec s;
  s.terms = {Term::ProbWin, Term::Goal};
  s.stratify_by_goal = true;
  CHECK_THROWS_AS(s.validate(), ContractError);
  s.stratify_by_goal = false;
  CHECK_NOTHROW(s.validate());

  ModelSpec unordered;
  unordered.terms = {Term::Season, Term::ProbWin};
  CHECK_THROWS_AS(unordered.validate(), ContractError);
}

TEST_CASE("match record invariants") {
  auto m = testutil::make_match("g1", 0, {{19, 'H'}, {29, 'A'}});
  CHECK_NOTHROW(m.validate());

  auto bad_odds = m;
  bad_odds.odds_draw = 1.0;
  CHECK_THROWS_WITH_AS(bad_odds.validate(), doctest::Contains("odds_draw"), ContractError);

  auto unsorted = m;
  std::swap(unsorted.goals[0], unsorted.goals[1]);
  CHECK_THROWS_AS(unsorted.validate(), ContractError);

  auto bad_minute = m;
  bad_minute.goals[0].minute = 0;
  CHECK_THROWS_AS(bad_minute.validate(), ContractError);
  bad_minute.goals[0].minute = 91;
  CHECK_THROWS_AS(bad_minute.validate(), ContractError);

  auto bad_season = m;
  bad_season.season = 2;
  CHECK_THROWS_AS(bad_season.validate(), ContractError);
}

TEST_CASE("observation row invariants") {
  ObservationRow r;
  r.game_id = "g";
  r.goal_index = 1;
  r.entry = 0.0;
  r.exit = 19.0;
  r.event = true;
  r.prob_win = 0.5;
  CHECK_NOTHROW(r.validate());

  auto bad = r;
  bad.exit = 0.0;
  CHECK_THROWS_AS(bad.validate(), ContractError);

  auto second = r;
  second.goal_index = 2;
  CHECK_THROWS_AS(second.validate(), ContractError);  // missing context
  second.entry = 19.0;
  second.exit = 29.0;
  second.time_of_first_goal = 19.0;
  second.first_goal_team = true;
  CHECK_NOTHROW(second.validate());
  second.time_of_first_goal = 18.0;
  CHECK_THROWS_AS(second.validate(), ContractError);  // entry != t~
}
