#include <doctest.h>

#include <cmath>

#include "goaltime/baseline.hpp"
#include "goaltime/coxfit.hpp"
#include "goaltime/errors.hpp"
#include "goaltime/simulate.hpp"
#include "helpers.hpp"

using namespace goaltime;
using testutil::make_match;

namespace {

Dataset sim_iii(int n, std::uint64_t seed, double pw_coef = 1.5) {
  SimParams p;
  p.spec = expand_preset("III");
  p.beta = {{Term::ProbWin, pw_coef}, {Term::Season, 0.2}};
  p.baseline_rate = 0.012;
  p.away_rate = 0.012;
  return build_dataset(simulate_league(n, p, seed));
}

const BaselineHazard& stratum(const std::vector<BaselineHazard>& bs, const std::string& name) {
  for (const auto& b : bs) {
    if (b.stratum == name) return b;
  }
  throw std::runtime_error("missing stratum " + name);
}

}  // namespace

TEST_CASE("zero coefficients reduce increments to Nelson-Aalen") {
  std::vector<MatchRecord> ms = {make_match("a", 0, {{10, 'H'}}),
                                 make_match("b", 0, {{25, 'H'}, {40, 'A'}}),
                                 make_match("c", 0, {})};
  Dataset ds = build_dataset(ms);
  ModelSpec spec;  // empty term set: fitted beta is the zero vector
  FitResult f = fit(ds, spec);
  auto bs = breslow_baseline(ds, spec, f);
  REQUIRE(bs.size() == 1);
  const auto& b = bs[0];
  REQUIRE(b.steps.size() == 3);  // origin + two event times
  CHECK(b.steps[0].time == 0.0);
  CHECK(b.steps[0].cum_hazard == 0.0);
  // Risk sets of size 3 at both event times (a2 replaces a1 at t=25).
  CHECK(b.increments[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(b.increments[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(b.steps[2].cum_hazard == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("baseline invariants on simulated fits") {
  Dataset ds = sim_iii(400, 21);
  ModelSpec spec = expand_preset("III");
  FitResult f = fit(ds, spec);
  auto bs = breslow_baseline(ds, spec, f);
  REQUIRE(bs.size() == 1);
  const auto& b = bs[0];
  REQUIRE(b.steps.size() > 10);
  CHECK(b.steps.front().time == 0.0);
  CHECK(b.steps.front().cum_hazard == 0.0);
  for (std::size_t i = 1; i < b.steps.size(); ++i) {
    CHECK(b.steps[i].time > b.steps[i - 1].time);
    CHECK(b.steps[i].cum_hazard >= b.steps[i - 1].cum_hazard);
    CHECK(b.steps[i].variance >= 0.0);
  }
}

TEST_CASE("stratified baselines split by goal index") {
  Dataset ds = sim_iii(400, 22);
  ModelSpec spec = expand_preset("VII");
  FitResult f = fit(ds, spec);
  auto bs = breslow_baseline(ds, spec, f);
  REQUIRE(bs.size() == 2);
  const auto& first = stratum(bs, "first");
  const auto& second = stratum(bs, "second");
  CHECK_FALSE(first.no_events);
  CHECK_FALSE(second.no_events);
  CHECK(first.steps.size() > 5);
  CHECK(second.steps.size() > 5);
}

TEST_CASE("a stratum without events is flagged with an empty step list") {
  // Every second-goal row censored: no events in the second stratum.
  std::vector<MatchRecord> ms = {make_match("a", 0, {{10, 'H'}}, 1.8, 3.8, 4.4),
                                 make_match("b", 1, {{20, 'A'}}, 3.2, 3.4, 2.2),
                                 make_match("c", 0, {}, 2.6, 3.3, 2.8),
                                 make_match("d", 1, {{30, 'H'}}, 2.1, 3.5, 3.3),
                                 make_match("e", 0, {{55, 'H'}}, 4.0, 3.6, 1.9)};
  Dataset ds = build_dataset(ms);
  ModelSpec spec = expand_preset("VII");
  FitResult f = fit(ds, spec);
  auto bs = breslow_baseline(ds, spec, f);
  const auto& second = stratum(bs, "second");
  CHECK(second.no_events);
  CHECK(second.steps.empty());
  CHECK_THROWS_AS(survival_curve(f, bs, Profile{0.5, 0, 25.0, true, "p"}), ContractError);
}

TEST_CASE("zero-covariate profile reproduces exp(-baseline) exactly") {
  Dataset ds = sim_iii(300, 23);
  ModelSpec spec = expand_preset("III");
  FitResult f = fit(ds, spec);
  auto bs = breslow_baseline(ds, spec, f);
  Profile zero{0.0, 0, std::nullopt, std::nullopt, "zero"};
  SurvivalCurve c = survival_curve(f, bs, zero);
  REQUIRE(c.points.size() == bs[0].steps.size());
  for (std::size_t i = 1; i < c.points.size(); ++i) {
    CHECK(c.points[i].survival ==
          doctest::Approx(std::exp(-bs[0].steps[i].cum_hazard)).epsilon(1e-14));
  }
}

TEST_CASE("survival curves are proper and ordered in prob_win") {
  Dataset ds = sim_iii(500, 24);
  ModelSpec spec = expand_preset("III");
  FitResult f = fit(ds, spec);
  REQUIRE(f.coefficient(Term::ProbWin) > 0.0);
  auto bs = breslow_baseline(ds, spec, f);

  std::vector<SurvivalCurve> curves;
  for (double pw : {0.15, 0.35, 0.55, 0.75}) {
    curves.push_back(survival_curve(f, bs, Profile{pw, 1, std::nullopt, std::nullopt, ""}));
  }
  for (const auto& c : curves) {
    CHECK(c.points.front().survival == 1.0);
    for (std::size_t i = 0; i < c.points.size(); ++i) {
      const auto& pt = c.points[i];
      CHECK(pt.lower95 <= pt.survival + 1e-12);
      CHECK(pt.survival <= pt.upper95 + 1e-12);
      CHECK(pt.upper95 <= 1.0);
      CHECK(pt.lower95 >= 0.0);
      if (i) CHECK(c.points[i].survival <= c.points[i - 1].survival + 1e-12);
    }
  }
  // Higher prob_win lies everywhere lower (single positive coefficient).
  for (std::size_t i = 1; i < curves.size(); ++i) {
    REQUIRE(curves[i].points.size() == curves[i - 1].points.size());
    for (std::size_t k = 1; k < curves[i].points.size(); ++k) {
      CHECK(curves[i].points[k].survival < curves[i - 1].points[k].survival);
    }
  }
}

TEST_CASE("second-goal profiles start at the first-goal time") {
  SimParams p;
  p.spec = expand_preset("VI");
  p.beta = {{Term::ProbWin, 1.9}, {Term::Season, 0.15}, {Term::Goal, -0.6},
            {Term::TimeOfFirstGoal, 0.011}, {Term::TimeFromFirstGoal, 0.16}};
  p.baseline_rate = 0.012;
  p.away_rate = 0.012;
  Dataset ds = build_dataset(simulate_league(600, p, 25));
  ModelSpec spec = expand_preset("VI");
  FitResult f = fit(ds, spec);
  auto bs = breslow_baseline(ds, spec, f);

  SurvivalCurve c = survival_curve(f, bs, Profile{0.5, 1, 25.0, std::nullopt, "tfg25"});
  CHECK(c.points.front().time == 25.0);
  CHECK(c.points.front().survival == 1.0);
  for (const auto& pt : c.points) CHECK(pt.time >= 25.0);

  CHECK_THROWS_AS(survival_curve(f, bs, Profile{0.5, 1, 90.0, std::nullopt, ""}),
                  ContractError);
  CHECK_THROWS_AS(survival_curve(f, bs, Profile{1.5, 1, std::nullopt, std::nullopt, ""}),
                  ContractError);
}

TEST_CASE("referencing convention: shifted covariates yield identical curves") {
  Dataset ds = sim_iii(350, 26);
  ModelSpec spec = expand_preset("III");
  FitResult f = fit(ds, spec);
  auto bs = breslow_baseline(ds, spec, f);

  const double shift = 0.1;
  Dataset moved = ds;
  for (auto& r : moved.rows) r.prob_win -= shift;
  FitResult f2 = fit(moved, spec);
  auto bs2 = breslow_baseline(moved, spec, f2);

  SurvivalCurve a = survival_curve(f, bs, Profile{0.5, 1, std::nullopt, std::nullopt, ""});
  SurvivalCurve b = survival_curve(f2, bs2, Profile{0.5 - shift, 1, std::nullopt, std::nullopt, ""});
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(std::fabs(a.points[i].survival - b.points[i].survival) < 1e-8);
    CHECK(std::fabs(a.points[i].lower95 - b.points[i].lower95) < 1e-8);
  }
}

TEST_CASE("confidence bands shrink with sample size") {
  ModelSpec spec = expand_preset("III");
  auto width_at_mid = [&](int n, std::uint64_t seed) {
    Dataset ds = sim_iii(n, seed);
    FitResult f = fit(ds, spec);
    auto bs = breslow_baseline(ds, spec, f);
    SurvivalCurve c = survival_curve(f, bs, Profile{0.45, 0, std::nullopt, std::nullopt, ""});
    const auto& pt = c.points[c.points.size() / 2];
    return pt.upper95 - pt.lower95;
  };
  CHECK(width_at_mid(200, 27) > width_at_mid(2000, 28));
}

TEST_CASE("baseline rejects unconverged fits") {
  Dataset ds = sim_iii(100, 29);
  ModelSpec spec = expand_preset("III");
  FitResult f = fit(ds, spec);
  f.converged = false;
  CHECK_THROWS_AS(breslow_baseline(ds, spec, f), ContractError);
}
