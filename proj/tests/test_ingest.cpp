#include <doctest.h>

#include <cmath>
#include <sstream>

#include "goaltime/errors.hpp"
#include "goaltime/ingest.hpp"
#include "goaltime/simulate.hpp"
#include "helpers.hpp"

using namespace goaltime;
using testutil::make_match;

TEST_CASE("probwin from odds") {
  CHECK(probwin_from_odds(2.0, 4.0, 4.0) == doctest::Approx(0.5).epsilon(1e-12));
  for (double o : {1.5, 2.0, 3.7, 10.0}) {
    CHECK(probwin_from_odds(o, o, o) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
  CHECK(probwin_from_odds(1.5, 4.2, 6.0) == doctest::Approx(28.0 / 45.0).epsilon(1e-12));
  CHECK_THROWS_WITH_AS(probwin_from_odds(1.0, 4.0, 4.0), doctest::Contains("odds_home"),
                       ContractError);
  CHECK_THROWS_WITH_AS(probwin_from_odds(2.0, 0.9, 4.0), doctest::Contains("odds_draw"),
                       ContractError);
  CHECK_THROWS_WITH_AS(probwin_from_odds(2.0, 4.0, -1.0), doctest::Contains("odds_away"),
                       ContractError);
}

TEST_CASE("probwin is invariant to a common implied-probability factor") {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const double oh = rng.uniform(1.6, 8.0);
    const double od = rng.uniform(1.6, 8.0);
    const double oa = rng.uniform(1.6, 8.0);
    const double f = rng.uniform(0.7, 1.5);  // odds/f stays > 1 for these ranges
    if (std::min({oh, od, oa}) / f <= 1.0) continue;
    CHECK(testutil::rel_close(probwin_from_odds(oh, od, oa),
                              probwin_from_odds(oh / f, od / f, oa / f), 1e-12));
  }
}

TEST_CASE("two-goal observation construction") {
  SUBCASE("Newcastle / West Ham: home 19 78, away 29 55") {
    auto rows = build_observations(make_match("NEW", 1, {{19, 'H'}, {29, 'A'}, {55, 'A'}, {78, 'H'}}), 0.5);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].entry == 0.0);
    CHECK(rows[0].exit == 19.0);
    CHECK(rows[0].event);
    CHECK(rows[1].entry == 19.0);
    CHECK(rows[1].exit == 29.0);
    CHECK_FALSE(rows[1].event);
    CHECK(*rows[1].time_of_first_goal == 19.0);
    CHECK(*rows[1].first_goal_team == true);
  }
  SUBCASE("goalless game censors at 90") {
    auto rows = build_observations(make_match("g", 0, {}), 0.4);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].exit == 90.0);
    CHECK_FALSE(rows[0].event);
  }
  SUBCASE("away first goal at minute 90 leaves one censored row") {
    auto rows = build_observations(make_match("g", 0, {{90, 'A'}}), 0.4);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].exit == 90.0);
    CHECK_FALSE(rows[0].event);
  }
  SUBCASE("home first goal at minute 90 leaves one event row") {
    auto rows = build_observations(make_match("g", 0, {{90, 'H'}}), 0.4);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].event);
  }
  SUBCASE("same-minute goals shift the second exit by half a minute") {
    auto rows = build_observations(make_match("g", 0, {{30, 'H'}, {30, 'H'}}), 0.4);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].exit == 30.0);
    CHECK(rows[0].event);
    CHECK(rows[1].entry == 30.0);
    CHECK(rows[1].exit == 30.5);
    CHECK(rows[1].event);
  }
  SUBCASE("second goal at 90 keeps exit 90") {
    auto rows = build_observations(make_match("g", 0, {{10, 'A'}, {90, 'H'}}), 0.4);
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].exit == 90.0);
    CHECK(rows[1].event);
  }
}

TEST_CASE("summary counts and moments") {
  std::vector<MatchRecord> ms = {make_match("g1", 0, {}),
                                 make_match("g2", 0, {{10, 'H'}, {20, 'A'}})};
  Dataset ds = build_dataset(ms);
  DatasetSummary s = summarize(ds);
  CHECK(s.n_games == 2);
  CHECK(s.n_rows == 3);
  CHECK(s.n_censored_total == 2);
  CHECK(s.n_censored_first == 1);
  CHECK(s.n_censored_second == 1);
  CHECK(s.n_goalless == 1);
  CHECK(s.n_first_goal_at_90 == 0);
  CHECK(s.n_home_first_goals == 1);
  CHECK(*s.mean_time_of_first_goal == 10.0);

  Dataset lone = build_dataset({make_match("g1", 0, {})});
  DatasetSummary s2 = summarize(lone);
  CHECK_FALSE(s2.mean_time_of_first_goal.has_value());

  Dataset empty;
  CHECK_THROWS_AS(summarize(empty), ContractError);
}

TEST_CASE("row-count identity holds on random datasets") {
  Rng rng(123);
  for (int trial = 0; trial < 30; ++trial) {
    Dataset ds = testutil::random_small_dataset(rng, 4);
    CHECK(static_cast<int>(ds.rows.size()) ==
          2 * ds.games - ds.n_goalless - ds.n_first_goal_at_90);
    // Every j=2 entry equals its game's j=1 exit.
    for (std::size_t i = 1; i < ds.rows.size(); ++i) {
      if (ds.rows[i].goal_index == 2) {
        CHECK(ds.rows[i].game_id == ds.rows[i - 1].game_id);
        CHECK(ds.rows[i].entry == ds.rows[i - 1].exit);
      }
    }
  }
}

TEST_CASE("match csv round trip") {
  std::vector<MatchRecord> ms = {
      make_match("g1", 0, {}),
      make_match("g2", 1, {{19, 'H'}, {29, 'A'}, {55, 'A'}, {78, 'H'}}, 1.83, 3.6, 4.4),
      make_match("g3", 0, {{90, 'A'}})};
  std::ostringstream out;
  write_matches_csv(out, ms, "test fixture");
  std::istringstream in(out.str());
  auto back = read_matches_csv(in, "mem");
  REQUIRE(back.size() == 3);
  CHECK(back[1].game_id == "g2");
  CHECK(back[1].season == 1);
  CHECK(back[1].odds_home == 1.83);
  REQUIRE(back[1].goals.size() == 4);
  CHECK(back[1].goals[3].minute == 78);
  CHECK(back[1].goals[3].scored_by_home);
  CHECK(back[2].goals.size() == 1);
}

TEST_CASE("dataset csv round trip") {
  Rng rng(5);
  Dataset ds = testutil::random_small_dataset(rng, 4);
  std::ostringstream out;
  write_dataset_csv(out, ds, "fixture");
  std::istringstream in(out.str());
  Dataset back = read_dataset_csv(in, "mem");
  REQUIRE(back.rows.size() == ds.rows.size());
  CHECK(back.games == ds.games);
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    CHECK(back.rows[i].game_id == ds.rows[i].game_id);
    CHECK(back.rows[i].goal_index == ds.rows[i].goal_index);
    CHECK(back.rows[i].entry == ds.rows[i].entry);
    CHECK(back.rows[i].exit == ds.rows[i].exit);
    CHECK(back.rows[i].event == ds.rows[i].event);
    CHECK(back.rows[i].prob_win == ds.rows[i].prob_win);
    CHECK(back.rows[i].time_of_first_goal == ds.rows[i].time_of_first_goal);
    CHECK(back.rows[i].first_goal_team == ds.rows[i].first_goal_team);
  }
}

TEST_CASE("malformed match csv reports line numbers") {
  const std::string text =
      "game_id,date,season,home,away,odds_home,odds_draw,odds_away,goals\n"
      "g1,2008-08-16,0,A,B,2.0,4.0,4.0,\n"
      "g2,2008-08-16,0,A,B,zz,4.0,4.0,\n"
      "g3,2008-08-16,0,A,B,2.0,4.0,4.0,19:X\n";
  std::istringstream in(text);
  try {
    read_matches_csv(in, "mem");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("line 4") != std::string::npos);
  }
}

TEST_CASE("csv readers enforce the header and skip comments") {
  std::istringstream bad("a,b\n");
  CHECK_THROWS_AS(read_matches_csv(bad, "mem"), ParseError);
  std::istringstream commented(
      "# provenance line\n"
      "game_id,date,season,home,away,odds_home,odds_draw,odds_away,goals\n"
      "g1,,0,A,B,2.0,4.0,4.0,\n");
  CHECK(read_matches_csv(commented, "mem").size() == 1);
}
