#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "goaltime/domain.hpp"

namespace goaltime {

struct DatasetSummary {
  int n_games = 0;
  int n_rows = 0;
  int n_censored_total = 0;
  int n_censored_first = 0;
  int n_censored_second = 0;
  int n_goalless = 0;
  int n_first_goal_at_90 = 0;
  int n_home_first_goals = 0;  // among games with a j=2 row
  double mean_probwin = 0.0;
  double sd_probwin = 0.0;
  std::optional<double> mean_time_of_first_goal;  // absent when no j=2 rows
  std::optional<double> sd_time_of_first_goal;
};

/// Counting-process dataset: one or two rows per game, ordered by game_id
/// then goal index. n_goalless / n_first_goal_at_90 are exact when built
/// from match records; reconstructed (see FORMATS.md) when loaded from CSV.
struct Dataset {
  std::vector<ObservationRow> rows;
  int games = 0;
  int n_goalless = 0;
  int n_first_goal_at_90 = 0;
};

/// Home-win probability from averaged decimal odds by proportional
/// normalization of the implied probabilities.
double probwin_from_odds(double odds_home, double odds_draw, double odds_away);

/// The two-goal counting-process rows of one game. Row 1 spans (0, first
/// goal or 90]; row 2 exists iff the first goal fell strictly before minute
/// 90 and spans (t~, second goal or 90]. Same-minute first/second goals
/// shift the second exit by +0.5.
std::vector<ObservationRow> build_observations(const MatchRecord& match, double prob_win);

Dataset build_dataset(const std::vector<MatchRecord>& matches);

DatasetSummary summarize(const Dataset& dataset);

/// Match CSV: header game_id,date,season,home,away,odds_home,odds_draw,
/// odds_away,goals with goals as semicolon-separated minute:H|A tokens.
/// Lines starting with '#' are skipped.
std::vector<MatchRecord> read_matches_csv(std::istream& in, const std::string& source_name);
std::vector<MatchRecord> read_matches_csv_file(const std::string& path);
void write_matches_csv(std::ostream& out, const std::vector<MatchRecord>& matches,
                       const std::string& header_comment = {});

/// Dataset CSV: header game_id,j,entry,exit,event,prob_win,season,
/// time_of_first_goal,first_goal_team; empty fields for absent j=2 context.
void write_dataset_csv(std::ostream& out, const Dataset& dataset,
                       const std::string& header_comment = {});
Dataset read_dataset_csv(std::istream& in, const std::string& source_name);
Dataset read_dataset_csv_file(const std::string& path);

}  // namespace goaltime
