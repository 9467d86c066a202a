#include "goaltime/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "goaltime/errors.hpp"

namespace goaltime {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(trim(field));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double parse_double(const std::string& s, const char* what, int line_no,
                    std::vector<std::string>& errors) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    errors.push_back("line " + std::to_string(line_no) + ": bad " + std::string(what) + " '" + s + "'");
    return std::nan("");
  }
}

int parse_int(const std::string& s, const char* what, int line_no,
              std::vector<std::string>& errors) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    errors.push_back("line " + std::to_string(line_no) + ": bad " + std::string(what) + " '" + s + "'");
    return 0;
  }
  return v;
}

void throw_if_errors(const std::vector<std::string>& errors, const std::string& source) {
  if (errors.empty()) return;
  std::string msg = source + ": " + std::to_string(errors.size()) + " malformed row(s)";
  for (const auto& e : errors) msg += "\n  " + e;
  throw ParseError(msg);
}

}  // namespace

double probwin_from_odds(double odds_home, double odds_draw, double odds_away) {
  if (!(odds_home > 1.0)) throw ContractError("probwin_from_odds: odds_home must be > 1");
  if (!(odds_draw > 1.0)) throw ContractError("probwin_from_odds: odds_draw must be > 1");
  if (!(odds_away > 1.0)) throw ContractError("probwin_from_odds: odds_away must be > 1");
  const double ih = 1.0 / odds_home;
  const double id = 1.0 / odds_draw;
  const double ia = 1.0 / odds_away;
  return ih / (ih + id + ia);
}

std::vector<ObservationRow> build_observations(const MatchRecord& match, double prob_win) {
  match.validate();
  if (!(prob_win > 0.0 && prob_win < 1.0)) {
    throw ContractError("build_observations: prob_win must lie in (0, 1)");
  }
  std::vector<ObservationRow> rows;

  ObservationRow first;
  first.game_id = match.game_id;
  first.goal_index = 1;
  first.entry = 0.0;
  first.prob_win = prob_win;
  first.season = match.season;
  if (match.goals.empty()) {
    first.exit = 90.0;
    first.event = false;
    rows.push_back(first);
    return rows;
  }

  const GoalEvent& g1 = match.goals.front();
  first.exit = g1.minute;
  first.event = g1.scored_by_home;
  rows.push_back(first);

  // The second goal is observable only when the first fell before minute 90.
  if (g1.minute >= 90) return rows;

  ObservationRow second;
  second.game_id = match.game_id;
  second.goal_index = 2;
  second.entry = g1.minute;
  second.prob_win = prob_win;
  second.season = match.season;
  second.time_of_first_goal = static_cast<double>(g1.minute);
  second.first_goal_team = g1.scored_by_home;
  if (match.goals.size() >= 2) {
    const GoalEvent& g2 = match.goals[1];
    second.exit = (g2.minute == g1.minute) ? g1.minute + 0.5 : g2.minute;
    second.event = g2.scored_by_home;
  } else {
    second.exit = 90.0;
    second.event = false;
  }
  rows.push_back(second);
  return rows;
}

Dataset build_dataset(const std::vector<MatchRecord>& matches) {
  std::vector<MatchRecord> ordered = matches;
  std::sort(ordered.begin(), ordered.end(),
            [](const MatchRecord& a, const MatchRecord& b) { return a.game_id < b.game_id; });
  for (std::size_t i = 1; i < ordered.size(); ++i) {
    if (ordered[i].game_id == ordered[i - 1].game_id) {
      throw ContractError("build_dataset: duplicate game_id " + ordered[i].game_id);
    }
  }

  Dataset ds;
  ds.games = static_cast<int>(ordered.size());
  for (const auto& m : ordered) {
    const double pw = probwin_from_odds(m.odds_home, m.odds_draw, m.odds_away);
    auto rows = build_observations(m, pw);
    if (m.goals.empty()) {
      ++ds.n_goalless;
    } else if (m.goals.front().minute >= 90) {
      ++ds.n_first_goal_at_90;
    }
    for (auto& r : rows) {
      r.validate();
      ds.rows.push_back(std::move(r));
    }
  }
  const int expected = 2 * ds.games - ds.n_goalless - ds.n_first_goal_at_90;
  if (static_cast<int>(ds.rows.size()) != expected) {
    throw ContractError("build_dataset: row-count identity violated");
  }
  return ds;
}

DatasetSummary summarize(const Dataset& dataset) {
  if (dataset.rows.empty()) throw ContractError("summarize: empty dataset");
  DatasetSummary s;
  s.n_games = dataset.games;
  s.n_rows = static_cast<int>(dataset.rows.size());
  s.n_goalless = dataset.n_goalless;
  s.n_first_goal_at_90 = dataset.n_first_goal_at_90;

  double pw_sum = 0.0, pw_sq = 0.0;
  double tfg_sum = 0.0, tfg_sq = 0.0;
  int n_second = 0;
  for (const auto& r : dataset.rows) {
    pw_sum += r.prob_win;
    pw_sq += r.prob_win * r.prob_win;
    if (!r.event) {
      ++s.n_censored_total;
      (r.goal_index == 1 ? s.n_censored_first : s.n_censored_second)++;
    }
    if (r.goal_index == 2) {
      ++n_second;
      if (*r.first_goal_team) ++s.n_home_first_goals;
      tfg_sum += *r.time_of_first_goal;
      tfg_sq += *r.time_of_first_goal * *r.time_of_first_goal;
    }
  }
  const int n = s.n_rows;
  s.mean_probwin = pw_sum / n;
  s.sd_probwin = n > 1 ? std::sqrt((pw_sq - pw_sum * pw_sum / n) / (n - 1)) : 0.0;
  if (n_second > 0) {
    s.mean_time_of_first_goal = tfg_sum / n_second;
    s.sd_time_of_first_goal =
        n_second > 1 ? std::sqrt((tfg_sq - tfg_sum * tfg_sum / n_second) / (n_second - 1)) : 0.0;
  }
  return s;
}

std::vector<MatchRecord> read_matches_csv(std::istream& in, const std::string& source_name) {
  static const std::string kHeader =
      "game_id,date,season,home,away,odds_home,odds_draw,odds_away,goals";
  std::vector<MatchRecord> matches;
  std::vector<std::string> errors;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != kHeader) {
        throw ParseError(source_name + ": line " + std::to_string(line_no) +
                         ": expected header '" + kHeader + "'");
      }
      header_seen = true;
      continue;
    }
    auto f = split(line, ',');
    if (f.size() != 9) {
      errors.push_back("line " + std::to_string(line_no) + ": expected 9 fields, got " +
                       std::to_string(f.size()));
      continue;
    }
    MatchRecord m;
    m.game_id = f[0];
    m.date = f[1];
    m.season = parse_int(f[2], "season", line_no, errors);
    m.home_team = f[3];
    m.away_team = f[4];
    m.odds_home = parse_double(f[5], "odds_home", line_no, errors);
    m.odds_draw = parse_double(f[6], "odds_draw", line_no, errors);
    m.odds_away = parse_double(f[7], "odds_away", line_no, errors);
    if (!f[8].empty()) {
      for (const auto& tok : split(f[8], ';')) {
        const auto colon = tok.find(':');
        if (colon == std::string::npos || colon + 2 != tok.size() ||
            (tok[colon + 1] != 'H' && tok[colon + 1] != 'A')) {
          errors.push_back("line " + std::to_string(line_no) + ": bad goal token '" + tok + "'");
          continue;
        }
        GoalEvent g;
        g.minute = parse_int(tok.substr(0, colon), "goal minute", line_no, errors);
        g.scored_by_home = tok[colon + 1] == 'H';
        m.goals.push_back(g);
      }
    }
    if (errors.empty()) {
      try {
        m.validate();
      } catch (const ContractError& e) {
        errors.push_back("line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    matches.push_back(std::move(m));
  }
  if (!header_seen) throw ParseError(source_name + ": empty file (missing header)");
  throw_if_errors(errors, source_name);
  return matches;
}

std::vector<MatchRecord> read_matches_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return read_matches_csv(in, path);
}

void write_matches_csv(std::ostream& out, const std::vector<MatchRecord>& matches,
                       const std::string& header_comment) {
  if (!header_comment.empty()) out << "# " << header_comment << "\n";
  out << "game_id,date,season,home,away,odds_home,odds_draw,odds_away,goals\n";
  for (const auto& m : matches) {
    out << m.game_id << ',' << m.date << ',' << m.season << ',' << m.home_team << ','
        << m.away_team << ',' << format_double(m.odds_home) << ',' << format_double(m.odds_draw)
        << ',' << format_double(m.odds_away) << ',';
    for (std::size_t i = 0; i < m.goals.size(); ++i) {
      if (i) out << ';';
      out << m.goals[i].minute << ':' << (m.goals[i].scored_by_home ? 'H' : 'A');
    }
    out << '\n';
  }
}

void write_dataset_csv(std::ostream& out, const Dataset& dataset,
                       const std::string& header_comment) {
  if (!header_comment.empty()) out << "# " << header_comment << "\n";
  out << "game_id,j,entry,exit,event,prob_win,season,time_of_first_goal,first_goal_team\n";
  for (const auto& r : dataset.rows) {
    out << r.game_id << ',' << r.goal_index << ',' << format_double(r.entry) << ','
        << format_double(r.exit) << ',' << (r.event ? 1 : 0) << ',' << format_double(r.prob_win)
        << ',' << r.season << ',';
    if (r.time_of_first_goal) out << format_double(*r.time_of_first_goal);
    out << ',';
    if (r.first_goal_team) out << (*r.first_goal_team ? 1 : 0);
    out << '\n';
  }
}

Dataset read_dataset_csv(std::istream& in, const std::string& source_name) {
  static const std::string kHeader =
      "game_id,j,entry,exit,event,prob_win,season,time_of_first_goal,first_goal_team";
  Dataset ds;
  std::vector<std::string> errors;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != kHeader) {
        throw ParseError(source_name + ": line " + std::to_string(line_no) +
                         ": expected header '" + kHeader + "'");
      }
      header_seen = true;
      continue;
    }
    auto f = split(line, ',');
    if (f.size() != 9) {
      errors.push_back("line " + std::to_string(line_no) + ": expected 9 fields, got " +
                       std::to_string(f.size()));
      continue;
    }
    ObservationRow r;
    r.game_id = f[0];
    r.goal_index = parse_int(f[1], "j", line_no, errors);
    r.entry = parse_double(f[2], "entry", line_no, errors);
    r.exit = parse_double(f[3], "exit", line_no, errors);
    r.event = parse_int(f[4], "event", line_no, errors) != 0;
    r.prob_win = parse_double(f[5], "prob_win", line_no, errors);
    r.season = parse_int(f[6], "season", line_no, errors);
    if (!f[7].empty()) r.time_of_first_goal = parse_double(f[7], "time_of_first_goal", line_no, errors);
    if (!f[8].empty()) r.first_goal_team = parse_int(f[8], "first_goal_team", line_no, errors) != 0;
    if (errors.empty()) {
      try {
        r.validate();
      } catch (const ContractError& e) {
        errors.push_back("line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    ds.rows.push_back(std::move(r));
  }
  if (!header_seen) throw ParseError(source_name + ": empty file (missing header)");
  throw_if_errors(errors, source_name);

  std::stable_sort(ds.rows.begin(), ds.rows.end(),
                   [](const ObservationRow& a, const ObservationRow& b) {
                     return std::tie(a.game_id, a.goal_index) < std::tie(b.game_id, b.goal_index);
                   });
  // Reconstruct game-level counts. A lone censored row ending at 90 is
  // indistinguishable from an away first goal at minute 90; it lands in the
  // goalless bucket (FORMATS.md). The row-count identity is unaffected.
  std::string prev;
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    const auto& r = ds.rows[i];
    if (r.game_id == prev) continue;
    prev = r.game_id;
    ++ds.games;
    const bool has_second =
        i + 1 < ds.rows.size() && ds.rows[i + 1].game_id == r.game_id;
    if (has_second) {
      if (ds.rows[i + 1].goal_index != 2 || r.goal_index != 1) {
        throw ParseError(source_name + ": game " + r.game_id + " has inconsistent goal indices");
      }
    } else {
      if (r.goal_index != 1) {
        throw ParseError(source_name + ": game " + r.game_id + " has a j=2 row without a j=1 row");
      }
      if (r.event) {
        ++ds.n_first_goal_at_90;
      } else {
        ++ds.n_goalless;
      }
    }
  }
  return ds;
}

Dataset read_dataset_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return read_dataset_csv(in, path);
}

}  // namespace goaltime
