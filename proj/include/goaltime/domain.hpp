#pragma once

#include <Eigen/Core>
#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace goaltime {

/// Covariates of the two-goal hazard model. The last four apply to
/// second-goal intervals only; TimeFromFirstGoal is time dependent.
enum class Term {
  ProbWin,
  Season,
  Goal,
  TimeOfFirstGoal,
  FirstGoalTeam,
  TimeFromFirstGoal,
};

inline constexpr std::array<Term, 6> kAllTerms = {
    Term::ProbWin,         Term::Season,        Term::Goal,
    Term::TimeOfFirstGoal, Term::FirstGoalTeam, Term::TimeFromFirstGoal,
};

const std::string& term_name(Term t);
Term term_from_name(const std::string& name);

enum class TimeTransform { Identity, Log };
enum class Ties { Efron, Breslow };

struct GoalEvent {
  int minute = 0;  // 1..90; stoppage-time goals recorded at 45 or 90
  bool scored_by_home = false;
};

/// One raw game: identifiers, ordered goal events, averaged bookmaker odds.
struct MatchRecord {
  std::string game_id;
  std::string date;  // freeform, kept for file round-trips
  int season = 0;    // 1 = 2009-10, 0 = 2008-09
  std::string home_team;
  std::string away_team;
  std::vector<GoalEvent> goals;  // sorted by minute; same-minute order = scoring order
  double odds_home = 0.0;
  double odds_draw = 0.0;
  double odds_away = 0.0;

  void validate() const;  // throws ContractError on any violated invariant
};

/// One counting-process row. goal_index 2 rows are left truncated at the
/// first-goal time and carry the first-goal context.
struct ObservationRow {
  std::string game_id;
  int goal_index = 1;  // j in {1, 2}
  double entry = 0.0;
  double exit = 0.0;
  bool event = false;  // 1 iff the home team scored the goal ending the interval
  double prob_win = 0.0;
  int season = 0;
  std::optional<double> time_of_first_goal;  // t~, j = 2 only
  std::optional<bool> first_goal_team;       // delta_1, j = 2 only

  void validate() const;
};

/// Which model to fit: term set, transform of (t - t~), stratification,
/// frailty flag, tie correction.
struct ModelSpec {
  std::vector<Term> terms;  // canonical (enum) order, no duplicates
  TimeTransform transform = TimeTransform::Identity;
  bool stratify_by_goal = false;
  bool frailty = false;
  Ties ties = Ties::Efron;
  std::string label;  // preset name when built by expand_preset

  bool has(Term t) const;
  int index_of(Term t) const;  // position in terms, -1 if absent
  void validate() const;
};

/// Expand one of the named presets I..VII to its exact model spec.
ModelSpec expand_preset(const std::string& name);

struct FrailtyTest {
  double statistic = 0.0;
  double p_value = 1.0;
  bool at_upper_bound = false;
};

struct FitResult {
  ModelSpec spec;
  Eigen::VectorXd coefficients;  // aligned with spec.terms
  Eigen::MatrixXd covariance;
  double loglik_null = 0.0;
  double loglik_final = 0.0;
  double theta = 0.0;  // gamma frailty variance; 0 when frailty disabled
  std::map<std::string, double> frailty_values;  // game_id -> posterior mean
  int iterations = 0;
  bool converged = false;
  std::vector<double> loglik_path;  // loglik per accepted Newton iterate
  std::optional<FrailtyTest> frailty_test;

  double coefficient(Term t) const;
  double standard_error(Term t) const;
};

struct BaselineStep {
  double time = 0.0;
  double cum_hazard = 0.0;
  double variance = 0.0;
};

/// Step function of the cumulative baseline hazard, referenced to the
/// all-zero covariate profile. increments/var_increments/dinc_dbeta are the
/// per-jump pieces (parallel to steps past the origin) that survival-curve
/// prediction needs for arbitrary profiles.
struct BaselineHazard {
  std::string stratum;
  std::vector<BaselineStep> steps;
  bool no_events = false;

  std::vector<double> increments;
  std::vector<double> var_increments;
  Eigen::MatrixXd dinc_dbeta;  // one row per jump
};

/// Covariate profile for curve prediction. time_of_first_goal present marks
/// a second-goal profile (entry at t~, Goal = 1).
struct Profile {
  double prob_win = 0.0;
  int season = 0;
  std::optional<double> time_of_first_goal;
  std::optional<bool> first_goal_team;
  std::string label;
};

struct SurvivalCurvePoint {
  double time = 0.0;
  double survival = 1.0;
  double lower95 = 1.0;
  double upper95 = 1.0;
};

struct SurvivalCurve {
  Profile profile;
  std::vector<SurvivalCurvePoint> points;
};

}  // namespace goaltime
