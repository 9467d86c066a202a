#include "goaltime/coxfit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "goaltime/errors.hpp"
#include "goaltime/stats.hpp"

namespace goaltime {

namespace {

constexpr double kEtaClamp = 250.0;  // keeps exp finite during wild Newton steps

double clamped_exp(double eta) {
  return std::exp(std::clamp(eta, -kEtaClamp, kEtaClamp));
}

std::string format_time(double t) {
  std::ostringstream ss;
  ss << t;
  return ss.str();
}

}  // namespace

struct CoxEngine::Impl {
  ModelSpec spec;
  int p = 0;
  int time_idx = -1;  // slot of TimeFromFirstGoal, -1 when absent
  struct Row {
    double entry = 0.0;
    double exit = 0.0;
    bool event = false;
    int stratum = 0;
    bool timedep = false;
    double tfg = 0.0;
    int game = 0;
    Eigen::VectorXd x;  // fixed covariates; time-dependent slot left at zero
  };
  std::vector<Row> rows;
  struct Block {
    double time = 0.0;
    std::vector<int> deaths;  // row indices
  };
  struct Stratum {
    std::vector<int> members;
    std::vector<Block> blocks;
  };
  std::vector<Stratum> strata;
  std::vector<std::string> games;
  int n_events = 0;

  double tdvalue(const Row& r, double u) const {
    const double dt = u - r.tfg;  // positive: entry = tfg and entry < u
    return spec.transform == TimeTransform::Log ? std::log(dt) : dt;
  }

  // Risk-set accumulator at one event time.
  struct Accum {
    double S = 0.0;
    Eigen::VectorXd a;
    Eigen::MatrixXd C;
    double S_D = 0.0;
    Eigen::VectorXd a_D;
    Eigen::MatrixXd C_D;
    double sum_eta_deaths = 0.0;
    Eigen::VectorXd sum_x_deaths;

    void reset(int p, bool derivs) {
      S = S_D = sum_eta_deaths = 0.0;
      if (derivs) {
        a.setZero(p);
        C.setZero(p, p);
        a_D.setZero(p);
        C_D.setZero(p, p);
        sum_x_deaths.setZero(p);
      }
    }
  };

  void eval_row(const Row& r, double u, const Eigen::VectorXd& beta, double eta_fix,
                double w_fix, double& w, double& eta, Eigen::VectorXd& xbuf) const {
    if (r.timedep) {
      const double v = tdvalue(r, u);
      eta = eta_fix + beta[time_idx] * v;
      w = clamped_exp(eta);
      xbuf = r.x;
      xbuf[time_idx] = v;
    } else {
      eta = eta_fix;
      w = w_fix;
      xbuf = r.x;
    }
  }

  // Walks every event time and hands the filled accumulator to the sink.
  template <typename Sink>
  void scan(const Eigen::VectorXd& beta, const std::vector<double>& offsets, bool derivs,
            Sink&& sink) const {
    const int n = static_cast<int>(rows.size());
    std::vector<double> eta_fix(n), w_fix(n);
    for (int i = 0; i < n; ++i) {
      double e = rows[i].x.dot(beta);
      if (!offsets.empty()) e += offsets[i];
      eta_fix[i] = e;
      if (!rows[i].timedep) w_fix[i] = clamped_exp(e);
    }
    Accum acc;
    Eigen::VectorXd xbuf(p);
    double w = 0.0, eta = 0.0;
    for (std::size_t s = 0; s < strata.size(); ++s) {
      const auto& st = strata[s];
      for (const auto& block : st.blocks) {
        const double u = block.time;
        acc.reset(p, derivs);
        for (int i : st.members) {
          const Row& r = rows[i];
          if (!(r.entry < u && u <= r.exit)) continue;
          eval_row(r, u, beta, eta_fix[i], w_fix[i], w, eta, xbuf);
          acc.S += w;
          if (derivs) {
            acc.a.noalias() += w * xbuf;
            acc.C.noalias() += w * xbuf * xbuf.transpose();
          }
        }
        for (int i : block.deaths) {
          const Row& r = rows[i];
          eval_row(r, u, beta, eta_fix[i], w_fix[i], w, eta, xbuf);
          acc.S_D += w;
          acc.sum_eta_deaths += eta;
          if (derivs) {
            acc.a_D.noalias() += w * xbuf;
            acc.C_D.noalias() += w * xbuf * xbuf.transpose();
            acc.sum_x_deaths.noalias() += xbuf;
          }
        }
        sink(static_cast<int>(s), block, acc);
      }
    }
  }
};

CoxEngine::CoxEngine(const Dataset& dataset, const ModelSpec& spec)
    : impl_(std::make_unique<Impl>()) {
  spec.validate();
  impl_->spec = spec;
  impl_->p = static_cast<int>(spec.terms.size());
  impl_->time_idx = spec.index_of(Term::TimeFromFirstGoal);

  std::set<std::string> game_set;
  for (const auto& r : dataset.rows) game_set.insert(r.game_id);
  impl_->games.assign(game_set.begin(), game_set.end());
  std::map<std::string, int> game_index;
  for (std::size_t i = 0; i < impl_->games.size(); ++i) game_index[impl_->games[i]] = static_cast<int>(i);

  const int n_strata = spec.stratify_by_goal ? 2 : 1;
  impl_->strata.resize(n_strata);

  impl_->rows.reserve(dataset.rows.size());
  for (const auto& obs : dataset.rows) {
    obs.validate();
    Impl::Row r;
    r.entry = obs.entry;
    r.exit = obs.exit;
    r.event = obs.event;
    r.stratum = spec.stratify_by_goal ? obs.goal_index - 1 : 0;
    r.game = game_index[obs.game_id];
    r.x.setZero(impl_->p);
    const bool second = obs.goal_index == 2;
    for (int k = 0; k < impl_->p; ++k) {
      switch (spec.terms[k]) {
        case Term::ProbWin: r.x[k] = obs.prob_win; break;
        case Term::Season: r.x[k] = obs.season; break;
        case Term::Goal: r.x[k] = second ? 1.0 : 0.0; break;
        case Term::TimeOfFirstGoal: r.x[k] = second ? *obs.time_of_first_goal : 0.0; break;
        case Term::FirstGoalTeam: r.x[k] = (second && *obs.first_goal_team) ? 1.0 : 0.0; break;
        case Term::TimeFromFirstGoal: break;  // evaluated per event time
      }
    }
    r.timedep = second && impl_->time_idx >= 0;
    if (second) r.tfg = *obs.time_of_first_goal;
    if (r.event) ++impl_->n_events;
    impl_->rows.push_back(std::move(r));
  }

  for (int i = 0; i < static_cast<int>(impl_->rows.size()); ++i) {
    impl_->strata[impl_->rows[i].stratum].members.push_back(i);
  }
  for (auto& st : impl_->strata) {
    std::map<double, std::vector<int>> by_time;
    for (int i : st.members) {
      if (impl_->rows[i].event) by_time[impl_->rows[i].exit].push_back(i);
    }
    for (auto& [t, deaths] : by_time) {
      st.blocks.push_back(Impl::Block{t, std::move(deaths)});
    }
  }
}

CoxEngine::~CoxEngine() = default;
CoxEngine::CoxEngine(CoxEngine&&) noexcept = default;
CoxEngine& CoxEngine::operator=(CoxEngine&&) noexcept = default;

int CoxEngine::n_rows() const { return static_cast<int>(impl_->rows.size()); }
int CoxEngine::n_terms() const { return impl_->p; }
int CoxEngine::n_events() const { return impl_->n_events; }
int CoxEngine::n_strata() const { return static_cast<int>(impl_->strata.size()); }
const std::vector<std::string>& CoxEngine::game_ids() const { return impl_->games; }

std::vector<int> CoxEngine::game_of_row() const {
  std::vector<int> out(impl_->rows.size());
  for (std::size_t i = 0; i < impl_->rows.size(); ++i) out[i] = impl_->rows[i].game;
  return out;
}

std::vector<int> CoxEngine::events_per_game() const {
  std::vector<int> out(impl_->games.size(), 0);
  for (const auto& r : impl_->rows) {
    if (r.event) ++out[r.game];
  }
  return out;
}

LoglikParts CoxEngine::loglik(const Eigen::VectorXd& beta,
                              const std::vector<double>& offsets) const {
  if (beta.size() != impl_->p) throw ContractError("loglik: beta dimension mismatch");
  if (!offsets.empty() && offsets.size() != impl_->rows.size()) {
    throw ContractError("loglik: offsets dimension mismatch");
  }
  LoglikParts out;
  out.gradient.setZero(impl_->p);
  out.hessian.setZero(impl_->p, impl_->p);
  const bool efron = impl_->spec.ties == Ties::Efron;
  const int p = impl_->p;
  Eigen::VectorXd am(p), mm(p);
  impl_->scan(beta, offsets, true, [&](int, const Impl::Block& block, const Impl::Accum& acc) {
    const int d = static_cast<int>(block.deaths.size());
    out.loglik += acc.sum_eta_deaths;
    out.gradient += acc.sum_x_deaths;
    for (int m = 0; m < d; ++m) {
      const double f = efron ? static_cast<double>(m) / d : 0.0;
      const double phi = acc.S - f * acc.S_D;
      if (!(phi > 0.0) || !std::isfinite(phi)) {
        throw ContractError("partial likelihood denominator underflow at event time " +
                            format_time(block.time));
      }
      out.loglik -= std::log(phi);
      am = acc.a - f * acc.a_D;
      mm = am / phi;
      out.gradient -= mm;
      out.hessian.noalias() += mm * mm.transpose();
      out.hessian.noalias() -= (acc.C - f * acc.C_D) / phi;
    }
  });
  return out;
}

double CoxEngine::loglik_value(const Eigen::VectorXd& beta,
                               const std::vector<double>& offsets) const {
  if (beta.size() != impl_->p) throw ContractError("loglik: beta dimension mismatch");
  if (!offsets.empty() && offsets.size() != impl_->rows.size()) {
    throw ContractError("loglik: offsets dimension mismatch");
  }
  double ll = 0.0;
  const bool efron = impl_->spec.ties == Ties::Efron;
  impl_->scan(beta, offsets, false, [&](int, const Impl::Block& block, const Impl::Accum& acc) {
    const int d = static_cast<int>(block.deaths.size());
    ll += acc.sum_eta_deaths;
    for (int m = 0; m < d; ++m) {
      const double f = efron ? static_cast<double>(m) / d : 0.0;
      const double phi = acc.S - f * acc.S_D;
      if (!(phi > 0.0) || !std::isfinite(phi)) {
        throw ContractError("partial likelihood denominator underflow at event time " +
                            format_time(block.time));
      }
      ll -= std::log(phi);
    }
  });
  return ll;
}

FitResult CoxEngine::fit(const FitOptions& options) const {
  if (impl_->rows.empty()) throw ContractError("fit: dataset is empty");
  if (impl_->n_events == 0) throw ContractError("fit: dataset has no events");
  const int p = impl_->p;

  FitResult res;
  res.spec = impl_->spec;
  res.coefficients.setZero(p);
  res.covariance.setZero(p, p);

  const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(p);
  if (options.want_null_loglik || p == 0) {
    res.loglik_null = loglik_value(zeros, options.offsets);
  } else {
    res.loglik_null = std::numeric_limits<double>::quiet_NaN();
  }

  if (p == 0) {
    res.loglik_final = res.loglik_null;
    res.converged = true;
    res.loglik_path = {res.loglik_null};
    return res;
  }

  Eigen::VectorXd beta = options.init.size() == p ? options.init : zeros;
  if (options.init.size() != 0 && options.init.size() != p) {
    throw ContractError("fit: init dimension mismatch");
  }

  LoglikParts cur = loglik(beta, options.offsets);
  res.loglik_path.push_back(cur.loglik);

  bool converged = false;
  int iter = 0;
  while (iter < options.max_iterations) {
    ++iter;
    Eigen::MatrixXd info = -cur.hessian;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
    if (!lu.isInvertible()) {
      throw ConvergenceError("fit: singular information matrix");
    }
    Eigen::VectorXd step = lu.solve(cur.gradient);
    if (!step.allFinite()) throw ConvergenceError("fit: non-finite Newton step");

    double scale = 1.0;
    bool accepted = false;
    Eigen::VectorXd cand;
    LoglikParts cand_parts;
    double last_trial_ll = cur.loglik;
    for (int h = 0; h <= options.max_halvings; ++h) {
      cand = beta + scale * step;
      cand_parts = loglik(cand, options.offsets);
      last_trial_ll = cand_parts.loglik;
      if (std::isfinite(cand_parts.loglik) && cand_parts.loglik >= cur.loglik) {
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) {
      // No ascent direction left at the smallest step; flat to tolerance
      // counts as converged, anything else is a stall.
      converged = std::isfinite(last_trial_ll) &&
                  std::fabs(last_trial_ll - cur.loglik) / (std::fabs(cur.loglik) + 1.0) <
                      options.tol;
      break;
    }

    const double rel = std::fabs(cand_parts.loglik - cur.loglik) / (std::fabs(cand_parts.loglik) + 1.0);
    beta = cand;
    cur = std::move(cand_parts);
    res.loglik_path.push_back(cur.loglik);

    for (int k = 0; k < p; ++k) {
      if (std::fabs(beta[k]) > options.divergence_bound) {
        throw ConvergenceError("fit: coefficient for " + term_name(impl_->spec.terms[k]) +
                               " exceeded |" + format_time(options.divergence_bound) +
                               "| - monotone likelihood (separable data?)");
      }
    }
    if (rel < options.tol) {
      converged = true;
      break;
    }
  }

  res.coefficients = beta;
  res.loglik_final = cur.loglik;
  res.iterations = iter;
  res.converged = converged;

  Eigen::MatrixXd info = -cur.hessian;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
  if (lu.isInvertible()) {
    res.covariance = lu.inverse();
  } else {
    throw ConvergenceError("fit: singular information matrix at optimum");
  }
  return res;
}

std::vector<std::vector<BaselineJump>> CoxEngine::baseline_jumps(
    const Eigen::VectorXd& beta, const std::vector<double>& offsets, bool breslow_ties) const {
  const bool efron = !breslow_ties && impl_->spec.ties == Ties::Efron;
  const int p = impl_->p;
  std::vector<std::vector<BaselineJump>> out(impl_->strata.size());
  impl_->scan(beta, offsets, true, [&](int s, const Impl::Block& block, const Impl::Accum& acc) {
    const int d = static_cast<int>(block.deaths.size());
    BaselineJump jump;
    jump.time = block.time;
    jump.deaths = d;
    jump.dinc_dbeta.setZero(p);
    for (int m = 0; m < d; ++m) {
      const double f = efron ? static_cast<double>(m) / d : 0.0;
      const double phi = acc.S - f * acc.S_D;
      if (!(phi > 0.0) || !std::isfinite(phi)) {
        throw ContractError("baseline denominator underflow at event time " +
                            format_time(block.time));
      }
      jump.increment += 1.0 / phi;
      jump.var_increment += 1.0 / (phi * phi);
      jump.dinc_dbeta -= (acc.a - f * acc.a_D) / (phi * phi);
    }
    out[s].push_back(std::move(jump));
  });
  return out;
}

std::vector<double> CoxEngine::row_cumhaz(const Eigen::VectorXd& beta,
                                          const std::vector<double>& offsets, bool breslow_ties,
                                          bool death_downweight,
                                          bool offset_in_numerator) const {
  const bool efron = !breslow_ties && impl_->spec.ties == Ties::Efron;
  const int n = static_cast<int>(impl_->rows.size());
  std::vector<double> eta_fix(n), w_fix(n);
  std::vector<double> numer_scale(n, 1.0);
  for (int i = 0; i < n; ++i) {
    double e = impl_->rows[i].x.dot(beta);
    if (!offsets.empty()) {
      e += offsets[i];
      if (!offset_in_numerator) numer_scale[i] = std::exp(-offsets[i]);
    }
    eta_fix[i] = e;
    if (!impl_->rows[i].timedep) w_fix[i] = clamped_exp(e);
  }
  std::vector<double> cum(n, 0.0);
  Eigen::VectorXd xbuf(impl_->p);
  double w = 0.0, eta = 0.0;
  for (const auto& st : impl_->strata) {
    for (const auto& block : st.blocks) {
      const double u = block.time;
      const int d = static_cast<int>(block.deaths.size());
      // Pass 1: denominators.
      double S = 0.0, S_D = 0.0;
      for (int i : st.members) {
        const Impl::Row& r = impl_->rows[i];
        if (!(r.entry < u && u <= r.exit)) continue;
        impl_->eval_row(r, u, beta, eta_fix[i], w_fix[i], w, eta, xbuf);
        S += w;
      }
      for (int i : block.deaths) {
        const Impl::Row& r = impl_->rows[i];
        impl_->eval_row(r, u, beta, eta_fix[i], w_fix[i], w, eta, xbuf);
        S_D += w;
      }
      double inc_at_risk = 0.0, inc_death = 0.0;
      for (int m = 0; m < d; ++m) {
        const double f = efron ? static_cast<double>(m) / d : 0.0;
        const double phi = S - f * S_D;
        if (!(phi > 0.0) || !std::isfinite(phi)) {
          throw ContractError("hazard denominator underflow at event time " + format_time(u));
        }
        inc_at_risk += 1.0 / phi;
        inc_death += (1.0 - f) / phi;
      }
      if (!death_downweight) inc_death = inc_at_risk;
      // Pass 2: per-row accumulation.
      for (int i : st.members) {
        const Impl::Row& r = impl_->rows[i];
        if (!(r.entry < u && u <= r.exit)) continue;
        impl_->eval_row(r, u, beta, eta_fix[i], w_fix[i], w, eta, xbuf);
        const bool dies_here = r.event && r.exit == u;
        cum[i] += numer_scale[i] * w * (dies_here ? inc_death : inc_at_risk);
      }
    }
  }
  return cum;
}

double CoxEngine::loglik_scale_constant() const {
  double c = 0.0;
  for (const auto& st : impl_->strata) {
    for (const auto& block : st.blocks) {
      const double d = static_cast<double>(block.deaths.size());
      c += d * std::log(d) - d;
    }
  }
  return c;
}

LoglikParts partial_loglik(const Dataset& dataset, const ModelSpec& spec,
                           const Eigen::VectorXd& beta, const std::vector<double>& offsets) {
  if (spec.frailty) {
    throw ContractError("partial_loglik: frailty handled by fit_frailty, not offsets");
  }
  return CoxEngine(dataset, spec).loglik(beta, offsets);
}

FitResult fit(const Dataset& dataset, const ModelSpec& spec, const FitOptions& options) {
  if (spec.frailty) throw ContractError("fit: use fit_frailty for frailty specs");
  return CoxEngine(dataset, spec).fit(options);
}

double hazard_ratio(double coef) {
  if (!std::isfinite(coef)) throw ContractError("hazard_ratio: coefficient must be finite");
  return std::exp(coef);
}

LrtResult lrt(const FitResult& nested, const FitResult& full, int df) {
  if (df < 1) throw ContractError("lrt: df must be >= 1");
  LrtResult out;
  if (full.spec.frailty && !nested.spec.frailty) {
    if (!full.frailty_test) throw ContractError("lrt: frailty fit carries no boundary test");
    out.statistic = full.frailty_test->statistic;
    out.p_value = chisq_upper_tail(out.statistic, df);
    return out;
  }
  if (nested.spec.stratify_by_goal != full.spec.stratify_by_goal) {
    throw ContractError("lrt: stratified and unstratified fits are not nested");
  }
  if (nested.spec.ties != full.spec.ties) {
    throw ContractError("lrt: fits use different tie corrections");
  }
  for (Term t : nested.spec.terms) {
    if (!full.spec.has(t)) {
      throw ContractError("lrt: models not nested (" + term_name(t) + " missing from full)");
    }
    if (t == Term::TimeFromFirstGoal && nested.spec.transform != full.spec.transform) {
      throw ContractError("lrt: time transforms differ on a shared term");
    }
  }
  const double raw = 2.0 * (full.loglik_final - nested.loglik_final);
  if (raw < -1e-6) {
    throw ContractError("lrt: negative statistic (models not nested or fit failure)");
  }
  out.statistic = std::max(0.0, raw);
  out.p_value = chisq_upper_tail(out.statistic, df);
  return out;
}

std::vector<RiskSetView> enumerate_risk_sets(const Dataset& dataset, const ModelSpec& spec) {
  spec.validate();
  const int p = static_cast<int>(spec.terms.size());
  const int tidx = spec.index_of(Term::TimeFromFirstGoal);
  const int n = static_cast<int>(dataset.rows.size());

  auto stratum_of = [&](const ObservationRow& r) {
    return spec.stratify_by_goal ? r.goal_index - 1 : 0;
  };
  std::map<std::pair<int, double>, std::vector<int>> events;
  for (int i = 0; i < n; ++i) {
    const auto& r = dataset.rows[i];
    if (r.event) events[{stratum_of(r), r.exit}].push_back(i);
  }

  std::vector<RiskSetView> views;
  for (const auto& [key, deaths] : events) {
    const auto& [s, u] = key;
    RiskSetView v;
    v.event_time = u;
    v.stratum = s;
    v.event_rows = deaths;
    for (int i = 0; i < n; ++i) {
      const auto& r = dataset.rows[i];
      if (stratum_of(r) != s) continue;
      if (r.entry < u && u <= r.exit) v.at_risk_rows.push_back(i);
    }
    v.covariates.setZero(static_cast<int>(v.at_risk_rows.size()), p);
    for (std::size_t a = 0; a < v.at_risk_rows.size(); ++a) {
      const auto& r = dataset.rows[v.at_risk_rows[a]];
      const bool second = r.goal_index == 2;
      for (int k = 0; k < p; ++k) {
        switch (spec.terms[k]) {
          case Term::ProbWin: v.covariates(a, k) = r.prob_win; break;
          case Term::Season: v.covariates(a, k) = r.season; break;
          case Term::Goal: v.covariates(a, k) = second ? 1.0 : 0.0; break;
          case Term::TimeOfFirstGoal:
            v.covariates(a, k) = second ? *r.time_of_first_goal : 0.0;
            break;
          case Term::FirstGoalTeam:
            v.covariates(a, k) = (second && *r.first_goal_team) ? 1.0 : 0.0;
            break;
          case Term::TimeFromFirstGoal:
            if (second) {
              const double dt = u - *r.time_of_first_goal;
              v.covariates(a, k) =
                  spec.transform == TimeTransform::Log ? std::log(dt) : dt;
            }
            break;
        }
      }
    }
    (void)tidx;
    views.push_back(std::move(v));
  }
  return views;
}

}  // namespace goaltime
