#include "goaltime/json_io.hpp"

#include <cmath>
#include <cstdio>

#include "goaltime/errors.hpp"
#include "goaltime/stats.hpp"

namespace goaltime {

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string provenance_line(const std::map<std::string, std::string>& input_digests) {
  std::string line = std::string(kToolName) + " " + kToolVersion;
  if (!input_digests.empty()) {
    line += " inputs=";
    bool first = true;
    for (const auto& [name, digest] : input_digests) {
      if (!first) line += ",";
      line += name + ":" + digest;
      first = false;
    }
  }
  return line;
}

std::string ties_name(Ties t) { return t == Ties::Efron ? "efron" : "breslow"; }

Ties ties_from_name(const std::string& s) {
  if (s == "efron") return Ties::Efron;
  if (s == "breslow") return Ties::Breslow;
  throw ParseError("unknown ties method: " + s);
}

std::string transform_name(TimeTransform t) {
  return t == TimeTransform::Log ? "log" : "identity";
}

TimeTransform transform_from_name(const std::string& s) {
  if (s == "log") return TimeTransform::Log;
  if (s == "identity") return TimeTransform::Identity;
  throw ParseError("unknown time transform: " + s);
}

nlohmann::ordered_json fit_to_json(const FitResult& fit,
                                   const std::map<std::string, std::string>& input_digests) {
  nlohmann::ordered_json j;
  j["meta"]["tool"] = kToolName;
  j["meta"]["version"] = kToolVersion;
  if (!input_digests.empty()) {
    for (const auto& [name, digest] : input_digests) j["meta"]["inputs"][name] = digest;
  }

  nlohmann::ordered_json model;
  model["label"] = fit.spec.label;
  nlohmann::ordered_json terms = nlohmann::ordered_json::array();
  for (Term t : fit.spec.terms) terms.push_back(term_name(t));
  model["terms"] = terms;
  model["transform"] = transform_name(fit.spec.transform);
  model["stratify_by_goal"] = fit.spec.stratify_by_goal;
  model["frailty"] = fit.spec.frailty;
  model["ties"] = ties_name(fit.spec.ties);
  j["model"] = model;

  nlohmann::ordered_json coefs;
  for (std::size_t k = 0; k < fit.spec.terms.size(); ++k) {
    const double coef = fit.coefficients[static_cast<int>(k)];
    const double se = std::sqrt(fit.covariance(static_cast<int>(k), static_cast<int>(k)));
    const double z = coef / se;
    std::string name = term_name(fit.spec.terms[k]);
    if (fit.spec.terms[k] == Term::TimeFromFirstGoal && fit.spec.transform == TimeTransform::Log) {
      name = "logTimeFromFirstGoal";
    }
    coefs[name] = {{"coef", coef},
                   {"exp_coef", std::exp(coef)},
                   {"se", se},
                   {"z", z},
                   {"p", normal_two_sided_p(z)}};
  }
  j["coefficients"] = coefs;

  nlohmann::ordered_json cov = nlohmann::ordered_json::array();
  for (int r = 0; r < fit.covariance.rows(); ++r) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (int c = 0; c < fit.covariance.cols(); ++c) row.push_back(fit.covariance(r, c));
    cov.push_back(row);
  }
  j["covariance"] = cov;
  j["loglik_null"] = fit.loglik_null;
  j["loglik_final"] = fit.loglik_final;
  j["theta"] = fit.theta;
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;

  if (fit.frailty_test) {
    nlohmann::ordered_json fr;
    fr["theta"] = fit.theta;
    fr["lrt_statistic"] = fit.frailty_test->statistic;
    fr["p_value"] = fit.frailty_test->p_value;
    fr["at_upper_bound"] = fit.frailty_test->at_upper_bound;
    nlohmann::ordered_json pm;
    for (const auto& [game, mean] : fit.frailty_values) pm[game] = mean;
    fr["posterior_means"] = pm;
    j["frailty"] = fr;
  }
  return j;
}

FitResult fit_from_json(const nlohmann::ordered_json& j) {
  FitResult fit;
  const auto& model = j.at("model");
  fit.spec.label = model.value("label", std::string{});
  for (const auto& name : model.at("terms")) {
    fit.spec.terms.push_back(term_from_name(name.get<std::string>()));
  }
  fit.spec.transform = transform_from_name(model.at("transform").get<std::string>());
  fit.spec.stratify_by_goal = model.at("stratify_by_goal").get<bool>();
  fit.spec.frailty = model.at("frailty").get<bool>();
  fit.spec.ties = ties_from_name(model.at("ties").get<std::string>());
  fit.spec.validate();

  const int p = static_cast<int>(fit.spec.terms.size());
  fit.coefficients.setZero(p);
  const auto& coefs = j.at("coefficients");
  for (int k = 0; k < p; ++k) {
    std::string name = term_name(fit.spec.terms[k]);
    if (fit.spec.terms[k] == Term::TimeFromFirstGoal && fit.spec.transform == TimeTransform::Log) {
      name = "logTimeFromFirstGoal";
    }
    fit.coefficients[k] = coefs.at(name).at("coef").get<double>();
  }
  fit.covariance.setZero(p, p);
  const auto& cov = j.at("covariance");
  if (static_cast<int>(cov.size()) != p) throw ParseError("fit JSON: covariance shape mismatch");
  for (int r = 0; r < p; ++r) {
    for (int c = 0; c < p; ++c) fit.covariance(r, c) = cov.at(r).at(c).get<double>();
  }
  fit.loglik_null = j.at("loglik_null").get<double>();
  fit.loglik_final = j.at("loglik_final").get<double>();
  fit.theta = j.at("theta").get<double>();
  fit.iterations = j.at("iterations").get<int>();
  fit.converged = j.at("converged").get<bool>();
  if (j.contains("frailty")) {
    const auto& fr = j.at("frailty");
    FrailtyTest t;
    t.statistic = fr.at("lrt_statistic").get<double>();
    t.p_value = fr.at("p_value").get<double>();
    t.at_upper_bound = fr.at("at_upper_bound").get<bool>();
    fit.frailty_test = t;
    if (fr.contains("posterior_means")) {
      for (const auto& [game, mean] : fr.at("posterior_means").items()) {
        fit.frailty_values[game] = mean.get<double>();
      }
    }
  }
  return fit;
}

}  // namespace goaltime
