#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "goaltime/baseline.hpp"
#include "goaltime/coxfit.hpp"
#include "goaltime/diagnostics.hpp"
#include "goaltime/errors.hpp"
#include "goaltime/frailty.hpp"
#include "goaltime/ingest.hpp"
#include "goaltime/json_io.hpp"
#include "goaltime/simulate.hpp"
#include "goaltime/stats.hpp"

namespace fs = std::filesystem;
using namespace goaltime;

namespace {

// Exit codes: 0 ok, 1 usage, 2 input parse failure, 3 non-convergence,
// 4 contract violation.
enum ExitCode { kOk = 0, kUsage = 1, kParse = 2, kNonConvergence = 3, kContract = 4 };

int g_exit = kOk;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open " + path + " for writing");
  return out;
}

std::string fmt(double v, int prec = 3) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return buf;
}

std::string fmt_p(double p) { return p < 0.001 ? "<0.001" : fmt(p, 3); }

std::string display_name(const ModelSpec& spec, Term t) {
  if (t == Term::TimeFromFirstGoal && spec.transform == TimeTransform::Log) {
    return "logTimeFromFirstGoal";
  }
  return term_name(t);
}

void print_fit_table(const FitResult& fit) {
  std::printf("%-22s %9s %10s %9s %8s %8s\n", "term", "coef", "exp(coef)", "se(coef)", "z", "p");
  for (std::size_t k = 0; k < fit.spec.terms.size(); ++k) {
    const double coef = fit.coefficients[static_cast<int>(k)];
    const double se = std::sqrt(fit.covariance(static_cast<int>(k), static_cast<int>(k)));
    const double z = coef / se;
    std::printf("%-22s %9.3f %10.3f %9.3f %8.3f %8s\n",
                display_name(fit.spec, fit.spec.terms[k]).c_str(), coef, std::exp(coef), se, z,
                fmt_p(normal_two_sided_p(z)).c_str());
  }
  std::printf("loglik: null %.3f  final %.3f  iterations %d  converged %s\n", fit.loglik_null,
              fit.loglik_final, fit.iterations, fit.converged ? "yes" : "no");
  if (fit.frailty_test) {
    std::printf("frailty: theta %.6g  LRT %.4g on 1 df  p %s%s\n", fit.theta,
                fit.frailty_test->statistic, fmt_p(fit.frailty_test->p_value).c_str(),
                fit.frailty_test->at_upper_bound ? "  [theta at search upper bound]" : "");
  }
}

void print_summary(const DatasetSummary& s) {
  std::printf("%-24s %10d\n", "games", s.n_games);
  std::printf("%-24s %10d\n", "rows", s.n_rows);
  std::printf("%-24s %10d\n", "censored (total)", s.n_censored_total);
  std::printf("%-24s %10d\n", "censored (first)", s.n_censored_first);
  std::printf("%-24s %10d\n", "censored (second)", s.n_censored_second);
  std::printf("%-24s %10d\n", "goalless", s.n_goalless);
  std::printf("%-24s %10d\n", "first goal at 90", s.n_first_goal_at_90);
  std::printf("%-24s %10d\n", "home first goals", s.n_home_first_goals);
  std::printf("%-24s %10.3f (sd %.3f)\n", "mean ProbWin", s.mean_probwin, s.sd_probwin);
  if (s.mean_time_of_first_goal) {
    std::printf("%-24s %10.1f (sd %.2f)\n", "mean TimeOfFirstGoal", *s.mean_time_of_first_goal,
                *s.sd_time_of_first_goal);
  }
}

ModelSpec spec_from_flags(const std::string& model, const std::string& terms_csv,
                          const std::string& transform, bool stratify, bool frailty,
                          const std::string& ties) {
  ModelSpec spec;
  if (!model.empty()) {
    spec = expand_preset(model);
    if (frailty) spec.frailty = true;
  } else if (!terms_csv.empty()) {
    std::istringstream ss(terms_csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) spec.terms.push_back(term_from_name(tok));
    std::sort(spec.terms.begin(), spec.terms.end());
    spec.terms.erase(std::unique(spec.terms.begin(), spec.terms.end()), spec.terms.end());
    spec.transform = transform_from_name(transform);
    spec.stratify_by_goal = stratify;
    spec.frailty = frailty;
    spec.label = "custom";
  } else {
    throw ParseError("fit: either --model or --terms is required");
  }
  if (!ties.empty()) spec.ties = ties_from_name(ties);
  spec.validate();
  return spec;
}

Profile parse_profile(const std::string& text) {
  Profile p;
  p.label = text;
  bool have_pw = false;
  std::istringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw ParseError("bad profile token '" + tok + "'");
    const std::string key = tok.substr(0, eq);
    double val = 0.0;
    try {
      val = std::stod(tok.substr(eq + 1));
    } catch (const std::exception&) {
      throw ParseError("bad profile value in '" + tok + "'");
    }
    if (key == "pw") {
      p.prob_win = val;
      have_pw = true;
    } else if (key == "season") {
      p.season = static_cast<int>(val);
    } else if (key == "tfg") {
      p.time_of_first_goal = val;
    } else if (key == "fgt") {
      p.first_goal_team = val != 0.0;
    } else {
      throw ParseError("unknown profile key '" + key + "' (expected pw, season, tfg, fgt)");
    }
  }
  if (!have_pw) throw ParseError("profile '" + text + "' is missing pw=");
  return p;
}

std::string csv_num(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_curves_csv(std::ostream& out, const std::vector<SurvivalCurve>& curves,
                      const std::string& provenance) {
  out << "# " << provenance << "\n";
  out << "stratum,time,value,lower,upper\n";
  for (const auto& c : curves) {
    for (const auto& pt : c.points) {
      out << c.profile.label << ',' << csv_num(pt.time) << ',' << csv_num(pt.survival) << ','
          << csv_num(pt.lower95) << ',' << csv_num(pt.upper95) << '\n';
    }
  }
}

void write_baseline_csv(std::ostream& out, const std::vector<BaselineHazard>& baselines,
                        const std::string& provenance) {
  out << "# " << provenance << "\n";
  out << "stratum,time,value,lower,upper\n";
  for (const auto& b : baselines) {
    for (const auto& st : b.steps) {
      const double se = std::sqrt(std::max(0.0, st.variance));
      double lo = st.cum_hazard, hi = st.cum_hazard;
      if (st.cum_hazard > 0.0 && se > 0.0) {
        const double ratio = 1.959963984540054 * se / st.cum_hazard;
        lo = st.cum_hazard * std::exp(-ratio);
        hi = st.cum_hazard * std::exp(ratio);
      }
      out << b.stratum << ',' << csv_num(st.time) << ',' << csv_num(st.cum_hazard) << ','
          << csv_num(lo) << ',' << csv_num(hi) << '\n';
    }
  }
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                    "#9467bd", "#ff7f0e", "#8c564b"};

double svg_x(double t) { return 60.0 + t / 90.0 * 560.0; }
double svg_y(double s) { return 20.0 + (1.0 - s) * 360.0; }

std::string step_path(const std::vector<SurvivalCurvePoint>& pts, int which) {
  // which: 0 survival, 1 lower95, 2 upper95
  std::ostringstream d;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double y = which == 1 ? pts[i].lower95 : (which == 2 ? pts[i].upper95 : pts[i].survival);
    if (i == 0) {
      d << "M" << svg_x(pts[i].time) << " " << svg_y(y);
    } else {
      d << " H" << svg_x(pts[i].time) << " V" << svg_y(y);
    }
  }
  return d.str();
}

void write_curves_svg(std::ostream& out, const std::vector<SurvivalCurve>& curves,
                      const std::string& provenance) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 660 430\" "
         "font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<!-- " << provenance << " -->\n";
  out << "<rect width=\"660\" height=\"430\" fill=\"white\"/>\n";
  out << "<line x1=\"60\" y1=\"380\" x2=\"620\" y2=\"380\" stroke=\"black\"/>\n";
  out << "<line x1=\"60\" y1=\"20\" x2=\"60\" y2=\"380\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 90; t += 15) {
    out << "<line x1=\"" << svg_x(t) << "\" y1=\"380\" x2=\"" << svg_x(t)
        << "\" y2=\"384\" stroke=\"black\"/>\n"
        << "<text x=\"" << svg_x(t) << "\" y=\"398\" text-anchor=\"middle\">" << t << "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double s = i * 0.25;
    out << "<line x1=\"56\" y1=\"" << svg_y(s) << "\" x2=\"60\" y2=\"" << svg_y(s)
        << "\" stroke=\"black\"/>\n"
        << "<text x=\"52\" y=\"" << svg_y(s) + 4 << "\" text-anchor=\"end\">" << fmt(s, 2)
        << "</text>\n";
  }
  out << "<text x=\"340\" y=\"422\" text-anchor=\"middle\">minute</text>\n";
  out << "<text x=\"16\" y=\"200\" transform=\"rotate(-90 16 200)\" "
         "text-anchor=\"middle\">survival</text>\n";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const char* color = kPalette[i % 6];
    out << "<path d=\"" << step_path(curves[i].points, 0) << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.6\"/>\n";
    for (int which : {1, 2}) {
      out << "<path d=\"" << step_path(curves[i].points, which) << "\" fill=\"none\" stroke=\""
          << color << "\" stroke-width=\"0.8\" stroke-dasharray=\"4 3\"/>\n";
    }
    const double ly = 30.0 + 16.0 * static_cast<double>(i);
    out << "<rect x=\"480\" y=\"" << ly - 9 << "\" width=\"10\" height=\"10\" fill=\"" << color
        << "\"/>\n"
        << "<text x=\"494\" y=\"" << ly << "\">" << curves[i].profile.label << "</text>\n";
  }
  out << "</svg>\n";
}

void run_ingest(const std::string& matches_path, const std::string& out_path) {
  const std::string bytes = slurp(matches_path);
  std::istringstream in(bytes);
  auto matches = read_matches_csv(in, matches_path);
  Dataset ds = build_dataset(matches);
  if (!out_path.empty()) {
    const std::string prov =
        provenance_line({{fs::path(matches_path).filename().string(), fnv1a_hex(bytes)}});
    auto out = open_out(out_path);
    write_dataset_csv(out, ds, prov);
  }
  print_summary(summarize(ds));
}

void run_fit(const std::string& dataset_path, const ModelSpec& spec, const std::string& out_path) {
  const std::string bytes = slurp(dataset_path);
  std::istringstream in(bytes);
  Dataset ds = read_dataset_csv(in, dataset_path);
  FitResult res = spec.frailty ? fit_frailty(ds, spec) : fit(ds, spec);
  if (!out_path.empty()) {
    auto out = open_out(out_path);
    out << fit_to_json(res, {{fs::path(dataset_path).filename().string(), fnv1a_hex(bytes)}})
               .dump(2)
        << '\n';
  }
  print_fit_table(res);
  if (!res.converged) {
    std::fprintf(stderr, "warning: fit did not converge\n");
    g_exit = kNonConvergence;
  }
}

FitResult load_fit(const std::string& path) {
  return fit_from_json(nlohmann::ordered_json::parse(slurp(path)));
}

void run_lrt(const std::string& nested_path, const std::string& full_path, int df) {
  FitResult nested = load_fit(nested_path);
  FitResult full = load_fit(full_path);
  if (df <= 0) {
    if (full.spec.frailty && !nested.spec.frailty) {
      df = 1;
    } else {
      df = std::max(1, static_cast<int>(full.spec.terms.size() - nested.spec.terms.size()));
    }
  }
  LrtResult r = lrt(nested, full, df);
  std::printf("LRT: statistic %.4f on %d df, p %s\n", r.statistic, df, fmt_p(r.p_value).c_str());
}

void run_curves(const std::string& fit_path, const std::string& dataset_path,
                const std::vector<std::string>& profile_texts, const std::string& out_path,
                const std::string& baseline_path, const std::string& svg_path) {
  if (profile_texts.empty()) throw ParseError("curves: at least one --profile is required");
  const std::string fit_bytes = slurp(fit_path);
  const std::string ds_bytes = slurp(dataset_path);
  FitResult fitres = fit_from_json(nlohmann::ordered_json::parse(fit_bytes));
  std::istringstream in(ds_bytes);
  Dataset ds = read_dataset_csv(in, dataset_path);
  auto baselines = breslow_baseline(ds, fitres.spec, fitres);

  std::vector<SurvivalCurve> curves;
  for (const auto& text : profile_texts) {
    curves.push_back(survival_curve(fitres, baselines, parse_profile(text)));
  }
  const std::string prov =
      provenance_line({{fs::path(fit_path).filename().string(), fnv1a_hex(fit_bytes)},
                       {fs::path(dataset_path).filename().string(), fnv1a_hex(ds_bytes)}});
  {
    auto out = open_out(out_path);
    write_curves_csv(out, curves, prov);
  }
  if (!baseline_path.empty()) {
    auto out = open_out(baseline_path);
    write_baseline_csv(out, baselines, prov);
  }
  if (!svg_path.empty()) {
    auto out = open_out(svg_path);
    write_curves_svg(out, curves, prov);
  }
  std::printf("wrote %zu curve(s) to %s\n", curves.size(), out_path.c_str());
}

void run_residuals(const std::string& fit_path, const std::string& dataset_path,
                   const std::string& out_path, const std::string& scatter_path) {
  const std::string fit_bytes = slurp(fit_path);
  const std::string ds_bytes = slurp(dataset_path);
  FitResult fitres = fit_from_json(nlohmann::ordered_json::parse(fit_bytes));
  std::istringstream in(ds_bytes);
  Dataset ds = read_dataset_csv(in, dataset_path);
  auto baselines = breslow_baseline(ds, fitres.spec, fitres);
  auto mart = martingale_residuals(ds, fitres.spec, fitres, baselines);
  std::vector<bool> events;
  events.reserve(ds.rows.size());
  for (const auto& r : ds.rows) events.push_back(r.event);
  auto dev = deviance_residuals(mart, events);

  const std::string prov =
      provenance_line({{fs::path(fit_path).filename().string(), fnv1a_hex(fit_bytes)},
                       {fs::path(dataset_path).filename().string(), fnv1a_hex(ds_bytes)}});
  double sum = 0.0;
  {
    auto out = open_out(out_path);
    out << "# " << prov << "\n";
    out << "game_id,j,martingale,deviance\n";
    for (std::size_t i = 0; i < ds.rows.size(); ++i) {
      out << ds.rows[i].game_id << ',' << ds.rows[i].goal_index << ',' << csv_num(mart[i]) << ','
          << csv_num(dev[i]) << '\n';
      sum += mart[i];
    }
  }
  if (!scatter_path.empty()) {
    auto out = open_out(scatter_path);
    out << "# " << prov << "\n";
    out << "game_id,j,prob_win,time_of_first_goal,deviance\n";
    for (std::size_t i = 0; i < ds.rows.size(); ++i) {
      out << ds.rows[i].game_id << ',' << ds.rows[i].goal_index << ','
          << csv_num(ds.rows[i].prob_win) << ',';
      if (ds.rows[i].time_of_first_goal) out << csv_num(*ds.rows[i].time_of_first_goal);
      out << ',' << csv_num(dev[i]) << '\n';
    }
  }
  std::printf("martingale residual sum: %.3g\n", sum);
}

void run_simulate(int n, std::uint64_t seed, const std::string& params_path,
                  const std::string& model, const std::vector<std::string>& beta_kv,
                  std::optional<double> baseline_rate, std::optional<double> away_rate,
                  std::optional<double> theta, std::optional<double> pw_lo,
                  std::optional<double> pw_hi, std::optional<double> season_p,
                  std::optional<int> stoppage, const std::string& out_path) {
  SimParams p;
  p.spec = expand_preset("VI");
  p.beta = {{Term::ProbWin, 1.9},
            {Term::Season, 0.15},
            {Term::Goal, -0.6},
            {Term::TimeOfFirstGoal, 0.011},
            {Term::TimeFromFirstGoal, 0.16}};
  p.baseline_rate = 0.012;
  p.away_rate = 0.012;
  std::map<std::string, std::string> digests;
  if (!params_path.empty()) {
    const std::string bytes = slurp(params_path);
    digests[fs::path(params_path).filename().string()] = fnv1a_hex(bytes);
    auto j = nlohmann::ordered_json::parse(bytes);
    if (j.contains("model")) p.spec = expand_preset(j["model"].get<std::string>());
    if (j.contains("beta")) {
      p.beta.clear();
      for (const auto& [name, v] : j["beta"].items()) {
        p.beta[term_from_name(name)] = v.get<double>();
      }
    }
    if (j.contains("baseline_rate")) p.baseline_rate = j["baseline_rate"].get<double>();
    if (j.contains("away_rate")) p.away_rate = j["away_rate"].get<double>();
    if (j.contains("theta")) p.theta = j["theta"].get<double>();
    if (j.contains("probwin")) {
      p.probwin_lo = j["probwin"].at(0).get<double>();
      p.probwin_hi = j["probwin"].at(1).get<double>();
    }
    if (j.contains("season_p")) p.season_p = j["season_p"].get<double>();
    if (j.contains("stoppage_minutes")) p.stoppage_minutes = j["stoppage_minutes"].get<int>();
  }
  if (!model.empty()) p.spec = expand_preset(model);
  for (const auto& kv : beta_kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ParseError("bad --beta '" + kv + "' (expected Term=value)");
    p.beta[term_from_name(kv.substr(0, eq))] = std::stod(kv.substr(eq + 1));
  }
  if (baseline_rate) p.baseline_rate = *baseline_rate;
  if (away_rate) p.away_rate = *away_rate;
  if (theta) p.theta = *theta;
  if (pw_lo) p.probwin_lo = *pw_lo;
  if (pw_hi) p.probwin_hi = *pw_hi;
  if (season_p) p.season_p = *season_p;
  if (stoppage) p.stoppage_minutes = *stoppage;

  auto league = simulate_league(n, p, seed);
  std::ostringstream prov;
  prov << provenance_line(digests) << " n=" << n << " seed=" << seed;
  auto out = open_out(out_path);
  write_matches_csv(out, league, prov.str());
  std::printf("simulated %d games to %s\n", n, out_path.c_str());
}

std::string markdown_fit_table(const FitResult& fit) {
  std::ostringstream md;
  md << "| term | coef | exp(coef) | se(coef) | z | p |\n";
  md << "|---|---|---|---|---|---|\n";
  for (std::size_t k = 0; k < fit.spec.terms.size(); ++k) {
    const double coef = fit.coefficients[static_cast<int>(k)];
    const double se = std::sqrt(fit.covariance(static_cast<int>(k), static_cast<int>(k)));
    const double z = coef / se;
    md << "| " << display_name(fit.spec, fit.spec.terms[k]) << " | " << fmt(coef, 3) << " | "
       << fmt(std::exp(coef), 3) << " | " << fmt(se, 3) << " | " << fmt(z, 3) << " | "
       << fmt_p(normal_two_sided_p(z)) << " |\n";
  }
  return md.str();
}

bool nested_in(const FitResult& a, const FitResult& b) {
  if (a.spec.frailty || b.spec.frailty) return false;
  if (a.spec.stratify_by_goal != b.spec.stratify_by_goal) return false;
  if (a.spec.ties != b.spec.ties) return false;
  if (a.spec.terms.size() >= b.spec.terms.size()) return false;
  for (Term t : a.spec.terms) {
    if (!b.spec.has(t)) return false;
    if (t == Term::TimeFromFirstGoal && a.spec.transform != b.spec.transform) return false;
  }
  return true;
}

void run_report(const std::string& run_dir, std::string out_path) {
  if (!fs::is_directory(run_dir)) throw ParseError("report: " + run_dir + " is not a directory");
  if (out_path.empty()) out_path = (fs::path(run_dir) / "report.md").string();
  std::vector<std::pair<std::string, FitResult>> fits;
  std::vector<std::string> other_files;
  std::vector<fs::path> entries;
  for (const auto& e : fs::directory_iterator(run_dir)) {
    if (e.is_regular_file()) entries.push_back(e.path());
  }
  std::sort(entries.begin(), entries.end());
  for (const auto& path : entries) {
    if (path.extension() == ".json") {
      try {
        fits.emplace_back(path.filename().string(), load_fit(path.string()));
        continue;
      } catch (const std::exception&) {
        // not a fit document; fall through to the file listing
      }
    }
    if (path.extension() == ".csv" || path.extension() == ".svg") {
      other_files.push_back(path.filename().string());
    }
  }

  auto out = open_out(out_path);
  out << "<!-- " << provenance_line({}) << " -->\n";
  out << "# Model ladder report\n\n";
  if (fits.empty()) out << "No fit documents found in `" << run_dir << "`.\n";
  for (const auto& [name, f] : fits) {
    out << "## Model " << (f.spec.label.empty() ? name : f.spec.label) << " (`" << name << "`)\n\n";
    out << markdown_fit_table(f) << "\n";
    out << "loglik null " << fmt(f.loglik_null, 3) << ", final " << fmt(f.loglik_final, 3)
        << ", converged " << (f.converged ? "yes" : "no") << "\n\n";
    if (f.frailty_test) {
      out << "Frailty: theta " << fmt(f.theta, 6) << ", LRT " << fmt(f.frailty_test->statistic, 4)
          << " on 1 df, p " << fmt_p(f.frailty_test->p_value) << "\n\n";
    }
  }
  bool any_lrt = false;
  std::ostringstream lrt_md;
  lrt_md << "## Likelihood-ratio tests\n\n";
  lrt_md << "| nested | full | df | statistic | p |\n|---|---|---|---|---|\n";
  for (const auto& [an, a] : fits) {
    for (const auto& [bn, b] : fits) {
      if (an == bn || !nested_in(a, b)) continue;
      const int df = static_cast<int>(b.spec.terms.size() - a.spec.terms.size());
      try {
        LrtResult r = lrt(a, b, df);
        lrt_md << "| " << (a.spec.label.empty() ? an : a.spec.label) << " | "
               << (b.spec.label.empty() ? bn : b.spec.label) << " | " << df << " | "
               << fmt(r.statistic, 3) << " | " << fmt_p(r.p_value) << " |\n";
        any_lrt = true;
      } catch (const std::exception&) {
        // fits on different data; skip the pair
      }
    }
  }
  if (any_lrt) out << lrt_md.str() << "\n";
  if (!other_files.empty()) {
    out << "## Files\n\n";
    for (const auto& f : other_files) out << "- [" << f << "](" << f << ")\n";
  }
  std::printf("wrote %s (%zu model table(s))\n", out_path.c_str(), fits.size());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"goaltime: two-goal event-history modeling for soccer matches"};
  app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
  app.require_subcommand(1);

  auto* ingest = app.add_subcommand("ingest", "Build the counting-process dataset from match CSV");
  std::string in_matches, ingest_out;
  ingest->add_option("matches", in_matches, "match CSV file")->required();
  ingest->add_option("--out", ingest_out, "dataset CSV to write");
  ingest->set_config("--config");
  ingest->callback([&] { run_ingest(in_matches, ingest_out); });

  auto* fitcmd = app.add_subcommand("fit", "Fit a proportional-hazards model");
  std::string fit_dataset, fit_model, fit_terms, fit_transform = "identity", fit_ties, fit_out;
  bool fit_strat = false, fit_frail = false;
  fitcmd->add_option("dataset", fit_dataset, "dataset CSV file")->required();
  fitcmd->add_option("--model", fit_model, "preset I..VII");
  fitcmd->add_option("--terms", fit_terms, "comma-separated term names");
  fitcmd->add_option("--transform", fit_transform, "identity|log for TimeFromFirstGoal");
  fitcmd->add_flag("--stratify-by-goal", fit_strat, "stratify the baseline by goal index");
  fitcmd->add_flag("--frailty", fit_frail, "shared gamma frailty per game");
  fitcmd->add_option("--ties", fit_ties, "efron|breslow (default efron)");
  fitcmd->add_option("--out", fit_out, "fit JSON to write");
  fitcmd->set_config("--config");
  fitcmd->callback([&] {
    run_fit(fit_dataset,
            spec_from_flags(fit_model, fit_terms, fit_transform, fit_strat, fit_frail, fit_ties),
            fit_out);
  });

  auto* lrtcmd = app.add_subcommand("lrt", "Likelihood-ratio test between two fits");
  std::string lrt_nested, lrt_full;
  int lrt_df = 0;
  lrtcmd->add_option("nested", lrt_nested, "nested fit JSON")->required();
  lrtcmd->add_option("full", lrt_full, "full fit JSON")->required();
  lrtcmd->add_option("--df", lrt_df, "degrees of freedom (default: inferred)");
  lrtcmd->set_config("--config");
  lrtcmd->callback([&] { run_lrt(lrt_nested, lrt_full, lrt_df); });

  auto* curves = app.add_subcommand("curves", "Survival curves for covariate profiles");
  std::string cv_fit, cv_dataset, cv_out = "curves.csv", cv_baseline, cv_svg;
  std::vector<std::string> cv_profiles;
  curves->add_option("fit", cv_fit, "fit JSON")->required();
  curves->add_option("dataset", cv_dataset, "dataset CSV")->required();
  curves->add_option("--profile", cv_profiles, "pw=..[,season=..][,tfg=..][,fgt=..]");
  curves->add_option("--out", cv_out, "curves CSV to write");
  curves->add_option("--baseline", cv_baseline, "also write the baseline hazard CSV");
  curves->add_option("--svg", cv_svg, "also write an SVG chart");
  curves->set_config("--config");
  curves->callback(
      [&] { run_curves(cv_fit, cv_dataset, cv_profiles, cv_out, cv_baseline, cv_svg); });

  auto* resid = app.add_subcommand("residuals", "Martingale and deviance residuals");
  std::string rs_fit, rs_dataset, rs_out = "residuals.csv", rs_scatter;
  resid->add_option("fit", rs_fit, "fit JSON")->required();
  resid->add_option("dataset", rs_dataset, "dataset CSV")->required();
  resid->add_option("--out", rs_out, "residual CSV to write");
  resid->add_option("--scatter", rs_scatter, "scatter CSV keyed by ProbWin and TimeOfFirstGoal");
  resid->set_config("--config");
  resid->callback([&] { run_residuals(rs_fit, rs_dataset, rs_out, rs_scatter); });

  auto* sim = app.add_subcommand("simulate", "Generate a synthetic league");
  int sim_n = 760;
  std::uint64_t sim_seed = 1;
  std::string sim_params, sim_model, sim_out = "matches.csv";
  std::vector<std::string> sim_beta;
  std::optional<double> sim_lambda, sim_away, sim_theta, sim_pwlo, sim_pwhi, sim_seasonp;
  std::optional<int> sim_stoppage;
  sim->add_option("--n", sim_n, "number of games");
  sim->add_option("--seed", sim_seed, "master seed");
  sim->add_option("--params", sim_params, "JSON parameter file");
  sim->add_option("--model", sim_model, "generating preset I..VII");
  sim->add_option("--beta", sim_beta, "Term=value (repeatable)");
  sim->add_option("--baseline-rate", sim_lambda, "per-minute home baseline rate");
  sim->add_option("--away-rate", sim_away, "per-minute away rate");
  sim->add_option("--theta", sim_theta, "shared gamma frailty variance");
  sim->add_option("--probwin-lo", sim_pwlo, "ProbWin lower bound");
  sim->add_option("--probwin-hi", sim_pwhi, "ProbWin upper bound");
  sim->add_option("--season-p", sim_seasonp, "P(season = 1)");
  sim->add_option("--stoppage", sim_stoppage, "stoppage minutes mapped onto 45/90");
  sim->add_option("--out", sim_out, "match CSV to write");
  sim->set_config("--config");
  sim->callback([&] {
    run_simulate(sim_n, sim_seed, sim_params, sim_model, sim_beta, sim_lambda, sim_away, sim_theta,
                 sim_pwlo, sim_pwhi, sim_seasonp, sim_stoppage, sim_out);
  });

  auto* report = app.add_subcommand("report", "Render a markdown report over a run directory");
  std::string rp_dir, rp_out;
  report->add_option("rundir", rp_dir, "directory with fit JSONs and CSVs")->required();
  report->add_option("--out", rp_out, "report path (default rundir/report.md)");
  report->set_config("--config");
  report->callback([&] { run_report(rp_dir, rp_out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kParse;
  } catch (const ConvergenceError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kNonConvergence;
  } catch (const ContractError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kContract;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kParse;
  }
  return g_exit;
}
