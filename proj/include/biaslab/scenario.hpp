#pragma once

// Scenario configs: one data source (SCM, exact-correlation draw, CSV file or
// Monte Carlo template), ordered preprocessing steps, ordered analyses, and
// declared outputs.

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "causal.hpp"
#include "datakit.hpp"
#include "error.hpp"
#include "estimators.hpp"
#include "json_io.hpp"
#include "mc.hpp"
#include "measure.hpp"
#include "simcore.hpp"

namespace biaslab {

struct OutputSpec {
  std::string what;  // data | report | analysis | mc | summary | config
  std::string name;  // analysis name for "analysis" and "mc"
  std::string format;
  std::string path;
};

struct ScenarioConfig {
  std::string id;
  std::string description;
  std::uint64_t seed = 0;
  json data;      // exactly one of {"scm"}, {"corr", "n"}, {"csv"}, {"mc"}
  json steps = json::array();
  json analyses = json::array();
  std::vector<OutputSpec> outputs;
};

struct AnalysisOutput {
  std::string name;
  std::string op;
  json result;
  std::string table_csv;
  std::string text;
  std::string error;
  std::optional<McResult> mc;

  bool ok() const { return error.empty(); }
};

struct ScenarioRun {
  std::string id;
  std::uint64_t seed = 0;
  Dataset data;
  std::optional<McResult> mc;
  std::vector<AnalysisOutput> analyses;
  std::vector<std::pair<std::string, std::string>> files;  // relative path -> contents
  std::string text;

  std::size_t n_failed() const {
    return static_cast<std::size_t>(std::count_if(analyses.begin(), analyses.end(), [](const AnalysisOutput& a) { return !a.ok(); }));
  }
  const AnalysisOutput& analysis(const std::string& name) const {
    for (const auto& a : analyses)
      if (a.name == name) return a;
    fail(ErrorKind::Lookup, "scenario has no analysis '" + name + "'");
  }
};

struct RunOptions {
  unsigned threads = 1;
  std::string default_format = "csv";
};

// ---------------------------------------------------------------------------
// Text rendering (6 significant digits)

namespace detail {

inline std::string g6(double v) {
  if (std::isnan(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string pad(const std::string& s, std::size_t w) { return s.size() >= w ? s + " " : s + std::string(w - s.size(), ' '); }

inline std::string fit_table(const FitResult& r) {
  std::string s = r.formula.str() + "  [" + to_string(r.family) + "]  n = " + std::to_string(r.n_used);
  if (r.n_dropped) s += " (" + std::to_string(r.n_dropped) + " dropped)";
  s += "\n";
  const char* stat = r.family == Family::Binomial ? "z" : "t";
  s += pad("term", 16) + pad("b", 14) + pad("SE", 14) + pad(stat, 14) + pad("p", 14) + "beta\n";
  for (std::size_t j = 0; j < r.terms.size(); ++j)
    s += pad(r.terms[j], 16) + pad(g6(r.b[j]), 14) + pad(g6(r.se[j]), 14) + pad(g6(r.stat[j]), 14) + pad(g6(r.p[j]), 14) +
         g6(r.beta[j]) + "\n";
  for (std::size_t k = 0; k < r.cutpoints.size(); ++k)
    s += pad("cut " + std::to_string(k + 1) + "|" + std::to_string(k + 2), 16) + pad(g6(r.cutpoints[k]), 14) +
         g6(r.cutpoint_se[k]) + "\n";
  if (r.family == Family::Gaussian) s += "R2 = " + g6(r.r_squared) + ", adj R2 = " + g6(r.adj_r_squared) + ", sigma = " + g6(r.sigma);
  else s += "deviance = " + g6(r.deviance) + ", null deviance = " + g6(r.null_deviance);
  s += ", AIC = " + g6(r.aic) + (r.converged ? "" : ", NOT CONVERGED") + "\n";
  for (const auto& w : r.warnings) s += "warning: " + w + "\n";
  return s;
}

inline std::string fit_csv(const FitResult& r) {
  std::string s = "term,b,se,stat,p,beta\n";
  auto num = [](double v) { return std::isnan(v) ? std::string() : format_number(v); };
  for (std::size_t j = 0; j < r.terms.size(); ++j)
    s += r.terms[j] + "," + num(r.b[j]) + "," + num(r.se[j]) + "," + num(r.stat[j]) + "," + num(r.p[j]) + "," + num(r.beta[j]) + "\n";
  for (std::size_t k = 0; k < r.cutpoints.size(); ++k)
    s += "cut" + std::to_string(k + 1) + "," + num(r.cutpoints[k]) + "," + num(r.cutpoint_se[k]) + ",,,\n";
  return s;
}

inline std::string mc_summary_line(const std::string& series, const McSummary& m) {
  return pad(series, 16) + pad(g6(m.min), 12) + pad(g6(m.q1), 12) + pad(g6(m.median), 12) + pad(g6(m.mean), 12) +
         pad(g6(m.q3), 12) + g6(m.max) + "\n";
}

inline const std::string kSummaryHeader = pad("series", 16) + pad("Min.", 12) + pad("1st Qu.", 12) + pad("Median", 12) +
                                          pad("Mean", 12) + pad("3rd Qu.", 12) + "Max.\n";

}  // namespace detail

// ---------------------------------------------------------------------------
// Config (de)serialization

inline json config_to_json(const ScenarioConfig& c) {
  json outs = json::array();
  for (const auto& o : c.outputs) {
    json e{{"what", o.what}};
    if (!o.name.empty()) e["name"] = o.name;
    if (!o.format.empty()) e["format"] = o.format;
    e["path"] = o.path;
    outs.push_back(e);
  }
  json j{{"id", c.id}};
  if (!c.description.empty()) j["description"] = c.description;
  j["seed"] = c.seed;
  j["data"] = c.data;
  j["steps"] = c.steps;
  j["analyses"] = c.analyses;
  j["outputs"] = outs;
  return j;
}

namespace detail {

/// Canonical form of the data block (specs are parsed and re-serialized).
inline json normalize_data(const json& d) {
  using namespace jsonio;
  if (!d.is_object() || d.empty()) bad("data", "expected one of scm, corr, csv, mc");
  int kinds = d.contains("scm") + d.contains("corr") + d.contains("csv") + d.contains("mc");
  if (kinds != 1) bad("data", "expected exactly one of scm, corr, csv, mc");
  if (d.contains("scm")) return json{{"scm", scm_to_json(scm_from_json(d.at("scm"), "data.scm"))}};
  if (d.contains("corr")) {
    const double n = num(d, "n", "data");
    if (!(n >= 1) || n != std::floor(n)) bad("data.n", "must be a positive integer");
    return json{{"corr", corr_to_json(corr_from_json(d.at("corr"), "data.corr"))}, {"n", static_cast<std::size_t>(n)}};
  }
  if (d.contains("csv")) return json{{"csv", str(d.at("csv"), "data.csv")}};
  McTemplate t = template_from_json(d.at("mc"), "data.mc");
  json tj = template_to_json(t);
  tj.erase("seed");  // the scenario seed drives the template
  return json{{"mc", tj}};
}

}  // namespace detail

inline void validate_config(const ScenarioConfig& c);

inline ScenarioConfig config_from_json(const json& j) {
  using namespace jsonio;
  if (!j.is_object()) bad("<root>", "expected an object");
  static const std::set<std::string> known{"id", "description", "seed", "data", "steps", "analyses", "outputs"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) bad(it.key(), "unknown field");
  ScenarioConfig c;
  c.id = str(j, "id", "<root>");
  if (j.contains("description")) c.description = str(j.at("description"), "description");
  if (j.contains("seed")) {
    const auto& s = j.at("seed");
    if (s.is_number_unsigned()) c.seed = s.get<std::uint64_t>();
    else if (s.is_number_integer() && s.get<long long>() >= 0) c.seed = static_cast<std::uint64_t>(s.get<long long>());
    else bad("seed", "expected a non-negative integer");
  }
  c.data = detail::normalize_data(req(j, "data", "<root>"));
  if (j.contains("steps")) {
    if (!j.at("steps").is_array()) bad("steps", "expected an array");
    c.steps = j.at("steps");
  }
  if (j.contains("analyses")) {
    if (!j.at("analyses").is_array()) bad("analyses", "expected an array");
    c.analyses = j.at("analyses");
  }
  if (j.contains("outputs")) {
    const auto& o = j.at("outputs");
    if (!o.is_array()) bad("outputs", "expected an array");
    for (std::size_t i = 0; i < o.size(); ++i) {
      const auto p = "outputs[" + std::to_string(i) + "]";
      OutputSpec s;
      s.what = str(o[i], "what", p);
      if (o[i].contains("name")) s.name = str(o[i].at("name"), p + ".name");
      if (o[i].contains("format")) s.format = str(o[i].at("format"), p + ".format");
      s.path = str(o[i], "path", p);
      c.outputs.push_back(s);
    }
  }
  validate_config(c);
  return c;
}

inline ScenarioConfig config_from_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Validation, std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

inline ScenarioConfig config_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_string(ss.str());
}

// ---------------------------------------------------------------------------
// Steps

namespace detail {

/// A number, or "mean(col)" / "median(col)" evaluated on the current data.
inline double resolve_value(const json& v, const Dataset& d, const std::string& path) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    const auto open = s.find('('), close = s.rfind(')');
    if (open != std::string::npos && close == s.size() - 1) {
      const auto fn = s.substr(0, open);
      const auto col = s.substr(open + 1, close - open - 1);
      if (fn == "mean") return summarize(d.column(col)).mean;
      if (fn == "median") return summarize(d.column(col)).median;
    }
  }
  jsonio::bad(path, "expected a number, \"mean(col)\" or \"median(col)\"");
}

inline std::string value_ref(const json& v) {
  if (!v.is_string()) return {};
  const auto s = v.get<std::string>();
  const auto open = s.find('('), close = s.rfind(')');
  if (open == std::string::npos || close != s.size() - 1) return {};
  return s.substr(open + 1, close - open - 1);
}

struct NameScope {
  bool known = true;  // false for CSV data, where columns are only known at run time
  std::set<std::string> names;

  void need(const std::string& n, const std::string& path) const {
    if (known && !names.count(n)) jsonio::bad(path, "unknown variable '" + n + "'");
  }
  void need_formula(const std::string& f, const std::string& path) const {
    Formula parsed;
    try {
      parsed = Formula::parse(f);
    } catch (const Error& e) {
      jsonio::bad(path, e.what());
    }
    for (const auto& v : parsed.variables()) need(v, path);
  }
};

inline std::string measure_kind(const json& rule) { return rule.is_object() && rule.contains("kind") ? rule.at("kind").get<std::string>() : ""; }

/// Validates one step against the names in scope and adds any new columns.
inline void check_step(const json& s, const std::string& path, NameScope& scope) {
  using namespace jsonio;
  const auto op = str(s, "op", path);
  if (op == "inject_outlier") {
    const auto& v = req(s, "values", path);
    if (!v.is_object()) bad(path + ".values", "expected an object of column: value");
    for (auto it = v.begin(); it != v.end(); ++it) {
      scope.need(it.key(), path + ".values");
      if (!it.value().is_number()) {
        const auto ref = value_ref(it.value());
        if (ref.empty()) bad(path + ".values." + it.key(), "expected a number, \"mean(col)\" or \"median(col)\"");
        scope.need(ref, path + ".values." + it.key());
      }
    }
  } else if (op == "equation") {
    const EquationSpec e = equation_from_json(req(s, "equation", path), path + ".equation");
    for (const auto& r : e.references()) scope.need(r, path + ".equation");
    if (scope.known && scope.names.count(e.target)) bad(path + ".equation.target", "column '" + e.target + "' already exists");
    scope.names.insert(e.target);
  } else if (op == "replicate_by") {
    const auto col = str(s, "column", path);
    if (nums(req(s, "values", path), path + ".values").empty()) bad(path + ".values", "at least one value required");
    scope.names.insert(col);
  } else if (op == "recode" || op == "transform") {
    const auto col = str(s, "column", path);
    scope.need(col, path + ".column");
    (void)rule_from_json(req(s, "rule", path), path + ".rule");
    scope.names.insert(s.contains("as") ? str(s.at("as"), path + ".as") : col);
  } else if (op == "block_randomize") {
    scope.need(str(s, "strata", path), path + ".strata");
    scope.names.insert(s.contains("as") ? str(s.at("as"), path + ".as") : "treat");
  } else if (op == "filter") {
    for (const auto& f : filters_from_json(req(s, "where", path), path + ".where")) scope.need(f.var, path + ".where");
  } else if (op == "listwise") {
    for (const auto& v : strs(req(s, "vars", path), path + ".vars")) scope.need(v, path + ".vars");
  } else if (op == "sample") {
    if (!(num(s, "k", path) >= 1)) bad(path + ".k", "must be at least 1");
    if (s.contains("where"))
      for (const auto& f : filters_from_json(s.at("where"), path + ".where")) scope.need(f.var, path + ".where");
    if (s.contains("stratify_by")) scope.need(str(s.at("stratify_by"), path + ".stratify_by"), path + ".stratify_by");
  } else {
    bad(path + ".op", "unknown step '" + op + "'");
  }
}

inline void apply_step(const json& s, const std::string& path, Dataset& d, RngState& rng) {
  using namespace jsonio;
  const auto op = str(s, "op", path);
  if (op == "inject_outlier") {
    std::map<std::string, double> vals;
    const auto& v = s.at("values");
    for (auto it = v.begin(); it != v.end(); ++it) vals[it.key()] = resolve_value(it.value(), d, path + ".values." + it.key());
    d = inject_outlier(d, vals);
  } else if (op == "equation") {
    d.add(evaluate_equation(d, equation_from_json(s.at("equation"), path + ".equation"), rng));
  } else if (op == "replicate_by") {
    const auto col = str(s, "column", path);
    const auto values = nums(s.at("values"), path + ".values");
    Dataset out;
    for (double v : values) {
      Dataset copy = d;
      copy.set(Column(col, std::vector<double>(d.n_rows(), v)));
      out.append_rows(copy);
    }
    d = std::move(out);
  } else if (op == "recode" || op == "transform") {
    const auto col = str(s, "column", path);
    Column c = apply_rule(d.column(col), rule_from_json(s.at("rule"), path + ".rule"));
    c.name = s.contains("as") ? s.at("as").get<std::string>() : col;
    d.set(std::move(c));
  } else if (op == "block_randomize") {
    d.set(block_randomize(d, str(s, "strata", path), rng, s.contains("as") ? s.at("as").get<std::string>() : "treat"));
  } else if (op == "filter") {
    d = filter_rows(d, filters_from_json(s.at("where"), path + ".where"));
  } else if (op == "listwise") {
    d = listwise_complete(d, strs(s.at("vars"), path + ".vars")).data;
  } else if (op == "sample") {
    const auto k = static_cast<std::size_t>(num(s, "k", path));
    std::vector<std::size_t> rows = s.contains("where") ? matching_rows(d, filters_from_json(s.at("where"), path + ".where"))
                                                       : matching_rows(d, {});
    std::vector<std::vector<std::size_t>> groups;
    if (s.contains("stratify_by")) {
      const Column& g = d.column(s.at("stratify_by").get<std::string>());
      std::map<double, std::vector<std::size_t>> by;
      for (auto r : rows)
        if (!g.is_missing(r)) by[g.values[r]].push_back(r);
      for (auto& [v, rs] : by) groups.push_back(std::move(rs));
    } else {
      groups.push_back(rows);
    }
    std::vector<std::size_t> pick;
    for (const auto& g : groups) {
      if (g.size() < k) fail(ErrorKind::Sampling, "sample: population of " + std::to_string(g.size()) + " rows is smaller than k");
      for (auto idx : sample_indices(rng, g.size(), k, false)) pick.push_back(g[idx]);
    }
    d = d.take_rows(pick);
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Analyses

namespace detail {

inline std::vector<std::vector<std::string>> string_sets(const json& j, const std::string& path) {
  if (!j.is_array()) jsonio::bad(path, "expected an array of name lists");
  std::vector<std::vector<std::string>> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(jsonio::strs(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline MeasureVariant variant_from_json(const json& j, const std::string& path) {
  using namespace jsonio;
  MeasureVariant v;
  v.label = str(j, "label", path);
  v.target = str(j, "target", path);
  if (v.target != "x" && v.target != "y") bad(path + ".target", "must be 'x' or 'y'");
  const auto& rules = req(j, "rules", path);
  const json arr = rules.is_array() ? rules : json::array({rules});
  for (std::size_t i = 0; i < arr.size(); ++i) v.rules.push_back(rule_from_json(arr[i], path + ".rules[" + std::to_string(i) + "]"));
  if (j.contains("family")) {
    try {
      v.family = family_from_string(str(j.at("family"), path + ".family"));
    } catch (const Error& e) {
      bad(path + ".family", e.what());
    }
  }
  return v;
}

inline SamplingPlan sampling_from_json(const json& a, const std::string& path) {
  using namespace jsonio;
  SamplingPlan sp;
  const double k = num(a, "k", path), reps = num(a, "reps", path);
  if (!(k >= 1) || !(reps >= 1)) bad(path, "k and reps must be at least 1");
  sp.k = static_cast<std::size_t>(k);
  sp.reps = static_cast<std::size_t>(reps);
  if (a.contains("where")) sp.filter = filters_from_json(a.at("where"), path + ".where");
  if (a.contains("stratify_by")) sp.stratify_by = str(a.at("stratify_by"), path + ".stratify_by");
  const auto& plan = req(a, "plan", path);
  if (!plan.is_array()) bad(path + ".plan", "expected an array");
  for (std::size_t i = 0; i < plan.size(); ++i) sp.plan.push_back(plan_from_json(plan[i], path + ".plan[" + std::to_string(i) + "]"));
  if (a.contains("derived"))
    for (std::size_t i = 0; i < a.at("derived").size(); ++i)
      sp.derived.push_back(derived_from_json(a.at("derived")[i], path + ".derived[" + std::to_string(i) + "]"));
  return sp;
}

inline void check_plan_names(const std::vector<PlanItem>& plan, const NameScope& scope, const std::string& path) {
  for (const auto& p : plan) {
    switch (p.kind) {
      case PlanItem::Kind::Fit: scope.need_formula(p.formula, path); break;
      case PlanItem::Kind::Iv:
        for (const auto& n : {p.y, p.x, p.instrument}) scope.need(n, path);
        break;
      case PlanItem::Kind::Mediation:
        for (const auto& n : {p.y, p.x, p.m}) scope.need(n, path);
        break;
      case PlanItem::Kind::Balance:
        scope.need(p.group, path);
        for (const auto& n : p.covariates) scope.need(n, path);
        break;
      case PlanItem::Kind::Stat: scope.need(p.column, path); break;
    }
  }
}

/// Series names an MC-style result will carry (for "mc_*" analyses).
inline void check_series(const std::set<std::string>& series, const std::string& name, const std::string& path) {
  if (!series.count(name)) jsonio::bad(path, "unknown series '" + name + "'");
}

/// Validates one analysis. `series` holds MC series names when the data
/// source is a template.
inline void check_analysis(const json& a, const std::string& path, const NameScope& scope,
                           const std::optional<std::set<std::string>>& series) {
  using namespace jsonio;
  const auto op = str(a, "op", path);
  const bool mc_op = op.rfind("mc_", 0) == 0;
  if (mc_op && !series) bad(path + ".op", "'" + op + "' needs Monte Carlo data");
  if (!mc_op && series) bad(path + ".op", "'" + op + "' needs a dataset, but the data source is a Monte Carlo template");
  if (op == "fit") {
    scope.need_formula(str(a, "formula", path), path + ".formula");
    if (a.contains("family")) {
      try {
        (void)family_from_string(str(a.at("family"), path + ".family"));
      } catch (const Error& e) {
        bad(path + ".family", e.what());
      }
    }
  } else if (op == "compare_adjustments") {
    scope.need(str(a, "y", path), path + ".y");
    scope.need(str(a, "x", path), path + ".x");
    for (const auto& set : string_sets(req(a, "sets", path), path + ".sets"))
      for (const auto& n : set) scope.need(n, path + ".sets");
  } else if (op == "iv") {
    for (const char* k : {"y", "x", "instrument"}) scope.need(str(a, k, path), path + "." + k);
    if (a.contains("diagnostics"))
      for (const auto& n : strs(a.at("diagnostics"), path + ".diagnostics")) scope.need(n, path + ".diagnostics");
  } else if (op == "mediation") {
    for (const char* k : {"y", "x", "m"}) scope.need(str(a, k, path), path + "." + k);
  } else if (op == "moderation") {
    for (const char* k : {"y", "x", "mo"}) scope.need(str(a, k, path), path + "." + k);
    if (a.contains("at")) (void)nums(a.at("at"), path + ".at");
  } else if (op == "subgroup") {
    scope.need_formula(str(a, "formula", path), path + ".formula");
    for (const auto& f : filters_from_json(req(a, "where", path), path + ".where")) scope.need(f.var, path + ".where");
  } else if (op == "collinearity") {
    scope.need_formula(str(a, "formula", path), path + ".formula");
  } else if (op == "points") {
    scope.need_formula(str(a, "formula", path), path + ".formula");
    scope.need(str(a, "x", path), path + ".x");
    if (a.contains("family") && a.at("family") == "ordered") bad(path + ".family", "points needs a gaussian or binomial fit");
  } else if (op == "attenuation") {
    scope.need(str(a, "y", path), path + ".y");
    scope.need(str(a, "x", path), path + ".x");
    const auto& vs = req(a, "variants", path);
    if (!vs.is_array()) bad(path + ".variants", "expected an array");
    for (std::size_t i = 0; i < vs.size(); ++i) (void)variant_from_json(vs[i], path + ".variants[" + std::to_string(i) + "]");
  } else if (op == "balance") {
    scope.need(str(a, "group", path), path + ".group");
    for (const auto& n : strs(req(a, "covariates", path), path + ".covariates")) scope.need(n, path + ".covariates");
  } else if (op == "summary") {
    for (const auto& n : strs(req(a, "columns", path), path + ".columns")) scope.need(n, path + ".columns");
  } else if (op == "correlation") {
    scope.need(str(a, "a", path), path + ".a");
    scope.need(str(a, "b", path), path + ".b");
    const auto m = a.value("method", std::string("pearson"));
    if (m != "pearson" && m != "spearman") bad(path + ".method", "must be pearson or spearman");
  } else if (op == "outlier_sweep") {
    const auto f = str(a, "formula", path);
    scope.need_formula(f, path + ".formula");
    scope.need(str(a, "focal", path), path + ".focal");
    const auto& pts = req(a, "points", path);
    if (!pts.is_array()) bad(path + ".points", "expected an array");
    for (std::size_t i = 0; i < pts.size(); ++i) {
      NameScope tmp = scope;
      check_step(json{{"op", "inject_outlier"}, {"values", pts[i]}}, path + ".points[" + std::to_string(i) + "]", tmp);
    }
  } else if (op == "repeated_samples") {
    const SamplingPlan sp = sampling_from_json(a, path);
    for (const auto& f : sp.filter) scope.need(f.var, path + ".where");
    if (!sp.stratify_by.empty()) scope.need(sp.stratify_by, path + ".stratify_by");
    check_plan_names(sp.plan, scope, path + ".plan");
    const auto names = plan_series(sp.plan, sp.derived);
    const std::set<std::string> ss(names.begin(), names.end());
    if (a.contains("summarize"))
      for (const auto& n : strs(a.at("summarize"), path + ".summarize")) check_series(ss, n, path + ".summarize");
  } else if (op == "mc_summary") {
    for (const auto& n : strs(req(a, "series", path), path + ".series")) check_series(*series, n, path + ".series");
    if (a.contains("where"))
      for (const auto& f : filters_from_json(a.at("where"), path + ".where")) check_series(*series, f.var, path + ".where");
  } else if (op == "mc_correlation") {
    check_series(*series, str(a, "a", path), path + ".a");
    check_series(*series, str(a, "b", path), path + ".b");
    if (a.contains("where"))
      for (const auto& f : filters_from_json(a.at("where"), path + ".where")) check_series(*series, f.var, path + ".where");
  } else if (op == "mc_histogram") {
    check_series(*series, str(a, "series", path), path + ".series");
    if (!(num(a, "bins", path) >= 1)) bad(path + ".bins", "must be at least 1");
    if (a.contains("where"))
      for (const auto& f : filters_from_json(a.at("where"), path + ".where")) check_series(*series, f.var, path + ".where");
  } else if (op == "mc_share") {
    check_series(*series, str(a, "series", path), path + ".series");
    (void)filters_from_json(json{{"var", str(a, "series", path)}, {"op", str(a, "test", path)}, {"value", num(a, "value", path)}},
                            path);
    if (a.contains("where"))
      for (const auto& f : filters_from_json(a.at("where"), path + ".where")) check_series(*series, f.var, path + ".where");
  } else {
    bad(path + ".op", "unknown analysis '" + op + "'");
  }
}

inline std::string analysis_name(const json& a, std::size_t i) {
  if (a.contains("name") && a.at("name").is_string()) return a.at("name").get<std::string>();
  return a.value("op", std::string("analysis")) + "-" + std::to_string(i + 1);
}

}  // namespace detail

inline void validate_config(const ScenarioConfig& c) {
  using namespace jsonio;
  if (c.id.empty()) bad("id", "must not be empty");
  detail::NameScope scope;
  std::optional<std::set<std::string>> series;
  if (c.data.contains("scm")) {
    const ScmSpec s = scm_from_json(c.data.at("scm"), "data.scm");
    try {
      validate(s);
    } catch (const Error& e) {
      bad("data.scm", e.what());
    }
    for (const auto& x : s.sources) scope.names.insert(x.name);
    for (const auto& e : s.equations) scope.names.insert(e.target);
  } else if (c.data.contains("corr")) {
    for (const auto& n : corr_from_json(c.data.at("corr"), "data.corr").names) scope.names.insert(n);
  } else if (c.data.contains("csv")) {
    scope.known = false;
  } else {
    McTemplate t = template_from_json(c.data.at("mc"), "data.mc");
    try {
      validate_template(t);
    } catch (const Error& e) {
      bad("data.mc", e.what());
    }
    const auto names = template_series(t);
    series = std::set<std::string>(names.begin(), names.end());
    series->insert("N");
    if (!c.steps.empty()) bad("steps", "steps are not available for Monte Carlo data");
  }
  for (std::size_t i = 0; i < c.steps.size(); ++i) detail::check_step(c.steps[i], "steps[" + std::to_string(i) + "]", scope);
  std::set<std::string> names;
  for (std::size_t i = 0; i < c.analyses.size(); ++i) {
    const auto p = "analyses[" + std::to_string(i) + "]";
    detail::check_analysis(c.analyses[i], p, scope, series);
    if (!names.insert(detail::analysis_name(c.analyses[i], i)).second) bad(p + ".name", "duplicate analysis name");
  }
  std::set<std::string> paths;
  static const std::set<std::string> whats{"data", "report", "analysis", "mc", "summary", "config"};
  for (std::size_t i = 0; i < c.outputs.size(); ++i) {
    const auto& o = c.outputs[i];
    const auto p = "outputs[" + std::to_string(i) + "]";
    if (!whats.count(o.what)) bad(p + ".what", "unknown output '" + o.what + "'");
    if (o.path.empty()) bad(p + ".path", "must not be empty");
    if (!paths.insert(o.path).second) bad(p + ".path", "duplicate output path '" + o.path + "'");
    if (!o.format.empty() && o.format != "csv" && o.format != "json" && o.format != "txt") bad(p + ".format", "must be csv, json or txt");
    if (o.what == "analysis" && !names.count(o.name)) bad(p + ".name", "unknown analysis '" + o.name + "'");
    if (o.what == "mc" && o.name.empty() && !series) bad(p + ".name", "name a repeated_samples analysis, or use Monte Carlo data");
    if (o.what == "mc" && !o.name.empty() && !names.count(o.name)) bad(p + ".name", "unknown analysis '" + o.name + "'");
    if (o.what == "data" && series) bad(p + ".what", "Monte Carlo scenarios have no single dataset");
  }
}

namespace detail {

inline void mc_tables(const McResult& r, const std::vector<std::string>& series, AnalysisOutput& out) {
  out.text += kSummaryHeader;
  out.table_csv = "series,n,n_missing,min,q1,median,mean,q3,max\n";
  json sums = json::object();
  for (const auto& s : series) {
    const McSummary m = summarize_series(r, s);
    out.text += mc_summary_line(s, m);
    out.table_csv += s + "," + std::to_string(m.n) + "," + std::to_string(m.n_missing) + "," + format_number(m.min) + "," +
                     format_number(m.q1) + "," + format_number(m.median) + "," + format_number(m.mean) + "," +
                     format_number(m.q3) + "," + format_number(m.max) + "\n";
    sums[s] = mc_summary_to_json(m);
  }
  out.result["summaries"] = sums;
}

inline McResult where_filtered(const McResult& r, const json& a, AnalysisOutput& out) {
  if (!a.contains("where")) return r;
  McResult f = filter_replicates(r, filters_from_json(a.at("where"), "where"));
  out.result["n_removed"] = f.n_removed;
  out.text += "filter removed " + std::to_string(f.n_removed) + " of " + std::to_string(r.records.size()) + " replicates\n";
  return f;
}

inline AnalysisOutput run_analysis(const json& a, std::size_t index, const Dataset& d, const McResult* mc,
                                   std::uint64_t seed, const RunOptions& opt) {
  using namespace jsonio;
  AnalysisOutput out;
  out.name = analysis_name(a, index);
  out.op = a.at("op").get<std::string>();
  const auto path = "analyses[" + std::to_string(index) + "]";
  out.text = "== " + out.name + " (" + out.op + ")\n";
  try {
    const auto& op = out.op;
    if (op == "fit") {
      const FitResult r = fit(d, Formula::parse(a.at("formula").get<std::string>()),
                              family_from_string(a.value("family", std::string("gaussian"))));
      out.result = fit_to_json(r);
      out.table_csv = fit_csv(r);
      out.text += fit_table(r);
    } else if (op == "compare_adjustments") {
      std::optional<double> truth;
      if (a.contains("truth") && a.at("truth").is_number()) truth = a.at("truth").get<double>();
      const ScenarioReport rep = compare_adjustments(d, a.at("y").get<std::string>(), a.at("x").get<std::string>(),
                                                     string_sets(a.at("sets"), path + ".sets"), truth, out.name);
      out.result = report_to_json(rep);
      out.table_csv = "label,estimate,se,stat,p,bias,error\n";
      out.text += pad("model", 24) + pad("b(" + rep.x + ")", 14) + pad("SE", 14) + pad("t", 14) + pad("p", 14) + "bias\n";
      for (const auto& f : rep.fits) {
        auto num = [](double v) { return std::isnan(v) ? std::string() : format_number(v); };
        out.table_csv += f.label + "," + num(f.estimate) + "," + num(f.se) + "," + num(f.stat) + "," + num(f.p) + "," +
                         (f.bias ? num(*f.bias) : std::string()) + "," + f.error + "\n";
        out.text += pad(f.label, 24) + pad(g6(f.estimate), 14) + pad(g6(f.se), 14) + pad(g6(f.stat), 14) + pad(g6(f.p), 14) +
                    (f.bias ? g6(*f.bias) : std::string("-")) + (f.error.empty() ? "" : "  error: " + f.error) + "\n";
      }
      for (const auto& f : rep.fits)
        if (f.fit) out.text += fit_table(*f.fit);
    } else if (op == "iv") {
      IvOptions o;
      o.enforce_floor = a.value("enforce_floor", true);
      o.floor_multiple = a.value("floor_multiple", 10.0);
      if (a.contains("diagnostics")) o.diagnostics = strs(a.at("diagnostics"), path + ".diagnostics");
      const IvEstimate e = iv_wald(d, a.at("y").get<std::string>(), a.at("x").get<std::string>(),
                                   a.at("instrument").get<std::string>(), o);
      out.result = iv_to_json(e);
      out.table_csv = "b_yin,se_yin,b_xin,se_xin,ratio,se_ratio,weak\n" + format_number(e.b_yin) + "," + format_number(e.se_yin) +
                      "," + format_number(e.b_xin) + "," + format_number(e.se_xin) + "," + format_number(e.ratio) + "," +
                      format_number(e.se_ratio) + "," + (e.weak ? "1" : "0") + "\n";
      out.text += "b_yin = " + g6(e.b_yin) + " (SE " + g6(e.se_yin) + "), b_xin = " + g6(e.b_xin) + " (SE " + g6(e.se_xin) +
                  ")\nIV b_yx = " + g6(e.ratio) + " (SE " + g6(e.se_ratio) + ")" + (e.weak ? "  [weak instrument]" : "") + "\n";
      for (const auto& [k, v] : e.instrument_corr) out.text += "corr(instrument, " + k + ") = " + g6(v) + "\n";
    } else if (op == "mediation") {
      const MediationResult m = mediation(d, a.at("y").get<std::string>(), a.at("x").get<std::string>(), a.at("m").get<std::string>());
      out.result = mediation_to_json(m);
      out.table_csv = "path,estimate,se\na," + format_number(m.a) + "," + format_number(m.se_a) + "\nb," + format_number(m.b) +
                      "," + format_number(m.se_b) + "\ndirect," + format_number(m.direct) + "," + format_number(m.se_direct) +
                      "\nindirect," + format_number(m.indirect) + "," + format_number(m.sobel_se) + "\ntotal," +
                      format_number(m.total) + ",\n";
      out.text += "a = " + g6(m.a) + " (SE " + g6(m.se_a) + "), b = " + g6(m.b) + " (SE " + g6(m.se_b) + ")\n" +
                  "direct = " + g6(m.direct) + " (SE " + g6(m.se_direct) + "), indirect = " + g6(m.indirect) + " (Sobel SE " +
                  g6(m.sobel_se) + ", z = " + g6(m.z) + "), total = " + g6(m.total) + "\n";
    } else if (op == "moderation") {
      const auto x = a.at("x").get<std::string>(), mo = a.at("mo").get<std::string>();
      const FitResult r = moderated_fit(d, a.at("y").get<std::string>(), x, mo);
      out.result = json{{"fit", fit_to_json(r)}};
      out.table_csv = fit_csv(r);
      out.text += fit_table(r);
      if (a.contains("at")) {
        json slopes = json::array();
        for (double v : nums(a.at("at"), path + ".at")) {
          const double s = conditional_slope(r, x, mo, v);
          slopes.push_back(json{{"at", v}, {"slope", number(s)}});
          out.text += "slope of " + x + " at " + mo + " = " + g6(v) + ": " + g6(s) + "\n";
        }
        out.result["conditional_slopes"] = slopes;
      }
    } else if (op == "subgroup") {
      const auto filters = filters_from_json(a.at("where"), path + ".where");
      const FitResult r = subgroup_effect(d, Formula::parse(a.at("formula").get<std::string>()), filters);
      out.result = json{{"where", filters_to_json(filters)}, {"fit", fit_to_json(r)}};
      out.table_csv = fit_csv(r);
      out.text += fit_table(r);
    } else if (op == "collinearity") {
      const CollinearityReport c = collinearity_diagnostics(d, Formula::parse(a.at("formula").get<std::string>()));
      out.result = collinearity_to_json(c);
      out.table_csv = "predictor,tolerance,vif\n";
      out.text += pad("predictor", 16) + pad("Tolerance", 14) + "VIF\n";
      for (std::size_t j = 0; j < c.predictors.size(); ++j) {
        out.table_csv += c.predictors[j] + "," + format_number(c.tolerance[j]) + "," + format_number(c.vif[j]) + "\n";
        out.text += pad(c.predictors[j], 16) + pad(g6(c.tolerance[j]), 14) + g6(c.vif[j]) + "\n";
      }
      out.table_csv += "\ndimension,eigenvalue,condition_index\n";
      out.text += pad("dimension", 16) + pad("Eigenvalue", 14) + "Condition Index\n";
      for (std::size_t j = 0; j < c.eigenvalues.size(); ++j) {
        out.table_csv += std::to_string(j + 1) + "," + format_number(c.eigenvalues[j]) + "," + format_number(c.condition_index[j]) + "\n";
        out.text += pad(std::to_string(j + 1), 16) + pad(g6(c.eigenvalues[j]), 14) + g6(c.condition_index[j]) + "\n";
      }
    } else if (op == "points") {
      // Scatter and fitted-line data for plotting.
      const FitResult r = fit(d, Formula::parse(a.at("formula").get<std::string>()),
                              family_from_string(a.value("family", std::string("gaussian"))));
      const auto& x = d.column(a.at("x").get<std::string>());
      const auto& y = d.column(r.formula.response);
      const Column yhat = predict(r, d), res = residuals(r, d);
      out.table_csv = x.name + "," + y.name + ",fitted,residual\n";
      std::size_t n = 0;
      for (std::size_t i = 0; i < d.n_rows(); ++i) {
        if (x.is_missing(i) || y.is_missing(i) || yhat.is_missing(i)) continue;
        out.table_csv += format_number(x.values[i]) + "," + format_number(y.values[i]) + "," + format_number(yhat.values[i]) + "," +
                         format_number(res.values[i]) + "\n";
        ++n;
      }
      out.result = json{{"n", n}, {"fit", fit_to_json(r)}};
      out.text += std::to_string(n) + " points with fitted values from " + a.at("formula").get<std::string>() + "\n";
    } else if (op == "attenuation") {
      std::vector<MeasureVariant> vs;
      for (std::size_t i = 0; i < a.at("variants").size(); ++i)
        vs.push_back(variant_from_json(a.at("variants")[i], path + ".variants[" + std::to_string(i) + "]"));
      const auto rows = attenuation_report(d, a.at("y").get<std::string>(), a.at("x").get<std::string>(), vs);
      out.result = json{{"rows", attenuation_to_json(rows)}};
      out.table_csv = attenuation_csv(rows);
      out.text += pad("label", 22) + pad("family", 16) + pad("spearman", 12) + pad("slope", 12) + pad("SE", 12) + pad("stat", 12) +
                  pad("chisq", 12) + "n\n";
      for (const auto& r : rows)
        out.text += pad(r.label, 22) + pad(to_string(r.family), 16) + pad(g6(r.spearman), 12) + pad(g6(r.slope), 12) +
                    pad(g6(r.se), 12) + pad(g6(r.stat), 12) + pad(g6(r.chisq), 12) + std::to_string(r.n_used) +
                    (r.error.empty() ? "" : "  error: " + r.error) + "\n";
    } else if (op == "balance") {
      const BalanceReport b = balance_diff(d, a.at("group").get<std::string>(), strs(a.at("covariates"), path + ".covariates"));
      out.result = balance_to_json(b);
      out.table_csv = "covariate,delta_mean,delta_sd,delta_skew,delta_kurtosis\n";
      out.text += pad("covariate", 16) + pad("d_mean", 14) + pad("d_sd", 14) + pad("d_skew", 14) + "d_kurtosis\n";
      auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
      for (const auto& r : b.rows) {
        out.table_csv += r.covariate + "," + format_number(r.delta_mean) + "," + format_number(r.delta_sd) + "," + opt(r.delta_skew) +
                         "," + opt(r.delta_kurtosis) + "\n";
        out.text += pad(r.covariate, 16) + pad(g6(r.delta_mean), 14) + pad(g6(r.delta_sd), 14) +
                    pad(r.delta_skew ? g6(*r.delta_skew) : "NA", 14) + (r.delta_kurtosis ? g6(*r.delta_kurtosis) : "NA") + "\n";
      }
    } else if (op == "summary") {
      out.result = json::object();
      out.table_csv = "column,n,n_missing,min,q1,median,mean,q3,max,sd\n";
      out.text += pad("column", 16) + pad("Min.", 12) + pad("1st Qu.", 12) + pad("Median", 12) + pad("Mean", 12) + pad("3rd Qu.", 12) +
                  pad("Max.", 12) + pad("SD", 12) + "NA's\n";
      for (const auto& c : strs(a.at("columns"), path + ".columns")) {
        const SummaryStats s = summarize(d.column(c));
        out.result[c] = summary_to_json(s);
        out.table_csv += c + "," + std::to_string(s.n) + "," + std::to_string(s.n_missing) + "," + format_number(s.min) + "," +
                         format_number(s.q1) + "," + format_number(s.median) + "," + format_number(s.mean) + "," +
                         format_number(s.q3) + "," + format_number(s.max) + "," + format_number(s.sd) + "\n";
        out.text += pad(c, 16) + pad(g6(s.min), 12) + pad(g6(s.q1), 12) + pad(g6(s.median), 12) + pad(g6(s.mean), 12) +
                    pad(g6(s.q3), 12) + pad(g6(s.max), 12) + pad(g6(s.sd), 12) + std::to_string(s.n_missing) + "\n";
      }
    } else if (op == "correlation") {
      const auto& ca = d.column(a.at("a").get<std::string>());
      const auto& cb = d.column(a.at("b").get<std::string>());
      const auto method = a.value("method", std::string("pearson"));
      const double r = method == "spearman" ? spearman(ca, cb) : pearson(ca, cb);
      out.result = json{{"method", method}, {"r", number(r)}};
      out.table_csv = "method,r\n" + method + "," + format_number(r) + "\n";
      out.text += method + " r(" + ca.name + ", " + cb.name + ") = " + g6(r) + "\n";
    } else if (op == "outlier_sweep") {
      const Formula f = Formula::parse(a.at("formula").get<std::string>());
      const auto focal = a.at("focal").get<std::string>();
      const FitResult base = fit_ols(d, f);
      const double b0 = base.coef(focal);
      out.table_csv = "point,b,se,stat,delta_b\nbaseline," + format_number(b0) + "," + format_number(base.std_error(focal)) + "," +
                      format_number(base.stat[base.index_of(focal)]) + ",0\n";
      out.text += pad("point", 28) + pad("b(" + focal + ")", 14) + pad("SE", 14) + pad("t", 14) + "delta b\n";
      out.text += pad("baseline", 28) + pad(g6(b0), 14) + pad(g6(base.std_error(focal)), 14) + pad(g6(base.stat[base.index_of(focal)]), 14) + "0\n";
      json rows = json::array();
      for (std::size_t i = 0; i < a.at("points").size(); ++i) {
        const auto& pt = a.at("points")[i];
        std::map<std::string, double> vals;
        std::string label;
        for (auto it = pt.begin(); it != pt.end(); ++it) {
          vals[it.key()] = resolve_value(it.value(), d, path + ".points");
          label += (label.empty() ? "" : " ") + it.key() + "=" + g6(vals[it.key()]);
        }
        const FitResult r = fit_ols(inject_outlier(d, vals), f);
        const double b = r.coef(focal);
        json pj = json::object();
        for (const auto& [k, v] : vals) pj[k] = v;
        rows.push_back(json{{"point", pj}, {"b", number(b)}, {"se", number(r.std_error(focal))}, {"stat", number(r.stat[r.index_of(focal)])}, {"delta_b", number(b - b0)}});
        out.table_csv += "\"" + label + "\"," + format_number(b) + "," + format_number(r.std_error(focal)) + "," +
                         format_number(r.stat[r.index_of(focal)]) + "," + format_number(b - b0) + "\n";
        out.text += pad(label, 28) + pad(g6(b), 14) + pad(g6(r.std_error(focal)), 14) + pad(g6(r.stat[r.index_of(focal)]), 14) + g6(b - b0) + "\n";
      }
      out.result = json{{"baseline", fit_to_json(base)}, {"points", rows}};
    } else if (op == "repeated_samples") {
      const SamplingPlan sp = sampling_from_json(a, path);
      const std::uint64_t sub = seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(index + 1));
      McResult r = repeated_samples(d, sp, sub, opt.threads);
      out.result = json{{"k", sp.k}, {"reps", sp.reps}, {"n_failed", r.n_failed()}, {"hash", r.template_hash}};
      out.text += std::to_string(sp.reps) + " samples of " + std::to_string(sp.k) + (sp.stratify_by.empty() ? "" : " per " + sp.stratify_by) +
                  (sp.filter.empty() ? "" : " from a filtered population") + "\n";
      mc_tables(r, a.contains("summarize") ? strs(a.at("summarize"), path + ".summarize") : r.series, out);
      out.mc = std::move(r);
    } else if (op == "mc_summary") {
      const McResult r = where_filtered(*mc, a, out);
      out.result["n_failed"] = r.n_failed();
      mc_tables(r, strs(a.at("series"), path + ".series"), out);
    } else if (op == "mc_correlation") {
      const McResult r = where_filtered(*mc, a, out);
      const double c = series_correlation(r, a.at("a").get<std::string>(), a.at("b").get<std::string>());
      out.result["r"] = number(c);
      out.table_csv = "a,b,r\n" + a.at("a").get<std::string>() + "," + a.at("b").get<std::string>() + "," + format_number(c) + "\n";
      out.text += "r(" + a.at("a").get<std::string>() + ", " + a.at("b").get<std::string>() + ") = " + g6(c) + "\n";
    } else if (op == "mc_histogram") {
      const McResult r = where_filtered(*mc, a, out);
      const auto bins = histogram(r, a.at("series").get<std::string>(), static_cast<std::size_t>(a.at("bins").get<double>()));
      json hb = json::array();
      for (const auto& b : bins) hb.push_back(json{{"lo", number(b.lo)}, {"hi", number(b.hi)}, {"count", b.count}});
      out.result["bins"] = hb;
      out.table_csv = histogram_csv(bins);
      out.text += std::to_string(bins.size()) + " bins written\n";
    } else if (op == "mc_share") {
      const McResult r = where_filtered(*mc, a, out);
      const auto s = a.at("series").get<std::string>();
      const RowFilter test{s, a.at("test").get<std::string>(), a.at("value").get<double>()};
      std::size_t hit = 0, n = 0;
      for (double v : r.values(s)) {
        if (std::isnan(v)) continue;
        ++n;
        hit += test.test(v);
      }
      if (n == 0) fail(ErrorKind::EmptyData, "mc_share: no non-missing values");
      const double share = static_cast<double>(hit) / static_cast<double>(n);
      out.result["share"] = share;
      out.result["n"] = n;
      out.table_csv = "series,test,value,share,n\n" + s + "," + test.op + "," + format_number(test.value) + "," + format_number(share) + "," +
                      std::to_string(n) + "\n";
      out.text += "share of " + s + " " + test.op + " " + g6(test.value) + ": " + g6(share) + " (n = " + std::to_string(n) + ")\n";
    }
  } catch (const Error& e) {
    out.error = std::string(to_string(e.kind())) + ": " + e.what();
    out.text += "error: " + out.error + "\n";
  }
  return out;
}

inline std::string ext_format(const OutputSpec& o, const std::string& dflt) {
  if (!o.format.empty()) return o.format;
  const auto dot = o.path.rfind('.');
  if (dot != std::string::npos) {
    const auto e = o.path.substr(dot + 1);
    if (e == "csv" || e == "json" || e == "txt") return e;
  }
  return dflt;
}

}  // namespace detail

/// Generates the data, applies steps, runs analyses in order and renders
/// declared outputs. Analysis failures are recorded per analysis.
inline ScenarioRun run_scenario(const ScenarioConfig& cfg, const RunOptions& opt = {}) {
  validate_config(cfg);
  ScenarioRun run;
  run.id = cfg.id;
  run.seed = cfg.seed;
  RngState rng(cfg.seed, 0);
  if (cfg.data.contains("scm")) {
    run.data = evaluate_scm(scm_from_json(cfg.data.at("scm"), "data.scm"), rng);
  } else if (cfg.data.contains("corr")) {
    run.data = mvn_exact(corr_from_json(cfg.data.at("corr"), "data.corr"), cfg.data.at("n").get<std::size_t>(), rng);
  } else if (cfg.data.contains("csv")) {
    run.data = read_csv_file(cfg.data.at("csv").get<std::string>());
  } else {
    McTemplate t = template_from_json(cfg.data.at("mc"), "data.mc");
    t.seed = cfg.seed;
    run.mc = run_mc(t, opt.threads);
  }
  for (std::size_t i = 0; i < cfg.steps.size(); ++i) detail::apply_step(cfg.steps[i], "steps[" + std::to_string(i) + "]", run.data, rng);

  run.text = "scenario " + cfg.id + " (seed " + std::to_string(cfg.seed) + ")\n";
  if (!cfg.description.empty()) run.text += cfg.description + "\n";
  if (run.mc) {
    run.text += std::to_string(run.mc->records.size()) + " replicates, " + std::to_string(run.mc->n_failed()) + " with failures\n";
  } else {
    run.text += std::to_string(run.data.n_rows()) + " rows, " + std::to_string(run.data.n_cols()) + " columns\n";
  }
  for (std::size_t i = 0; i < cfg.analyses.size(); ++i) {
    run.analyses.push_back(detail::run_analysis(cfg.analyses[i], i, run.data, run.mc ? &*run.mc : nullptr, cfg.seed, opt));
    run.text += "\n" + run.analyses.back().text;
  }

  json report{{"id", cfg.id}, {"seed", cfg.seed}};
  if (run.mc) report["mc"] = json{{"replicates", run.mc->records.size()}, {"failed", run.mc->n_failed()}, {"hash", run.mc->template_hash}};
  else report["rows"] = run.data.n_rows();
  json an = json::array();
  for (const auto& a : run.analyses) {
    json e{{"name", a.name}, {"op", a.op}, {"result", a.result}};
    if (!a.error.empty()) e["error"] = a.error;
    an.push_back(e);
  }
  report["analyses"] = an;

  for (const auto& o : cfg.outputs) {
    const auto fmt = detail::ext_format(o, opt.default_format);
    std::string body;
    if (o.what == "data") {
      body = to_csv(run.data);
    } else if (o.what == "report") {
      body = report.dump(2) + "\n";
    } else if (o.what == "config") {
      body = config_to_json(cfg).dump(2) + "\n";
    } else if (o.what == "summary") {
      body = run.text;
    } else if (o.what == "mc") {
      const McResult* r = o.name.empty() ? &*run.mc : nullptr;
      if (!r) {
        const auto& a = run.analysis(o.name);
        if (!a.mc) fail(ErrorKind::Validation, "output '" + o.path + "': analysis '" + o.name + "' has no replicate records");
        r = &*a.mc;
      }
      body = mc_csv(*r);
    } else {
      const auto& a = run.analysis(o.name);
      if (fmt == "json") body = json{{"name", a.name}, {"op", a.op}, {"result", a.result}, {"error", a.error}}.dump(2) + "\n";
      else if (fmt == "txt") body = a.text;
      else body = a.table_csv;
    }
    run.files.emplace_back(o.path, std::move(body));
  }
  return run;
}

}  // namespace biaslab
