#pragma once

// JSON interchange for specs, rules and results.

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <string>

#include "causal.hpp"
#include "datakit.hpp"
#include "error.hpp"
#include "estimators.hpp"
#include "measure.hpp"
#include "simcore.hpp"

namespace biaslab {

using json = nlohmann::ordered_json;

namespace jsonio {

[[noreturn]] inline void bad(const std::string& path, const std::string& msg) {
  fail(ErrorKind::Validation, "config field '" + path + "': " + msg);
}

inline const json& req(const json& j, const char* key, const std::string& path) {
  if (!j.is_object()) bad(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) bad(path + "." + key, "missing");
  return *it;
}

inline double num(const json& j, const std::string& path) {
  if (j.is_number()) return j.get<double>();
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  bad(path, "expected a number");
}

inline double num(const json& j, const char* key, const std::string& path) { return num(req(j, key, path), path + "." + key); }

inline double num_or(const json& j, const char* key, double dflt, const std::string& path) {
  if (!j.contains(key)) return dflt;
  return num(j.at(key), path + "." + key);
}

inline std::string str(const json& j, const std::string& path) {
  if (!j.is_string()) bad(path, "expected a string");
  return j.get<std::string>();
}

inline std::string str(const json& j, const char* key, const std::string& path) { return str(req(j, key, path), path + "." + key); }

inline std::vector<double> nums(const json& j, const std::string& path) {
  if (!j.is_array()) bad(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(num(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline std::vector<std::string> strs(const json& j, const std::string& path) {
  if (!j.is_array()) bad(path, "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(str(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

/// NaN and infinities are not representable in JSON; they become null.
inline void only_keys(const json& j, std::initializer_list<const char*> keys, const std::string& path) {
  if (!j.is_object()) bad(path, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; })) bad(path + "." + it.key(), "unknown field");
}

inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json numbers(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

}  // namespace jsonio

// ---------------------------------------------------------------------------
// ScmSpec

inline json error_to_json(const ErrorTerm& e) {
  json j{{"coef", e.coef}, {"mean", e.mean}};
  if (e.sd_from) j["sd_from"] = json{{"product", e.sd_from->product}, {"power", e.sd_from->power}};
  else j["sd"] = e.sd;
  return j;
}

inline ErrorTerm error_from_json(const json& j, const std::string& path) {
  using namespace jsonio;
  ErrorTerm e;
  e.coef = num_or(j, "coef", 1.0, path);
  e.mean = num_or(j, "mean", 0.0, path);
  if (j.contains("sd_from")) {
    const auto& s = j.at("sd_from");
    SdFrom f;
    f.product = strs(req(s, "product", path + ".sd_from"), path + ".sd_from.product");
    f.power = num_or(s, "power", 1.0, path + ".sd_from");
    e.sd_from = f;
  } else {
    e.sd = num(j, "sd", path);
    if (!(e.sd >= 0)) bad(path + ".sd", "must be non-negative");
  }
  return e;
}

inline json source_to_json(const SourceSpec& s) {
  json j{{"name", s.name}};
  std::visit(
      [&](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, NormalSource>) {
          j["kind"] = "normal";
          j["params"] = json{{"mean", k.mean}, {"sd", k.sd}};
        } else if constexpr (std::is_same_v<T, UniformSource>) {
          j["kind"] = "uniform";
          j["params"] = json{{"lo", k.lo}, {"hi", k.hi}};
        } else if constexpr (std::is_same_v<T, UniformIntSource>) {
          j["kind"] = "uniform_int";
          j["params"] = json{{"lo", k.lo}, {"hi", k.hi}};
        } else if constexpr (std::is_same_v<T, PatternSource>) {
          j["kind"] = "pattern";
          j["params"] = json{{"values", k.values}, {k.mode == RepeatMode::Each ? "each" : "times", k.k}};
        } else if constexpr (std::is_same_v<T, ClampedIntNormalSource>) {
          j["kind"] = "clamped_int_normal";
          json p{{"mean", k.mean}, {"sd", k.sd}};
          if (k.lo) p["lo"] = *k.lo;
          if (k.hi) p["hi"] = *k.hi;
          j["params"] = p;
        } else {
          j["kind"] = "constant";
          j["params"] = json{{"value", k.value}};
        }
      },
      s.kind);
  return j;
}

inline SourceSpec source_from_json(const json& j, const std::string& path) {
  using namespace jsonio;
  SourceSpec s;
  only_keys(j, {"name", "kind", "params"}, path);
  s.name = str(j, "name", path);
  const auto kind = str(j, "kind", path);
  const json empty = json::object();
  const json& p = j.contains("params") ? j.at("params") : empty;
  const auto pp = path + ".params";
  if (kind == "normal") {
    s.kind = NormalSource{num_or(p, "mean", 0, pp), num_or(p, "sd", 1, pp)};
  } else if (kind == "uniform") {
    s.kind = UniformSource{num(p, "lo", pp), num(p, "hi", pp)};
  } else if (kind == "uniform_int") {
    s.kind = UniformIntSource{static_cast<long long>(num(p, "lo", pp)), static_cast<long long>(num(p, "hi", pp))};
  } else if (kind == "pattern") {
    PatternSource ps;
    ps.values = nums(req(p, "values", pp), pp + ".values");
    if (p.contains("each")) {
      ps.mode = RepeatMode::Each;
      ps.k = static_cast<std::size_t>(num(p, "each", pp));
    } else if (p.contains("times")) {
      ps.mode = RepeatMode::Times;
      ps.k = static_cast<std::size_t>(num(p, "times", pp));
    } else {
      bad(pp, "pattern needs 'each' or 'times'");
    }
    s.kind = ps;
  } else if (kind == "clamped_int_normal") {
    ClampedIntNormalSource c;
    c.mean = num(p, "mean", pp);
    c.sd = num(p, "sd", pp);
    if (p.contains("lo")) c.lo = num(p, "lo", pp);
    if (p.contains("hi")) c.hi = num(p, "hi", pp);
    s.kind = c;
  } else if (kind == "constant") {
    s.kind = ConstantSource{num(p, "value", pp)};
  } else {
    bad(path + ".kind", "unknown source kind '" + kind + "'");
  }
  return s;
}

inline json equation_to_json(const EquationSpec& e) {
  json j{{"target", e.target}, {"intercept", e.intercept}};
  json lin = json::array(), inter = json::array(), sq = json::array();
  for (const auto& t : e.linear) lin.push_back(json::array({t.source, t.coef}));
  for (const auto& t : e.interactions) inter.push_back(json::array({t.a, t.b, t.coef}));
  for (const auto& t : e.squares) sq.push_back(json::array({t.source, t.coef}));
  j["linear"] = lin;
  j["interactions"] = inter;
  j["squares"] = sq;
  if (e.error) j["error"] = error_to_json(*e.error);
  if (e.group_error) {
    json lv = json::object();
    for (const auto& [level, term] : e.group_error->levels) lv[std::to_string(level)] = error_to_json(term);
    j["group_error"] = json{{"by", e.group_error->by}, {"levels", lv}};
  }
  return j;
}

inline EquationSpec equation_from_json(const json& j, const std::string& path) {
  using namespace jsonio;
  EquationSpec e;
  only_keys(j, {"target", "intercept", "linear", "interactions", "squares", "error", "group_error"}, path);
  e.target = str(j, "target", path);
  e.intercept = num_or(j, "intercept", 0.0, path);
  auto pairs = [&](const char* key, std::vector<LinearTerm>& out) {
    if (!j.contains(key)) return;
    const auto& a = j.at(key);
    const auto p = path + "." + key;
    if (!a.is_array()) bad(p, "expected an array of [name, coef] pairs");
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto pi = p + "[" + std::to_string(i) + "]";
      if (!a[i].is_array() || a[i].size() != 2) bad(pi, "expected [name, coef]");
      out.push_back({str(a[i][0], pi + "[0]"), num(a[i][1], pi + "[1]")});
    }
  };
  pairs("linear", e.linear);
  pairs("squares", e.squares);
  if (j.contains("interactions")) {
    const auto& a = j.at("interactions");
    const auto p = path + ".interactions";
    if (!a.is_array()) bad(p, "expected an array of [a, b, coef] triples");
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto pi = p + "[" + std::to_string(i) + "]";
      if (!a[i].is_array() || a[i].size() != 3) bad(pi, "expected [a, b, coef]");
      e.interactions.push_back({str(a[i][0], pi + "[0]"), str(a[i][1], pi + "[1]"), num(a[i][2], pi + "[2]")});
    }
  }
  if (j.contains("error") && j.contains("group_error")) bad(path, "give either 'error' or 'group_error', not both");
  if (j.contains("error")) e.error = error_from_json(j.at("error"), path + ".error");
  if (j.contains("group_error")) {
    const auto& g = j.at("group_error");
    const auto gp = path + ".group_error";
    GroupError ge;
    ge.by = str(g, "by", gp);
    const auto& lv = req(g, "levels", gp);
    if (!lv.is_object()) bad(gp + ".levels", "expected an object keyed by level");
    for (auto it = lv.begin(); it != lv.end(); ++it) {
      long long level = 0;
      const auto& key = it.key();
      auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), level);
      if (ec != std::errc() || ptr != key.data() + key.size()) bad(gp + ".levels", "level '" + key + "' is not an integer");
      ge.levels[level] = error_from_json(it.value(), gp + ".levels." + key);
    }
    e.group_error = ge;
  }
  return e;
}

inline json scm_to_json(const ScmSpec& s) {
  json src = json::array(), eqs = json::array();
  for (const auto& x : s.sources) src.push_back(source_to_json(x));
  for (const auto& e : s.equations) eqs.push_back(equation_to_json(e));
  return json{{"n", s.n}, {"sources", src}, {"equations", eqs}};
}

inline ScmSpec scm_from_json(const json& j, const std::string& path = "scm") {
  using namespace jsonio;
  ScmSpec s;
  only_keys(j, {"n", "sources", "equations"}, path);
  const double n = num(j, "n", path);
  if (!(n >= 1) || n != std::floor(n)) bad(path + ".n", "must be a positive integer");
  s.n = static_cast<std::size_t>(n);
  if (j.contains("sources")) {
    const auto& a = j.at("sources");
    if (!a.is_array()) bad(path + ".sources", "expected an array");
    for (std::size_t i = 0; i < a.size(); ++i) s.sources.push_back(source_from_json(a[i], path + ".sources[" + std::to_string(i) + "]"));
  }
  if (j.contains("equations")) {
    const auto& a = j.at("equations");
    if (!a.is_array()) bad(path + ".equations", "expected an array");
    for (std::size_t i = 0; i < a.size(); ++i)
      s.equations.push_back(equation_from_json(a[i], path + ".equations[" + std::to_string(i) + "]"));
  }
  return s;
}

// ---------------------------------------------------------------------------
// CorrTarget

inline json corr_to_json(const CorrTarget& t) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < t.corr.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index k = 0; k < t.corr.cols(); ++k) r.push_back(t.corr(i, k));
    rows.push_back(r);
  }
  return json{{"names", t.names}, {"corr", rows}, {"means", t.means}, {"sds", t.sds}, {"empirical_exact", t.empirical_exact}};
}

inline CorrTarget corr_from_json(const json& j, const std::string& path = "corr") {
  using namespace jsonio;
  CorrTarget t;
  t.names = strs(req(j, "names", path), path + ".names");
  const auto d = t.names.size();
  const auto& rows = req(j, "corr", path);
  if (!rows.is_array() || rows.size() != d) bad(path + ".corr", "expected a " + std::to_string(d) + "x" + std::to_string(d) + " matrix");
  t.corr.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) {
    const auto r = nums(rows[i], path + ".corr[" + std::to_string(i) + "]");
    if (r.size() != d) bad(path + ".corr[" + std::to_string(i) + "]", "wrong row length");
    for (std::size_t k = 0; k < d; ++k) t.corr(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = r[k];
  }
  t.means = j.contains("means") ? nums(j.at("means"), path + ".means") : std::vector<double>(d, 0.0);
  t.sds = j.contains("sds") ? nums(j.at("sds"), path + ".sds") : std::vector<double>(d, 1.0);
  t.empirical_exact = j.value("empirical_exact", true);
  return t;
}

// ---------------------------------------------------------------------------
// Rules

inline json rule_to_json(const RecodeRule& r) {
  using K = RecodeRule::Kind;
  switch (r.kind) {
    case K::DichotomizeMedian: return json{{"kind", "dichotomize_median"}};
    case K::DichotomizeQuantile: return json{{"kind", "dichotomize_quantile"}, {"p", r.value}};
    case K::DichotomizeThreshold: return json{{"kind", "dichotomize_threshold"}, {"value", r.value}};
    case K::OrdinalizeQuantiles: return json{{"kind", "ordinalize_quantiles"}, {"probs", r.points}};
    case K::OrdinalizeCutpoints: return json{{"kind", "ordinalize_cutpoints"}, {"values", r.points}};
  }
  return {};
}

inline json rule_to_json(const TransformRule& r) {
  using K = TransformRule::Kind;
  switch (r.kind) {
    case K::Scale: return json{{"kind", "scale"}, {"c", r.a}};
    case K::Shift: return json{{"kind", "shift"}, {"c", r.a}};
    case K::Zscore: return json{{"kind", "zscore"}};
    case K::Minmax: return json{{"kind", "minmax"}, {"pad_lo", r.a}, {"pad_hi", r.b}};
    case K::LogE: return json{{"kind", "log_e"}};
    case K::Log10: return json{{"kind", "log_10"}};
    case K::Power: return json{{"kind", "power"}, {"p", r.a}};
    case K::RoundWhole: return json{{"kind", "round_whole"}};
    case K::Window: return json{{"kind", "window"}, {"lo", r.a}, {"hi", r.b}};
  }
  return {};
}

inline json rule_to_json(const MeasureRule& r) {
  return std::visit([](const auto& x) { return rule_to_json(x); }, r);
}

inline MeasureRule rule_from_json(const json& j, const std::string& path) {
  using namespace jsonio;
  const auto kind = str(j, "kind", path);
  if (kind == "dichotomize_median") return RecodeRule::median();
  if (kind == "dichotomize_quantile") return RecodeRule::quantile(num(j, "p", path));
  if (kind == "dichotomize_threshold") return RecodeRule::threshold(num(j, "value", path));
  if (kind == "ordinalize_quantiles") return RecodeRule::quantiles(nums(req(j, "probs", path), path + ".probs"));
  if (kind == "ordinalize_cutpoints") return RecodeRule::cutpoints(nums(req(j, "values", path), path + ".values"));
  if (kind == "scale") return TransformRule::scale(num(j, "c", path));
  if (kind == "shift") return TransformRule::shift(num(j, "c", path));
  if (kind == "zscore") return TransformRule::zscore();
  if (kind == "minmax") return TransformRule::minmax(num_or(j, "pad_lo", 0, path), num_or(j, "pad_hi", 0, path));
  if (kind == "log_e") return TransformRule::log_e();
  if (kind == "log_10") return TransformRule::log_10();
  if (kind == "power") return TransformRule::power(num(j, "p", path));
  if (kind == "round_whole") return TransformRule::round_whole();
  if (kind == "window") return TransformRule::window(num(j, "lo", path), num(j, "hi", path));
  bad(path + ".kind", "unknown rule kind '" + kind + "'");
}

inline json filters_to_json(const std::vector<RowFilter>& fs) {
  json a = json::array();
  for (const auto& f : fs) a.push_back(json{{"var", f.var}, {"op", f.op}, {"value", f.value}});
  return a;
}

inline std::vector<RowFilter> filters_from_json(const json& j, const std::string& path) {
  using namespace jsonio;
  std::vector<RowFilter> out;
  const json arr = j.is_array() ? j : json::array({j});
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto p = path + "[" + std::to_string(i) + "]";
    RowFilter f{str(arr[i], "var", p), str(arr[i], "op", p), num(arr[i], "value", p)};
    try {
      validate_filter(f);
    } catch (const Error& e) {
      bad(p + ".op", e.what());
    }
    out.push_back(f);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Results

inline json fit_to_json(const FitResult& r) {
  using jsonio::number;
  using jsonio::numbers;
  json j{{"family", to_string(r.family)},
         {"formula", r.formula.str()},
         {"terms", r.terms},
         {"b", numbers(r.b)},
         {"se", numbers(r.se)},
         {"stat", numbers(r.stat)},
         {"p", numbers(r.p)},
         {"beta", numbers(r.beta)},
         {"cutpoints", numbers(r.cutpoints)},
         {"cutpoint_se", numbers(r.cutpoint_se)},
         {"r2", number(r.r_squared)},
         {"adj_r2", number(r.adj_r_squared)},
         {"sigma", number(r.sigma)},
         {"deviance", number(r.deviance)},
         {"null_deviance", number(r.null_deviance)},
         {"aic", number(r.aic)},
         {"df_residual", number(r.df_residual)},
         {"n_used", r.n_used},
         {"n_dropped", r.n_dropped},
         {"converged", r.converged},
         {"iterations", r.iterations},
         {"warnings", r.warnings}};
  return j;
}

inline json summary_to_json(const SummaryStats& s) {
  using jsonio::number;
  return json{{"n", s.n},
              {"n_missing", s.n_missing},
              {"min", number(s.min)},
              {"q1", number(s.q1)},
              {"median", number(s.median)},
              {"mean", number(s.mean)},
              {"q3", number(s.q3)},
              {"max", number(s.max)},
              {"sd", number(s.sd)},
              {"variance", number(s.variance)},
              {"skew", s.skew ? number(*s.skew) : json(nullptr)},
              {"excess_kurtosis", s.excess_kurtosis ? number(*s.excess_kurtosis) : json(nullptr)}};
}

inline json balance_to_json(const BalanceReport& b) {
  using jsonio::number;
  json rows = json::array();
  for (const auto& r : b.rows)
    rows.push_back(json{{"covariate", r.covariate},
                        {"delta_mean", number(r.delta_mean)},
                        {"delta_sd", number(r.delta_sd)},
                        {"delta_skew", r.delta_skew ? number(*r.delta_skew) : json(nullptr)},
                        {"delta_kurtosis", r.delta_kurtosis ? number(*r.delta_kurtosis) : json(nullptr)}});
  return json{{"n_treatment", b.n_treatment}, {"n_control", b.n_control}, {"rows", rows}};
}

inline json report_to_json(const ScenarioReport& r) {
  using jsonio::number;
  json fits = json::array();
  for (const auto& f : r.fits) {
    json e{{"label", f.label},
           {"covariates", f.covariates},
           {"estimate", number(f.estimate)},
           {"se", number(f.se)},
           {"stat", number(f.stat)},
           {"p", number(f.p)},
           {"bias", f.bias ? number(*f.bias) : json(nullptr)}};
    if (f.fit) e["fit"] = fit_to_json(*f.fit);
    if (!f.error.empty()) e["error"] = f.error;
    fits.push_back(e);
  }
  return json{{"scenario_id", r.scenario_id},
              {"y", r.y},
              {"x", r.x},
              {"focal_term", r.focal_term},
              {"truth", r.truth ? number(*r.truth) : json(nullptr)},
              {"fits", fits}};
}

inline json iv_to_json(const IvEstimate& e) {
  using jsonio::number;
  json diag = json::object();
  for (const auto& [k, v] : e.instrument_corr) diag[k] = number(v);
  return json{{"b_yin", number(e.b_yin)}, {"se_yin", number(e.se_yin)}, {"b_xin", number(e.b_xin)},
              {"se_xin", number(e.se_xin)}, {"ratio", number(e.ratio)},   {"se_ratio", number(e.se_ratio)},
              {"weak", e.weak},             {"n_used", e.n_used},         {"instrument_corr", diag}};
}

inline json mediation_to_json(const MediationResult& m) {
  using jsonio::number;
  return json{{"a", number(m.a)},
              {"se_a", number(m.se_a)},
              {"b", number(m.b)},
              {"se_b", number(m.se_b)},
              {"direct", number(m.direct)},
              {"se_direct", number(m.se_direct)},
              {"indirect", number(m.indirect)},
              {"total", number(m.total)},
              {"sobel_se", number(m.sobel_se)},
              {"z", number(m.z)},
              {"p", number(m.p)},
              {"ci", json::array({number(m.ci_lo), number(m.ci_hi)})},
              {"n_used", m.n_used}};
}

inline json collinearity_to_json(const CollinearityReport& c) {
  return json{{"predictors", c.predictors},
              {"tolerance", jsonio::numbers(c.tolerance)},
              {"vif", jsonio::numbers(c.vif)},
              {"eigenvalues", jsonio::numbers(c.eigenvalues)},
              {"condition_index", jsonio::numbers(c.condition_index)}};
}

inline json attenuation_to_json(const std::vector<AttenuationRow>& rows) {
  using jsonio::number;
  json a = json::array();
  for (const auto& r : rows) {
    json e{{"label", r.label},          {"target", r.target},         {"family", to_string(r.family)},
           {"spearman", number(r.spearman)}, {"slope", number(r.slope)}, {"SE", number(r.se)},
           {"stat", number(r.stat)},    {"chisq", number(r.chisq)},   {"p", number(r.p)},
           {"n_used", r.n_used},        {"n_new_missing", r.n_new_missing}};
    if (!r.error.empty()) e["error"] = r.error;
    a.push_back(e);
  }
  return a;
}

}  // namespace biaslab
