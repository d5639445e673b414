#pragma once

// Level-of-measurement recodes and continuous transformations, plus the
// attenuation report comparing fits across recoded variants.

#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "datakit.hpp"
#include "error.hpp"
#include "estimators.hpp"

namespace biaslab {

struct RecodeRule {
  enum class Kind { DichotomizeMedian, DichotomizeQuantile, DichotomizeThreshold, OrdinalizeQuantiles, OrdinalizeCutpoints };
  Kind kind = Kind::DichotomizeMedian;
  double value = 0;            // quantile p or threshold
  std::vector<double> points;  // probabilities or cutpoints for ordinal rules

  static RecodeRule median() { return {Kind::DichotomizeMedian, 0.5, {}}; }
  static RecodeRule quantile(double p) { return {Kind::DichotomizeQuantile, p, {}}; }
  static RecodeRule threshold(double v) { return {Kind::DichotomizeThreshold, v, {}}; }
  static RecodeRule quantiles(std::vector<double> probs) { return {Kind::OrdinalizeQuantiles, 0, std::move(probs)}; }
  static RecodeRule cutpoints(std::vector<double> cuts) { return {Kind::OrdinalizeCutpoints, 0, std::move(cuts)}; }

  bool is_dichotomy() const {
    return kind == Kind::DichotomizeMedian || kind == Kind::DichotomizeQuantile || kind == Kind::DichotomizeThreshold;
  }
  friend bool operator==(const RecodeRule&, const RecodeRule&) = default;
};

struct TransformRule {
  enum class Kind { Scale, Shift, Zscore, Minmax, LogE, Log10, Power, RoundWhole, Window };
  Kind kind = Kind::Scale;
  double a = 0;  // scale/shift constant, power exponent, pad_lo, window lo
  double b = 0;  // pad_hi, window hi

  static TransformRule scale(double c) { return {Kind::Scale, c, 0}; }
  static TransformRule shift(double c) { return {Kind::Shift, c, 0}; }
  static TransformRule zscore() { return {Kind::Zscore, 0, 0}; }
  static TransformRule minmax(double pad_lo = 0, double pad_hi = 0) { return {Kind::Minmax, pad_lo, pad_hi}; }
  static TransformRule log_e() { return {Kind::LogE, 0, 0}; }
  static TransformRule log_10() { return {Kind::Log10, 0, 0}; }
  static TransformRule power(double p) { return {Kind::Power, p, 0}; }
  static TransformRule round_whole() { return {Kind::RoundWhole, 0, 0}; }
  static TransformRule window(double lo, double hi) { return {Kind::Window, lo, hi}; }
  friend bool operator==(const TransformRule&, const TransformRule&) = default;
};

/// Side information from a recode or transform.
struct MeasureNote {
  std::size_t n_new_missing = 0;
  std::vector<std::string> warnings;
};

namespace detail {

inline void check_probs(const std::vector<double>& p, const char* what) {
  if (p.empty()) fail(ErrorKind::Parameter, std::string(what) + ": at least one probability required");
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] > 0 && p[i] < 1)) fail(ErrorKind::Parameter, std::string(what) + ": probabilities must lie in (0, 1)");
    if (i && !(p[i] > p[i - 1])) fail(ErrorKind::Parameter, std::string(what) + ": probabilities must be strictly increasing");
  }
}

inline Column empty_like(const Column& col, std::string suffix) {
  Column out;
  out.name = col.name + std::move(suffix);
  out.values.reserve(col.size());
  out.missing.reserve(col.size());
  return out;
}

}  // namespace detail

/// value <= cut -> 0, value > cut -> 1; missing passes through.
inline Column dichotomize(const Column& col, const RecodeRule& rule, MeasureNote* note = nullptr) {
  if (!rule.is_dichotomy()) fail(ErrorKind::Parameter, "dichotomize: rule is not a dichotomy");
  const auto obs = col.observed();
  if (obs.empty()) fail(ErrorKind::EmptyData, "dichotomize: column '" + col.name + "' has no observed values");
  double cut = rule.value;
  if (rule.kind == RecodeRule::Kind::DichotomizeMedian) cut = quantile_type7(obs, 0.5);
  if (rule.kind == RecodeRule::Kind::DichotomizeQuantile) {
    if (!(rule.value > 0 && rule.value < 1)) fail(ErrorKind::Parameter, "dichotomize: quantile must lie in (0, 1)");
    cut = quantile_type7(obs, rule.value);
  }
  Column out = detail::empty_like(col, "");
  std::size_t ones = 0;
  for (std::size_t i = 0; i < col.size(); ++i) {
    if (col.is_missing(i)) {
      out.push_missing();
      continue;
    }
    const bool one = col.values[i] > cut;
    ones += one;
    out.push_back(one ? 1.0 : 0.0);
  }
  if (note && (ones == 0 || ones == obs.size()))
    note->warnings.push_back("dichotomize: '" + col.name + "' recoded to a single class");
  return out;
}

/// Labels 1..K; interior bins are [c_{k-1}, c_k) and the last bin is closed.
inline Column ordinalize(const Column& col, const RecodeRule& rule, MeasureNote* note = nullptr) {
  std::vector<double> cuts;
  const auto obs = col.observed();
  if (obs.empty()) fail(ErrorKind::EmptyData, "ordinalize: column '" + col.name + "' has no observed values");
  if (rule.kind == RecodeRule::Kind::OrdinalizeQuantiles) {
    detail::check_probs(rule.points, "ordinalize");
    std::vector<double> sorted(obs);
    std::sort(sorted.begin(), sorted.end());
    for (double p : rule.points) cuts.push_back(detail::quantile_sorted(sorted, p));
    for (std::size_t i = 1; i < cuts.size(); ++i)
      if (note && cuts[i] == cuts[i - 1]) note->warnings.push_back("ordinalize: tied quantile cutpoints leave an empty bin");
  } else if (rule.kind == RecodeRule::Kind::OrdinalizeCutpoints) {
    if (rule.points.empty()) fail(ErrorKind::Parameter, "ordinalize: at least one cutpoint required");
    for (std::size_t i = 1; i < rule.points.size(); ++i)
      if (!(rule.points[i] > rule.points[i - 1])) fail(ErrorKind::Parameter, "ordinalize: cutpoints must be strictly increasing");
    cuts = rule.points;
  } else {
    fail(ErrorKind::Parameter, "ordinalize: rule is not an ordinal recode");
  }
  Column out = detail::empty_like(col, "");
  for (std::size_t i = 0; i < col.size(); ++i) {
    if (col.is_missing(i)) {
      out.push_missing();
      continue;
    }
    const auto pos = std::upper_bound(cuts.begin(), cuts.end(), col.values[i]) - cuts.begin();
    out.push_back(static_cast<double>(pos + 1));
  }
  return out;
}

inline Column recode(const Column& col, const RecodeRule& rule, MeasureNote* note = nullptr) {
  return rule.is_dichotomy() ? dichotomize(col, rule, note) : ordinalize(col, rule, note);
}

/// Domain violations (log of non-positive values, fractional powers of
/// negatives, values outside a window) become missing.
inline Column transform(const Column& col, const TransformRule& rule, MeasureNote* note = nullptr) {
  using K = TransformRule::Kind;
  const auto obs = col.observed();
  double center = 0, spread = 1;
  switch (rule.kind) {
    case K::Scale:
      if (rule.a == 0 || !std::isfinite(rule.a)) fail(ErrorKind::Parameter, "transform: scale constant must be non-zero");
      break;
    case K::Zscore: {
      if (obs.size() < 2) fail(ErrorKind::Degenerate, "transform: zscore needs at least 2 values");
      center = detail::mean_of(obs);
      spread = detail::sample_sd(obs);
      if (!(spread > 0)) fail(ErrorKind::Degenerate, "transform: zscore of a constant column");
      break;
    }
    case K::Minmax: {
      if (obs.empty()) fail(ErrorKind::EmptyData, "transform: minmax of an empty column");
      const auto [mn, mx] = std::minmax_element(obs.begin(), obs.end());
      center = *mn - rule.a;
      spread = (*mx + rule.b) - center;
      if (!(spread > 0)) fail(ErrorKind::Degenerate, "transform: minmax range is zero");
      break;
    }
    case K::Window:
      if (!(rule.a < rule.b)) fail(ErrorKind::Parameter, "transform: window requires lo < hi");
      break;
    default: break;
  }
  const bool integer_power = rule.kind == K::Power && rule.a == std::round(rule.a);
  Column out = detail::empty_like(col, "");
  std::size_t introduced = 0;
  for (std::size_t i = 0; i < col.size(); ++i) {
    if (col.is_missing(i)) {
      out.push_missing();
      continue;
    }
    const double x = col.values[i];
    std::optional<double> v;
    switch (rule.kind) {
      case K::Scale: v = x * rule.a; break;
      case K::Shift: v = x + rule.a; break;
      case K::Zscore:
      case K::Minmax: v = (x - center) / spread; break;
      case K::LogE:
        if (x > 0) v = std::log(x);
        break;
      case K::Log10:
        if (x > 0) v = std::log10(x);
        break;
      case K::Power:
        if (x >= 0 || integer_power) v = std::pow(x, rule.a);
        break;
      case K::RoundWhole: v = std::round(x); break;
      case K::Window:
        if (x > rule.a && x < rule.b) v = x;
        break;
    }
    if (v && std::isfinite(*v)) {
      out.push_back(*v);
    } else {
      out.push_missing();
      ++introduced;
    }
  }
  if (note) note->n_new_missing += introduced;
  return out;
}

using MeasureRule = std::variant<RecodeRule, TransformRule>;

inline Column apply_rule(const Column& col, const MeasureRule& rule, MeasureNote* note = nullptr) {
  return std::visit(
      [&](const auto& r) {
        if constexpr (std::is_same_v<std::decay_t<decltype(r)>, RecodeRule>) return recode(col, r, note);
        else return transform(col, r, note);
      },
      rule);
}

// ---------------------------------------------------------------------------
// Attenuation report

struct MeasureVariant {
  std::string label;
  std::string target;              // "x" or "y"
  std::vector<MeasureRule> rules;  // applied in order
  std::optional<Family> family;    // overrides auto-selection
};

struct AttenuationRow {
  std::string label;
  std::string target;
  Family family = Family::Gaussian;
  double spearman = std::numeric_limits<double>::quiet_NaN();
  double slope = std::numeric_limits<double>::quiet_NaN();
  double se = std::numeric_limits<double>::quiet_NaN();
  double stat = std::numeric_limits<double>::quiet_NaN();
  double chisq = std::numeric_limits<double>::quiet_NaN();
  double p = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_used = 0;
  std::size_t n_new_missing = 0;
  std::string error;
};

/// Two observed levels -> binomial; 3 to 9 integer levels -> ordered;
/// anything else -> gaussian.
inline Family auto_family(const Column& response) {
  std::set<double> levels;
  bool integers = true;
  for (std::size_t i = 0; i < response.size() && levels.size() <= 10; ++i) {
    if (response.is_missing(i)) continue;
    levels.insert(response.values[i]);
    integers = integers && response.values[i] == std::round(response.values[i]);
  }
  if (levels.size() == 2) return Family::Binomial;
  if (integers && levels.size() >= 3 && levels.size() <= 9) return Family::Ordered;
  return Family::Gaussian;
}

inline AttenuationRow attenuation_row(const Dataset& data, const std::string& y, const std::string& x,
                                      const MeasureVariant& v) {
  AttenuationRow row;
  row.label = v.label;
  row.target = v.target;
  try {
    if (v.target != "x" && v.target != "y" && !v.rules.empty())
      fail(ErrorKind::Validation, "attenuation: target must be 'x' or 'y'");
    Dataset d;
    Column xc = data.column(x), yc = data.column(y);
    MeasureNote note;
    Column& tc = v.target == "x" ? xc : yc;
    for (const auto& r : v.rules) tc = apply_rule(tc, r, &note);
    row.n_new_missing = note.n_new_missing;
    xc.name = x;
    yc.name = y;
    d.add(xc);
    d.add(yc);
    row.family = v.family.value_or(auto_family(yc));
    row.spearman = spearman(xc, yc);
    Formula f;
    f.response = y;
    f.add(Term::main(x));
    const FitResult r = fit(d, f, row.family);
    row.slope = r.coef(x);
    row.se = r.std_error(x);
    row.stat = r.stat[r.index_of(x)];
    const auto w = wald_chisq(r, x);
    row.chisq = w.chisq;
    row.p = w.p;
    row.n_used = r.n_used;
  } catch (const Error& e) {
    row.error = e.what();
  }
  return row;
}

/// One baseline row followed by one row per variant; a failing variant keeps
/// its error message and does not stop the others.
inline std::vector<AttenuationRow> attenuation_report(const Dataset& data, const std::string& y, const std::string& x,
                                                      const std::vector<MeasureVariant>& variants) {
  (void)data.column(y);
  (void)data.column(x);
  std::vector<AttenuationRow> rows;
  rows.push_back(attenuation_row(data, y, x, MeasureVariant{"baseline", "y", {}, std::nullopt}));
  for (const auto& v : variants) rows.push_back(attenuation_row(data, y, x, v));
  return rows;
}

inline std::string attenuation_csv(const std::vector<AttenuationRow>& rows) {
  std::string s = "label,spearman,slope,SE,stat,chisq,n_used,family,error\n";
  auto num = [](double v) { return std::isnan(v) ? std::string() : format_number(v); };
  for (const auto& r : rows) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    s += r.label + "," + num(r.spearman) + "," + num(r.slope) + "," + num(r.se) + "," + num(r.stat) + "," +
         num(r.chisq) + "," + std::to_string(r.n_used) + "," + to_string(r.family) + "," + err + "\n";
  }
  return s;
}

}  // namespace biaslab
