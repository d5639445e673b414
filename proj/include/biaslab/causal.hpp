#pragma once

// Scenario-level causal analyses: adjustment-set comparisons, the
// instrumental-variable Wald ratio, mediation with Sobel inference, moderation
// and subgroup effects.

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "datakit.hpp"
#include "error.hpp"
#include "estimators.hpp"

namespace biaslab {

// ---------------------------------------------------------------------------
// Adjustment comparisons

struct AdjustedEstimate {
  std::string label;  // "bivariate" or "adjusted:A+B"
  std::vector<std::string> covariates;
  std::optional<FitResult> fit;
  double estimate = std::numeric_limits<double>::quiet_NaN();
  double se = std::numeric_limits<double>::quiet_NaN();
  double stat = std::numeric_limits<double>::quiet_NaN();
  double p = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> bias;
  std::string error;  // non-empty when the fit failed

  bool ok() const { return fit.has_value(); }
};

struct ScenarioReport {
  std::string scenario_id;
  std::string y, x;
  std::string focal_term;
  std::optional<double> truth;
  std::vector<AdjustedEstimate> fits;

  const AdjustedEstimate& get(const std::string& label) const {
    for (const auto& f : fits)
      if (f.label == label) return f;
    fail(ErrorKind::Lookup, "scenario report has no fit '" + label + "'");
  }
};

inline std::string adjustment_label(const std::vector<std::string>& covariates) {
  if (covariates.empty()) return "bivariate";
  std::string s = "adjusted:";
  for (std::size_t i = 0; i < covariates.size(); ++i) s += (i ? "+" : "") + covariates[i];
  return s;
}

/// Fits y ~ x plus y ~ x + Z for each covariate set. A failing set records
/// its error and the others are still reported.
inline ScenarioReport compare_adjustments(const Dataset& data, const std::string& y, const std::string& x,
                                          const std::vector<std::vector<std::string>>& covariate_sets,
                                          std::optional<double> truth = std::nullopt, std::string scenario_id = {}) {
  for (const auto& n : {y, x}) (void)data.column(n);
  for (const auto& set : covariate_sets)
    for (const auto& c : set) (void)data.column(c);
  ScenarioReport rep;
  rep.scenario_id = std::move(scenario_id);
  rep.y = y;
  rep.x = x;
  rep.focal_term = x;
  rep.truth = truth;
  std::vector<std::vector<std::string>> sets{{}};
  for (const auto& s : covariate_sets)
    if (!s.empty()) sets.push_back(s);
  for (const auto& set : sets) {
    AdjustedEstimate e;
    e.label = adjustment_label(set);
    e.covariates = set;
    Formula f;
    f.response = y;
    f.add(Term::main(x));
    try {
      for (const auto& c : set) f.add(Term::main(c));
      FitResult r = fit_ols(data, f);
      const auto j = r.index_of(x);
      e.estimate = r.b[j];
      e.se = r.se[j];
      e.stat = r.stat[j];
      e.p = r.p[j];
      if (truth) e.bias = e.estimate - *truth;
      e.fit = std::move(r);
    } catch (const Error& err) {
      e.error = err.what();
    }
    rep.fits.push_back(std::move(e));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Instrumental variable (Wald ratio)

struct IvOptions {
  bool enforce_floor = true;   // withhold the ratio when the first stage is weak
  double floor_multiple = 10;  // |b_xin| must exceed this many SEs
  std::vector<std::string> diagnostics;  // observed confounders to correlate with the instrument
};

struct IvEstimate {
  double b_yin = 0, se_yin = 0;
  double b_xin = 0, se_xin = 0;
  double ratio = std::numeric_limits<double>::quiet_NaN();  // b_yin / b_xin
  double se_ratio = std::numeric_limits<double>::quiet_NaN();  // just-identified 2SLS standard error
  bool weak = false;
  std::size_t n_used = 0;
  std::map<std::string, double> instrument_corr;  // corr(instrument, diagnostic)
};

inline IvEstimate iv_wald(const Dataset& data, const std::string& y, const std::string& x, const std::string& instrument,
                          const IvOptions& opt = {}) {
  const auto lw = listwise_complete(data, {y, x, instrument});
  const Dataset& d = lw.data;
  if (d.n_rows() < 10) fail(ErrorKind::EmptyData, "iv_wald: need at least 10 complete rows");
  IvEstimate est;
  est.n_used = d.n_rows();
  const FitResult fy = fit_ols(d, y + " ~ " + instrument);
  const FitResult fx = fit_ols(d, x + " ~ " + instrument);
  est.b_yin = fy.coef(instrument);
  est.se_yin = fy.std_error(instrument);
  est.b_xin = fx.coef(instrument);
  est.se_xin = fx.std_error(instrument);
  est.weak = !(std::abs(est.b_xin) > opt.floor_multiple * est.se_xin);
  for (const auto& c : opt.diagnostics) est.instrument_corr[c] = pearson(data.column(instrument), data.column(c));
  if (est.weak && opt.enforce_floor)
    fail(ErrorKind::WeakInstrument, "iv_wald: weak instrument, |b_xin| = " + format_number(std::abs(est.b_xin)) +
                                        " does not exceed " + format_number(opt.floor_multiple) + " x SE = " +
                                        format_number(opt.floor_multiple * est.se_xin));
  est.ratio = est.b_yin / est.b_xin;

  const auto& yv = d.column(y).values;
  const auto& xv = d.column(x).values;
  const auto& zv = d.column(instrument).values;
  const double n = static_cast<double>(d.n_rows());
  const double my = detail::mean_of(yv), mx = detail::mean_of(xv), mz = detail::mean_of(zv);
  double szx = 0, szz = 0;
  for (std::size_t i = 0; i < yv.size(); ++i) {
    szx += (zv[i] - mz) * (xv[i] - mx);
    szz += (zv[i] - mz) * (zv[i] - mz);
  }
  const double a = my - est.ratio * mx;
  double rss = 0;
  for (std::size_t i = 0; i < yv.size(); ++i) {
    const double e = yv[i] - a - est.ratio * xv[i];
    rss += e * e;
  }
  est.se_ratio = std::sqrt(rss / (n - 2.0) * szz / (szx * szx));
  return est;
}

// ---------------------------------------------------------------------------
// Mediation

struct MediationResult {
  double a = 0, se_a = 0;            // m ~ x
  double b = 0, se_b = 0;            // m in y ~ x + m
  double direct = 0, se_direct = 0;  // x in y ~ x + m
  double indirect = 0;
  double total = 0;
  double sobel_se = 0;
  double z = 0;
  double p = 1;
  double ci_lo = 0, ci_hi = 0;
  std::size_t n_used = 0;
};

/// Stacked-OLS path analysis with a first-order delta-method (Sobel) SE.
inline MediationResult mediation(const Dataset& data, const std::string& y, const std::string& x, const std::string& m) {
  const auto lw = listwise_complete(data, {y, x, m});
  const FitResult fm = fit_ols(lw.data, m + " ~ " + x);
  const FitResult fy = fit_ols(lw.data, y + " ~ " + x + " + " + m);
  MediationResult r;
  r.n_used = lw.data.n_rows();
  r.a = fm.coef(x);
  r.se_a = fm.std_error(x);
  r.b = fy.coef(m);
  r.se_b = fy.std_error(m);
  r.direct = fy.coef(x);
  r.se_direct = fy.std_error(x);
  r.indirect = r.a * r.b;
  r.total = r.direct + r.indirect;
  r.sobel_se = std::sqrt(r.b * r.b * r.se_a * r.se_a + r.a * r.a * r.se_b * r.se_b);
  r.z = r.indirect / r.sobel_se;
  r.p = detail::z_two_sided(r.z);
  r.ci_lo = r.indirect - 1.96 * r.sobel_se;
  r.ci_hi = r.indirect + 1.96 * r.sobel_se;
  return r;
}

// ---------------------------------------------------------------------------
// Moderation and subgroups

inline FitResult moderated_fit(const Dataset& data, const std::string& y, const std::string& x, const std::string& mo) {
  Formula f;
  f.response = y;
  f.add(Term::main(x)).add(Term::main(mo)).add(Term::interaction(x, mo));
  return fit_ols(data, f);
}

/// Simple slope of x at a given moderator value: b_x + b_{x:mo} * mo_value.
inline double conditional_slope(const FitResult& fit, const std::string& x, const std::string& mo, double mo_value) {
  return fit.coef(x) + fit.coef(x + ":" + mo) * mo_value;
}

/// OLS restricted to rows passing every filter.
inline FitResult subgroup_effect(const Dataset& data, const Formula& f, const std::vector<RowFilter>& predicate) {
  const Dataset sub = filter_rows(data, predicate);
  const auto lw = listwise_complete(sub, f.variables());
  const std::size_t k = f.terms.size() + (f.intercept ? 1 : 0);
  if (lw.data.n_rows() <= k + 1)
    fail(ErrorKind::EmptyData, "subgroup_effect: only " + std::to_string(lw.data.n_rows()) + " rows in the subgroup");
  return fit_ols(sub, f);
}

inline FitResult subgroup_effect(const Dataset& data, const std::string& y, const std::string& x,
                                 const std::vector<RowFilter>& predicate) {
  return subgroup_effect(data, Formula::parse(y + " ~ " + x), predicate);
}

}  // namespace biaslab
