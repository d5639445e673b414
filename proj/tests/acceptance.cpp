// Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "biaslab/catalog.hpp"

using namespace biaslab;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

unsigned threads() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }
bool close_rel(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

// Linear SEM with independent exogenous terms: Sigma = (I - B)^-1 Omega (I - B)^-T.
// Population regression coefficients follow from Sigma alone.
struct Sem {
  std::vector<std::string> names;
  Eigen::MatrixXd b;
  Eigen::VectorXd omega;

  explicit Sem(std::vector<std::string> n)
      : names(std::move(n)), b(Eigen::MatrixXd::Zero(dim(), dim())), omega(Eigen::VectorXd::Zero(dim())) {}
  Eigen::Index dim() const { return static_cast<Eigen::Index>(names.size()); }
  Eigen::Index at(const std::string& s) const {
    return static_cast<Eigen::Index>(std::find(names.begin(), names.end(), s) - names.begin());
  }
  Sem& path(const std::string& to, const std::string& from, double c) {
    b(at(to), at(from)) = c;
    return *this;
  }
  Sem& var(const std::string& v, double sd) {
    omega(at(v)) = sd * sd;
    return *this;
  }
  Eigen::MatrixXd sigma() const {
    const Eigen::MatrixXd a = (Eigen::MatrixXd::Identity(dim(), dim()) - b).inverse();
    return a * omega.asDiagonal() * a.transpose();
  }
  // Coefficient of the first predictor in the population regression of y on xs.
  double slope(const std::string& y, const std::vector<std::string>& xs) const {
    const auto s = sigma();
    const auto k = static_cast<Eigen::Index>(xs.size());
    Eigen::MatrixXd sxx(k, k);
    Eigen::VectorXd sxy(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      sxy(i) = s(at(xs[i]), at(y));
      for (Eigen::Index j = 0; j < k; ++j) sxx(i, j) = s(at(xs[i]), at(xs[j]));
    }
    return sxx.ldlt().solve(sxy)(0);
  }
  double cov(const std::string& a, const std::string& c) const { return sigma()(at(a), at(c)); }
};

Dataset population(const std::string& id, std::uint64_t seed, std::size_t n) {
  json j = catalog_json(id);
  j["seed"] = seed;
  j["data"]["scm"]["n"] = n;
  j["analyses"] = json::array();
  j["outputs"] = json::array();
  return run_scenario(config_from_json(j)).data;
}

Dataset scenario_data(const std::string& id, std::uint64_t seed) {
  json j = catalog_json(id);
  j["seed"] = seed;
  j["analyses"] = json::array();
  j["outputs"] = json::array();
  return run_scenario(config_from_json(j)).data;
}

McResult catalog_mc(const std::string& id) {
  const auto c = catalog_config(id);
  McTemplate t = template_from_json(c.data.at("mc"));
  t.seed = c.seed;
  return run_mc(t, threads());
}

CorrTarget entry3_target(double r) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Constant(6, 6, r);
  c.diagonal().setOnes();
  c.row(0).setConstant(0.1);
  c.col(0).setConstant(0.1);
  c(0, 0) = 1;
  c(0, 1) = c(1, 0) = 0.5;
  return CorrTarget{{"Y", "X", "Z1", "Z2", "Z3", "Z4"}, c, std::vector<double>(6, 0.0), std::vector<double>(6, 1.0), true};
}

// -- 1 ----------------------------------------------------------------------

Outcome exact_collinearity() {
  Outcome o;
  const std::vector<std::string> zs{"Z1", "Z2", "Z3", "Z4"};
  const std::map<double, std::pair<double, double>> printed{{0.0, {0.5, 0.1}}, {0.25, {0.5167, -0.0167}}, {0.75, {1.325, -0.275}}};
  const std::map<double, std::pair<double, double>> vif_tol{{0.0, {1, 1}}, {0.25, {1.167, 0.8571}}, {0.75, {3.25, 0.3077}}};
  const Formula f = Formula::parse("Y ~ X + Z1 + Z2 + Z3 + Z4");
  for (const auto& [r, bz] : printed) {
    const CorrTarget t = entry3_target(r);
    RngState rng(1992);
    const Dataset d = mvn_exact(t, 1000, rng);
    const FitResult fit = fit_ols(d, f);
    const Eigen::MatrixXd rxx = t.corr.bottomRightCorner(5, 5);
    const Eigen::VectorXd oracle = rxx.ldlt().solve(t.corr.col(0).tail(5));
    const Eigen::VectorXd vif_oracle = rxx.inverse().diagonal();
    const auto c = collinearity_diagnostics(d, f);
    // Printed values are rounded to four places; the oracle carries full precision.
    bool ok = close(fit.coef("X"), oracle(0), 1e-6) && close(fit.coef("X"), bz.first, 5e-5);
    for (std::size_t k = 0; k < 4; ++k) ok = ok && close(fit.coef(zs[k]), oracle(static_cast<Eigen::Index>(k + 1)), 1e-6) && close(fit.coef(zs[k]), bz.second, 5e-5);
    for (std::size_t k = 0; k < 5; ++k) {
      ok = ok && close(c.vif[k], vif_oracle(static_cast<Eigen::Index>(k)), 1e-6) && close(c.tolerance[k], 1 / vif_oracle(static_cast<Eigen::Index>(k)), 1e-6);
      ok = ok && close(c.vif[k], vif_tol.at(r).first, 5e-4) && close(c.tolerance[k], vif_tol.at(r).second, 5e-5);
    }
    if (r == 0.75) {
      const std::vector<double> ev{4, 1, 0.25, 0.25, 0.25, 0.25}, ci{1, 2, 4, 4, 4, 4};
      ok = ok && c.eigenvalues.size() == 6;
      for (std::size_t k = 0; ok && k < 6; ++k) ok = close(c.eigenvalues[k], ev[k], 1e-6) && close(c.condition_index[k], ci[k], 1e-6);
    }
    o.detail += "r=" + fmt(r) + " bX=" + fmt(fit.coef("X")) + " bZ=" + fmt(fit.coef("Z1")) + " VIF=" + fmt(c.vif[0]) + "; ";
    o.pass = o.pass && ok;
  }
  return o;
}

// -- 2 ----------------------------------------------------------------------

Outcome algebraic_identities() {
  Outcome o;
  int failures = 0;
  const Dataset d = scenario_data("entry13-dependent-measurement", 7);

  // Wald chi-square equals the squared z or t statistic, in every family.
  Dataset dd = d;
  Column yd = dichotomize(d.column("Y"), RecodeRule::median());
  yd.name = "Yd";
  dd.add(yd);
  Column yo = ordinalize(d.column("Y"), RecodeRule::quantiles({0.25, 0.5, 0.75}));
  yo.name = "Yo";
  dd.add(yo);
  const FitResult ols = fit_ols(dd, "Y ~ X"), lg = fit_logistic(dd, "Yd ~ X"), ord = fit_ordered_logit(dd, "Yo ~ X");
  for (const FitResult* f : {&ols, &lg, &ord}) {
    const double s = f->stat[f->index_of("X")];
    failures += !close_rel(wald_chisq(*f, "X").chisq, s * s, 1e-12);
  }
  failures += !(std::abs(35.143 * 35.143 - 1235.03) < 0.005);

  // Bivariate standardized slope equals Pearson r.
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    const Dataset s = scenario_data("entry7-confounder", seed);
    const FitResult f = fit_ols(s, "y ~ x");
    failures += !close(f.beta[f.index_of("x")], pearson(s.column("x"), s.column("y")), 1e-10);
  }

  // Mediation: total equals direct plus indirect.
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    const auto m = mediation(scenario_data("entry9-mediation", seed), "Y", "X", "ME");
    failures += !close(m.total, m.direct + m.indirect, 1e-12);
  }

  // Ordered logit with two levels reproduces binary logistic regression.
  const FitResult o2 = fit_ordered_logit(dd, "Yd ~ X");
  failures += !close(o2.coef("X"), lg.coef("X"), 1e-6) || !close(o2.std_error("X"), lg.std_error("X"), 1e-6) ||
              !close(o2.cutpoints[0], -lg.coef("(Intercept)"), 1e-6);

  // OLS against the normal equations on 100 random designs.
  RngState rng(2024);
  int ols_bad = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 15 + static_cast<std::size_t>(rng.next_below(300));
    const int p = 1 + static_cast<int>(rng.next_below(4));
    Dataset x;
    Eigen::MatrixXd m(static_cast<Eigen::Index>(n), p + 1);
    m.col(0).setOnes();
    std::string formula = "y ~ ";
    std::vector<double> y = normal_draws(rng, n, 0, uniform_draw(rng, 0.1, 10));
    for (int j = 0; j < p; ++j) {
      const auto v = normal_draws(rng, n, uniform_draw(rng, -50, 50), uniform_draw(rng, 0.1, 20));
      const double coef = uniform_draw(rng, -5, 5);
      for (std::size_t i = 0; i < n; ++i) {
        m(static_cast<Eigen::Index>(i), j + 1) = v[i];
        y[i] += coef * v[i];
      }
      const std::string name = "v" + std::to_string(j);
      x.add(Column(name, v));
      formula += (j ? " + " : "") + name;
    }
    x.add(Column("y", y));
    const Eigen::VectorXd yy = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(n));
    const Eigen::MatrixXd xtx = m.transpose() * m;
    const Eigen::VectorXd b = xtx.ldlt().solve(m.transpose() * yy);
    const double s2 = (yy - m * b).squaredNorm() / static_cast<double>(n - static_cast<std::size_t>(p) - 1);
    const Eigen::VectorXd se = (s2 * xtx.inverse()).diagonal().cwiseSqrt();
    const FitResult f = fit_ols(x, formula);
    for (int j = 0; j <= p; ++j) {
      const auto k = static_cast<std::size_t>(j);
      ols_bad += !close_rel(f.b[k], b(j), 1e-8) || !close_rel(f.se[k], se(j), 1e-8);
    }
  }
  failures += ols_bad;
  o.pass = failures == 0;
  o.detail = "wald(logit)=" + fmt(wald_chisq(lg, "X").chisq) + " z^2=" + fmt(lg.stat[1] * lg.stat[1]) +
             "; OLS oracle mismatches=" + std::to_string(ols_bad) + "; total failures=" + std::to_string(failures);
  return o;
}

// -- 3 ----------------------------------------------------------------------

Outcome invariance() {
  Outcome o;
  int failures = 0;
  const Dataset d = scenario_data("entry13-dependent-measurement", 1992);
  const FitResult base = fit_ols(d, "Y ~ X");
  const double rho = spearman(d.column("X"), d.column("Y"));
  const auto ix = base.index_of("X");

  for (double a : {0.01, 0.2, 3.7, 20.0}) {
    for (double c : {-50.0, 0.0, 12.5}) {
      Dataset t = d;
      t.set(transform(transform(d.column("Y"), TransformRule::scale(a)), TransformRule::shift(c)));
      const FitResult f = fit_ols(t, "Y ~ X");
      failures += !close_rel(f.stat[ix], base.stat[ix], 1e-10) || !close_rel(wald_chisq(f, "X").chisq, wald_chisq(base, "X").chisq, 1e-10) ||
                  !close_rel(f.beta[ix], base.beta[ix], 1e-10) || !close_rel(f.b[ix], a * base.b[ix], 1e-10) ||
                  !close_rel(f.se[ix], a * base.se[ix], 1e-10) || !close(spearman(t.column("X"), t.column("Y")), rho, 1e-10);

      Dataset u = d;
      u.set(transform(transform(d.column("X"), TransformRule::scale(a)), TransformRule::shift(c)));
      const FitResult g = fit_ols(u, "Y ~ X");
      failures += !close_rel(g.stat[ix], base.stat[ix], 1e-10) || !close_rel(g.b[ix], base.b[ix] / a, 1e-10) ||
                  !close_rel(g.se[ix], base.se[ix] / a, 1e-10) || !close_rel(g.beta[ix], base.beta[ix], 1e-10);
    }
  }
  for (const auto& rule : {TransformRule::zscore(), TransformRule::minmax()}) {
    Dataset t = d;
    t.set(transform(d.column("Y"), rule));
    const FitResult f = fit_ols(t, "Y ~ X");
    failures += !close_rel(f.stat[ix], base.stat[ix], 1e-10) || !close_rel(f.beta[ix], base.beta[ix], 1e-10);
  }

  // Strictly monotone transforms: ranks, and so Spearman and every quantile recode, are unchanged.
  const std::vector<std::vector<TransformRule>> monotone{
      {TransformRule::power(3)},
      {TransformRule::minmax(25, 25), TransformRule::log_e()},
      {TransformRule::scale(0.05), TransformRule::power(3), TransformRule::shift(7)}};
  Column med = dichotomize(d.column("Y"), RecodeRule::median());
  med.name = "Yd";
  Dataset dm = d;
  dm.add(med);
  const FitResult lg = fit_logistic(dm, "Yd ~ X");
  for (const auto& chain : monotone) {
    Column y = d.column("Y");
    for (const auto& r : chain) y = transform(y, r);
    failures += !close(spearman(d.column("X"), y), rho, 1e-10);
    Column yd = dichotomize(y, RecodeRule::median());
    yd.name = "Yd";
    Dataset dt = d;
    dt.add(yd);
    const FitResult g = fit_logistic(dt, "Yd ~ X");
    failures += !close_rel(g.stat[1], lg.stat[1], 1e-10) || !close_rel(g.b[1], lg.b[1], 1e-10);
    failures += recode(y, RecodeRule::quantiles({0.25, 0.5, 0.75})).values !=
                recode(d.column("Y"), RecodeRule::quantiles({0.25, 0.5, 0.75})).values;
  }
  o.pass = failures == 0;
  o.detail = "t=" + fmt(base.stat[ix]) + " beta=" + fmt(base.beta[ix]) + " spearman=" + fmt(rho) + "; failures=" + std::to_string(failures);
  return o;
}

// -- 4 ----------------------------------------------------------------------

Outcome population_recovery() {
  Outcome o;
  const std::size_t n = 100000;
  const Sem e7 = Sem({"c", "x", "y"}).path("x", "c", 2).path("y", "c", 2).var("c", 2.5).var("x", 2 * 2.5).var("y", 2 * 2.5);
  const Sem e8 = Sem({"x", "y", "c"}).path("c", "x", 2).path("c", "y", 2).var("x", 2.5).var("y", 2.5).var("c", 2.5);
  const Sem e11 = Sem({"C", "IN", "X", "Y"}).path("X", "C", 1).path("X", "IN", 1).path("Y", "C", 1).path("Y", "X", 1)
                      .var("C", 10).var("IN", 10).var("X", 10).var("Y", 10);
  const Sem e9 = Sem({"X", "ME", "Y"}).path("ME", "X", 1).path("Y", "ME", 1).var("X", 10).var("ME", 20).var("Y", 20);
  const double t7 = e7.slope("y", {"x"}), t7a = e7.slope("y", {"x", "c"}), t8 = e8.slope("y", {"x", "c"});
  const double t11 = e11.cov("Y", "IN") / e11.cov("X", "IN");
  const double t9d = e9.slope("Y", {"X", "ME"}), t9t = e9.slope("Y", {"X"}), t9i = t9t - t9d;
  const double t15 = 4.0;  // structural interaction coefficient

  std::map<std::string, double> worst;
  auto track = [&](const std::string& k, double est, double truth, double se) {
    const double z = std::abs(est - truth) / se;
    worst[k] = std::max(worst[k], z);
  };
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto r7 = compare_adjustments(population("entry7-confounder", seed, n), "y", "x", {{"c"}}, 0.0);
    track("e7-bivariate", r7.get("bivariate").estimate, t7, r7.get("bivariate").se);
    track("e7-adjusted", r7.get("adjusted:c").estimate, t7a, r7.get("adjusted:c").se);
    const auto r8 = compare_adjustments(population("entry8-collider", seed, n), "y", "x", {{"c"}}, 0.0);
    track("e8-adjusted", r8.get("adjusted:c").estimate, t8, r8.get("adjusted:c").se);
    const auto iv = iv_wald(population("entry11-iv-single", seed, n), "Y", "X", "IN", {});
    track("e11-iv", iv.ratio, t11, iv.se_ratio);
    const Dataset d9 = population("entry9-mediation", seed, n);
    const auto m = mediation(d9, "Y", "X", "ME");
    const FitResult tot = fit_ols(d9, "Y ~ X");
    track("e9-direct", m.direct, t9d, m.se_direct);
    track("e9-indirect", m.indirect, t9i, m.sobel_se);
    track("e9-total", m.total, t9t, tot.std_error("X"));
    const FitResult f15 = fit_ols(population("entry15-moderator-measurement", seed, n), "Y ~ X + Mod + X:Mod");
    track("e15-interaction", f15.coef("X:Mod"), t15, f15.std_error("X:Mod"));
  }
  o.detail = "truths: " + fmt(t7) + "/" + fmt(t7a) + "/" + fmt(t8) + "/" + fmt(t11) + "/" + fmt(t9d) + "/" + fmt(t9i / t9t) + "/" + fmt(t15) +
             "; max |z|:";
  for (const auto& [k, z] : worst) {
    o.detail += " " + k + "=" + fmt(z);
    o.pass = o.pass && z <= 4;
  }
  return o;
}

// -- 5 ----------------------------------------------------------------------

Outcome quadrant_signs() {
  Outcome o;
  double lowest = 1;
  for (int sx : {1, -1}) {
    for (int sy : {1, -1}) {
      const std::string q = detail::cat::quadrant_name(sx, sy);
      for (const bool collider : {false, true}) {
        const auto r = catalog_mc(collider ? "entry8-collider-" + q : "entry7-confounder-" + q);
        const auto a = r.values(collider ? "$cx" : "$bx"), b = r.values(collider ? "$cy" : "$by"), est = r.values("bXY");
        // Confounding biases toward sign(bx * by); conditioning on a collider toward -sign(cx * cy).
        const double expected = (collider ? -1.0 : 1.0) * sx * sy;
        std::size_t n = 0, hit = 0;
        for (std::size_t i = 0; i < est.size(); ++i) {
          if (std::abs(a[i]) < 5 || std::abs(b[i]) < 5) continue;
          ++n;
          hit += !std::isnan(est[i]) && est[i] * expected > 0;
        }
        const double share = n ? static_cast<double>(hit) / static_cast<double>(n) : 0.0;
        lowest = std::min(lowest, share);
        o.detail += std::string(collider ? "collider-" : "confounder-") + q + "=" + fmt(share) + " (n=" + std::to_string(n) + ") ";
        o.pass = o.pass && r.records.size() == 10000 && share >= 0.99;
      }
    }
  }
  o.detail += "min=" + fmt(lowest);
  return o;
}

// -- 6 ----------------------------------------------------------------------

Outcome attenuation_ordering() {
  Outcome o;
  int bad_counts = 0;
  auto counts = [](const Column& c) {
    std::map<double, int> m;
    for (std::size_t i = 0; i < c.size(); ++i)
      if (!c.is_missing(i)) ++m[c.values[i]];
    return m;
  };
  for (const bool dependent : {true, false}) {
    const std::string target = dependent ? "y" : "x";
    const std::vector<MeasureVariant> variants{
        {"quartiles", target, {RecodeRule::quantiles({0.25, 0.5, 0.75})}, std::nullopt},
        {"median", target, {RecodeRule::median()}, std::nullopt},
        {"extreme", target, {RecodeRule::threshold(dependent ? 90 : 30)}, std::nullopt}};
    int ordered = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
      const Dataset d = scenario_data(dependent ? "entry13-dependent-measurement" : "entry14-independent-measurement", seed);
      const auto rows = attenuation_report(d, "Y", "X", variants);
      ordered += rows[0].chisq > rows[1].chisq && rows[1].chisq > rows[2].chisq && rows[2].chisq > rows[3].chisq;
      const Column& c = d.column(dependent ? "Y" : "X");
      bad_counts += counts(ordinalize(c, RecodeRule::quantiles({0.25, 0.5, 0.75}))) != std::map<double, int>{{1, 2500}, {2, 2500}, {3, 2500}, {4, 2500}};
      bad_counts += counts(dichotomize(c, RecodeRule::median())) != std::map<double, int>{{0, 5000}, {1, 5000}};
      bad_counts += counts(dichotomize(c, RecodeRule::quantile(0.25))) != std::map<double, int>{{0, 2500}, {1, 7500}};
    }
    o.detail += std::string(dependent ? "response" : "predictor") + " ordered in " + std::to_string(ordered) + "/100; ";
    o.pass = o.pass && ordered >= 95;
  }
  o.detail += "bin-count mismatches=" + std::to_string(bad_counts);
  o.pass = o.pass && bad_counts == 0;
  return o;
}

// -- 7 ----------------------------------------------------------------------

Outcome heteroscedasticity() {
  Outcome o;
  int hits = 0, in_ci = 0, inflated = 0;
  double ratio_sum = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const FitResult h = fit_ols(scenario_data("entry2-homoscedastic", seed), "Y ~ X");
    const FitResult e = fit_ols(scenario_data("entry2-expanding", seed), "Y ~ X");
    const double crit = boost::math::quantile(boost::math::complement(boost::math::students_t(static_cast<double>(h.n_used - 2)), 0.025));
    const bool inside = std::abs(e.coef("X") - h.coef("X")) <= crit * h.std_error("X");
    const bool wider = e.std_error("X") >= 1.5 * h.std_error("X");
    in_ci += inside;
    inflated += wider;
    hits += inside && wider;
    ratio_sum += e.std_error("X") / h.std_error("X");
  }
  o.pass = hits >= 90;
  o.detail = "both conditions in " + std::to_string(hits) + "/100 seeds (slope inside CI " + std::to_string(in_ci) + ", SE +50% " +
             std::to_string(inflated) + ", mean SE ratio " + fmt(ratio_sum / 100) + ")";
  return o;
}

// -- 8 ----------------------------------------------------------------------

Outcome outlier_determinism() {
  Outcome o;
  int failures = 0;
  std::vector<Dataset> sets{scenario_data("entry4-outliers", 1992)};
  for (std::uint64_t seed : {1, 2, 3}) sets.push_back(scenario_data("entry4-outliers", seed));
  {
    RngState rng(5);
    Dataset neg;
    auto x = normal_draws(rng, 40, -3, 4);
    std::vector<double> y(40);
    for (std::size_t i = 0; i < 40; ++i) y[i] = -2 * x[i] + normal_draw(rng, 0, 3);
    neg.add(Column("X", x));
    neg.add(Column("Y", y));
    sets.push_back(neg);
  }
  for (const auto& d : sets) {
    const auto& x = d.column("X").values;
    const auto& y = d.column("Y").values;
    const double n = static_cast<double>(x.size());
    const double mx = detail::mean_of(x), my = detail::mean_of(y);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sxx += (x[i] - mx) * (x[i] - mx);
      sxy += (x[i] - mx) * (y[i] - my);
    }
    const double b0 = fit_ols(d, "Y ~ X").coef("X");
    failures += !close(fit_ols(inject_outlier(d, {{"X", mx}, {"Y", my}}), "Y ~ X").coef("X"), b0, 1e-12);
    for (const double side : {1.0, -1.0}) {
      double prev = std::abs(b0);
      for (double dist : {0.5, 1.0, 2.0, 5.0, 10.0, 40.0, 100.0, 1000.0}) {
        const double b = fit_ols(inject_outlier(d, {{"X", mx + side * dist}, {"Y", my}}), "Y ~ X").coef("X");
        // A point at the Y mean leaves Sxy unchanged and adds n d^2 / (n + 1) to Sxx.
        const double oracle = sxy / (sxx + n * dist * dist / (n + 1));
        failures += !(std::abs(b) < prev) || b * b0 < 0 || !close_rel(b, oracle, 1e-9);
        prev = std::abs(b);
      }
    }
  }
  o.pass = failures == 0;
  o.detail = std::to_string(sets.size()) + " datasets, failures=" + std::to_string(failures);
  return o;
}

// -- 9 ----------------------------------------------------------------------

Outcome iv_ordering() {
  Outcome o;
  const std::vector<std::string> ids{"entry11-iv-valid", "entry11-iv-confounder-caused", "entry11-iv-correlated-confounder",
                                     "entry11-iv-direct-path", "entry11-iv-mediated-path"};
  std::vector<double> medians, filtered;
  for (const auto& id : ids) {
    const McResult r = catalog_mc(id);
    medians.push_back(summarize_series(r, "abs_diff").median);
    filtered.push_back(summarize_series(filter_replicates(r, {{"IN_byx", ">=", 0}}), "abs_diff").median);
    o.pass = o.pass && r.records.size() == 10000;
    o.detail += id.substr(std::string("entry11-iv-").size()) + "=" + fmt(medians.back()) + " ";
  }
  for (std::size_t k = 1; k < medians.size(); ++k) o.pass = o.pass && medians[k] > medians[0];
  o.detail += "(with IN_byx >= 0 filter: valid " + fmt(filtered[0]) + ", min misidentified " +
              fmt(*std::min_element(filtered.begin() + 1, filtered.end())) + ")";
  return o;
}

// -- 10 ---------------------------------------------------------------------

Outcome determinism() {
  Outcome o;
  int failures = 0;
  std::vector<json> configs;
  for (const auto* id : {"entry1-linearity", "entry3-collinearity-high", "entry4-outliers", "entry6-block-randomization",
                         "entry13-dependent-measurement", "entry15-moderator-measurement"})
    configs.push_back(catalog_json(id));
  for (const auto* id : {"entry8-collider-pm", "entry11-iv-mediated-path"}) {
    json j = catalog_json(id);
    j["data"]["mc"]["reps"] = 400;
    configs.push_back(j);
  }
  {
    json j = catalog_json("entry6-balance");
    for (auto& a : j["analyses"])
      if (a.contains("reps")) a["reps"] = 50;
    configs.push_back(j);
  }
  const unsigned many = std::max(4u, threads());
  std::size_t files = 0;
  for (const auto& j : configs) {
    const ScenarioConfig c = config_from_json(j);
    const auto a = run_scenario(c, {1, "csv"}), b = run_scenario(c, {1, "csv"}), m = run_scenario(c, {many, "csv"});
    failures += a.files != b.files || a.files != m.files || a.files.empty();
    files += a.files.size();
    if (!a.mc) {
      const std::string csv = to_csv(a.data);
      failures += !(from_csv(csv) == a.data) || to_csv(from_csv(csv)) != csv;
    }
  }
  for (const auto& e : catalog()) {
    const json once = config_to_json(catalog_config(e.id));
    failures += config_to_json(config_from_string(once.dump(2))) != once;
  }
  o.pass = failures == 0;
  o.detail = std::to_string(configs.size()) + " scenarios, " + std::to_string(files) + " files compared across runs and " +
             std::to_string(many) + " threads; " + std::to_string(catalog().size()) + " configs round-tripped; failures=" + std::to_string(failures);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"exact-moment collinearity", exact_collinearity},
      {"algebraic identities", algebraic_identities},
      {"affine and monotone invariance", invariance},
      {"population value recovery", population_recovery},
      {"confounder and collider quadrant signs", quadrant_signs},
      {"measurement attenuation ordering", attenuation_ordering},
      {"heteroscedastic SE inflation", heteroscedasticity},
      {"outlier leverage determinism", outlier_determinism},
      {"IV misidentification ordering", iv_ordering},
      {"determinism and round trips", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !out.pass;
    std::printf("%s %zu %s: %s [%.1fs]\n", out.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), out.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
