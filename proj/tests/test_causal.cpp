#include <catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "biaslab/causal.hpp"
#include "biaslab/json_io.hpp"
#include "biaslab/simcore.hpp"

using namespace biaslab;
using Catch::Matchers::WithinAbs;

namespace {

// Covariance propagation for a linear SCM v = B v + e with independent e:
// Sigma = (I - B)^-1 D (I - B)^-T. Population OLS slopes follow from Sigma.
struct Lsem {
  std::vector<std::string> names;
  Eigen::MatrixXd b;
  Eigen::VectorXd noise_var;

  explicit Lsem(std::vector<std::string> n) : names(std::move(n)) {
    const auto k = static_cast<Eigen::Index>(names.size());
    b = Eigen::MatrixXd::Zero(k, k);
    noise_var = Eigen::VectorXd::Zero(k);
  }
  Eigen::Index at(const std::string& n) const {
    return static_cast<Eigen::Index>(std::find(names.begin(), names.end(), n) - names.begin());
  }
  Lsem& edge(const std::string& from, const std::string& to, double c) {
    b(at(to), at(from)) = c;
    return *this;
  }
  Lsem& noise(const std::string& n, double sd) {
    noise_var(at(n)) = sd * sd;
    return *this;
  }
  Eigen::MatrixXd sigma() const {
    const auto k = b.rows();
    const Eigen::MatrixXd a = (Eigen::MatrixXd::Identity(k, k) - b).inverse();
    return a * noise_var.asDiagonal() * a.transpose();
  }
  // Population coefficient of the first regressor in y ~ regressors.
  double slope(const std::string& y, const std::vector<std::string>& xs) const {
    const auto s = sigma();
    const auto p = static_cast<Eigen::Index>(xs.size());
    Eigen::MatrixXd sxx(p, p);
    Eigen::VectorXd sxy(p);
    for (Eigen::Index i = 0; i < p; ++i) {
      sxy(i) = s(at(xs[static_cast<std::size_t>(i)]), at(y));
      for (Eigen::Index j = 0; j < p; ++j) sxx(i, j) = s(at(xs[static_cast<std::size_t>(i)]), at(xs[static_cast<std::size_t>(j)]));
    }
    return sxx.ldlt().solve(sxy)(0);
  }
};

Dataset run(const std::string& text, std::uint64_t seed) {
  RngState rng(seed);
  return evaluate_scm(scm_from_json(json::parse(text)), rng);
}

std::string confounder_spec(double bx, double by, std::size_t n = 100000) {
  return R"({"n": )" + std::to_string(n) + R"(, "sources": [{"name": "c", "kind": "normal", "params": {"mean": 0, "sd": 2.5}}],
    "equations": [{"target": "x", "linear": [["c", )" + format_number(bx) + R"(]], "error": {"coef": 2, "sd": 2.5}},
                  {"target": "y", "linear": [["c", )" + format_number(by) + R"(]], "error": {"coef": 2, "sd": 2.5}}]})";
}

std::string collider_spec(double cx, double cy) {
  return R"({"n": 100000, "sources": [{"name": "x", "kind": "normal", "params": {"mean": 0, "sd": 2.5}},
                                       {"name": "y", "kind": "normal", "params": {"mean": 0, "sd": 2.5}}],
    "equations": [{"target": "c", "linear": [["x", )" + format_number(cx) + R"(], ["y", )" + format_number(cy) + R"(]],
                   "error": {"coef": 1, "sd": 2.5}}]})";
}

}  // namespace

TEST_CASE("confounder adjustment matches the covariance oracle") {
  Lsem m({"c", "x", "y"});
  m.edge("c", "x", 2).edge("c", "y", 2).noise("c", 2.5).noise("x", 5).noise("y", 5);
  REQUIRE_THAT(m.slope("y", {"x"}), WithinAbs(0.5, 1e-12));
  REQUIRE_THAT(m.slope("y", {"x", "c"}), WithinAbs(0.0, 1e-12));

  const auto rep = compare_adjustments(run(confounder_spec(2, 2), 7), "y", "x", {{"c"}}, 0.0);
  REQUIRE(rep.fits.size() == 2);
  REQUIRE_THAT(rep.get("bivariate").estimate, WithinAbs(0.5, 0.02));
  REQUIRE_THAT(rep.get("adjusted:c").estimate, WithinAbs(0.0, 0.02));
  REQUIRE_THAT(*rep.get("bivariate").bias, WithinAbs(rep.get("bivariate").estimate, 1e-15));
}

TEST_CASE("collider adjustment matches the covariance oracle") {
  Lsem m({"x", "y", "c"});
  m.edge("x", "c", 2).edge("y", "c", 2).noise("x", 2.5).noise("y", 2.5).noise("c", 2.5);
  REQUIRE_THAT(m.slope("y", {"x", "c"}), WithinAbs(-0.8, 1e-12));
  const auto rep = compare_adjustments(run(collider_spec(2, 2), 8), "y", "x", {{"c"}});
  REQUIRE_THAT(rep.get("bivariate").estimate, WithinAbs(0.0, 0.02));
  REQUIRE_THAT(rep.get("adjusted:c").estimate, WithinAbs(-0.8, 0.02));
  REQUIRE_FALSE(rep.get("bivariate").bias.has_value());
}

TEST_CASE("quadrant signs for confounders and colliders") {
  for (int sx : {1, -1})
    for (int sy : {1, -1}) {
      Lsem m({"c", "x", "y"});
      m.edge("c", "x", 2 * sx).edge("c", "y", 2 * sy).noise("c", 2.5).noise("x", 5).noise("y", 5);
      const double oracle = m.slope("y", {"x"});
      const double est = compare_adjustments(run(confounder_spec(2 * sx, 2 * sy), 11), "y", "x", {}).get("bivariate").estimate;
      CHECK((oracle > 0) == (sx * sy > 0));
      CHECK(std::abs(est - oracle) < 0.02);

      Lsem k({"x", "y", "c"});
      k.edge("x", "c", 2 * sx).edge("y", "c", 2 * sy).noise("x", 2.5).noise("y", 2.5).noise("c", 2.5);
      const double koracle = k.slope("y", {"x", "c"});
      const double kest = compare_adjustments(run(collider_spec(2 * sx, 2 * sy), 12), "y", "x", {{"c"}}).get("adjusted:c").estimate;
      CHECK((koracle < 0) == (sx * sy > 0));
      CHECK(std::abs(kest - koracle) < 0.02);
    }
}

TEST_CASE("failing adjustment sets are reported alongside the others") {
  auto d = run(confounder_spec(2, 2, 200), 3);
  Column dup = d.column("x");
  dup.name = "x2";
  d.add(dup);
  const auto rep = compare_adjustments(d, "y", "x", {{"x2"}, {"c"}});
  REQUIRE(rep.fits.size() == 3);
  REQUIRE_FALSE(rep.get("adjusted:x2").ok());
  REQUIRE_FALSE(rep.get("adjusted:x2").error.empty());
  REQUIRE(rep.get("adjusted:c").ok());
  REQUIRE_THROWS_AS(compare_adjustments(d, "y", "x", {{"nope"}}), Error);
}

TEST_CASE("an orthogonal covariate leaves the focal slope unchanged") {
  CorrTarget t{{"y", "x", "z"}, Eigen::MatrixXd::Identity(3, 3), {0, 0, 0}, {1, 1, 1}, true};
  t.corr(0, 1) = t.corr(1, 0) = 0.4;
  RngState rng(5);
  const auto d = mvn_exact(t, 500, rng);
  const auto rep = compare_adjustments(d, "y", "x", {{"z"}});
  REQUIRE(std::abs(rep.get("bivariate").estimate - rep.get("adjusted:z").estimate) < 1e-8);
}

TEST_CASE("iv_wald") {
  // y = 0.5 in + noise, x = in + ... gives ratio b_yin / b_xin.
  Dataset d;
  std::vector<double> in, x, y;
  for (int i = 0; i < 20; ++i) {
    in.push_back(i);
    x.push_back(2.0 * i + (i % 2 ? 0.1 : -0.1));
    y.push_back(1.0 * i + (i % 3 ? 0.05 : -0.1));
  }
  d.add(Column("IN", in));
  d.add(Column("X", x));
  d.add(Column("Y", y));
  const auto e = iv_wald(d, "Y", "X", "IN");
  REQUIRE_THAT(e.b_xin, WithinAbs(2, 0.01));
  REQUIRE_THAT(e.b_yin, WithinAbs(1, 0.01));
  REQUIRE_THAT(e.ratio, WithinAbs(e.b_yin / e.b_xin, 1e-15));
  REQUIRE_FALSE(e.weak);

  // Rescaling the instrument leaves the ratio unchanged.
  Dataset s = d;
  for (auto& v : s.column("IN").values) v *= -7.5;
  REQUIRE_THAT(iv_wald(s, "Y", "X", "IN").ratio, WithinAbs(e.ratio, 1e-12));

  RngState rng(4);
  Dataset w;
  w.add(Column("IN", normal_draws(rng, 500, 0, 1)));
  w.add(Column("X", normal_draws(rng, 500, 0, 1)));
  w.add(Column("Y", normal_draws(rng, 500, 0, 1)));
  try {
    iv_wald(w, "Y", "X", "IN");
    FAIL("expected a weak-instrument error");
  } catch (const Error& err) {
    REQUIRE(err.kind() == ErrorKind::WeakInstrument);
  }
  IvOptions off;
  off.enforce_floor = false;
  const auto weak = iv_wald(w, "Y", "X", "IN", off);
  REQUIRE(weak.weak);
  REQUIRE(std::isfinite(weak.ratio));
}

TEST_CASE("valid instrument recovers the causal slope") {
  const auto d = run(R"({"n": 100000, "sources": [{"name": "C", "kind": "normal", "params": {"mean": 0, "sd": 10}},
                                                  {"name": "IN", "kind": "normal", "params": {"mean": 0, "sd": 10}}],
      "equations": [{"target": "X", "linear": [["C", 1], ["IN", 1]], "error": {"sd": 10}},
                    {"target": "Y", "linear": [["C", 1], ["X", 1]], "error": {"sd": 10}}]})",
                     17);
  IvOptions opt;
  opt.diagnostics = {"C"};
  const auto e = iv_wald(d, "Y", "X", "IN", opt);
  REQUIRE_THAT(e.ratio, WithinAbs(1.0, 0.05));
  REQUIRE(std::abs(e.instrument_corr.at("C")) < 0.02);
  REQUIRE(e.se_ratio > 0);
  // The bivariate slope is confounded upward: Cov(X,Y)/Var(X) = 1 + 100/300.
  REQUIRE_THAT(compare_adjustments(d, "Y", "X", {}).get("bivariate").estimate, WithinAbs(4.0 / 3.0, 0.02));
}

TEST_CASE("mediation decomposition") {
  const auto d = run(R"({"n": 100000, "sources": [{"name": "X", "kind": "normal", "params": {"mean": 0, "sd": 10}}],
      "equations": [{"target": "ME", "linear": [["X", 1]], "error": {"coef": 2, "sd": 10}},
                    {"target": "Y", "linear": [["ME", 1], ["X", 0]], "error": {"coef": 2, "sd": 10}}]})",
                     19);
  const auto m = mediation(d, "Y", "X", "ME");
  REQUIRE_THAT(m.direct, WithinAbs(0, 0.02));
  REQUIRE_THAT(m.indirect, WithinAbs(1, 0.03));
  REQUIRE_THAT(m.total, WithinAbs(1, 0.03));
  REQUIRE_THAT(m.total, WithinAbs(m.direct + m.indirect, 1e-12));
  // Linear OLS decomposition is collapsible: total equals the bivariate slope.
  REQUIRE_THAT(m.total, WithinAbs(fit_ols(d, "Y ~ X").coef("X"), 1e-8));
  REQUIRE_THAT(m.sobel_se, WithinAbs(std::sqrt(m.b * m.b * m.se_a * m.se_a + m.a * m.a * m.se_b * m.se_b), 1e-15));
  REQUIRE_THAT(m.ci_hi - m.ci_lo, WithinAbs(2 * 1.96 * m.sobel_se, 1e-12));
}

TEST_CASE("Sobel z from published path estimates") {
  const double a = 1.036, se_a = 0.020, b = 0.990, se_b = 0.010;
  const double ind = a * b;
  const double z = ind / std::sqrt(b * b * se_a * se_a + a * a * se_b * se_b);
  REQUIRE_THAT(ind, WithinAbs(1.026, 0.001));
  REQUIRE_THAT(z, WithinAbs(46.0, 0.5));
}

TEST_CASE("unrelated mediator") {
  const auto d = run(R"({"n": 20000, "sources": [{"name": "X", "kind": "normal", "params": {"mean": 0, "sd": 1}},
                                                 {"name": "M", "kind": "normal", "params": {"mean": 0, "sd": 1}}],
      "equations": [{"target": "Y", "linear": [["X", 1]], "error": {"sd": 1}}]})",
                     2);
  const auto m = mediation(d, "Y", "X", "M");
  REQUIRE(std::abs(m.indirect) < 4 * m.sobel_se);
  REQUIRE_THAT(m.total, WithinAbs(m.direct, 0.01));
}

TEST_CASE("moderation") {
  Dataset d;
  RngState rng(3);
  auto x = normal_draws(rng, 200, 0, 1), mo = normal_draws(rng, 200, 0, 1);
  std::vector<double> y(200);
  for (std::size_t i = 0; i < 200; ++i) y[i] = x[i] * mo[i];
  d.add(Column("x", x));
  d.add(Column("mo", mo));
  d.add(Column("y", y));
  const auto f = moderated_fit(d, "y", "x", "mo");
  REQUIRE_THAT(f.coef("x:mo"), WithinAbs(1, 1e-10));
  REQUIRE_THAT(f.coef("x"), WithinAbs(0, 1e-10));
  REQUIRE_THAT(f.coef("mo"), WithinAbs(0, 1e-10));
  REQUIRE_THAT(f.r_squared, WithinAbs(1, 1e-10));
  REQUIRE_THAT(conditional_slope(f, "x", "mo", 3), WithinAbs(3, 1e-9));

  FitResult g;
  g.terms = {"(Intercept)", "x", "mo", "x:mo"};
  g.b = {0, 1, 0, 4};
  REQUIRE(conditional_slope(g, "x", "mo", 0) == 1);
  REQUIRE(conditional_slope(g, "x", "mo", 2) == 9);
  g.terms[3] = "x:other";
  REQUIRE_THROWS_AS(conditional_slope(g, "x", "mo", 2), Error);

  Dataset c = d;
  c.set(Column("mo", std::vector<double>(200, 1.0)));
  REQUIRE_THROWS_AS(moderated_fit(c, "y", "x", "mo"), Error);
}

TEST_CASE("moderator-measurement generating model") {
  const auto d = run(R"({"n": 10000, "sources": [{"name": "X", "kind": "normal", "params": {"mean": 0, "sd": 10}},
                                                 {"name": "MO", "kind": "normal", "params": {"mean": 0, "sd": 10}}],
      "equations": [{"target": "Y", "linear": [["X", 1]], "interactions": [["X", "MO", 4]], "error": {"sd": 10}}]})",
                     15);
  REQUIRE_THAT(moderated_fit(d, "Y", "X", "MO").coef("X:MO"), WithinAbs(4, 0.02));
}

TEST_CASE("subgroup effects") {
  const auto d = run(R"({"n": 500000,
      "sources": [{"name": "EP", "kind": "pattern", "params": {"values": [0, 1], "times": 250000}},
                  {"name": "PEA", "kind": "clamped_int_normal", "params": {"mean": 12, "sd": 2.5, "lo": 4, "hi": 19}}],
      "equations": [{"target": "SIEM", "linear": [["EP", 7]], "interactions": [["PEA", "EP", -0.5]],
                     "error": {"coef": 1, "mean": 5, "sd": 0.25}}]})",
                     1992);
  const auto full = fit_ols(d, "SIEM ~ EP");
  const auto same = subgroup_effect(d, "SIEM", "EP", {{"PEA", ">", -1e9}});
  REQUIRE(same.b == full.b);
  REQUIRE(subgroup_effect(d, "SIEM", "EP", {{"PEA", "<=", 8}}).coef("EP") > full.coef("EP"));
  REQUIRE(subgroup_effect(d, "SIEM", "EP", {{"PEA", ">=", 15}}).coef("EP") < 0);
  REQUIRE_THROWS_AS(subgroup_effect(d, "SIEM", "EP", {{"PEA", ">", 100}}), Error);
}
