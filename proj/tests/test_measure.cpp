#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>

#include "biaslab/measure.hpp"
#include "biaslab/rand.hpp"

using namespace biaslab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::map<double, int> counts(const Column& c) {
  std::map<double, int> m;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (!c.is_missing(i)) ++m[c.values[i]];
  return m;
}

// Baseline linear spec: Y = X + N(0, 30), X ~ N(0, 10).
Dataset baseline(std::uint64_t seed, std::size_t n = 10000) {
  RngState rng(seed);
  auto x = normal_draws(rng, n, 0, 10);
  auto y = normal_draws(rng, n, 0, 30);
  for (std::size_t i = 0; i < n; ++i) y[i] += x[i];
  Dataset d;
  d.add(Column("X", x));
  d.add(Column("Y", y));
  return d;
}

}  // namespace

TEST_CASE("dichotomize") {
  const auto d = baseline(1);
  const auto med = counts(dichotomize(d.column("Y"), RecodeRule::median()));
  REQUIRE(med.at(0) == 5000);
  REQUIRE(med.at(1) == 5000);
  const auto q = counts(dichotomize(d.column("Y"), RecodeRule::quantile(0.25)));
  REQUIRE(q.at(0) == 2500);
  REQUIRE(q.at(1) == 7500);
  const auto t = counts(dichotomize(d.column("Y"), RecodeRule::threshold(90)));
  REQUIRE(t.at(1) >= 5);
  REQUIRE(t.at(1) <= 60);

  Column m("v", {1, 5, 3, 9}, {0, 1, 0, 0});
  const auto r = dichotomize(m, RecodeRule::threshold(3));
  REQUIRE(r.values[0] == 0);
  REQUIRE(r.is_missing(1));
  REQUIRE(r.values[2] == 0);  // value <= cut -> 0
  REQUIRE(r.values[3] == 1);

  MeasureNote note;
  dichotomize(Column("c", {2, 2, 2}), RecodeRule::median(), &note);
  REQUIRE_FALSE(note.warnings.empty());
  REQUIRE_THROWS_AS(dichotomize(m, RecodeRule::quantiles({0.5})), Error);
}

TEST_CASE("ordinalize quantile bins") {
  const auto d = baseline(2);
  const auto q = counts(ordinalize(d.column("Y"), RecodeRule::quantiles({0.25, 0.5, 0.75})));
  REQUIRE(q == std::map<double, int>{{1, 2500}, {2, 2500}, {3, 2500}, {4, 2500}});
  REQUIRE(counts(ordinalize(d.column("Y"), RecodeRule::quantiles({0.5, 0.6, 0.9}))) ==
          std::map<double, int>{{1, 5000}, {2, 1000}, {3, 3000}, {4, 1000}});
  REQUIRE(counts(ordinalize(d.column("Y"), RecodeRule::quantiles({0.1, 0.2, 0.3}))) ==
          std::map<double, int>{{1, 1000}, {2, 1000}, {3, 1000}, {4, 7000}});
}

TEST_CASE("ordinalize cutpoints") {
  const Column c("v", {0, 1, 1.5, 2, 3, 10});
  // [-inf, 1) -> 1, [1, 2) -> 2, [2, max] -> 3
  REQUIRE(ordinalize(c, RecodeRule::cutpoints({1, 2})).values == std::vector<double>{1, 2, 2, 3, 3, 3});
  REQUIRE_THROWS_AS(ordinalize(c, RecodeRule::cutpoints({2, 1})), Error);
  REQUIRE_THROWS_AS(ordinalize(c, RecodeRule::quantiles({0.5, 0.5})), Error);
  REQUIRE_THROWS_AS(ordinalize(c, RecodeRule::quantiles({0, 0.5})), Error);
}

TEST_CASE("recodes commute with monotone transforms") {
  const auto d = baseline(3, 2000);
  const auto y = d.column("Y");
  const auto ey = transform(transform(y, TransformRule::scale(0.01)), TransformRule::power(3));
  for (const auto& rule : {RecodeRule::median(), RecodeRule::quantile(0.3), RecodeRule::quantiles({0.2, 0.7})})
    REQUIRE(recode(y, rule).values == recode(ey, rule).values);
  REQUIRE(spearman(d.column("X"), y) == spearman(d.column("X"), ey));

  // Order independence: recoding a permuted column permutes the codes.
  std::vector<std::size_t> perm(y.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::reverse(perm.begin(), perm.end());
  Column py("Y", {});
  for (auto i : perm) py.push_back(y.values[i]);
  const auto a = recode(y, RecodeRule::quantiles({0.25, 0.5, 0.75}));
  const auto b = recode(py, RecodeRule::quantiles({0.25, 0.5, 0.75}));
  for (std::size_t i = 0; i < perm.size(); ++i) REQUIRE(b.values[i] == a.values[perm[i]]);
}

TEST_CASE("transforms") {
  const Column c("v", {2, 4, 6});
  REQUIRE(transform(c, TransformRule::minmax()).values == std::vector<double>{0, 0.5, 1});
  REQUIRE(transform(c, TransformRule::minmax(1, 1)).values == std::vector<double>{1.0 / 6, 0.5, 5.0 / 6});
  REQUIRE(transform(c, TransformRule::scale(-2)).values == std::vector<double>{-4, -8, -12});
  REQUIRE(transform(c, TransformRule::shift(1)).values == std::vector<double>{3, 5, 7});
  REQUIRE(transform(c, TransformRule::zscore()).values == std::vector<double>{-1, 0, 1});
  REQUIRE_THAT(transform(c, TransformRule::log_e()).values[0], WithinAbs(std::log(2.0), 1e-15));
  REQUIRE_THAT(transform(c, TransformRule::log_10()).values[2], WithinAbs(std::log10(6.0), 1e-15));
  REQUIRE(transform(Column("r", {2.5, -2.5, 0.4, -0.5}), TransformRule::round_whole()).values == std::vector<double>{3, -3, 0, -1});

  const auto lg = transform(Column("l", {-1, 0, 1}), TransformRule::log_e());
  REQUIRE(lg.is_missing(0));
  REQUIRE(lg.is_missing(1));
  REQUIRE(lg.values[2] == 0);

  const auto sq = transform(Column("s", {-2, 3}), TransformRule::power(2));
  REQUIRE(sq.values == std::vector<double>{4, 9});

  REQUIRE_THROWS_AS(transform(c, TransformRule::scale(0)), Error);
  REQUIRE_THROWS_AS(transform(c, TransformRule::window(5, 1)), Error);
  try {
    transform(Column("k", {1, 1, 1}), TransformRule::zscore());
    FAIL("expected a degenerate error");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::Degenerate);
  }
}

TEST_CASE("fractional power and window produce missing values") {
  std::vector<double> v;
  for (int i = 0; i < 10000; ++i) v.push_back(i < 4997 ? -(i + 1.0) : i);
  MeasureNote note;
  const auto p = transform(Column("v", v), TransformRule::power(0.2), &note);
  REQUIRE(p.n_missing() == 4997);
  REQUIRE(note.n_new_missing == 4997);

  // P(|X| >= 5) for X ~ N(0, 10) is 2 * (1 - Phi(0.5)) = 0.617.
  RngState rng(14);
  const auto w = transform(Column("x", normal_draws(rng, 10000, 0, 10)), TransformRule::window(-5, 5));
  REQUIRE(std::abs(static_cast<double>(w.n_missing()) - 6171) < 150);
}

TEST_CASE("auto family selection") {
  REQUIRE(auto_family(Column("y", {0, 1, 0, 1})) == Family::Binomial);
  REQUIRE(auto_family(Column("y", {1, 2, 3, 4, 2})) == Family::Ordered);
  REQUIRE(auto_family(Column("y", {0.5, 1.5, 2.5})) == Family::Gaussian);
  std::vector<double> many;
  for (int i = 0; i < 20; ++i) many.push_back(i);
  REQUIRE(auto_family(Column("y", many)) == Family::Gaussian);
}

TEST_CASE("attenuation report") {
  const auto d = baseline(1992);
  const std::vector<MeasureVariant> variants{
      {"median", "y", {RecodeRule::median()}, std::nullopt},
      {"extreme", "y", {RecodeRule::threshold(90)}, std::nullopt},
      {"scale-20", "y", {TransformRule::scale(20)}, std::nullopt},
      {"zscore", "y", {TransformRule::zscore()}, std::nullopt},
      {"minmax", "y", {TransformRule::minmax()}, std::nullopt},
      {"quartiles", "y", {RecodeRule::quantiles({0.25, 0.5, 0.75})}, std::nullopt},
      {"bad", "y", {TransformRule::scale(0)}, std::nullopt},
  };
  const auto rows = attenuation_report(d, "Y", "X", variants);
  REQUIRE(rows.size() == variants.size() + 1);
  const auto& base = rows[0];
  REQUIRE(base.label == "baseline");
  REQUIRE(base.family == Family::Gaussian);
  REQUIRE(base.chisq > rows[1].chisq);
  REQUIRE(rows[1].chisq > rows[2].chisq);
  REQUIRE(rows[1].family == Family::Binomial);
  REQUIRE(rows[6].family == Family::Ordered);

  const auto& s20 = rows[3];
  REQUIRE(s20.spearman == base.spearman);
  REQUIRE_THAT(s20.stat, WithinRel(base.stat, 1e-10));
  REQUIRE_THAT(s20.chisq, WithinRel(base.chisq, 1e-10));
  REQUIRE_THAT(s20.slope, WithinRel(20 * base.slope, 1e-10));
  REQUIRE_THAT(rows[4].stat, WithinRel(base.stat, 1e-10));
  REQUIRE_THAT(rows[5].stat, WithinRel(base.stat, 1e-10));
  REQUIRE_THAT(rows[5].spearman, WithinAbs(base.spearman, 1e-12));
  REQUIRE_FALSE(rows[7].error.empty());
  REQUIRE(std::isnan(rows[7].slope));

  const auto csv = attenuation_csv(rows);
  REQUIRE(csv.rfind("label,spearman,slope,SE,stat,chisq,n_used", 0) == 0);
  REQUIRE(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(rows.size() + 1));
}

TEST_CASE("attenuation on the predictor side") {
  const auto d = baseline(7);
  const auto rows = attenuation_report(d, "Y", "X",
                                       {{"window", "x", {TransformRule::window(-5, 5)}, std::nullopt},
                                        {"scale", "x", {TransformRule::scale(0.2)}, std::nullopt}});
  REQUIRE(rows[1].n_used < 5000);
  REQUIRE(rows[1].n_new_missing == 10000 - rows[1].n_used);
  REQUIRE_THAT(rows[2].slope, WithinRel(rows[0].slope / 0.2, 1e-10));
  REQUIRE_THAT(rows[2].stat, WithinRel(rows[0].stat, 1e-10));
}
