#include <catch_amalgamated.hpp>

#include <set>

#include "biaslab/catalog.hpp"

using namespace biaslab;
using Catch::Matchers::WithinAbs;

namespace {

json small_config() {
  return json::parse(R"({
    "id": "demo", "seed": 11,
    "data": {"scm": {"n": 400, "sources": [{"name": "c", "kind": "normal", "params": {"mean": 0, "sd": 2}}],
             "equations": [{"target": "x", "linear": [["c", 2]], "error": {"sd": 2}},
                           {"target": "y", "linear": [["c", 2]], "error": {"sd": 2}}]}},
    "steps": [{"op": "inject_outlier", "values": {"x": 40, "y": 0}}],
    "analyses": [{"op": "fit", "name": "naive", "formula": "y ~ x"},
                 {"op": "compare_adjustments", "name": "adj", "y": "y", "x": "x", "sets": [["c"]], "truth": 0}],
    "outputs": [{"what": "data", "path": "demo/data.csv"},
                {"what": "analysis", "name": "naive", "path": "demo/naive.csv"},
                {"what": "report", "path": "demo/report.json"}]})");
}

ScenarioConfig with_reps(const std::string& id, std::size_t reps) {
  json j = catalog_json(id);
  j["data"]["mc"]["reps"] = reps;
  return config_from_json(j);
}

}  // namespace

TEST_CASE("config round trip") {
  const auto c = config_from_json(small_config());
  const json once = config_to_json(c);
  REQUIRE(config_to_json(config_from_string(once.dump())) == once);
  REQUIRE(c.outputs.size() == 3);
  REQUIRE(c.seed == 11);
}

TEST_CASE("config validation") {
  auto expect_validation = [](const json& j) {
    try {
      config_from_json(j);
      FAIL("expected a validation error");
    } catch (const Error& e) {
      REQUIRE(e.kind() == ErrorKind::Validation);
    }
  };
  auto j = small_config();
  j["colour"] = "red";
  expect_validation(j);

  j = small_config();
  j["analyses"][1]["name"] = "naive";
  expect_validation(j);

  j = small_config();
  j["outputs"][1]["path"] = "demo/data.csv";
  expect_validation(j);

  j = small_config();
  j["analyses"][0]["formula"] = "y ~ nothing";
  expect_validation(j);

  j = small_config();
  j["outputs"][1]["name"] = "missing";
  expect_validation(j);

  j = small_config();
  j["seed"] = -4;
  expect_validation(j);

  REQUIRE_THROWS_AS(config_from_string("{not json"), Error);
}

TEST_CASE("scenario runs are deterministic") {
  const auto c = config_from_json(small_config());
  const auto a = run_scenario(c), b = run_scenario(c, {4, "csv"});
  REQUIRE(a.files == b.files);
  REQUIRE(a.files.size() == 3);
  REQUIRE(a.data.n_rows() == 401);
  REQUIRE(a.n_failed() == 0);

  auto other = c;
  other.seed = 12;
  REQUIRE(run_scenario(other).files[0].second != a.files[0].second);

  // Data written out and read back gives the same fits.
  const Dataset back = from_csv(a.files[0].second);
  REQUIRE(back == a.data);
}

TEST_CASE("the catalog covers the worked examples") {
  const auto& cat = catalog();
  REQUIRE(cat.size() >= 15);
  std::set<std::string> ids;
  for (const auto& e : cat) {
    REQUIRE(ids.insert(e.id).second);
    const auto c = catalog_config(e.id);
    REQUIRE(c.id == e.id);
    REQUIRE(config_to_json(config_from_json(config_to_json(c))) == config_to_json(c));
  }
  REQUIRE_THROWS_AS(catalog_json("no-such-entry"), Error);
}

TEST_CASE("catalog collinearity entry reports exact diagnostics") {
  const auto run = run_scenario(catalog_config("entry3-collinearity-high"));
  const auto& r = run.analysis("collinearity").result;
  for (std::size_t j = 1; j < 5; ++j) REQUIRE_THAT(r["vif"][j].get<double>(), WithinAbs(3.25, 1e-8));
  const auto& fit = run.analysis("fit");
  REQUIRE(fit.table_csv.find("X,") != std::string::npos);
  REQUIRE(run.files.size() == 4);
}

TEST_CASE("Monte Carlo scenarios are thread-count invariant") {
  const auto c = with_reps("entry8-collider-pm", 300);
  const auto one = run_scenario(c, {1, "csv"}), three = run_scenario(c, {3, "csv"});
  REQUIRE(one.files == three.files);
  REQUIRE(one.analysis("share-positive").ok());
}

TEST_CASE("repeated samples from the interaction population") {
  json j = catalog_json("entry5-interactions");
  json an = json::array();
  for (auto a : j["analyses"]) {
    if (a["name"] == "random-samples" || a["name"] == "samples-pea-15-plus") {
      a["reps"] = 1000;
      an.push_back(a);
    }
  }
  j["analyses"] = an;
  j["outputs"] = json::array();
  const auto run = run_scenario(config_from_json(j), {2, "csv"});
  const double pop = fit_ols(run.data, "SIEM ~ EP").coef("EP");
  // Truncated N(12, 2.5) has mean 11.5, so the population slope is 7 - 0.5 * 11.5.
  REQUIRE_THAT(pop, WithinAbs(1.25, 0.02));
  REQUIRE_THAT(summarize_series(*run.analysis("random-samples").mc, "b_EP").mean, WithinAbs(pop, 0.02));
  REQUIRE(summarize_series(*run.analysis("samples-pea-15-plus").mc, "b_EP").mean < 0);
}

TEST_CASE("points emit observed, fitted and residual values") {
  const auto run = run_scenario(catalog_config("entry1-linearity"));
  const auto& p = run.analysis("curvilinear-points");
  REQUIRE(p.ok());
  REQUIRE(p.table_csv.rfind("X,YC,fitted,residual\n", 0) == 0);
  const Dataset back = from_csv(p.table_csv);
  REQUIRE(back.n_rows() == 100);
  double sum = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    REQUIRE_THAT(back.column("YC").values[i] - back.column("fitted").values[i], WithinAbs(back.column("residual").values[i], 1e-9));
    sum += back.column("residual").values[i];
  }
  REQUIRE_THAT(sum, WithinAbs(0, 1e-9));

  auto j = small_config();
  j["analyses"].push_back(json{{"op", "points"}, {"name", "pts"}, {"formula", "y ~ x"}, {"x", "q"}});
  REQUIRE_THROWS_AS(config_from_json(j), Error);
}

TEST_CASE("curvilinear catalog data needs the square term") {
  const Dataset d = run_scenario(catalog_config("entry1-linearity")).data;
  const FitResult f = fit_ols(d, "YC ~ X + X^2");
  const auto k = f.index_of("X^2");
  REQUIRE(f.b[k] < 0);
  REQUIRE(f.p[k] < 0.05);
  REQUIRE(std::abs(fit_ols(d, "Y ~ X + X^2").stat[k]) < std::abs(f.stat[k]));
}
