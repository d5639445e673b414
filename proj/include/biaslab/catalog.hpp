#pragma once

// Built-in scenario catalog. Each entry is an ordinary scenario config and can
// be dumped with `biaslab catalog --show ID` and edited.

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "scenario.hpp"

namespace biaslab {

struct CatalogEntry {
  std::string id;
  std::string title;
  std::function<json()> make;
};

namespace detail::cat {

inline json normal(const std::string& name, double mean, double sd) {
  return json{{"name", name}, {"kind", "normal"}, {"params", json{{"mean", mean}, {"sd", sd}}}};
}

inline json err(json coef, json mean, json sd) { return json{{"coef", coef}, {"mean", mean}, {"sd", sd}}; }

inline json eq(const std::string& target, json linear, json error = nullptr, json extra = json::object()) {
  json e{{"target", target}, {"linear", linear}};
  if (!error.is_null()) e["error"] = error;
  for (auto it = extra.begin(); it != extra.end(); ++it) e[it.key()] = it.value();
  return e;
}

inline json scm(std::size_t n, json sources, json equations) {
  return json{{"scm", json{{"n", n}, {"sources", sources}, {"equations", equations}}}};
}

inline json fit(const std::string& name, const std::string& formula, const std::string& family = "gaussian") {
  json a{{"op", "fit"}, {"name", name}, {"formula", formula}};
  if (family != "gaussian") a["family"] = family;
  return a;
}

inline json compare(const std::string& y, const std::string& x, json sets, json truth = nullptr) {
  json a{{"op", "compare_adjustments"}, {"name", "adjustments"}, {"y", y}, {"x", x}, {"sets", sets}};
  if (!truth.is_null()) a["truth"] = truth;
  return a;
}

inline json out(const std::string& what, const std::string& path, const std::string& name = {}) {
  json o{{"what", what}};
  if (!name.empty()) o["name"] = name;
  o["path"] = path;
  return o;
}

inline json config(const std::string& id, const std::string& description, std::uint64_t seed, json data, json steps,
                   json analyses, json extra_outputs = json::array()) {
  json outputs = json::array({out("summary", id + "/summary.txt"), out("report", id + "/report.json")});
  for (const auto& o : extra_outputs) outputs.push_back(o);
  return json{{"id", id},         {"description", description}, {"seed", seed},         {"data", data},
              {"steps", steps},   {"analyses", analyses},       {"outputs", outputs}};
}

inline json analysis_csvs(const std::string& id, const json& analyses) {
  json o = json::array();
  for (const auto& a : analyses) o.push_back(out("analysis", id + "/" + a.at("name").get<std::string>() + ".csv", a.at("name")));
  return o;
}

// -- Entry 1 ----------------------------------------------------------------

inline json entry1() {
  const json data = scm(100, json::array({normal("X", 5, 1)}),
                        json::array({eq("Y", json::array({json::array({"X", 0.25})}), err(0.025, 5, 1)),
                                     eq("YC", json::array({json::array({"X", 0.25})}), err(0.025, 5, 1),
                                        json{{"squares", json::array({json::array({"X", -0.025})})}})}));
  const json an = json::array({fit("linear", "Y ~ X"), fit("curvilinear-linear-fit", "YC ~ X"),
                               fit("curvilinear-square-fit", "YC ~ X + I(X^2)"),
                               json{{"op", "points"}, {"name", "curvilinear-points"}, {"formula", "YC ~ X + I(X^2)"}, {"x", "X"}}});
  return config("entry1-linearity", "Linear and curvilinear X-Y associations fitted with and without a square term", 1992,
                data, json::array(), an, analysis_csvs("entry1-linearity", an));
}

inline json entry1_confounder() {
  const json data =
      scm(100, json::array({normal("C", 5, 1)}),
          json::array({eq("X", json::array({json::array({"C", 0.25})}), err(0.025, 5, 1)),
                       eq("Y", json::array({json::array({"X", 0.25}), json::array({"C", -4})}), err(0.025, 5, 1),
                          json{{"squares", json::array({json::array({"C", 0.5})})}})}));
  const json an = json::array({fit("unadjusted", "Y ~ X"), fit("linear-adjustment", "Y ~ X + C"),
                               fit("square-adjustment", "Y ~ X + C + I(C^2)")});
  return config("entry1-curvilinear-confounder", "A confounder with a curvilinear effect on Y", 1992, data, json::array(), an,
                analysis_csvs("entry1-curvilinear-confounder", an));
}

// -- Entry 2 ----------------------------------------------------------------

inline json entry2(const std::string& suffix, const std::string& description, const std::vector<double>& sds) {
  json levels = json::object();
  for (std::size_t k = 0; k < sds.size(); ++k) levels[std::to_string(k + 1)] = err(1, 10, sds[k]);
  const json data =
      scm(1000,
          json::array({json{{"name", "X"}, {"kind", "pattern"}, {"params", json{{"values", {1, 2, 3, 4, 5}}, {"each", 200}}}}}),
          json::array({eq("Y", json::array({json::array({"X", 2})}), nullptr,
                          json{{"group_error", json{{"by", "X"}, {"levels", levels}}}})}));
  const json an = json::array({fit("fit", "Y ~ X"), json{{"op", "summary"}, {"name", "summary"}, {"columns", json::array({"X", "Y"})}},
                               json{{"op", "points"}, {"name", "residuals"}, {"formula", "Y ~ X"}, {"x", "X"}}});
  const std::string id = "entry2-" + suffix;
  return config(id, description, 1992, data, json::array(), an, analysis_csvs(id, an));
}

inline json entry2_multivariable(bool heteroscedastic) {
  const json u = json{{"kind", "uniform_int"}, {"params", json{{"lo", 1}, {"hi", 5}}}};
  json c = u, a = u;
  c["name"] = "C";
  a["name"] = "A";
  const json y_err = heteroscedastic ? json{{"coef", 2}, {"mean", 15}, {"sd_from", json{{"product", json::array({"X", "C"})}, {"power", 0.75}}}}
                                     : err(5, 15, 1);
  const json data = scm(1000, json::array({c, a}),
                        json::array({eq("X", json::array({json::array({"C", heteroscedastic ? 0.1 : 1.0}), json::array({"A", 2})})),
                                     eq("Y", json::array({json::array({"X", 2}), json::array({"C", 1})}), y_err)}));
  const json an = json::array({fit("fit", "Y ~ X + C")});
  const std::string id = heteroscedastic ? "entry2-multivariable" : "entry2-multivariable-homoscedastic";
  return config(id,
                heteroscedastic ? "Multivariable model with error SD sqrt((X*C)^1.5)" : "Multivariable model with constant error SD",
                1992, data, json::array(), an, analysis_csvs(id, an));
}

// -- Entry 3 ----------------------------------------------------------------

inline json entry3(const std::string& suffix, double r) {
  json corr = json::array();
  for (int i = 0; i < 6; ++i) {
    json row = json::array();
    for (int k = 0; k < 6; ++k) {
      double v = 0;
      if (i == k) v = 1;
      else if ((i == 0 && k == 1) || (i == 1 && k == 0)) v = 0.5;
      else if (i == 0 || k == 0) v = 0.1;
      else v = r;
      row.push_back(v);
    }
    corr.push_back(row);
  }
  const json data{{"corr", json{{"names", json::array({"Y", "X", "Z1", "Z2", "Z3", "Z4"})},
                                {"corr", corr},
                                {"means", {0, 0, 0, 0, 0, 0}},
                                {"sds", {1, 1, 1, 1, 1, 1}},
                                {"empirical_exact", true}}},
                  {"n", 1000}};
  const json an = json::array({fit("fit", "Y ~ X + Z1 + Z2 + Z3 + Z4"),
                               json{{"op", "collinearity"}, {"name", "collinearity"}, {"formula", "Y ~ X + Z1 + Z2 + Z3 + Z4"}}});
  const std::string id = "entry3-collinearity-" + suffix;
  return config(id, "Exact-moment draw with predictor intercorrelation " + format_number(r), 1992, data, json::array(), an,
                analysis_csvs(id, an));
}

// -- Entry 4 ----------------------------------------------------------------

inline json entry4() {
  const json data = scm(100, json::array({normal("X", 10, 1)}), json::array({eq("Y", json::array({json::array({"X", 0.6})}), err(0.5, 10, 1))}));
  const json points = json::array({json{{"X", 16}, {"Y", 14.6}}, json{{"X", 50}, {"Y", 35}}, json{{"X", 10}, {"Y", 17}},
                                   json{{"X", 10}, {"Y", 50}}, json{{"X", 16}, {"Y", "mean(Y)"}}, json{{"X", 50}, {"Y", "mean(Y)"}},
                                   json{{"X", "mean(X)"}, {"Y", "mean(Y)"}}});
  const json an = json::array({fit("fit", "Y ~ X"), json{{"op", "outlier_sweep"}, {"name", "outliers"}, {"formula", "Y ~ X"}, {"focal", "X"}, {"points", points}}});
  return config("entry4-outliers", "Single injected outliers at increasing leverage", 1992, data, json::array(), an,
                analysis_csvs("entry4-outliers", an));
}

// -- Entry 5 ----------------------------------------------------------------

inline json entry5() {
  const json data = scm(
      500000,
      json::array({json{{"name", "EP"}, {"kind", "pattern"}, {"params", json{{"values", {0, 1}}, {"times", 250000}}}},
                   json{{"name", "PEA"}, {"kind", "clamped_int_normal"}, {"params", json{{"mean", 12}, {"sd", 2.5}, {"lo", 4}, {"hi", 19}}}}}),
      json::array({eq("SIEM", json::array({json::array({"EP", 7}), json::array({"PEA", 0})}), err(1, 5, 0.25),
                      json{{"interactions", json::array({json::array({"PEA", "EP", -0.5})})}})}));
  const json plan = json::array({json{{"kind", "fit"}, {"formula", "SIEM ~ EP"}, {"record", json{{"b_EP", "EP"}}}}});
  auto sampling = [&](const std::string& name, json where) {
    json a{{"op", "repeated_samples"}, {"name", name}, {"k", 1000}, {"reps", 10000}, {"plan", plan}};
    if (!where.is_null()) a["where"] = where;
    return a;
  };
  const json an = json::array({
      fit("population", "SIEM ~ EP"),
      fit("population-interaction", "SIEM ~ EP + PEA + EP:PEA"),
      sampling("random-samples", nullptr),
      sampling("samples-pea-15-plus", json::array({json{{"var", "PEA"}, {"op", ">="}, {"value", 15}}})),
      sampling("samples-pea-11.5-15", json::array({json{{"var", "PEA"}, {"op", ">="}, {"value", 11.5}}, json{{"var", "PEA"}, {"op", "<="}, {"value", 15}}})),
      sampling("samples-pea-8-11.4", json::array({json{{"var", "PEA"}, {"op", ">="}, {"value", 8}}, json{{"var", "PEA"}, {"op", "<="}, {"value", 11.4}}})),
      sampling("samples-pea-8-minus", json::array({json{{"var", "PEA"}, {"op", "<="}, {"value", 8}}})),
  });
  json outs = analysis_csvs("entry5-interactions", an);
  outs.push_back(out("mc", "entry5-interactions/samples-pea-15-plus-replicates.csv", "samples-pea-15-plus"));
  return config("entry5-interactions", "Treatment effect under an unknown treatment-by-age interaction, with filtered samples", 1992,
                data, json::array(), an, outs);
}

// -- Entry 6 ----------------------------------------------------------------

inline json entry6_sources() {
  return json::array({json{{"name", "DI1"}, {"kind", "pattern"}, {"params", json{{"values", {0, 1}}, {"times", 25000}}}},
                      json{{"name", "DV1"}, {"kind", "clamped_int_normal"}, {"params", json{{"mean", 2.5}, {"sd", 0.75}}}},
                      json{{"name", "SCV1"}, {"kind", "clamped_int_normal"}, {"params", json{{"mean", 35}, {"sd", 5}}}},
                      json{{"name", "CV1"}, {"kind", "clamped_int_normal"}, {"params", json{{"mean", 35000}, {"sd", 5000}}}}});
}

inline json entry6_outcome() {
  return eq("Y", json::array({json::array({"Tr", 10}), json::array({"DI1", 1.25}), json::array({"DV1", 0.25}),
                              json::array({"SCV1", 0.0075}), json::array({"CV1", 0.0075})}));
}

inline json entry6() {
  const json covs = json::array({"DI1", "DV1", "SCV1", "CV1"});
  const json steps = json::array({json{{"op", "replicate_by"}, {"column", "Tr"}, {"values", {1, 0}}},
                                  json{{"op", "equation"}, {"equation", entry6_outcome()}}});
  json an = json::array({json{{"op", "balance"}, {"name", "population-balance"}, {"group", "Tr"}, {"covariates", covs}},
                         fit("population", "Y ~ Tr")});
  for (int k : {50, 100, 250, 500}) {
    an.push_back(json{{"op", "repeated_samples"},
                      {"name", "samples-" + std::to_string(k)},
                      {"k", k},
                      {"reps", 1000},
                      {"stratify_by", "Tr"},
                      {"plan", json::array({json{{"kind", "fit"}, {"formula", "Y ~ Tr"}, {"record", json{{"b_Tr", "Tr"}}}},
                                            json{{"kind", "balance"}, {"group", "Tr"}, {"covariates", covs},
                                                 {"record", json{{"d_DI1", "delta_mean:DI1"}, {"d_DV1", "delta_mean:DV1"},
                                                                 {"d_SCV1", "delta_mean:SCV1"}, {"d_CV1", "delta_mean:CV1"}}}}})}});
  }
  return config("entry6-balance", "Covariate imbalance in samples from identical treatment and control populations", 1992,
                scm(50000, entry6_sources(), json::array()), steps, an, analysis_csvs("entry6-balance", an));
}

inline json entry6_block() {
  const json covs = json::array({"DI1", "DV1", "SCV1", "CV1"});
  const json steps = json::array({json{{"op", "sample"}, {"k", 500}},
                                  json{{"op", "block_randomize"}, {"strata", "DI1"}, {"as", "Tr"}},
                                  json{{"op", "equation"}, {"equation", entry6_outcome()}}});
  const json an = json::array({json{{"op", "balance"}, {"name", "balance"}, {"group", "Tr"}, {"covariates", covs}}, fit("fit", "Y ~ Tr")});
  return config("entry6-block-randomization", "Block randomization within DI1 strata", 1992, scm(50000, entry6_sources(), json::array()),
                steps, an, analysis_csvs("entry6-block-randomization", an));
}

// -- Entry 7 ----------------------------------------------------------------

inline json entry7() {
  const json data = scm(500, json::array({normal("c", 0, 2.5)}),
                        json::array({eq("x", json::array({json::array({"c", 2})}), err(2, 0, 2.5)),
                                     eq("y", json::array({json::array({"c", 2})}), err(2, 0, 2.5))}));
  const json an = json::array({compare("y", "x", json::array({json::array({"c"})}), 0)});
  return config("entry7-confounder", "A confounder of a null X-Y association", 1992, data, json::array(), an,
                analysis_csvs("entry7-confounder", an));
}

inline json range(double lo, double hi) { return json{{"lo", lo}, {"hi", hi}}; }

inline json signed_range(int sign) { return sign > 0 ? range(1, 100) : range(-100, -1); }

inline std::string quadrant_name(int a, int b) { return std::string(a > 0 ? "p" : "m") + (b > 0 ? "p" : "m"); }

inline json mc_outputs(const std::string& id) { return json::array({out("mc", id + "/replicates.csv")}); }

inline json entry7_mc(int sx, int sy) {
  const std::string id = "entry7-confounder-" + quadrant_name(sx, sy);
  json params = json::object();
  params["cm"] = range(-5, 5);
  params["cs"] = range(1, 5);
  params["bx"] = signed_range(sx);
  params["ex"] = range(1, 100);
  params["xm"] = range(-5, 5);
  params["xs"] = range(1, 5);
  params["by"] = signed_range(sy);
  params["ey"] = range(1, 100);
  params["ym"] = range(-5, 5);
  params["ys"] = range(1, 5);
  const json tmpl{
      {"reps", 10000},
      {"n", 10000},
      {"params", params},
      {"scm", json{{"sources", json::array({json{{"name", "c"}, {"kind", "normal"}, {"params", json{{"mean", "$cm"}, {"sd", "$cs"}}}}})},
                   {"equations", json::array({eq("x", json::array({json::array({"c", "$bx"})}), err("$ex", "$xm", "$xs")),
                                              eq("y", json::array({json::array({"c", "$by"})}), err("$ey", "$ym", "$ys"))})}}},
      {"plan", json::array({json{{"kind", "fit"}, {"formula", "y ~ x"}, {"record", json{{"bXY", "x"}}}}})},
      {"derived", json::array()}};
  const json an = json::array({json{{"op", "mc_summary"}, {"name", "summary"}, {"series", json::array({"bXY"})}},
                               json{{"op", "mc_share"}, {"name", "share-positive"}, {"series", "bXY"}, {"test", ">"}, {"value", 0}},
                               json{{"op", "mc_histogram"}, {"name", "histogram"}, {"series", "bXY"}, {"bins", 50}}});
  json outs = mc_outputs(id);
  outs.push_back(out("analysis", id + "/histogram.csv", "histogram"));
  return config(id,
                std::string("Randomized confounder specifications, c->x ") + (sx > 0 ? "positive" : "negative") + ", c->y " +
                    (sy > 0 ? "positive" : "negative"),
                1992, json{{"mc", tmpl}}, json::array(), an, outs);
}

// -- Entry 8 ----------------------------------------------------------------

inline json entry8() {
  const json data = scm(500, json::array({normal("x", 0, 2.5), normal("y", 0, 2.5)}),
                        json::array({eq("c", json::array({json::array({"x", 2}), json::array({"y", 2})}), err(1, 0, 2.5))}));
  const json an = json::array({compare("y", "x", json::array({json::array({"c"})}), 0)});
  return config("entry8-collider", "Conditioning a null X-Y association on a collider", 1992, data, json::array(), an,
                analysis_csvs("entry8-collider", an));
}

inline json entry8_mc(int sx, int sy) {
  const std::string id = "entry8-collider-" + quadrant_name(sx, sy);
  json params = json::object();
  params["ax"] = range(1, 100);
  params["xm"] = range(-5, 5);
  params["xs"] = range(1, 5);
  params["ay"] = range(1, 100);
  params["ym"] = range(-5, 5);
  params["ys"] = range(1, 5);
  params["cx"] = signed_range(sx);
  params["cy"] = signed_range(sy);
  params["ce"] = range(1, 100);
  params["cm"] = range(-5, 5);
  params["cs"] = range(1, 5);
  const json eqs = json::array({json{{"target", "x"}, {"linear", json::array()}, {"error", err("$ax", "$xm", "$xs")}},
                                json{{"target", "y"}, {"linear", json::array()}, {"error", err("$ay", "$ym", "$ys")}},
                                eq("c", json::array({json::array({"x", "$cx"}), json::array({"y", "$cy"})}), err("$ce", "$cm", "$cs"))});
  const json tmpl{{"reps", 10000},
                  {"n", range(100, 1000)},
                  {"params", params},
                  {"scm", json{{"sources", json::array()}, {"equations", eqs}}},
                  {"plan", json::array({json{{"kind", "fit"}, {"formula", "y ~ x + c"}, {"record", json{{"bXY", "x"}}}}})},
                  {"derived", json::array()}};
  const json an = json::array({json{{"op", "mc_summary"}, {"name", "summary"}, {"series", json::array({"bXY"})}},
                               json{{"op", "mc_share"}, {"name", "share-positive"}, {"series", "bXY"}, {"test", ">"}, {"value", 0}},
                               json{{"op", "mc_histogram"}, {"name", "histogram"}, {"series", "bXY"}, {"bins", 50}}});
  json outs = mc_outputs(id);
  outs.push_back(out("analysis", id + "/histogram.csv", "histogram"));
  return config(id,
                std::string("Randomized collider specifications, x->c ") + (sx > 0 ? "positive" : "negative") + ", y->c " +
                    (sy > 0 ? "positive" : "negative"),
                1992, json{{"mc", tmpl}}, json::array(), an, outs);
}

// -- Entry 9 ----------------------------------------------------------------

inline json entry9_mediation() {
  const json data = scm(10000, json::array({normal("X", 0, 10)}),
                        json::array({eq("ME", json::array({json::array({"X", 1})}), err(2, 0, 10)),
                                     eq("Y", json::array({json::array({"ME", 1}), json::array({"X", 0})}), err(2, 0, 10))}));
  const json an = json::array({json{{"op", "mediation"}, {"name", "mediation"}, {"y", "Y"}, {"x", "X"}, {"m", "ME"}},
                               compare("Y", "X", json::array({json::array({"ME"})}))});
  return config("entry9-mediation", "Full mediation of X on Y through ME", 1992, data, json::array(), an,
                analysis_csvs("entry9-mediation", an));
}

inline json entry9_moderation() {
  const json data = scm(10000, json::array({normal("X", 0, 10), normal("MO", 0, 10)}),
                        json::array({eq("Y", json::array({json::array({"X", 1})}), err(2, 0, 10),
                                        json{{"interactions", json::array({json::array({"X", "MO", 1})})}})}));
  const json an = json::array({json{{"op", "moderation"}, {"name", "moderation"}, {"y", "Y"}, {"x", "X"}, {"mo", "MO"}, {"at", {-10, 0, 10}}},
                               fit("main-effects-only", "Y ~ X + MO")});
  return config("entry9-moderation", "MO moderates the effect of X on Y", 1992, data, json::array(), an,
                analysis_csvs("entry9-moderation", an));
}

// -- Entry 10 ---------------------------------------------------------------

inline json entry10(const std::string& id, const std::string& description, json sources, json equations, json an) {
  return config(id, description, 1992, scm(1000, sources, equations), json::array(), an, analysis_csvs(id, an));
}

inline json entry10_confounder(double des) {
  const json eqs = json::array({eq("X", json::array({json::array({"Con", 2})}), err(0.5, 0, 10)),
                                eq("Y", json::array({json::array({"Con", 2}), json::array({"X", 0})}), err(0.5, 0, 10)),
                                eq("Des", json::array({json::array({"Con", des})}), err(1, 0, 10))});
  const json an = json::array({compare("Y", "X", json::array({json::array({"Con"}), json::array({"Des"}), json::array({"Con", "Des"})}), 0)});
  return entry10(des == 20 ? "entry10-descendants" : "entry10-descendants-weak",
                 "Adjusting for a descendant of a confounder (Des = " + format_number(des) + " Con)",
                 json::array({normal("Con", 0, 10)}), eqs, an);
}

inline json entry10_collider(double des) {
  const json eqs = json::array({eq("Col", json::array({json::array({"X", 2}), json::array({"Y", 2})}), err(1, 0, 10)),
                                eq("Des", json::array({json::array({"Col", des})}), err(1, 0, 10))});
  const json an = json::array({compare("Y", "X", json::array({json::array({"Col"}), json::array({"Des"})}), 0)});
  return entry10(des == 20 ? "entry10-collider-descendant" : "entry10-collider-descendant-weak",
                 "Adjusting for a descendant of a collider (Des = " + format_number(des) + " Col)",
                 json::array({normal("X", 0, 10), normal("Y", 0, 10)}), eqs, an);
}

inline json entry10_mediator(double des) {
  const json eqs = json::array({eq("M", json::array({json::array({"X", 2})}), err(1, 0, 10)),
                                eq("Y", json::array({json::array({"M", 2})}), err(1, 0, 10)),
                                eq("Des", json::array({json::array({"M", des})}), err(1, 0, 10))});
  const json an = json::array({compare("Y", "X", json::array({json::array({"M"}), json::array({"Des"})}), 4)});
  return entry10(des == 20 ? "entry10-mediator-descendant" : "entry10-mediator-descendant-weak",
                 "Adjusting for a descendant of a mediator (Des = " + format_number(des) + " M)", json::array({normal("X", 0, 10)}), eqs,
                 an);
}

inline json entry10_moderator() {
  const json eqs = json::array({eq("Y", json::array({json::array({"X", 0}), json::array({"M", 0})}), err(1, 0, 10),
                                   json{{"interactions", json::array({json::array({"X", "M", 0.5})})}}),
                                eq("Des", json::array({json::array({"M", 3})}), err(1, 0, 10))});
  const json an = json::array({fit("moderated", "Y ~ X + M + X:M"), fit("descendant-proxy", "Y ~ X + Des + X:Des")});
  return entry10("entry10-moderator-descendant", "A descendant of a moderator used as the moderator",
                 json::array({normal("X", 0, 10), normal("M", 0, 10)}), eqs, an);
}

// -- Entry 11 ---------------------------------------------------------------

inline json entry11_single() {
  const json data = scm(1000, json::array({normal("C", 0, 10), normal("IN", 0, 10)}),
                        json::array({eq("X", json::array({json::array({"C", 1}), json::array({"IN", 1})}), err(1, 0, 10)),
                                     eq("Y", json::array({json::array({"C", 1}), json::array({"X", 1})}), err(1, 0, 10))}));
  const json an = json::array({json{{"op", "iv"}, {"name", "iv"}, {"y", "Y"}, {"x", "X"}, {"instrument", "IN"}, {"diagnostics", json::array({"C"})}},
                               compare("Y", "X", json::array({json::array({"C"})}), 1)});
  return config("entry11-iv-single", "Instrumental variable estimate for a confounded association", 1992, data, json::array(), an,
                analysis_csvs("entry11-iv-single", an));
}

inline json u_coef() { return range(0.1, 10); }
inline json u_mean() { return range(-5, 5); }
inline json u_sd() { return range(1, 30); }

/// Entry 11 loop. `variant` 1 is the valid instrument; 2-5 violate one of the
/// instrument conditions.
inline json entry11_mc(int variant) {
  static const char* names[] = {"", "entry11-iv-valid", "entry11-iv-confounder-caused", "entry11-iv-correlated-confounder",
                                "entry11-iv-direct-path", "entry11-iv-mediated-path"};
  static const char* descriptions[] = {"",
                                       "Randomized valid-instrument specifications",
                                       "The confounder is caused by the instrument",
                                       "The instrument and the confounder share a common cause",
                                       "The instrument also causes Y directly",
                                       "The instrument causes Y through a mediator"};
  json params = json::object();
  auto noise = [&](const std::string& p) {
    params[p + "c"] = u_coef();
    params[p + "m"] = u_mean();
    params[p + "s"] = u_sd();
    return err("$" + p + "c", "$" + p + "m", "$" + p + "s");
  };
  json sources = json::array(), eqs = json::array();
  auto source = [&](const std::string& name, const std::string& p) {
    params[p + "m"] = u_mean();
    params[p + "s"] = u_sd();
    sources.push_back(json{{"name", name}, {"kind", "normal"}, {"params", json{{"mean", "$" + p + "m"}, {"sd", "$" + p + "s"}}}});
  };
  auto coef = [&](const std::string& p) {
    params[p] = u_coef();
    return "$" + p;
  };
  switch (variant) {
    case 1:
    case 4:
    case 5:
      source("Con", "con");
      source("IN", "in");
      break;
    case 2:
      source("IN", "in");
      eqs.push_back(eq("Con", json::array({json::array({"IN", coef("con_in")})}), noise("con_e")));
      break;
    case 3:
      source("COR", "cor");
      eqs.push_back(eq("IN", json::array({json::array({"COR", coef("in_cor")})}), noise("in_e")));
      eqs.push_back(eq("Con", json::array({json::array({"COR", coef("con_cor")})}), noise("con_e")));
      break;
  }
  eqs.push_back(eq("X", json::array({json::array({"Con", coef("x_con")}), json::array({"IN", coef("x_in")})}), noise("x_e")));
  json ylin = json::array({json::array({"Con", coef("y_con")}), json::array({"X", coef("y_x")})});
  if (variant == 4) ylin.push_back(json::array({"IN", coef("y_in")}));
  if (variant == 5) {
    eqs.push_back(eq("M", json::array({json::array({"IN", coef("m_in")})}), noise("m_e")));
    ylin.push_back(json::array({"M", coef("y_m")}));
  }
  eqs.push_back(eq("Y", ylin, noise("y_e")));
  const json plan = json::array({json{{"kind", "fit"}, {"formula", "Y ~ X + Con"}, {"record", json{{"M1_byx", "X"}}}},
                                 json{{"kind", "fit"}, {"formula", "Y ~ IN"}, {"record", json{{"M2_byin", "IN"}}}},
                                 json{{"kind", "fit"}, {"formula", "X ~ IN"}, {"record", json{{"M3_bxin", "IN"}}}}});
  const json derived = json::array({json{{"name", "IN_byx"}, {"op", "div"}, {"a", "M2_byin"}, {"b", "M3_bxin"}},
                                    json{{"name", "abs_diff"}, {"op", "abs_sub"}, {"a", "IN_byx"}, {"b", "M1_byx"}}});
  const json tmpl{{"reps", 10000},
                  {"n", range(150, 10000)},
                  {"params", params},
                  {"scm", json{{"sources", sources}, {"equations", eqs}}},
                  {"plan", plan},
                  {"derived", derived}};
  const json where = json::array({json{{"var", "IN_byx"}, {"op", ">="}, {"value", 0}}});
  const json an = json::array(
      {json{{"op", "mc_summary"}, {"name", "summary"}, {"series", json::array({"IN_byx", "M1_byx", "abs_diff"})}, {"where", where}},
       json{{"op", "mc_correlation"}, {"name", "correlation"}, {"a", "IN_byx"}, {"b", "M1_byx"}, {"where", where}},
       json{{"op", "mc_histogram"}, {"name", "histogram"}, {"series", "abs_diff"}, {"bins", 50}, {"where", where}}});
  const std::string id = names[variant];
  json outs = mc_outputs(id);
  outs.push_back(out("analysis", id + "/histogram.csv", "histogram"));
  return config(id, descriptions[variant], 1992, json{{"mc", tmpl}}, json::array(), an, outs);
}

// -- Entry 12 ---------------------------------------------------------------

inline json entry12(int variant) {
  json sources = json::array({normal("X", 0, 10)}), eqs = json::array();
  std::string id, description;
  switch (variant) {
    case 0:
      id = "entry12-noncausal";
      description = "Z is unrelated to X and Y";
      sources.push_back(normal("Z", 0, 10));
      eqs.push_back(eq("Y", json::array({json::array({"X", 1})}), err(1, 0, 10)));
      break;
    case 1:
      id = "entry12-noncausal-y";
      description = "Z shares a common cause with Y only";
      sources.push_back(normal("Cor", 0, 10));
      eqs.push_back(eq("Z", json::array({json::array({"Cor", 1})}), err(1, 0, 10)));
      eqs.push_back(eq("Y", json::array({json::array({"X", 1}), json::array({"Cor", 1})}), err(1, 0, 10)));
      break;
    default:
      id = "entry12-noncausal-x";
      description = "Z shares a common cause with X only";
      sources = json::array({normal("Cor", 0, 10)});
      eqs.push_back(eq("Z", json::array({json::array({"Cor", 1})}), err(1, 0, 10)));
      eqs.push_back(eq("X", json::array({json::array({"Cor", 1})}), err(1, 0, 10)));
      eqs.push_back(eq("Y", json::array({json::array({"X", 1})}), err(1, 0, 10)));
      break;
  }
  const json an = json::array({compare("Y", "X", json::array({json::array({"Z"})}), 1)});
  return config(id, description, 1992, scm(1000, sources, eqs), json::array(), an, analysis_csvs(id, an));
}

inline json entry12_reverse() {
  const json data = scm(1000, json::array({normal("X", 0, 10)}), json::array({eq("Y", json::array({json::array({"X", 1})}), err(1, 0, 10))}));
  const json an = json::array({fit("correct", "Y ~ X"), fit("reversed", "X ~ Y")});
  return config("entry12-reverse", "Correct and reversed causal specifications", 1992, data, json::array(), an,
                analysis_csvs("entry12-reverse", an));
}

// -- Entries 13 and 14 ------------------------------------------------------

inline json rule(const std::string& kind, json params = json::object()) {
  json r{{"kind", kind}};
  for (auto it = params.begin(); it != params.end(); ++it) r[it.key()] = it.value();
  return r;
}

inline json measurement_variants(const std::string& target, double threshold) {
  auto v = [&](const std::string& label, json rules) { return json{{"label", label}, {"target", target}, {"rules", rules}}; };
  const json minmax = rule("minmax", json{{"pad_lo", 0}, {"pad_hi", 0}});
  return json::array({
      v("dichotomous-median", json::array({rule("dichotomize_median")})),
      v("dichotomous-q25", json::array({rule("dichotomize_quantile", json{{"p", 0.25}})})),
      v("dichotomous-extreme", json::array({rule("dichotomize_threshold", json{{"value", threshold}})})),
      v("ordinal-quartiles", json::array({rule("ordinalize_quantiles", json{{"probs", {0.25, 0.5, 0.75}}})})),
      v("ordinal-50-60-90", json::array({rule("ordinalize_quantiles", json{{"probs", {0.5, 0.6, 0.9}}})})),
      v("ordinal-10-20-30", json::array({rule("ordinalize_quantiles", json{{"probs", {0.1, 0.2, 0.3}}})})),
      v("scale-0.2", json::array({rule("scale", json{{"c", 0.2}})})),
      v("scale-20", json::array({rule("scale", json{{"c", 20}})})),
      v("zscore", json::array({rule("zscore")})),
      v("minmax", json::array({minmax})),
      v("log-minmax", json::array({rule("minmax", json{{"pad_lo", 25}, {"pad_hi", 25}}), rule("log_e")})),
      v("square", json::array({rule("power", json{{"p", 2}})})),
      v("power-0.2", json::array({rule("power", json{{"p", 0.2}})})),
      v("minmax-square", json::array({minmax, rule("power", json{{"p", 2}})})),
      v("minmax-power-0.2", json::array({minmax, rule("power", json{{"p", 0.2}})})),
      v("round", json::array({rule("round_whole")})),
      v("window-5", json::array({rule("window", json{{"lo", -5}, {"hi", 5}})})),
  });
}

inline json entry13_14(bool dependent) {
  const std::string id = dependent ? "entry13-dependent-measurement" : "entry14-independent-measurement";
  const json data = scm(10000, json::array({normal("X", 0, 10)}), json::array({eq("Y", json::array({json::array({"X", 1})}), err(1, 0, 30))}));
  const json an = json::array({json{{"op", "attenuation"},
                                    {"name", "attenuation"},
                                    {"y", "Y"},
                                    {"x", "X"},
                                    {"variants", measurement_variants(dependent ? "y" : "x", dependent ? 90 : 30)}}});
  return config(id, dependent ? "Recoding and transforming the dependent variable" : "Recoding and transforming the independent variable",
                1992, data, json::array(), an, analysis_csvs(id, an));
}

// -- Entry 15 ---------------------------------------------------------------

inline json covariate_recodes(const std::string& c) {
  return json::array({json{{"op", "recode"}, {"column", c}, {"rule", rule("ordinalize_quantiles", json{{"probs", {0.25, 0.5, 0.75}}})}, {"as", c + "_OR1"}},
                      json{{"op", "recode"}, {"column", c}, {"rule", rule("dichotomize_median")}, {"as", c + "_DI1"}}});
}

inline json entry15(int variant) {
  json sources = json::array({normal("X", 0, 10)}), eqs = json::array(), an = json::array();
  std::string id, description, c;
  switch (variant) {
    case 0:
      id = "entry15-covariate-measurement";
      description = "Continuous, ordinal and dichotomous measures of a confounder";
      c = "Con";
      sources = json::array({normal("Con", 0, 10)});
      eqs.push_back(eq("X", json::array({json::array({"Con", 4})}), err(1, 0, 10)));
      eqs.push_back(eq("Y", json::array({json::array({"X", 1}), json::array({"Con", 4})}), err(1, 0, 30)));
      an.push_back(compare("Y", "X", json::array({json::array({"Con"}), json::array({"Con_OR1"}), json::array({"Con_DI1"})}), 1));
      break;
    case 1:
      id = "entry15-collider-measurement";
      description = "Continuous, ordinal and dichotomous measures of a collider";
      c = "Col";
      eqs.push_back(eq("Y", json::array({json::array({"X", 1})}), err(1, 0, 30)));
      eqs.push_back(eq("Col", json::array({json::array({"X", 4}), json::array({"Y", 4})}), err(1, 0, 10)));
      an.push_back(compare("Y", "X", json::array({json::array({"Col"}), json::array({"Col_OR1"}), json::array({"Col_DI1"})}), 1));
      break;
    case 2:
      id = "entry15-mediator-measurement";
      description = "Continuous, ordinal and dichotomous measures of a mediator";
      c = "Med";
      eqs.push_back(eq("Med", json::array({json::array({"X", 4})}), err(1, 0, 10)));
      eqs.push_back(eq("Y", json::array({json::array({"X", 1}), json::array({"Med", 4})}), err(1, 0, 30)));
      an.push_back(compare("Y", "X", json::array({json::array({"Med"}), json::array({"Med_OR1"}), json::array({"Med_DI1"})}), 1));
      break;
    default:
      id = "entry15-moderator-measurement";
      description = "Continuous, ordinal and dichotomous measures of a moderator";
      c = "Mod";
      sources.push_back(normal("Mod", 0, 10));
      eqs.push_back(eq("Y", json::array({json::array({"X", 1})}), err(1, 0, 30), json{{"interactions", json::array({json::array({"X", "Mod", 4})})}}));
      an.push_back(fit("continuous", "Y ~ X + Mod + X:Mod"));
      an.push_back(fit("ordinal", "Y ~ X + Mod_OR1 + X:Mod_OR1"));
      an.push_back(fit("dichotomous", "Y ~ X + Mod_DI1 + X:Mod_DI1"));
      break;
  }
  return config(id, description, 1992, scm(10000, sources, eqs), covariate_recodes(c), an, analysis_csvs(id, an));
}

}  // namespace detail::cat

inline const std::vector<CatalogEntry>& catalog() {
  using namespace detail::cat;
  static const std::vector<CatalogEntry> entries = [] {
    std::vector<CatalogEntry> e;
    auto add = [&](json (*f)()) {
      const json j = f();
      e.push_back({j.at("id"), j.at("description"), f});
    };
    auto add_fn = [&](std::function<json()> f) {
      const json j = f();
      e.push_back({j.at("id"), j.at("description"), std::move(f)});
    };
    add(entry1);
    add(entry1_confounder);
    add_fn([] { return entry2("homoscedastic", "Constant error SD across X", {1, 1, 1, 1, 1}); });
    add_fn([] { return entry2("inconsistent", "Error SD varies irregularly across X", {0.2, 3, 1.4, 4, 0.4}); });
    add_fn([] { return entry2("expanding", "Error SD grows with X", {1, 1.7, 2.4, 3.1, 3.8}); });
    add_fn([] { return entry2("tightening", "Error SD shrinks with X", {3.8, 3.1, 2.4, 1.7, 1}); });
    add_fn([] { return entry2_multivariable(false); });
    add_fn([] { return entry2_multivariable(true); });
    add_fn([] { return entry3("none", 0); });
    add_fn([] { return entry3("small", 0.1); });
    add_fn([] { return entry3("modsmall", 0.25); });
    add_fn([] { return entry3("moderate", 0.5); });
    add_fn([] { return entry3("high", 0.75); });
    add(entry4);
    add(entry5);
    add(entry6);
    add(entry6_block);
    add(entry7);
    for (int sx : {1, -1})
      for (int sy : {1, -1}) add_fn([=] { return entry7_mc(sx, sy); });
    add(entry8);
    for (int sx : {1, -1})
      for (int sy : {1, -1}) add_fn([=] { return entry8_mc(sx, sy); });
    add(entry9_mediation);
    add(entry9_moderation);
    add_fn([] { return entry10_confounder(20); });
    add_fn([] { return entry10_confounder(2); });
    add_fn([] { return entry10_collider(20); });
    add_fn([] { return entry10_collider(0.25); });
    add_fn([] { return entry10_mediator(20); });
    add_fn([] { return entry10_mediator(1); });
    add(entry10_moderator);
    add(entry11_single);
    for (int v = 1; v <= 5; ++v) add_fn([=] { return entry11_mc(v); });
    for (int v = 0; v <= 2; ++v) add_fn([=] { return entry12(v); });
    add(entry12_reverse);
    add_fn([] { return entry13_14(true); });
    add_fn([] { return entry13_14(false); });
    for (int v = 0; v <= 3; ++v) add_fn([=] { return entry15(v); });
    return e;
  }();
  return entries;
}

inline json catalog_json(const std::string& id) {
  for (const auto& e : catalog())
    if (e.id == id) return e.make();
  fail(ErrorKind::Lookup, "no catalog entry '" + id + "'");
}

inline ScenarioConfig catalog_config(const std::string& id) { return config_from_json(catalog_json(id)); }

}  // namespace biaslab
