#pragma once

// Monte Carlo harness for randomized-specification loops and repeated
// sampling. Replicate i always draws from derive_substream(seed, i), so
// results do not depend on thread count or scheduling.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "causal.hpp"
#include "datakit.hpp"
#include "error.hpp"
#include "estimators.hpp"
#include "json_io.hpp"
#include "rand.hpp"
#include "simcore.hpp"

namespace biaslab {

struct RangeSpec {
  double lo = 0, hi = 0;
  bool integer = false;

  double draw(RngState& rng) const {
    if (integer) return static_cast<double>(uniform_int(rng, static_cast<long long>(lo), static_cast<long long>(hi)));
    return uniform_draw(rng, lo, hi);
  }
  friend bool operator==(const RangeSpec&, const RangeSpec&) = default;
};

/// One analysis run on each replicate dataset, and the values it records.
/// Record fields:
///   fit:       "<term>" (coefficient) or "b|se|stat|p|beta:<term>", "r2", "n_used"
///   iv:        ratio, se_ratio, b_yin, se_yin, b_xin, se_xin
///   mediation: a, b, direct, indirect, total, sobel_se, z
///   balance:   "delta_mean|delta_sd|delta_skew|delta_kurtosis:<covariate>"
///   stat:      mean, sd, median, min, max, q1, q3 of `column`
struct PlanItem {
  enum class Kind { Fit, Iv, Mediation, Balance, Stat };
  Kind kind = Kind::Fit;
  std::string formula;
  Family family = Family::Gaussian;
  std::string y, x, instrument, m;
  bool enforce_floor = false;
  std::string group;
  std::vector<std::string> covariates;
  std::string column;
  std::vector<std::pair<std::string, std::string>> record;  // series -> field
};

struct DerivedSeries {
  std::string name;
  std::string op;  // sub, abs_sub, div
  std::string a, b;
};

struct McTemplate {
  json scm;  // ScmSpec JSON in which numbers may be "$name" placeholders
  std::vector<std::pair<std::string, RangeSpec>> params;
  RangeSpec n{100, 100, true};
  std::vector<PlanItem> plan;
  std::vector<DerivedSeries> derived;
  std::size_t reps = 1;
  std::uint64_t seed = 0;
};

struct McRecord {
  std::size_t i = 0;
  std::size_t n = 0;
  std::vector<double> values;  // NaN = missing
  std::string error;           // "<kind>: <message>" when something failed
};

struct McResult {
  std::vector<std::string> series;
  std::vector<McRecord> records;
  std::string template_hash;
  std::uint64_t seed = 0;
  std::size_t n_removed = 0;

  std::size_t index_of(const std::string& name) const {
    for (std::size_t k = 0; k < series.size(); ++k)
      if (series[k] == name) return k;
    fail(ErrorKind::Lookup, "mc: unknown series '" + name + "'");
  }
  std::vector<double> values(const std::string& name) const {
    const auto k = index_of(name);
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.values[k]);
    return out;
  }
  std::size_t n_failed() const {
    return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [](const McRecord& r) { return !r.error.empty(); }));
  }
};

// ---------------------------------------------------------------------------
// JSON for plans and templates

namespace detail {

inline const char* plan_kind_name(PlanItem::Kind k) {
  switch (k) {
    case PlanItem::Kind::Fit: return "fit";
    case PlanItem::Kind::Iv: return "iv";
    case PlanItem::Kind::Mediation: return "mediation";
    case PlanItem::Kind::Balance: return "balance";
    case PlanItem::Kind::Stat: return "stat";
  }
  return "fit";
}

inline json range_to_json(const RangeSpec& r) { return json{{"lo", r.lo}, {"hi", r.hi}, {"integer", r.integer}}; }

inline RangeSpec range_from_json(const json& j, const std::string& path, bool integer_default) {
  using namespace jsonio;
  RangeSpec r;
  if (j.is_number()) {
    r.lo = r.hi = j.get<double>();
    r.integer = integer_default;
  } else {
    r.lo = num(j, "lo", path);
    r.hi = num(j, "hi", path);
    r.integer = j.value("integer", integer_default);
  }
  if (!(r.lo <= r.hi)) bad(path, "lo must not exceed hi");
  if (r.integer && (r.lo != std::floor(r.lo) || r.hi != std::floor(r.hi))) bad(path, "integer range needs integer bounds");
  return r;
}

}  // namespace detail

inline json plan_to_json(const PlanItem& p) {
  json j{{"kind", detail::plan_kind_name(p.kind)}};
  switch (p.kind) {
    case PlanItem::Kind::Fit:
      j["formula"] = p.formula;
      j["family"] = to_string(p.family);
      break;
    case PlanItem::Kind::Iv:
      j["y"] = p.y;
      j["x"] = p.x;
      j["instrument"] = p.instrument;
      j["enforce_floor"] = p.enforce_floor;
      break;
    case PlanItem::Kind::Mediation:
      j["y"] = p.y;
      j["x"] = p.x;
      j["m"] = p.m;
      break;
    case PlanItem::Kind::Balance:
      j["group"] = p.group;
      j["covariates"] = p.covariates;
      break;
    case PlanItem::Kind::Stat: j["column"] = p.column; break;
  }
  json rec = json::object();
  for (const auto& [s, f] : p.record) rec[s] = f;
  j["record"] = rec;
  return j;
}

inline PlanItem plan_from_json(const json& j, const std::string& path) {
  using namespace jsonio;
  PlanItem p;
  const auto kind = str(j, "kind", path);
  if (kind == "fit") {
    p.kind = PlanItem::Kind::Fit;
    p.formula = str(j, "formula", path);
    try {
      (void)Formula::parse(p.formula);
      if (j.contains("family")) p.family = family_from_string(str(j, "family", path));
    } catch (const Error& e) {
      bad(path, e.what());
    }
  } else if (kind == "iv") {
    p.kind = PlanItem::Kind::Iv;
    p.y = str(j, "y", path);
    p.x = str(j, "x", path);
    p.instrument = str(j, "instrument", path);
    p.enforce_floor = j.value("enforce_floor", false);
  } else if (kind == "mediation") {
    p.kind = PlanItem::Kind::Mediation;
    p.y = str(j, "y", path);
    p.x = str(j, "x", path);
    p.m = str(j, "m", path);
  } else if (kind == "balance") {
    p.kind = PlanItem::Kind::Balance;
    p.group = str(j, "group", path);
    p.covariates = strs(req(j, "covariates", path), path + ".covariates");
  } else if (kind == "stat") {
    p.kind = PlanItem::Kind::Stat;
    p.column = str(j, "column", path);
  } else {
    bad(path + ".kind", "unknown plan kind '" + kind + "'");
  }
  const auto& rec = req(j, "record", path);
  if (!rec.is_object()) bad(path + ".record", "expected an object of series: field");
  for (auto it = rec.begin(); it != rec.end(); ++it) p.record.emplace_back(it.key(), str(it.value(), path + ".record." + it.key()));
  return p;
}

inline json derived_to_json(const DerivedSeries& d) { return json{{"name", d.name}, {"op", d.op}, {"a", d.a}, {"b", d.b}}; }

inline DerivedSeries derived_from_json(const json& j, const std::string& path) {
  using namespace jsonio;
  DerivedSeries d{str(j, "name", path), str(j, "op", path), str(j, "a", path), str(j, "b", path)};
  if (d.op != "sub" && d.op != "abs_sub" && d.op != "div") bad(path + ".op", "unknown op '" + d.op + "'");
  return d;
}

inline json template_to_json(const McTemplate& t) {
  json params = json::object();
  for (const auto& [k, r] : t.params) params[k] = detail::range_to_json(r);
  json plan = json::array(), derived = json::array();
  for (const auto& p : t.plan) plan.push_back(plan_to_json(p));
  for (const auto& d : t.derived) derived.push_back(derived_to_json(d));
  return json{{"reps", t.reps}, {"seed", t.seed},     {"n", detail::range_to_json(t.n)}, {"params", params},
              {"scm", t.scm},   {"plan", plan},       {"derived", derived}};
}

inline McTemplate template_from_json(const json& j, const std::string& path = "mc") {
  using namespace jsonio;
  McTemplate t;
  const double reps = num(j, "reps", path);
  if (!(reps >= 1) || reps != std::floor(reps)) bad(path + ".reps", "must be a positive integer");
  t.reps = static_cast<std::size_t>(reps);
  if (j.contains("seed")) t.seed = j.at("seed").get<std::uint64_t>();
  t.n = detail::range_from_json(req(j, "n", path), path + ".n", true);
  if (!t.n.integer || t.n.lo < 1) bad(path + ".n", "must be a positive integer range");
  if (j.contains("params")) {
    const auto& p = j.at("params");
    if (!p.is_object()) bad(path + ".params", "expected an object");
    for (auto it = p.begin(); it != p.end(); ++it)
      t.params.emplace_back(it.key(), detail::range_from_json(it.value(), path + ".params." + it.key(), false));
  }
  t.scm = req(j, "scm", path);
  const auto& plan = req(j, "plan", path);
  if (!plan.is_array()) bad(path + ".plan", "expected an array");
  for (std::size_t i = 0; i < plan.size(); ++i) t.plan.push_back(plan_from_json(plan[i], path + ".plan[" + std::to_string(i) + "]"));
  if (j.contains("derived"))
    for (std::size_t i = 0; i < j.at("derived").size(); ++i)
      t.derived.push_back(derived_from_json(j.at("derived")[i], path + ".derived[" + std::to_string(i) + "]"));
  return t;
}

// ---------------------------------------------------------------------------
// Plan execution

namespace detail {

inline std::pair<std::string, std::string> split_field(const std::string& f) {
  const auto colon = f.find(':');
  if (colon == std::string::npos) return {"", f};
  const auto head = f.substr(0, colon);
  static const std::set<std::string> prefixes{"b",          "se",       "stat",       "p",         "beta",
                                              "delta_mean", "delta_sd", "delta_skew", "delta_kurtosis"};
  if (prefixes.count(head)) return {head, f.substr(colon + 1)};
  return {"", f};  // an interaction term such as X:Z
}

inline double nan_if_empty(const std::optional<double>& v) { return v ? *v : kNaN; }

/// Runs one plan item, writing into `out` at the positions given by `slots`.
inline void run_plan_item(const PlanItem& p, const Dataset& d, double* out) {
  switch (p.kind) {
    case PlanItem::Kind::Fit: {
      const FitResult r = fit(d, Formula::parse(p.formula), p.family);
      for (std::size_t k = 0; k < p.record.size(); ++k) {
        const auto& f = p.record[k].second;
        if (f == "r2") out[k] = r.r_squared;
        else if (f == "n_used") out[k] = static_cast<double>(r.n_used);
        else {
          const auto [what, term] = split_field(f);
          const auto j = r.index_of(term);
          if (what.empty() || what == "b") out[k] = r.b[j];
          else if (what == "se") out[k] = r.se[j];
          else if (what == "stat") out[k] = r.stat[j];
          else if (what == "p") out[k] = r.p[j];
          else if (what == "beta") out[k] = r.beta[j];
          else fail(ErrorKind::Lookup, "mc: unknown fit field '" + f + "'");
        }
      }
      break;
    }
    case PlanItem::Kind::Iv: {
      IvOptions o;
      o.enforce_floor = p.enforce_floor;
      const IvEstimate e = iv_wald(d, p.y, p.x, p.instrument, o);
      for (std::size_t k = 0; k < p.record.size(); ++k) {
        const auto& f = p.record[k].second;
        if (f == "ratio") out[k] = e.ratio;
        else if (f == "se_ratio") out[k] = e.se_ratio;
        else if (f == "b_yin") out[k] = e.b_yin;
        else if (f == "se_yin") out[k] = e.se_yin;
        else if (f == "b_xin") out[k] = e.b_xin;
        else if (f == "se_xin") out[k] = e.se_xin;
        else fail(ErrorKind::Lookup, "mc: unknown iv field '" + f + "'");
      }
      break;
    }
    case PlanItem::Kind::Mediation: {
      const MediationResult m = mediation(d, p.y, p.x, p.m);
      for (std::size_t k = 0; k < p.record.size(); ++k) {
        const auto& f = p.record[k].second;
        if (f == "a") out[k] = m.a;
        else if (f == "b") out[k] = m.b;
        else if (f == "direct") out[k] = m.direct;
        else if (f == "indirect") out[k] = m.indirect;
        else if (f == "total") out[k] = m.total;
        else if (f == "sobel_se") out[k] = m.sobel_se;
        else if (f == "z") out[k] = m.z;
        else fail(ErrorKind::Lookup, "mc: unknown mediation field '" + f + "'");
      }
      break;
    }
    case PlanItem::Kind::Balance: {
      const BalanceReport b = balance_diff(d, p.group, p.covariates);
      for (std::size_t k = 0; k < p.record.size(); ++k) {
        const auto [what, cov] = split_field(p.record[k].second);
        const BalanceRow* row = nullptr;
        for (const auto& r : b.rows)
          if (r.covariate == cov) row = &r;
        if (!row) fail(ErrorKind::Lookup, "mc: balance has no covariate '" + cov + "'");
        if (what == "delta_mean" || what.empty()) out[k] = row->delta_mean;
        else if (what == "delta_sd") out[k] = row->delta_sd;
        else if (what == "delta_skew") out[k] = nan_if_empty(row->delta_skew);
        else if (what == "delta_kurtosis") out[k] = nan_if_empty(row->delta_kurtosis);
        else fail(ErrorKind::Lookup, "mc: unknown balance field '" + p.record[k].second + "'");
      }
      break;
    }
    case PlanItem::Kind::Stat: {
      const SummaryStats s = summarize(d.column(p.column));
      for (std::size_t k = 0; k < p.record.size(); ++k) {
        const auto& f = p.record[k].second;
        if (f == "mean") out[k] = s.mean;
        else if (f == "sd") out[k] = s.sd;
        else if (f == "median") out[k] = s.median;
        else if (f == "min") out[k] = s.min;
        else if (f == "max") out[k] = s.max;
        else if (f == "q1") out[k] = s.q1;
        else if (f == "q3") out[k] = s.q3;
        else fail(ErrorKind::Lookup, "mc: unknown stat field '" + f + "'");
      }
      break;
    }
  }
}

inline std::vector<std::string> plan_series(const std::vector<PlanItem>& plan, const std::vector<DerivedSeries>& derived) {
  std::vector<std::string> s;
  std::set<std::string> seen{"i", "N"};
  auto push = [&](const std::string& n) {
    if (!seen.insert(n).second) fail(ErrorKind::Validation, "mc: series '" + n + "' defined twice");
    s.push_back(n);
  };
  for (const auto& p : plan)
    for (const auto& [name, f] : p.record) push(name);
  for (const auto& d : derived) {
    if (std::find(s.begin(), s.end(), d.a) == s.end() || std::find(s.begin(), s.end(), d.b) == s.end())
      fail(ErrorKind::Validation, "mc: derived series '" + d.name + "' refers to an undefined series");
    push(d.name);
  }
  return s;
}

/// Fills the plan's series for one dataset; a failing item leaves its own
/// series missing and appends to `error`.
inline void run_plan(const std::vector<PlanItem>& plan, const std::vector<DerivedSeries>& derived,
                     const std::vector<std::string>& series, const Dataset& d, McRecord& rec) {
  std::size_t offset = 0;
  for (const auto& p : plan) {
    try {
      run_plan_item(p, d, rec.values.data() + offset);
    } catch (const Error& e) {
      for (std::size_t k = 0; k < p.record.size(); ++k) rec.values[offset + k] = kNaN;
      if (!rec.error.empty()) rec.error += "; ";
      rec.error += std::string(to_string(e.kind())) + ": " + e.what();
    }
    offset += p.record.size();
  }
  auto at = [&](const std::string& n) {
    return rec.values[static_cast<std::size_t>(std::find(series.begin(), series.end(), n) - series.begin())];
  };
  for (const auto& dv : derived) {
    const double a = at(dv.a), b = at(dv.b);
    double v = kNaN;
    if (dv.op == "sub") v = a - b;
    else if (dv.op == "abs_sub") v = std::abs(a - b);
    else if (dv.op == "div") v = a / b;
    rec.values[offset++] = std::isfinite(v) ? v : kNaN;
  }
}

inline void collect_placeholders(const json& j, std::set<std::string>& out) {
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (!s.empty() && (s[0] == '$' || (s.size() > 1 && s[0] == '-' && s[1] == '$'))) out.insert(s.substr(s[0] == '-' ? 2 : 1));
  } else if (j.is_structured()) {
    for (const auto& e : j) collect_placeholders(e, out);
  }
}

/// Replaces "$name" with its value and "-$name" with its negation.
inline json substitute(const json& j, const std::map<std::string, double>& values) {
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    const bool neg = s.size() > 1 && s[0] == '-' && s[1] == '$';
    if (!s.empty() && (s[0] == '$' || neg)) {
      const auto it = values.find(s.substr(neg ? 2 : 1));
      if (it == values.end()) fail(ErrorKind::Validation, "mc: unbound placeholder '" + s + "'");
      return json(neg ? -it->second : it->second);
    }
    return j;
  }
  if (j.is_array()) {
    json a = json::array();
    for (const auto& e : j) a.push_back(substitute(e, values));
    return a;
  }
  if (j.is_object()) {
    json o = json::object();
    for (auto it = j.begin(); it != j.end(); ++it) o[it.key()] = substitute(it.value(), values);
    return o;
  }
  return j;
}

inline std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Calls body(i) for i in [0, count) on `threads` workers.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const unsigned used = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  for (unsigned t = 0; t < used; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) body(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace detail

inline std::vector<std::string> template_series(const McTemplate& t) {
  auto s = detail::plan_series(t.plan, t.derived);
  for (const auto& [name, r] : t.params) s.push_back("$" + name);
  return s;
}

/// Checks placeholders, series names and the SCM shape before any replicate runs.
inline void validate_template(const McTemplate& t) {
  if (t.reps == 0) fail(ErrorKind::Validation, "mc: reps must be at least 1");
  if (!(t.n.lo >= 1 && t.n.lo <= t.n.hi)) fail(ErrorKind::Validation, "mc: invalid n range");
  std::set<std::string> used;
  detail::collect_placeholders(t.scm, used);
  std::set<std::string> bound;
  std::map<std::string, double> mid;
  for (const auto& [name, r] : t.params) {
    if (!bound.insert(name).second) fail(ErrorKind::Validation, "mc: placeholder '" + name + "' bound twice");
    if (!(r.lo <= r.hi)) fail(ErrorKind::Validation, "mc: placeholder '" + name + "' has lo > hi");
    mid[name] = r.integer ? std::floor((r.lo + r.hi) / 2) : (r.lo + r.hi) / 2;
  }
  for (const auto& u : used)
    if (!bound.count(u)) fail(ErrorKind::Validation, "mc: placeholder '$" + u + "' is not bound");
  for (const auto& b : bound)
    if (!used.count(b)) fail(ErrorKind::Validation, "mc: parameter '" + b + "' is never used");
  (void)template_series(t);
  json scm = detail::substitute(t.scm, mid);
  scm["n"] = t.n.lo;
  const ScmSpec spec = scm_from_json(scm, "mc.scm");
  validate(spec);
  std::set<std::string> names;
  for (const auto& s : spec.sources) names.insert(s.name);
  for (const auto& e : spec.equations) names.insert(e.target);
  for (const auto& p : t.plan) {
    std::vector<std::string> refs;
    if (p.kind == PlanItem::Kind::Fit) refs = Formula::parse(p.formula).variables();
    else if (p.kind == PlanItem::Kind::Iv) refs = {p.y, p.x, p.instrument};
    else if (p.kind == PlanItem::Kind::Mediation) refs = {p.y, p.x, p.m};
    else if (p.kind == PlanItem::Kind::Balance) {
      refs = p.covariates;
      refs.push_back(p.group);
    } else refs = {p.column};
    for (const auto& r : refs)
      if (!names.count(r)) fail(ErrorKind::Validation, "mc: plan refers to unknown variable '" + r + "'");
  }
}

/// Draws placeholders (declaration order), then N, then the dataset, all from
/// the replicate's own substream.
inline Dataset mc_replicate_data(const McTemplate& t, std::size_t i, std::map<std::string, double>& drawn, std::size_t& n) {
  RngState rng = derive_substream(t.seed, i);
  for (const auto& [name, r] : t.params) drawn[name] = r.draw(rng);
  n = static_cast<std::size_t>(t.n.draw(rng));
  json scm = detail::substitute(t.scm, drawn);
  scm["n"] = n;
  const ScmSpec spec = scm_from_json(scm, "mc.scm");
  return evaluate_scm(spec, rng);
}

inline McResult run_mc(const McTemplate& t, unsigned threads = 1) {
  validate_template(t);
  McResult res;
  res.series = template_series(t);
  res.seed = t.seed;
  res.template_hash = detail::fnv1a_hex(template_to_json(t).dump());
  res.records.resize(t.reps);
  const auto n_plan = res.series.size() - t.params.size();
  detail::parallel_for(t.reps, threads, [&](std::size_t i) {
    McRecord& rec = res.records[i];
    rec.i = i;
    rec.values.assign(res.series.size(), detail::kNaN);
    std::map<std::string, double> drawn;
    try {
      const Dataset d = mc_replicate_data(t, i, drawn, rec.n);
      detail::run_plan(t.plan, t.derived, res.series, d, rec);
    } catch (const Error& e) {
      rec.error = std::string(to_string(e.kind())) + ": " + e.what();
    }
    std::size_t k = n_plan;
    for (const auto& [name, r] : t.params) {
      auto it = drawn.find(name);
      rec.values[k++] = it == drawn.end() ? detail::kNaN : it->second;
    }
  });
  return res;
}

// ---------------------------------------------------------------------------
// Repeated sampling from a fixed population

struct SamplingPlan {
  std::size_t k = 0;     // rows per replicate (per group when stratified)
  std::size_t reps = 1;
  std::vector<RowFilter> filter;
  std::string stratify_by;  // empty = simple random sampling
  std::vector<PlanItem> plan;
  std::vector<DerivedSeries> derived;
};

inline McResult repeated_samples(const Dataset& pop, const SamplingPlan& sp, std::uint64_t master_seed, unsigned threads = 1) {
  if (sp.reps == 0 || sp.k == 0) fail(ErrorKind::Parameter, "repeated_samples: k and reps must be at least 1");
  const std::vector<std::size_t> rows = sp.filter.empty() ? [&] {
    std::vector<std::size_t> all(pop.n_rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
  }()
                                                          : matching_rows(pop, sp.filter);
  std::vector<std::vector<std::size_t>> groups;
  if (sp.stratify_by.empty()) {
    groups.push_back(rows);
  } else {
    const Column& g = pop.column(sp.stratify_by);
    std::map<double, std::vector<std::size_t>> by;
    for (auto r : rows)
      if (!g.is_missing(r)) by[g.values[r]].push_back(r);
    for (auto& [v, rs] : by) groups.push_back(std::move(rs));
  }
  for (const auto& g : groups)
    if (g.size() < sp.k)
      fail(ErrorKind::Sampling, "repeated_samples: population of " + std::to_string(g.size()) + " rows is smaller than k = " +
                                    std::to_string(sp.k));
  McResult res;
  res.series = detail::plan_series(sp.plan, sp.derived);
  res.seed = master_seed;
  {
    json desc{{"k", sp.k}, {"reps", sp.reps}, {"filter", filters_to_json(sp.filter)}, {"stratify_by", sp.stratify_by}};
    for (const auto& p : sp.plan) desc["plan"].push_back(plan_to_json(p));
    res.template_hash = detail::fnv1a_hex(desc.dump());
  }
  res.records.resize(sp.reps);
  detail::parallel_for(sp.reps, threads, [&](std::size_t i) {
    McRecord& rec = res.records[i];
    rec.i = i;
    rec.values.assign(res.series.size(), detail::kNaN);
    RngState rng = derive_substream(master_seed, i);
    std::vector<std::size_t> pick;
    for (const auto& g : groups)
      for (auto idx : sample_indices(rng, g.size(), sp.k, false)) pick.push_back(g[idx]);
    rec.n = pick.size();
    try {
      detail::run_plan(sp.plan, sp.derived, res.series, pop.take_rows(pick), rec);
    } catch (const Error& e) {
      rec.error = std::string(to_string(e.kind())) + ": " + e.what();
    }
  });
  return res;
}

// ---------------------------------------------------------------------------
// Aggregation

/// Keeps replicates whose series values pass every filter; missing values fail.
inline McResult filter_replicates(const McResult& r, const std::vector<RowFilter>& filters) {
  std::vector<std::size_t> idx;
  for (const auto& f : filters) {
    validate_filter(f);
    idx.push_back(r.index_of(f.var));
  }
  McResult out;
  out.series = r.series;
  out.template_hash = r.template_hash;
  out.seed = r.seed;
  for (const auto& rec : r.records) {
    bool ok = true;
    for (std::size_t k = 0; k < filters.size() && ok; ++k) {
      const double v = rec.values[idx[k]];
      ok = !std::isnan(v) && filters[k].test(v);
    }
    if (ok) out.records.push_back(rec);
  }
  out.n_removed = r.n_removed + (r.records.size() - out.records.size());
  return out;
}

struct McSummary {
  std::size_t n = 0, n_missing = 0;
  double min = 0, q1 = 0, median = 0, mean = 0, q3 = 0, max = 0;
};

inline McSummary summarize_values(const std::vector<double>& v) {
  std::vector<double> obs;
  for (double x : v)
    if (!std::isnan(x)) obs.push_back(x);
  if (obs.empty()) fail(ErrorKind::EmptyData, "summary of an empty series");
  const SummaryStats s = summarize(obs);
  McSummary m;
  m.n = obs.size();
  m.n_missing = v.size() - obs.size();
  m.min = s.min;
  m.q1 = s.q1;
  m.median = s.median;
  m.mean = s.mean;
  m.q3 = s.q3;
  m.max = s.max;
  return m;
}

inline McSummary summarize_series(const McResult& r, const std::string& series) { return summarize_values(r.values(series)); }

inline double series_correlation(const McResult& r, const std::string& a, const std::string& b) {
  const auto va = r.values(a), vb = r.values(b);
  std::vector<double> xa, xb;
  for (std::size_t i = 0; i < va.size(); ++i)
    if (!std::isnan(va[i]) && !std::isnan(vb[i])) {
      xa.push_back(va[i]);
      xb.push_back(vb[i]);
    }
  if (xa.empty()) fail(ErrorKind::EmptyData, "series_correlation: no paired values");
  return pearson(xa, xb);
}

struct HistogramBin {
  double lo = 0, hi = 0;
  std::size_t count = 0;
};

/// Equal-width bins over [min, max]; the last bin is closed.
inline std::vector<HistogramBin> histogram_values(const std::vector<double>& v, std::size_t bins) {
  if (bins == 0) fail(ErrorKind::Parameter, "histogram: bins must be at least 1");
  std::vector<double> obs;
  for (double x : v)
    if (!std::isnan(x)) obs.push_back(x);
  if (obs.empty()) fail(ErrorKind::EmptyData, "histogram of an empty series");
  const auto [mn, mx] = std::minmax_element(obs.begin(), obs.end());
  const double lo = *mn, hi = *mx;
  const double w = (hi - lo) / static_cast<double>(bins);
  std::vector<HistogramBin> out(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].lo = lo + w * static_cast<double>(b);
    out[b].hi = b + 1 == bins ? hi : lo + w * static_cast<double>(b + 1);
  }
  for (double x : obs) {
    std::size_t b = w > 0 ? static_cast<std::size_t>((x - lo) / w) : 0;
    if (b >= bins) b = bins - 1;
    ++out[b].count;
  }
  return out;
}

inline std::vector<HistogramBin> histogram(const McResult& r, const std::string& series, std::size_t bins) {
  return histogram_values(r.values(series), bins);
}

inline std::string histogram_csv(const std::vector<HistogramBin>& h) {
  std::string s = "lo,hi,count\n";
  for (const auto& b : h) s += format_number(b.lo) + "," + format_number(b.hi) + "," + std::to_string(b.count) + "\n";
  return s;
}

/// Columns: i, N, each series, then an error tag column.
inline std::string mc_csv(const McResult& r) {
  std::string s = "i,N";
  for (const auto& n : r.series) s += "," + n;
  s += ",error\n";
  for (const auto& rec : r.records) {
    s += std::to_string(rec.i) + "," + std::to_string(rec.n);
    for (double v : rec.values) s += "," + (std::isnan(v) ? std::string() : format_number(v));
    std::string err = rec.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    s += "," + err + "\n";
  }
  return s;
}

inline json mc_summary_to_json(const McSummary& m) {
  return json{{"n", m.n},       {"n_missing", m.n_missing}, {"min", jsonio::number(m.min)},
              {"q1", jsonio::number(m.q1)}, {"median", jsonio::number(m.median)}, {"mean", jsonio::number(m.mean)},
              {"q3", jsonio::number(m.q3)}, {"max", jsonio::number(m.max)}};
}

}  // namespace biaslab
