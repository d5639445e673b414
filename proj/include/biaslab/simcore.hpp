#pragma once

// Directed-equation data generation plus the special-purpose generators:
// exact-correlation multivariate normal draws, clamped integer populations,
// pattern repetition, outlier injection, and blocked randomization.

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "datakit.hpp"
#include "error.hpp"
#include "rand.hpp"

namespace biaslab {

/// Per-row standard deviation computed as (prod of named columns)^power.
/// Houses specifications like sd = sqrt((X*C)^1.5).
struct SdFrom {
  std::vector<std::string> product;
  double power = 1.0;
};

/// Contributes coef * Normal(mean, sd) to each row.
struct ErrorTerm {
  double coef = 1.0;
  double mean = 0.0;
  double sd = 0.0;
  std::optional<SdFrom> sd_from;
};

/// Error term chosen by the integer level of another column.
struct GroupError {
  std::string by;
  std::map<long long, ErrorTerm> levels;
};

struct LinearTerm {
  std::string source;
  double coef = 0.0;
};
struct InteractionTerm {
  std::string a, b;
  double coef = 0.0;
};

struct EquationSpec {
  std::string target;
  double intercept = 0.0;
  std::vector<LinearTerm> linear;
  std::vector<InteractionTerm> interactions;
  std::vector<LinearTerm> squares;
  std::optional<ErrorTerm> error;
  std::optional<GroupError> group_error;

  std::vector<std::string> references() const {
    std::vector<std::string> refs;
    for (const auto& t : linear) refs.push_back(t.source);
    for (const auto& t : interactions) {
      refs.push_back(t.a);
      refs.push_back(t.b);
    }
    for (const auto& t : squares) refs.push_back(t.source);
    if (error && error->sd_from)
      for (const auto& p : error->sd_from->product) refs.push_back(p);
    if (group_error) {
      refs.push_back(group_error->by);
      for (const auto& [lvl, e] : group_error->levels)
        if (e.sd_from)
          for (const auto& p : e.sd_from->product) refs.push_back(p);
    }
    return refs;
  }
};

// Exogenous source kinds.
struct NormalSource {
  double mean = 0, sd = 1;
};
struct UniformSource {
  double lo = 0, hi = 1;
};
/// Integers drawn uniformly with replacement from {lo, ..., hi}.
struct UniformIntSource {
  long long lo = 0, hi = 1;
};
enum class RepeatMode { Each, Times };
struct PatternSource {
  std::vector<double> values;
  RepeatMode mode = RepeatMode::Each;
  std::size_t k = 1;
};
/// Normal draw truncated toward zero, then optionally clamped.
struct ClampedIntNormalSource {
  double mean = 0, sd = 1;
  std::optional<double> lo, hi;
};
struct ConstantSource {
  double value = 0;
};

using SourceKind =
    std::variant<NormalSource, UniformSource, UniformIntSource, PatternSource, ClampedIntNormalSource, ConstantSource>;

struct SourceSpec {
  std::string name;
  SourceKind kind;
};

struct ScmSpec {
  std::size_t n = 0;
  std::vector<SourceSpec> sources;
  std::vector<EquationSpec> equations;
};

// ---------------------------------------------------------------------------

inline Column repeat_pattern(const std::string& name, const std::vector<double>& values, RepeatMode mode,
                             std::size_t k, std::size_t n) {
  if (values.empty() || values.size() * k != n)
    fail(ErrorKind::Parameter, "repeat_pattern: pattern length x repetitions (" + std::to_string(values.size()) + " x " +
                                   std::to_string(k) + ") must equal n = " + std::to_string(n));
  std::vector<double> out;
  out.reserve(n);
  if (mode == RepeatMode::Each) {
    for (double v : values)
      for (std::size_t r = 0; r < k; ++r) out.push_back(v);
  } else {
    for (std::size_t r = 0; r < k; ++r)
      for (double v : values) out.push_back(v);
  }
  return Column(name, std::move(out));
}

inline double clamp_truncated(double draw, std::optional<double> lo, std::optional<double> hi) {
  double v = std::trunc(draw);
  if (lo && v <= *lo) v = *lo;
  if (hi && v >= *hi) v = *hi;
  return v;
}

inline Column clamped_integer_normal(const std::string& name, std::size_t n, double mean, double sd,
                                     std::optional<double> lo, std::optional<double> hi, RngState& rng) {
  if (lo && hi && *lo > *hi) fail(ErrorKind::Parameter, "clamped_integer_normal: lo must not exceed hi");
  if (!(sd >= 0.0)) fail(ErrorKind::Parameter, "clamped_integer_normal: sd must be non-negative");
  std::vector<double> v(n);
  for (auto& x : v) x = clamp_truncated(normal_draw(rng, mean, sd), lo, hi);
  return Column(name, std::move(v));
}

inline Column clamped_integer_normal(std::size_t n, double mean, double sd, double lo, double hi, RngState& rng) {
  return clamped_integer_normal("value", n, mean, sd, lo, hi, rng);
}

/// Checks name resolution in declaration order. A reference to a name that is
/// declared later (or to the equation's own target) is reported as a cycle;
/// a name declared nowhere is reported as unknown.
inline void validate(const ScmSpec& spec) {
  if (spec.n == 0) fail(ErrorKind::Validation, "scm: n must be at least 1");
  std::set<std::string> all;
  for (const auto& s : spec.sources)
    if (!all.insert(s.name).second) fail(ErrorKind::Validation, "scm: duplicate name '" + s.name + "'");
  for (const auto& e : spec.equations)
    if (!all.insert(e.target).second) fail(ErrorKind::Validation, "scm: duplicate name '" + e.target + "'");

  std::set<std::string> defined;
  for (const auto& s : spec.sources) {
    if (const auto* p = std::get_if<PatternSource>(&s.kind)) {
      if (p->values.size() * p->k != spec.n)
        fail(ErrorKind::Validation, "scm source '" + s.name + "': pattern length x repetitions must equal n");
    }
    if (const auto* u = std::get_if<UniformSource>(&s.kind); u && u->lo > u->hi)
      fail(ErrorKind::Validation, "scm source '" + s.name + "': lo > hi");
    if (const auto* u = std::get_if<UniformIntSource>(&s.kind); u && u->lo > u->hi)
      fail(ErrorKind::Validation, "scm source '" + s.name + "': lo > hi");
    if (const auto* c = std::get_if<ClampedIntNormalSource>(&s.kind); c && c->lo && c->hi && *c->lo > *c->hi)
      fail(ErrorKind::Validation, "scm source '" + s.name + "': lo > hi");
    defined.insert(s.name);
  }
  for (const auto& e : spec.equations) {
    for (const auto& r : e.references()) {
      if (defined.count(r)) continue;
      if (all.count(r))
        fail(ErrorKind::Validation, "scm equation '" + e.target + "': cyclic reference to '" + r +
                                        "' (equations evaluate in declaration order)");
      fail(ErrorKind::Validation, "scm equation '" + e.target + "': unknown name '" + r + "'");
    }
    if (e.error && e.group_error)
      fail(ErrorKind::Validation, "scm equation '" + e.target + "': error and group_error are exclusive");
    defined.insert(e.target);
  }
}

namespace detail {

inline double error_sd_for_row(const ErrorTerm& e, const std::vector<const Column*>& product_cols, std::size_t row,
                               const std::string& target) {
  if (!e.sd_from) return e.sd;
  double prod = 1.0;
  for (const Column* c : product_cols) prod *= c->values[row];
  const double sd = std::pow(prod, e.sd_from->power);
  if (!(sd >= 0.0) || !std::isfinite(sd))
    fail(ErrorKind::Parameter, "scm equation '" + target + "': row " + std::to_string(row) +
                                   " yields an undefined error sd (negative base " + std::to_string(prod) + ")");
  return sd;
}

inline std::vector<const Column*> resolve_all(const Dataset& d, const std::vector<std::string>& names) {
  std::vector<const Column*> out;
  for (const auto& n : names) out.push_back(&d.column(n));
  return out;
}

}  // namespace detail

/// Computes one equation's column from columns already present in `data`.
/// Missing inputs propagate to a missing output.
/// `n_rows` sizes the output when `data` has no columns yet.
inline Column evaluate_equation(const Dataset& data, const EquationSpec& eq, RngState& rng, std::size_t n_rows = 0) {
  const std::size_t n = data.n_cols() ? data.n_rows() : n_rows;
  std::vector<double> out(n, eq.intercept);
  std::vector<std::uint8_t> miss(n, 0);

  auto mark = [&](const Column& c) {
    for (std::size_t i = 0; i < n; ++i) miss[i] |= c.missing[i];
  };
  for (const auto& t : eq.linear) {
    const Column& c = data.column(t.source);
    mark(c);
    for (std::size_t i = 0; i < n; ++i) out[i] += t.coef * c.values[i];
  }
  for (const auto& t : eq.interactions) {
    const Column& a = data.column(t.a);
    const Column& b = data.column(t.b);
    mark(a);
    mark(b);
    for (std::size_t i = 0; i < n; ++i) out[i] += t.coef * a.values[i] * b.values[i];
  }
  for (const auto& t : eq.squares) {
    const Column& c = data.column(t.source);
    mark(c);
    for (std::size_t i = 0; i < n; ++i) out[i] += t.coef * c.values[i] * c.values[i];
  }
  if (eq.error) {
    const auto& e = *eq.error;
    const auto prod = e.sd_from ? detail::resolve_all(data, e.sd_from->product) : std::vector<const Column*>{};
    for (std::size_t i = 0; i < n; ++i) {
      const double sd = detail::error_sd_for_row(e, prod, i, eq.target);
      out[i] += e.coef * normal_draw(rng, e.mean, sd);
    }
  } else if (eq.group_error) {
    const auto& g = *eq.group_error;
    const Column& by = data.column(g.by);
    std::map<long long, std::vector<const Column*>> prods;
    for (const auto& [lvl, e] : g.levels)
      prods[lvl] = e.sd_from ? detail::resolve_all(data, e.sd_from->product) : std::vector<const Column*>{};
    for (std::size_t i = 0; i < n; ++i) {
      if (by.is_missing(i)) {
        miss[i] = 1;
        continue;
      }
      const double v = by.values[i];
      const auto lvl = static_cast<long long>(std::llround(v));
      const auto it = g.levels.find(lvl);
      if (static_cast<double>(lvl) != v || it == g.levels.end())
        fail(ErrorKind::Validation, "scm equation '" + eq.target + "': group_error has no level for " + g.by + " = " +
                                        format_number(v));
      const double sd = detail::error_sd_for_row(it->second, prods[lvl], i, eq.target);
      out[i] += it->second.coef * normal_draw(rng, it->second.mean, sd);
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (miss[i]) out[i] = 0.0;
  return Column(eq.target, std::move(out), std::move(miss));
}

inline Column draw_source(const SourceSpec& s, std::size_t n, RngState& rng) {
  return std::visit(
      [&](const auto& k) -> Column {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, NormalSource>) {
          return Column(s.name, normal_draws(rng, n, k.mean, k.sd));
        } else if constexpr (std::is_same_v<K, UniformSource>) {
          std::vector<double> v(n);
          for (auto& x : v) x = uniform_draw(rng, k.lo, k.hi);
          return Column(s.name, std::move(v));
        } else if constexpr (std::is_same_v<K, UniformIntSource>) {
          std::vector<double> v(n);
          for (auto& x : v) x = static_cast<double>(uniform_int(rng, k.lo, k.hi));
          return Column(s.name, std::move(v));
        } else if constexpr (std::is_same_v<K, PatternSource>) {
          return repeat_pattern(s.name, k.values, k.mode, k.k, n);
        } else if constexpr (std::is_same_v<K, ClampedIntNormalSource>) {
          return clamped_integer_normal(s.name, n, k.mean, k.sd, k.lo, k.hi, rng);
        } else {
          return Column(s.name, std::vector<double>(n, k.value));
        }
      },
      s.kind);
}

/// Draws every source, then evaluates equations in declaration order.
inline Dataset evaluate_scm(const ScmSpec& spec, RngState& rng) {
  validate(spec);
  Dataset d;
  for (const auto& s : spec.sources) d.add(draw_source(s, spec.n, rng));
  for (const auto& e : spec.equations) d.add(evaluate_equation(d, e, rng, spec.n));
  return d;
}

// ---------------------------------------------------------------------------
// Multivariate normal with optional exact sample moments

struct CorrTarget {
  std::vector<std::string> names;
  Eigen::MatrixXd corr;
  std::vector<double> means;
  std::vector<double> sds;
  bool empirical_exact = true;
};

namespace detail {

/// Symmetric square root (or inverse square root) through an eigendecomposition.
/// Eigenvalues below -tol * max are a PSD violation; small negatives are clipped.
inline Eigen::MatrixXd sym_power(const Eigen::MatrixXd& m, double power, const char* what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) fail(ErrorKind::Decomposition, std::string(what) + ": eigendecomposition failed");
  Eigen::VectorXd ev = es.eigenvalues();
  const double maxev = ev.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -1e-10 * std::max(1.0, maxev))
      fail(ErrorKind::Decomposition, std::string(what) + ": matrix is not positive semi-definite");
    if (ev(i) < 0) ev(i) = 0;
    if (power < 0) {
      if (ev(i) <= 1e-14 * maxev) fail(ErrorKind::Rank, std::string(what) + ": matrix is rank deficient");
    }
    ev(i) = std::pow(ev(i), power);
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail

inline Dataset mvn_exact(const CorrTarget& t, std::size_t n, RngState& rng) {
  const auto d = static_cast<Eigen::Index>(t.corr.rows());
  if (t.corr.cols() != d || d == 0) fail(ErrorKind::Validation, "mvn: correlation matrix must be square and non-empty");
  if (t.means.size() != static_cast<std::size_t>(d) || t.sds.size() != static_cast<std::size_t>(d) ||
      t.names.size() != static_cast<std::size_t>(d))
    fail(ErrorKind::Validation, "mvn: names, means, and sds must match the matrix dimension");
  for (Eigen::Index i = 0; i < d; ++i) {
    if (std::abs(t.corr(i, i) - 1.0) > 1e-12) fail(ErrorKind::Validation, "mvn: correlation diagonal must be 1");
    for (Eigen::Index j = 0; j < i; ++j)
      if (std::abs(t.corr(i, j) - t.corr(j, i)) > 1e-12) fail(ErrorKind::Validation, "mvn: correlation matrix must be symmetric");
    if (!(t.sds[static_cast<std::size_t>(i)] > 0)) fail(ErrorKind::Validation, "mvn: sds must be positive");
  }
  if (t.empirical_exact && n <= static_cast<std::size_t>(d))
    fail(ErrorKind::Rank, "mvn: exact sample moments need n > dimension");

  Eigen::VectorXd sd_vec(d);
  for (Eigen::Index i = 0; i < d; ++i) sd_vec(i) = t.sds[static_cast<std::size_t>(i)];
  const Eigen::MatrixXd cov = sd_vec.asDiagonal() * t.corr * sd_vec.asDiagonal();
  const Eigen::MatrixXd color = detail::sym_power(cov, 0.5, "mvn target");

  const auto rows = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd z(rows, d);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < d; ++j) z(i, j) = rng.next_std_normal();

  if (t.empirical_exact) {
    const Eigen::RowVectorXd mu = z.colwise().mean();
    z.rowwise() -= mu;
    const Eigen::MatrixXd s = (z.transpose() * z) / static_cast<double>(rows - 1);
    z = z * detail::sym_power(s, -0.5, "mvn sample covariance");
  }
  Eigen::MatrixXd x = z * color;
  Dataset out;
  for (Eigen::Index j = 0; j < d; ++j) {
    std::vector<double> v(n);
    const double m = t.means[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < rows; ++i) v[static_cast<std::size_t>(i)] = x(i, j) + m;
    out.add(Column(t.names[static_cast<std::size_t>(j)], std::move(v)));
  }
  return out;
}

// ---------------------------------------------------------------------------

/// Appends one row holding the given values; other columns are missing.
inline Dataset inject_outlier(const Dataset& data, const std::map<std::string, double>& assignments) {
  for (const auto& [name, v] : assignments)
    if (!data.has(name)) fail(ErrorKind::Validation, "inject_outlier: unknown column '" + name + "'");
  Dataset out = data;
  Dataset row;
  for (const auto& c : data.columns()) {
    Column nc;
    nc.name = c.name;
    if (auto it = assignments.find(c.name); it != assignments.end()) nc.push_back(it->second);
    else nc.push_missing();
    row.add(std::move(nc));
  }
  out.append_rows(row);
  return out;
}

/// Within each stratum, half the rows (one extra coin flip decides the odd
/// row) are assigned to treatment uniformly at random. Strata are processed
/// in ascending order of their value.
inline Column block_randomize(const Dataset& data, const Column& strata, RngState& rng,
                              const std::string& name = "treat") {
  if (strata.size() != data.n_rows()) fail(ErrorKind::Validation, "block_randomize: strata length mismatch");
  std::map<double, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < strata.size(); ++i) {
    if (strata.is_missing(i)) fail(ErrorKind::Stratification, "block_randomize: missing stratum value");
    groups[strata.values[i]].push_back(i);
  }
  std::vector<double> assign(strata.size(), 0.0);
  for (const auto& [value, rows] : groups) {
    if (rows.size() < 2)
      fail(ErrorKind::Stratification, "block_randomize: stratum " + format_number(value) + " has fewer than 2 rows");
    std::size_t k = rows.size() / 2;
    if (rows.size() % 2 == 1 && (rng.next_u64() >> 63)) ++k;
    for (auto idx : sample_indices(rng, rows.size(), k, false)) assign[rows[idx]] = 1.0;
  }
  return Column(name, std::move(assign));
}

inline Column block_randomize(const Dataset& data, std::string_view strata, RngState& rng,
                              const std::string& name = "treat") {
  return block_randomize(data, data.column(strata), rng, name);
}

}  // namespace biaslab
