#pragma once

// Tabular data model with explicit missingness, descriptive statistics, and
// CSV interchange.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace biaslab {

struct Column {
  std::string name;
  std::vector<double> values;
  std::vector<std::uint8_t> missing;  // 1 = missing; same length as values

  Column() = default;
  Column(std::string n, std::vector<double> v)
      : name(std::move(n)), values(std::move(v)), missing(values.size(), 0) {}
  Column(std::string n, std::vector<double> v, std::vector<std::uint8_t> m)
      : name(std::move(n)), values(std::move(v)), missing(std::move(m)) {
    if (missing.size() != values.size()) fail(ErrorKind::Validation, "column '" + name + "': missing flags length mismatch");
  }

  std::size_t size() const noexcept { return values.size(); }
  bool is_missing(std::size_t i) const noexcept { return missing[i] != 0; }

  std::size_t n_missing() const noexcept {
    return static_cast<std::size_t>(std::count(missing.begin(), missing.end(), std::uint8_t{1}));
  }

  /// Non-missing values in row order.
  std::vector<double> observed() const {
    std::vector<double> out;
    out.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
      if (!missing[i]) out.push_back(values[i]);
    return out;
  }

  void push_back(double v) {
    values.push_back(v);
    missing.push_back(0);
  }
  void push_missing() {
    values.push_back(0.0);
    missing.push_back(1);
  }
  void set_missing(std::size_t i) {
    values[i] = 0.0;
    missing[i] = 1;
  }
};

class Dataset {
 public:
  Dataset() = default;

  std::size_t n_rows() const noexcept { return columns_.empty() ? 0 : columns_.front().size(); }
  std::size_t n_cols() const noexcept { return columns_.size(); }
  const std::vector<Column>& columns() const noexcept { return columns_; }

  bool has(std::string_view name) const noexcept { return find(name) != nullptr; }

  const Column& column(std::string_view name) const {
    if (const Column* c = find(name)) return *c;
    fail(ErrorKind::Lookup, "unknown column '" + std::string(name) + "'");
  }
  Column& column(std::string_view name) {
    for (auto& c : columns_)
      if (c.name == name) return c;
    fail(ErrorKind::Lookup, "unknown column '" + std::string(name) + "'");
  }

  /// Appends a column; its length must match existing rows and its name must be new.
  void add(Column col) {
    if (has(col.name)) fail(ErrorKind::Validation, "duplicate column name '" + col.name + "'");
    if (!columns_.empty() && col.size() != n_rows())
      fail(ErrorKind::Validation, "column '" + col.name + "' has " + std::to_string(col.size()) +
                                      " rows, dataset has " + std::to_string(n_rows()));
    columns_.push_back(std::move(col));
  }

  /// Adds or overwrites.
  void set(Column col) {
    for (auto& c : columns_) {
      if (c.name == col.name) {
        if (col.size() != n_rows()) fail(ErrorKind::Validation, "column '" + col.name + "' length mismatch");
        c = std::move(col);
        return;
      }
    }
    add(std::move(col));
  }

  Dataset take_rows(const std::vector<std::size_t>& rows) const {
    Dataset out;
    for (const auto& c : columns_) {
      Column nc;
      nc.name = c.name;
      nc.values.reserve(rows.size());
      nc.missing.reserve(rows.size());
      for (auto r : rows) {
        nc.values.push_back(c.values[r]);
        nc.missing.push_back(c.missing[r]);
      }
      out.columns_.push_back(std::move(nc));
    }
    return out;
  }

  /// Row-wise concatenation; both datasets must have identical column names in order.
  void append_rows(const Dataset& other) {
    if (columns_.empty()) {
      *this = other;
      return;
    }
    if (other.columns_.size() != columns_.size()) fail(ErrorKind::Validation, "append_rows: column sets differ");
    for (std::size_t j = 0; j < columns_.size(); ++j) {
      if (other.columns_[j].name != columns_[j].name) fail(ErrorKind::Validation, "append_rows: column sets differ");
      auto& c = columns_[j];
      const auto& o = other.columns_[j];
      c.values.insert(c.values.end(), o.values.begin(), o.values.end());
      c.missing.insert(c.missing.end(), o.missing.begin(), o.missing.end());
    }
  }

  friend bool operator==(const Dataset& a, const Dataset& b) {
    if (a.columns_.size() != b.columns_.size()) return false;
    for (std::size_t j = 0; j < a.columns_.size(); ++j) {
      const auto& x = a.columns_[j];
      const auto& y = b.columns_[j];
      if (x.name != y.name || x.missing != y.missing || x.size() != y.size()) return false;
      for (std::size_t i = 0; i < x.size(); ++i)
        if (!x.missing[i] && x.values[i] != y.values[i]) return false;
    }
    return true;
  }

 private:
  const Column* find(std::string_view name) const noexcept {
    for (const auto& c : columns_)
      if (c.name == name) return &c;
    return nullptr;
  }

  std::vector<Column> columns_;
};

// ---------------------------------------------------------------------------
// Descriptive statistics

struct SummaryStats {
  std::size_t n = 0;
  std::size_t n_missing = 0;
  double min = 0, q1 = 0, median = 0, mean = 0, q3 = 0, max = 0;
  double sd = 0, variance = 0;
  std::optional<double> skew;             // empty when sd == 0
  std::optional<double> excess_kurtosis;  // empty when sd == 0
};

namespace detail {

inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  const auto n = sorted.size();
  const double h = static_cast<double>(n - 1) * p;  // zero-based form of (n-1)p + 1
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, n - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double mean_of(const std::vector<double>& v) {
  // Two-pass mean keeps large-offset columns (incomes near 35000) accurate.
  double s = 0;
  for (double x : v) s += x;
  double m = s / static_cast<double>(v.size());
  double corr = 0;
  for (double x : v) corr += x - m;
  return m + corr / static_cast<double>(v.size());
}

struct Moments {
  double mean, m2, m3, m4;  // central moments with 1/n
};

inline Moments central_moments(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s2 = 0, s3 = 0, s4 = 0;
  for (double x : v) {
    const double d = x - m;
    const double d2 = d * d;
    s2 += d2;
    s3 += d2 * d;
    s4 += d2 * d2;
  }
  const double n = static_cast<double>(v.size());
  return {m, s2 / n, s3 / n, s4 / n};
}

inline double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace detail

inline double quantile_type7(const std::vector<double>& values, double p) {
  if (!(p >= 0.0 && p <= 1.0)) fail(ErrorKind::Parameter, "quantile: p must lie in [0, 1]");
  if (values.empty()) fail(ErrorKind::EmptyData, "quantile: no values");
  std::vector<double> sorted(values);
  std::sort(sorted.begin(), sorted.end());
  return detail::quantile_sorted(sorted, p);
}

inline double quantile_type7(const Column& col, double p) { return quantile_type7(col.observed(), p); }

inline SummaryStats summarize(const std::vector<double>& v, std::size_t n_missing = 0) {
  if (v.empty()) fail(ErrorKind::EmptyData, "summarize: no non-missing values");
  SummaryStats s;
  s.n = v.size();
  s.n_missing = n_missing;
  std::vector<double> sorted(v);
  std::sort(sorted.begin(), sorted.end());
  s.min = sorted.front();
  s.max = sorted.back();
  s.q1 = detail::quantile_sorted(sorted, 0.25);
  s.median = detail::quantile_sorted(sorted, 0.5);
  s.q3 = detail::quantile_sorted(sorted, 0.75);
  const auto mom = detail::central_moments(v);
  s.mean = mom.mean;
  s.sd = detail::sample_sd(v);
  s.variance = s.sd * s.sd;
  if (mom.m2 > 0.0) {
    s.skew = mom.m3 / std::pow(mom.m2, 1.5);
    s.excess_kurtosis = mom.m4 / (mom.m2 * mom.m2) - 3.0;
  }
  return s;
}

inline SummaryStats summarize(const Column& col) {
  if (col.size() == col.n_missing()) fail(ErrorKind::EmptyData, "summarize: column '" + col.name + "' is entirely missing");
  return summarize(col.observed(), col.n_missing());
}

/// Ranks 1..n with ties sharing the mean of their rank span.
inline std::vector<double> ranks_average_ties(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && v[order[j]] == v[order[i]]) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

inline std::vector<double> ranks_average_ties(const Column& col) {
  auto obs = col.observed();
  if (obs.empty()) fail(ErrorKind::EmptyData, "ranks: column '" + col.name + "' is empty");
  return ranks_average_ties(obs);
}

namespace detail {

inline double pearson_raw(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 3) fail(ErrorKind::EmptyData, "correlation needs at least 3 complete pairs");
  const double mx = mean_of(x), my = mean_of(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) fail(ErrorKind::Degenerate, "correlation of a zero-variance series");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline void paired_complete(const Column& x, const Column& y, std::vector<double>& xs, std::vector<double>& ys) {
  if (x.size() != y.size()) fail(ErrorKind::Validation, "paired columns differ in length");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x.is_missing(i) || y.is_missing(i)) continue;
    xs.push_back(x.values[i]);
    ys.push_back(y.values[i]);
  }
}

}  // namespace detail

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) fail(ErrorKind::Validation, "pearson: length mismatch");
  return detail::pearson_raw(x, y);
}

inline double pearson(const Column& x, const Column& y) {
  std::vector<double> xs, ys;
  detail::paired_complete(x, y, xs, ys);
  return detail::pearson_raw(xs, ys);
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) fail(ErrorKind::Validation, "spearman: length mismatch");
  return detail::pearson_raw(ranks_average_ties(x), ranks_average_ties(y));
}

/// Pairwise deletion, then Pearson on average-tie ranks.
inline double spearman(const Column& x, const Column& y) {
  std::vector<double> xs, ys;
  detail::paired_complete(x, y, xs, ys);
  return spearman(xs, ys);
}

// ---------------------------------------------------------------------------
// Covariate balance

struct BalanceRow {
  std::string covariate;
  double delta_mean = 0;
  double delta_sd = 0;
  std::optional<double> delta_skew;
  std::optional<double> delta_kurtosis;
};

struct BalanceReport {
  std::vector<BalanceRow> rows;
  std::size_t n_treatment = 0;
  std::size_t n_control = 0;
};

/// Treatment (group == 1) minus control (group == 0) for each covariate's
/// mean, sd, skew, and excess kurtosis.
inline BalanceReport balance_diff(const Dataset& data, const Column& group, const std::vector<std::string>& covariates) {
  if (group.size() != data.n_rows()) fail(ErrorKind::Validation, "balance_diff: group column length mismatch");
  BalanceReport rep;
  for (std::size_t i = 0; i < group.size(); ++i) {
    if (group.is_missing(i)) continue;
    if (group.values[i] == 1.0) ++rep.n_treatment;
    else if (group.values[i] == 0.0) ++rep.n_control;
    else fail(ErrorKind::Validation, "balance_diff: group values must be 0 or 1");
  }
  if (rep.n_treatment == 0 || rep.n_control == 0) fail(ErrorKind::Stratification, "balance_diff: both groups must be non-empty");
  for (const auto& name : covariates) {
    const Column& c = data.column(name);
    std::vector<double> tr, co;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (group.is_missing(i) || c.is_missing(i)) continue;
      (group.values[i] == 1.0 ? tr : co).push_back(c.values[i]);
    }
    const SummaryStats st = summarize(tr);
    const SummaryStats sc = summarize(co);
    BalanceRow row;
    row.covariate = name;
    row.delta_mean = st.mean - sc.mean;
    row.delta_sd = st.sd - sc.sd;
    if (st.skew && sc.skew) row.delta_skew = *st.skew - *sc.skew;
    if (st.excess_kurtosis && sc.excess_kurtosis) row.delta_kurtosis = *st.excess_kurtosis - *sc.excess_kurtosis;
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

inline BalanceReport balance_diff(const Dataset& data, std::string_view group, const std::vector<std::string>& covariates) {
  return balance_diff(data, data.column(group), covariates);
}

// ---------------------------------------------------------------------------
// Missingness

struct ListwiseResult {
  Dataset data;
  std::size_t n_removed = 0;
  bool empty() const noexcept { return data.n_rows() == 0; }
};

inline ListwiseResult listwise_complete(const Dataset& data, const std::vector<std::string>& vars) {
  std::vector<const Column*> cols;
  for (const auto& v : vars) cols.push_back(&data.column(v));
  std::vector<std::size_t> keep;
  keep.reserve(data.n_rows());
  for (std::size_t i = 0; i < data.n_rows(); ++i) {
    bool ok = true;
    for (const Column* c : cols)
      if (c->is_missing(i)) {
        ok = false;
        break;
      }
    if (ok) keep.push_back(i);
  }
  ListwiseResult r;
  r.n_removed = data.n_rows() - keep.size();
  r.data = keep.size() == data.n_rows() ? data : data.take_rows(keep);
  return r;
}

// ---------------------------------------------------------------------------
// Row predicates: conjunctions of single-column threshold comparisons.

struct RowFilter {
  std::string var;
  std::string op;  // one of < <= > >= == !=
  double value = 0.0;

  bool test(double v) const {
    if (op == "<") return v < value;
    if (op == "<=") return v <= value;
    if (op == ">") return v > value;
    if (op == ">=") return v >= value;
    if (op == "==") return v == value;
    if (op == "!=") return v != value;
    fail(ErrorKind::Validation, "filter: unknown operator '" + op + "'");
  }
};

inline void validate_filter(const RowFilter& f) {
  static const char* ops[] = {"<", "<=", ">", ">=", "==", "!="};
  if (std::find(std::begin(ops), std::end(ops), f.op) == std::end(ops))
    fail(ErrorKind::Validation, "filter: unknown operator '" + f.op + "'");
}

/// Row indices satisfying every filter; a missing value fails its filter.
inline std::vector<std::size_t> matching_rows(const Dataset& data, const std::vector<RowFilter>& filters) {
  std::vector<const Column*> cols;
  for (const auto& f : filters) {
    validate_filter(f);
    cols.push_back(&data.column(f.var));
  }
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < data.n_rows(); ++i) {
    bool ok = true;
    for (std::size_t j = 0; j < filters.size() && ok; ++j)
      ok = !cols[j]->is_missing(i) && filters[j].test(cols[j]->values[i]);
    if (ok) rows.push_back(i);
  }
  return rows;
}

inline Dataset filter_rows(const Dataset& data, const std::vector<RowFilter>& filters) {
  if (filters.empty()) return data;
  return data.take_rows(matching_rows(data, filters));
}

// ---------------------------------------------------------------------------
// CSV: header row of names, empty field = missing, 17 significant digits.

inline std::string format_number(double v) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(len));
}

inline void write_csv(std::ostream& os, const Dataset& d) {
  const auto& cols = d.columns();
  for (std::size_t j = 0; j < cols.size(); ++j) os << (j ? "," : "") << cols[j].name;
  os << '\n';
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      if (j) os << ',';
      if (!cols[j].is_missing(i)) os << format_number(cols[j].values[i]);
    }
    os << '\n';
  }
}

inline std::string to_csv(const Dataset& d) {
  std::ostringstream os;
  write_csv(os, d);
  return os.str();
}

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"')) s.remove_suffix(1);
  return s;
}

}  // namespace detail

inline Dataset read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) fail(ErrorKind::Io, "csv: missing header row");
  std::vector<Column> cols;
  for (auto name : detail::split_csv_line(line)) {
    Column c;
    c.name = std::string(detail::trim(name));
    cols.push_back(std::move(c));
  }
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != cols.size())
      fail(ErrorKind::Io, "csv line " + std::to_string(lineno) + ": expected " + std::to_string(cols.size()) +
                              " fields, found " + std::to_string(fields.size()));
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const auto f = detail::trim(fields[j]);
      if (f.empty() || f == "NA" || f == "NaN") {
        cols[j].push_missing();
        continue;
      }
      double v = 0;
      const auto* first = f.data();
      const auto* last = f.data() + f.size();
      if (*first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last)
        fail(ErrorKind::Io, "csv line " + std::to_string(lineno) + ", column " + std::to_string(j + 1) +
                                ": cannot parse '" + std::string(f) + "'");
      cols[j].push_back(v);
    }
  }
  Dataset d;
  for (auto& c : cols) d.add(std::move(c));
  return d;
}

inline Dataset read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  return read_csv(in);
}

inline Dataset from_csv(const std::string& text) {
  std::istringstream is(text);
  return read_csv(is);
}

}  // namespace biaslab
