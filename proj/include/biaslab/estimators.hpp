#pragma once

// Regression fitters and inference: OLS, binary logistic (IRLS), proportional
// odds ordered logit (Newton), single-restriction Wald tests, collinearity
// diagnostics, residuals and predictions.

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "datakit.hpp"
#include "error.hpp"

namespace biaslab {

// ---------------------------------------------------------------------------
// Formula

struct Term {
  enum class Kind { Main, Interaction, Square };
  Kind kind = Kind::Main;
  std::string a;
  std::string b;  // second factor of an interaction

  static Term main(std::string name) { return {Kind::Main, std::move(name), {}}; }
  static Term interaction(std::string x, std::string y) { return {Kind::Interaction, std::move(x), std::move(y)}; }
  static Term square(std::string name) { return {Kind::Square, std::move(name), {}}; }

  std::string label() const {
    switch (kind) {
      case Kind::Main: return a;
      case Kind::Interaction: return a + ":" + b;
      case Kind::Square: return a + "^2";
    }
    return a;
  }

  friend bool operator==(const Term& x, const Term& y) {
    if (x.kind != y.kind) return false;
    if (x.kind == Kind::Interaction)
      return (x.a == y.a && x.b == y.b) || (x.a == y.b && x.b == y.a);
    return x.a == y.a;
  }
};

struct Formula {
  std::string response;
  std::vector<Term> terms;
  bool intercept = true;

  Formula& add(Term t) {
    for (const auto& e : terms)
      if (e == t) fail(ErrorKind::Validation, "formula: duplicate term '" + t.label() + "'");
    terms.push_back(std::move(t));
    return *this;
  }

  /// Every column the formula touches (response first).
  std::vector<std::string> variables() const {
    std::vector<std::string> out{response};
    auto push = [&](const std::string& n) {
      if (std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
    };
    for (const auto& t : terms) {
      push(t.a);
      if (t.kind == Term::Kind::Interaction) push(t.b);
    }
    return out;
  }

  std::string str() const {
    std::string s = response + " ~ ";
    if (terms.empty()) s += intercept ? "1" : "0";
    for (std::size_t i = 0; i < terms.size(); ++i) s += (i ? " + " : "") + terms[i].label();
    if (!intercept && !terms.empty()) s += " - 1";
    return s;
  }

  /// Grammar: `Y ~ X + Z + X:Z + X^2 + I(X^2) + A*B [- 1]`.
  static Formula parse(const std::string& text);
};

namespace detail {

class FormulaParser {
 public:
  explicit FormulaParser(const std::string& s) : s_(s) {}

  Formula run() {
    Formula f;
    f.response = name();
    skip();
    expect('~');
    bool first = true;
    for (;;) {
      skip();
      if (pos_ >= s_.size()) {
        if (first) error("expected a term");
        break;
      }
      char sign = '+';
      if (!first) {
        sign = s_[pos_];
        if (sign != '+' && sign != '-') error("expected '+' or '-'");
        ++pos_;
        skip();
      }
      if (pos_ < s_.size() && (s_[pos_] == '0' || s_[pos_] == '1')) {
        const char c = s_[pos_++];
        if ((c == '1' && sign == '-') || (c == '0' && sign == '+')) f.intercept = false;
        else if (c == '1' && sign == '+') f.intercept = true;
        else error("unexpected constant");
      } else {
        if (sign == '-') error("only '- 1' may be subtracted");
        item(f);
      }
      first = false;
    }
    return f;
  }

 private:
  [[noreturn]] void error(const std::string& msg) const {
    fail(ErrorKind::Validation, "formula parse error at position " + std::to_string(pos_ + 1) + ": " + msg + " in '" + s_ + "'");
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  void expect(char c) {
    skip();
    if (pos_ >= s_.size() || s_[pos_] != c) error(std::string("expected '") + c + "'");
    ++pos_;
  }
  bool peek(char c) {
    skip();
    return pos_ < s_.size() && s_[pos_] == c;
  }
  std::string name() {
    skip();
    const auto start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' || s_[pos_] == '.')) ++pos_;
    if (start == pos_) error("expected a variable name");
    return s_.substr(start, pos_ - start);
  }
  void square_suffix() {
    expect('^');
    skip();
    if (pos_ >= s_.size() || s_[pos_] != '2') error("only the power 2 is supported");
    ++pos_;
  }
  void item(Formula& f) {
    skip();
    if (s_.compare(pos_, 2, "I(") == 0) {
      pos_ += 2;
      const auto n = name();
      square_suffix();
      expect(')');
      f.add(Term::square(n));
      return;
    }
    const auto n = name();
    if (peek('^')) {
      square_suffix();
      f.add(Term::square(n));
    } else if (peek(':')) {
      ++pos_;
      f.add(Term::interaction(n, name()));
    } else if (peek('*')) {
      ++pos_;
      const auto m = name();
      f.add(Term::main(n));
      f.add(Term::main(m));
      f.add(Term::interaction(n, m));
    } else {
      f.add(Term::main(n));
    }
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Formula Formula::parse(const std::string& text) { return detail::FormulaParser(text).run(); }

// ---------------------------------------------------------------------------
// Fit results

enum class Family { Gaussian, Binomial, Ordered };

inline const char* to_string(Family f) {
  switch (f) {
    case Family::Gaussian: return "gaussian";
    case Family::Binomial: return "binomial-logit";
    case Family::Ordered: return "ordered-logit";
  }
  return "gaussian";
}

inline Family family_from_string(const std::string& s) {
  if (s == "gaussian" || s == "ols") return Family::Gaussian;
  if (s == "binomial" || s == "binomial-logit" || s == "logit" || s == "logistic") return Family::Binomial;
  if (s == "ordered" || s == "ordered-logit" || s == "polr") return Family::Ordered;
  fail(ErrorKind::Parameter, "unknown family '" + s + "'");
}

struct FitResult {
  Family family = Family::Gaussian;
  Formula formula;
  std::vector<std::string> terms;
  std::vector<double> b, se, stat, p, beta;
  std::vector<double> cutpoints, cutpoint_se;  // ordered only
  double r_squared = std::numeric_limits<double>::quiet_NaN();
  double adj_r_squared = std::numeric_limits<double>::quiet_NaN();
  double sigma = std::numeric_limits<double>::quiet_NaN();  // residual SE (gaussian)
  double deviance = 0, null_deviance = 0, aic = 0;
  double df_residual = 0;
  std::size_t n_used = 0, n_dropped = 0;
  bool converged = true;
  int iterations = 0;
  std::vector<std::string> warnings;

  std::size_t index_of(const std::string& term) const {
    for (std::size_t i = 0; i < terms.size(); ++i)
      if (terms[i] == term) return i;
    // accept the reversed spelling of an interaction
    if (auto colon = term.find(':'); colon != std::string::npos) {
      const auto rev = term.substr(colon + 1) + ":" + term.substr(0, colon);
      for (std::size_t i = 0; i < terms.size(); ++i)
        if (terms[i] == rev) return i;
    }
    fail(ErrorKind::Lookup, "fit has no term '" + term + "'");
  }
  bool has_term(const std::string& term) const {
    return std::find(terms.begin(), terms.end(), term) != terms.end();
  }
  double coef(const std::string& term) const { return b[index_of(term)]; }
  double std_error(const std::string& term) const { return se[index_of(term)]; }
};

namespace detail {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline double t_two_sided(double t, double df) {
  if (!std::isfinite(t)) return std::isnan(t) ? kNaN : 0.0;
  if (!(df > 0)) return kNaN;
  boost::math::students_t_distribution<double> dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

inline double z_two_sided(double z) {
  if (!std::isfinite(z)) return std::isnan(z) ? kNaN : 0.0;
  boost::math::normal_distribution<double> dist;
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(z)));
}

inline double chisq1_upper(double x) {
  if (!std::isfinite(x)) return std::isnan(x) ? kNaN : 0.0;
  boost::math::chi_squared_distribution<double> dist(1.0);
  return boost::math::cdf(boost::math::complement(dist, x));
}

struct Design {
  Eigen::MatrixXd x;  // n_used x p, intercept column first when present
  Eigen::VectorXd y;
  std::vector<std::string> names;
  std::size_t n_dropped = 0;
};

inline double term_value(const Term& t, const std::vector<const Column*>& cols, std::size_t row) {
  switch (t.kind) {
    case Term::Kind::Main: return cols[0]->values[row];
    case Term::Kind::Interaction: return cols[0]->values[row] * cols[1]->values[row];
    case Term::Kind::Square: return cols[0]->values[row] * cols[0]->values[row];
  }
  return 0;
}

/// Builds the model matrix after listwise deletion over the formula's variables.
inline Design build_design(const Dataset& data, const Formula& f, bool with_intercept) {
  const auto vars = f.variables();
  std::vector<const Column*> vcols;
  for (const auto& v : vars) vcols.push_back(&data.column(v));
  std::vector<std::size_t> rows;
  rows.reserve(data.n_rows());
  for (std::size_t i = 0; i < data.n_rows(); ++i) {
    bool ok = true;
    for (const Column* c : vcols)
      if (c->is_missing(i)) {
        ok = false;
        break;
      }
    if (ok) rows.push_back(i);
  }
  Design d;
  d.n_dropped = data.n_rows() - rows.size();
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto p = static_cast<Eigen::Index>(f.terms.size() + (with_intercept ? 1 : 0));
  d.x.resize(n, p);
  d.y.resize(n);
  const Column& ycol = data.column(f.response);
  for (Eigen::Index i = 0; i < n; ++i) d.y(i) = ycol.values[rows[static_cast<std::size_t>(i)]];
  Eigen::Index j = 0;
  if (with_intercept) {
    d.x.col(0).setOnes();
    d.names.push_back("(Intercept)");
    j = 1;
  }
  for (const auto& t : f.terms) {
    std::vector<const Column*> cols{&data.column(t.a)};
    if (t.kind == Term::Kind::Interaction) cols.push_back(&data.column(t.b));
    for (Eigen::Index i = 0; i < n; ++i) d.x(i, j) = term_value(t, cols, rows[static_cast<std::size_t>(i)]);
    d.names.push_back(t.label());
    ++j;
  }
  return d;
}

inline double col_sd(const Eigen::VectorXd& v) {
  if (v.size() < 2) return kNaN;
  const double m = v.mean();
  return std::sqrt((v.array() - m).square().sum() / static_cast<double>(v.size() - 1));
}

/// Least squares through Householder QR on unit-norm columns. A diagonal of R
/// below 1e-10 times its largest entry marks that column as a linear
/// combination of the preceding ones.
struct QrSolve {
  Eigen::VectorXd coef;
  Eigen::MatrixXd xtx_inv;  // (X'X)^-1
};

inline QrSolve qr_least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<std::string>& names) {
  const auto p = x.cols();
  Eigen::VectorXd norms(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    norms(j) = x.col(j).norm();
    if (norms(j) == 0.0) fail(ErrorKind::SingularDesign, "singular design: term '" + names[static_cast<std::size_t>(j)] + "' is identically zero");
  }
  const Eigen::MatrixXd xs = x * norms.cwiseInverse().asDiagonal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(xs);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  const double rmax = r.diagonal().cwiseAbs().maxCoeff();
  for (Eigen::Index j = 0; j < p; ++j)
    if (std::abs(r(j, j)) <= 1e-10 * rmax)
      fail(ErrorKind::SingularDesign, "singular design: term '" + names[static_cast<std::size_t>(j)] +
                                          "' is collinear with earlier terms");
  const Eigen::VectorXd qty = (qr.householderQ().transpose() * y).head(p);
  QrSolve s;
  s.coef = r.triangularView<Eigen::Upper>().solve(qty).cwiseQuotient(norms);
  const Eigen::MatrixXd rinv = r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  s.xtx_inv = norms.cwiseInverse().asDiagonal() * (rinv * rinv.transpose()) * norms.cwiseInverse().asDiagonal();
  return s;
}

inline void standardize(FitResult& r, const Design& d) {
  r.beta.assign(r.terms.size(), kNaN);
  const double sdy = col_sd(d.y);
  for (std::size_t j = 0; j < r.terms.size(); ++j) {
    if (r.terms[j] == "(Intercept)") r.beta[j] = 0.0;
    else r.beta[j] = r.b[j] * col_sd(d.x.col(static_cast<Eigen::Index>(j))) / sdy;
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// OLS

inline FitResult fit_ols(const Dataset& data, const Formula& f) {
  auto d = detail::build_design(data, f, f.intercept);
  const auto n = d.x.rows();
  const auto p = d.x.cols();
  if (p == 0) fail(ErrorKind::Validation, "fit_ols: model has no terms");
  if (n <= p)
    fail(ErrorKind::EmptyData, "fit_ols: " + std::to_string(n) + " complete rows for " + std::to_string(p) + " parameters");
  const auto qs = detail::qr_least_squares(d.x, d.y, d.names);

  FitResult r;
  r.family = Family::Gaussian;
  r.formula = f;
  r.terms = d.names;
  r.n_used = static_cast<std::size_t>(n);
  r.n_dropped = d.n_dropped;
  r.df_residual = static_cast<double>(n - p);
  const Eigen::VectorXd resid = d.y - d.x * qs.coef;
  const double rss = resid.squaredNorm();
  const double sigma2 = rss / r.df_residual;
  r.sigma = std::sqrt(sigma2);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double b = qs.coef(j);
    const double se = std::sqrt(sigma2 * qs.xtx_inv(j, j));
    r.b.push_back(b);
    r.se.push_back(se);
    r.stat.push_back(b / se);
    r.p.push_back(detail::t_two_sided(b / se, r.df_residual));
  }
  const double tss = f.intercept ? (d.y.array() - d.y.mean()).square().sum() : d.y.squaredNorm();
  if (tss > 0) {
    r.r_squared = std::clamp(1.0 - rss / tss, 0.0, 1.0);
    const double dfi = f.intercept ? 1.0 : 0.0;
    r.adj_r_squared = 1.0 - (1.0 - r.r_squared) * (static_cast<double>(n) - dfi) / r.df_residual;
  }
  r.deviance = rss;
  r.null_deviance = tss;
  const double nn = static_cast<double>(n);
  r.aic = nn * (std::log(2.0 * std::numbers::pi * rss / nn) + 1.0) + 2.0 * static_cast<double>(p + 1);
  detail::standardize(r, d);
  return r;
}

inline FitResult fit_ols(const Dataset& data, const std::string& formula) { return fit_ols(data, Formula::parse(formula)); }

// ---------------------------------------------------------------------------
// Binary logistic regression

namespace detail {

inline double log_inv_logit(double eta) {  // log(1 / (1 + exp(-eta)))
  return eta >= 0 ? -std::log1p(std::exp(-eta)) : eta - std::log1p(std::exp(eta));
}

inline double inv_logit(double eta) {
  return eta >= 0 ? 1.0 / (1.0 + std::exp(-eta)) : std::exp(eta) / (1.0 + std::exp(eta));
}

inline double binomial_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& eta) {
  double dev = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    dev -= 2.0 * (y(i) > 0.5 ? log_inv_logit(eta(i)) : log_inv_logit(-eta(i)));
  return dev;
}

}  // namespace detail

inline FitResult fit_logistic(const Dataset& data, const Formula& f) {
  auto d = detail::build_design(data, f, f.intercept);
  const auto n = d.x.rows();
  const auto p = d.x.cols();
  if (p == 0) fail(ErrorKind::Validation, "fit_logistic: model has no terms");
  std::size_t ones = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (d.y(i) != 0.0 && d.y(i) != 1.0) fail(ErrorKind::Degenerate, "fit_logistic: response must be coded 0/1");
    ones += d.y(i) == 1.0;
  }
  if (ones == 0 || ones == static_cast<std::size_t>(n))
    fail(ErrorKind::Degenerate, "fit_logistic: response has a single class");
  if (n <= p) fail(ErrorKind::EmptyData, "fit_logistic: too few complete rows");

  // Start from mu = (y + 0.5) / 2 like the classic glm initialisation.
  Eigen::VectorXd eta(n), mu(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    mu(i) = (d.y(i) + 0.5) / 2.0;
    eta(i) = std::log(mu(i) / (1.0 - mu(i)));
  }
  double dev = detail::binomial_deviance(d.y, eta);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p), prev_beta = beta;
  Eigen::MatrixXd xtwx_inv;
  bool converged = false;
  int it = 0;
  for (it = 1; it <= 25; ++it) {
    Eigen::VectorXd sw(n), z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = std::max(mu(i) * (1.0 - mu(i)), 1e-300);
      sw(i) = std::sqrt(w);
      z(i) = (eta(i) + (d.y(i) - mu(i)) / w) * sw(i);
    }
    const Eigen::MatrixXd xw = sw.asDiagonal() * d.x;
    const auto qs = detail::qr_least_squares(xw, z, d.names);
    prev_beta = beta;
    beta = qs.coef;
    xtwx_inv = qs.xtx_inv;
    eta = d.x * beta;
    for (Eigen::Index i = 0; i < n; ++i) mu(i) = detail::inv_logit(eta(i));
    const double new_dev = detail::binomial_deviance(d.y, eta);
    const bool done = std::abs(new_dev - dev) / (std::abs(new_dev) + 0.1) < 1e-8;
    dev = new_dev;
    if (done) {
      converged = true;
      break;
    }
  }
  // Information evaluated at the final estimate.
  {
    Eigen::VectorXd sw(n);
    for (Eigen::Index i = 0; i < n; ++i) sw(i) = std::sqrt(std::max(mu(i) * (1.0 - mu(i)), 1e-300));
    const Eigen::MatrixXd xw = sw.asDiagonal() * d.x;
    xtwx_inv = detail::qr_least_squares(xw, Eigen::VectorXd::Zero(n), d.names).xtx_inv;
  }

  FitResult r;
  r.family = Family::Binomial;
  r.formula = f;
  r.terms = d.names;
  r.n_used = static_cast<std::size_t>(n);
  r.n_dropped = d.n_dropped;
  r.df_residual = static_cast<double>(n - p);
  r.iterations = std::min(it, 25);
  r.converged = converged;
  for (Eigen::Index j = 0; j < p; ++j) {
    const double se = std::sqrt(xtwx_inv(j, j));
    r.b.push_back(beta(j));
    r.se.push_back(se);
    r.stat.push_back(beta(j) / se);
    r.p.push_back(detail::z_two_sided(beta(j) / se));
  }
  r.beta.assign(r.terms.size(), detail::kNaN);
  r.deviance = dev;
  const double ybar = static_cast<double>(ones) / static_cast<double>(n);
  {
    const double eta0 = f.intercept ? std::log(ybar / (1.0 - ybar)) : 0.0;
    r.null_deviance = detail::binomial_deviance(d.y, Eigen::VectorXd::Constant(n, eta0));
  }
  r.aic = dev + 2.0 * static_cast<double>(p);

  bool boundary = false;
  for (Eigen::Index i = 0; i < n; ++i)
    if (mu(i) < 1e-10 || mu(i) > 1.0 - 1e-10) boundary = true;
  const double growth = (beta - prev_beta).cwiseAbs().maxCoeff();
  if (boundary && (growth > 1e-3 || !converged)) {
    r.converged = false;
    r.warnings.push_back("complete or quasi-complete separation: fitted probabilities of 0 or 1 with diverging coefficients");
  } else if (!converged) {
    r.warnings.push_back("IRLS did not converge in 25 iterations");
  }
  return r;
}

inline FitResult fit_logistic(const Dataset& data, const std::string& formula) {
  return fit_logistic(data, Formula::parse(formula));
}

// ---------------------------------------------------------------------------
// Proportional-odds ordered logit: P(Y <= k | x) = logistic(zeta_k - x'beta)

namespace detail {

struct OrderedProblem {
  Eigen::MatrixXd x;            // n x p, no intercept
  std::vector<int> cat;         // 0..K-1
  int k = 0;                    // number of categories
};

struct OrderedEval {
  double loglik = 0;
  Eigen::VectorXd grad;  // over (beta, zeta)
  Eigen::MatrixXd hess;  // of the log-likelihood over (beta, zeta)
  bool valid = true;
};

inline double logistic_density(double a) {
  const double f = inv_logit(a);
  return f * (1.0 - f);
}

inline OrderedEval ordered_eval(const OrderedProblem& pr, const Eigen::VectorXd& beta, const Eigen::VectorXd& zeta,
                                bool derivatives) {
  const auto p = pr.x.cols();
  const auto m = p + zeta.size();
  OrderedEval ev;
  if (derivatives) {
    ev.grad = Eigen::VectorXd::Zero(m);
    ev.hess = Eigen::MatrixXd::Zero(m, m);
  }
  const int kmax = pr.k - 1;
  Eigen::VectorXd u(m);
  for (Eigen::Index i = 0; i < pr.x.rows(); ++i) {
    const double eta = pr.x.row(i).dot(beta);
    const int c = pr.cat[static_cast<std::size_t>(i)];
    const bool has_upper = c < kmax;  // finite upper cutpoint zeta_c
    const bool has_lower = c > 0;     // finite lower cutpoint zeta_{c-1}
    const double a = has_upper ? zeta(c) - eta : 0;
    const double bl = has_lower ? zeta(c - 1) - eta : 0;
    double prob;
    if (has_upper && has_lower) {
      // F(a) - F(b) computed through the complement when both tails are near 1
      prob = a > 0 && bl > 0 ? inv_logit(-bl) - inv_logit(-a) : inv_logit(a) - inv_logit(bl);
    } else if (has_upper) {
      prob = inv_logit(a);
    } else {
      prob = inv_logit(-bl);
    }
    if (!(prob > 0)) {
      ev.valid = false;
      ev.loglik = -std::numeric_limits<double>::infinity();
      return ev;
    }
    ev.loglik += std::log(prob);
    if (!derivatives) continue;
    const double fa = has_upper ? logistic_density(a) : 0;
    const double fb = has_lower ? logistic_density(bl) : 0;
    const double fpa = has_upper ? fa * (1.0 - 2.0 * inv_logit(a)) : 0;
    const double fpb = has_lower ? fb * (1.0 - 2.0 * inv_logit(bl)) : 0;
    // u_a = d a / d theta, u_b = d b / d theta
    Eigen::VectorXd ua = Eigen::VectorXd::Zero(m), ub = Eigen::VectorXd::Zero(m);
    if (has_upper) {
      ua.head(p) = -pr.x.row(i).transpose();
      ua(p + c) = 1.0;
    }
    if (has_lower) {
      ub.head(p) = -pr.x.row(i).transpose();
      ub(p + c - 1) = 1.0;
    }
    u = (fa * ua - fb * ub) / prob;
    ev.grad += u;
    ev.hess += (fpa * ua * ua.transpose() - fpb * ub * ub.transpose()) / prob - u * u.transpose();
  }
  return ev;
}

}  // namespace detail

inline FitResult fit_ordered_logit(const Dataset& data, const Formula& f) {
  auto d = detail::build_design(data, f, false);
  const auto n = d.x.rows();
  const auto p = d.x.cols();
  if (n == 0) fail(ErrorKind::EmptyData, "fit_ordered_logit: no complete rows");

  std::set<double> levels;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (d.y(i) != std::round(d.y(i))) fail(ErrorKind::Level, "fit_ordered_logit: response must be integer coded");
    levels.insert(d.y(i));
  }
  if (levels.size() < 2) fail(ErrorKind::Level, "fit_ordered_logit: response needs at least 2 observed levels");
  const double lo = *levels.begin(), hi = *levels.rbegin();
  for (double v = lo; v <= hi; v += 1.0)
    if (!levels.count(v)) fail(ErrorKind::Level, "fit_ordered_logit: level " + format_number(v) + " is empty");

  detail::OrderedProblem pr;
  pr.x = d.x;
  pr.k = static_cast<int>(levels.size());
  pr.cat.resize(static_cast<std::size_t>(n));
  std::vector<double> counts(static_cast<std::size_t>(pr.k), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    pr.cat[static_cast<std::size_t>(i)] = static_cast<int>(d.y(i) - lo);
    counts[static_cast<std::size_t>(pr.cat[static_cast<std::size_t>(i)])] += 1.0;
  }
  const int nz = pr.k - 1;

  // theta = (beta, zeta_1, log-gaps delta_1..delta_{K-2})
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd zeta(nz);
  double cum = 0;
  for (int k = 0; k < nz; ++k) {
    cum += counts[static_cast<std::size_t>(k)] / static_cast<double>(n);
    zeta(k) = std::log(cum / (1.0 - cum));
  }
  auto to_theta = [&](const Eigen::VectorXd& b, const Eigen::VectorXd& z) {
    Eigen::VectorXd th(p + nz);
    th.head(p) = b;
    th(p) = z(0);
    for (int k = 1; k < nz; ++k) th(p + k) = std::log(z(k) - z(k - 1));
    return th;
  };
  auto from_theta = [&](const Eigen::VectorXd& th, Eigen::VectorXd& b, Eigen::VectorXd& z) {
    b = th.head(p);
    z.resize(nz);
    z(0) = th(p);
    for (int k = 1; k < nz; ++k) z(k) = z(k - 1) + std::exp(th(p + k));
  };

  Eigen::VectorXd theta = to_theta(beta, zeta);
  auto ev = detail::ordered_eval(pr, beta, zeta, true);
  bool converged = false;
  int it = 0;
  const auto m = p + nz;
  for (it = 1; it <= 100; ++it) {
    // Chain rule into the gap parameterisation: zeta_k = zeta_1 + sum_{j<k} exp(delta_j).
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(m, m);  // d(beta,zeta)/d theta
    jac.topLeftCorner(p, p).setIdentity();
    for (int k = 0; k < nz; ++k) {
      jac(p + k, p) = 1.0;
      for (int j = 1; j <= k; ++j) jac(p + k, p + j) = std::exp(theta(p + j));
    }
    Eigen::VectorXd g = jac.transpose() * ev.grad;
    Eigen::MatrixXd h = jac.transpose() * ev.hess * jac;
    for (int j = 1; j < nz; ++j) {
      double s = 0;
      for (int k = j; k < nz; ++k) s += ev.grad(p + k);
      h(p + j, p + j) += s * std::exp(theta(p + j));
    }
    // Newton on the negative log-likelihood; fall back to gradient ascent
    // if the Hessian is not negative definite.
    Eigen::LDLT<Eigen::MatrixXd> ldlt(-h);
    Eigen::VectorXd step;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() && (ldlt.vectorD().array() > 0).all()) step = ldlt.solve(g);
    else step = g / std::max(1.0, g.norm());

    double t = 1.0;
    Eigen::VectorXd cand_theta, cb, cz;
    detail::OrderedEval cand;
    bool improved = false;
    for (int half = 0; half < 40; ++half) {
      cand_theta = theta + t * step;
      from_theta(cand_theta, cb, cz);
      cand = detail::ordered_eval(pr, cb, cz, false);
      if (cand.valid && cand.loglik >= ev.loglik - 1e-12) {
        improved = true;
        break;
      }
      t *= 0.5;
    }
    if (!improved) break;
    const double delta = cand.loglik - ev.loglik;
    theta = cand_theta;
    beta = cb;
    zeta = cz;
    ev = detail::ordered_eval(pr, beta, zeta, true);
    if (std::abs(delta) < 1e-8) {
      converged = true;
      break;
    }
  }

  FitResult r;
  r.family = Family::Ordered;
  r.formula = f;
  r.terms = d.names;
  r.n_used = static_cast<std::size_t>(n);
  r.n_dropped = d.n_dropped;
  r.df_residual = static_cast<double>(n - m);
  r.iterations = std::min(it, 100);
  r.converged = converged;
  if (!converged) r.warnings.push_back("ordered logit did not converge");

  // Standard errors from the inverse observed information in (beta, zeta).
  Eigen::MatrixXd info = -ev.hess;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Constant(m, m, detail::kNaN);
  if (ldlt.info() == Eigen::Success && ldlt.isPositive()) cov = ldlt.solve(Eigen::MatrixXd::Identity(m, m));
  else r.warnings.push_back("information matrix is not positive definite");
  for (Eigen::Index j = 0; j < p; ++j) {
    const double se = std::sqrt(cov(j, j));
    r.b.push_back(beta(j));
    r.se.push_back(se);
    r.stat.push_back(beta(j) / se);
    r.p.push_back(detail::z_two_sided(beta(j) / se));
  }
  r.beta.assign(r.terms.size(), detail::kNaN);
  for (int k = 0; k < nz; ++k) {
    r.cutpoints.push_back(zeta(k));
    r.cutpoint_se.push_back(std::sqrt(cov(p + k, p + k)));
  }
  r.deviance = -2.0 * ev.loglik;
  {
    double ll0 = 0;
    for (double c : counts) ll0 += c * std::log(c / static_cast<double>(n));
    r.null_deviance = -2.0 * ll0;
  }
  r.aic = r.deviance + 2.0 * static_cast<double>(m);
  return r;
}

inline FitResult fit_ordered_logit(const Dataset& data, const std::string& formula) {
  return fit_ordered_logit(data, Formula::parse(formula));
}

inline FitResult fit(const Dataset& data, const Formula& f, Family family) {
  switch (family) {
    case Family::Gaussian: return fit_ols(data, f);
    case Family::Binomial: return fit_logistic(data, f);
    case Family::Ordered: return fit_ordered_logit(data, f);
  }
  return fit_ols(data, f);
}

// ---------------------------------------------------------------------------
// Wald test of a single coefficient against zero

struct WaldResult {
  double chisq = 0;
  double p = 1;
};

inline WaldResult wald_chisq(const FitResult& fit, const std::string& term) {
  const double s = fit.stat[fit.index_of(term)];
  WaldResult w;
  w.chisq = s * s;
  w.p = fit.b[fit.index_of(term)] == 0.0 ? 1.0 : detail::chisq1_upper(w.chisq);
  return w;
}

// ---------------------------------------------------------------------------
// Collinearity

struct CollinearityReport {
  std::vector<std::string> predictors;
  std::vector<double> tolerance;
  std::vector<double> vif;
  std::vector<double> eigenvalues;      // descending; includes a unit entry for the intercept
  std::vector<double> condition_index;  // sqrt(max / lambda_j), same order
};

inline CollinearityReport collinearity_diagnostics(const Dataset& data, const Formula& f) {
  auto d = detail::build_design(data, f, false);
  const auto p = d.x.cols();
  if (p < 2) fail(ErrorKind::Validation, "collinearity: need at least 2 predictors");
  const auto n = d.x.rows();
  if (n <= p) fail(ErrorKind::EmptyData, "collinearity: too few complete rows");
  CollinearityReport rep;
  rep.predictors = d.names;
  for (Eigen::Index j = 0; j < p; ++j) {
    Eigen::MatrixXd others(n, p);  // intercept + the other p - 1 predictors
    std::vector<std::string> names{"(Intercept)"};
    others.col(0).setOnes();
    Eigen::Index c = 1;
    for (Eigen::Index k = 0; k < p; ++k) {
      if (k == j) continue;
      others.col(c++) = d.x.col(k);
      names.push_back(d.names[static_cast<std::size_t>(k)]);
    }
    const Eigen::VectorXd target = d.x.col(j);
    const auto qs = detail::qr_least_squares(others, target, names);
    const double rss = (target - others * qs.coef).squaredNorm();
    const double tss = (target.array() - target.mean()).square().sum();
    if (tss <= 0) fail(ErrorKind::SingularDesign, "collinearity: predictor '" + d.names[static_cast<std::size_t>(j)] + "' is constant");
    const double tol = rss / tss;
    if (tol <= 1e-10)
      fail(ErrorKind::SingularDesign, "collinearity: predictor '" + d.names[static_cast<std::size_t>(j)] + "' is a linear combination of the others");
    rep.tolerance.push_back(tol);
    rep.vif.push_back(1.0 / tol);
  }
  // Predictor correlation matrix
  Eigen::MatrixXd centered = d.x.rowwise() - d.x.colwise().mean();
  Eigen::VectorXd sds = (centered.colwise().squaredNorm().array()).sqrt();
  Eigen::MatrixXd corr = (centered.transpose() * centered).array() / (sds * sds.transpose()).array();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(corr, Eigen::EigenvaluesOnly);
  for (Eigen::Index i = 0; i < p; ++i) rep.eigenvalues.push_back(es.eigenvalues()(i));
  if (f.intercept) rep.eigenvalues.push_back(1.0);
  std::sort(rep.eigenvalues.rbegin(), rep.eigenvalues.rend());
  const double lmax = rep.eigenvalues.front();
  for (double l : rep.eigenvalues) rep.condition_index.push_back(std::sqrt(lmax / l));
  return rep;
}

inline CollinearityReport collinearity_diagnostics(const Dataset& data, const std::string& formula) {
  return collinearity_diagnostics(data, Formula::parse(formula));
}

// ---------------------------------------------------------------------------
// Predictions and residuals. Rows with a missing formula variable yield a
// missing output.

inline Column predict(const FitResult& fit, const Dataset& data) {
  const auto& f = fit.formula;
  std::vector<std::vector<const Column*>> cols;
  for (const auto& t : f.terms) {
    std::vector<const Column*> c{&data.column(t.a)};
    if (t.kind == Term::Kind::Interaction) c.push_back(&data.column(t.b));
    cols.push_back(std::move(c));
  }
  const bool icpt = fit.family != Family::Ordered && f.intercept;
  Column out;
  out.name = f.response + "_hat";
  for (std::size_t i = 0; i < data.n_rows(); ++i) {
    bool miss = false;
    double eta = icpt ? fit.b[0] : 0.0;
    for (std::size_t j = 0; j < f.terms.size(); ++j) {
      for (const Column* c : cols[j]) miss |= c->is_missing(i);
      eta += fit.b[j + (icpt ? 1 : 0)] * detail::term_value(f.terms[j], cols[j], i);
    }
    if (miss) {
      out.push_missing();
      continue;
    }
    out.push_back(fit.family == Family::Binomial ? detail::inv_logit(eta) : eta);
  }
  return out;
}

/// Response residuals y - yhat (probability scale for binomial fits).
inline Column residuals(const FitResult& fit, const Dataset& data) {
  if (fit.family == Family::Ordered) fail(ErrorKind::Validation, "residuals: not defined for ordered-logit fits");
  Column yhat = predict(fit, data);
  const Column& y = data.column(fit.formula.response);
  Column out;
  out.name = fit.formula.response + "_resid";
  for (std::size_t i = 0; i < data.n_rows(); ++i) {
    if (yhat.is_missing(i) || y.is_missing(i)) out.push_missing();
    else out.push_back(y.values[i] - yhat.values[i]);
  }
  return out;
}

}  // namespace biaslab
