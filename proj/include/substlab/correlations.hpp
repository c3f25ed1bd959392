#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "core.hpp"
#include "measures.hpp"
#include "operator.hpp"

namespace substlab {

// Small dense matrix over symbols.
struct SymbolMatrix {
  int n = 0;
  std::vector<double> a;  // row-major

  static SymbolMatrix zero(int n) { return SymbolMatrix{n, std::vector<double>(static_cast<std::size_t>(n) * n, 0.0)}; }
  static SymbolMatrix identity(int n) {
    SymbolMatrix m = zero(n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
  }
  double at(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }
  double& at(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
};

inline SymbolMatrix multiply(const SymbolMatrix& x, const SymbolMatrix& y) {
  SymbolMatrix r = SymbolMatrix::zero(x.n);
  for (int i = 0; i < x.n; ++i)
    for (int l = 0; l < x.n; ++l) {
      const double v = x.at(i, l);
      if (v == 0.0) continue;
      for (int j = 0; j < x.n; ++j) r.at(i, j) += v * y.at(l, j);
    }
  return r;
}

inline SymbolMatrix matrix_power(const SymbolMatrix& m, int e) {
  SymbolMatrix r = SymbolMatrix::identity(m.n);
  for (int i = 0; i < e; ++i) r = multiply(r, m);
  return r;
}

inline std::vector<double> apply_matrix(const SymbolMatrix& m, const std::vector<double>& v) {
  std::vector<double> out(static_cast<std::size_t>(m.n), 0.0);
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) out[static_cast<std::size_t>(i)] += m.at(i, j) * v[static_cast<std::size_t>(j)];
  return out;
}

// Stationary vector of a column-stochastic matrix by power iteration.
inline std::vector<double> stationary_vector(const SymbolMatrix& m, double tol = 1e-14,
                                             int max_iter = 1000000) {
  std::vector<double> v(static_cast<std::size_t>(m.n), 1.0 / m.n);
  double res = 0;
  for (int it = 0; it < max_iter; ++it) {
    std::vector<double> nxt = apply_matrix(m, v);
    double s = 0;
    for (double x : nxt) s += x;
    for (double& x : nxt) x /= s;
    res = 0;
    for (std::size_t i = 0; i < v.size(); ++i) res = std::max(res, std::abs(nxt[i] - v[i]));
    if (res < tol) return v;
    v = std::move(nxt);
  }
  throw convergence_error("stationary_vector: no convergence", res);
}

// ---------------------------------------------------------------------------
// Level matrices M_{n,j}(a,c): probability that the rule drawn at block
// position n maps symbol c to a word with j-th letter a. Constant-length only.
// ---------------------------------------------------------------------------

inline SymbolMatrix level_matrix(const SubstitutionSystem& sys, std::int64_t n, int j) {
  sys.require_constant_length("level_matrix");
  const int L = sys.length();
  if (j < 1 || j > L) throw model_error("level_matrix: offset j out of range 1..L");
  const auto& w = sys.law.at(n);
  SymbolMatrix m = SymbolMatrix::zero(sys.asize());
  for (Symbol c = 0; c < sys.asize(); ++c)
    for (int r = 0; r < sys.rule_count(); ++r) {
      Symbol a = sys.set.rules[static_cast<std::size_t>(r)].image(c)[static_cast<std::size_t>(j - 1)];
      m.at(a, c) += w[static_cast<std::size_t>(r)];
    }
  return m;
}

// One-site marginal of the invariant state at position n, pulled back through
// the substitution hierarchy: position n descends to ceil(n/L) with offset
// ((n-1) mod L) + 1 until it reaches position 1.
inline std::vector<double> site_marginal(const SubstitutionSystem& sys,
                                         const std::vector<double>& q1, std::int64_t n) {
  sys.require_constant_length("site_marginal");
  if (n < 1) throw model_error("site_marginal: n must be >= 1");
  if (n == 1) return q1;
  const int L = sys.length();
  const std::int64_t m = (n - 1) / L + 1;
  const int j = static_cast<int>((n - 1) % L) + 1;
  return apply_matrix(level_matrix(sys, m, j), site_marginal(sys, q1, m));
}

// ---------------------------------------------------------------------------
// Exact joint law of coordinates (1, n) under the invariant state, by the
// ancestral recursion. While the two ancestors are distinct the branch rules
// are independent and the pair law composes through level matrices; once both
// coordinates descend from position 1 they share a single rule draw.
// ---------------------------------------------------------------------------

inline SymbolMatrix pair_joint_from_q(const SubstitutionSystem& sys, const std::vector<double>& q1,
                                      std::int64_t n) {
  sys.require_constant_length("pair_joint");
  const int L = sys.length();
  if (L < 2) throw unsupported_structure_error("pair_joint: requires length L > 1");
  if (n < 1) throw model_error("pair_joint: n must be >= 1");
  const int k = sys.asize();

  if (n == 1) {
    SymbolMatrix d = SymbolMatrix::zero(k);
    for (int a = 0; a < k; ++a) d.at(a, a) = q1[static_cast<std::size_t>(a)];
    return d;
  }

  const std::int64_t m = (n - 1) / L + 1;
  const int j = static_cast<int>((n - 1) % L) + 1;

  if (m == 1) {
    // both coordinates come from the position-1 symbol through the same rule
    const auto& w = sys.law.at(1);
    SymbolMatrix out = SymbolMatrix::zero(k);
    for (Symbol c = 0; c < k; ++c)
      for (int r = 0; r < sys.rule_count(); ++r) {
        const Word& img = sys.set.rules[static_cast<std::size_t>(r)].image(c);
        out.at(img[0], img[static_cast<std::size_t>(j - 1)]) +=
            w[static_cast<std::size_t>(r)] * q1[static_cast<std::size_t>(c)];
      }
    return out;
  }

  SymbolMatrix jm = pair_joint_from_q(sys, q1, m);
  SymbolMatrix m11 = level_matrix(sys, 1, 1);
  SymbolMatrix mmj = level_matrix(sys, m, j);
  // J_n(a,b) = sum_{c,d} M11(a,c) Mmj(b,d) J_m(c,d)
  SymbolMatrix out = SymbolMatrix::zero(k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) {
      double s = 0;
      for (int c = 0; c < k; ++c)
        for (int d = 0; d < k; ++d) s += m11.at(a, c) * mmj.at(b, d) * jm.at(c, d);
      out.at(a, b) = s;
    }
  return out;
}

inline SymbolMatrix pair_joint(const SubstitutionSystem& sys, const MarginalFamily& invariant,
                               std::int64_t n) {
  return pair_joint_from_q(sys, invariant.level(1).p, n);
}

// ---------------------------------------------------------------------------
// Birkhoff contraction coefficient and Hilbert's projective metric.
// ---------------------------------------------------------------------------

struct BirkhoffCoefficient {
  double delta;
  double tau;
  bool certified;  // false when a zero entry prevents contraction
};

inline BirkhoffCoefficient birkhoff_coefficient(const SymbolMatrix& m) {
  for (double x : m.a)
    if (!(x > 0.0)) return BirkhoffCoefficient{0.0, 1.0, false};
  double delta = std::numeric_limits<double>::infinity();
  for (int a = 0; a < m.n; ++a)
    for (int b = 0; b < m.n; ++b)
      for (int c = 0; c < m.n; ++c)
        for (int d = 0; d < m.n; ++d)
          delta = std::min(delta, std::sqrt(m.at(a, b) * m.at(c, d) / (m.at(a, d) * m.at(c, b))));
  return BirkhoffCoefficient{delta, (1.0 - delta) / (1.0 + delta), true};
}

inline double hilbert_metric(const std::vector<double>& x, const std::vector<double>& y) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) return std::numeric_limits<double>::infinity();
    double r = std::log(x[i] / y[i]);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  return hi - lo;
}

// Smallest e with support(M)^e > 0 (boolean powers), capped by the Wielandt
// bound (n-1)^2 + 1. Empty when not primitive.
inline std::optional<int> primitivity_index(const SymbolMatrix& m) {
  const int n = m.n;
  const int cap = (n - 1) * (n - 1) + 1;
  std::vector<std::uint8_t> b(static_cast<std::size_t>(n) * n), base(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) base[i] = b[i] = m.a[i] > 0.0 ? 1 : 0;
  for (int e = 1; e <= cap; ++e) {
    bool all = true;
    for (std::uint8_t x : b)
      if (!x) {
        all = false;
        break;
      }
    if (all) return e;
    std::vector<std::uint8_t> nxt(b.size(), 0);
    for (int i = 0; i < n; ++i)
      for (int l = 0; l < n; ++l)
        if (b[static_cast<std::size_t>(i) * n + l])
          for (int j = 0; j < n; ++j)
            if (base[static_cast<std::size_t>(l) * n + j]) nxt[static_cast<std::size_t>(i) * n + j] = 1;
    b = std::move(nxt);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Correlation decay profile: exact pair ratios over a list of distances plus
// the fitted exponent and the theoretical bound constants.
// ---------------------------------------------------------------------------

struct CorrelationPoint {
  std::int64_t n;
  SymbolMatrix joint;
  SymbolMatrix ratio;     // joint / (marginal product)
  double max_abs_dev;     // max_{a,b} |ratio - 1|
};

struct CorrelationReport {
  std::vector<CorrelationPoint> points;
  double gamma_hat;    // fitted on dyadic n (NaN when underdetermined)
  double gamma_bound;  // |log eta / log L|
  double delta;
  double tau;
  double eta;          // tau^(1/prim_index)
  int prim_index;      // primitivity index of M_{1,1}
  double c_v;          // largest observed Hilbert path constant
  double c_bound;      // 2 c_v
  std::int64_t n0;     // L^q0 with c_v eta^q0 < 1/2
};

inline double fit_decay_exponent(const std::vector<std::pair<double, double>>& loglog) {
  if (loglog.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto [x, y] : loglog) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(loglog.size());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return -slope;
}

inline CorrelationReport decay_profile(const SubstitutionSystem& sys,
                                       const std::vector<std::int64_t>& n_list) {
  sys.require_constant_length("decay_profile");
  const int L = sys.length();
  if (L < 2) throw unsupported_structure_error("decay_profile: requires length L > 1");

  SymbolMatrix m11 = level_matrix(sys, 1, 1);
  auto prim = primitivity_index(m11);
  if (!prim) throw model_error("decay_profile: M_{1,1} is not primitive");

  CorrelationReport rep;
  rep.prim_index = *prim;
  auto bc = birkhoff_coefficient(m11);
  rep.delta = bc.delta;
  rep.tau = bc.tau;
  // when M_{1,1} has zeros its own tau is 1; the contraction per prim_index
  // steps still gives the per-step rate eta
  auto bcp = birkhoff_coefficient(matrix_power(m11, *prim));
  rep.eta = std::pow(bcp.tau, 1.0 / static_cast<double>(*prim));

  std::vector<double> q = stationary_vector(m11);

  // largest observed Hilbert path constant: |log(M^k(a,c)/q(a))| <= c_v eta^k
  rep.c_v = 0;
  SymbolMatrix pw = SymbolMatrix::identity(m11.n);
  for (int k = 1; k <= 256; ++k) {
    pw = multiply(m11, pw);
    const double ek = std::pow(rep.eta, k);
    if (ek < 1e-13) break;
    for (int a = 0; a < m11.n; ++a)
      for (int c = 0; c < m11.n; ++c)
        rep.c_v = std::max(rep.c_v, std::abs(std::log(pw.at(a, c) / q[static_cast<std::size_t>(a)])) / ek);
  }
  rep.c_bound = 2.0 * rep.c_v;
  int q0 = 0;
  while (rep.c_v * std::pow(rep.eta, q0) >= 0.5 && q0 < 64) ++q0;
  rep.n0 = 1;
  for (int i = 0; i < q0; ++i) rep.n0 *= L;

  std::vector<std::pair<double, double>> loglog;
  for (std::int64_t n : n_list) {
    CorrelationPoint pt;
    pt.n = n;
    pt.joint = pair_joint_from_q(sys, q, n);
    std::vector<double> wn = site_marginal(sys, q, n);
    pt.ratio = SymbolMatrix::zero(m11.n);
    pt.max_abs_dev = 0;
    for (int a = 0; a < m11.n; ++a)
      for (int b = 0; b < m11.n; ++b) {
        pt.ratio.at(a, b) =
            pt.joint.at(a, b) / (q[static_cast<std::size_t>(a)] * wn[static_cast<std::size_t>(b)]);
        pt.max_abs_dev = std::max(pt.max_abs_dev, std::abs(pt.ratio.at(a, b) - 1.0));
      }
    // regression uses the dyadic distances where the deviation is above the
    // floating-point floor
    bool dyadic = true;
    for (std::int64_t t = n; t > 1; t /= L)
      if (t % L != 0) {
        dyadic = false;
        break;
      }
    if (dyadic && n > 1 && pt.max_abs_dev > 1e-13)
      loglog.emplace_back(std::log(static_cast<double>(n)), std::log(pt.max_abs_dev));
    rep.points.push_back(std::move(pt));
  }
  rep.gamma_hat = fit_decay_exponent(loglog);
  rep.gamma_bound = std::abs(std::log(rep.eta) / std::log(static_cast<double>(L)));
  return rep;
}

}  // namespace substlab
