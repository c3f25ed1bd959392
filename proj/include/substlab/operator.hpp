#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "core.hpp"
#include "measures.hpp"

namespace substlab {

struct Budget {
  std::uint64_t max_state = std::uint64_t(1) << 20;  // entries per probability vector
  std::uint64_t max_enum = std::uint64_t(1) << 26;   // enumerated rule-prefix pairs
};

// Rule positions that can influence the first N output coordinates; extra
// positions marginalize to 1 under the product law.
inline int covering_positions(const SubstitutionSystem& sys, int n) {
  return (n + sys.set.min_length - 1) / sys.set.min_length;
}

inline void check_state_budget(std::uint64_t need, const Budget& b, const char* what) {
  if (need > b.max_state) throw budget_error(std::string(what) + ": state vector too large", need, b.max_state);
}

inline void check_enum_budget(std::uint64_t need, const Budget& b, const char* what) {
  if (need > b.max_enum) throw budget_error(std::string(what) + ": enumeration too large", need, b.max_enum);
}

inline std::uint64_t enumeration_cost(const SubstitutionSystem& sys, int n) {
  const int m = covering_positions(sys, n);
  std::uint64_t c = 1;
  const std::uint64_t branch =
      static_cast<std::uint64_t>(sys.asize()) * static_cast<std::uint64_t>(sys.rule_count());
  for (int i = 0; i < m; ++i) {
    if (c > (std::uint64_t(1) << 62) / branch) return std::uint64_t(-1);
    c *= branch;
  }
  return c;
}

// ---------------------------------------------------------------------------
// One application of the substitution operator at depth N:
// out(a) = sum over symbol prefixes b in A^m and rule blocks s in S^m with
// s(b) starting with a, of nu[s] * in(b), where m covers the first N output
// coordinates. `in` must be the depth-m marginal of the source measure and
// `start` the law position of the first rule (1 for the operator itself).
// ---------------------------------------------------------------------------

inline ProbVector push_level(const SubstitutionSystem& sys, int n, const ProbVector& in,
                             std::int64_t start = 1) {
  const int k = sys.asize();
  const int m = covering_positions(sys, n);
  if (in.depth < m)
    throw model_error("push_level: input depth " + std::to_string(in.depth) + " < required " +
                      std::to_string(m));

  // prefix marginals of `in` at depths 1..m, so branches whose image already
  // covers N can stop early
  std::vector<ProbVector> marg(static_cast<std::size_t>(m) + 1);
  marg[static_cast<std::size_t>(m)] = in.depth == m ? in : prefix_marginal(in, m);
  for (int d = m - 1; d >= 1; --d)
    marg[static_cast<std::size_t>(d)] = marginalize_last(marg[static_cast<std::size_t>(d + 1)]);

  ProbVector out = make_prob_vector(n, k);
  const std::size_t target = out.p.size();

  // depth-first over (symbol, rule) choices position by position
  std::function<void(int, std::size_t, std::size_t, int, double)> walk =
      [&](int pos, std::size_t b_idx, std::size_t a_idx, int a_len, double weight) {
        if (a_len >= n) {
          out.p[a_idx] += weight * marg[static_cast<std::size_t>(pos)].p[b_idx];
          return;
        }
        const auto& table = sys.law.at(start + pos);
        for (int c = 0; c < k; ++c) {
          for (int r = 0; r < sys.rule_count(); ++r) {
            const Word& img = sys.set.rules[static_cast<std::size_t>(r)].image(c);
            std::size_t idx = a_idx;
            int len = a_len;
            for (Symbol s : img) {
              if (len >= n) break;
              idx = idx * static_cast<std::size_t>(k) + static_cast<std::size_t>(s);
              ++len;
            }
            walk(pos + 1, b_idx * static_cast<std::size_t>(k) + static_cast<std::size_t>(c), idx,
                 len, weight * table[static_cast<std::size_t>(r)]);
          }
        }
      };
  walk(0, 0, 0, 0, 1.0);
  (void)target;
  return out;
}

// ---------------------------------------------------------------------------
// Transition matrices M_N(a, b) = sum over rule blocks s with s(b) starting
// with a of nu[s]. Columns sum to 1.
// ---------------------------------------------------------------------------

struct TransitionMatrix {
  int n_out = 0;
  int n_in = 0;
  std::int64_t start = 1;
  int asize = 0;
  std::vector<double> m;  // row-major, rows indexed by output words

  std::size_t rows() const { return pow_u64(static_cast<std::uint64_t>(asize), n_out); }
  std::size_t cols() const { return pow_u64(static_cast<std::uint64_t>(asize), n_in); }
  double at(std::size_t a, std::size_t b) const { return m[a * cols() + b]; }
  double& at(std::size_t a, std::size_t b) { return m[a * cols() + b]; }
};

inline TransitionMatrix build_transition_matrix(const SubstitutionSystem& sys, int n,
                                                const Budget& budget = Budget{}) {
  const int k = sys.asize();
  const int m = covering_positions(sys, n);
  const std::uint64_t kn = pow_u64(static_cast<std::uint64_t>(k), n);
  check_enum_budget(enumeration_cost(sys, n), budget, "build_transition_matrix");
  check_enum_budget(kn * kn, budget, "build_transition_matrix (dense storage)");

  TransitionMatrix out;
  out.n_out = out.n_in = n;
  out.asize = k;
  out.m.assign(static_cast<std::size_t>(kn * kn), 0.0);

  const std::uint64_t km = pow_u64(static_cast<std::uint64_t>(k), m);
  // kernel over prefix classes, then expanded to full columns
  std::vector<double> kernel(static_cast<std::size_t>(kn * km), 0.0);
  std::function<void(int, std::size_t, std::size_t, int, double)> walk =
      [&](int pos, std::size_t b_idx, std::size_t a_idx, int a_len, double weight) {
        if (pos == m) {
          kernel[a_idx * km + b_idx] += weight;
          return;
        }
        const auto& table = sys.law.at(1 + pos);
        for (int c = 0; c < k; ++c)
          for (int r = 0; r < sys.rule_count(); ++r) {
            const Word& img = sys.set.rules[static_cast<std::size_t>(r)].image(c);
            std::size_t idx = a_idx;
            int len = a_len;
            for (Symbol s : img) {
              if (len >= n) break;
              idx = idx * static_cast<std::size_t>(k) + static_cast<std::size_t>(s);
              ++len;
            }
            walk(pos + 1, b_idx * static_cast<std::size_t>(k) + static_cast<std::size_t>(c), idx,
                 len, weight * table[static_cast<std::size_t>(r)]);
          }
      };
  walk(0, 0, 0, 0, 1.0);

  const std::size_t expand = static_cast<std::size_t>(kn / km);
  for (std::size_t a = 0; a < kn; ++a)
    for (std::size_t bp = 0; bp < km; ++bp) {
      const double v = kernel[a * km + bp];
      if (v == 0.0) continue;
      for (std::size_t rest = 0; rest < expand; ++rest) out.at(a, bp * expand + rest) = v;
    }
  return out;
}

// ---------------------------------------------------------------------------
// Operator action on whole families, and the invariant family by power
// iteration. Level N is seeded from the already-converged level ceil(N/l_S),
// then refined until the sup-norm residual drops below tol.
// ---------------------------------------------------------------------------

inline MarginalFamily apply_operator(const SubstitutionSystem& sys, const MarginalFamily& f) {
  MarginalFamily out;
  out.asize = f.asize;
  for (int n = 1; n <= f.n_max(); ++n)
    out.levels.push_back(push_level(sys, n, f.level(covering_positions(sys, n))));
  return out;
}

inline double sup_diff(const ProbVector& a, const ProbVector& b) {
  double worst = 0;
  for (std::size_t i = 0; i < a.p.size(); ++i) worst = std::max(worst, std::abs(a.p[i] - b.p[i]));
  return worst;
}

// Power iteration for one level; returns a vector whose measured residual
// ||M_N v - v||_inf is below tol.
inline ProbVector invariant_level(const SubstitutionSystem& sys, int n, ProbVector v, double tol,
                                  int max_iter) {
  const int m = covering_positions(sys, n);
  double res = 0;
  for (int it = 0; it < max_iter; ++it) {
    ProbVector nxt = push_level(sys, n, m == n ? v : prefix_marginal(v, m));
    normalize(nxt);
    res = sup_diff(nxt, v);
    if (res < tol) return v;
    v = std::move(nxt);
  }
  throw convergence_error("invariant_level: no convergence at depth " + std::to_string(n) +
                              " (non-primitive system or tiny spectral gap?)",
                          res);
}

inline MarginalFamily invariant_family(const SubstitutionSystem& sys, int n_max, double tol = 1e-12,
                                       int max_iter = 200000, const Budget& budget = Budget{}) {
  if (tol <= 0) throw model_error("invariant_family: tol must be positive");
  check_state_budget(pow_u64(static_cast<std::uint64_t>(sys.asize()), n_max), budget,
                     "invariant_family");
  check_enum_budget(enumeration_cost(sys, n_max), budget, "invariant_family");

  MarginalFamily f;
  f.asize = sys.asize();
  f.levels.push_back(
      invariant_level(sys, 1, uniform_prob_vector(1, sys.asize()), tol, max_iter));
  for (int n = 2; n <= n_max; ++n) {
    const int m = covering_positions(sys, n);
    ProbVector seed = m < n ? push_level(sys, n, f.level(m)) : uniform_prob_vector(n, sys.asize());
    normalize(seed);
    f.levels.push_back(invariant_level(sys, n, std::move(seed), tol, max_iter));
  }
  return f;
}

// ---------------------------------------------------------------------------
// The Markovian approximation scheme mu^(l) = S_nu^l (product measure), with
// vague / truncated-projective distances to the invariant state and the
// invariance residual recorded per iterate.
// ---------------------------------------------------------------------------

struct ApproximationStep {
  int ell;
  double vague;
  double vague_tail;
  double projective;  // truncated at the family depth
  double residual;    // sup-norm distance to its own image under the operator
  MarginalFamily family;
};

struct ApproximationReport {
  std::vector<ApproximationStep> steps;
  MarginalFamily invariant;
};

inline ApproximationReport approximation_scheme(const SubstitutionSystem& sys,
                                                const ProductMeasureSpec& mu0, int ell_max,
                                                int n_depth, double tol = 1e-12,
                                                const Budget& budget = Budget{}) {
  sys.require_constant_length("approximation_scheme");
  for (std::size_t i = 0; i < mu0.marginals.size(); ++i)
    for (double x : mu0.marginals[i])
      if (!(x > 0)) throw model_error("approximation_scheme: mu0 must be strictly positive");

  ApproximationReport rep;
  rep.invariant = invariant_family(sys, n_depth, tol, 200000, budget);
  MarginalFamily cur = family_from_product(mu0, n_depth);
  for (int ell = 0; ell <= ell_max; ++ell) {
    MarginalFamily nxt = apply_operator(sys, cur);
    double residual = 0;
    for (int n = 1; n <= n_depth; ++n)
      residual = std::max(residual, sup_diff(nxt.level(n), cur.level(n)));
    auto vd = vague_distance(cur, rep.invariant, n_depth);
    double pd = projective_distance(cur, rep.invariant, n_depth);
    rep.steps.push_back(ApproximationStep{ell, vd.value, vd.tail_bound, pd, residual, cur});
    cur = std::move(nxt);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Block potential of the iterate mu^(l): Phi^(l)_{n, B(n,l)}(a) =
// -L^-l log mu^(l)[a_B(n,l)]. mu^(l) is block-independent, so conditionals
// reconstructed from the potential are exactly its block marginals.
// ---------------------------------------------------------------------------

struct MarkovBlockPotential {
  int L = 0;
  int ell = 0;
  int asize = 0;
  std::int64_t block_len = 0;
  std::vector<std::vector<double>> block_prob;  // per block index q, word-indexed

  std::int64_t block_of(std::int64_t n) const { return (n - 1) / block_len; }

  // Phi^(l) value at site n for the word on B(n, ell)
  double value(std::int64_t n, const Word& block_word) const {
    const auto& tbl = block_prob[static_cast<std::size_t>(block_of(n))];
    double p = tbl[word_index(block_word, asize)];
    if (p <= 0.0) return kInfiniteDistance;
    return -std::log(p) / static_cast<double>(block_len);
  }
};

inline MarkovBlockPotential block_interaction(const MarginalFamily& mu_ell, int ell, int L) {
  MarkovBlockPotential pot;
  pot.L = L;
  pot.ell = ell;
  pot.asize = mu_ell.asize;
  pot.block_len = 1;
  for (int i = 0; i < ell; ++i) pot.block_len *= L;
  if (pot.block_len > mu_ell.n_max())
    throw model_error("block_interaction: family depth below L^ell");
  const std::int64_t blocks = mu_ell.n_max() / pot.block_len;
  for (std::int64_t q = 0; q < blocks; ++q) {
    std::int64_t lo = q * pot.block_len + 1, hi = (q + 1) * pot.block_len;
    pot.block_prob.push_back(window_marginal(mu_ell.level(static_cast<int>(hi)), lo, hi).p);
  }
  return pot;
}

}  // namespace substlab
