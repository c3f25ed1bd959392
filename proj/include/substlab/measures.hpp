#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "core.hpp"

namespace substlab {

inline constexpr double kInfiniteDistance = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Probability vectors over word spaces and finite-depth marginal families.
// A ProbVector of depth N holds one entry per word in A^N, addressed through
// word_index. Depth 0 is the point mass on the empty word.
// ---------------------------------------------------------------------------

struct ProbVector {
  int depth = 0;
  int asize = 0;
  std::vector<double> p;

  std::size_t size() const { return p.size(); }
  double at(const Word& w) const { return p[word_index(w, asize)]; }
};

inline ProbVector make_prob_vector(int depth, int asize) {
  ProbVector v;
  v.depth = depth;
  v.asize = asize;
  v.p.assign(pow_u64(static_cast<std::uint64_t>(asize), depth), 0.0);
  return v;
}

inline ProbVector uniform_prob_vector(int depth, int asize) {
  ProbVector v = make_prob_vector(depth, asize);
  const double u = 1.0 / static_cast<double>(v.p.size());
  for (double& x : v.p) x = u;
  return v;
}

inline double sum_of(const ProbVector& v) {
  double s = 0;
  for (double x : v.p) s += x;
  return s;
}

inline void normalize(ProbVector& v) {
  double s = sum_of(v);
  if (s <= 0) throw model_error("normalize: non-positive mass");
  for (double& x : v.p) x /= s;
}

// Sum out the last coordinate: A^N -> A^(N-1).
inline ProbVector marginalize_last(const ProbVector& v) {
  if (v.depth == 0) throw model_error("marginalize_last: depth 0");
  ProbVector out = make_prob_vector(v.depth - 1, v.asize);
  const std::size_t k = static_cast<std::size_t>(v.asize);
  for (std::size_t i = 0; i < out.p.size(); ++i) {
    double s = 0;
    for (std::size_t c = 0; c < k; ++c) s += v.p[i * k + c];
    out.p[i] = s;
  }
  return out;
}

inline ProbVector prefix_marginal(const ProbVector& v, int depth) {
  if (depth > v.depth) throw model_error("prefix_marginal: requested depth exceeds vector depth");
  ProbVector out = v;
  while (out.depth > depth) out = marginalize_last(out);
  return out;
}

// Marginal of coordinates s..e (1-based, inclusive) from a depth-e vector.
// The leading s-1 coordinates are the high digits of the index, so summing
// them out is index-arithmetic only.
inline ProbVector window_marginal(const ProbVector& v, std::int64_t s, std::int64_t e) {
  if (e != v.depth || s < 1 || s > e)
    throw model_error("window_marginal: window must end at the vector depth");
  const int len = static_cast<int>(e - s + 1);
  ProbVector out = make_prob_vector(len, v.asize);
  const std::size_t mod = out.p.size();
  for (std::size_t i = 0; i < v.p.size(); ++i) out.p[i % mod] += v.p[i];
  return out;
}

// Kolmogorov-consistent family of marginals v_N, N = 1..n_max.
struct MarginalFamily {
  int asize = 0;
  std::vector<ProbVector> levels;  // levels[i] has depth i+1

  int n_max() const { return static_cast<int>(levels.size()); }
  const ProbVector& level(int n) const { return levels[static_cast<std::size_t>(n - 1)]; }
  ProbVector& level(int n) { return levels[static_cast<std::size_t>(n - 1)]; }
};

// Family given by its deepest level; shallower levels by prefix-marginalizing.
inline MarginalFamily family_from_top(const ProbVector& top) {
  MarginalFamily f;
  f.asize = top.asize;
  f.levels.assign(static_cast<std::size_t>(top.depth), ProbVector{});
  f.levels.back() = top;
  for (int n = top.depth - 1; n >= 1; --n)
    f.level(n) = marginalize_last(f.level(n + 1));
  return f;
}

// max over N < n_max and words a of |sum_c v_{N+1}(a c) - v_N(a)|
inline double consistency_defect(const MarginalFamily& f) {
  if (f.n_max() < 2) throw model_error("consistency_defect: need depth >= 2");
  double worst = 0;
  for (int n = 1; n < f.n_max(); ++n) {
    ProbVector m = marginalize_last(f.level(n + 1));
    for (std::size_t i = 0; i < m.p.size(); ++i)
      worst = std::max(worst, std::abs(m.p[i] - f.level(n).p[i]));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Distances. The vague distance is truncated at depth N with the exact tail
// bound 2^(1-N); the projective distance is a monotone truncation (a lower
// bound for the true rho). Zero entries make rho infinite.
// ---------------------------------------------------------------------------

struct VagueDistance {
  double value;
  double tail_bound;
};

inline VagueDistance vague_distance(const MarginalFamily& f, const MarginalFamily& g, int depth) {
  if (depth > f.n_max() || depth > g.n_max())
    throw model_error("vague_distance: depth exceeds family depth");
  double v = 0;
  for (int n = 1; n <= depth; ++n) {
    double inner = 0;
    const auto& a = f.level(n).p;
    const auto& b = g.level(n).p;
    for (std::size_t i = 0; i < a.size(); ++i) inner += std::abs(a[i] - b[i]);
    v += std::ldexp(inner, -n);
  }
  return VagueDistance{v, std::ldexp(2.0, -depth)};
}

inline double projective_distance(const MarginalFamily& f, const MarginalFamily& g, int depth) {
  if (depth > f.n_max() || depth > g.n_max())
    throw model_error("projective_distance: depth exceeds family depth");
  double worst = 0;
  for (int n = 1; n <= depth; ++n) {
    const auto& a = f.level(n).p;
    const auto& b = g.level(n).p;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] <= 0.0 || b[i] <= 0.0) return kInfiniteDistance;
      worst = std::max(worst, std::abs(std::log(a[i] / b[i])) / static_cast<double>(n));
    }
  }
  return worst;
}

// sup_n rho(nu_1, nu_n) over the finitely many distinct position laws.
inline double law_dispersion(const SubstitutionLaw& law) {
  const auto& first = law.at(1);
  double worst = 0;
  for (std::int64_t pos : law.representative_positions()) {
    const auto& w = law.at(pos);
    for (std::size_t i = 0; i < w.size(); ++i)
      worst = std::max(worst, std::abs(std::log(first[i] / w[i])));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Product measures given by per-position one-marginals.
// ---------------------------------------------------------------------------

struct ProductMeasureSpec {
  int asize = 0;
  std::vector<std::vector<double>> marginals;  // positions 1..marginals.size()
  std::vector<double> fallback;                // positions beyond

  const std::vector<double>& at(std::int64_t pos) const {
    std::size_t i = static_cast<std::size_t>(pos - 1);
    return i < marginals.size() ? marginals[i] : fallback;
  }
};

inline MarginalFamily family_from_product(const ProductMeasureSpec& spec, int n_max) {
  MarginalFamily f;
  f.asize = spec.asize;
  for (int n = 1; n <= n_max; ++n) {
    ProbVector v = make_prob_vector(n, spec.asize);
    for (std::size_t i = 0; i < v.p.size(); ++i) {
      Word w = word_from_index(i, n, spec.asize);
      double p = 1;
      for (int j = 0; j < n; ++j) p *= spec.at(j + 1)[static_cast<std::size_t>(w[static_cast<std::size_t>(j)])];
      v.p[i] = p;
    }
    f.levels.push_back(std::move(v));
  }
  return f;
}

struct ProductProjection {
  ProductMeasureSpec spec;
  MarginalFamily family;
};

// The product measure with the same one-marginals as f, at every position
// within f's horizon. Position-n marginal comes from summing v_n over the
// leading n-1 coordinates.
inline ProductProjection product_from_one_marginals(const MarginalFamily& f) {
  ProductMeasureSpec spec;
  spec.asize = f.asize;
  for (int n = 1; n <= f.n_max(); ++n) {
    ProbVector w = window_marginal(f.level(n), n, n);
    spec.marginals.push_back(w.p);
  }
  spec.fallback = spec.marginals.back();
  return ProductProjection{spec, family_from_product(spec, f.n_max())};
}

}  // namespace substlab
