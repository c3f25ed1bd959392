#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "core.hpp"
#include "measures.hpp"
#include "operator.hpp"

namespace substlab {

// The unique L-adic interval of generation `gen` containing site n:
// q L^gen + {1, ..., L^gen} with q = floor((n-1) / L^gen).
struct LadicBlock {
  std::int64_t n = 0;
  int gen = 0;
  std::int64_t start = 0;
  std::int64_t len = 0;

  std::int64_t end() const { return start + len - 1; }  // inclusive
  std::int64_t index() const { return (start - 1) / len; }
};

inline std::int64_t ipow(std::int64_t base, int e) {
  std::int64_t r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

inline LadicBlock ladic_block(std::int64_t n, int gen, int L) {
  if (n < 1 || gen < 0) throw model_error("ladic_block: need n >= 1, gen >= 0");
  LadicBlock b;
  b.n = n;
  b.gen = gen;
  b.len = ipow(L, gen);
  b.start = ((n - 1) / b.len) * b.len + 1;
  return b;
}

// ---------------------------------------------------------------------------
// The hierarchical interaction of the invariant state. The per-site value on
// the L-adic block B(n, gen) is
//   Phi_{n,B}(a) = L^-gen ( sum_k log mu[a over k-th child block] - log mu[a over B] ),
// with the generation-0 term -log mu[a_n]_n. Values depend on n only through
// the block. Block marginals are precomputed from the invariant family.
// ---------------------------------------------------------------------------

class HierarchicalPotential {
 public:
  int L = 0;
  int ell_max = 0;
  int asize = 0;
  std::int64_t depth = 0;      // family depth backing the tables
  double rho_trunc = 0;        // truncated projective distance to the matched product
  double K = 0;                // summability constant L * rho_trunc
  std::vector<double> norm_bounds;  // measured sup |Phi| per generation

  // tables[gen][q]: marginal of the invariant state on block q of that
  // generation, indexed by the word over the block
  std::vector<std::vector<std::vector<double>>> tables;

  std::int64_t block_len(int gen) const { return ipow(L, gen); }
  std::int64_t block_count(int gen) const { return depth / block_len(gen); }
  double tail_constant() const { return K / static_cast<double>(L - 1); }  // K_phi

  // per-site value from the word index over the block
  double value_by_index(std::int64_t q, int gen, std::size_t widx) const {
    const auto& blk = tables[static_cast<std::size_t>(gen)][static_cast<std::size_t>(q)];
    if (gen == 0) {
      const double p = blk[widx];
      return p > 0.0 ? -std::log(p) : kInfiniteDistance;
    }
    const double pb = blk[widx];
    if (!(pb > 0.0)) return kInfiniteDistance;
    const std::int64_t clen = block_len(gen - 1);
    const std::size_t csize = static_cast<std::size_t>(ipow(asize, static_cast<int>(clen)));
    double acc = -std::log(pb);
    std::size_t rest = widx;
    std::size_t shift = static_cast<std::size_t>(ipow(asize, static_cast<int>(clen * (L - 1))));
    for (int k = 0; k < L; ++k) {
      const std::size_t sub = rest / shift;
      rest %= shift;
      if (k + 1 < L) shift /= csize;
      const double pc = tables[static_cast<std::size_t>(gen - 1)][static_cast<std::size_t>(q * L + k)][sub];
      if (!(pc > 0.0)) return kInfiniteDistance;
      acc += std::log(pc);
    }
    return acc / static_cast<double>(block_len(gen));
  }

  // per-site value extracted from a context word that starts at position 1
  double value_in_context(std::int64_t n, int gen, const Word& ctx) const {
    LadicBlock b = ladic_block(n, gen, L);
    if (b.end() > static_cast<std::int64_t>(ctx.size()))
      throw model_error("potential: context shorter than B(n," + std::to_string(gen) + ")");
    std::size_t widx = 0;
    for (std::int64_t i = b.start; i <= b.end(); ++i)
      widx = widx * static_cast<std::size_t>(asize) + static_cast<std::size_t>(ctx[static_cast<std::size_t>(i - 1)]);
    return value_by_index(b.index(), gen, widx);
  }

  // oscillation of one block's per-site value over its word space
  double oscillation(std::int64_t q, int gen) const {
    const std::size_t words = tables[static_cast<std::size_t>(gen)][static_cast<std::size_t>(q)].size();
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t w = 0; w < words; ++w) {
      const double v = value_by_index(q, gen, w);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    return hi - lo;
  }
};

inline HierarchicalPotential build_potential(const MarginalFamily& invariant, int L, int ell_max) {
  HierarchicalPotential pot;
  pot.L = L;
  pot.ell_max = ell_max;
  pot.asize = invariant.asize;
  pot.depth = invariant.n_max();
  if (pot.block_len(ell_max) > pot.depth)
    throw model_error("build_potential: family depth below L^ell_max");

  for (int g = 0; g <= ell_max; ++g) {
    std::vector<std::vector<double>> gen_tables;
    const std::int64_t len = pot.block_len(g);
    for (std::int64_t q = 0; q < pot.block_count(g); ++q) {
      const std::int64_t lo = q * len + 1, hi = (q + 1) * len;
      gen_tables.push_back(window_marginal(invariant.level(static_cast<int>(hi)), lo, hi).p);
    }
    pot.tables.push_back(std::move(gen_tables));
  }

  auto proj = product_from_one_marginals(invariant);
  pot.rho_trunc = projective_distance(proj.family, invariant, invariant.n_max());
  pot.K = static_cast<double>(L) * pot.rho_trunc;

  for (int g = 0; g <= ell_max; ++g) {
    double worst = 0;
    for (std::int64_t q = 0; q < pot.block_count(g); ++q) {
      const std::size_t words = pot.tables[static_cast<std::size_t>(g)][static_cast<std::size_t>(q)].size();
      for (std::size_t w = 0; w < words; ++w)
        worst = std::max(worst, std::abs(pot.value_by_index(q, g, w)));
    }
    pot.norm_bounds.push_back(worst);
  }
  return pot;
}

// ---------------------------------------------------------------------------
// Local potentials, total energies, conditionals.
// ---------------------------------------------------------------------------

struct LocalPotential {
  double value;
  double tail_bound;  // K L^-ell_trunc / (L-1) from the geometric norm decay
};

inline LocalPotential local_potential(const HierarchicalPotential& pot, std::int64_t n,
                                      const Word& ctx, int ell_trunc) {
  if (ell_trunc > pot.ell_max) throw model_error("local_potential: ell_trunc beyond potential depth");
  double v = 0;
  for (int g = 0; g <= ell_trunc; ++g) v += pot.value_in_context(n, g, ctx);
  const double tail =
      pot.K / std::pow(static_cast<double>(pot.L), ell_trunc) / static_cast<double>(pot.L - 1);
  return LocalPotential{v, tail};
}

inline double total_energy(const HierarchicalPotential& pot, const std::vector<std::int64_t>& sites,
                           const Word& ctx, int ell_trunc) {
  double h = 0;
  for (std::int64_t n : sites) h += local_potential(pot, n, ctx, ell_trunc).value;
  return h;
}

// Boltzmann conditional over the sites of Lambda given the boundary word
// (its entries on Lambda are ignored). Indexed by the word over Lambda in
// site order.
inline std::vector<double> gibbs_conditional(const HierarchicalPotential& pot,
                                             const std::vector<std::int64_t>& sites,
                                             const Word& boundary, int ell_trunc) {
  const std::size_t combos = static_cast<std::size_t>(ipow(pot.asize, static_cast<int>(sites.size())));
  std::vector<double> energy(combos);
  Word ctx = boundary;
  for (std::size_t w = 0; w < combos; ++w) {
    std::size_t rest = w;
    for (std::size_t i = sites.size(); i-- > 0;) {
      ctx[static_cast<std::size_t>(sites[i] - 1)] = static_cast<Symbol>(rest % pot.asize);
      rest /= static_cast<std::size_t>(pot.asize);
    }
    energy[w] = total_energy(pot, sites, ctx, ell_trunc);
  }
  double lo = energy[0];
  for (double e : energy) lo = std::min(lo, e);
  double z = 0;
  std::vector<double> out(combos);
  for (std::size_t w = 0; w < combos; ++w) z += out[w] = std::exp(lo - energy[w]);
  for (double& x : out) x /= z;
  return out;
}

// Finite-volume Gibbs measure on B(1, ell) with boundary condition `boundary`
// outside the volume: mu{c} proportional to exp(-sum_{n in B(1,ell)} phi_n(c)).
inline ProbVector finite_volume_measure(const HierarchicalPotential& pot, const Word& boundary,
                                        int ell, const Budget& budget = Budget{}) {
  const std::int64_t vol = ipow(pot.L, ell);
  const std::int64_t need_ctx = std::max(vol, ipow(pot.L, pot.ell_max));
  if (static_cast<std::int64_t>(boundary.size()) < need_ctx)
    throw model_error("finite_volume_measure: boundary context shorter than " +
                      std::to_string(need_ctx));
  const std::uint64_t combos = pow_u64(static_cast<std::uint64_t>(pot.asize), static_cast<int>(vol));
  check_state_budget(combos, budget, "finite_volume_measure");

  std::vector<std::int64_t> sites(static_cast<std::size_t>(vol));
  for (std::int64_t i = 0; i < vol; ++i) sites[static_cast<std::size_t>(i)] = i + 1;

  ProbVector out = make_prob_vector(static_cast<int>(vol), pot.asize);
  std::vector<double> energy(out.p.size());
  Word ctx = boundary;
  for (std::size_t w = 0; w < out.p.size(); ++w) {
    std::size_t rest = w;
    for (std::size_t i = static_cast<std::size_t>(vol); i-- > 0;) {
      ctx[i] = static_cast<Symbol>(rest % pot.asize);
      rest /= static_cast<std::size_t>(pot.asize);
    }
    energy[w] = total_energy(pot, sites, ctx, pot.ell_max);
  }
  double lo = energy[0];
  for (double e : energy) lo = std::min(lo, e);
  double z = 0;
  for (std::size_t w = 0; w < out.p.size(); ++w) z += out.p[w] = std::exp(lo - energy[w]);
  for (double& x : out.p) x /= z;
  return out;
}

// Simon-style uniqueness diagnostic: max over window sites of
// sum over interaction sets containing the site of (|set|-1) * osc(set total).
// Sufficient condition only; a value >= 2 proves nothing.
inline double simon_diagnostic(const HierarchicalPotential& pot, std::int64_t window_lo,
                               std::int64_t window_hi, int ell_trunc) {
  if (ell_trunc > pot.ell_max) throw model_error("simon_diagnostic: ell_trunc beyond potential depth");
  double worst = 0;
  for (std::int64_t n = window_lo; n <= window_hi; ++n) {
    double s = 0;
    for (int g = 1; g <= ell_trunc; ++g) {
      LadicBlock b = ladic_block(n, g, pot.L);
      if (b.end() > pot.depth)
        throw model_error("simon_diagnostic: window needs family depth >= " +
                          std::to_string(b.end()));
      // set total = |B| * per-site value (equal attribution across the block)
      const double osc_total = static_cast<double>(b.len) * pot.oscillation(b.index(), g);
      s += static_cast<double>(b.len - 1) * osc_total;
    }
    worst = std::max(worst, s);
  }
  return worst;
}

}  // namespace substlab
