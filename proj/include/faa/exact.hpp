#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cstdint>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "faa/graph.hpp"

namespace faa {

enum class ExactStatus { verified, unverified };
enum class ExactMethod { automatic, enumeration, branch_and_bound };

struct ExactBudget {
  ExactMethod method = ExactMethod::automatic;
  /// Largest L handled by plain enumeration (2^{L-1} states).
  int max_enumeration_vertices = 32;
  std::uint64_t max_search_nodes = 200'000'000;
  double max_seconds = 0.0;  // 0 = no wall-clock cap
  unsigned workers = 1;
};

/// Minimum Ising energy of a graph. When status is unverified the energy and
/// witness are the best found before the budget ran out (or empty when the
/// search never reached a leaf) and must not be treated as optimal.
struct ExactResult {
  ExactStatus status = ExactStatus::unverified;
  int min_energy = 0;
  int max_cut = 0;
  SpinAssignment witness;
  ExactMethod method = ExactMethod::automatic;
  std::uint64_t nodes = 0;

  bool verified() const noexcept { return status == ExactStatus::verified; }
};

inline bool verify(const Graph& g, const SpinAssignment& a, int claimed) { return energy(g, a) == claimed; }

namespace detail {

// Vertex j sits at bit (L-1-j) of an ordering key, so the numerically
// smallest key is the lexicographically smallest bitstring b_0 b_1 ...
inline std::uint64_t key_bit(int L, int v) { return std::uint64_t{1} << (L - 1 - v); }

inline SpinAssignment assignment_from_key(std::uint64_t key, int L) {
  SpinAssignment a(static_cast<std::size_t>(L));
  for (int v = 0; v < L; ++v) a[static_cast<std::size_t>(v)] = (key & key_bit(L, v)) ? 1 : 0;
  return a;
}

struct EnumerationBest {
  int energy = std::numeric_limits<int>::max();
  std::uint64_t key = 0;
  void merge(int e, std::uint64_t k) {
    if (e < energy || (e == energy && k < key)) {
      energy = e;
      key = k;
    }
  }
};

/// Gray-code sweep over the `free_bits` lowest-numbered free vertices
/// (1..free_bits) with the remaining vertices fixed by `prefix_key`.
inline EnumerationBest enumerate_chunk(const Graph& g, int free_bits, std::uint64_t prefix_key) {
  const int L = g.num_vertices();
  std::vector<int> z(static_cast<std::size_t>(L));
  for (int v = 0; v < L; ++v) z[static_cast<std::size_t>(v)] = (prefix_key & key_bit(L, v)) ? -1 : 1;
  std::vector<int> field(static_cast<std::size_t>(L), 0);
  int e = 0;
  for (const auto& ed : g.edges()) e += z[static_cast<std::size_t>(ed.u)] * z[static_cast<std::size_t>(ed.v)];
  for (int v = 0; v < L; ++v) {
    for (int u : g.neighbors(v)) field[static_cast<std::size_t>(v)] += z[static_cast<std::size_t>(u)];
  }
  std::vector<std::uint32_t> nb_offsets;
  std::vector<int> nb;
  for (int v = 0; v < L; ++v) {
    nb_offsets.push_back(static_cast<std::uint32_t>(nb.size()));
    for (int u : g.neighbors(v)) nb.push_back(u);
  }
  nb_offsets.push_back(static_cast<std::uint32_t>(nb.size()));

  EnumerationBest best;
  std::uint64_t key = prefix_key;
  best.merge(e, key);
  const std::uint64_t steps = std::uint64_t{1} << free_bits;
  for (std::uint64_t i = 1; i < steps; ++i) {
    const int v = 1 + std::countr_zero(i);
    const auto vs = static_cast<std::size_t>(v);
    e -= 2 * z[vs] * field[vs];
    z[vs] = -z[vs];
    const int dz = 2 * z[vs];
    for (auto k = nb_offsets[vs]; k < nb_offsets[vs + 1]; ++k) field[static_cast<std::size_t>(nb[k])] += dz;
    key ^= key_bit(L, v);
    if (e <= best.energy) best.merge(e, key);
  }
  return best;
}

}  // namespace detail

/// Exhaustive minimum with b_0 fixed to 0. Chunks are split on the highest
/// vertices and reduced with a total order, so the answer does not depend on
/// the worker count.
inline ExactResult max_cut_enumerate(const Graph& g, unsigned workers = 1) {
  const int L = g.num_vertices();
  if (L > 63) throw std::invalid_argument("enumeration supports at most 63 vertices");
  const int free_total = L - 1;
  const int split = std::min(free_total, free_total >= 20 ? 6 : 0);
  const int low_bits = free_total - split;
  const std::uint64_t chunks = std::uint64_t{1} << split;

  std::vector<detail::EnumerationBest> results(chunks);
  std::atomic<std::uint64_t> next{0};
  auto work = [&] {
    for (std::uint64_t c = next++; c < chunks; c = next++) {
      std::uint64_t prefix = 0;
      for (int b = 0; b < split; ++b) {
        if (c >> b & 1U) prefix |= detail::key_bit(L, L - 1 - b);
      }
      results[c] = detail::enumerate_chunk(g, low_bits, prefix);
    }
  };
  const unsigned n_threads = std::max(1U, std::min<unsigned>(workers, static_cast<unsigned>(chunks)));
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(work);
  }

  detail::EnumerationBest best;
  for (const auto& r : results) best.merge(r.energy, r.key);
  ExactResult out;
  out.status = ExactStatus::verified;
  out.method = ExactMethod::enumeration;
  out.min_energy = best.energy;
  out.max_cut = (g.num_edges() - best.energy) / 2;
  out.witness = detail::assignment_from_key(best.key, L);
  out.nodes = std::uint64_t{1} << free_total;
  return out;
}

namespace detail {

/// Depth-first search over vertices in index order (value 0 first, b_0 = 0).
/// Lower bound: settled edges exactly, -|sum of settled neighbour spins| per
/// open vertex, and -1 per edge with both ends open. Pruning at bound >= best
/// keeps the first optimal leaf, which is the lexicographically smallest.
class BranchAndBound {
 public:
  BranchAndBound(const Graph& g, const ExactBudget& budget) : g_(g), budget_(budget), L_(g.num_vertices()) {
    z_.assign(static_cast<std::size_t>(L_), 0);
    settled_field_.assign(static_cast<std::size_t>(L_), 0);
    open_edges_ = g.num_edges();
    best_.resize(static_cast<std::size_t>(L_));
    current_.resize(static_cast<std::size_t>(L_));
    start_ = std::chrono::steady_clock::now();
  }

  ExactResult run() {
    descend(0, 0);
    ExactResult out;
    out.method = ExactMethod::branch_and_bound;
    out.nodes = nodes_;
    out.status = aborted_ ? ExactStatus::unverified : ExactStatus::verified;
    if (found_) {
      out.min_energy = best_energy_;
      out.max_cut = (g_.num_edges() - best_energy_) / 2;
      out.witness = SpinAssignment(best_);
    }
    return out;
  }

 private:
  int open_penalty() const {
    int p = 0;
    for (int v = next_open_; v < L_; ++v) p += std::abs(settled_field_[static_cast<std::size_t>(v)]);
    return p;
  }

  bool out_of_budget() {
    if (++nodes_ > budget_.max_search_nodes) aborted_ = true;
    if (budget_.max_seconds > 0 && (nodes_ & 0xfffff) == 0) {
      std::chrono::duration<double> el = std::chrono::steady_clock::now() - start_;
      if (el.count() > budget_.max_seconds) aborted_ = true;
    }
    return aborted_;
  }

  void descend(int v, int settled_energy) {
    if (aborted_ || out_of_budget()) return;
    if (v == L_) {
      if (settled_energy < best_energy_) {
        best_energy_ = settled_energy;
        for (int j = 0; j < L_; ++j) best_[static_cast<std::size_t>(j)] = current_[static_cast<std::size_t>(j)];
        found_ = true;
      }
      return;
    }
    const auto vs = static_cast<std::size_t>(v);
    for (int bit = 0; bit <= (v == 0 ? 0 : 1); ++bit) {
      const int spin = bit ? -1 : 1;
      z_[vs] = spin;
      current_[vs] = static_cast<std::uint8_t>(bit);
      const int energy_here = settled_energy + spin * settled_field_[vs];
      int later = 0;
      for (int u : g_.neighbors(v)) {
        if (u > v) {
          settled_field_[static_cast<std::size_t>(u)] += spin;
          ++later;
        }
      }
      open_edges_ -= later;
      next_open_ = v + 1;
      const int bound = energy_here - open_penalty() - open_edges_;
      if (bound < best_energy_) descend(v + 1, energy_here);
      open_edges_ += later;
      next_open_ = v;
      for (int u : g_.neighbors(v)) {
        if (u > v) settled_field_[static_cast<std::size_t>(u)] -= spin;
      }
      z_[vs] = 0;
      if (aborted_) return;
    }
  }

  const Graph& g_;
  ExactBudget budget_;
  int L_;
  std::vector<int> z_;
  std::vector<int> settled_field_;
  std::vector<std::uint8_t> best_, current_;
  int open_edges_ = 0;
  int next_open_ = 0;
  int best_energy_ = std::numeric_limits<int>::max();
  bool found_ = false;
  bool aborted_ = false;
  std::uint64_t nodes_ = 0;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

inline ExactResult max_cut_branch_and_bound(const Graph& g, const ExactBudget& budget = {}) {
  return detail::BranchAndBound(g, budget).run();
}

/// Exact Max-Cut oracle. Small graphs are enumerated; larger ones go through
/// branch and bound under the budget, returning an unverified result when the
/// budget is exhausted.
inline ExactResult max_cut_exact(const Graph& g, const ExactBudget& budget = {}) {
  ExactMethod method = budget.method;
  if (method == ExactMethod::automatic) {
    method = g.num_vertices() <= budget.max_enumeration_vertices ? ExactMethod::enumeration
                                                                 : ExactMethod::branch_and_bound;
  }
  if (method == ExactMethod::enumeration) {
    if (g.num_vertices() > budget.max_enumeration_vertices) {
      ExactResult out;
      out.method = ExactMethod::enumeration;
      return out;
    }
    return max_cut_enumerate(g, budget.workers);
  }
  return max_cut_branch_and_bound(g, budget);
}

inline std::string to_string(ExactStatus s) { return s == ExactStatus::verified ? "verified" : "unverified"; }

inline std::string to_string(ExactMethod m) {
  switch (m) {
    case ExactMethod::enumeration: return "enumeration";
    case ExactMethod::branch_and_bound: return "branch_and_bound";
    default: return "automatic";
  }
}

}  // namespace faa
