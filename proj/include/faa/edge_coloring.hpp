#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "faa/graph.hpp"
#include "faa/rng.hpp"

namespace faa {

/// Proper edge coloring; color_of_edge is indexed like Graph::edges().
struct EdgeColoring {
  std::vector<int> color_of_edge;
  int num_colors = 0;

  /// Edge indices grouped by color; each group is a matching.
  std::vector<std::vector<int>> classes() const {
    std::vector<std::vector<int>> out(static_cast<std::size_t>(num_colors));
    for (std::size_t e = 0; e < color_of_edge.size(); ++e) {
      out[static_cast<std::size_t>(color_of_edge[e])].push_back(static_cast<int>(e));
    }
    return out;
  }
};

inline bool is_proper_coloring(const Graph& g, const EdgeColoring& c) {
  auto edges = g.edges();
  if (c.color_of_edge.size() != edges.size()) return false;
  std::vector<std::uint32_t> used(static_cast<std::size_t>(g.num_vertices()), 0);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    int col = c.color_of_edge[i];
    if (col < 0 || col >= c.num_colors || col >= 32) return false;
    const std::uint32_t bit = 1U << col;
    auto& mu = used[static_cast<std::size_t>(edges[i].u)];
    auto& mv = used[static_cast<std::size_t>(edges[i].v)];
    if ((mu & bit) || (mv & bit)) return false;
    mu |= bit;
    mv |= bit;
  }
  return true;
}

namespace detail {

/// Line-graph view: for every edge, the indices of edges sharing an endpoint.
inline std::vector<std::vector<int>> edge_adjacency(const Graph& g) {
  auto edges = g.edges();
  std::vector<std::vector<int>> incident(static_cast<std::size_t>(g.num_vertices()));
  for (std::size_t i = 0; i < edges.size(); ++i) {
    incident[static_cast<std::size_t>(edges[i].u)].push_back(static_cast<int>(i));
    incident[static_cast<std::size_t>(edges[i].v)].push_back(static_cast<int>(i));
  }
  std::vector<std::vector<int>> adj(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    for (int end : {edges[i].u, edges[i].v}) {
      for (int j : incident[static_cast<std::size_t>(end)]) {
        if (j != static_cast<int>(i)) adj[i].push_back(j);
      }
    }
  }
  return adj;
}

/// Backtracking k-coloring of the line graph, choosing the most saturated
/// uncolored edge at each node. Returns nullopt when the search is exhausted
/// (no k-coloring exists) or the node limit is hit (`exhausted` tells which).
class SaturationSearch {
 public:
  SaturationSearch(const std::vector<std::vector<int>>& adj, int k, std::uint64_t node_limit, Rng* rng)
      : adj_(adj), k_(k), node_limit_(node_limit), rng_(rng), color_(adj.size(), -1) {
    tiebreak_.resize(adj.size());
    std::iota(tiebreak_.begin(), tiebreak_.end(), 0);
    if (rng_ != nullptr) shuffle(tiebreak_.begin(), tiebreak_.end(), *rng_);
  }

  std::optional<std::vector<int>> run(bool& exhausted) {
    nodes_ = 0;
    aborted_ = false;
    bool ok = adj_.empty() || recurse(0, 0);
    exhausted = !aborted_;
    if (ok) return color_;
    return std::nullopt;
  }

 private:
  std::uint32_t forbidden(std::size_t e) const {
    std::uint32_t mask = 0;
    for (int j : adj_[e]) {
      int c = color_[static_cast<std::size_t>(j)];
      if (c >= 0) mask |= 1U << c;
    }
    return mask;
  }

  bool recurse(std::size_t colored, int max_used) {
    if (colored == adj_.size()) return true;
    if (++nodes_ > node_limit_) {
      aborted_ = true;
      return false;
    }
    std::size_t best = adj_.size();
    int best_sat = -1;
    for (std::size_t e = 0; e < adj_.size(); ++e) {
      if (color_[e] >= 0) continue;
      int sat = std::popcount(forbidden(e));
      if (sat > best_sat || (sat == best_sat && tiebreak_[e] < tiebreak_[best])) {
        best = e;
        best_sat = sat;
      }
    }
    const std::uint32_t mask = forbidden(best);
    // Colors above max_used are interchangeable; try only the first of them.
    const int limit = std::min(k_, max_used + 1);
    for (int c = 0; c < limit; ++c) {
      if (mask & (1U << c)) continue;
      color_[best] = c;
      if (recurse(colored + 1, std::max(max_used, c + 1))) return true;
      color_[best] = -1;
      if (aborted_) return false;
    }
    return false;
  }

  const std::vector<std::vector<int>>& adj_;
  int k_;
  std::uint64_t node_limit_;
  Rng* rng_;
  std::vector<int> color_;
  std::vector<int> tiebreak_;
  std::uint64_t nodes_ = 0;
  bool aborted_ = false;
};

/// Misra-Gries constructive (max degree + 1)-edge-coloring.
class MisraGries {
 public:
  explicit MisraGries(const Graph& g)
      : g_(g), palette_(max_degree(g) + 1), slot_color_(static_cast<std::size_t>(g.num_vertices())) {
    for (int v = 0; v < g.num_vertices(); ++v) slot_color_[static_cast<std::size_t>(v)].assign(g.neighbors(v).size(), -1);
  }

  EdgeColoring run() {
    for (const auto& e : g_.edges()) color_edge(e.u, e.v);
    EdgeColoring out;
    out.num_colors = palette_;
    for (const auto& e : g_.edges()) out.color_of_edge.push_back(color(e.u, e.v));
    return out;
  }

 private:
  static int max_degree(const Graph& g) {
    int d = 0;
    for (int v = 0; v < g.num_vertices(); ++v) d = std::max(d, g.degree(v));
    return d;
  }

  int slot(int u, int w) const {
    auto nb = g_.neighbors(u);
    return static_cast<int>(std::find(nb.begin(), nb.end(), w) - nb.begin());
  }
  int color(int u, int w) const {
    return slot_color_[static_cast<std::size_t>(u)][static_cast<std::size_t>(slot(u, w))];
  }
  void set_color(int u, int w, int c) {
    slot_color_[static_cast<std::size_t>(u)][static_cast<std::size_t>(slot(u, w))] = c;
    slot_color_[static_cast<std::size_t>(w)][static_cast<std::size_t>(slot(w, u))] = c;
  }
  bool is_free(int v, int c) const {
    const auto& cols = slot_color_[static_cast<std::size_t>(v)];
    return std::find(cols.begin(), cols.end(), c) == cols.end();
  }
  int free_color(int v) const {
    for (int c = 0; c < palette_; ++c) {
      if (is_free(v, c)) return c;
    }
    throw std::logic_error("no free color");
  }
  int neighbor_with_color(int v, int c) const {
    const auto& cols = slot_color_[static_cast<std::size_t>(v)];
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (cols[i] == c) return g_.neighbors(v)[i];
    }
    return -1;
  }

  void color_edge(int u, int v) {
    // Maximal fan of u starting at v.
    std::vector<int> fan{v};
    std::vector<std::uint8_t> in_fan(static_cast<std::size_t>(g_.num_vertices()), 0);
    in_fan[static_cast<std::size_t>(v)] = 1;
    for (bool grew = true; grew;) {
      grew = false;
      for (int w : g_.neighbors(u)) {
        if (in_fan[static_cast<std::size_t>(w)]) continue;
        int cw = color(u, w);
        if (cw >= 0 && is_free(fan.back(), cw)) {
          fan.push_back(w);
          in_fan[static_cast<std::size_t>(w)] = 1;
          grew = true;
          break;
        }
      }
    }
    const int c = free_color(u);
    const int d = free_color(fan.back());

    // Invert the cd-path through u (it starts with a d-colored edge at u).
    if (c != d) {
      std::vector<std::pair<int, int>> path;
      int cur = u, want = d;
      while (true) {
        int nxt = neighbor_with_color(cur, want);
        if (nxt < 0) break;
        path.emplace_back(cur, nxt);
        cur = nxt;
        want = want == d ? c : d;
      }
      for (auto [a, b] : path) set_color(a, b, color(a, b) == d ? c : d);
    }

    // Shortest fan prefix ending on a vertex where d is free, then rotate.
    std::size_t w = 0;
    for (; w < fan.size(); ++w) {
      if (w > 0 && !is_free(fan[w - 1], color(u, fan[w]))) {
        throw std::logic_error("fan prefix broken during edge coloring");
      }
      if (is_free(fan[w], d)) break;
    }
    if (w == fan.size()) throw std::logic_error("no rotatable fan prefix during edge coloring");
    for (std::size_t i = 0; i < w; ++i) set_color(u, fan[i], color(u, fan[i + 1]));
    set_color(u, fan[w], d);
  }

  const Graph& g_;
  int palette_;
  std::vector<std::vector<int>> slot_color_;
};

}  // namespace detail

struct EdgeColoringOptions {
  int exhaustive_max_vertices = 14;
  int restarts = 1000;
  std::uint64_t restart_node_limit_per_edge = 20;
};

/// 3-colors the edges when the search finds a 3-coloring, otherwise returns a
/// 4-coloring. Up to `exhaustive_max_vertices` the 3-color search is complete,
/// so a 4-color answer there proves the graph is class 2. Deterministic.
inline EdgeColoring edge_color(const Graph& g, const EdgeColoringOptions& opts = {}) {
  const auto adj = detail::edge_adjacency(g);
  EdgeColoring out;
  if (g.num_edges() == 0) return out;

  auto accept = [&](std::vector<int> colors) {
    out.color_of_edge = std::move(colors);
    out.num_colors = 1 + *std::max_element(out.color_of_edge.begin(), out.color_of_edge.end());
    return out;
  };

  bool exhausted = false;
  if (g.num_vertices() <= opts.exhaustive_max_vertices) {
    for (int k = 3; k <= 4; ++k) {
      detail::SaturationSearch search(adj, k, UINT64_MAX, nullptr);
      if (auto colors = search.run(exhausted)) return accept(std::move(*colors));
    }
  } else {
    const std::uint64_t limit = opts.restart_node_limit_per_edge * static_cast<std::uint64_t>(adj.size());
    Rng rng(derive_seed(0xc0102ULL, static_cast<std::uint64_t>(g.num_vertices()),
                        static_cast<std::uint64_t>(g.num_edges())));
    for (const auto& e : g.edges()) rng.seed(derive_seed(rng(), static_cast<std::uint64_t>(e.u), static_cast<std::uint64_t>(e.v)));
    for (int r = 0; r < opts.restarts; ++r) {
      detail::SaturationSearch search(adj, 3, limit, r == 0 ? nullptr : &rng);
      if (auto colors = search.run(exhausted)) return accept(std::move(*colors));
      if (exhausted) break;  // proven class 2
    }
  }
  return accept(detail::MisraGries(g).run().color_of_edge);
}

}  // namespace faa
