#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "faa/rng.hpp"

namespace faa {

struct GraphError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Edge {
  int u = 0;
  int v = 0;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Simple undirected graph on vertices 0..L-1. Edges are stored with u < v
/// and sorted lexicographically, so two graphs with the same edge set compare
/// equal.
class Graph {
 public:
  Graph() = default;

  Graph(int num_vertices, std::vector<Edge> edges) : n_(num_vertices), edges_(std::move(edges)) {
    if (n_ <= 0) throw GraphError("graph must have at least one vertex");
    for (auto& e : edges_) {
      if (e.u == e.v) throw GraphError("self-loop at vertex " + std::to_string(e.u));
      if (e.u > e.v) std::swap(e.u, e.v);
      if (e.u < 0 || e.v >= n_) {
        throw GraphError("edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                         ") out of range for L=" + std::to_string(n_));
      }
    }
    std::sort(edges_.begin(), edges_.end());
    if (auto dup = std::adjacent_find(edges_.begin(), edges_.end()); dup != edges_.end()) {
      throw GraphError("duplicate edge (" + std::to_string(dup->u) + "," + std::to_string(dup->v) + ")");
    }
    adjacency_.assign(static_cast<std::size_t>(n_), {});
    for (const auto& e : edges_) {
      adjacency_[static_cast<std::size_t>(e.u)].push_back(e.v);
      adjacency_[static_cast<std::size_t>(e.v)].push_back(e.u);
    }
  }

  int num_vertices() const noexcept { return n_; }
  int num_edges() const noexcept { return static_cast<int>(edges_.size()); }
  std::span<const Edge> edges() const noexcept { return edges_; }
  std::span<const int> neighbors(int v) const { return adjacency_.at(static_cast<std::size_t>(v)); }
  int degree(int v) const { return static_cast<int>(neighbors(v).size()); }

  bool is_cubic() const {
    for (int v = 0; v < n_; ++v) {
      if (degree(v) != 3) return false;
    }
    return true;
  }

  friend bool operator==(const Graph& a, const Graph& b) { return a.n_ == b.n_ && a.edges_ == b.edges_; }

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adjacency_;
};

inline void validate_cubic(const Graph& g) {
  for (int v = 0; v < g.num_vertices(); ++v) {
    if (g.degree(v) != 3) {
      throw GraphError("vertex " + std::to_string(v) + " has degree " + std::to_string(g.degree(v)) +
                       ", expected 3");
    }
  }
}

/// A Z-basis product state |b_0 ... b_{L-1}>; b_j = 1 means Z_j = -1.
class SpinAssignment {
 public:
  SpinAssignment() = default;
  explicit SpinAssignment(std::size_t length) : bits_(length, 0) {}
  explicit SpinAssignment(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    for (auto b : bits_) {
      if (b > 1) throw std::invalid_argument("spin bits must be 0 or 1");
    }
  }

  static SpinAssignment from_string(std::string_view s) {
    std::vector<std::uint8_t> bits;
    bits.reserve(s.size());
    for (char c : s) {
      if (c != '0' && c != '1') throw std::invalid_argument("bitstring may only contain '0' and '1'");
      bits.push_back(static_cast<std::uint8_t>(c - '0'));
    }
    return SpinAssignment(std::move(bits));
  }

  /// Bit j of `index` becomes b_j (qubit 0 is the least significant bit).
  static SpinAssignment from_index(std::uint64_t index, int length) {
    SpinAssignment a(static_cast<std::size_t>(length));
    for (int j = 0; j < length; ++j) a.bits_[static_cast<std::size_t>(j)] = (index >> j) & 1U;
    return a;
  }

  std::string to_string() const {
    std::string s(bits_.size(), '0');
    for (std::size_t j = 0; j < bits_.size(); ++j) s[j] = static_cast<char>('0' + bits_[j]);
    return s;
  }

  std::size_t size() const noexcept { return bits_.size(); }
  std::uint8_t operator[](std::size_t j) const { return bits_[j]; }
  std::uint8_t& operator[](std::size_t j) { return bits_[j]; }
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }

  SpinAssignment flipped() const {
    SpinAssignment out = *this;
    for (auto& b : out.bits_) b ^= 1U;
    return out;
  }

  friend auto operator<=>(const SpinAssignment&, const SpinAssignment&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

inline int cut_size(const Graph& g, const SpinAssignment& a) {
  if (a.size() != static_cast<std::size_t>(g.num_vertices())) {
    throw std::invalid_argument("assignment length " + std::to_string(a.size()) + " does not match L=" +
                                std::to_string(g.num_vertices()));
  }
  int c = 0;
  for (const auto& e : g.edges()) c += a[static_cast<std::size_t>(e.u)] != a[static_cast<std::size_t>(e.v)];
  return c;
}

/// Ising energy sum_{(i,j) in E} z_i z_j = |E| - 2c.
inline int energy(const Graph& g, const SpinAssignment& a) { return g.num_edges() - 2 * cut_size(g, a); }

/// Configuration-model sampler: 3L half-edges are paired uniformly and the
/// whole pairing is redrawn whenever it produces a self-loop or multi-edge.
inline Graph generate_3regular(int num_vertices, std::uint64_t seed, int max_restarts = 10'000) {
  if (num_vertices < 4 || num_vertices % 2 != 0) {
    throw GraphError("3-regular graphs need an even vertex count >= 4, got " + std::to_string(num_vertices));
  }
  Rng rng(derive_seed(seed, 0x3e9a1ULL, static_cast<std::uint64_t>(num_vertices)));
  const auto L = static_cast<std::size_t>(num_vertices);
  std::vector<int> stubs(3 * L);
  for (std::size_t i = 0; i < stubs.size(); ++i) stubs[i] = static_cast<int>(i / 3);

  std::vector<Edge> edges;
  std::vector<std::uint8_t> seen;
  for (int attempt = 0; attempt < max_restarts; ++attempt) {
    shuffle(stubs.begin(), stubs.end(), rng);
    edges.clear();
    bool simple = true;
    for (std::size_t i = 0; i < stubs.size() && simple; i += 2) {
      int u = stubs[i], v = stubs[i + 1];
      if (u == v) simple = false;
      edges.push_back({std::min(u, v), std::max(u, v)});
    }
    if (!simple) continue;
    std::sort(edges.begin(), edges.end());
    if (std::adjacent_find(edges.begin(), edges.end()) != edges.end()) continue;
    return Graph(num_vertices, std::move(edges));
  }
  throw GraphError("configuration model failed to produce a simple graph after " +
                   std::to_string(max_restarts) + " restarts");
}

// ---------------------------------------------------------------------------
// Edge-list text format: "L M" then M lines "u v".

inline void write_graph(std::ostream& os, const Graph& g) {
  os << g.num_vertices() << ' ' << g.num_edges() << '\n';
  for (const auto& e : g.edges()) os << e.u << ' ' << e.v << '\n';
}

inline Graph read_graph(std::istream& is, bool require_cubic = true) {
  long long n = 0, m = 0;
  if (!(is >> n >> m)) throw GraphError("malformed header: expected 'L M'");
  if (n <= 0 || m < 0) throw GraphError("malformed header: L must be positive and M non-negative");
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(m));
  for (long long i = 0; i < m; ++i) {
    long long u = 0, v = 0;
    if (!(is >> u >> v)) throw GraphError("malformed edge line " + std::to_string(i + 2));
    if (u < 0 || v < 0 || u >= n || v >= n) throw GraphError("edge endpoint out of range on line " + std::to_string(i + 2));
    edges.push_back({static_cast<int>(u), static_cast<int>(v)});
  }
  std::string trailing;
  if (is >> trailing) throw GraphError("unexpected trailing content after " + std::to_string(m) + " edges");
  Graph g(static_cast<int>(n), std::move(edges));
  if (require_cubic) validate_cubic(g);
  return g;
}

inline void save_graph(const std::filesystem::path& path, const Graph& g) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_graph(os, g);
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

inline Graph load_graph(const std::filesystem::path& path, bool require_cubic = true) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return read_graph(is, require_cubic);
}

// ---------------------------------------------------------------------------
// Reference-solution sidecar "<graph>.opt": line 1 m_G, line 2 bitstring.

struct ReferenceSolution {
  int min_energy = 0;
  SpinAssignment witness;
};

inline std::filesystem::path sidecar_path(const std::filesystem::path& graph_path) {
  return std::filesystem::path(graph_path.string() + ".opt");
}

inline void save_reference(const std::filesystem::path& path, const ReferenceSolution& ref) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << ref.min_energy << '\n' << ref.witness.to_string() << '\n';
}

/// Reads a sidecar and, when a graph is supplied, checks the witness energy.
inline ReferenceSolution load_reference(const std::filesystem::path& path, const Graph* g = nullptr) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  ReferenceSolution ref;
  std::string bits;
  if (!(is >> ref.min_energy >> bits)) throw GraphError("malformed reference file " + path.string());
  ref.witness = SpinAssignment::from_string(bits);
  if (g != nullptr) {
    if (energy(*g, ref.witness) != ref.min_energy) {
      throw GraphError("reference witness energy " + std::to_string(energy(*g, ref.witness)) +
                       " disagrees with stated m_G=" + std::to_string(ref.min_energy));
    }
  }
  return ref;
}

inline std::optional<ReferenceSolution> find_reference(const std::filesystem::path& graph_path, const Graph& g) {
  auto p = sidecar_path(graph_path);
  if (!std::filesystem::exists(p)) return std::nullopt;
  return load_reference(p, &g);
}

}  // namespace faa
