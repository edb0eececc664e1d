#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

#include "faa/exact.hpp"
#include "faa/mps.hpp"
#include "faa/statevector.hpp"
#include "oracles.hpp"

using namespace faa;
using Catch::Approx;

namespace {

oracle::Vec dense(const MpsState& st) { return oracle::to_eigen(st.to_dense().amplitudes()); }

/// Graph holding a single edge; the dense oracle accepts any edge list.
Graph one_edge(int L, int u, int v) { return Graph(L, {{u, v}}); }

/// A generic entangled state: X rotations plus nearest-neighbour ZZ phases.
MpsState scrambled(int L, int D, oracle::Vec& ref) {
  auto st = MpsState::plus(L);
  ref = oracle::plus_state(L);
  for (int round = 0; round < 2; ++round) {
    const double tx = 0.3 + 0.1 * round, tz = 0.7 - 0.2 * round;
    for (int q = 0; q < L; ++q) st.apply_1q(q, gates::rx_layer(tx));
    ref = oracle::x_layer(L, tx) * ref;
    for (int q = 0; q + 1 < L; ++q) {
      st.apply_zz(q, q + 1, tz * (q + 1) / L, D);
      ref = oracle::zz_layer(one_edge(L, q, q + 1), tz * (q + 1) / L) * ref;
    }
  }
  return st;
}

}  // namespace

TEST_CASE("plus state") {
  const auto st = MpsState::plus(3);
  CHECK((dense(st) - oracle::plus_state(3)).norm() < 1e-15);
  for (int b : st.bond_dims()) CHECK(b == 1);
  CHECK(st.norm() == Approx(1.0).epsilon(1e-15));
  CHECK(st.contracted_norm() == Approx(1.0).epsilon(1e-15));
  std::vector<int> id(3);
  std::iota(id.begin(), id.end(), 0);
  CHECK(st.qubit_to_site() == id);
  CHECK(st.site_tensor(1)[0](0, 0) == cplx(1 / std::sqrt(2.0), 0));
}

TEST_CASE("single-qubit gates") {
  auto st = MpsState::plus(4);
  const auto before = dense(st);
  st.apply_1q(2, Mat2::Identity());
  CHECK((dense(st) - before).norm() < 1e-15);

  auto zero = MpsState::product(SpinAssignment::from_string("0"));
  zero.apply_1q(0, gates::rx_layer(std::numbers::pi / 2));
  CHECK(std::abs(zero.site_tensor(0)[0](0, 0)) < 1e-15);
  CHECK(std::abs(zero.site_tensor(0)[1](0, 0) - cplx(0, -1)) < 1e-15);

  auto plus = MpsState::plus(5);
  for (int q = 0; q < 5; ++q) plus.apply_1q(q, gates::rx_layer(0.1 * q + 0.2));
  auto sv = StateVector::plus(5);
  for (int q = 0; q < 5; ++q) {
    const double c = std::cos(0.1 * q + 0.2), s = std::sin(0.1 * q + 0.2);
    sv.apply_1q(q, {c, cplx(0, -s), cplx(0, -s), c});
  }
  CHECK((dense(plus) - oracle::to_eigen(sv.amplitudes())).norm() < 1e-14);
  CHECK(plus.norm() == Approx(1.0).epsilon(1e-14));
  for (int b : plus.bond_dims()) CHECK(b == 1);
}

TEST_CASE("two-site gate on a product pair loses nothing at D >= 4") {
  auto st = MpsState::plus(4);
  Mat4 u = gates::cnot() * gates::zz_phase(0.4) * gates::swap();
  const auto t = st.apply_2q_adjacent(1, u, 4);
  CHECK(t.discarded_weight == 0.0);
  CHECK(st.max_bond() <= 4);
  CHECK_THROWS_AS(st.apply_2q_adjacent(3, u, 4), std::out_of_range);
  CHECK_THROWS_AS(st.apply_2q_adjacent(0, u, 0), std::invalid_argument);
}

TEST_CASE("SWAP twice is the identity") {
  oracle::Vec ref;
  auto st = scrambled(6, 64, ref);
  const auto before = dense(st);
  st.apply_2q_adjacent(2, gates::swap(), 64);
  st.apply_2q_adjacent(2, gates::swap(), 64);
  CHECK(oracle::phase_aligned_distance(dense(st), before) < 1e-10);
}

TEST_CASE("GHZ pair truncated to D=1 discards weight 1/2") {
  auto st = MpsState::product(SpinAssignment::from_string("00"));
  st.apply_1q(0, gates::hadamard());
  const auto t = st.apply_2q_adjacent(0, gates::cnot(), 1);
  CHECK(t.discarded_weight == Approx(0.5).epsilon(1e-12));
  CHECK(st.max_bond() == 1);
  CHECK(st.norm() == Approx(1.0).epsilon(1e-12));

  auto full = MpsState::product(SpinAssignment::from_string("00"));
  full.apply_1q(0, gates::hadamard());
  CHECK(full.apply_2q_adjacent(0, gates::cnot(), 2).discarded_weight == Approx(0.0).margin(1e-15));
  const auto d = dense(full);
  CHECK(std::abs(d(0)) == Approx(1 / std::sqrt(2.0)));
  CHECK(std::abs(d(3)) == Approx(1 / std::sqrt(2.0)));
}

TEST_CASE("adjacent ZZ equals the statevector reference at L=6") {
  oracle::Vec ref;
  auto st = scrambled(6, 64, ref);
  CHECK(oracle::phase_aligned_distance(dense(st), ref) < 1e-12);
}

TEST_CASE("ZZ with theta = 0 leaves the state unchanged") {
  oracle::Vec ref;
  auto st = scrambled(7, 64, ref);
  const auto before = dense(st);
  st.apply_zz(0, 6, 0.0, 64);
  CHECK(oracle::phase_aligned_distance(dense(st), before) < 1e-10);
}

TEST_CASE("long-range ZZ is routed exactly and restores the layout") {
  oracle::Vec ref;
  auto st = scrambled(8, 64, ref);
  const auto perm = st.qubit_to_site();
  for (auto [u, v] : std::vector<std::pair<int, int>>{{1, 4}, {6, 3}, {0, 7}}) {
    st.apply_zz(u, v, 0.45, 64);
    ref = oracle::zz_layer(one_edge(8, std::min(u, v), std::max(u, v)), 0.45) * ref;
    CHECK(oracle::phase_aligned_distance(dense(st), ref) < 1e-8);
    CHECK(st.qubit_to_site() == perm);
  }
  CHECK_THROWS_AS(st.apply_zz(2, 2, 0.1, 4), std::invalid_argument);
}

TEST_CASE("full-rank MPS run equals the statevector run") {
  for (int L : {6, 8, 10, 12}) {
    for (std::uint64_t seed : {1ULL, 2ULL}) {
      const auto g = generate_3regular(L, seed);
      const auto plan = build_layer_plan(FaaParams{4, 4});
      const auto sv = sv_run_faa(g, plan);
      const auto mps = mps_run_faa(g, plan, 64);
      CHECK(mps.report.total_discarded_weight < 1e-20);
      CHECK(oracle::phase_aligned_distance(dense(mps.state), oracle::to_eigen(sv.amplitudes())) < 1e-8);
    }
  }
}

TEST_CASE("vertex reordering keeps full-rank results exact") {
  const auto g = generate_3regular(10, 6);
  const auto plan = build_layer_plan(FaaParams{4, 2});
  const auto sv = sv_run_faa(g, plan);
  const auto run = mps_run_faa(g, plan, MpsOptions{64, true});
  CHECK(oracle::phase_aligned_distance(dense(run.state), oracle::to_eigen(sv.amplitudes())) < 1e-8);
}

TEST_CASE("reverse Cuthill-McKee returns a permutation that narrows the layout") {
  int total_rcm = 0, total_id = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto g = generate_3regular(40, seed);
    auto perm = reverse_cuthill_mckee(g);
    auto sorted = perm;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 40; ++i) REQUIRE(sorted[static_cast<std::size_t>(i)] == i);
    for (const auto& e : g.edges()) {
      total_rcm += std::abs(perm[static_cast<std::size_t>(e.u)] - perm[static_cast<std::size_t>(e.v)]);
      total_id += e.v - e.u;
    }
  }
  CHECK(total_rcm < total_id);
}

TEST_CASE("routed edge order: ascending distance then lexicographic") {
  const auto g = generate_3regular(16, 2);
  std::vector<int> id(16);
  std::iota(id.begin(), id.end(), 0);
  const auto order = routed_edge_order(g, id);
  REQUIRE(order.size() == static_cast<std::size_t>(g.num_edges()));
  for (std::size_t i = 1; i < order.size(); ++i) {
    const int d0 = order[i - 1].v - order[i - 1].u, d1 = order[i].v - order[i].u;
    REQUIRE((d0 < d1 || (d0 == d1 && order[i - 1] < order[i])));
  }
}

TEST_CASE("bond dimension cap and unit norm under truncation") {
  const auto g = generate_3regular(16, 3);
  const auto plan = build_layer_plan(FaaParams{4, 3});
  for (int D : {1, 2, 3, 5, 8}) {
    const auto run = mps_run_faa(g, plan, D);
    CHECK(run.state.max_bond() <= D);
    CHECK(run.report.max_chi <= D);
    CHECK(run.state.norm() == Approx(1.0).epsilon(1e-10));
    CHECK(run.state.contracted_norm() == Approx(1.0).epsilon(1e-10));
    CHECK(run.report.steps.size() == static_cast<std::size_t>(plan.M));
    for (const auto& s : run.report.steps) REQUIRE(s.max_chi <= D);
    if (D < 8) CHECK(run.report.total_discarded_weight > 0);
  }
}

TEST_CASE("canonical form holds around the center and survives re-canonicalization") {
  const auto g = generate_3regular(12, 4);
  auto run = mps_run_faa(g, build_layer_plan(FaaParams{4, 2}), 6);
  auto& st = run.state;
  for (int l = 0; l < st.center(); ++l) CHECK(st.is_left_orthogonal(l));
  for (int l = st.center() + 1; l < st.num_sites(); ++l) CHECK(st.is_right_orthogonal(l));
  const auto before = dense(st);
  for (int site : {0, 5, 11}) {
    st.canonicalize(site);
    CHECK(oracle::phase_aligned_distance(dense(st), before) < 1e-10);
    for (int l = 0; l < site; ++l) CHECK(st.is_left_orthogonal(l));
    for (int l = site + 1; l < st.num_sites(); ++l) CHECK(st.is_right_orthogonal(l));
    CHECK(st.norm() == Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("D=1 gives a product state whose samples respect the oracle bound") {
  const auto g = generate_3regular(14, 5);
  const auto m_G = max_cut_exact(g).min_energy;
  const auto run = mps_run_faa(g, build_layer_plan(FaaParams{4, 5}), 1);
  for (int b : run.state.bond_dims()) CHECK(b == 1);
  Rng rng(3);
  for (const auto& a : run.state.sample(500, rng)) REQUIRE(energy(g, a) >= m_G);
}

TEST_CASE("K4 at D=2 finds the optimum for some T <= 30") {
  const auto g = oracle::k4();
  bool found = false;
  for (int T = 1; T <= 30 && !found; ++T) {
    const auto run = mps_run_faa(g, build_layer_plan(FaaParams{4, T}), 2);
    Rng rng(derive_seed(1, T));
    for (const auto& a : run.state.sample(1000, rng)) found |= energy(g, a) == -2;
  }
  CHECK(found);
}

TEST_CASE("sampling a product state") {
  const auto bits = SpinAssignment::from_string("1101001");
  const auto st = MpsState::product(bits);
  Rng rng(1);
  for (const auto& a : st.sample(100, rng)) REQUIRE(a == bits);

  // Same basis state under a non-trivial layout.
  auto hp = MpsState::plus(7, {3, 0, 6, 1, 5, 2, 4});
  for (int q = 0; q < 7; ++q) {
    hp.apply_1q(q, gates::hadamard());
    if (bits[static_cast<std::size_t>(q)]) hp.apply_1q(q, gates::rx_layer(std::numbers::pi / 2));
  }
  for (const auto& a : hp.sample(50, rng)) REQUIRE(a == bits);
}

TEST_CASE("sampling the plus state is uniform within 5 sigma") {
  const auto st = MpsState::plus(4);
  Rng rng(9);
  const int N = 10000;
  std::map<std::string, int> counts;
  for (const auto& a : st.sample(N, rng)) ++counts[a.to_string()];
  const double p = 1.0 / 16, mean = N * p, sigma = std::sqrt(N * p * (1 - p));
  CHECK(counts.size() == 16);
  for (const auto& [s, c] : counts) CHECK(std::abs(c - mean) < 5 * sigma);
}

TEST_CASE("full-rank MPS samples follow the statevector distribution") {
  const auto g = generate_3regular(8, 2);
  const auto plan = build_layer_plan(FaaParams{4, 6});
  const auto probs = sv_run_faa(g, plan).probabilities();
  const auto run = mps_run_faa(g, plan, 16);
  Rng rng(21);
  const int N = 100000;
  std::vector<double> freq(256, 0.0);
  for (const auto& a : run.state.sample(N, rng)) {
    std::uint64_t idx = 0;
    for (int q = 0; q < 8; ++q) idx |= std::uint64_t{a[static_cast<std::size_t>(q)]} << q;
    freq[idx] += 1.0 / N;
  }
  double tv = 0;
  for (std::size_t i = 0; i < 256; ++i) tv += 0.5 * std::abs(freq[i] - probs[i]);
  CHECK(tv < 0.02);
}

TEST_CASE("sampling is deterministic given the seed") {
  const auto g = generate_3regular(10, 1);
  const auto run = mps_run_faa(g, build_layer_plan(FaaParams{4, 2}), 4);
  Rng a(5), b(5);
  CHECK(run.state.sample(200, a) == run.state.sample(200, b));
}

TEST_CASE("dense contraction") {
  CHECK_THROWS_AS(MpsState::plus(21).to_dense(), std::length_error);
  oracle::Vec ref;
  const auto st = scrambled(9, 3, ref);
  CHECK(st.to_dense().norm() == Approx(1.0).epsilon(1e-10));
}

TEST_CASE("invalid layouts are rejected") {
  CHECK_THROWS_AS(MpsState::plus(3, {0, 0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(MpsState::plus(3, {0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(MpsState::plus(0), std::invalid_argument);
}
