#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "faa/graph.hpp"
#include "faa/rng.hpp"
#include "faa/schedule.hpp"

namespace faa {

using cplx = std::complex<double>;

inline constexpr int kDefaultStateVectorCap = 26;

/// Ising energy of every basis index, built incrementally from index with its
/// lowest set bit cleared.
class EnergyTable {
 public:
  explicit EnergyTable(const Graph& g) : num_edges_(g.num_edges()) {
    const int L = g.num_vertices();
    if (L > 40) throw std::length_error("energy table limited to 40 vertices");
    const std::size_t dim = std::size_t{1} << L;
    energies_.resize(dim);
    energies_[0] = static_cast<std::int16_t>(g.num_edges());
    for (std::size_t i = 1; i < dim; ++i) {
      const int v = std::countr_zero(i);
      const std::size_t prev = i & (i - 1);
      // Flipping v from +1 to -1 changes each incident edge by -2 z_u.
      int field = 0;
      for (int u : g.neighbors(v)) field += (prev >> u & 1U) ? -1 : 1;
      energies_[i] = static_cast<std::int16_t>(energies_[prev] - 2 * field);
    }
  }

  int operator[](std::size_t index) const { return energies_[index]; }
  std::size_t size() const noexcept { return energies_.size(); }
  int num_edges() const noexcept { return num_edges_; }

 private:
  int num_edges_;
  std::vector<std::int16_t> energies_;
};

/// Dense 2^L amplitude vector; qubit j is bit j of the basis index.
class StateVector {
 public:
  StateVector() = default;

  StateVector(int num_qubits, std::vector<cplx> amplitudes) : L_(num_qubits), amp_(std::move(amplitudes)) {
    if (amp_.size() != (std::size_t{1} << L_)) throw std::invalid_argument("amplitude count is not 2^L");
  }

  /// |+>^{\otimes L}.
  static StateVector plus(int num_qubits, int max_qubits = kDefaultStateVectorCap) {
    check_size(num_qubits, max_qubits);
    const std::size_t dim = std::size_t{1} << num_qubits;
    return StateVector(num_qubits, std::vector<cplx>(dim, cplx(std::pow(2.0, -0.5 * num_qubits), 0.0)));
  }

  static StateVector basis(int num_qubits, std::uint64_t index, int max_qubits = kDefaultStateVectorCap) {
    check_size(num_qubits, max_qubits);
    std::vector<cplx> amp(std::size_t{1} << num_qubits);
    amp.at(index) = 1.0;
    return StateVector(num_qubits, std::move(amp));
  }

  int num_qubits() const noexcept { return L_; }
  std::size_t dim() const noexcept { return amp_.size(); }
  const std::vector<cplx>& amplitudes() const noexcept { return amp_; }
  std::vector<cplx>& amplitudes() noexcept { return amp_; }
  cplx operator[](std::size_t i) const { return amp_[i]; }

  double norm() const {
    double s = 0;
    for (const auto& a : amp_) s += std::norm(a);
    return std::sqrt(s);
  }

  std::vector<double> probabilities() const {
    std::vector<double> p(amp_.size());
    for (std::size_t i = 0; i < amp_.size(); ++i) p[i] = std::norm(amp_[i]);
    return p;
  }

  /// Generic single-qubit gate {{u00,u01},{u10,u11}}.
  void apply_1q(int qubit, const std::array<cplx, 4>& u) {
    const std::size_t stride = std::size_t{1} << qubit;
    for (std::size_t base = 0; base < amp_.size(); base += 2 * stride) {
      for (std::size_t i = base; i < base + stride; ++i) {
        const cplx a0 = amp_[i], a1 = amp_[i + stride];
        amp_[i] = u[0] * a0 + u[1] * a1;
        amp_[i + stride] = u[2] * a0 + u[3] * a1;
      }
    }
  }

  /// exp(-i theta X) on every qubit.
  void apply_x_layer(double theta) {
    if (theta == 0.0) return;
    const double c = std::cos(theta), s = std::sin(theta);
    for (int q = 0; q < L_; ++q) {
      const std::size_t stride = std::size_t{1} << q;
      for (std::size_t base = 0; base < amp_.size(); base += 2 * stride) {
        for (std::size_t i = base; i < base + stride; ++i) {
          const cplx a0 = amp_[i], a1 = amp_[i + stride];
          // -i s a = (s*imag, -s*real)
          amp_[i] = c * a0 + cplx(s * a1.imag(), -s * a1.real());
          amp_[i + stride] = c * a1 + cplx(s * a0.imag(), -s * a0.real());
        }
      }
    }
  }

  /// prod_{(j,k) in E} exp(+i theta Z_j Z_k), applied as one diagonal pass.
  void apply_zz_layer(const EnergyTable& energies, double theta) {
    if (energies.size() != amp_.size()) throw std::invalid_argument("energy table does not match state size");
    if (theta == 0.0) return;
    const int m = energies.num_edges();
    std::vector<cplx> phase(static_cast<std::size_t>(2 * m + 1));
    for (int e = -m; e <= m; ++e) phase[static_cast<std::size_t>(e + m)] = std::polar(1.0, theta * e);
    for (std::size_t i = 0; i < amp_.size(); ++i) amp_[i] *= phase[static_cast<std::size_t>(energies[i] + m)];
  }

  void apply_zz_layer(const Graph& g, double theta) { apply_zz_layer(EnergyTable(g), theta); }

  /// Indices of N independent Z-basis measurements.
  std::vector<std::uint64_t> sample_indices(int shots, Rng& rng) const {
    std::vector<double> cdf(amp_.size());
    double acc = 0;
    for (std::size_t i = 0; i < amp_.size(); ++i) cdf[i] = acc += std::norm(amp_[i]);
    std::vector<std::uint64_t> out;
    out.reserve(static_cast<std::size_t>(std::max(shots, 0)));
    for (int s = 0; s < shots; ++s) {
      const double u = uniform01(rng) * acc;
      auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
      if (it == cdf.end()) --it;
      // Skip zero-probability entries that share the cumulative value.
      while (std::norm(amp_[static_cast<std::size_t>(it - cdf.begin())]) == 0.0 && it != cdf.begin()) --it;
      out.push_back(static_cast<std::uint64_t>(it - cdf.begin()));
    }
    return out;
  }

  std::vector<SpinAssignment> sample(int shots, Rng& rng) const {
    std::vector<SpinAssignment> out;
    for (auto idx : sample_indices(shots, rng)) out.push_back(SpinAssignment::from_index(idx, L_));
    return out;
  }

  /// Binary dump: amplitudes as consecutive little-endian (re, im) doubles.
  void dump(const std::filesystem::path& path) const {
    static_assert(std::endian::native == std::endian::little, "state dump assumes a little-endian host");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string());
    os.write(reinterpret_cast<const char*>(amp_.data()), static_cast<std::streamsize>(amp_.size() * sizeof(cplx)));
  }

  static StateVector load_dump(const std::filesystem::path& path) {
    const auto bytes = std::filesystem::file_size(path);
    const std::size_t count = bytes / sizeof(cplx);
    if (count == 0 || !std::has_single_bit(count) || count * sizeof(cplx) != bytes) {
      throw std::runtime_error(path.string() + " is not a state dump");
    }
    std::vector<cplx> amp(count);
    std::ifstream is(path, std::ios::binary);
    is.read(reinterpret_cast<char*>(amp.data()), static_cast<std::streamsize>(bytes));
    return StateVector(std::countr_zero(count), std::move(amp));
  }

  static void check_size(int num_qubits, int max_qubits) {
    if (num_qubits < 1) throw std::invalid_argument("state needs at least one qubit");
    if (num_qubits > max_qubits) {
      throw std::length_error("statevector with L=" + std::to_string(num_qubits) + " exceeds the cap of " +
                              std::to_string(max_qubits) + " qubits");
    }
  }

 private:
  int L_ = 0;
  std::vector<cplx> amp_;
};

/// Runs the full layer plan from |+...+>.
inline StateVector sv_run_faa(const EnergyTable& energies, int num_qubits, const LayerPlan& plan,
                              int max_qubits = kDefaultStateVectorCap) {
  auto st = StateVector::plus(num_qubits, max_qubits);
  for (const auto& step : plan.steps) {
    st.apply_x_layer(step.theta_x);
    st.apply_zz_layer(energies, step.theta_z);
  }
  return st;
}

inline StateVector sv_run_faa(const Graph& g, const LayerPlan& plan, int max_qubits = kDefaultStateVectorCap) {
  StateVector::check_size(g.num_vertices(), max_qubits);
  return sv_run_faa(EnergyTable(g), g.num_vertices(), plan, max_qubits);
}

}  // namespace faa
