#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <lapacke.h>

#include "faa/graph.hpp"
#include "faa/rng.hpp"
#include "faa/schedule.hpp"
#include "faa/statevector.hpp"

namespace faa {

using Mat = Eigen::MatrixXcd;
using Mat2 = Eigen::Matrix2cd;
using Mat4 = Eigen::Matrix4cd;

/// Singular values at or below this are treated as numerical noise.
inline constexpr double kSingularValueFloor = 1e-14;
inline constexpr int kMpsDenseCap = 20;

namespace gates {

inline Mat2 rx_layer(double theta) {
  // exp(-i theta X)
  Mat2 u;
  const double c = std::cos(theta), s = std::sin(theta);
  u << cplx(c, 0), cplx(0, -s), cplx(0, -s), cplx(c, 0);
  return u;
}

/// exp(+i theta Z Z) in the basis index 2*s_left + s_right.
inline Mat4 zz_phase(double theta) {
  const cplx p = std::polar(1.0, theta), m = std::polar(1.0, -theta);
  Mat4 u = Mat4::Zero();
  u.diagonal() << p, m, m, p;
  return u;
}

inline Mat4 swap() {
  Mat4 u = Mat4::Zero();
  u(0, 0) = u(3, 3) = 1;
  u(1, 2) = u(2, 1) = 1;
  return u;
}

inline Mat4 cnot() {
  // control on the left site
  Mat4 u = Mat4::Zero();
  u(0, 0) = u(1, 1) = 1;
  u(2, 3) = u(3, 2) = 1;
  return u;
}

inline Mat2 hadamard() {
  Mat2 u;
  const double r = 1.0 / std::sqrt(2.0);
  u << r, r, r, -r;
  return u;
}

}  // namespace gates

namespace detail {

struct ThinSvd {
  Mat u;               // m x k
  Eigen::VectorXd s;   // k, descending
  Mat vh;              // k x n
};

/// Thin SVD through LAPACK zgesvd; `a` is overwritten.
inline ThinSvd thin_svd(Mat& a) {
  const lapack_int m = static_cast<lapack_int>(a.rows()), n = static_cast<lapack_int>(a.cols());
  const lapack_int k = std::min(m, n);
  ThinSvd out{Mat(m, k), Eigen::VectorXd(k), Mat(k, n)};
  thread_local std::vector<lapack_complex_double> work;
  thread_local std::vector<double> rwork;
  rwork.resize(static_cast<std::size_t>(5 * k));
  auto* ap = reinterpret_cast<lapack_complex_double*>(a.data());
  auto* up = reinterpret_cast<lapack_complex_double*>(out.u.data());
  auto* vp = reinterpret_cast<lapack_complex_double*>(out.vh.data());
  lapack_complex_double query;
  lapack_int info = LAPACKE_zgesvd_work(LAPACK_COL_MAJOR, 'S', 'S', m, n, ap, m, out.s.data(), up, m, vp, k, &query,
                                        -1, rwork.data());
  if (info != 0) throw std::runtime_error("zgesvd workspace query failed");
  const auto lwork = static_cast<lapack_int>(reinterpret_cast<double*>(&query)[0]);
  if (work.size() < static_cast<std::size_t>(lwork)) work.resize(static_cast<std::size_t>(lwork));
  info = LAPACKE_zgesvd_work(LAPACK_COL_MAJOR, 'S', 'S', m, n, ap, m, out.s.data(), up, m, vp, k, work.data(),
                             static_cast<lapack_int>(work.size()), rwork.data());
  if (info != 0) throw std::runtime_error("zgesvd did not converge (info=" + std::to_string(info) + ")");
  return out;
}

}  // namespace detail

struct Truncation {
  double discarded_weight = 0;
  int bond = 0;
};

enum class Absorb { left, right };

/// Matrix product state. Site tensor l is stored as two matrices A[l][s] of
/// shape chi_{l-1} x chi_l. Qubits are placed on sites through `perm`
/// (qubit -> site). Tensors left of the orthogonality center are
/// left-orthogonal and tensors right of it right-orthogonal.
class MpsState {
 public:
  MpsState() = default;

  static MpsState plus(int num_qubits) {
    std::vector<int> identity(static_cast<std::size_t>(num_qubits));
    std::iota(identity.begin(), identity.end(), 0);
    return plus(num_qubits, std::move(identity));
  }

  static MpsState plus(int num_qubits, std::vector<int> qubit_to_site) {
    if (num_qubits < 1) throw std::invalid_argument("MPS needs at least one site");
    MpsState st;
    st.L_ = num_qubits;
    st.set_layout(std::move(qubit_to_site));
    const double r = 1.0 / std::sqrt(2.0);
    st.tensors_.resize(static_cast<std::size_t>(num_qubits));
    for (auto& t : st.tensors_) {
      t[0] = Mat::Constant(1, 1, r);
      t[1] = Mat::Constant(1, 1, r);
    }
    st.center_ = 0;
    return st;
  }

  /// Product state |b>, with b given in qubit order.
  static MpsState product(const SpinAssignment& bits) {
    auto st = plus(static_cast<int>(bits.size()));
    for (int q = 0; q < st.L_; ++q) {
      auto& t = st.tensors_[static_cast<std::size_t>(st.perm_[static_cast<std::size_t>(q)])];
      t[0](0, 0) = bits[static_cast<std::size_t>(q)] ? 0.0 : 1.0;
      t[1](0, 0) = bits[static_cast<std::size_t>(q)] ? 1.0 : 0.0;
    }
    return st;
  }

  int num_sites() const noexcept { return L_; }
  int center() const noexcept { return center_; }
  const std::vector<int>& qubit_to_site() const noexcept { return perm_; }
  const std::vector<int>& site_to_qubit() const noexcept { return inverse_; }
  const std::array<Mat, 2>& site_tensor(int site) const { return tensors_.at(static_cast<std::size_t>(site)); }

  /// chi_l for l = 1..L-1 (the bond between site l-1 and l).
  std::vector<int> bond_dims() const {
    std::vector<int> out;
    for (int l = 0; l + 1 < L_; ++l) out.push_back(static_cast<int>(tensors_[static_cast<std::size_t>(l)][0].cols()));
    return out;
  }

  int max_bond() const {
    int m = 1;
    for (int b : bond_dims()) m = std::max(m, b);
    return m;
  }

  /// Norm read off the center tensor (valid in canonical form).
  double norm() const {
    const auto& t = tensors_[static_cast<std::size_t>(center_)];
    return std::sqrt(t[0].squaredNorm() + t[1].squaredNorm());
  }

  /// Norm by full transfer-matrix contraction, independent of the gauge.
  double contracted_norm() const {
    Mat env = Mat::Identity(1, 1);
    for (const auto& t : tensors_) env = t[0].adjoint() * env * t[0] + t[1].adjoint() * env * t[1];
    return std::sqrt(std::abs(env(0, 0)));
  }

  bool is_left_orthogonal(int site, double tol = 1e-10) const {
    const auto& t = tensors_.at(static_cast<std::size_t>(site));
    Mat g = t[0].adjoint() * t[0] + t[1].adjoint() * t[1];
    return (g - Mat::Identity(g.rows(), g.cols())).norm() < tol;
  }

  bool is_right_orthogonal(int site, double tol = 1e-10) const {
    const auto& t = tensors_.at(static_cast<std::size_t>(site));
    Mat g = t[0] * t[0].adjoint() + t[1] * t[1].adjoint();
    return (g - Mat::Identity(g.rows(), g.cols())).norm() < tol;
  }

  void apply_1q_site(int site, const Mat2& u) {
    auto& t = tensors_.at(static_cast<std::size_t>(site));
    Mat a0 = u(0, 0) * t[0] + u(0, 1) * t[1];
    Mat a1 = u(1, 0) * t[0] + u(1, 1) * t[1];
    t[0] = std::move(a0);
    t[1] = std::move(a1);
  }

  void apply_1q(int qubit, const Mat2& u) { apply_1q_site(perm_.at(static_cast<std::size_t>(qubit)), u); }

  /// Moves the orthogonality center with QR sweeps.
  void move_center(int site) {
    if (site < 0 || site >= L_) throw std::out_of_range("center site out of range");
    while (center_ < site) left_orthogonalize(center_++);
    while (center_ > site) right_orthogonalize(center_--);
  }

  /// Rebuilds the canonical form from scratch around `site`.
  void canonicalize(int site) {
    for (int l = 0; l < site; ++l) left_orthogonalize(l);
    for (int l = L_ - 1; l > site; --l) right_orthogonalize(l);
    center_ = site;
  }

  /// Applies a 4x4 gate to sites (site, site+1) and splits by SVD, keeping at
  /// most `max_bond` singular values (and none below the noise floor). The
  /// kept spectrum is renormalized. The center ends on the side named by
  /// `absorb`.
  Truncation apply_2q_adjacent(int site, const Mat4& u, int max_bond, Absorb absorb = Absorb::right) {
    if (site < 0 || site + 1 >= L_) throw std::out_of_range("two-site gate outside the chain");
    if (max_bond < 1) throw std::invalid_argument("bond dimension must be >= 1");
    if (center_ < site) move_center(site);
    if (center_ > site + 1) move_center(site + 1);

    auto& left = tensors_[static_cast<std::size_t>(site)];
    auto& right = tensors_[static_cast<std::size_t>(site + 1)];
    const Eigen::Index chi_l = left[0].rows(), chi_r = right[0].cols();

    std::array<Mat, 4> pair;  // pair[2*t1 + t2] = A1[t1] A2[t2]
    for (int t1 = 0; t1 < 2; ++t1) {
      for (int t2 = 0; t2 < 2; ++t2) pair[static_cast<std::size_t>(2 * t1 + t2)].noalias() = left[static_cast<std::size_t>(t1)] * right[static_cast<std::size_t>(t2)];
    }
    Mat theta(2 * chi_l, 2 * chi_r);
    for (int s1 = 0; s1 < 2; ++s1) {
      for (int s2 = 0; s2 < 2; ++s2) {
        auto block = theta.block(s1 * chi_l, s2 * chi_r, chi_l, chi_r);
        block.setZero();
        for (int t = 0; t < 4; ++t) {
          const cplx g = u(2 * s1 + s2, t);
          if (g != cplx(0, 0)) block += g * pair[static_cast<std::size_t>(t)];
        }
      }
    }

    auto svd = detail::thin_svd(theta);
    const auto& sv = svd.s;
    double total = 0;
    Eigen::Index keep = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
      total += sv(i) * sv(i);
      if (sv(i) > kSingularValueFloor) keep = i + 1;
    }
    keep = std::clamp<Eigen::Index>(std::min<Eigen::Index>(keep, max_bond), 1, sv.size());
    double kept = 0;
    for (Eigen::Index i = 0; i < keep; ++i) kept += sv(i) * sv(i);
    Truncation report;
    report.discarded_weight = total > 0 ? std::max(0.0, (total - kept) / total) : 0.0;
    report.bond = static_cast<int>(keep);

    Eigen::VectorXd s = sv.head(keep) / std::sqrt(kept);
    Mat us = svd.u.leftCols(keep);
    Mat vh = svd.vh.topRows(keep);
    if (absorb == Absorb::left) {
      us = us * s.asDiagonal();
      center_ = site;
    } else {
      vh = s.asDiagonal() * vh;
      center_ = site + 1;
    }
    for (int s1 = 0; s1 < 2; ++s1) left[static_cast<std::size_t>(s1)] = us.middleRows(s1 * chi_l, chi_l);
    for (int s2 = 0; s2 < 2; ++s2) right[static_cast<std::size_t>(s2)] = vh.middleCols(s2 * chi_r, chi_r);
    assert(max_bond_ok(max_bond));
    return report;
  }

  /// exp(+i theta Z_u Z_v) on two qubits at any distance: the qubit on the
  /// lower site is swapped up next to the other one, the phase is applied and
  /// the swaps are undone, so the layout is unchanged on return. Every
  /// two-site step truncates to `max_bond`.
  Truncation apply_zz(int qubit_u, int qubit_v, double theta, int max_bond) {
    if (qubit_u == qubit_v) throw std::invalid_argument("ZZ gate needs two distinct qubits");
    int p = perm_.at(static_cast<std::size_t>(qubit_u)), q = perm_.at(static_cast<std::size_t>(qubit_v));
    if (p > q) std::swap(p, q);
    Truncation total;
    auto add = [&](const Truncation& t) {
      total.discarded_weight += t.discarded_weight;
      total.bond = std::max(total.bond, t.bond);
    };
    const Mat4 sw = gates::swap();
    move_center(p);
    for (int i = p; i < q - 1; ++i) add(apply_2q_adjacent(i, sw, max_bond, Absorb::right));
    add(apply_2q_adjacent(q - 1, gates::zz_phase(theta), max_bond, Absorb::left));
    for (int i = q - 2; i >= p; --i) add(apply_2q_adjacent(i, sw, max_bond, Absorb::left));
    return total;
  }

  /// Full contraction into a statevector in qubit order (qubit j = bit j).
  StateVector to_dense(int max_qubits = kMpsDenseCap) const {
    StateVector::check_size(L_, max_qubits);
    Mat psi = Mat::Identity(1, 1);
    for (int l = 0; l < L_; ++l) {
      const auto& t = tensors_[static_cast<std::size_t>(l)];
      // site l becomes bit l of the row index
      Mat next(psi.rows() * 2, t[0].cols());
      next.topRows(psi.rows()).noalias() = psi * t[0];
      next.bottomRows(psi.rows()).noalias() = psi * t[1];
      psi = std::move(next);
    }
    std::vector<cplx> amp(psi.rows());
    for (Eigen::Index r = 0; r < psi.rows(); ++r) {
      std::uint64_t qubit_index = 0;
      for (int l = 0; l < L_; ++l) {
        if (static_cast<std::uint64_t>(r) >> l & 1U) qubit_index |= std::uint64_t{1} << inverse_[static_cast<std::size_t>(l)];
      }
      amp[qubit_index] = psi(r, 0);
    }
    return StateVector(L_, std::move(amp));
  }

  /// Independent Z-basis shots by sequential conditional sampling from a
  /// copy brought into right-canonical form. Returned in qubit order.
  std::vector<SpinAssignment> sample(int shots, Rng& rng) const {
    MpsState work = *this;
    work.move_center(0);
    std::vector<SpinAssignment> out;
    out.reserve(static_cast<std::size_t>(std::max(shots, 0)));
    Eigen::RowVectorXcd v, w0, w1;
    for (int shot = 0; shot < shots; ++shot) {
      SpinAssignment bits(static_cast<std::size_t>(L_));
      v = Eigen::RowVectorXcd::Ones(1);
      for (int l = 0; l < L_; ++l) {
        const auto& t = work.tensors_[static_cast<std::size_t>(l)];
        w0.noalias() = v * t[0];
        w1.noalias() = v * t[1];
        const double p0 = w0.squaredNorm(), p1 = w1.squaredNorm();
        const bool one = uniform01(rng) * (p0 + p1) >= p0;
        bits[static_cast<std::size_t>(inverse_[static_cast<std::size_t>(l)])] = one ? 1 : 0;
        v = one ? w1 / std::sqrt(p1) : w0 / std::sqrt(p0);
      }
      out.push_back(std::move(bits));
    }
    return out;
  }

 private:
  void set_layout(std::vector<int> qubit_to_site) {
    if (static_cast<int>(qubit_to_site.size()) != L_) throw std::invalid_argument("layout size does not match L");
    inverse_.assign(static_cast<std::size_t>(L_), -1);
    for (int q = 0; q < L_; ++q) {
      int s = qubit_to_site[static_cast<std::size_t>(q)];
      if (s < 0 || s >= L_ || inverse_[static_cast<std::size_t>(s)] != -1) {
        throw std::invalid_argument("layout is not a permutation");
      }
      inverse_[static_cast<std::size_t>(s)] = q;
    }
    perm_ = std::move(qubit_to_site);
  }

  bool max_bond_ok(int cap) const { return max_bond() <= cap; }

  /// Site l becomes left-orthogonal; the remainder moves into site l+1.
  void left_orthogonalize(int l) {
    auto& t = tensors_[static_cast<std::size_t>(l)];
    auto& next = tensors_[static_cast<std::size_t>(l + 1)];
    const Eigen::Index chi_l = t[0].rows(), chi_r = t[0].cols();
    Mat stacked(2 * chi_l, chi_r);
    stacked << t[0], t[1];
    Eigen::HouseholderQR<Mat> qr(stacked);
    const Eigen::Index k = std::min(stacked.rows(), stacked.cols());
    Mat q = qr.householderQ() * Mat::Identity(stacked.rows(), k);
    Mat r = qr.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
    t[0] = q.topRows(chi_l);
    t[1] = q.bottomRows(chi_l);
    next[0] = r * next[0];
    next[1] = r * next[1];
  }

  /// Site l becomes right-orthogonal; the remainder moves into site l-1.
  void right_orthogonalize(int l) {
    auto& t = tensors_[static_cast<std::size_t>(l)];
    auto& prev = tensors_[static_cast<std::size_t>(l - 1)];
    const Eigen::Index chi_l = t[0].rows(), chi_r = t[0].cols();
    Mat stacked(2 * chi_r, chi_l);  // adjoint of [A0 A1]
    stacked << t[0].adjoint(), t[1].adjoint();
    Eigen::HouseholderQR<Mat> qr(stacked);
    const Eigen::Index k = std::min(stacked.rows(), stacked.cols());
    Mat q = qr.householderQ() * Mat::Identity(stacked.rows(), k);
    Mat r = qr.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
    t[0] = q.topRows(chi_r).adjoint();
    t[1] = q.bottomRows(chi_r).adjoint();
    Mat rh = r.adjoint();
    prev[0] = prev[0] * rh;
    prev[1] = prev[1] * rh;
  }

  int L_ = 0;
  int center_ = 0;
  std::vector<int> perm_;
  std::vector<int> inverse_;
  std::vector<std::array<Mat, 2>> tensors_;
};

// ---------------------------------------------------------------------------

/// Reverse Cuthill-McKee vertex order, returned as qubit -> site. Each
/// component is started from a pseudo-peripheral vertex.
inline std::vector<int> reverse_cuthill_mckee(const Graph& g) {
  const int L = g.num_vertices();
  std::vector<int> order;
  std::vector<std::uint8_t> placed(static_cast<std::size_t>(L), 0);

  auto bfs_far = [&](int start, const std::vector<std::uint8_t>& mask) {
    std::vector<int> dist(static_cast<std::size_t>(L), -1);
    std::queue<int> qu;
    qu.push(start);
    dist[static_cast<std::size_t>(start)] = 0;
    int far = start;
    while (!qu.empty()) {
      int v = qu.front();
      qu.pop();
      if (dist[static_cast<std::size_t>(v)] > dist[static_cast<std::size_t>(far)]) far = v;
      for (int u : g.neighbors(v)) {
        if (!mask[static_cast<std::size_t>(u)] && dist[static_cast<std::size_t>(u)] < 0) {
          dist[static_cast<std::size_t>(u)] = dist[static_cast<std::size_t>(v)] + 1;
          qu.push(u);
        }
      }
    }
    return far;
  };

  for (int root = 0; root < L; ++root) {
    if (placed[static_cast<std::size_t>(root)]) continue;
    int start = root;
    for (int i = 0; i < 3; ++i) start = bfs_far(start, placed);
    std::queue<int> qu;
    qu.push(start);
    placed[static_cast<std::size_t>(start)] = 1;
    while (!qu.empty()) {
      int v = qu.front();
      qu.pop();
      order.push_back(v);
      std::vector<int> nb(g.neighbors(v).begin(), g.neighbors(v).end());
      std::sort(nb.begin(), nb.end(), [&](int a, int b) {
        return std::pair(g.degree(a), a) < std::pair(g.degree(b), b);
      });
      for (int u : nb) {
        if (!placed[static_cast<std::size_t>(u)]) {
          placed[static_cast<std::size_t>(u)] = 1;
          qu.push(u);
        }
      }
    }
  }
  std::reverse(order.begin(), order.end());
  std::vector<int> qubit_to_site(static_cast<std::size_t>(L));
  for (int s = 0; s < L; ++s) qubit_to_site[static_cast<std::size_t>(order[static_cast<std::size_t>(s)])] = s;
  return qubit_to_site;
}

/// ZZ-layer edge order: ascending site distance, ties by the edge itself.
inline std::vector<Edge> routed_edge_order(const Graph& g, const std::vector<int>& qubit_to_site) {
  std::vector<Edge> edges(g.edges().begin(), g.edges().end());
  auto dist = [&](const Edge& e) {
    return std::abs(qubit_to_site[static_cast<std::size_t>(e.u)] - qubit_to_site[static_cast<std::size_t>(e.v)]);
  };
  std::stable_sort(edges.begin(), edges.end(), [&](const Edge& a, const Edge& b) {
    return std::pair(dist(a), a) < std::pair(dist(b), b);
  });
  return edges;
}

struct StepTruncation {
  int step = 0;
  int max_chi = 1;
  double discarded_weight = 0;
};

struct MpsRunReport {
  double total_discarded_weight = 0;
  int max_chi = 1;
  std::uint64_t two_site_ops = 0;
  std::vector<StepTruncation> steps;
};

struct MpsRun {
  MpsState state;
  MpsRunReport report;
};

struct MpsOptions {
  int bond_dim = 2;
  bool reorder_vertices = false;
};

/// One Trotter step: the X layer on every site, then the ZZ layer in `order`.
inline StepTruncation apply_faa_step(MpsState& st, const std::vector<Edge>& order, const LayerStep& step, int bond_dim) {
  StepTruncation rec;
  rec.step = step.k;
  if (step.theta_x != 0.0) {
    const Mat2 rx = gates::rx_layer(step.theta_x);
    for (int site = 0; site < st.num_sites(); ++site) st.apply_1q_site(site, rx);
  }
  if (step.theta_z != 0.0) {
    for (const auto& e : order) rec.discarded_weight += st.apply_zz(e.u, e.v, step.theta_z, bond_dim).discarded_weight;
  }
  rec.max_chi = st.max_bond();
  return rec;
}

inline MpsRun mps_run_faa(const Graph& g, const LayerPlan& plan, const MpsOptions& opts) {
  const int L = g.num_vertices();
  MpsRun run;
  run.state = opts.reorder_vertices ? MpsState::plus(L, reverse_cuthill_mckee(g)) : MpsState::plus(L);
  auto& st = run.state;
  const auto order = routed_edge_order(g, st.qubit_to_site());
  std::uint64_t ops_per_layer = 0;
  for (const auto& e : order) {
    ops_per_layer += static_cast<std::uint64_t>(
        2 * std::abs(st.qubit_to_site()[static_cast<std::size_t>(e.u)] - st.qubit_to_site()[static_cast<std::size_t>(e.v)]) - 1);
  }
  for (const auto& step : plan.steps) {
    const auto rec = apply_faa_step(st, order, step, opts.bond_dim);
    if (step.theta_z != 0.0) run.report.two_site_ops += ops_per_layer;
    run.report.total_discarded_weight += rec.discarded_weight;
    run.report.max_chi = std::max(run.report.max_chi, rec.max_chi);
    run.report.steps.push_back(rec);
  }
  return run;
}

inline MpsRun mps_run_faa(const Graph& g, const LayerPlan& plan, int bond_dim) {
  return mps_run_faa(g, plan, MpsOptions{bond_dim, false});
}

}  // namespace faa
