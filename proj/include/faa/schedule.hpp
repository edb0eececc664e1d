#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace faa {

struct ScheduleError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class Backend { statevector, mps };

inline std::string to_string(Backend b) { return b == Backend::statevector ? "statevector" : "mps"; }

inline Backend parse_backend(const std::string& s) {
  if (s == "statevector" || s == "sv") return Backend::statevector;
  if (s == "mps") return Backend::mps;
  throw std::invalid_argument("unknown backend '" + s + "' (expected statevector or mps)");
}

/// Run parameters. The Trotter step is 1/n and the circuit has M = nT steps.
struct FaaParams {
  double n = 4.0;
  int T = 1;
  int shots = 1000;
  std::uint64_t seed = 0;
  Backend backend = Backend::statevector;
  int bond_dim = 2;
  bool reorder_vertices = false;  // bandwidth-reducing qubit layout for mps

  double dt() const { return 1.0 / n; }
};

inline constexpr double kIntegralityTolerance = 1e-9;

/// M = nT, rejecting combinations where nT is not an integer.
inline int step_count(double n, int T) {
  if (!(n > 0) || !std::isfinite(n)) throw ScheduleError("n must be a positive finite number");
  if (T < 1) throw ScheduleError("adiabatic time T must be a positive integer");
  const double nT = n * T;
  const double M = std::round(nT);
  if (std::abs(nT - M) > kIntegralityTolerance || M < 1) {
    throw ScheduleError("n*T = " + std::to_string(nT) + " is not a positive integer (n=" + std::to_string(n) +
                        ", T=" + std::to_string(T) + ")");
  }
  return static_cast<int>(M);
}

inline bool is_integral_step_count(double n, int T) {
  try {
    step_count(n, T);
    return true;
  } catch (const ScheduleError&) {
    return false;
  }
}

struct LayerStep {
  int k = 0;           // 1..M
  double s = 0;        // k / M
  double theta_x = 0;  // exp(-i theta_x X) on every qubit, applied first
  double theta_z = 0;  // exp(+i theta_z Z Z) on every edge, applied second
};

/// Ordered Trotter steps W_{1/M}, W_{2/M}, ..., W_1 of the Floquet circuit.
struct LayerPlan {
  int M = 0;
  double dt = 0;
  std::vector<LayerStep> steps;

  /// Adiabatic time covered by the plan, M * dt.
  double total_time() const { return M * dt; }
};

/// Plan with an explicit step count and step size.
inline LayerPlan build_layer_plan(int M, double dt) {
  if (M < 1) throw ScheduleError("step count M must be >= 1");
  if (!std::isfinite(dt)) throw ScheduleError("time step must be finite");
  LayerPlan plan;
  plan.M = M;
  plan.dt = dt;
  plan.steps.reserve(static_cast<std::size_t>(M));
  for (int k = 1; k <= M; ++k) {
    LayerStep st;
    st.k = k;
    st.s = k == M ? 1.0 : static_cast<double>(k) / M;
    st.theta_x = (1.0 - st.s) * dt;
    st.theta_z = st.s * dt;
    plan.steps.push_back(st);
  }
  return plan;
}

/// Plan for U(T) = U(nT, 1/n). The step size is recomputed as T/M so that the
/// plan covers exactly T even when n is only integral-compatible within 1e-9.
inline LayerPlan build_layer_plan(const FaaParams& p) {
  const int M = step_count(p.n, p.T);
  return build_layer_plan(M, static_cast<double>(p.T) / M);
}

inline nlohmann::json to_json(const LayerPlan& plan) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& st : plan.steps) {
    steps.push_back({{"step", st.k}, {"s", st.s}, {"theta_x", st.theta_x}, {"theta_z", st.theta_z}});
  }
  return {{"M", plan.M}, {"dt", plan.dt}, {"total_time", plan.total_time()}, {"steps", std::move(steps)}};
}

/// Parses "4", "0.75" or a fraction such as "2/3".
inline double parse_step_inverse(const std::string& text) {
  std::size_t slash = text.find('/');
  std::size_t used = 0;
  double value = 0;
  if (slash == std::string::npos) {
    value = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("cannot parse n from '" + text + "'");
  } else {
    std::string num = text.substr(0, slash), den = text.substr(slash + 1);
    std::size_t un = 0, ud = 0;
    double a = std::stod(num, &un), b = std::stod(den, &ud);
    if (un != num.size() || ud != den.size() || b == 0) throw std::invalid_argument("cannot parse n from '" + text + "'");
    value = a / b;
  }
  if (!(value > 0) || !std::isfinite(value)) throw std::invalid_argument("n must be positive, got '" + text + "'");
  return value;
}

}  // namespace faa
