#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "faa/exact.hpp"
#include "faa/graph.hpp"
#include "faa/mps.hpp"
#include "faa/rng.hpp"
#include "faa/schedule.hpp"
#include "faa/statevector.hpp"

namespace faa {

inline constexpr int kRecordSchemaVersion = 1;

/// Exact approximation ratio num/den, kept in lowest terms.
struct Ratio {
  std::int64_t num = 0;
  std::int64_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Ratio&, const Ratio&) = default;
};

/// r = (-m_star + 3L/2) / (-m_G + 3L/2), evaluated as (3L - 2 m_star) / (3L - 2 m_G).
inline Ratio compute_ratio(int m_star, int m_G, int L) {
  const std::int64_t den = 3 * std::int64_t{L} - 2 * std::int64_t{m_G};
  if (den <= 0) throw std::invalid_argument("ratio denominator must be positive (m_G < 3L/2)");
  std::int64_t num = 3 * std::int64_t{L} - 2 * std::int64_t{m_star};
  const std::int64_t g = std::gcd(num, den);
  return g == 0 ? Ratio{0, 1} : Ratio{num / g, den / g};
}

enum class Verification { oracle, sidecar, unverified };

inline std::string to_string(Verification v) {
  switch (v) {
    case Verification::oracle: return "oracle";
    case Verification::sidecar: return "sidecar";
    default: return "unverified";
  }
}

inline Verification parse_verification(const std::string& s) {
  if (s == "oracle") return Verification::oracle;
  if (s == "sidecar") return Verification::sidecar;
  if (s == "unverified") return Verification::unverified;
  throw std::invalid_argument("unknown verification mode '" + s + "'");
}

/// What the driver knows about the true minimum energy of a graph.
struct Optimum {
  std::optional<int> m_G;
  Verification mode = Verification::unverified;
  SpinAssignment witness;
};

/// Sidecar first, then the internal oracle under `budget`.
inline Optimum resolve_optimum(const Graph& g, const std::optional<std::filesystem::path>& graph_path,
                               const ExactBudget& budget = {}) {
  if (graph_path) {
    if (auto ref = find_reference(*graph_path, g)) return {ref->min_energy, Verification::sidecar, ref->witness};
  }
  auto res = max_cut_exact(g, budget);
  if (res.verified()) return {res.min_energy, Verification::oracle, res.witness};
  return {};
}

struct RunRecord {
  int schema_version = kRecordSchemaVersion;
  std::string graph_id;
  int L = 0;
  int T = 0;
  double n = 0;
  int M = 0;
  double dt = 0;
  int m_T = 0;
  std::string best_assignment;
  int m_star = 0;
  std::optional<int> m_G;
  std::optional<Ratio> r;
  std::string ratio_kind = "none";  // "exact", "lower_bound" or "none"
  int shots_used = 0;
  std::uint64_t shots_cumulative = 0;
  int optimal_hits = 0;  // shots with energy == m_G; 0 when m_G is unknown
  std::string backend;
  std::optional<int> bond_dim;
  int max_chi = 0;
  double discarded_weight = 0;
  std::vector<StepTruncation> truncation;
  std::uint64_t seed = 0;
  double wall_time = 0;
};

struct TStarRecord {
  int schema_version = kRecordSchemaVersion;
  std::string graph_id;
  int L = 0;
  std::optional<int> T_star;
  bool succeeded = false;
  int T_max = 0;
  int T_last = 0;  // last T actually run
  int runs = 0;
  std::string stop_reason;  // "optimum", "t_max", "stall", "empty"
  Verification verification = Verification::unverified;
  std::optional<int> m_G;
  std::optional<int> m_star;
  std::uint64_t shots_cumulative = 0;
  double discarded_weight = 0;  // of the last run
  double wall_time = 0;
};

inline void to_json(nlohmann::json& j, const StepTruncation& s) {
  j = {{"step", s.step}, {"max_chi", s.max_chi}, {"discarded_weight", s.discarded_weight}};
}

inline void from_json(const nlohmann::json& j, StepTruncation& s) {
  j.at("step").get_to(s.step);
  j.at("max_chi").get_to(s.max_chi);
  j.at("discarded_weight").get_to(s.discarded_weight);
}

namespace detail {

template <class T>
nlohmann::json opt_json(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <class T>
std::optional<T> json_opt(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace detail

inline void to_json(nlohmann::json& j, const RunRecord& r) {
  j = {{"schema_version", r.schema_version},
       {"type", "run"},
       {"graph_id", r.graph_id},
       {"L", r.L},
       {"T", r.T},
       {"n", r.n},
       {"M", r.M},
       {"dt", r.dt},
       {"m_T", r.m_T},
       {"best_assignment", r.best_assignment},
       {"m_star", r.m_star},
       {"m_G", detail::opt_json(r.m_G)},
       {"r_num", r.r ? nlohmann::json(r.r->num) : nlohmann::json(nullptr)},
       {"r_den", r.r ? nlohmann::json(r.r->den) : nlohmann::json(nullptr)},
       {"r", r.r ? nlohmann::json(r.r->value()) : nlohmann::json(nullptr)},
       {"ratio_kind", r.ratio_kind},
       {"shots_used", r.shots_used},
       {"shots_cumulative", r.shots_cumulative},
       {"optimal_hits", r.optimal_hits},
       {"backend", r.backend},
       {"bond_dim", detail::opt_json(r.bond_dim)},
       {"max_chi", r.max_chi},
       {"discarded_weight", r.discarded_weight},
       {"seed", r.seed},
       {"wall_time", r.wall_time}};
  if (!r.truncation.empty()) j["truncation"] = r.truncation;
}

inline void from_json(const nlohmann::json& j, RunRecord& r) {
  j.at("schema_version").get_to(r.schema_version);
  if (r.schema_version != kRecordSchemaVersion) throw std::runtime_error("unsupported record schema version");
  j.at("graph_id").get_to(r.graph_id);
  j.at("L").get_to(r.L);
  j.at("T").get_to(r.T);
  j.at("n").get_to(r.n);
  j.at("M").get_to(r.M);
  j.at("dt").get_to(r.dt);
  j.at("m_T").get_to(r.m_T);
  j.at("best_assignment").get_to(r.best_assignment);
  j.at("m_star").get_to(r.m_star);
  r.m_G = detail::json_opt<int>(j, "m_G");
  auto num = detail::json_opt<std::int64_t>(j, "r_num");
  auto den = detail::json_opt<std::int64_t>(j, "r_den");
  r.r = num && den ? std::optional<Ratio>(Ratio{*num, *den}) : std::nullopt;
  j.at("ratio_kind").get_to(r.ratio_kind);
  j.at("shots_used").get_to(r.shots_used);
  j.at("shots_cumulative").get_to(r.shots_cumulative);
  j.at("optimal_hits").get_to(r.optimal_hits);
  j.at("backend").get_to(r.backend);
  r.bond_dim = detail::json_opt<int>(j, "bond_dim");
  j.at("max_chi").get_to(r.max_chi);
  j.at("discarded_weight").get_to(r.discarded_weight);
  j.at("seed").get_to(r.seed);
  j.at("wall_time").get_to(r.wall_time);
  r.truncation = j.contains("truncation") ? j.at("truncation").get<std::vector<StepTruncation>>()
                                           : std::vector<StepTruncation>{};
}

inline void to_json(nlohmann::json& j, const TStarRecord& t) {
  j = {{"schema_version", t.schema_version},
       {"type", "t_star"},
       {"graph_id", t.graph_id},
       {"L", t.L},
       {"T_star", detail::opt_json(t.T_star)},
       {"succeeded", t.succeeded},
       {"T_max", t.T_max},
       {"T_last", t.T_last},
       {"runs", t.runs},
       {"stop_reason", t.stop_reason},
       {"verification", to_string(t.verification)},
       {"m_G", detail::opt_json(t.m_G)},
       {"m_star", detail::opt_json(t.m_star)},
       {"shots_cumulative", t.shots_cumulative},
       {"discarded_weight", t.discarded_weight},
       {"wall_time", t.wall_time}};
}

inline void from_json(const nlohmann::json& j, TStarRecord& t) {
  j.at("schema_version").get_to(t.schema_version);
  if (t.schema_version != kRecordSchemaVersion) throw std::runtime_error("unsupported record schema version");
  j.at("graph_id").get_to(t.graph_id);
  j.at("L").get_to(t.L);
  t.T_star = detail::json_opt<int>(j, "T_star");
  j.at("succeeded").get_to(t.succeeded);
  j.at("T_max").get_to(t.T_max);
  j.at("T_last").get_to(t.T_last);
  j.at("runs").get_to(t.runs);
  j.at("stop_reason").get_to(t.stop_reason);
  t.verification = parse_verification(j.at("verification").get<std::string>());
  t.m_G = detail::json_opt<int>(j, "m_G");
  t.m_star = detail::json_opt<int>(j, "m_star");
  j.at("shots_cumulative").get_to(t.shots_cumulative);
  j.at("discarded_weight").get_to(t.discarded_weight);
  j.at("wall_time").get_to(t.wall_time);
}

/// Exact ratios against m_G when it is known; otherwise against the best
/// energy found by any run in the list, labelled as a lower bound.
inline void annotate_ratios(std::vector<RunRecord>& runs, std::optional<int> m_G) {
  if (runs.empty()) return;
  std::string kind = "exact";
  int reference = 0;
  if (m_G) {
    reference = *m_G;
  } else {
    kind = "lower_bound";
    reference = runs.front().m_star;
    for (const auto& r : runs) reference = std::min(reference, r.m_star);
  }
  for (auto& r : runs) {
    if (3 * r.L - 2 * reference <= 0) continue;
    r.r = compute_ratio(r.m_star, reference, r.L);
    r.ratio_kind = kind;
  }
}

/// Values of T visited by the search: 1..T_max restricted to integral nT.
inline std::vector<int> t_schedule(double n, int T_max) {
  std::vector<int> out;
  for (int T = 1; T <= T_max; ++T) {
    if (is_integral_step_count(n, T)) out.push_back(T);
  }
  return out;
}

struct SearchOptions {
  int T_max = 200;
  /// Stop after this many consecutive runs without improving m_star (0 = off).
  int stall_budget = 0;
  bool stop_on_optimum = true;
  /// Explicit T values; empty means t_schedule(n, T_max).
  std::vector<int> schedule;
};

struct SearchResult {
  std::vector<RunRecord> runs;
  TStarRecord t_star;
};

/// Runs FAA circuits for one graph. Holds the per-graph caches (energy table
/// for the statevector backend) so that a T-search does not rebuild them.
class FaaRunner {
 public:
  FaaRunner(const Graph& g, std::string graph_id, FaaParams params, Optimum optimum = {})
      : g_(g), graph_id_(std::move(graph_id)), params_(params), optimum_(std::move(optimum)) {
    if (params_.shots < 1) throw std::invalid_argument("shots must be >= 1");
    if (params_.backend == Backend::mps && params_.bond_dim < 1) throw std::invalid_argument("bond dimension must be >= 1");
    if (params_.backend == Backend::statevector) StateVector::check_size(g_.num_vertices(), kDefaultStateVectorCap);
  }

  const Optimum& optimum() const noexcept { return optimum_; }
  const FaaParams& params() const noexcept { return params_; }
  const std::string& graph_id() const noexcept { return graph_id_; }

  /// Per-(graph, T) stream, independent of execution order.
  std::uint64_t seed_for(int T) const { return derive_seed(params_.seed, hash_string(graph_id_), T); }

  RunRecord run(int T) { return run_plan(build_layer_plan(FaaParams{params_.n, T}), T); }

  /// Executes an explicit plan; `T` labels the record and selects the seed.
  RunRecord run_plan(const LayerPlan& plan, int T) {
    const auto t0 = std::chrono::steady_clock::now();
    RunRecord rec;
    rec.graph_id = graph_id_;
    rec.L = g_.num_vertices();
    rec.T = T;
    rec.n = params_.n;
    rec.M = plan.M;
    rec.dt = plan.dt;
    rec.shots_used = params_.shots;
    rec.backend = to_string(params_.backend);
    rec.seed = seed_for(T);
    rec.m_G = optimum_.m_G;
    Rng rng(rec.seed);

    int best = std::numeric_limits<int>::max();
    auto consider = [&](int e, const auto& make_bits) {
      if (e < best) {
        best = e;
        rec.best_assignment = make_bits();
      }
      if (optimum_.m_G && e == *optimum_.m_G) ++rec.optimal_hits;
    };

    if (params_.backend == Backend::statevector) {
      if (!energies_) energies_ = std::make_unique<EnergyTable>(g_);
      const auto st = sv_run_faa(*energies_, rec.L, plan);
      rec.max_chi = 0;
      for (auto idx : st.sample_indices(params_.shots, rng)) {
        consider((*energies_)[idx], [&] { return SpinAssignment::from_index(idx, rec.L).to_string(); });
      }
    } else {
      auto result = mps_run_faa(g_, plan, MpsOptions{params_.bond_dim, params_.reorder_vertices});
      rec.bond_dim = params_.bond_dim;
      rec.max_chi = result.report.max_chi;
      rec.discarded_weight = result.report.total_discarded_weight;
      rec.truncation = std::move(result.report.steps);
      for (const auto& a : result.state.sample(params_.shots, rng)) consider(energy(g_, a), [&] { return a.to_string(); });
    }
    rec.m_T = best;
    rec.m_star = best;
    if (optimum_.m_G && best < *optimum_.m_G) {
      throw std::logic_error("sampled energy " + std::to_string(best) + " below the reference minimum " +
                             std::to_string(*optimum_.m_G) + " for " + graph_id_);
    }
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
  }

  /// T-search: runs the schedule in order, maintaining m_star, until the
  /// optimum is hit, T_max is passed or the stall budget runs out.
  SearchResult search(const SearchOptions& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    SearchResult out;
    auto& ts = out.t_star;
    ts.graph_id = graph_id_;
    ts.L = g_.num_vertices();
    ts.T_max = opts.T_max;
    ts.verification = optimum_.mode;
    ts.m_G = optimum_.m_G;
    ts.stop_reason = "t_max";

    const auto schedule = opts.schedule.empty() ? t_schedule(params_.n, opts.T_max) : opts.schedule;
    int stalled = 0;
    std::optional<int> m_star;
    std::uint64_t shots = 0;
    for (int T : schedule) {
      if (T > opts.T_max) break;
      RunRecord rec = run(T);
      shots += static_cast<std::uint64_t>(rec.shots_used);
      rec.shots_cumulative = shots;
      const bool improved = !m_star || rec.m_T < *m_star;
      m_star = m_star ? std::min(*m_star, rec.m_T) : rec.m_T;
      rec.m_star = *m_star;
      ts.T_last = T;
      ts.discarded_weight = rec.discarded_weight;
      out.runs.push_back(std::move(rec));
      if (optimum_.m_G && *m_star == *optimum_.m_G && !ts.T_star) {
        ts.T_star = T;
        ts.succeeded = true;
        if (opts.stop_on_optimum) {
          ts.stop_reason = "optimum";
          break;
        }
      }
      stalled = improved ? 0 : stalled + 1;
      if (opts.stall_budget > 0 && stalled >= opts.stall_budget) {
        ts.stop_reason = "stall";
        break;
      }
    }
    if (out.runs.empty()) ts.stop_reason = "empty";
    ts.runs = static_cast<int>(out.runs.size());
    ts.m_star = m_star;
    ts.shots_cumulative = shots;
    annotate_ratios(out.runs, optimum_.m_G);
    ts.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
  }

 private:
  const Graph& g_;
  std::string graph_id_;
  FaaParams params_;
  Optimum optimum_;
  std::unique_ptr<EnergyTable> energies_;
};

/// Single run without a search loop.
inline RunRecord run_single_T(const Graph& g, const std::string& graph_id, const FaaParams& params,
                              const Optimum& optimum = {}) {
  FaaRunner runner(g, graph_id, params, optimum);
  auto rec = runner.run(params.T);
  std::vector<RunRecord> one{rec};
  annotate_ratios(one, optimum.m_G);
  return one.front();
}

inline SearchResult run_faa_search(const Graph& g, const std::string& graph_id, const FaaParams& params,
                                   const SearchOptions& opts, const Optimum& optimum = {}) {
  return FaaRunner(g, graph_id, params, optimum).search(opts);
}

inline void write_jsonl(std::ostream& os, const SearchResult& res) {
  for (const auto& r : res.runs) os << nlohmann::json(r).dump() << '\n';
  os << nlohmann::json(res.t_star).dump() << '\n';
}

}  // namespace faa
