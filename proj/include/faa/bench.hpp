#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "faa/driver.hpp"
#include "faa/edge_coloring.hpp"
#include "faa/exact.hpp"
#include "faa/graph.hpp"
#include "faa/rng.hpp"
#include "faa/schedule.hpp"

namespace faa {

// ---------------------------------------------------------------------------
// Resource estimates

inline constexpr double kDefaultKappa = 12.0;

struct ResourceOptions {
  double kappa = kDefaultKappa;  // gate_count_paper_style = kappa * L * T
  double p_gate = 0.0;           // two-qubit gate error probability
  double gate_time = 1e-3;       // seconds per two-qubit layer slot
  int parallel_width = 0;        // simultaneous two-qubit gates; 0 means L/2
};

struct ResourceEstimate {
  int L = 0;
  int T = 0;
  double n = 0;
  std::int64_t M = 0;
  std::int64_t num_edges = 0;
  int num_colors = 0;
  std::int64_t depth_paper = 0;   // 3M
  std::int64_t depth_actual = 0;  // num_colors * M
  std::int64_t two_qubit_gates = 0;
  double gate_count_paper_style = 0;
  double hardware_runtime_s = 0;
  double noiseless_fraction = 1;
};

/// (1 - p)^N evaluated in the log domain.
inline double noiseless_fraction(double p, double N) {
  if (p < 0 || p > 1) throw std::invalid_argument("gate error probability must lie in [0, 1]");
  if (N < 0) throw std::invalid_argument("gate count must be non-negative");
  if (p == 0 || N == 0) return 1.0;
  if (p == 1) return 0.0;
  return std::exp(N * std::log1p(-p));
}

/// Estimate from a color-class partition of the edges (class sizes only).
inline ResourceEstimate estimate_resources(int L, const std::vector<std::int64_t>& class_sizes, double n, int T,
                                           const ResourceOptions& opts = {}) {
  ResourceEstimate r;
  r.L = L;
  r.T = T;
  r.n = n;
  r.M = step_count(n, T);
  r.num_colors = static_cast<int>(class_sizes.size());
  for (auto c : class_sizes) r.num_edges += c;
  r.depth_paper = 3 * r.M;
  r.depth_actual = r.num_colors * r.M;
  r.two_qubit_gates = r.num_edges * r.M;
  r.gate_count_paper_style = opts.kappa * L * T;
  const std::int64_t width = opts.parallel_width > 0 ? opts.parallel_width : std::max(1, L / 2);
  std::int64_t slots = 0;
  for (auto c : class_sizes) slots += (c + width - 1) / width;
  r.hardware_runtime_s = static_cast<double>(slots * r.M) * opts.gate_time;
  r.noiseless_fraction = noiseless_fraction(opts.p_gate, static_cast<double>(r.two_qubit_gates));
  return r;
}

inline ResourceEstimate estimate_resources(const Graph& g, const FaaParams& params, const ResourceOptions& opts = {}) {
  const auto coloring = edge_color(g);
  std::vector<std::int64_t> sizes;
  for (const auto& cls : coloring.classes()) sizes.push_back(static_cast<std::int64_t>(cls.size()));
  return estimate_resources(g.num_vertices(), sizes, params.n, params.T, opts);
}

/// Graph-free estimate for a class-1 cubic graph: three perfect matchings.
inline ResourceEstimate estimate_resources_cubic(int L, double n, int T, const ResourceOptions& opts = {}) {
  if (L < 4 || L % 2 != 0) throw std::invalid_argument("cubic graphs need an even L >= 4");
  return estimate_resources(L, std::vector<std::int64_t>(3, L / 2), n, T, opts);
}

inline nlohmann::json to_json(const ResourceEstimate& r) {
  return {{"L", r.L},
          {"T", r.T},
          {"n", r.n},
          {"M", r.M},
          {"num_edges", r.num_edges},
          {"num_colors", r.num_colors},
          {"depth_paper", r.depth_paper},
          {"depth_actual", r.depth_actual},
          {"two_qubit_gates", r.two_qubit_gates},
          {"gate_count_paper_style", r.gate_count_paper_style},
          {"hardware_runtime_s", r.hardware_runtime_s},
          {"noiseless_fraction", r.noiseless_fraction}};
}

// ---------------------------------------------------------------------------
// Sweep specification

/// Bond dimension of a cell; nullopt is the exact statevector (D = inf).
using BondDim = std::optional<int>;

inline std::string bond_dim_text(const BondDim& d) { return d ? std::to_string(*d) : "inf"; }

inline BondDim parse_bond_dim(const std::string& s) {
  if (s == "inf" || s == "statevector" || s == "sv") return std::nullopt;
  std::size_t used = 0;
  const int d = std::stoi(s, &used);
  if (used != s.size() || d < 1) throw std::invalid_argument("bad bond dimension '" + s + "'");
  return d;
}

struct SweepSpec {
  std::string name = "sweep";
  std::vector<int> L{8};
  std::vector<BondDim> D{std::nullopt};
  std::vector<std::string> n{"4"};
  int instances = 10;
  int shots = 1000;
  int T_max = 200;
  int stall_budget = 0;
  std::uint64_t seed = 1;
  bool reorder_vertices = false;
  int oracle_max_vertices = 32;
  std::uint64_t oracle_max_nodes = 200'000'000;
  std::string graph_dir;  // optional directory of pre-generated graphs and sidecars
};

inline std::string graph_id_for(int L, std::uint64_t seed, int index) {
  std::ostringstream os;
  os << 'L' << L << "_s" << seed << "_i" << std::setw(4) << std::setfill('0') << index;
  return os.str();
}

/// The sweep's instance i at size L; shared by every (D, n) cell.
inline Graph sweep_instance(int L, std::uint64_t seed, int index) { return generate_3regular(L, derive_seed(seed, L, index)); }

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline std::string format_double(double x) {
  if (std::isnan(x)) return "";
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << x;
  return os.str();
}

inline double parse_double_or_nan(const std::string& s) {
  return s.empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(s);
}

inline std::string json_to_text(const nlohmann::json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_null()) return "inf";
  return j.dump();
}

/// Runs fn(i) for i in [0, count) on up to `jobs` threads. The first
/// exception thrown by any task is rethrown after all workers stop.
inline void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = count;
      }
    }
  };
  const unsigned threads = std::max(1U, std::min<unsigned>(jobs, static_cast<unsigned>(count)));
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);
}

inline void write_atomically(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + tmp.string());
    os << content;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace detail

inline SweepSpec sweep_spec_from_json(const nlohmann::json& j) {
  SweepSpec s;
  s.name = j.value("name", s.name);
  if (j.contains("L")) s.L = j.at("L").get<std::vector<int>>();
  if (j.contains("D")) {
    s.D.clear();
    for (const auto& d : j.at("D")) s.D.push_back(d.is_number_integer() ? BondDim(d.get<int>()) : parse_bond_dim(detail::json_to_text(d)));
  }
  if (j.contains("n")) {
    s.n.clear();
    for (const auto& v : j.at("n")) s.n.push_back(detail::json_to_text(v));
  }
  s.instances = j.value("instances", s.instances);
  s.shots = j.value("shots", s.shots);
  s.T_max = j.value("T_max", s.T_max);
  s.stall_budget = j.value("stall_budget", s.stall_budget);
  s.seed = j.value("seed", s.seed);
  s.reorder_vertices = j.value("reorder_vertices", s.reorder_vertices);
  s.oracle_max_vertices = j.value("oracle_max_vertices", s.oracle_max_vertices);
  s.oracle_max_nodes = j.value("oracle_max_nodes", s.oracle_max_nodes);
  s.graph_dir = j.value("graph_dir", s.graph_dir);

  if (s.L.empty() || s.D.empty() || s.n.empty()) throw std::invalid_argument("sweep needs non-empty L, D and n lists");
  for (int L : s.L) {
    if (L < 4 || L % 2 != 0) throw std::invalid_argument("sweep L values must be even and >= 4");
  }
  for (const auto& n : s.n) parse_step_inverse(n);
  if (s.instances < 0 || s.shots < 1 || s.T_max < 0) throw std::invalid_argument("invalid instances/shots/T_max");
  return s;
}

inline nlohmann::json to_json(const SweepSpec& s) {
  nlohmann::json d = nlohmann::json::array();
  for (const auto& x : s.D) d.push_back(x ? nlohmann::json(*x) : nlohmann::json("inf"));
  return {{"name", s.name},
          {"L", s.L},
          {"D", d},
          {"n", s.n},
          {"instances", s.instances},
          {"shots", s.shots},
          {"T_max", s.T_max},
          {"stall_budget", s.stall_budget},
          {"seed", s.seed},
          {"reorder_vertices", s.reorder_vertices},
          {"oracle_max_vertices", s.oracle_max_vertices},
          {"oracle_max_nodes", s.oracle_max_nodes},
          {"graph_dir", s.graph_dir}};
}

// ---------------------------------------------------------------------------
// Per-instance rows and per-cell aggregates

struct InstanceRow {
  std::string graph_id;
  int L = 0;
  BondDim D;
  std::string n;
  std::optional<int> T_star;
  bool succeeded = false;
  double wall_time = 0;
  double discarded_weight = 0;
  Verification verification = Verification::unverified;
  int T_max = 0;
  std::optional<int> m_G;
  std::optional<int> m_star;
  int runs = 0;

  friend bool operator==(const InstanceRow&, const InstanceRow&) = default;
};

inline const char* kInstanceCsvHeader =
    "graph_id,L,D,n,T_star,succeeded,wall_time,discarded_weight,verification,T_max,m_G,m_star,runs";

inline std::string to_csv_line(const InstanceRow& r) {
  auto opt = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); };
  std::ostringstream os;
  os << r.graph_id << ',' << r.L << ',' << bond_dim_text(r.D) << ',' << r.n << ',' << opt(r.T_star) << ','
     << (r.succeeded ? 1 : 0) << ',' << detail::format_double(r.wall_time) << ','
     << detail::format_double(r.discarded_weight) << ',' << to_string(r.verification) << ',' << r.T_max << ','
     << opt(r.m_G) << ',' << opt(r.m_star) << ',' << r.runs;
  return os.str();
}

inline void export_csv(std::ostream& os, const std::vector<InstanceRow>& rows) {
  os << kInstanceCsvHeader << '\n';
  for (const auto& r : rows) os << to_csv_line(r) << '\n';
}

inline void export_csv(const std::filesystem::path& path, const std::vector<InstanceRow>& rows) {
  std::ostringstream os;
  export_csv(os, rows);
  detail::write_atomically(path, os.str());
}

inline std::vector<InstanceRow> parse_instance_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kInstanceCsvHeader) throw std::runtime_error("unexpected instance CSV header");
  std::vector<InstanceRow> rows;
  auto opt = [](const std::string& s) { return s.empty() ? std::optional<int>() : std::optional<int>(std::stoi(s)); };
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto f = detail::split(line);
    if (f.size() != 13) throw std::runtime_error("malformed instance CSV row: " + line);
    InstanceRow r;
    r.graph_id = f[0];
    r.L = std::stoi(f[1]);
    r.D = parse_bond_dim(f[2]);
    r.n = f[3];
    r.T_star = opt(f[4]);
    r.succeeded = f[5] == "1";
    r.wall_time = std::stod(f[6]);
    r.discarded_weight = std::stod(f[7]);
    r.verification = parse_verification(f[8]);
    r.T_max = std::stoi(f[9]);
    r.m_G = opt(f[10]);
    r.m_star = opt(f[11]);
    r.runs = std::stoi(f[12]);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::vector<InstanceRow> load_instance_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return parse_instance_csv(is);
}

struct CellSummary {
  int L = 0;
  BondDim D;
  std::string n;
  int T_max = 0;
  int instances = 0;
  int verified = 0;
  int succeeded = 0;
  double success_fraction = 0;
  // Statistics over successful instances; NaN when there are none.
  double mean_T_star = std::numeric_limits<double>::quiet_NaN();
  double median_T_star = std::numeric_limits<double>::quiet_NaN();
  double var_T_star = std::numeric_limits<double>::quiet_NaN();
  /// Mean with every failed verified instance counted at T_max.
  double censored_mean_T_star = std::numeric_limits<double>::quiet_NaN();
  double mean_depth = std::numeric_limits<double>::quiet_NaN();           // 3 n T_star
  double censored_mean_depth = std::numeric_limits<double>::quiet_NaN();  // 3 n censored T_star
  std::map<int, int> histogram;
  std::string verification;  // oracle, sidecar, mixed or unverified
  bool flagged = false;      // success < 1, unverified instances or no instances
};

/// Aggregate of one (L, D, n) cell. Unverified instances are counted but kept
/// out of every T_star statistic.
inline CellSummary summarize(const std::vector<InstanceRow>& rows) {
  CellSummary c;
  if (rows.empty()) {
    c.flagged = true;
    c.verification = "unverified";
    return c;
  }
  c.L = rows.front().L;
  c.D = rows.front().D;
  c.n = rows.front().n;
  c.T_max = rows.front().T_max;
  c.instances = static_cast<int>(rows.size());
  std::vector<double> ts;
  std::vector<double> censored;
  std::map<Verification, int> modes;
  for (const auto& r : rows) {
    ++modes[r.verification];
    if (r.verification == Verification::unverified) continue;
    ++c.verified;
    if (r.succeeded && r.T_star) {
      ++c.succeeded;
      ts.push_back(*r.T_star);
      ++c.histogram[*r.T_star];
      censored.push_back(*r.T_star);
    } else {
      censored.push_back(r.T_max);
    }
  }
  c.success_fraction = c.verified > 0 ? static_cast<double>(c.succeeded) / c.verified : 0.0;
  auto mean = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  const double n_value = parse_step_inverse(c.n);
  if (!ts.empty()) {
    c.mean_T_star = mean(ts);
    auto sorted = ts;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t k = sorted.size();
    c.median_T_star = k % 2 ? sorted[k / 2] : 0.5 * (sorted[k / 2 - 1] + sorted[k / 2]);
    double ss = 0;
    for (double x : ts) ss += (x - c.mean_T_star) * (x - c.mean_T_star);
    c.var_T_star = ss / static_cast<double>(k);
    c.mean_depth = 3.0 * n_value * c.mean_T_star;
  }
  if (!censored.empty()) {
    c.censored_mean_T_star = mean(censored);
    c.censored_mean_depth = 3.0 * n_value * c.censored_mean_T_star;
  }
  if (modes.size() == 1) {
    c.verification = to_string(modes.begin()->first);
  } else {
    c.verification = modes.count(Verification::unverified) ? "mixed" : "oracle+sidecar";
  }
  c.flagged = c.verified < c.instances || c.succeeded < c.verified || c.verified == 0;
  return c;
}

inline const char* kCellCsvHeader =
    "L,D,n,T_max,instances,verified,succeeded,success_fraction,mean_T_star,median_T_star,var_T_star,"
    "censored_mean_T_star,mean_depth,censored_mean_depth,verification,flagged";

inline std::string to_csv_line(const CellSummary& c) {
  using detail::format_double;
  std::ostringstream os;
  os << c.L << ',' << bond_dim_text(c.D) << ',' << c.n << ',' << c.T_max << ',' << c.instances << ',' << c.verified
     << ',' << c.succeeded << ',' << format_double(c.success_fraction) << ',' << format_double(c.mean_T_star) << ','
     << format_double(c.median_T_star) << ',' << format_double(c.var_T_star) << ','
     << format_double(c.censored_mean_T_star) << ',' << format_double(c.mean_depth) << ','
     << format_double(c.censored_mean_depth) << ',' << c.verification << ',' << (c.flagged ? 1 : 0);
  return os.str();
}

inline void export_cells_csv(std::ostream& os, const std::vector<CellSummary>& cells) {
  os << kCellCsvHeader << '\n';
  for (const auto& c : cells) os << to_csv_line(c) << '\n';
}

inline std::vector<CellSummary> parse_cells_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kCellCsvHeader) throw std::runtime_error("unexpected cell CSV header");
  std::vector<CellSummary> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto f = detail::split(line);
    if (f.size() != 16) throw std::runtime_error("malformed cell CSV row: " + line);
    CellSummary c;
    c.L = std::stoi(f[0]);
    c.D = parse_bond_dim(f[1]);
    c.n = f[2];
    c.T_max = std::stoi(f[3]);
    c.instances = std::stoi(f[4]);
    c.verified = std::stoi(f[5]);
    c.succeeded = std::stoi(f[6]);
    c.success_fraction = std::stod(f[7]);
    c.mean_T_star = detail::parse_double_or_nan(f[8]);
    c.median_T_star = detail::parse_double_or_nan(f[9]);
    c.var_T_star = detail::parse_double_or_nan(f[10]);
    c.censored_mean_T_star = detail::parse_double_or_nan(f[11]);
    c.mean_depth = detail::parse_double_or_nan(f[12]);
    c.censored_mean_depth = detail::parse_double_or_nan(f[13]);
    c.verification = f[14];
    c.flagged = f[15] == "1";
    out.push_back(std::move(c));
  }
  return out;
}

inline void export_histogram_csv(std::ostream& os, const std::vector<CellSummary>& cells) {
  os << "L,D,n,T_star,count\n";
  for (const auto& c : cells) {
    for (const auto& [t, k] : c.histogram) os << c.L << ',' << bond_dim_text(c.D) << ',' << c.n << ',' << t << ',' << k << '\n';
  }
}

/// Solved-count matrix: rows are L bands [lo, hi], columns are bond dimensions,
/// entries "solved/instances" summed over the cells that fall in the band.
struct SolvedMatrix {
  std::vector<std::pair<int, int>> bands;
  std::vector<BondDim> columns;
  std::vector<std::vector<std::pair<int, int>>> counts;  // [band][column] = (solved, instances)
};

inline SolvedMatrix solved_matrix(const std::vector<CellSummary>& cells, std::vector<std::pair<int, int>> bands = {}) {
  SolvedMatrix t;
  if (bands.empty()) {
    std::vector<int> Ls;
    for (const auto& c : cells) Ls.push_back(c.L);
    std::sort(Ls.begin(), Ls.end());
    Ls.erase(std::unique(Ls.begin(), Ls.end()), Ls.end());
    for (int L : Ls) bands.emplace_back(L, L);
  }
  t.bands = std::move(bands);
  for (const auto& c : cells) {
    if (std::find(t.columns.begin(), t.columns.end(), c.D) == t.columns.end()) t.columns.push_back(c.D);
  }
  // Finite D ascending, statevector last.
  std::sort(t.columns.begin(), t.columns.end(), [](const BondDim& a, const BondDim& b) {
    if (a && b) return *a < *b;
    return a.has_value() && !b.has_value();
  });
  t.counts.assign(t.bands.size(), std::vector<std::pair<int, int>>(t.columns.size(), {0, 0}));
  for (const auto& c : cells) {
    const auto col = static_cast<std::size_t>(std::find(t.columns.begin(), t.columns.end(), c.D) - t.columns.begin());
    for (std::size_t b = 0; b < t.bands.size(); ++b) {
      if (c.L >= t.bands[b].first && c.L <= t.bands[b].second) {
        t.counts[b][col].first += c.succeeded;
        t.counts[b][col].second += c.instances;
      }
    }
  }
  return t;
}

inline void export_solved_matrix_csv(std::ostream& os, const SolvedMatrix& t) {
  os << "L_band";
  for (const auto& d : t.columns) os << ",D=" << bond_dim_text(d);
  os << '\n';
  for (std::size_t b = 0; b < t.bands.size(); ++b) {
    os << t.bands[b].first;
    if (t.bands[b].second != t.bands[b].first) os << '-' << t.bands[b].second;
    for (const auto& [solved, total] : t.counts[b]) os << ',' << solved << '/' << total;
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepOptions {
  unsigned jobs = 1;
  std::filesystem::path out_dir;  // empty: keep everything in memory
  bool resume = false;
  bool write_runs = true;          // per-cell JSON-lines of every RunRecord
  std::function<void(const std::string&)> progress;
};

struct SweepResult {
  std::vector<InstanceRow> rows;
  std::vector<CellSummary> cells;
  int cells_computed = 0;
  int cells_resumed = 0;
};

inline std::string cell_key(int L, const BondDim& D, const std::string& n) {
  std::string nk = n;
  std::replace(nk.begin(), nk.end(), '/', '_');
  return "L" + std::to_string(L) + "_D" + bond_dim_text(D) + "_n" + nk;
}

struct SweepInstance {
  std::string graph_id;
  Graph graph;
  Optimum optimum;
};

/// Instances of size L with their reference minima, computed in parallel.
inline std::vector<SweepInstance> prepare_instances(const SweepSpec& spec, int L, unsigned jobs) {
  std::vector<SweepInstance> out(static_cast<std::size_t>(spec.instances));
  ExactBudget budget;
  budget.max_enumeration_vertices = spec.oracle_max_vertices;
  budget.max_search_nodes = spec.oracle_max_nodes;
  detail::parallel_for(out.size(), jobs, [&](std::size_t i) {
    auto& inst = out[i];
    inst.graph_id = graph_id_for(L, spec.seed, static_cast<int>(i));
    std::optional<std::filesystem::path> path;
    if (!spec.graph_dir.empty()) {
      auto p = std::filesystem::path(spec.graph_dir) / (inst.graph_id + ".graph");
      if (std::filesystem::exists(p)) path = p;
    }
    inst.graph = path ? load_graph(*path) : sweep_instance(L, spec.seed, static_cast<int>(i));
    if (path) {
      if (auto ref = find_reference(*path, inst.graph)) {
        inst.optimum = {ref->min_energy, Verification::sidecar, ref->witness};
        return;
      }
    }
    if (L <= spec.oracle_max_vertices) {
      inst.optimum = resolve_optimum(inst.graph, std::nullopt, budget);
    }
  });
  return out;
}

inline FaaParams cell_params(const SweepSpec& spec, const BondDim& D, const std::string& n) {
  FaaParams p;
  p.n = parse_step_inverse(n);
  p.shots = spec.shots;
  p.seed = spec.seed;
  p.backend = D ? Backend::mps : Backend::statevector;
  p.bond_dim = D.value_or(0);
  p.reorder_vertices = spec.reorder_vertices;
  return p;
}

/// T-search over every instance of every (L, D, n) cell. Results are
/// independent of `jobs` and of the order cells complete in.
inline SweepResult sweep_tstar(const SweepSpec& spec, const SweepOptions& opts = {}) {
  namespace fs = std::filesystem;
  SweepResult result;
  const bool to_disk = !opts.out_dir.empty();
  const fs::path cell_dir = opts.out_dir / "cells";
  if (to_disk) fs::create_directories(cell_dir);
  auto note = [&](const std::string& msg) {
    if (opts.progress) opts.progress(msg);
  };

  for (int L : spec.L) {
    std::vector<SweepInstance> instances;
    bool prepared = false;
    for (const auto& D : spec.D) {
      for (const auto& n : spec.n) {
        const std::string key = cell_key(L, D, n);
        const fs::path done = cell_dir / (key + ".done");
        const fs::path rows_path = cell_dir / (key + ".csv");
        if (to_disk && opts.resume && fs::exists(done) && fs::exists(rows_path)) {
          auto rows = load_instance_csv(rows_path);
          result.cells.push_back(summarize(rows));
          result.rows.insert(result.rows.end(), rows.begin(), rows.end());
          ++result.cells_resumed;
          note("resumed " + key);
          continue;
        }
        if (!prepared) {
          instances = prepare_instances(spec, L, opts.jobs);
          prepared = true;
        }
        const FaaParams params = cell_params(spec, D, n);
        SearchOptions search;
        search.T_max = spec.T_max;
        search.stall_budget = spec.stall_budget;
        std::vector<InstanceRow> rows(instances.size());
        std::vector<std::string> runs(instances.size());
        detail::parallel_for(instances.size(), opts.jobs, [&](std::size_t i) {
          const auto& inst = instances[i];
          auto res = run_faa_search(inst.graph, inst.graph_id, params, search, inst.optimum);
          auto& r = rows[i];
          r.graph_id = inst.graph_id;
          r.L = L;
          r.D = D;
          r.n = n;
          r.T_star = res.t_star.T_star;
          r.succeeded = res.t_star.succeeded;
          r.wall_time = res.t_star.wall_time;
          r.discarded_weight = res.t_star.discarded_weight;
          r.verification = res.t_star.verification;
          r.T_max = spec.T_max;
          r.m_G = res.t_star.m_G;
          r.m_star = res.t_star.m_star;
          r.runs = res.t_star.runs;
          if (to_disk && opts.write_runs) {
            std::ostringstream os;
            write_jsonl(os, res);
            runs[i] = os.str();
          }
        });
        if (to_disk) {
          if (opts.write_runs) {
            std::string all;
            for (const auto& s : runs) all += s;
            detail::write_atomically(cell_dir / (key + ".jsonl"), all);
          }
          export_csv(rows_path, rows);
          detail::write_atomically(done, "");
        }
        result.cells.push_back(summarize(rows));
        result.rows.insert(result.rows.end(), rows.begin(), rows.end());
        ++result.cells_computed;
        note("finished " + key);
      }
    }
  }

  if (to_disk) {
    export_csv(opts.out_dir / "instances.csv", result.rows);
    std::ostringstream cells, hist, table;
    export_cells_csv(cells, result.cells);
    export_histogram_csv(hist, result.cells);
    export_solved_matrix_csv(table, solved_matrix(result.cells));
    detail::write_atomically(opts.out_dir / "cells.csv", cells.str());
    detail::write_atomically(opts.out_dir / "histograms.csv", hist.str());
    detail::write_atomically(opts.out_dir / "solved_matrix.csv", table.str());
  }
  return result;
}

struct DepthRow {
  std::string n;
  double dt = 0;
  double success_fraction = 0;
  double mean_T_star = 0;
  double mean_depth = 0;
  double censored_mean_depth = 0;
  bool flagged = false;
};

/// Depth against step size for a statevector sweep over several n values.
inline std::vector<DepthRow> depth_table(const std::vector<CellSummary>& cells) {
  std::vector<DepthRow> out;
  for (const auto& c : cells) {
    const double n = parse_step_inverse(c.n);
    out.push_back({c.n, 1.0 / n, c.success_fraction, c.mean_T_star, c.mean_depth, c.censored_mean_depth, c.flagged});
  }
  return out;
}

/// sweep_tstar restricted to the statevector backend; the spec's D list is ignored.
inline std::vector<DepthRow> sweep_dt(SweepSpec spec, const SweepOptions& opts = {}) {
  for (int L : spec.L) {
    if (L > 22) throw std::invalid_argument("step-size sweeps are limited to L <= 22");
  }
  spec.D = {std::nullopt};
  return depth_table(sweep_tstar(spec, opts).cells);
}

/// Fraction of shots landing on an optimal assignment for one fixed plan.
inline std::vector<double> fixed_plan_success(const std::vector<SweepInstance>& instances, const LayerPlan& plan,
                                              int T_label, const FaaParams& params, unsigned jobs = 1) {
  std::vector<double> out(instances.size(), 0.0);
  detail::parallel_for(instances.size(), jobs, [&](std::size_t i) {
    const auto& inst = instances[i];
    if (!inst.optimum.m_G) throw std::invalid_argument("fixed-plan success needs a known optimum for " + inst.graph_id);
    FaaRunner runner(inst.graph, inst.graph_id, params, inst.optimum);
    const auto rec = runner.run_plan(plan, T_label);
    out[i] = static_cast<double>(rec.optimal_hits) / rec.shots_used;
  });
  return out;
}

}  // namespace faa
