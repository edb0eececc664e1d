// faa_cli: graph generation, exact solving, FAA runs and sweeps.
//
// Exit codes: 0 success, 1 completed without a verified optimum, 2 usage error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "faa/faa.hpp"

extern "C" void openblas_set_num_threads(int);

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUnverified = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path default_output_dir() {
  if (const char* env = std::getenv("FAA_OUTPUT_DIR"); env != nullptr && *env != '\0') return env;
  return ".";
}

faa::Graph load_or_usage(const fs::path& path) {
  if (!fs::exists(path)) throw UsageError("graph file not found: " + path.string());
  return faa::load_graph(path);
}

// ---------------------------------------------------------------------------

struct GenArgs {
  int L = 0;
  int count = 1;
  std::uint64_t seed = 1;
  std::string out_dir;
};

int cmd_gen(const GenArgs& a) {
  if (a.L < 4 || a.L % 2 != 0) throw UsageError("L must be even and at least 4");
  if (a.count < 1) throw UsageError("count must be at least 1");
  const fs::path dir = a.out_dir.empty() ? default_output_dir() : fs::path(a.out_dir);
  fs::create_directories(dir);
  json manifest = {{"L", a.L}, {"count", a.count}, {"seed", a.seed}, {"graphs", json::array()}};
  for (int i = 0; i < a.count; ++i) {
    const auto g = faa::sweep_instance(a.L, a.seed, i);
    const auto id = faa::graph_id_for(a.L, a.seed, i);
    const auto file = id + ".graph";
    faa::save_graph(dir / file, g);
    manifest["graphs"].push_back({{"graph_id", id}, {"file", file}, {"index", i}, {"edges", g.num_edges()}});
    std::cout << (dir / file).string() << '\n';
  }
  std::ofstream(dir / ("manifest_L" + std::to_string(a.L) + "_s" + std::to_string(a.seed) + ".json"))
      << manifest.dump(2) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SolveArgs {
  std::string graph;
  std::string method = "auto";
  int max_vertices = 32;
  std::uint64_t max_nodes = 200'000'000;
  double max_seconds = 0;
  unsigned jobs = 1;
  bool write_sidecar = true;
};

int cmd_solve(const SolveArgs& a) {
  const fs::path path = a.graph;
  const auto g = load_or_usage(path);
  if (auto ref = faa::find_reference(path, g)) {
    std::cout << "verified against sidecar " << faa::sidecar_path(path).string() << ": witness energy matches\n"
              << "m_G " << ref->min_energy << "\nmax_cut " << (g.num_edges() - ref->min_energy) / 2 << "\nwitness "
              << ref->witness.to_string() << '\n';
    return kExitOk;
  }
  faa::ExactBudget budget;
  if (a.method == "enumeration") {
    budget.method = faa::ExactMethod::enumeration;
  } else if (a.method == "bnb" || a.method == "branch_and_bound") {
    budget.method = faa::ExactMethod::branch_and_bound;
  } else if (a.method != "auto") {
    throw UsageError("unknown method '" + a.method + "'");
  }
  budget.max_enumeration_vertices = a.max_vertices;
  budget.max_search_nodes = a.max_nodes;
  budget.max_seconds = a.max_seconds;
  budget.workers = a.jobs;
  const auto res = faa::max_cut_exact(g, budget);
  std::cout << "status " << faa::to_string(res.status) << "\nmethod " << faa::to_string(res.method) << "\nnodes "
            << res.nodes << '\n';
  if (!res.verified()) {
    if (!res.witness.size()) {
      std::cout << "no assignment reached within the budget\n";
    } else {
      std::cout << "best_found " << res.min_energy << " (not proven optimal)\nwitness " << res.witness.to_string()
                << '\n';
    }
    std::cerr << "exact solve exceeded its budget; raise --max-vertices/--max-nodes or supply a sidecar\n";
    return kExitUnverified;
  }
  std::cout << "m_G " << res.min_energy << "\nmax_cut " << res.max_cut << "\nwitness " << res.witness.to_string()
            << '\n';
  if (a.write_sidecar) {
    faa::save_reference(faa::sidecar_path(path), {res.min_energy, res.witness});
    std::cout << "wrote " << faa::sidecar_path(path).string() << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct RunArgs {
  std::string graph;
  std::string backend = "statevector";
  int bond_dim = 2;
  std::string n = "4";
  std::optional<int> T;
  int T_max = 200;
  int stall = 0;
  int shots = 1000;
  std::uint64_t seed = 0;
  bool reorder = false;
  bool keep_going = false;
  int oracle_max_vertices = 32;
  std::string out;
};

int cmd_run(const RunArgs& a) {
  const fs::path path = a.graph;
  const auto g = load_or_usage(path);
  faa::FaaParams p;
  try {
    p.n = faa::parse_step_inverse(a.n);
    p.backend = faa::parse_backend(a.backend);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  p.shots = a.shots;
  p.seed = a.seed;
  p.bond_dim = a.bond_dim;
  p.reorder_vertices = a.reorder;
  if (a.shots < 1) throw UsageError("shots must be at least 1");
  if (p.backend == faa::Backend::mps && a.bond_dim < 1) throw UsageError("bond dimension must be at least 1");
  if (a.T) {
    p.T = *a.T;
    try {
      faa::step_count(p.n, p.T);
    } catch (const faa::ScheduleError& e) {
      throw UsageError(e.what());
    }
  } else if (faa::t_schedule(p.n, a.T_max).empty() && a.T_max > 0) {
    throw UsageError("no T in 1.." + std::to_string(a.T_max) + " makes n*T an integer for n=" + a.n);
  }
  if (p.backend == faa::Backend::statevector && g.num_vertices() > faa::kDefaultStateVectorCap) {
    throw UsageError("statevector backend is capped at L=" + std::to_string(faa::kDefaultStateVectorCap) +
                     "; use --backend mps");
  }

  faa::Optimum opt;
  if (auto ref = faa::find_reference(path, g)) {
    opt = {ref->min_energy, faa::Verification::sidecar, ref->witness};
  } else if (g.num_vertices() <= a.oracle_max_vertices) {
    faa::ExactBudget budget;
    budget.max_enumeration_vertices = a.oracle_max_vertices;
    opt = faa::resolve_optimum(g, std::nullopt, budget);
  }
  const std::string id = path.stem().string();

  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out);
    if (!file) throw std::runtime_error("cannot open " + a.out);
  }
  std::ostream& os = a.out.empty() ? std::cout : file;

  if (a.T) {
    const auto rec = faa::run_single_T(g, id, p, opt);
    os << json(rec).dump() << '\n';
    return opt.m_G ? kExitOk : kExitUnverified;
  }
  faa::SearchOptions so;
  so.T_max = a.T_max;
  so.stall_budget = a.stall;
  so.stop_on_optimum = !a.keep_going;
  const auto res = faa::run_faa_search(g, id, p, so, opt);
  faa::write_jsonl(os, res);
  if (!opt.m_G) std::cerr << "no reference optimum for " << id << "; ratios are lower bounds\n";
  return opt.m_G ? kExitOk : kExitUnverified;
}

// ---------------------------------------------------------------------------

struct SweepArgs {
  std::string config;
  std::string out_dir;
  unsigned jobs = 1;
  bool resume = false;
  std::optional<std::uint64_t> seed;
  std::optional<int> instances;
  std::optional<int> T_max;
  bool quiet = false;
};

int cmd_sweep(const SweepArgs& a) {
  std::ifstream is(a.config);
  if (!is) throw UsageError("cannot open config " + a.config);
  faa::SweepSpec spec;
  try {
    spec = faa::sweep_spec_from_json(json::parse(is));
  } catch (const std::exception& e) {
    throw UsageError(std::string("invalid sweep config: ") + e.what());
  }
  if (a.seed) spec.seed = *a.seed;
  if (a.instances) spec.instances = *a.instances;
  if (a.T_max) spec.T_max = *a.T_max;

  faa::SweepOptions opts;
  opts.jobs = a.jobs;
  opts.resume = a.resume;
  opts.out_dir = a.out_dir.empty() ? default_output_dir() / spec.name : fs::path(a.out_dir);
  if (!a.quiet) opts.progress = [](const std::string& msg) { std::cerr << msg << std::endl; };
  fs::create_directories(opts.out_dir);
  std::ofstream(opts.out_dir / "spec.json") << faa::to_json(spec).dump(2) << '\n';

  const auto res = faa::sweep_tstar(spec, opts);
  faa::export_cells_csv(std::cout, res.cells);
  bool unverified = false;
  for (const auto& c : res.cells) unverified |= c.verified < c.instances;
  return unverified ? kExitUnverified : kExitOk;
}

// ---------------------------------------------------------------------------

struct EstimateArgs {
  std::string graph;
  int L = 1000;
  int T = 100;
  std::string n = "4";
  faa::ResourceOptions opts;
};

int cmd_estimate(const EstimateArgs& a) {
  double n = 0;
  try {
    n = faa::parse_step_inverse(a.n);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (!faa::is_integral_step_count(n, a.T)) throw UsageError("n*T must be a positive integer");
  faa::ResourceEstimate r;
  if (!a.graph.empty()) {
    faa::FaaParams p;
    p.n = n;
    p.T = a.T;
    r = faa::estimate_resources(load_or_usage(a.graph), p, a.opts);
  } else {
    if (a.L < 4 || a.L % 2 != 0) throw UsageError("L must be even and at least 4");
    r = faa::estimate_resources_cubic(a.L, n, a.T, a.opts);
  }
  std::cout << faa::to_json(r).dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  openblas_set_num_threads(1);

  CLI::App app{"Floquet adiabatic algorithm for Max-Cut on 3-regular graphs"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "generate random 3-regular graphs");
  g->add_option("-L,--vertices", gen.L, "number of vertices (even)")->required();
  g->add_option("-c,--count", gen.count, "number of graphs");
  g->add_option("-s,--seed", gen.seed, "master seed");
  g->add_option("-o,--out-dir", gen.out_dir, "output directory (default $FAA_OUTPUT_DIR or .)");

  SolveArgs solve;
  auto* s = app.add_subcommand("solve", "exact Max-Cut; writes a .opt sidecar");
  s->add_option("graph", solve.graph, "graph file")->required();
  s->add_option("--method", solve.method, "auto, enumeration or bnb");
  s->add_option("--max-vertices", solve.max_vertices, "largest L solved by enumeration");
  s->add_option("--max-nodes", solve.max_nodes, "branch-and-bound node budget");
  s->add_option("--max-seconds", solve.max_seconds, "wall-clock budget (0 = none)");
  s->add_option("-j,--jobs", solve.jobs, "worker threads");
  s->add_flag("!--no-sidecar", solve.write_sidecar, "do not write the sidecar");

  RunArgs run;
  auto* r = app.add_subcommand("run", "run FAA on one graph; JSON-lines records");
  r->add_option("graph", run.graph, "graph file")->required();
  r->add_option("-b,--backend", run.backend, "statevector or mps");
  r->add_option("-D,--bond-dim", run.bond_dim, "MPS bond dimension");
  r->add_option("-n,--steps-per-time", run.n, "n = 1/dt; decimals or a fraction such as 2/3");
  r->add_option("-T,--time", run.T, "single adiabatic time (default: T-search)");
  r->add_option("--t-max", run.T_max, "largest T of the search");
  r->add_option("--stall", run.stall, "stop after this many runs without improvement (0 = off)");
  r->add_option("--shots", run.shots, "shots per circuit");
  r->add_option("-s,--seed", run.seed, "master seed");
  r->add_flag("--reorder", run.reorder, "bandwidth-reducing qubit layout (mps)");
  r->add_flag("--keep-going", run.keep_going, "continue to T_max after the optimum is found");
  r->add_option("--oracle-max-vertices", run.oracle_max_vertices, "internal oracle size limit");
  r->add_option("-o,--out", run.out, "output file (default stdout)");

  SweepArgs sweep;
  auto* w = app.add_subcommand("sweep", "instance sweep from a JSON config; CSV outputs");
  w->add_option("config", sweep.config, "sweep config JSON")->required();
  w->add_option("-o,--out-dir", sweep.out_dir, "output directory (default $FAA_OUTPUT_DIR/<name>)");
  w->add_option("-j,--jobs", sweep.jobs, "worker threads");
  w->add_flag("--resume", sweep.resume, "skip cells with a done marker");
  w->add_option("-s,--seed", sweep.seed, "override the master seed");
  w->add_option("--instances", sweep.instances, "override instances per cell");
  w->add_option("--t-max", sweep.T_max, "override T_max");
  w->add_flag("-q,--quiet", sweep.quiet, "no progress lines");

  EstimateArgs est;
  auto* e = app.add_subcommand("estimate", "circuit depth, gate count, runtime and noise estimates");
  e->add_option("--graph", est.graph, "graph file (colors its edges)");
  e->add_option("-L,--vertices", est.L, "number of vertices when no graph is given");
  e->add_option("-T,--time", est.T, "adiabatic time");
  e->add_option("-n,--steps-per-time", est.n, "n = 1/dt");
  e->add_option("--kappa", est.opts.kappa, "gate count factor in kappa*L*T");
  e->add_option("-p,--gate-error", est.opts.p_gate, "two-qubit gate error probability");
  e->add_option("--gate-time", est.opts.gate_time, "seconds per two-qubit layer");
  e->add_option("--width", est.opts.parallel_width, "parallel two-qubit gates (0 = L/2)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return kExitUsage;
  }

  try {
    if (*g) return cmd_gen(gen);
    if (*s) return cmd_solve(solve);
    if (*r) return cmd_run(run);
    if (*w) return cmd_sweep(sweep);
    if (*e) return cmd_estimate(est);
  } catch (const UsageError& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const faa::GraphError& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 3;
  }
  return kExitUsage;
}
