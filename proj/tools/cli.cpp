// Copyright 2026 The qsimkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.hpp"

#include "qsimkit/approx.hpp"
#include "qsimkit/distsim.hpp"
#include "qsimkit/exec.hpp"
#include "qsimkit/frontend.hpp"
#include "qsimkit/fusion.hpp"
#include "qsimkit/pathfinder.hpp"
#include "qsimkit/statevec.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

namespace qsimkit::cli {

namespace {

using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kVerifyMaxQubits = 14;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

json complex_json(cplx v) { return json::array({v.real(), v.imag()}); }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct VerifyFailure {};

struct Options {
  std::uint64_t seed = 0;
  std::string report;
  int workers = 1;
  double max_memory = 4.0 * (1ull << 30);

  // Circuit source.
  std::string circuit;
  int n = 0;
  int depth = -1;
  int p = 2;
  double edge_prob = 0.5;
  // Network source.
  std::string network;
  std::string target;
  bool lightcone = false;
  std::vector<std::string> project;

  // simulate
  std::string engine = "sv";
  bool verify = false;
  double verify_tol = 1e-8;
  bool dry_run = false;
  bool fuse = false;
  int max_fused = 4;
  int max_diagonal = 6;
  int global_qubits = -1;
  long max_bond = 0;
  double cutoff = 0;
  std::string split = "reduced";
  std::vector<std::string> amplitudes;
  std::uint64_t shots = 0;
  std::string dump_state;
  std::string save_mps;

  // pathfind
  int samples = 16;
  double memory_budget = kInf;
  double max_overhead = kInf;
  std::string compare;
  std::string save_path;

  // contract
  std::string path;
  std::string slices;
  bool accumulate = false;
  std::string result;
  double cache_bytes = 0;
  int repeat = 1;
  double repetitions = 1;
  bool autotune = false;

  // bench
  std::string suite = "all";
  std::string engines = "sv,mps,tn";
  std::string csv;

  // convert
  std::string output;
};

int env_workers() {
  const char* v = std::getenv(kWorkersEnv);
  if (v == nullptr || *v == '\0') return 1;
  try {
    const int w = std::stoi(v);
    if (w >= 1) return w;
  } catch (const std::exception&) {
  }
  throw std::invalid_argument(std::string(kWorkersEnv) + " must be a positive integer");
}

// ---- sources ------------------------------------------------------------

Circuit make_circuit(const Options& o) {
  if (o.circuit.empty()) throw std::invalid_argument("--circuit is required");
  const bool generated = o.circuit == "qft" || o.circuit == "qv" || o.circuit == "qaoa" || o.circuit == "ghz";
  if (generated && o.n < 1) throw std::invalid_argument("--n is required for generated circuits");
  if (o.circuit == "qft") return gen_qft(o.n);
  if (o.circuit == "qv") return gen_qv(o.n, o.depth < 0 ? 30 : o.depth, o.seed);
  if (o.circuit == "qaoa") return gen_qaoa_maxcut(random_graph(o.n, o.edge_prob, o.seed), o.p, {}, o.seed);
  if (o.circuit == "ghz") {
    Circuit c;
    c.num_qubits = o.n;
    c.ops.push_back({"h", {}, {0}, {}, {}});
    for (int q = 1; q < o.n; ++q) c.ops.push_back({"cx", {}, {q - 1, q}, {}, {}});
    return c;
  }
  std::ifstream in(o.circuit);
  if (!in) throw std::invalid_argument("cannot open circuit file " + o.circuit);
  return load_circuit(in);
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) {
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

// Target specs: sv | amplitude[:BITS] | batched:PATTERN | rdm:Q,Q | expectation:P,P
ConversionTarget parse_target(const Options& o, const Circuit& c, const std::string& fallback) {
  const std::string spec = o.target.empty() ? fallback : o.target;
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  ConversionTarget t;
  if (kind == "sv") {
    t = ConversionTarget::state_vector();
  } else if (kind == "amplitude") {
    t = ConversionTarget::amplitude(arg.empty() ? std::string(static_cast<std::size_t>(c.num_qubits), '0') : arg);
  } else if (kind == "batched") {
    t = ConversionTarget::batched(arg);
  } else if (kind == "rdm") {
    std::vector<QubitIndex> kept;
    for (const auto& q : split_list(arg, ',')) kept.push_back(std::stoi(q));
    std::map<QubitIndex, int> projected;
    for (const auto& pv : o.project) {
      const auto eq = pv.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("--project takes QUBIT=VALUE");
      projected[std::stoi(pv.substr(0, eq))] = std::stoi(pv.substr(eq + 1));
    }
    t = ConversionTarget::rdm(std::move(kept), std::move(projected));
  } else if (kind == "expectation") {
    std::vector<PauliString> ps;
    for (const auto& s : split_list(arg, ',')) ps.push_back(PauliString::from_string(s));
    t = ConversionTarget::expectation(std::move(ps));
  } else {
    throw std::invalid_argument("unknown target '" + spec + "'");
  }
  t.lightcone = o.lightcone;
  return t;
}

struct NetworkSource {
  TensorNetwork tn;
  json info;
};

NetworkSource network_source(const Options& o, bool need_data) {
  NetworkSource s;
  if (!o.network.empty()) {
    s.tn = load_network(o.network, need_data, o.seed);
    s.info = {{"source", o.network}};
  } else {
    const Circuit c = make_circuit(o);
    const ConversionTarget t = parse_target(o, c, "amplitude");
    s.tn = circuit_to_network(c, t);
    s.info = {{"source", o.circuit}, {"qubits", c.num_qubits}, {"gates", c.size()}, {"target", o.target.empty() ? "amplitude" : o.target}};
  }
  s.info["tensors"] = s.tn.num_tensors();
  s.info["labels"] = s.tn.num_labels();
  return s;
}

// ---- path files -----------------------------------------------------------

void save_path_file(const TensorNetwork& tn, const ContractionTree& tree, const std::string& path) {
  json pairs = json::array();
  for (auto [a, b] : tree.pairs) pairs.push_back(json::array({a, b}));
  json sliced = json::array();
  for (auto l : tree.sliced) sliced.push_back(tn.label_name(l));
  std::ofstream os(path);
  os << json{{"format", "qsimkit-path"}, {"version", 1}, {"pairs", pairs}, {"sliced", sliced}}.dump() << '\n';
  if (!os) throw std::runtime_error("failed to write " + path);
}

ContractionTree load_path_file(const TensorNetwork& tn, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot open path file " + path);
  ContractionTree tree;
  try {
    const json j = json::parse(is);
    if (j.at("format") != "qsimkit-path") throw std::invalid_argument("not a qsimkit path file");
    tree.num_leaves = tn.num_tensors();
    for (const auto& p : j.at("pairs")) tree.pairs.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
    for (const auto& l : j.at("sliced")) tree.sliced.push_back(tn.label(l.get<std::string>()));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad path file: ") + e.what());
  }
  validate_tree(tree, tn.num_tensors());
  return tree;
}

// ---- result summaries ---------------------------------------------------

json tensor_summary(const TensorData& d) {
  json j{{"size", d.size()}, {"digest", digest(d)}, {"norm_squared", d.squaredNorm()}, {"sum", complex_json(d.sum())}};
  if (d.size() <= 16) {
    json v = json::array();
    for (Eigen::Index i = 0; i < d.size(); ++i) v.push_back(complex_json(d(i)));
    j["values"] = v;
  }
  return j;
}

TensorData reference_state(const Circuit& c) {
  StateVector<double> sv(c.num_qubits);
  for (const auto& g : to_gates(c)) apply_gate(sv, g);
  return logical_amplitudes(sv);
}

json compare_states(const TensorData& ref, const TensorData& got, int n, double tol, bool& passed) {
  const double fid = std::norm(ref.dot(got)) / (ref.squaredNorm() * got.squaredNorm());
  Eigen::Index worst = 0;
  const double diff = (ref - got).cwiseAbs().maxCoeff(&worst);
  passed = std::isfinite(fid) && 1 - fid <= tol;
  json j{{"passed", passed}, {"fidelity", fid}, {"tolerance", tol}, {"max_abs_diff", diff}};
  if (!passed) {
    j["worst_index"] = to_bitstring(static_cast<BasisIndex>(worst), n);
    j["expected"] = complex_json(ref(worst));
    j["actual"] = complex_json(got(worst));
  }
  return j;
}

void check_memory(double bytes, const Options& o, const std::string& what) {
  if (bytes > o.max_memory) {
    std::ostringstream msg;
    msg << what << " needs " << bytes << " bytes, above --max-memory " << o.max_memory;
    throw CapacityError(msg.str());
  }
}

// ---- simulate -------------------------------------------------------------

int cmd_simulate(const Options& o, json& rep, json& phases) {
  auto t0 = Clock::now();
  const Circuit c = make_circuit(o);
  const int n = c.num_qubits;
  phases["build_circuit_s"] = since(t0);
  rep["engine"] = o.engine;
  rep["circuit"] = {{"source", o.circuit}, {"qubits", n}, {"gates", c.size()}};
  json counters{{"gates", c.size()}};

  const double sv_bytes = std::ldexp(16.0, n);
  if (o.dry_run) {
    json est;
    if (o.engine == "sv" || o.engine == "sv-dist") est = sv_bytes;
    if (o.engine == "mps" && o.max_bond > 0) est = 16.0 * 2 * static_cast<double>(o.max_bond) * static_cast<double>(o.max_bond) * n;
    rep["dry_run"] = true;
    rep["counters"] = counters;
    rep["estimated_bytes"] = est;
    return kExitOk;
  }

  std::vector<Gate> gates = to_gates(c);
  if (o.fuse) {
    t0 = Clock::now();
    FusedCircuit f = fuse(gates, FusionConfig{o.max_fused, o.max_diagonal});
    gates = std::move(f.gates);
    phases["fuse_s"] = since(t0);
    counters["fused_gates"] = gates.size();
  }

  std::optional<TensorData> psi;
  json result;
  json amps = json::object();
  t0 = Clock::now();
  if (o.engine == "sv") {
    check_memory(sv_bytes, o, "state vector");
    StateVector<double> sv(n);
    for (const auto& g : gates) apply_gate(sv, g);
    phases["simulate_s"] = since(t0);
    psi = logical_amplitudes(sv);
    if (o.shots > 0) {
      std::vector<QubitIndex> order(static_cast<std::size_t>(n));
      std::iota(order.begin(), order.end(), 0);
      std::map<std::string, std::uint64_t> hist;
      for (auto x : sample(sv, o.shots, order, o.seed)) ++hist[to_bitstring(x, n)];
      result["samples"] = hist;
    }
    if (!o.dump_state.empty()) {
      std::ofstream os(o.dump_state, std::ios::binary);
      dump_state(sv, os);
    }
  } else if (o.engine == "sv-dist") {
    check_memory(sv_bytes, o, "state vector");
    int g = o.global_qubits;
    if (g < 0) g = std::min(n - 1, static_cast<int>(std::bit_width(static_cast<unsigned>(o.workers))) - 1);
    SegmentedStateVector ssv(n, g, o.workers);
    simulate_distributed(ssv, gates);
    phases["simulate_s"] = since(t0);
    psi = ssv.gather();
    const auto ts = ssv.transfer_stats();
    counters["global_qubits"] = g;
    counters["workers"] = o.workers;
    counters["transfers"] = {{"num_reorders", ts.num_reorders},
                             {"amplitudes_moved", ts.amplitudes_moved},
                             {"inter_worker_amplitudes", ts.inter_worker_amplitudes},
                             {"exchanges", ts.exchanges}};
  } else if (o.engine == "mps") {
    SvdPolicy pol;
    if (o.max_bond > 0) pol.max_extent = o.max_bond;
    if (o.cutoff > 0) pol.rel_cutoff = o.cutoff;
    const SplitAlgorithm alg = o.split == "direct" ? SplitAlgorithm::kDirect : SplitAlgorithm::kReduced;
    if (o.split != "direct" && o.split != "reduced") throw std::invalid_argument("--split must be direct or reduced");
    MPSState m(n);
    for (const auto& g : gates) {
      if (gate_qubits(g).size() > 2) throw CapacityError("mps engine applies gates on at most two qubits; disable --fuse");
      mps_apply(m, g, pol, alg);
    }
    phases["simulate_s"] = since(t0);
    counters["max_bond"] = m.max_bond();
    counters["bond_extents"] = m.bond_extents();
    counters["discarded_weight"] = m.discarded_weight();
    for (const auto& bits : o.amplitudes) amps[bits] = complex_json(mps_amplitude(m, bits));
    if (n <= 20 || (o.verify && n <= kVerifyMaxQubits)) psi = mps_to_vector(m);
    if (o.shots > 0) {
      std::map<std::string, std::uint64_t> hist;
      for (auto x : mps_sample(m, o.shots, o.seed)) ++hist[to_bitstring(x, n)];
      result["samples"] = hist;
    }
    if (!o.save_mps.empty()) {
      std::ofstream os(o.save_mps, std::ios::binary);
      save_mps(m, os);
    }
  } else if (o.engine == "tn") {
    OptimizerConfig cfg;
    cfg.seed = o.seed;
    cfg.num_hyper_samples = o.samples;
    cfg.threads = o.workers;
    if (n <= 26) {
      check_memory(sv_bytes, o, "state vector");
      psi = contract_network(circuit_to_network(c, ConversionTarget::state_vector()), cfg).data;
    } else if (o.amplitudes.empty()) {
      throw CapacityError("tn engine computes full states up to 26 qubits; request --amplitude instead");
    }
    for (const auto& bits : o.amplitudes) {
      if (!psi) amps[bits] = complex_json(contract_network(circuit_to_network(c, ConversionTarget::amplitude(bits)), cfg).data(0));
    }
    phases["simulate_s"] = since(t0);
  } else {
    throw std::invalid_argument("unknown engine '" + o.engine + "'");
  }

  if (psi) {
    result["norm_squared"] = psi->squaredNorm();
    result["digest"] = digest(*psi);
    for (const auto& bits : o.amplitudes) {
      if (static_cast<int>(bits.size()) != n) throw std::invalid_argument("amplitude bitstring length must equal the qubit count");
      amps[bits] = complex_json((*psi)(static_cast<Eigen::Index>(from_bitstring(bits))));
    }
  }
  if (!amps.empty()) result["amplitudes"] = amps;
  rep["counters"] = counters;
  rep["result"] = result;

  if (!o.verify) return kExitOk;
  if (n > kVerifyMaxQubits) {
    rep["verify"] = {{"skipped", "verification runs up to 14 qubits"}};
    return kExitOk;
  }
  t0 = Clock::now();
  bool passed = false;
  rep["verify"] = compare_states(reference_state(c), *psi, n, o.verify_tol, passed);
  phases["verify_s"] = since(t0);
  return passed ? kExitOk : kExitVerify;
}

// ---- pathfind -------------------------------------------------------------

json path_json(const TensorNetwork& tn, const OptimizerResult& r) {
  json sliced = json::array();
  for (auto l : r.tree.sliced) sliced.push_back(tn.label_name(l));
  return {{"method", r.method},
          {"sample", r.sample},
          {"total_flops", r.total_flops},
          {"unsliced_flops", r.unsliced_flops},
          {"overhead", r.overhead},
          {"slices", r.slices},
          {"largest_intermediate", r.largest_intermediate},
          {"warm_flops", r.warm_flops},
          {"sliced", sliced}};
}

OptimizerConfig optimizer_config(const Options& o) {
  OptimizerConfig cfg;
  cfg.num_hyper_samples = o.samples;
  cfg.memory_budget = o.memory_budget;
  cfg.max_slicing_overhead = o.max_overhead;
  cfg.seed = o.seed;
  cfg.threads = o.workers;
  cfg.repetitions = o.repetitions;
  return cfg;
}

int cmd_pathfind(const Options& o, json& rep, json& phases) {
  const NetworkSource src = network_source(o, false);
  rep["network"] = src.info;
  auto t0 = Clock::now();
  const OptimizerResult r = find_path(src.tn, optimizer_config(o));
  phases["find_path_s"] = since(t0);
  rep["path"] = path_json(src.tn, r);
  if (!o.compare.empty()) {
    if (o.compare != "greedy") throw std::invalid_argument("--compare supports 'greedy'");
    t0 = Clock::now();
    ContractionTree g = greedy_path(src.tn);
    if (std::isfinite(o.memory_budget)) g.sliced = select_slices(src.tn, g, o.memory_budget).sliced;
    const PathCost pc = path_cost(src.tn, g);
    phases["greedy_s"] = since(t0);
    rep["compare"] = {{"greedy", {{"total_flops", pc.total_flops}, {"slices", pc.slices}, {"largest_intermediate", pc.largest_intermediate}}},
                      {"greedy_over_optimized", pc.total_flops / r.total_flops}};
  }
  if (!o.save_path.empty()) save_path_file(src.tn, r.tree, o.save_path);
  return kExitOk;
}

// ---- contract -------------------------------------------------------------

SliceRange parse_range(const std::string& s) {
  SliceRange r;
  if (s.empty()) return r;
  const auto dots = s.find("..");
  if (dots == std::string::npos) throw std::invalid_argument("--slices takes BEGIN..END");
  const std::string a = s.substr(0, dots), b = s.substr(dots + 2);
  if (!a.empty()) r.begin = std::stod(a);
  if (!b.empty()) r.end = std::stod(b);
  return r;
}

json cache_json(const CacheStats& s) {
  return {{"used_bytes", s.used_bytes},       {"recommended_bytes", s.recommended_bytes},
          {"hits", s.hits},                   {"recomputes", s.recomputes},
          {"evictions", s.evictions},         {"flops", s.flops}};
}

int cmd_contract(const Options& o, json& rep, json& phases) {
  const NetworkSource src = network_source(o, true);
  const TensorNetwork& tn = src.tn;
  rep["network"] = src.info;
  auto t0 = Clock::now();
  OptimizerResult r;
  if (!o.path.empty()) {
    r.tree = load_path_file(tn, o.path);
    const PathCost pc = path_cost(tn, r.tree);
    r.total_flops = pc.total_flops;
    r.slices = pc.slices;
    r.largest_intermediate = pc.largest_intermediate;
    r.warm_flops = warm_flops(tn, r.tree);
    r.method = "file";
  } else {
    Options planned = o;
    planned.repetitions = std::max(o.repetitions, static_cast<double>(o.repeat));
    r = find_path(tn, optimizer_config(planned));
  }
  ContractionPlan plan = make_plan(tn, r);
  phases["plan_s"] = since(t0);
  rep["path"] = path_json(tn, r);
  rep["workspace"] = {{"min_bytes", plan.workspace.min}, {"recommended_bytes", plan.workspace.recommended}, {"max_bytes", plan.workspace.max}};
  rep["recommended_cache_bytes"] = recommended_cache_bytes(plan, tn);

  const SliceRange range = parse_range(o.slices);
  if (o.repeat < 1) throw std::invalid_argument("--repeat must be at least 1");
  Tensor out;
  if (o.workers > 1) {
    if (!o.slices.empty() || o.accumulate) throw std::invalid_argument("--workers > 1 contracts every slice; drop --slices/--accumulate");
    std::vector<WorkspaceArena> arenas(static_cast<std::size_t>(o.workers), WorkspaceArena(kInf, o.cache_bytes));
    if (o.autotune) autotune(plan, tn, arenas[0]);
    t0 = Clock::now();
    for (int i = 0; i < o.repeat; ++i) out = contract_distributed(plan, tn, arenas, o.workers);
    phases["contract_s"] = since(t0);
  } else {
    WorkspaceArena arena(kInf, o.cache_bytes);
    if (o.autotune) {
      t0 = Clock::now();
      autotune(plan, tn, arena);
      phases["autotune_s"] = since(t0);
    }
    json runs = json::array();
    t0 = Clock::now();
    for (int i = 0; i < o.repeat; ++i) {
      const double before = arena.cache_stats().flops;
      if (o.accumulate) {
        if (o.result.empty()) throw std::invalid_argument("--accumulate needs --result FILE");
        out = contract(plan, tn, arena, SliceRange{range.begin, range.end, false});
        if (fs::exists(o.result) && i == 0) {
          const TensorData prev = load_raw(o.result);
          if (prev.size() != out.data.size()) throw std::invalid_argument("accumulator size does not match the result");
          Tensor acc = out;
          acc.data = prev;
          contract_into(plan, tn, arena, SliceRange{range.begin, range.end, true}, acc);
          out = std::move(acc);
        }
      } else {
        out = contract(plan, tn, arena, range);
      }
      runs.push_back({{"flops", arena.cache_stats().flops - before}});
    }
    phases["contract_s"] = since(t0);
    if (o.cache_bytes > 0 || o.repeat > 1) rep["cache"] = cache_json(arena.cache_stats());
    rep["runs"] = runs;
  }
  const Tensor shaped = reduce_to(out, tn.output());
  rep["slices"] = {{"total", plan.slices}, {"range", json::array({range.begin, finite_or_null(std::min(range.end, plan.slices))})}};
  rep["result"] = tensor_summary(shaped.data);
  if (!o.result.empty()) save_raw(shaped.data, o.result);
  return kExitOk;
}

// ---- bench ----------------------------------------------------------------

int cmd_bench(const Options& o, json& rep, std::ostream& out, json& phases) {
  const int n = o.n > 0 ? o.n : 10;
  std::vector<std::string> suites = o.suite == "all" ? std::vector<std::string>{"qft", "qv", "qaoa"} : split_list(o.suite, ',');
  const auto engines = split_list(o.engines, ',');
  std::ofstream file;
  std::ostream* csv = &out;
  if (!o.csv.empty()) {
    file.open(o.csv);
    if (!file) throw std::runtime_error("cannot write " + o.csv);
    csv = &file;
  }
  *csv << "circuit,n,engine,config,gates,wall_seconds,norm_squared,fidelity,digest\n";
  json rows = json::array();
  auto t_all = Clock::now();
  for (const auto& name : suites) {
    Options co = o;
    co.circuit = name;
    co.n = n;
    if (name == "qv" && co.depth < 0) co.depth = 10;
    const Circuit c = make_circuit(co);
    const TensorData ref = reference_state(c);
    for (const auto& engine : engines) {
      std::vector<std::pair<std::string, std::function<TensorData()>>> configs;
      if (engine == "sv") {
        configs.emplace_back("plain", [&] { return reference_state(c); });
        configs.emplace_back("fused4", [&] {
          const auto g = to_gates(c);
          StateVector<double> sv(n);
          for (const auto& x : fuse(g, FusionConfig{}).gates) apply_gate(sv, x);
          return TensorData(logical_amplitudes(sv));
        });
      } else if (engine == "mps") {
        const long d = o.max_bond > 0 ? o.max_bond : 64;
        configs.emplace_back("max_bond=" + std::to_string(d), [&, d] {
          MPSState m(n);
          SvdPolicy pol;
          pol.max_extent = d;
          for (const auto& op : c.ops) mps_apply(m, to_dense_gate(op), pol);
          return mps_to_vector(m);
        });
      } else if (engine == "tn") {
        configs.emplace_back("samples=" + std::to_string(o.samples), [&] {
          OptimizerConfig cfg;
          cfg.seed = o.seed;
          cfg.num_hyper_samples = o.samples;
          return contract_network(circuit_to_network(c, ConversionTarget::state_vector()), cfg).data;
        });
      } else {
        throw std::invalid_argument("unknown bench engine '" + engine + "'");
      }
      for (auto& [config, fn] : configs) {
        const auto t0 = Clock::now();
        const TensorData psi = fn();
        const double wall = since(t0);
        const double fid = std::norm(ref.dot(psi)) / (ref.squaredNorm() * psi.squaredNorm());
        *csv << name << ',' << n << ',' << engine << ',' << config << ',' << c.size() << ',' << wall << ',' << std::setprecision(17)
             << psi.squaredNorm() << ',' << fid << std::setprecision(6) << ',' << digest(psi) << '\n';
        rows.push_back({{"circuit", name}, {"n", n}, {"engine", engine}, {"config", config}, {"gates", c.size()},
                        {"norm_squared", psi.squaredNorm()}, {"fidelity", fid}, {"digest", digest(psi)}});
      }
    }
  }
  phases["bench_s"] = since(t_all);
  rep["rows"] = rows;
  return kExitOk;
}

// ---- convert --------------------------------------------------------------

int cmd_convert(const Options& o, json& rep, json& phases) {
  const auto t0 = Clock::now();
  const Circuit c = make_circuit(o);
  const ConversionTarget t = parse_target(o, c, "sv");
  const TensorNetwork tn = circuit_to_network(c, t);
  phases["convert_s"] = since(t0);
  rep["circuit"] = {{"source", o.circuit}, {"qubits", c.num_qubits}, {"gates", c.size()}};
  rep["network"] = {{"tensors", tn.num_tensors()}, {"labels", tn.num_labels()}, {"expression", to_einsum(tn)}};
  if (!o.output.empty()) {
    save_network(tn, o.output);
    rep["files"] = {{"network", o.output}, {"data", fs::path(o.output).replace_extension(".bin").string()}};
  }
  return kExitOk;
}

void add_circuit_options(CLI::App* app, Options& o) {
  app->add_option("--circuit", o.circuit, "qft | qv | qaoa | ghz | circuit JSON file");
  app->add_option("--n", o.n, "qubit count for generated circuits");
  app->add_option("--depth", o.depth, "QV depth (default 30)");
  app->add_option("--p", o.p, "QAOA rounds")->check(CLI::PositiveNumber);
  app->add_option("--edge-prob", o.edge_prob, "QAOA random graph edge probability")->check(CLI::Range(0.0, 1.0));
}

void add_network_options(CLI::App* app, Options& o) {
  add_circuit_options(app, o);
  app->add_option("--network", o.network, "network JSON file");
  app->add_option("--target", o.target, "sv | amplitude[:BITS] | batched:PATTERN | rdm:Q,.. | expectation:PAULI,..");
  app->add_flag("--lightcone", o.lightcone, "prune gates outside the reverse lightcone");
  app->add_option("--project", o.project, "QUBIT=VALUE projection for rdm targets");
}

void add_path_options(CLI::App* app, Options& o) {
  app->add_option("--samples", o.samples, "hyper-optimizer samples")->check(CLI::PositiveNumber);
  app->add_option("--memory-budget", o.memory_budget, "per-slice intermediate budget in bytes");
  app->add_option("--max-overhead", o.max_overhead, "largest acceptable slicing overhead");
}

}  // namespace

void save_raw(const TensorData& data, const std::string& path) {
  static_assert(std::endian::native == std::endian::little, "raw format assumes a little-endian host");
  std::ofstream os(path, std::ios::binary);
  const auto count = static_cast<std::uint64_t>(data.size());
  os.write(reinterpret_cast<const char*>(&count), sizeof(count));
  os.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(cplx)));
  if (!os) throw std::runtime_error("failed to write " + path);
}

TensorData load_raw(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::uint64_t count = 0;
  is.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (!is || count > (1ull << 40)) throw std::runtime_error("invalid raw tensor file " + path);
  TensorData d(static_cast<Eigen::Index>(count));
  is.read(reinterpret_cast<char*>(d.data()), static_cast<std::streamsize>(count * sizeof(cplx)));
  if (!is) throw std::runtime_error("truncated raw tensor file " + path);
  return d;
}

std::string digest(const TensorData& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
  for (std::size_t i = 0; i < static_cast<std::size_t>(data.size()) * sizeof(cplx); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

void save_network(const TensorNetwork& tn, const std::string& json_path) {
  const fs::path data_path = fs::path(json_path).replace_extension(".bin");
  json shapes = json::array(), constant = json::array();
  bool bound = true;
  for (int t = 0; t < tn.num_tensors(); ++t) {
    shapes.push_back(tn.tensor(t).extents);
    if (tn.tensor(t).constant) constant.push_back(t);
    bound = bound && tn.tensor(t).bound();
  }
  json j{{"format", "qsimkit-network"}, {"version", 1}, {"expression", to_einsum(tn)}, {"shapes", shapes}, {"constant", constant}};
  if (bound) {
    j["data_file"] = data_path.filename().string();
    j["dtype"] = "complex128";
    j["byte_order"] = "little";
    std::ofstream ds(data_path, std::ios::binary);
    for (const auto& t : tn.tensors()) ds.write(reinterpret_cast<const char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * sizeof(cplx)));
    if (!ds) throw std::runtime_error("failed to write " + data_path.string());
  }
  std::ofstream os(json_path);
  os << j.dump(1) << '\n';
  if (!os) throw std::runtime_error("failed to write " + json_path);
}

TensorNetwork load_network(const std::string& json_path, bool fill, std::uint64_t seed) {
  std::ifstream is(json_path);
  if (!is) throw std::invalid_argument("cannot open network file " + json_path);
  json j;
  std::vector<std::vector<Extent>> shapes;
  try {
    j = json::parse(is);
    if (j.at("format") != "qsimkit-network") throw std::invalid_argument("not a qsimkit network file");
    shapes = j.at("shapes").get<std::vector<std::vector<Extent>>>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad network file: ") + e.what());
  }
  TensorNetwork tn = parse_einsum(j.at("expression").get<std::string>(), shapes);
  if (j.contains("data_file")) {
    const fs::path data_path = fs::path(json_path).parent_path() / j["data_file"].get<std::string>();
    std::ifstream ds(data_path, std::ios::binary);
    if (!ds) throw std::invalid_argument("cannot open network data " + data_path.string());
    for (int t = 0; t < tn.num_tensors(); ++t) {
      TensorData d(tn.tensor(t).size());
      ds.read(reinterpret_cast<char*>(d.data()), static_cast<std::streamsize>(d.size() * sizeof(cplx)));
      if (!ds) throw std::invalid_argument("truncated network data " + data_path.string());
      tn.set_data(t, std::move(d));
    }
  } else if (fill) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    for (int t = 0; t < tn.num_tensors(); ++t) {
      const auto& ext = tn.tensor(t).extents;
      const double scale = 1 / std::sqrt(2.0 * static_cast<double>(ext.empty() ? 1 : *std::max_element(ext.begin(), ext.end())));
      TensorData d(tn.tensor(t).size());
      for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = cplx(normal(rng), normal(rng)) * scale;
      tn.set_data(t, std::move(d));
    }
  }
  if (j.contains("constant")) {
    const auto ids = j["constant"].get<std::vector<int>>();
    tn.mark_constant(ids);
  }
  return tn;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"qsimkit: quantum circuit simulation with state vectors, MPS and tensor networks"};
  app.require_subcommand(1);
  Options o;
  try {
    o.workers = env_workers();
  } catch (const std::exception& e) {
    err << e.what() << '\n';
    return kExitUsage;
  }

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "seed for every random choice (default 0)");
    sub->add_option("--report", o.report, "write the JSON report here instead of stdout");
    sub->add_option("--workers", o.workers, std::string("worker threads (default $") + kWorkersEnv + " or 1)")->check(CLI::PositiveNumber);
    sub->add_option("--max-memory", o.max_memory, "largest dense state in bytes");
  };

  auto* sim = app.add_subcommand("simulate", "simulate a circuit");
  add_common(sim);
  add_circuit_options(sim, o);
  sim->add_option("--engine", o.engine, "sv | sv-dist | mps | tn")->check(CLI::IsMember({"sv", "sv-dist", "mps", "tn"}));
  sim->add_flag("--verify", o.verify, "cross-check against the state vector engine (n <= 14)");
  sim->add_option("--verify-tol", o.verify_tol, "allowed 1 - fidelity");
  sim->add_flag("--dry-run", o.dry_run, "report sizes without simulating");
  sim->add_flag("--fuse", o.fuse, "fuse gates before simulation");
  sim->add_option("--max-fused", o.max_fused, "largest fused dense gate");
  sim->add_option("--max-diagonal", o.max_diagonal, "largest fused diagonal gate");
  sim->add_option("--global-qubits", o.global_qubits, "sv-dist: qubits addressed by segment index");
  sim->add_option("--max-bond", o.max_bond, "mps: bond extent limit");
  sim->add_option("--cutoff", o.cutoff, "mps: relative singular value cutoff");
  sim->add_option("--split", o.split, "mps: direct | reduced");
  sim->add_option("--amplitude", o.amplitudes, "report this amplitude (highest qubit first)");
  sim->add_option("--shots", o.shots, "draw samples");
  sim->add_option("--samples", o.samples, "tn: hyper-optimizer samples")->check(CLI::PositiveNumber);
  sim->add_option("--dump-state", o.dump_state, "sv: write the final state");
  sim->add_option("--save-mps", o.save_mps, "mps: write the final MPS");

  auto* pf = app.add_subcommand("pathfind", "find a contraction path");
  add_common(pf);
  add_network_options(pf, o);
  add_path_options(pf, o);
  pf->add_option("--repetitions", o.repetitions, "plan for this many runs with a warm cache")->check(CLI::Range(1.0, 1e18));
  pf->add_option("--compare", o.compare, "also report the cost of: greedy");
  pf->add_option("--save-path", o.save_path, "write the path as JSON");

  auto* ct = app.add_subcommand("contract", "contract a network");
  add_common(ct);
  add_network_options(ct, o);
  add_path_options(ct, o);
  ct->add_option("--path", o.path, "path JSON from pathfind --save-path");
  ct->add_option("--slices", o.slices, "slice range BEGIN..END");
  ct->add_flag("--accumulate", o.accumulate, "add into the --result file");
  ct->add_option("--result", o.result, "write the result as a raw tensor");
  ct->add_option("--cache-bytes", o.cache_bytes, "cache for constant intermediates");
  ct->add_option("--repeat", o.repeat, "contract this many times with one arena");
  ct->add_flag("--autotune", o.autotune, "pick kernel variants by timing");

  auto* bn = app.add_subcommand("bench", "run a benchmark suite and print CSV rows");
  add_common(bn);
  bn->add_option("--suite", o.suite, "all | comma list of qft,qv,qaoa");
  bn->add_option("--engines", o.engines, "comma list of sv,mps,tn");
  bn->add_option("--n", o.n, "qubits (default 10)");
  bn->add_option("--depth", o.depth, "QV depth (default 10)");
  bn->add_option("--p", o.p, "QAOA rounds");
  bn->add_option("--edge-prob", o.edge_prob, "QAOA graph edge probability");
  bn->add_option("--max-bond", o.max_bond, "mps bond limit (default 64)");
  bn->add_option("--samples", o.samples, "tn hyper-optimizer samples");
  bn->add_option("--csv", o.csv, "write CSV here instead of stdout");

  auto* cv = app.add_subcommand("convert", "convert a circuit to a network file");
  add_common(cv);
  add_circuit_options(cv, o);
  cv->add_option("--target", o.target, "sv | amplitude[:BITS] | batched:PATTERN | rdm:Q,.. | expectation:PAULI,..");
  cv->add_flag("--lightcone", o.lightcone, "prune gates outside the reverse lightcone");
  cv->add_option("--project", o.project, "QUBIT=VALUE projection for rdm targets");
  cv->add_option("--output", o.output, "network JSON path; data goes next to it as .bin");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(std::move(rev));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  json rep;
  rep["schema"] = "qsimkit.run-report";
  rep["schema_version"] = 1;
  const std::string command = app.get_subcommands().front()->get_name();
  rep["command"] = command;
  rep["args"] = args;
  rep["seed"] = o.seed;
  json phases = json::object();
  const auto t0 = Clock::now();
  int code = kExitOk;
  std::ostringstream bench_csv;
  try {
    if (command == "simulate") code = cmd_simulate(o, rep, phases);
    if (command == "pathfind") code = cmd_pathfind(o, rep, phases);
    if (command == "contract") code = cmd_contract(o, rep, phases);
    if (command == "bench") code = cmd_bench(o, rep, out, phases);
    if (command == "convert") code = cmd_convert(o, rep, phases);
  } catch (const InfeasibleError& e) {
    err << json{{"error", e.what()}, {"kind", "infeasible"}}.dump() << '\n';
    return kExitInfeasible;
  } catch (const CapacityError& e) {
    err << json{{"error", e.what()}, {"kind", "capacity"}}.dump() << '\n';
    return kExitInfeasible;
  } catch (const std::exception& e) {
    err << json{{"error", e.what()}, {"kind", "invalid"}}.dump() << '\n';
    return kExitUsage;
  }
  rep["exit_code"] = code;
  rep["timings"] = {{"wall_s", since(t0)}, {"phases", phases}};

  if (!o.report.empty()) {
    std::ofstream os(o.report);
    os << rep.dump(2) << '\n';
    if (!os) {
      err << "failed to write " << o.report << '\n';
      return kExitUsage;
    }
  } else if (command != "bench") {
    out << rep.dump(2) << '\n';
  }
  if (code == kExitVerify) err << json{{"error", "verification failed"}, {"verify", rep["verify"]}}.dump() << '\n';
  return code;
}

}  // namespace qsimkit::cli
