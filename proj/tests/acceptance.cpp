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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. Pass criterion names to run a subset.

#include "circuit_oracles.hpp"
#include "oracles.hpp"
#include "qsimkit/approx.hpp"
#include "qsimkit/distsim.hpp"
#include "qsimkit/exec.hpp"
#include "qsimkit/frontend.hpp"
#include "qsimkit/fusion.hpp"
#include "qsimkit/pathfinder.hpp"
#include "qsimkit/statevec.hpp"
#include "tn_oracles.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

using namespace qsimkit;

namespace {

using Clock = std::chrono::steady_clock;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  std::string name;
  double limit_s;
  std::function<Outcome()> run;
};

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(3) << v;
  return os.str();
}

double max_diff(const Vector& a, const Vector& b) { return a.size() == b.size() ? (a - b).cwiseAbs().maxCoeff() : INFINITY; }

double scale(const Vector& a) { return std::max(1.0, a.cwiseAbs().maxCoeff()); }

// ---- dense operator oracle ------------------------------------------------

// Entry-by-entry 2^n operator of a controlled gate: columns whose controls
// are unsatisfied are identity, the rest scatter m over the target bits.
Matrix full_operator(const Matrix& m, const std::vector<QubitIndex>& targets, const std::vector<Control>& controls, int n) {
  const Eigen::Index dim = Eigen::Index{1} << n;
  Matrix op = Matrix::Zero(dim, dim);
  Eigen::Index tmask = 0;
  for (auto q : targets) tmask |= Eigen::Index{1} << q;
  const auto k = targets.size();
  for (Eigen::Index j = 0; j < dim; ++j) {
    bool on = true;
    for (const auto& c : controls) on = on && ((j >> c.qubit) & 1) == c.value;
    if (!on) {
      op(j, j) = 1;
      continue;
    }
    Eigen::Index in = 0;
    for (std::size_t b = 0; b < k; ++b) in |= ((j >> targets[b]) & 1) << b;
    for (Eigen::Index out = 0; out < (Eigen::Index{1} << k); ++out) {
      Eigen::Index i = j & ~tmask;
      for (std::size_t b = 0; b < k; ++b) i |= ((out >> b) & 1) << targets[b];
      op(i, j) = m(out, in);
    }
  }
  return op;
}

// exp(-i theta/2 P) from a Kronecker product of 2x2 Paulis, highest qubit
// leftmost.
Matrix rotation_operator(double theta, const PauliString& p, int n) {
  Matrix x(2, 2), y(2, 2), z(2, 2);
  x << 0, 1, 1, 0;
  y << 0, cplx(0, -1), cplx(0, 1), 0;
  z << 1, 0, 0, -1;
  Matrix pm = Matrix::Identity(1, 1);
  for (int q = n - 1; q >= 0; --q) {
    Matrix s = Matrix::Identity(2, 2);
    for (const auto& f : p.factors) {
      if (f.qubit != q) continue;
      if (f.op == Pauli::X) s = x;
      if (f.op == Pauli::Y) s = y;
      if (f.op == Pauli::Z) s = z;
    }
    pm = Eigen::kroneckerProduct(pm, s).eval();
  }
  return std::cos(theta / 2) * Matrix::Identity(pm.rows(), pm.cols()) - cplx(0, std::sin(theta / 2)) * pm;
}

Outcome sv_oracle() {
  std::mt19937_64 rng(101);
  double worst = 0;
  int counts[3] = {0, 0, 0};
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + trial % 8;
    const int gates = 1 + static_cast<int>(rng() % 60);
    const Vector psi0 = oracle::random_state(n, rng);
    auto sv = StateVector<double>::from_amplitudes(psi0);
    Vector expect = psi0;
    for (int i = 0; i < gates; ++i) {
      if (rng() % 3 == 0) {
        PauliString p;
        for (int q = 0; q < n; ++q) {
          const auto r = rng() % 4;
          if (r) p.factors.push_back({q, r == 1 ? Pauli::X : r == 2 ? Pauli::Y : Pauli::Z});
        }
        if (p.factors.empty()) p.factors.push_back({static_cast<QubitIndex>(rng() % static_cast<unsigned>(n)), Pauli::Y});
        const double theta = std::uniform_real_distribution<double>(-4, 4)(rng);
        apply_pauli_rotation(sv, theta, p);
        expect = rotation_operator(theta, p, n) * expect;
        ++counts[2];
        continue;
      }
      const Gate g = oracle::random_gate(n, 3, rng);
      if (const auto* d = std::get_if<DenseGate<double>>(&g)) {
        apply_matrix(sv, *d);
        expect = full_operator(d->matrix, d->targets, d->controls, n) * expect;
        ++counts[0];
      } else {
        const auto& p = std::get<PermutationGate<double>>(g);
        apply_generalized_permutation(sv, p);
        const auto dim = static_cast<Eigen::Index>(p.permutation.size());
        Matrix m = Matrix::Zero(dim, dim);
        for (Eigen::Index j = 0; j < dim; ++j) m(static_cast<Eigen::Index>(p.permutation[static_cast<std::size_t>(j)]), j) = p.diagonal[static_cast<std::size_t>(j)];
        expect = full_operator(m, p.targets, p.controls, n) * expect;
        ++counts[1];
      }
    }
    worst = std::max(worst, max_diff(logical_amplitudes(sv), expect));
  }
  return {worst <= 1e-12, "max |diff| " + fmt(worst) + " over " + std::to_string(counts[0]) + " dense, " + std::to_string(counts[1]) +
                              " permutation, " + std::to_string(counts[2]) + " rotation gates"};
}

// ---- fusion ---------------------------------------------------------------

Vector run_gates(std::span<const Gate> gates, const Vector& psi) {
  auto sv = StateVector<double>::from_amplitudes(psi);
  for (const auto& g : gates) apply_gate(sv, g);
  return logical_amplitudes(sv);
}

Outcome fusion() {
  std::mt19937_64 rng(202);
  double worst = 0;
  int fewer = 0;
  std::size_t before = 0, after = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 4 + trial % 7;
    const auto c = oracle::random_circuit(n, 20 + static_cast<int>(rng() % 100), 2, rng);
    const auto f = fuse(c, FusionConfig{4, 6});
    const Vector psi = oracle::random_state(n, rng);
    worst = std::max(worst, max_diff(run_gates(c, psi), run_gates(f.gates, psi)));
    fewer += f.gates.size() < c.size();
    before += c.size();
    after += f.gates.size();
  }
  return {worst <= 1e-10 && fewer >= 190, "max |diff| " + fmt(worst) + ", fewer gates in " + std::to_string(fewer) + "/200, " +
                                              std::to_string(before) + " -> " + std::to_string(after) + " gates"};
}

// ---- distributed ------------------------------------------------------------

Outcome distributed() {
  std::mt19937_64 rng(303);
  const int n = 12;
  double worst = 0;
  std::uint64_t local_transfers = 0;
  int configs = 0;
  const std::vector<std::pair<std::string, std::vector<Gate>>> circuits{{"qft", to_gates(gen_qft(n))}, {"qv", to_gates(gen_qv(n, 30, 7))}};
  for (int g : {1, 2, 3}) {
    for (int workers : {2, 4, 8}) {
      for (const auto& [name, gates] : circuits) {
        const Vector psi = oracle::random_state(n, rng);
        auto ssv = SegmentedStateVector::scatter(StateVector<double>::from_amplitudes(psi), g, workers);
        simulate_distributed(ssv, gates);
        worst = std::max(worst, max_diff(ssv.gather(), run_gates(gates, psi)));
        ++configs;
      }
      // Gates and controls only on local qubits.
      const auto local = oracle::random_circuit(n - g, 60, 3, rng);
      const Vector psi = oracle::random_state(n, rng);
      auto ssv = SegmentedStateVector::scatter(StateVector<double>::from_amplitudes(psi), g, workers);
      simulate_distributed(ssv, local);
      worst = std::max(worst, max_diff(ssv.gather(), run_gates(local, psi)));
      const auto s = ssv.transfer_stats();
      local_transfers += s.num_reorders + s.amplitudes_moved + s.inter_worker_amplitudes + s.exchanges;
      ++configs;
    }
  }
  return {worst <= 1e-12 && local_transfers == 0,
          std::to_string(configs) + " runs, max |diff| " + fmt(worst) + ", transfers on all-local circuits " + std::to_string(local_transfers)};
}

// ---- path quality -----------------------------------------------------------

Outcome path_quality() {
  std::mt19937_64 rng(404);
  int optimal = 0;
  for (int trial = 0; trial < 100; ++trial) {
    oracle::RandomNetworkOptions o;
    o.tensors = 3 + trial % 6;
    o.labels = o.tensors + 3 + static_cast<int>(rng() % 4);
    o.max_extent = 2 + static_cast<Extent>(rng() % 6);
    o.hyperedges = trial % 3 == 0;
    o.bind = false;
    const auto tn = oracle::random_network(o, rng);
    OptimizerConfig cfg;
    cfg.num_hyper_samples = 64;
    cfg.seed = static_cast<std::uint64_t>(trial);
    const auto r = find_path(tn, cfg);
    if (oracle::tree_flops(tn, r.tree) <= oracle::optimal_flops(tn) * (1 + 1e-12)) ++optimal;
  }
  int not_worse = 0, better = 0;
  double log_ratio = 0;
  for (int seed = 0; seed < 100; ++seed) {
    std::mt19937_64 g(static_cast<std::uint64_t>(seed) + 1000);
    const auto tn = oracle::random_circuit_network(6, 24, g, false);
    OptimizerConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(seed);
    // The optimizer's own cost model: dangling wires are summed, not free.
    const double hyper = path_cost(tn, find_path(tn, cfg).tree).total_flops;
    const double greedy = path_cost(tn, greedy_path(tn)).total_flops;
    not_worse += hyper <= greedy * (1 + 1e-12);
    better += hyper < greedy * (1 - 1e-12);
    log_ratio += std::log(greedy / hyper);
  }
  return {optimal >= 90 && not_worse == 100, "optimal " + std::to_string(optimal) + "/100; 30-tensor hyper <= greedy " +
                                                  std::to_string(not_worse) + "/100 (strictly better " + std::to_string(better) +
                                                  ", geometric mean greedy/hyper " + fmt(std::exp(log_ratio / 100)) + ")"};
}

// ---- slicing ----------------------------------------------------------------

// Largest intermediate of one slice, from leaf sets: a node keeps the labels
// its leaves share with the rest of the network or the output.
double slice_peak(const TensorNetwork& tn, const ContractionTree& tree) {
  std::vector<std::set<int>> leaves(static_cast<std::size_t>(tree.num_nodes()));
  for (int i = 0; i < tree.num_leaves; ++i) leaves[static_cast<std::size_t>(i)] = {i};
  const std::set<Label> sliced(tree.sliced.begin(), tree.sliced.end());
  double peak = 0;
  for (std::size_t k = 0; k < tree.pairs.size(); ++k) {
    auto& self = leaves[static_cast<std::size_t>(tree.num_leaves) + k];
    self = leaves[static_cast<std::size_t>(tree.pairs[k].first)];
    const auto& b = leaves[static_cast<std::size_t>(tree.pairs[k].second)];
    self.insert(b.begin(), b.end());
    std::set<Label> in, out(tn.output().begin(), tn.output().end());
    for (int t = 0; t < tn.num_tensors(); ++t) {
      for (auto l : tn.tensor(t).modes) (self.count(t) ? in : out).insert(l);
    }
    double size = 1;
    for (auto l : in) {
      if (out.count(l) && !sliced.count(l)) size *= static_cast<double>(tn.extent(l));
    }
    peak = std::max(peak, size);
  }
  return peak;
}

Outcome slicing() {
  std::mt19937_64 rng(505);
  double worst = 0, min_overhead = INFINITY;
  int over_budget = 0, sliced_cases = 0;
  for (int trial = 0; trial < 100; ++trial) {
    TensorNetwork tn;
    if (trial % 2 == 0) {
      tn = oracle::random_circuit_network(8, 30 + static_cast<int>(rng() % 20), rng);
    } else {
      oracle::RandomNetworkOptions o;
      o.tensors = 10;
      o.labels = 16;
      o.max_extent = 4;
      o.outputs = 2;
      o.hyperedges = true;
      tn = oracle::random_network(o, rng);
    }
    OptimizerConfig cfg;
    cfg.num_hyper_samples = 8;
    cfg.seed = static_cast<std::uint64_t>(trial);
    const auto free = find_path(tn, cfg);
    OptimizerResult res;
    for (double div : {4.0, 2.0, 1.0}) {
      cfg.memory_budget = std::max(1.0, std::floor(free.largest_intermediate / div)) * kBytesPerElement;
      try {
        res = find_path(tn, cfg);
        break;
      } catch (const InfeasibleError&) {
      }
    }
    sliced_cases += res.slices > 1;
    min_overhead = std::min(min_overhead, res.overhead);
    if (slice_peak(tn, res.tree) * kBytesPerElement > cfg.memory_budget) ++over_budget;
    const auto plan = make_plan(tn, res);
    WorkspaceArena arena;
    const Vector got = reduce_to(contract(plan, tn, arena), tn.output()).data;
    const Vector ref = oracle::contract_along(tn, res.tree);
    worst = std::max(worst, max_diff(got, ref) / scale(ref));
  }
  return {worst <= 1e-10 && min_overhead >= 1 && over_budget == 0,
          std::to_string(sliced_cases) + "/100 sliced, max rel |diff| " + fmt(worst) + ", min overhead " + fmt(min_overhead) +
              ", over budget " + std::to_string(over_budget)};
}

// ---- caching ----------------------------------------------------------------

Outcome caching() {
  std::mt19937_64 rng(606);
  // 10 input states and 232 random two-qubit gates; the last 24 gates are
  // the mutable 10%, like the trailing parameterized layer of an ansatz.
  const int n = 10, mutable_count = 24;
  auto tn = oracle::random_circuit_network(n, 232, rng);
  const int total = tn.num_tensors();
  std::vector<int> constant, mutable_ids;
  for (int t = 0; t < total; ++t) (t < total - mutable_count ? constant : mutable_ids).push_back(t);
  mark_constant(tn, constant);
  OptimizerConfig cfg;
  cfg.num_hyper_samples = 16;
  cfg.repetitions = 100;
  const auto path = find_path(tn, cfg);
  const auto plan = make_plan(tn, path);
  const double cache = recommended_cache_bytes(plan, tn);
  WorkspaceArena cached(INFINITY, cache), plain(INFINITY, 0);
  double worst = 0, first_flops = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const Vector a = contract(plan, tn, cached).data;
    const Vector b = contract(plan, tn, plain).data;
    worst = std::max(worst, max_diff(a, b) / scale(b));
    if (rep % 25 == 0) {
      // One open wire, so no reordering is needed.
      const Vector ref = oracle::contract_along(tn, path.tree);
      worst = std::max(worst, max_diff(a, ref) / scale(ref));
    }
    if (rep == 0) first_flops = cached.cache_stats().flops;
    for (int t : mutable_ids) tn.set_data(t, TensorData(0.25 * oracle::random_data(16, rng)));
  }
  const double uncached_flops = plain.cache_stats().flops / 100;
  const double repeat_flops = (cached.cache_stats().flops - first_flops) / 99;
  const double reduction = uncached_flops / repeat_flops;
  const auto& s = cached.cache_stats();
  return {total == 242 && s.recomputes == 0 && reduction >= 2 && worst <= 1e-12,
          std::to_string(total) + " tensors (" + std::to_string(constant.size()) + " constant), " + path.method + " path, cache " + fmt(cache) + " B, recomputes " +
              std::to_string(s.recomputes) + ", hits " + std::to_string(s.hits) + ", repeat flops " + fmt(repeat_flops) + " vs " +
              fmt(uncached_flops) + " (" + fmt(reduction) + "x), max rel |diff| " + fmt(worst)};
}

// ---- decomposition ------------------------------------------------------------

Matrix as_matrix(const Tensor& t, const std::vector<Label>& left, const std::vector<Label>& right) {
  std::vector<Label> order = left;
  order.insert(order.end(), right.begin(), right.end());
  const Tensor p = reduce_to(t, order);
  Extent rows = 1;
  for (auto l : left) rows *= t.extents[static_cast<std::size_t>(t.axis(l))];
  const Extent cols = t.size() / rows;
  Matrix m(rows, cols);
  for (Extent r = 0; r < rows; ++r) {
    for (Extent c = 0; c < cols; ++c) m(r, c) = p.data(r * cols + c);
  }
  return m;
}

Tensor random_tensor(std::vector<Label> modes, std::vector<Extent> extents, std::mt19937_64& rng) {
  Tensor t;
  t.modes = std::move(modes);
  t.extents = std::move(extents);
  Extent size = 1;
  for (auto e : t.extents) size *= e;
  t.data = oracle::random_data(size, rng);
  return t;
}

Outcome decomposition() {
  std::mt19937_64 rng(707);
  double qr_err = 0, svd_err = 0, svd_ref_err = 0, split_err = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int rank = 2 + trial % 3;
    std::vector<Label> modes(static_cast<std::size_t>(rank));
    std::iota(modes.begin(), modes.end(), 0);
    std::vector<Extent> ext;
    for (int i = 0; i < rank; ++i) ext.push_back(1 + static_cast<Extent>(rng() % (rank == 2 ? 40 : 8)));
    const Tensor t = random_tensor(modes, ext, rng);
    std::shuffle(modes.begin(), modes.end(), rng);
    const auto cut = 1 + rng() % static_cast<unsigned>(rank - 1);
    const std::vector<Label> left(modes.begin(), modes.begin() + static_cast<long>(cut)), right(modes.begin() + static_cast<long>(cut), modes.end());
    const Label bond = 99;

    const auto qr = tensor_qr(t, left, right, bond);
    const Matrix q = as_matrix(qr.q, left, {bond});
    qr_err = std::max(qr_err, (q.adjoint() * q - Matrix::Identity(q.cols(), q.cols())).cwiseAbs().maxCoeff());

    const Matrix tm = as_matrix(t, left, right);
    const Eigen::JacobiSVD<Matrix> ref(tm);
    const auto full = std::min(tm.rows(), tm.cols());
    SvdPolicy pol;
    pol.max_extent = 1 + static_cast<Extent>(rng() % static_cast<unsigned>(full));
    pol.partition = static_cast<SvdPartition>(rng() % 3 == 0 ? SvdPartition::kToU : rng() % 2 ? SvdPartition::kToV : SvdPartition::kSplitSqrt);
    const auto s = tensor_svd(t, left, right, bond, pol);
    std::vector<Label> order = left;
    order.insert(order.end(), right.begin(), right.end());
    const Tensor back = reduce_to(contract_pair(s.u, s.v, order), order);
    const double err = (back.data - reduce_to(t, order).data).norm();
    svd_err = std::max(svd_err, std::abs(err - std::sqrt(s.info.discarded_weight)));
    svd_ref_err = std::max(svd_ref_err, std::abs(err - ref.singularValues().tail(full - s.info.kept_extent).norm()));

    // gate_split on random sites a(l, p, m) b(m, q, r).
    const Label l = 0, p = 1, m = 2, qq = 3, r = 4, po = 5, qo = 6;
    const Extent dl = 1 + static_cast<Extent>(rng() % 8), dm = 1 + static_cast<Extent>(rng() % 8), dr = 1 + static_cast<Extent>(rng() % 8);
    const Tensor a = random_tensor({l, p, m}, {dl, 2, dm}, rng);
    const Tensor b = random_tensor({m, qq, r}, {dm, 2, dr}, rng);
    const Tensor g = random_tensor({po, qo, p, qq}, {2, 2, 2, 2}, rng);
    SvdPolicy sp;
    if (trial % 2) sp.max_extent = 1 + static_cast<Extent>(rng() % 4);
    const auto d = gate_split(a, b, g, SplitAlgorithm::kDirect, sp);
    const auto rd = gate_split(a, b, g, SplitAlgorithm::kReduced, sp);
    const std::vector<Label> out{l, po, qo, r};
    const Vector jd = reduce_to(contract_pair(d.a, d.b, out), out).data;
    const Vector jr = reduce_to(contract_pair(rd.a, rd.b, out), out).data;
    split_err = std::max(split_err, max_diff(jd, jr));
  }
  return {qr_err <= 1e-10 && svd_err <= 1e-9 && svd_ref_err <= 1e-9 && split_err <= 1e-8,
          "|Q'Q - I| " + fmt(qr_err) + ", |err - sqrt(discarded)| " + fmt(svd_err) + " (vs Jacobi tail " + fmt(svd_ref_err) +
              "), direct vs reduced " + fmt(split_err)};
}

// ---- MPS ------------------------------------------------------------------------

std::vector<DenseGate<double>> random_pair_gates(int n, int count, std::mt19937_64& rng) {
  std::vector<DenseGate<double>> gs;
  for (int i = 0; i < count; ++i) {
    const int a = static_cast<int>(rng() % static_cast<unsigned>(n));
    if (rng() % 3 == 0) {
      gs.push_back(make_dense_gate(gates::random_unitary(1, rng), {a}));
      continue;
    }
    int b = static_cast<int>(rng() % static_cast<unsigned>(n));
    while (b == a) b = static_cast<int>(rng() % static_cast<unsigned>(n));
    if (rng() % 4 == 0) {
      gs.push_back(make_dense_gate(gates::random_unitary(1, rng), {a}, {Control{b, static_cast<int>(rng() % 2)}}));
    } else {
      gs.push_back(make_dense_gate(gates::random_unitary(2, rng), {a, b}));
    }
  }
  return gs;
}

Vector run_dense(int n, const std::vector<DenseGate<double>>& gs) {
  StateVector<double> sv(n);
  for (const auto& g : gs) apply_matrix(sv, g);
  return logical_amplitudes(sv);
}

// Fidelities for D = 1, 2, 4, ..., 32 and the number of decreasing steps.
int fidelity_drops(int n, const std::vector<DenseGate<double>>& gs, const Vector& sv) {
  double last = 0;
  int drops = 0;
  for (Extent d : {1, 2, 4, 8, 16, 32}) {
    MPSState m(n);
    SvdPolicy pol;
    pol.max_extent = d;
    for (const auto& g : gs) mps_apply(m, g, pol);
    const Vector v = mps_to_vector(m);
    const double fid = std::norm(v.dot(sv)) / v.squaredNorm();
    drops += fid < last - 1e-10;
    last = fid;
  }
  return drops;
}

Outcome mps() {
  std::mt19937_64 rng(808);
  const int n = 10;
  double worst = 0;
  int scrambling_drops = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto gs = random_pair_gates(n, 60, rng);
    MPSState m(n);
    for (const auto& g : gs) mps_apply(m, g, {}, trial % 2 ? SplitAlgorithm::kDirect : SplitAlgorithm::kReduced);
    const Vector sv = run_dense(n, gs);
    worst = std::max(worst, max_diff(mps_to_vector(m), sv));
    for (int k = 0; k < 8; ++k) {
      const BasisIndex x = rng() % 1024;
      worst = std::max(worst, std::abs(mps_amplitude(m, x) - sv(static_cast<Eigen::Index>(x))));
    }
    if (trial < 10) scrambling_drops += fidelity_drops(n, gs, sv) > 0;
  }
  // Monotonicity on random nearest-neighbour brickwork circuits.
  int non_monotone = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<DenseGate<double>> gs;
    for (int layer = 0; layer < 10; ++layer) {
      for (int q = layer % 2; q + 1 < n; q += 2) gs.push_back(make_dense_gate(gates::random_unitary(2, rng), {q, q + 1}));
    }
    non_monotone += fidelity_drops(n, gs, run_dense(n, gs)) > 0;
  }
  return {worst <= 1e-8 && non_monotone == 0, "max |diff| " + fmt(worst) + " on 50 random circuits; non-monotone brickwork " +
                                                  std::to_string(non_monotone) + "/50 (info: all-to-all random " +
                                                  std::to_string(scrambling_drops) + "/10)"};
}

// ---- converter --------------------------------------------------------------------

Outcome converter() {
  std::mt19937_64 rng(909);
  OptimizerConfig cfg;
  cfg.num_hyper_samples = 2;
  auto run = [&](const TensorNetwork& tn) -> Vector { return contract_network(tn, cfg).data; };
  double worst = 0, cone_worst = 0;
  int grew = 0, cone_cases = 0, shrank = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + trial % 8;
    const Circuit c = oracle::random_named_circuit(n, 5 + static_cast<int>(rng() % 30), rng);
    const Vector psi = oracle::simulate(c);
    const BasisIndex x = rng() % (BasisIndex{1} << n);
    Vector got, want;
    std::optional<ConversionTarget> cone;
    switch (trial % 4) {
      case 0:
        got = run(circuit_to_network(c, ConversionTarget::amplitude(to_bitstring(x, n))));
        want = psi.segment(static_cast<Eigen::Index>(x), 1);
        break;
      case 1: {
        std::string pattern = to_bitstring(x, n);
        std::vector<int> open;
        for (int q = 0; q < n; ++q) {
          if (rng() % 2) {
            pattern[static_cast<std::size_t>(n - 1 - q)] = '*';
            open.push_back(q);
          }
        }
        got = run(circuit_to_network(c, ConversionTarget::batched(pattern)));
        want.resize(Eigen::Index{1} << open.size());
        for (Eigen::Index k = 0; k < want.size(); ++k) {
          BasisIndex y = x;
          for (std::size_t j = 0; j < open.size(); ++j) {
            y &= ~(BasisIndex{1} << open[j]);
            y |= static_cast<BasisIndex>((k >> j) & 1) << open[j];
          }
          want(k) = psi(static_cast<Eigen::Index>(y));
        }
        break;
      }
      case 2: {
        std::vector<int> kept;
        std::map<int, int> projected;
        for (int q = 0; q < n; ++q) {
          const auto r = rng() % 4;
          if (r == 0 && kept.size() < 3) {
            kept.push_back(q);
          } else if (r == 1) {
            projected[q] = static_cast<int>(rng() % 2);
          }
        }
        if (kept.empty()) kept.push_back(static_cast<int>(rng() % static_cast<unsigned>(n)));
        projected.erase(kept[0]);
        const auto t = ConversionTarget::rdm(kept, projected);
        got = run(circuit_to_network(c, t));
        const Matrix rho = oracle::rdm_oracle(psi, n, kept, projected);
        want = Eigen::Map<const Vector>(Matrix(rho.transpose()).data(), rho.size());
        cone = t;
        break;
      }
      default: {
        std::vector<PauliString> ps;
        for (int i = 0; i < 3; ++i) {
          std::string s(static_cast<std::size_t>(n), 'I');
          for (auto& ch : s) ch = "IXYZ"[rng() % 4];
          ps.push_back(PauliString::from_string(s, cplx(0.5 + static_cast<double>(rng() % 3), 0.25)));
        }
        const auto t = ConversionTarget::expectation(ps);
        got = run(circuit_to_network(c, t));
        StateVector<double> sv(n);
        for (const auto& g : to_gates(c)) apply_gate(sv, g);
        want.resize(3);
        for (int i = 0; i < 3; ++i) want(i) = expectation(sv, std::span<const PauliString>(&ps[static_cast<std::size_t>(i)], 1));
        cone = t;
      }
    }
    worst = std::max(worst, max_diff(got, want));
    if (cone) {
      ++cone_cases;
      const int full = circuit_to_network(c, *cone).num_tensors();
      cone->lightcone = true;
      const TensorNetwork reduced = circuit_to_network(c, *cone);
      grew += reduced.num_tensors() > full;
      shrank += reduced.num_tensors() < full;
      cone_worst = std::max(cone_worst, max_diff(run(reduced), want));
    }
  }
  return {worst <= 1e-10 && cone_worst <= 1e-10 && grew == 0,
          "500 cases, max |diff| " + fmt(worst) + "; lightcone on " + std::to_string(cone_cases) + ": max |diff| " + fmt(cone_worst) +
              ", fewer tensors " + std::to_string(shrank) + ", more tensors " + std::to_string(grew)};
}

// ---- scaling ------------------------------------------------------------------------

Outcome scaling() {
  std::mt19937_64 rng(1001);
  // A 4-cycle of 192x192 matrices carrying six binary labels: 64 slices of
  // matrix products each.
  const Extent big = 192;
  TensorNetwork tn;
  std::vector<Label> m, s;
  for (int i = 0; i < 4; ++i) m.push_back(tn.add_label("m" + std::to_string(i), big));
  for (int i = 0; i < 6; ++i) s.push_back(tn.add_label("s" + std::to_string(i), 2));
  const std::vector<std::vector<Label>> modes{{m[0], m[1], s[0], s[1], s[2]},
                                             {m[1], m[2], s[3], s[4], s[5]},
                                             {m[2], m[3], s[0], s[1], s[2]},
                                             {m[3], m[0], s[3], s[4], s[5]}};
  for (const auto& md : modes) tn.add_tensor(md, TensorData(oracle::random_data(big * big * 8, rng) / static_cast<double>(big)));
  auto tree = greedy_path(tn);
  tree.sliced = s;
  const auto plan = make_plan(tn, tree);
  if (plan.slices != 64) return {false, "expected 64 slices, got " + fmt(plan.slices)};

  auto timed = [&](int workers, Tensor& out) {
    std::vector<WorkspaceArena> arenas(static_cast<std::size_t>(workers));
    double best = INFINITY;
    for (int rep = 0; rep < 2; ++rep) {
      const auto t0 = Clock::now();
      out = contract_distributed(plan, tn, arenas, workers);
      best = std::min(best, std::chrono::duration<double>(Clock::now() - t0).count());
    }
    return best;
  };
  Tensor one, eight;
  const double t1 = timed(1, one), t8 = timed(8, eight);
  const double diff = max_diff(one.data, eight.data);
  const double speedup = t1 / t8;
  return {speedup >= 4 && diff == 0, "1 worker " + fmt(t1) + " s, 8 workers " + fmt(t8) + " s, speedup " + fmt(speedup) +
                                         "x, |diff| " + fmt(diff) + ", hardware threads " +
                                         std::to_string(std::thread::hardware_concurrency())};
}

Outcome gate_counts() {
  const auto qft = gen_qft(33).size();
  const auto qv = gen_qv(33, 30, 0).size();
  return {qft == 577 && qv == 480, "qft(33) " + std::to_string(qft) + ", qv(33, 30) " + std::to_string(qv)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {"gate-counts", 1, gate_counts},      {"sv-oracle", 120, sv_oracle},    {"fusion", 120, fusion},
      {"distributed", 60, distributed},     {"path-quality", 300, path_quality}, {"slicing", 180, slicing},
      {"caching", 180, caching},            {"decomposition", 120, decomposition}, {"mps", 300, mps},
      {"converter", 180, converter},        {"scaling", 120, scaling},
  };
  const std::set<std::string> only(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.name)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
    const bool pass = o.pass && elapsed < c.limit_s;
    failed += !pass;
    std::cout << (pass ? "PASS " : "FAIL ") << std::left << std::setw(14) << c.name << o.detail << "; " << fmt(elapsed) << " s (limit "
              << c.limit_s << " s)" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
