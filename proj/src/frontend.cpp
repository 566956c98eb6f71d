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

#include "qsimkit/frontend.hpp"

#include "qsimkit/exec.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <iterator>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace qsimkit {

namespace {

using json = nlohmann::json;
using gates::Matrix;

struct GateSpec {
  int qubits;
  int params;
};

const std::map<std::string, GateSpec>& gate_specs() {
  static const std::map<std::string, GateSpec> specs{
      {"h", {1, 0}},     {"x", {1, 0}},    {"y", {1, 0}},      {"z", {1, 0}},  {"s", {1, 0}},
      {"sdg", {1, 0}},   {"t", {1, 0}},    {"tdg", {1, 0}},    {"rx", {1, 1}}, {"ry", {1, 1}},
      {"rz", {1, 1}},    {"phase", {1, 1}}, {"cx", {2, 0}},    {"cz", {2, 0}}, {"cphase", {2, 1}},
      {"swap", {2, 0}},  {"rzz", {2, 1}},
  };
  return specs;
}

bool is_unitary(const Matrix& m) {
  return (m.adjoint() * m - Matrix::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff() < 1e-10;
}

// All qubits an operation touches: targets, then controls.
std::vector<QubitIndex> op_qubits(const Operation& op) {
  std::vector<QubitIndex> qs = op.targets;
  for (const auto& c : op.controls) qs.push_back(c.qubit);
  return qs;
}

// Matrix over targets followed by controls.
Matrix full_matrix(const Operation& op) {
  const Matrix m = operation_matrix(op);
  const int k = static_cast<int>(op.targets.size());
  const Eigen::Index dim = Eigen::Index{1} << (op.targets.size() + op.controls.size());
  Matrix out = Matrix::Identity(dim, dim);
  Eigen::Index want = 0;
  for (std::size_t c = 0; c < op.controls.size(); ++c) {
    if (op.controls[c].value) want |= Eigen::Index{1} << (k + static_cast<int>(c));
  }
  out.block(want, want, m.rows(), m.cols()) = m;
  return out;
}

// Uniform integer in [0, n) from a 64-bit engine; the bias is below 2^-40
// for the sizes used here.
std::uint64_t below(std::mt19937_64& rng, std::uint64_t n) { return rng() % n; }

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

gates::Matrix operation_matrix(const Operation& op) {
  if (op.name == "matrix") {
    if (!op.matrix) throw std::invalid_argument("matrix operation without a matrix");
    const Eigen::Index dim = Eigen::Index{1} << op.targets.size();
    if (op.matrix->rows() != dim || op.matrix->cols() != dim) throw std::invalid_argument("matrix size does not match targets");
    return *op.matrix;
  }
  const auto it = gate_specs().find(op.name);
  if (it == gate_specs().end()) throw std::invalid_argument("unknown gate '" + op.name + "'");
  if (static_cast<int>(op.targets.size()) != it->second.qubits) throw std::invalid_argument("wrong target count for " + op.name);
  if (static_cast<int>(op.params.size()) != it->second.params) throw std::invalid_argument("wrong parameter count for " + op.name);
  for (double p : op.params) {
    if (!std::isfinite(p)) throw std::invalid_argument("gate parameters must be finite");
  }
  const double a = op.params.empty() ? 0.0 : op.params[0];
  const double pi = std::numbers::pi;
  const std::string& n = op.name;
  if (n == "h") return gates::hadamard();
  if (n == "x") return gates::pauli_x();
  if (n == "y") return gates::pauli_y();
  if (n == "z") return gates::pauli_z();
  if (n == "s") return gates::phase(pi / 2);
  if (n == "sdg") return gates::phase(-pi / 2);
  if (n == "t") return gates::phase(pi / 4);
  if (n == "tdg") return gates::phase(-pi / 4);
  if (n == "rx") return gates::rx(a);
  if (n == "ry") return gates::ry(a);
  if (n == "rz") return gates::rz(a);
  if (n == "phase") return gates::phase(a);
  if (n == "cx") return gates::cnot();
  if (n == "cz") return gates::cz();
  if (n == "swap") return gates::swap();
  if (n == "rzz") return gates::rzz(a);
  Matrix m = Matrix::Identity(4, 4);  // cphase
  m(3, 3) = std::polar(1.0, a);
  return m;
}

void Circuit::validate() const {
  if (num_qubits < 1) throw std::invalid_argument("a circuit needs at least one qubit");
  for (const auto& op : ops) {
    if (op.targets.empty()) throw std::invalid_argument("operation without targets");
    const auto qs = op_qubits(op);
    for (auto q : qs) {
      if (q < 0 || q >= num_qubits) throw std::invalid_argument("qubit index out of range in " + op.name);
    }
    if (std::set<QubitIndex>(qs.begin(), qs.end()).size() != qs.size()) throw std::invalid_argument("repeated qubit in " + op.name);
    for (const auto& c : op.controls) {
      if (c.value != 0 && c.value != 1) throw std::invalid_argument("control value must be 0 or 1");
    }
    operation_matrix(op);
  }
}

DenseGate<double> to_dense_gate(const Operation& op) {
  Matrix m = operation_matrix(op);
  const bool unitary = op.name != "matrix" || is_unitary(m);
  return make_dense_gate(std::move(m), op.targets, op.controls, unitary);
}

std::vector<Gate> to_gates(const Circuit& c) {
  c.validate();
  std::vector<Gate> out;
  out.reserve(c.ops.size());
  for (const auto& op : c.ops) out.emplace_back(to_dense_gate(op));
  return out;
}

Circuit gen_qft(int n) {
  if (n < 1) throw std::invalid_argument("QFT needs at least one qubit");
  Circuit c;
  c.num_qubits = n;
  for (int j = n - 1; j >= 0; --j) {
    c.ops.push_back({"h", {}, {j}, {}, {}});
    for (int k = j - 1; k >= 0; --k) {
      c.ops.push_back({"cphase", {std::numbers::pi / std::ldexp(1.0, j - k)}, {k, j}, {}, {}});
    }
  }
  for (int j = 0; j < n / 2; ++j) c.ops.push_back({"swap", {}, {j, n - 1 - j}, {}, {}});
  return c;
}

Circuit gen_qv(int n, int depth, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("QV needs at least one qubit");
  if (depth < 0) throw std::invalid_argument("depth must be non-negative");
  std::mt19937_64 rng(seed);
  Circuit c;
  c.num_qubits = n;
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int layer = 0; layer < depth; ++layer) {
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[below(rng, i)]);
    for (std::size_t i = 0; i + 1 < perm.size(); i += 2) {
      Operation op{"matrix", {}, {perm[i], perm[i + 1]}, {}, gates::random_special_unitary(2, rng)};
      c.ops.push_back(std::move(op));
    }
  }
  return c;
}

void Graph::validate() const {
  if (num_nodes < 1) throw std::invalid_argument("graph needs at least one node");
  std::set<std::pair<int, int>> seen;
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= num_nodes || b >= num_nodes) throw std::invalid_argument("edge endpoint out of range");
    if (a == b) throw std::invalid_argument("self-loop in graph");
    if (!seen.insert(std::minmax(a, b)).second) throw std::invalid_argument("duplicate edge in graph");
  }
  if (!weights.empty() && weights.size() != edges.size()) throw std::invalid_argument("one weight per edge required");
  for (double w : weights) {
    if (!std::isfinite(w)) throw std::invalid_argument("edge weights must be finite");
  }
}

Graph random_graph(int num_nodes, double edge_probability, std::uint64_t seed) {
  if (!(edge_probability >= 0 && edge_probability <= 1)) throw std::invalid_argument("edge probability must be in [0, 1]");
  std::mt19937_64 rng(seed);
  Graph g;
  g.num_nodes = num_nodes;
  for (int a = 0; a < num_nodes; ++a) {
    for (int b = a + 1; b < num_nodes; ++b) {
      if (uniform01(rng) < edge_probability) g.edges.emplace_back(a, b);
    }
  }
  g.validate();
  return g;
}

Circuit gen_qaoa_maxcut(const Graph& graph, int p, std::span<const double> params, std::uint64_t seed) {
  graph.validate();
  if (p < 1) throw std::invalid_argument("QAOA needs p >= 1");
  std::vector<double> angles(params.begin(), params.end());
  if (angles.empty()) {
    std::mt19937_64 rng(seed);
    for (int i = 0; i < p; ++i) angles.push_back(uniform01(rng) * std::numbers::pi);
    for (int i = 0; i < p; ++i) angles.push_back(uniform01(rng) * std::numbers::pi / 2);
  }
  if (angles.size() != static_cast<std::size_t>(2 * p)) throw std::invalid_argument("QAOA needs 2p angles");
  Circuit c;
  c.num_qubits = graph.num_nodes;
  for (int q = 0; q < graph.num_nodes; ++q) c.ops.push_back({"h", {}, {q}, {}, {}});
  for (int layer = 0; layer < p; ++layer) {
    const double gamma = angles[static_cast<std::size_t>(layer)];
    const double beta = angles[static_cast<std::size_t>(p + layer)];
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
      const double w = graph.weights.empty() ? 1.0 : graph.weights[e];
      c.ops.push_back({"rzz", {2 * gamma * w}, {graph.edges[e].first, graph.edges[e].second}, {}, {}});
    }
    for (int q = 0; q < graph.num_nodes; ++q) c.ops.push_back({"rx", {2 * beta}, {q}, {}, {}});
  }
  return c;
}

std::string circuit_to_json(const Circuit& c) {
  json ops = json::array();
  for (const auto& op : c.ops) {
    json j{{"name", op.name}, {"targets", op.targets}};
    if (!op.params.empty()) j["params"] = op.params;
    if (!op.controls.empty()) {
      json cs = json::array();
      for (const auto& ctl : op.controls) {
        if (ctl.value == 1) {
          cs.push_back(ctl.qubit);
        } else {
          cs.push_back(json::array({ctl.qubit, ctl.value}));
        }
      }
      j["controls"] = cs;
    }
    if (op.matrix) {
      json m = json::array();
      for (Eigen::Index r = 0; r < op.matrix->rows(); ++r) {
        for (Eigen::Index col = 0; col < op.matrix->cols(); ++col) {
          const cplx v = (*op.matrix)(r, col);
          m.push_back(json::array({v.real(), v.imag()}));
        }
      }
      j["matrix"] = m;
    }
    ops.push_back(std::move(j));
  }
  return json{{"n", c.num_qubits}, {"ops", ops}}.dump();
}

Circuit circuit_from_json(const std::string& text) {
  Circuit c;
  try {
    const json j = json::parse(text);
    c.num_qubits = j.at("n").get<int>();
    for (const auto& jo : j.at("ops")) {
      Operation op;
      op.name = jo.at("name").get<std::string>();
      op.targets = jo.at("targets").get<std::vector<QubitIndex>>();
      if (jo.contains("params")) op.params = jo["params"].get<std::vector<double>>();
      if (jo.contains("controls")) {
        for (const auto& jc : jo["controls"]) {
          if (jc.is_array()) {
            op.controls.push_back({jc.at(0).get<int>(), jc.at(1).get<int>()});
          } else {
            op.controls.push_back({jc.get<int>(), 1});
          }
        }
      }
      if (jo.contains("matrix")) {
        const auto& jm = jo["matrix"];
        const auto side = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(jm.size()))));
        if (side * side != static_cast<Eigen::Index>(jm.size())) throw std::invalid_argument("matrix must be square");
        Matrix m(side, side);
        for (Eigen::Index k = 0; k < side * side; ++k) {
          const auto& v = jm.at(static_cast<std::size_t>(k));
          m(k / side, k % side) = cplx(v.at(0).get<double>(), v.at(1).get<double>());
        }
        op.matrix = std::move(m);
      }
      c.ops.push_back(std::move(op));
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad circuit JSON: ") + e.what());
  }
  c.validate();
  return c;
}

Circuit load_circuit(std::istream& is) {
  return circuit_from_json(std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()));
}

ConversionTarget ConversionTarget::state_vector() { return {}; }

ConversionTarget ConversionTarget::amplitude(std::string bits) {
  ConversionTarget t;
  t.kind = Kind::kAmplitude;
  t.bits = std::move(bits);
  return t;
}

ConversionTarget ConversionTarget::batched(std::string pattern) {
  ConversionTarget t;
  t.kind = Kind::kBatchedAmplitudes;
  t.bits = std::move(pattern);
  return t;
}

ConversionTarget ConversionTarget::rdm(std::vector<QubitIndex> kept, std::map<QubitIndex, int> projected) {
  ConversionTarget t;
  t.kind = Kind::kRdm;
  t.kept = std::move(kept);
  t.projected = std::move(projected);
  return t;
}

ConversionTarget ConversionTarget::expectation(std::vector<PauliString> paulis) {
  ConversionTarget t;
  t.kind = Kind::kExpectation;
  t.paulis = std::move(paulis);
  return t;
}

namespace {

using Kind = ConversionTarget::Kind;

void validate_target(const Circuit& c, const ConversionTarget& t) {
  const int n = c.num_qubits;
  auto check_qubit = [&](QubitIndex q) {
    if (q < 0 || q >= n) throw std::invalid_argument("target qubit out of range");
  };
  switch (t.kind) {
    case Kind::kStateVector:
      break;
    case Kind::kAmplitude:
    case Kind::kBatchedAmplitudes: {
      if (static_cast<int>(t.bits.size()) != n) throw std::invalid_argument("bitstring length must equal the qubit count");
      const std::string allowed = t.kind == Kind::kAmplitude ? "01" : "01*";
      if (t.bits.find_first_not_of(allowed) != std::string::npos) throw std::invalid_argument("bad character in bitstring");
      break;
    }
    case Kind::kRdm: {
      std::set<QubitIndex> seen;
      for (auto q : t.kept) {
        check_qubit(q);
        if (!seen.insert(q).second) throw std::invalid_argument("repeated kept qubit");
      }
      for (auto [q, v] : t.projected) {
        check_qubit(q);
        if (seen.count(q)) throw std::invalid_argument("qubit both kept and projected");
        if (v != 0 && v != 1) throw std::invalid_argument("projected value must be 0 or 1");
      }
      break;
    }
    case Kind::kExpectation:
      if (t.paulis.empty()) throw std::invalid_argument("expectation needs at least one Pauli string");
      for (const auto& p : t.paulis) {
        std::set<QubitIndex> seen;
        for (const auto& f : p.factors) {
          check_qubit(f.qubit);
          if (!seen.insert(f.qubit).second) throw std::invalid_argument("repeated qubit in Pauli string");
        }
      }
      break;
  }
  if (t.lightcone && (t.kind != Kind::kRdm && t.kind != Kind::kExpectation)) {
    throw std::invalid_argument("lightcone applies to rdm and expectation targets only");
  }
}

Matrix pauli_matrix(Pauli p) {
  switch (p) {
    case Pauli::X:
      return gates::pauli_x();
    case Pauli::Y:
      return gates::pauli_y();
    case Pauli::Z:
      return gates::pauli_z();
    case Pauli::I:
      break;
  }
  return gates::identity(1);
}

// Tensors over integer wire ids; wires are merged, then named, at the end.
class Staging {
 public:
  int wire() {
    parent_.push_back(static_cast<int>(parent_.size()));
    extent_.push_back(2);
    return static_cast<int>(parent_.size()) - 1;
  }
  int wire(Extent extent) {
    const int w = wire();
    extent_[static_cast<std::size_t>(w)] = extent;
    return w;
  }
  void merge(int a, int b) { parent_[static_cast<std::size_t>(find(a))] = find(b); }
  void add(std::vector<int> wires, TensorData data, bool constant) { tensors_.push_back({std::move(wires), std::move(data), constant}); }

  TensorNetwork build(const std::vector<int>& output) {
    TensorNetwork tn;
    std::map<int, Label> labels;
    auto label = [&](int w) {
      const int r = find(w);
      auto it = labels.find(r);
      if (it == labels.end()) {
        const Label l = tn.add_label("w" + std::to_string(labels.size()), extent_[static_cast<std::size_t>(r)]);
        it = labels.emplace(r, l).first;
      }
      return it->second;
    };
    for (auto& t : tensors_) {
      std::vector<Label> modes;
      for (int w : t.wires) modes.push_back(label(w));
      tn.add_tensor(std::move(modes), std::move(t.data), t.constant);
    }
    std::vector<Label> out;
    for (int w : output) out.push_back(label(w));
    tn.set_output(std::move(out));
    return tn;
  }

 private:
  struct Staged {
    std::vector<int> wires;
    TensorData data;
    bool constant;
  };
  int find(int w) {
    while (parent_[static_cast<std::size_t>(w)] != w) {
      parent_[static_cast<std::size_t>(w)] = parent_[static_cast<std::size_t>(parent_[static_cast<std::size_t>(w)])];
      w = parent_[static_cast<std::size_t>(w)];
    }
    return w;
  }

  std::vector<int> parent_;
  std::vector<Extent> extent_;
  std::vector<Staged> tensors_;
};

TensorData basis(int value) {
  TensorData d = TensorData::Zero(2);
  d(value) = 1;
  return d;
}

// Applies every operation to one copy of the wires; `conjugate` builds the bra.
void add_gates(Staging& st, const Circuit& c, std::vector<int>& wires, bool conjugate) {
  for (const auto& op : c.ops) {
    const auto qs = op_qubits(op);
    Matrix m = full_matrix(op);
    if (conjugate) m = m.conjugate().eval();
    const auto k = qs.size();
    // Modes: outputs then inputs, each from the last listed qubit to the
    // first, so the row-major flat index is out * 2^k + in.
    std::vector<int> modes(2 * k);
    for (std::size_t j = 0; j < k; ++j) {
      const auto q = static_cast<std::size_t>(qs[j]);
      modes[k + (k - 1 - j)] = wires[q];
      wires[q] = st.wire();
      modes[k - 1 - j] = wires[q];
    }
    const Eigen::Index dim = m.rows();
    TensorData d(dim * dim);
    for (Eigen::Index o = 0; o < dim; ++o) {
      for (Eigen::Index i = 0; i < dim; ++i) d(o * dim + i) = m(o, i);
    }
    st.add(std::move(modes), std::move(d), true);
  }
}

TensorNetwork build_network(const Circuit& c, const ConversionTarget& t, const std::vector<bool>& active) {
  const int n = c.num_qubits;
  Staging st;
  std::vector<int> ket(static_cast<std::size_t>(n), -1), bra(static_cast<std::size_t>(n), -1);
  const bool doubled = t.kind == Kind::kRdm || t.kind == Kind::kExpectation;
  for (int q = 0; q < n; ++q) {
    if (!active[static_cast<std::size_t>(q)]) continue;
    ket[static_cast<std::size_t>(q)] = st.wire();
    st.add({ket[static_cast<std::size_t>(q)]}, basis(0), false);
    if (doubled) {
      bra[static_cast<std::size_t>(q)] = st.wire();
      st.add({bra[static_cast<std::size_t>(q)]}, basis(0), false);
    }
  }
  add_gates(st, c, ket, false);
  if (doubled) add_gates(st, c, bra, true);

  std::vector<int> output;
  auto bit_of = [&](int q) { return t.bits[static_cast<std::size_t>(n - 1 - q)]; };
  switch (t.kind) {
    case Kind::kStateVector:
      for (int q = n - 1; q >= 0; --q) output.push_back(ket[static_cast<std::size_t>(q)]);
      break;
    case Kind::kAmplitude:
    case Kind::kBatchedAmplitudes:
      for (int q = n - 1; q >= 0; --q) {
        const char b = bit_of(q);
        if (b == '*') {
          output.push_back(ket[static_cast<std::size_t>(q)]);
        } else {
          st.add({ket[static_cast<std::size_t>(q)]}, basis(b - '0'), false);
        }
      }
      break;
    case Kind::kRdm: {
      std::vector<QubitIndex> kept = t.kept;
      std::sort(kept.rbegin(), kept.rend());
      for (auto q : kept) output.push_back(ket[static_cast<std::size_t>(q)]);
      for (auto q : kept) output.push_back(bra[static_cast<std::size_t>(q)]);
      for (int q = 0; q < n; ++q) {
        const auto uq = static_cast<std::size_t>(q);
        if (!active[uq] || std::count(kept.begin(), kept.end(), q)) continue;
        if (const auto it = t.projected.find(q); it != t.projected.end()) {
          st.add({ket[uq]}, basis(it->second), false);
          st.add({bra[uq]}, basis(it->second), false);
        } else {
          st.merge(bra[uq], ket[uq]);
        }
      }
      break;
    }
    case Kind::kExpectation: {
      const auto terms = static_cast<Extent>(t.paulis.size());
      const int term = st.wire(terms);
      TensorData coef(terms);
      for (Extent i = 0; i < terms; ++i) coef(i) = t.paulis[static_cast<std::size_t>(i)].coefficient;
      st.add({term}, std::move(coef), false);
      output.push_back(term);
      for (int q = 0; q < n; ++q) {
        const auto uq = static_cast<std::size_t>(q);
        if (!active[uq]) continue;
        std::vector<Pauli> ops(t.paulis.size(), Pauli::I);
        bool touched = false;
        for (std::size_t i = 0; i < t.paulis.size(); ++i) {
          for (const auto& f : t.paulis[i].factors) {
            if (f.qubit == q && f.op != Pauli::I) {
              ops[i] = f.op;
              touched = true;
            }
          }
        }
        if (!touched) {
          st.merge(bra[uq], ket[uq]);
          continue;
        }
        // P[term, bra, ket] = <x| P_term |y>.
        TensorData d(terms * 4);
        for (Extent i = 0; i < terms; ++i) {
          const Matrix p = pauli_matrix(ops[static_cast<std::size_t>(i)]);
          for (int x = 0; x < 2; ++x) {
            for (int y = 0; y < 2; ++y) d(i * 4 + x * 2 + y) = p(x, y);
          }
        }
        st.add({term, bra[uq], ket[uq]}, std::move(d), false);
      }
      break;
    }
  }
  return st.build(output);
}

}  // namespace

std::vector<QubitIndex> observed_qubits(const Circuit& c, const ConversionTarget& t) {
  std::set<QubitIndex> s;
  switch (t.kind) {
    case Kind::kRdm:
      s.insert(t.kept.begin(), t.kept.end());
      for (auto [q, v] : t.projected) s.insert(q);
      break;
    case Kind::kExpectation:
      for (const auto& p : t.paulis) {
        for (const auto& f : p.factors) {
          if (f.op != Pauli::I) s.insert(f.qubit);
        }
      }
      break;
    default:
      for (int q = 0; q < c.num_qubits; ++q) s.insert(q);
  }
  return {s.begin(), s.end()};
}

Circuit lightcone_circuit(const Circuit& c, const ConversionTarget& t) {
  c.validate();
  validate_target(c, t);
  const auto obs = observed_qubits(c, t);
  std::vector<bool> cone(static_cast<std::size_t>(c.num_qubits), false);
  for (auto q : obs) cone[static_cast<std::size_t>(q)] = true;
  std::vector<const Operation*> kept;
  for (auto it = c.ops.rbegin(); it != c.ops.rend(); ++it) {
    const auto qs = op_qubits(*it);
    bool inside = std::any_of(qs.begin(), qs.end(), [&](QubitIndex q) { return cone[static_cast<std::size_t>(q)]; });
    // Only a unitary cancels against its conjugate.
    if (!inside && it->name == "matrix" && !is_unitary(operation_matrix(*it))) inside = true;
    if (!inside) continue;
    for (auto q : qs) cone[static_cast<std::size_t>(q)] = true;
    kept.push_back(&*it);
  }
  Circuit out;
  out.num_qubits = c.num_qubits;
  for (auto it = kept.rbegin(); it != kept.rend(); ++it) out.ops.push_back(**it);
  return out;
}

TensorNetwork circuit_to_network(const Circuit& c, const ConversionTarget& t) {
  c.validate();
  validate_target(c, t);
  if (t.lightcone) return apply_lightcone(c, t);
  return build_network(c, t, std::vector<bool>(static_cast<std::size_t>(c.num_qubits), true));
}

TensorNetwork apply_lightcone(const Circuit& c, const ConversionTarget& t) {
  if (t.kind != Kind::kRdm && t.kind != Kind::kExpectation) {
    throw std::invalid_argument("lightcone applies to rdm and expectation targets only");
  }
  const Circuit cone = lightcone_circuit(c, t);
  std::vector<bool> active(static_cast<std::size_t>(c.num_qubits), false);
  for (auto q : observed_qubits(c, t)) active[static_cast<std::size_t>(q)] = true;
  for (const auto& op : cone.ops) {
    for (auto q : op_qubits(op)) active[static_cast<std::size_t>(q)] = true;
  }
  return build_network(cone, t, active);
}

Tensor contract_network(const TensorNetwork& tn, const OptimizerConfig& cfg) {
  if (tn.num_tensors() == 0) throw std::invalid_argument("empty network");
  if (tn.num_tensors() == 1) return reduce_to(tn.tensor(0), tn.output());
  const OptimizerResult path = find_path(tn, cfg);
  const ContractionPlan plan = make_plan(tn, path);
  WorkspaceArena arena;
  return reduce_to(contract(plan, tn, arena), tn.output());
}

}  // namespace qsimkit
