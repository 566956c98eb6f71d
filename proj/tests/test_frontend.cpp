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

#include "doctest.h"

#include "circuit_oracles.hpp"
#include "qsimkit/frontend.hpp"
#include "qsimkit/statevec.hpp"

#include <numbers>
#include <random>
#include <set>
#include <sstream>

using namespace qsimkit;
using oracle::rdm_oracle;
using oracle::simulate;

namespace {

const double kInvSqrt2 = 1 / std::numbers::sqrt2;

Circuit bell() {
  Circuit c;
  c.num_qubits = 2;
  c.ops.push_back({"h", {}, {0}, {}, {}});
  c.ops.push_back({"cx", {}, {0, 1}, {}, {}});
  return c;
}

PauliString random_pauli(int n, std::mt19937_64& rng) {
  std::string s(static_cast<std::size_t>(n), 'I');
  for (auto& ch : s) ch = "IXYZ"[rng() % 4];
  return PauliString::from_string(s, cplx(0.5 + static_cast<double>(rng() % 3), 0.25));
}

// Path quality is irrelevant here; two samples keep the suite fast.
Tensor run(const TensorNetwork& tn) {
  OptimizerConfig cfg;
  cfg.num_hyper_samples = 2;
  return contract_network(tn, cfg);
}

double max_diff(const TensorData& a, const TensorData& b) {
  REQUIRE(a.size() == b.size());
  return (a - b).cwiseAbs().maxCoeff();
}

cplx pauli_oracle(const Circuit& c, const PauliString& p) {
  StateVector<double> sv(c.num_qubits);
  for (const auto& g : to_gates(c)) apply_gate(sv, g);
  const std::vector<PauliString> one{p};
  return expectation(sv, std::span<const PauliString>(one));
}

}  // namespace

TEST_CASE("generator gate counts") {
  CHECK(gen_qft(33).size() == 577);
  CHECK(gen_qv(33, 30, 0).size() == 480);
  CHECK(gen_qv(33, 30, 7).size() == 480);
  CHECK(gen_qft(20).size() == 220);
  for (int n = 1; n <= 12; ++n) CHECK(gen_qft(n).size() == static_cast<std::size_t>(n + n * (n - 1) / 2 + n / 2));

  const Circuit one = gen_qft(1);
  REQUIRE(one.size() == 1);
  const TensorData plus = simulate(one);
  CHECK(std::abs(plus(0) - kInvSqrt2) < 1e-15);
  CHECK(std::abs(plus(1) - kInvSqrt2) < 1e-15);
}

TEST_CASE("QFT is the discrete Fourier transform") {
  for (int n = 1; n <= 10; ++n) {
    const TensorData zero = simulate(gen_qft(n));
    const double u = 1 / std::sqrt(std::ldexp(1.0, n));
    CHECK((zero.array() - cplx(u)).abs().maxCoeff() < 1e-12);
  }
  // Basis inputs against the DFT definition.
  const int n = 5;
  const BasisIndex size = BasisIndex{1} << n;
  for (BasisIndex x : {BasisIndex{1}, BasisIndex{6}, BasisIndex{19}, BasisIndex{31}}) {
    Circuit c;
    c.num_qubits = n;
    for (int q = 0; q < n; ++q) {
      if ((x >> q) & 1u) c.ops.push_back({"x", {}, {q}, {}, {}});
    }
    const Circuit f = gen_qft(n);
    c.ops.insert(c.ops.end(), f.ops.begin(), f.ops.end());
    const TensorData out = simulate(c);
    for (BasisIndex y = 0; y < size; ++y) {
      const double angle = 2 * std::numbers::pi * static_cast<double>(x * y) / static_cast<double>(size);
      CHECK(std::abs(out(static_cast<Eigen::Index>(y)) - std::polar(1 / std::sqrt(static_cast<double>(size)), angle)) < 1e-12);
    }
  }
}

TEST_CASE("QV structure") {
  const Circuit a = gen_qv(9, 6, 3), b = gen_qv(9, 6, 3), c = gen_qv(9, 6, 4);
  CHECK(circuit_to_json(a) == circuit_to_json(b));
  CHECK(circuit_to_json(a) != circuit_to_json(c));
  REQUIRE(a.size() == 24);
  for (int layer = 0; layer < 6; ++layer) {
    std::set<int> used;
    for (int g = 0; g < 4; ++g) {
      const auto& op = a.ops[static_cast<std::size_t>(layer * 4 + g)];
      REQUIRE(op.matrix);
      CHECK(std::abs(op.matrix->determinant() - cplx(1)) < 1e-12);
      CHECK((op.matrix->adjoint() * *op.matrix - gates::Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);
      for (auto q : op.targets) CHECK(used.insert(q).second);
    }
  }
  for (int n = 1; n <= 10; ++n) CHECK(simulate(gen_qv(n, 5, 1)).squaredNorm() == doctest::Approx(1).epsilon(1e-12));
}

TEST_CASE("QAOA") {
  Graph g;
  g.num_nodes = 4;
  g.edges = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {0, 2}};
  g.weights = {1, 0.5, 2, 1, -1};
  const std::vector<double> params{0.3, -0.7, 0.4, 1.1};
  const Circuit c = gen_qaoa_maxcut(g, 2, params);
  CHECK(c.size() == static_cast<std::size_t>(4 + 2 * (5 + 4)));

  // exp(-i beta sum X) exp(-i gamma C) ... |+>, built directly.
  const Eigen::Index dim = 16;
  TensorData psi = TensorData::Constant(dim, cplx(0.25));
  for (int layer = 0; layer < 2; ++layer) {
    for (Eigen::Index x = 0; x < dim; ++x) {
      double cost = 0;
      for (std::size_t e = 0; e < g.edges.size(); ++e) {
        const int za = ((x >> g.edges[e].first) & 1) ? -1 : 1, zb = ((x >> g.edges[e].second) & 1) ? -1 : 1;
        cost += g.weights[e] * za * zb;
      }
      psi(x) *= std::polar(1.0, -params[static_cast<std::size_t>(layer)] * cost);
    }
    const double beta = params[static_cast<std::size_t>(2 + layer)];
    for (int q = 0; q < 4; ++q) {
      TensorData next = psi;
      for (Eigen::Index x = 0; x < dim; ++x) next(x) = std::cos(beta) * psi(x) + cplx(0, -std::sin(beta)) * psi(x ^ (1 << q));
      psi = next;
    }
  }
  CHECK(max_diff(simulate(c), psi) < 1e-12);

  CHECK(gen_qaoa_maxcut(g, 3, {}, 5).size() == static_cast<std::size_t>(4 + 3 * 9));
  CHECK(circuit_to_json(gen_qaoa_maxcut(g, 1, {}, 5)) == circuit_to_json(gen_qaoa_maxcut(g, 1, {}, 5)));
  Graph bad = g;
  bad.edges.push_back({1, 1});
  CHECK_THROWS_AS(gen_qaoa_maxcut(bad, 1), std::invalid_argument);
  bad = g;
  bad.edges.push_back({2, 1});
  CHECK_THROWS_AS(gen_qaoa_maxcut(bad, 1), std::invalid_argument);
  bad = g;
  bad.edges.push_back({0, 4});
  CHECK_THROWS_AS(gen_qaoa_maxcut(bad, 1), std::invalid_argument);
  CHECK_THROWS_AS(gen_qaoa_maxcut(g, 2, std::vector<double>{1.0}), std::invalid_argument);
  const Graph r = random_graph(12, 0.3, 1);
  CHECK_NOTHROW(r.validate());
  CHECK(random_graph(12, 0.3, 1).edges == r.edges);
}

TEST_CASE("circuit JSON") {
  std::mt19937_64 rng(1);
  const Circuit c = oracle::random_named_circuit(5, 40, rng);
  const Circuit back = circuit_from_json(circuit_to_json(c));
  CHECK(circuit_to_json(back) == circuit_to_json(c));
  CHECK(max_diff(simulate(back), simulate(c)) == 0);

  std::istringstream in(R"({"n": 3, "ops": [{"name": "h", "targets": [0]},
      {"name": "x", "targets": [2], "controls": [0, [1, 0]]},
      {"name": "matrix", "targets": [1], "matrix": [[0, 0], [1, 0], [1, 0], [0, 0]]}]})");
  const Circuit parsed = load_circuit(in);
  CHECK(parsed.ops[1].controls[1].value == 0);
  const TensorData v = simulate(parsed);
  // H(0); X(2) if q0=1 and q1=0; X(1).
  CHECK(std::abs(v(0b010) - kInvSqrt2) < 1e-15);
  CHECK(std::abs(v(0b111) - kInvSqrt2) < 1e-15);

  CHECK_THROWS_AS(circuit_from_json(R"({"n": 2, "ops": [{"name": "h", "targets": [2]}]})"), std::invalid_argument);
  CHECK_THROWS_AS(circuit_from_json(R"({"n": 2, "ops": [{"name": "cx", "targets": [0, 0]}]})"), std::invalid_argument);
  CHECK_THROWS_AS(circuit_from_json(R"({"n": 2, "ops": [{"name": "rx", "targets": [0]}]})"), std::invalid_argument);
  CHECK_THROWS_AS(circuit_from_json(R"({"n": 2, "ops": [{"name": "warp", "targets": [0]}]})"), std::invalid_argument);
  CHECK_THROWS_AS(circuit_from_json(R"({"n": 2, "ops": [)"), std::invalid_argument);
  CHECK_THROWS_AS(circuit_from_json(R"({"n": 2, "ops": [{"name": "matrix", "targets": [0], "matrix": [[1, 0]]}]})"),
                  std::invalid_argument);
}

TEST_CASE("Bell conversions") {
  const Circuit c = bell();
  const Tensor a = run(circuit_to_network(c, ConversionTarget::amplitude("00")));
  CHECK(std::abs(a.data(0) - kInvSqrt2) < 1e-15);
  CHECK(std::abs(run(circuit_to_network(c, ConversionTarget::amplitude("01"))).data(0)) < 1e-15);
  const Tensor rho = run(circuit_to_network(c, ConversionTarget::rdm({0})));
  REQUIRE(rho.data.size() == 4);
  CHECK(std::abs(rho.data(0) - 0.5) < 1e-15);
  CHECK(std::abs(rho.data(1)) < 1e-15);
  CHECK(std::abs(rho.data(2)) < 1e-15);
  CHECK(std::abs(rho.data(3) - 0.5) < 1e-15);
  const Tensor zz = run(
      circuit_to_network(c, ConversionTarget::expectation({PauliString::from_string("ZZ"), PauliString::from_string("XI")})));
  CHECK(std::abs(zz.data(0) - 1.0) < 1e-15);
  CHECK(std::abs(zz.data(1)) < 1e-15);

  const TensorNetwork sv = circuit_to_network(c, ConversionTarget::state_vector());
  CHECK(sv.num_tensors() == 4);  // two inputs, two gates
  CHECK(to_einsum(sv).find("->") != std::string::npos);

  CHECK_THROWS_AS(circuit_to_network(c, ConversionTarget::amplitude("0")), std::invalid_argument);
  CHECK_THROWS_AS(circuit_to_network(c, ConversionTarget::batched("0x")), std::invalid_argument);
  CHECK_THROWS_AS(circuit_to_network(c, ConversionTarget::rdm({0, 0})), std::invalid_argument);
  CHECK_THROWS_AS(circuit_to_network(c, ConversionTarget::rdm({0}, {{0, 1}})), std::invalid_argument);
  CHECK_THROWS_AS(circuit_to_network(c, ConversionTarget::expectation({})), std::invalid_argument);
  auto amp = ConversionTarget::amplitude("00");
  amp.lightcone = true;
  CHECK_THROWS_AS(circuit_to_network(c, amp), std::invalid_argument);
}

TEST_CASE("conversions match the state vector engine") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 8);
    const Circuit c = oracle::random_named_circuit(n, 5 + static_cast<int>(rng() % 30), rng);
    const TensorData psi = simulate(c);
    const bool cone = trial % 2 == 1;

    CHECK(max_diff(run(circuit_to_network(c, ConversionTarget::state_vector())).data, psi) < 1e-10);

    const BasisIndex x = rng() % (BasisIndex{1} << n);
    const Tensor amp = run(circuit_to_network(c, ConversionTarget::amplitude(to_bitstring(x, n))));
    CHECK(std::abs(amp.data(0) - psi(static_cast<Eigen::Index>(x))) < 1e-10);

    // Batched: random open set, fixed bits from x.
    std::string pattern = to_bitstring(x, n);
    std::vector<int> open;
    for (int q = 0; q < n; ++q) {
      if (rng() % 2) {
        pattern[static_cast<std::size_t>(n - 1 - q)] = '*';
        open.push_back(q);
      }
    }
    const Tensor batch = run(circuit_to_network(c, ConversionTarget::batched(pattern)));
    REQUIRE(batch.data.size() == Eigen::Index{1} << open.size());
    for (Eigen::Index k = 0; k < batch.data.size(); ++k) {
      BasisIndex y = x;
      for (std::size_t j = 0; j < open.size(); ++j) {
        y &= ~(BasisIndex{1} << open[j]);
        y |= static_cast<BasisIndex>((k >> j) & 1) << open[j];
      }
      CHECK(std::abs(batch.data(k) - psi(static_cast<Eigen::Index>(y))) < 1e-10);
    }

    // RDM over a random subset, some others projected.
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
    std::shuffle(kept.begin(), kept.end(), rng);
    auto target = ConversionTarget::rdm(kept, projected);
    target.lightcone = cone;
    const Tensor rho = run(circuit_to_network(c, target));
    const Eigen::MatrixXcd ref = rdm_oracle(psi, n, kept, projected);
    const Eigen::Index dim = ref.rows();
    REQUIRE(rho.data.size() == dim * dim);
    for (Eigen::Index r = 0; r < dim; ++r) {
      for (Eigen::Index col = 0; col < dim; ++col) CHECK(std::abs(rho.data(r * dim + col) - ref(r, col)) < 1e-10);
    }

    std::vector<PauliString> ps;
    for (int i = 0; i < 3; ++i) ps.push_back(random_pauli(n, rng));
    auto et = ConversionTarget::expectation(ps);
    et.lightcone = cone;
    const Tensor ev = run(circuit_to_network(c, et));
    REQUIRE(ev.data.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(ev.data(i) - pauli_oracle(c, ps[static_cast<std::size_t>(i)])) < 1e-10);
  }
}

TEST_CASE("lightcone") {
  // Observable on qubit 0; gates only on qubits 5-7.
  std::mt19937_64 rng(3);
  Circuit far;
  far.num_qubits = 8;
  for (int i = 0; i < 20; ++i) {
    const int a = 5 + static_cast<int>(rng() % 3), b = 5 + (a - 5 + 1) % 3;
    far.ops.push_back({"matrix", {}, {a, b}, {}, gates::random_unitary(2, rng)});
  }
  auto z0 = ConversionTarget::expectation({PauliString::from_string("Z")});
  const TensorNetwork full = circuit_to_network(far, z0);
  z0.lightcone = true;
  const TensorNetwork cone = circuit_to_network(far, z0);
  CHECK(lightcone_circuit(far, z0).size() == 0);
  CHECK(cone.num_tensors() == 4);  // ket, bra, Z, coefficient
  CHECK(cone.num_tensors() < full.num_tensors());
  CHECK(std::abs(run(cone).data(0) - 1.0) < 1e-12);
  CHECK(std::abs(run(full).data(0) - 1.0) < 1e-10);

  // All-to-all full-depth circuit: every gate spans every qubit.
  Circuit dense;
  dense.num_qubits = 4;
  for (int layer = 0; layer < 3; ++layer) dense.ops.push_back({"matrix", {}, {0, 1, 2, 3}, {}, gates::random_unitary(4, rng)});
  auto zd = ConversionTarget::expectation({PauliString::from_string("IZ")});
  const int before = circuit_to_network(dense, zd).num_tensors();
  zd.lightcone = true;
  CHECK(circuit_to_network(dense, zd).num_tensors() == before);

  // Brick wall depth 6, Z on the middle qubit.
  Circuit brick;
  brick.num_qubits = 12;
  for (int layer = 0; layer < 6; ++layer) {
    for (int q = layer % 2; q + 1 < 12; q += 2) brick.ops.push_back({"matrix", {}, {q, q + 1}, {}, gates::random_unitary(2, rng)});
  }
  std::string z(12, 'I');
  z[6] = 'Z';
  auto zb = ConversionTarget::expectation({PauliString::from_string(z)});
  const TensorNetwork whole = circuit_to_network(brick, zb);
  zb.lightcone = true;
  const TensorNetwork reduced = circuit_to_network(brick, zb);
  CHECK(reduced.num_tensors() < whole.num_tensors());
  CHECK(std::abs(run(reduced).data(0) - run(whole).data(0)) < 1e-10);
  CHECK(std::abs(run(reduced).data(0) - pauli_oracle(brick, zb.paulis[0])) < 1e-10);

  // A non-unitary operation outside the cone still counts.
  Circuit scaled;
  scaled.num_qubits = 2;
  scaled.ops.push_back({"matrix", {}, {1}, {}, gates::Matrix(gates::identity(1) * 2.0)});
  auto z0s = ConversionTarget::expectation({PauliString::from_string("Z")});
  z0s.lightcone = true;
  CHECK(std::abs(run(circuit_to_network(scaled, z0s)).data(0) - 4.0) < 1e-12);
}
