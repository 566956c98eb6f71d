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

// Test-only reference implementations. Nothing here calls into the kernels
// it is used to check.
#pragma once

#include "qsimkit/gates.hpp"

#include <random>
#include <unsupported/Eigen/KroneckerProduct>

namespace qsimkit::oracle {

using Matrix = ComplexMatrix<double>;
using Vector = AmplitudeVector<double>;

/// Full 2^n operator of a controlled k-qubit gate, built from Kronecker
/// products of single-qubit projectors and the gate on a contiguous block,
/// conjugated by a basis permutation that moves the gate qubits into place.
inline Matrix expand(const Matrix& m, const std::vector<QubitIndex>& targets,
                     const std::vector<Control>& controls, int n) {
  const Eigen::Index dim = Eigen::Index{1} << n;
  // Order qubits as [targets..., controls..., rest...] on bits 0,1,2,...
  std::vector<QubitIndex> order(targets);
  for (const auto& c : controls) order.push_back(c.qubit);
  for (int q = 0; q < n; ++q) {
    if (std::find(order.begin(), order.end(), q) == order.end()) order.push_back(q);
  }
  // Block operator on the reordered register: controls select between m and I.
  const int nc = static_cast<int>(controls.size());
  Matrix ctrl = Matrix::Zero(Eigen::Index{1} << nc, Eigen::Index{1} << nc);
  Eigen::Index sat = 0;
  for (int j = 0; j < nc; ++j) {
    if (controls[static_cast<std::size_t>(j)].value) sat |= Eigen::Index{1} << j;
  }
  ctrl(sat, sat) = 1;
  const Matrix ictrl = Matrix::Identity(ctrl.rows(), ctrl.cols()) - ctrl;
  const Eigen::Index kdim = m.rows();
  // Bits: targets are low bits, controls next: kron(high, low) puts `low` on low bits.
  Matrix block = Eigen::kroneckerProduct(ctrl, m).eval() +
                 Eigen::kroneckerProduct(ictrl, Matrix::Identity(kdim, kdim)).eval();
  const int rest = n - static_cast<int>(targets.size()) - nc;
  Matrix reordered = Eigen::kroneckerProduct(Matrix::Identity(Eigen::Index{1} << rest, Eigen::Index{1} << rest), block).eval();
  // Permutation P: reordered index -> logical index.
  Matrix perm = Matrix::Zero(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r) {
    Eigen::Index logical = 0;
    for (int j = 0; j < n; ++j) {
      if ((r >> j) & 1) logical |= Eigen::Index{1} << order[static_cast<std::size_t>(j)];
    }
    perm(logical, r) = 1;
  }
  return perm * reordered * perm.transpose();
}

inline Matrix expand(const Gate& g, int n) {
  if (const auto* d = std::get_if<DenseGate<double>>(&g)) return expand(d->matrix, d->targets, d->controls, n);
  const auto& p = std::get<PermutationGate<double>>(g);
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(p.permutation.size()), static_cast<Eigen::Index>(p.permutation.size()));
  for (std::size_t j = 0; j < p.permutation.size(); ++j) {
    m(static_cast<Eigen::Index>(p.permutation[j]), static_cast<Eigen::Index>(j)) = p.diagonal[j];
  }
  return expand(m, p.targets, p.controls, n);
}

inline Vector random_state(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector v(Eigen::Index{1} << n);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = cplx(normal(rng), normal(rng));
  return v / v.norm();
}

inline std::vector<QubitIndex> random_qubits(int n, int k, std::mt19937_64& rng) {
  std::vector<QubitIndex> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(static_cast<std::size_t>(k));
  return all;
}

/// Random gate over 1..max_arity qubits: dense unitary, diagonal, or a
/// generalized permutation, sometimes with controls.
inline Gate random_gate(int n, int max_arity, std::mt19937_64& rng, bool allow_controls = true) {
  std::uniform_int_distribution<int> arity_dist(1, std::min(max_arity, n));
  const int k = arity_dist(rng);
  int nc = 0;
  if (allow_controls && n - k > 0 && rng() % 4 == 0) nc = 1 + static_cast<int>(rng() % static_cast<unsigned>(std::min(2, n - k)));
  auto qs = random_qubits(n, k + nc, rng);
  std::vector<QubitIndex> targets(qs.begin(), qs.begin() + k);
  std::vector<Control> controls;
  for (int j = 0; j < nc; ++j) controls.push_back({qs[static_cast<std::size_t>(k + j)], static_cast<int>(rng() % 2)});
  const auto kind = rng() % 3;
  if (kind == 0) {
    return DenseGate<double>{gates::random_unitary(k, rng), targets, controls, true};
  }
  PermutationGate<double> p;
  p.targets = targets;
  p.controls = controls;
  p.permutation.resize(std::size_t{1} << k);
  std::iota(p.permutation.begin(), p.permutation.end(), 0);
  if (kind == 2) std::shuffle(p.permutation.begin(), p.permutation.end(), rng);
  std::uniform_real_distribution<double> angle(0, 2 * std::numbers::pi);
  for (std::size_t j = 0; j < p.permutation.size(); ++j) p.diagonal.push_back(std::polar(1.0, angle(rng)));
  return p;
}

inline std::vector<Gate> random_circuit(int n, int num_gates, int max_arity, std::mt19937_64& rng,
                                        bool allow_controls = true) {
  std::vector<Gate> c;
  for (int i = 0; i < num_gates; ++i) c.push_back(random_gate(n, max_arity, rng, allow_controls));
  return c;
}

inline Vector basis_state(int n, std::uint64_t index) {
  Vector v = Vector::Zero(Eigen::Index{1} << n);
  v(static_cast<Eigen::Index>(index)) = 1;
  return v;
}

}  // namespace qsimkit::oracle
