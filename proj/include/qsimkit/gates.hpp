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

#pragma once

#include "qsimkit/statevec.hpp"

#include <numbers>
#include <random>
#include <variant>

namespace qsimkit {

/// A gate as consumed by the fusion compiler and the distributed engine.
using Gate = std::variant<DenseGate<double>, PermutationGate<double>>;

namespace gates {

using Matrix = ComplexMatrix<double>;

inline Matrix identity(int qubits = 1) {
  return Matrix::Identity(Eigen::Index{1} << qubits, Eigen::Index{1} << qubits);
}

inline Matrix hadamard() {
  const double r = 1.0 / std::numbers::sqrt2;
  Matrix m(2, 2);
  m << r, r, r, -r;
  return m;
}

inline Matrix pauli_x() {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

inline Matrix pauli_y() {
  Matrix m(2, 2);
  m << 0, cplx(0, -1), cplx(0, 1), 0;
  return m;
}

inline Matrix pauli_z() {
  Matrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

inline Matrix phase(double phi) {
  Matrix m(2, 2);
  m << 1, 0, 0, std::polar(1.0, phi);
  return m;
}

inline Matrix rx(double theta) {
  Matrix m(2, 2);
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  m << c, cplx(0, -s), cplx(0, -s), c;
  return m;
}

inline Matrix ry(double theta) {
  Matrix m(2, 2);
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  m << c, -s, s, c;
  return m;
}

inline Matrix rz(double theta) {
  Matrix m(2, 2);
  m << std::polar(1.0, -theta / 2), 0, 0, std::polar(1.0, theta / 2);
  return m;
}

/// exp(-i theta/2 Z x Z).
inline Matrix rzz(double theta) {
  Matrix m = Matrix::Zero(4, 4);
  const cplx even = std::polar(1.0, -theta / 2), odd = std::polar(1.0, theta / 2);
  m(0, 0) = even;
  m(1, 1) = odd;
  m(2, 2) = odd;
  m(3, 3) = even;
  return m;
}

/// Two-qubit matrix with targets (control, target) order: bit 0 = control.
inline Matrix cnot() {
  Matrix m = Matrix::Zero(4, 4);
  m(0, 0) = 1;
  m(2, 2) = 1;
  m(3, 1) = 1;
  m(1, 3) = 1;
  return m;
}

inline Matrix cz() {
  Matrix m = Matrix::Identity(4, 4);
  m(3, 3) = -1;
  return m;
}

inline Matrix swap() {
  Matrix m = Matrix::Zero(4, 4);
  m(0, 0) = 1;
  m(1, 2) = 1;
  m(2, 1) = 1;
  m(3, 3) = 1;
  return m;
}

/// Haar-random unitary of dimension 2^qubits: QR of a complex Gaussian
/// matrix with the R-diagonal phases folded back into Q.
template <typename Rng>
Matrix random_unitary(int qubits, Rng& rng) {
  const Eigen::Index dim = Eigen::Index{1} << qubits;
  std::normal_distribution<double> normal;
  Matrix z(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) z(i, j) = cplx(normal(rng), normal(rng));
  }
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ() * Matrix::Identity(dim, dim);
  const Matrix r = qr.matrixQR().template triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < dim; ++j) {
    const double mag = std::abs(r(j, j));
    if (mag > 0) q.col(j) *= r(j, j) / mag;
  }
  return q;
}

/// Haar-random special unitary (determinant 1).
template <typename Rng>
Matrix random_special_unitary(int qubits, Rng& rng) {
  Matrix u = random_unitary(qubits, rng);
  const cplx det = u.determinant();
  u *= std::pow(det, -1.0 / static_cast<double>(u.rows()));
  return u;
}

}  // namespace gates

inline std::vector<QubitIndex> gate_qubits(const Gate& g) {
  return std::visit(
      [](const auto& x) {
        std::vector<QubitIndex> qs(x.targets.begin(), x.targets.end());
        for (const auto& c : x.controls) qs.push_back(c.qubit);
        return qs;
      },
      g);
}

inline const std::vector<QubitIndex>& gate_targets(const Gate& g) {
  return std::visit([](const auto& x) -> const std::vector<QubitIndex>& { return x.targets; }, g);
}

inline const std::vector<Control>& gate_controls(const Gate& g) {
  return std::visit([](const auto& x) -> const std::vector<Control>& { return x.controls; }, g);
}

template <typename Real>
void apply_gate(StateVector<Real>& sv, const Gate& g) {
  if constexpr (std::is_same_v<Real, double>) {
    std::visit(
        [&](const auto& x) {
          if constexpr (std::is_same_v<std::decay_t<decltype(x)>, DenseGate<double>>) {
            apply_matrix(sv, x);
          } else {
            apply_generalized_permutation(sv, x);
          }
        },
        g);
  } else {
    std::visit(
        [&](const auto& x) {
          if constexpr (std::is_same_v<std::decay_t<decltype(x)>, DenseGate<double>>) {
            DenseGate<Real> y{x.matrix.template cast<Complex<Real>>(), x.targets, x.controls, x.unitary};
            apply_matrix(sv, y);
          } else {
            PermutationGate<Real> y{x.permutation, {}, x.targets, x.controls};
            for (auto d : x.diagonal) y.diagonal.push_back(Complex<Real>(d));
            apply_generalized_permutation(sv, y);
          }
        },
        g);
  }
}

/// True when the gate's action on its targets is diagonal (controls allowed).
inline bool is_diagonal(const Gate& g) {
  if (const auto* p = std::get_if<PermutationGate<double>>(&g)) return p->is_diagonal();
  const auto& m = std::get<DenseGate<double>>(g).matrix;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (r != c && m(r, c) != cplx(0.0)) return false;
    }
  }
  return true;
}

}  // namespace qsimkit
