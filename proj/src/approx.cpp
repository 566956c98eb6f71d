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

#include "qsimkit/approx.hpp"

#include "json.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace qsimkit {

namespace {

using RowMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::size_t at(int i) { return static_cast<std::size_t>(i); }

Extent extent_of(const Tensor& t, Label l) { return t.extents[static_cast<std::size_t>(t.axis(l))]; }

Extent product(const Tensor& t, std::span<const Label> labels) {
  Extent p = 1;
  for (auto l : labels) p *= extent_of(t, l);
  return p;
}

// Row-major matrix over (left, right) after checking the split.
RowMatrix matricize(const Tensor& t, std::span<const Label> left, std::span<const Label> right) {
  if (left.empty() || right.empty()) throw std::invalid_argument("both sides of the mode split must be non-empty");
  if (left.size() + right.size() != t.modes.size()) throw std::invalid_argument("mode split must cover the tensor");
  std::vector<Label> order(left.begin(), left.end());
  order.insert(order.end(), right.begin(), right.end());
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (!t.has(order[i]) || std::count(order.begin(), order.end(), order[i]) != 1) {
      throw std::invalid_argument("mode split must partition the tensor modes");
    }
  }
  if (t.data.size() != t.size()) throw std::invalid_argument("tensor data not bound");
  const Tensor p = reduce_to(t, order);
  return Eigen::Map<const RowMatrix>(p.data.data(), product(t, left), product(t, right));
}

Tensor from_matrix(const RowMatrix& m, std::vector<Label> modes, std::vector<Extent> extents) {
  Tensor t;
  t.modes = std::move(modes);
  t.extents = std::move(extents);
  t.data = Eigen::Map<const TensorData>(m.data(), m.size());
  return t;
}

std::vector<Extent> extents_of(const Tensor& t, std::span<const Label> labels) {
  std::vector<Extent> e;
  for (auto l : labels) e.push_back(extent_of(t, l));
  return e;
}

Tensor relabel(Tensor t, Label from, Label to) {
  for (auto& l : t.modes) {
    if (l == from) l = to;
  }
  return t;
}

// contract_pair with the result in `order` rather than sorted.
Tensor contract_to(const Tensor& a, const Tensor& b, std::span<const Label> order) {
  return reduce_to(contract_pair(a, b, order), order);
}

template <typename T>
std::vector<T> with(std::vector<T> v, T x) {
  v.push_back(x);
  return v;
}

// Number of singular values to keep. A cutoff that falls inside a group of
// (numerically) equal values keeps the whole group.
Extent keep_count(const Eigen::VectorXd& s, const SvdPolicy& policy) {
  const auto full = static_cast<Extent>(s.size());
  Extent cut = full;
  const double top = full > 0 ? s(0) : 0.0;
  if (policy.abs_cutoff || policy.rel_cutoff) {
    double threshold = 0;
    if (policy.abs_cutoff) threshold = *policy.abs_cutoff;
    if (policy.rel_cutoff) threshold = std::max(threshold, *policy.rel_cutoff * top);
    cut = 0;
    while (cut < full && s(cut) > threshold) ++cut;
    const double tie = 1e-12 * top;
    while (cut > 0 && cut < full && s(cut - 1) - s(cut) <= tie && s(cut) > 0) ++cut;
  }
  if (policy.max_extent) cut = std::min(cut, *policy.max_extent);
  return cut;
}

// Divide and conquer SVD, checked against the input. Eigen 3.4's BDCSVD
// occasionally loses accuracy on complex input; Jacobi is the fallback.
void decompose(const RowMatrix& a, Eigen::VectorXd& s, Eigen::MatrixXcd& u, Eigen::MatrixXcd& vh) {
  constexpr int kOptions = Eigen::ComputeThinU | Eigen::ComputeThinV;
  {
    const Eigen::BDCSVD<Eigen::MatrixXcd> svd(a, kOptions);
    s = svd.singularValues();
    u = svd.matrixU();
    vh = svd.matrixV().adjoint();
  }
  const double scale = s.size() > 0 ? s(0) : 0.0;
  const double err = (u * s.asDiagonal() * vh - a).cwiseAbs().maxCoeff();
  if (err <= 1e-12 * std::max(scale, 1.0) * std::sqrt(static_cast<double>(a.cols()))) return;
  const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a, kOptions);
  s = svd.singularValues();
  u = svd.matrixU();
  vh = svd.matrixV().adjoint();
}

}  // namespace

void SvdPolicy::validate() const {
  if (max_extent && *max_extent < 1) throw std::invalid_argument("max_extent must be at least 1");
  if (abs_cutoff && !(*abs_cutoff >= 0)) throw std::invalid_argument("abs_cutoff must be non-negative");
  if (rel_cutoff && !(*rel_cutoff >= 0)) throw std::invalid_argument("rel_cutoff must be non-negative");
}

QrResult tensor_qr(const Tensor& t, std::span<const Label> left, std::span<const Label> right, Label bond) {
  if (t.has(bond)) throw std::invalid_argument("bond label already used by the tensor");
  const RowMatrix a = matricize(t, left, right);
  const Eigen::Index m = a.rows(), n = a.cols(), k = std::min(m, n);
  const Eigen::HouseholderQR<Eigen::MatrixXcd> qr(a);
  RowMatrix q = qr.householderQ() * Eigen::MatrixXcd::Identity(m, k);
  RowMatrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  // Sign convention: real non-negative diagonal of R.
  for (Eigen::Index j = 0; j < k; ++j) {
    const double mag = std::abs(r(j, j));
    if (mag == 0) continue;
    const cplx phase = r(j, j) / mag;
    q.col(j) *= phase;
    r.row(j) *= std::conj(phase);
    r(j, j) = mag;
  }
  QrResult out;
  out.q = from_matrix(q, with(std::vector<Label>(left.begin(), left.end()), bond), with(extents_of(t, left), Extent{k}));
  std::vector<Label> rm{bond};
  rm.insert(rm.end(), right.begin(), right.end());
  std::vector<Extent> re{k};
  for (auto e : extents_of(t, right)) re.push_back(e);
  out.r = from_matrix(r, rm, re);
  return out;
}

SvdResult tensor_svd(const Tensor& t, std::span<const Label> left, std::span<const Label> right, Label bond,
                     const SvdPolicy& policy) {
  policy.validate();
  if (t.has(bond)) throw std::invalid_argument("bond label already used by the tensor");
  const RowMatrix a = matricize(t, left, right);
  Eigen::VectorXd s;
  Eigen::MatrixXcd u, vh;
  decompose(a, s, u, vh);
  // Gauge: first non-negligible entry of each row of V real and positive.
  for (Eigen::Index i = 0; i < vh.rows(); ++i) {
    const double big = vh.row(i).cwiseAbs().maxCoeff();
    for (Eigen::Index j = 0; j < vh.cols(); ++j) {
      const double mag = std::abs(vh(i, j));
      if (mag > 1e-10 * big) {
        const cplx phase = vh(i, j) / mag;
        vh.row(i) *= std::conj(phase);
        u.col(i) *= phase;
        break;
      }
    }
  }

  SvdResult out;
  out.info.full_extent = s.size();
  out.info.largest = s.size() > 0 ? s(0) : 0.0;
  const Extent k = keep_count(s, policy);
  if (k == 0) throw InfeasibleError("truncation policy discards every singular value");
  out.info.kept_extent = k;
  out.info.discarded_weight = s.tail(s.size() - k).squaredNorm();
  Eigen::VectorXd kept = s.head(k);
  if (policy.renormalize) {
    const double norm = kept.norm();
    if (norm > 0) kept /= norm;
  }
  RowMatrix uk = u.leftCols(k);
  RowMatrix vk = vh.topRows(k);
  switch (policy.partition) {
    case SvdPartition::kNone:
      break;
    case SvdPartition::kToU:
      uk = uk * kept.asDiagonal();
      break;
    case SvdPartition::kToV:
      vk = kept.asDiagonal() * vk;
      break;
    case SvdPartition::kSplitSqrt: {
      const Eigen::VectorXd root = kept.cwiseSqrt();
      uk = uk * root.asDiagonal();
      vk = root.asDiagonal() * vk;
      break;
    }
  }
  out.s.assign(kept.data(), kept.data() + kept.size());
  out.u = from_matrix(uk, with(std::vector<Label>(left.begin(), left.end()), bond), with(extents_of(t, left), Extent{k}));
  std::vector<Label> vm{bond};
  vm.insert(vm.end(), right.begin(), right.end());
  std::vector<Extent> ve{k};
  for (auto e : extents_of(t, right)) ve.push_back(e);
  out.v = from_matrix(vk, vm, ve);
  return out;
}

GateSplitResult gate_split(const Tensor& a, const Tensor& b, const Tensor& gate, SplitAlgorithm algorithm,
                           const SvdPolicy& policy) {
  std::vector<Label> shared;
  for (auto l : a.modes) {
    if (b.has(l)) shared.push_back(l);
  }
  if (shared.size() != 1) throw std::invalid_argument("gate_split operands must share exactly one bond");
  const Label bond = shared[0];
  if (gate.modes.size() != 4) throw std::invalid_argument("two-site gate must have four modes");
  const Label oa = gate.modes[0], ob = gate.modes[1], ia = gate.modes[2], ib = gate.modes[3];
  if (!a.has(ia) || !b.has(ib) || ia == bond || ib == bond) throw std::invalid_argument("gate inputs must be physical modes");
  if (extent_of(a, ia) != gate.extents[2] || extent_of(b, ib) != gate.extents[3] || gate.extents[0] != gate.extents[2] ||
      gate.extents[1] != gate.extents[3]) {
    throw std::invalid_argument("incompatible physical extents");
  }
  for (auto l : {oa, ob}) {
    if ((a.has(l) && l != ia) || (b.has(l) && l != ib)) throw std::invalid_argument("gate output label clashes");
  }

  SvdPolicy pol = policy;
  if (pol.partition == SvdPartition::kNone) pol.partition = SvdPartition::kToV;

  std::vector<Label> a_rest, b_rest;
  for (auto l : a.modes) {
    if (l != ia && l != bond) a_rest.push_back(l);
  }
  for (auto l : b.modes) {
    if (l != ib && l != bond) b_rest.push_back(l);
  }
  Label fresh = 0;
  for (const auto* t : {&a, &b, &gate}) {
    for (auto l : t->modes) fresh = std::max(fresh, l + 1);
  }
  // Gate output labels stand in for the inputs while both are live.
  Tensor g = gate;
  const Label ga = fresh++, gb = fresh++;
  g.modes[0] = ga;
  g.modes[1] = gb;

  std::vector<Label> left, right;
  SvdResult svd;
  Tensor a2, b2;
  if (algorithm == SplitAlgorithm::kDirect) {
    std::vector<Label> keep = a_rest;
    keep.push_back(ia);
    keep.push_back(ib);
    keep.insert(keep.end(), b_rest.begin(), b_rest.end());
    const Tensor theta = contract_pair(a, b, keep);
    std::vector<Label> keep2 = a_rest;
    keep2.push_back(ga);
    keep2.push_back(gb);
    keep2.insert(keep2.end(), b_rest.begin(), b_rest.end());
    const Tensor applied = contract_pair(theta, g, keep2);
    left = with(a_rest, ga);
    right = {gb};
    right.insert(right.end(), b_rest.begin(), b_rest.end());
    svd = tensor_svd(applied, left, right, bond, pol);
    a2 = svd.u;
    b2 = svd.v;
  } else {
    // Factor off the parts of a and b the gate does not touch first.
    const Label x = fresh++, y = fresh++;
    std::optional<QrResult> qa, qb;
    Tensor ra = a, rb = b;
    const std::vector<Label> a_in{ia, bond}, b_in{ib, bond};
    if (!a_rest.empty()) {
      qa = tensor_qr(a, a_rest, a_in, x);
      ra = qa->r;
    }
    if (!b_rest.empty()) {
      qb = tensor_qr(b, b_rest, b_in, y);
      rb = qb->r;
    }
    std::vector<Label> ka = a_rest.empty() ? std::vector<Label>{} : std::vector<Label>{x};
    std::vector<Label> kb = b_rest.empty() ? std::vector<Label>{} : std::vector<Label>{y};
    std::vector<Label> keep = ka;
    keep.push_back(ia);
    keep.push_back(ib);
    keep.insert(keep.end(), kb.begin(), kb.end());
    const Tensor theta = contract_pair(ra, rb, keep);
    std::vector<Label> keep2 = ka;
    keep2.push_back(ga);
    keep2.push_back(gb);
    keep2.insert(keep2.end(), kb.begin(), kb.end());
    const Tensor applied = contract_pair(theta, g, keep2);
    left = with(ka, ga);
    right = {gb};
    right.insert(right.end(), kb.begin(), kb.end());
    svd = tensor_svd(applied, left, right, bond, pol);
    a2 = svd.u;
    b2 = svd.v;
    if (qa) a2 = contract_pair(qa->q, svd.u, with(with(a_rest, ga), bond));
    if (qb) b2 = contract_pair(svd.v, qb->q, with(with(b_rest, gb), bond));
  }
  // Restore the input layouts with the output labels.
  auto layout = [&](const Tensor& t, const Tensor& like, Label in, Label tmp, Label out) {
    std::vector<Label> order;
    for (auto l : like.modes) order.push_back(l == in ? tmp : l);
    return relabel(reduce_to(t, order), tmp, out);
  };
  GateSplitResult res;
  res.a = layout(a2, a, ia, ga, oa);
  res.b = layout(b2, b, ib, gb, ob);
  res.s = std::move(svd.s);
  res.info = svd.info;
  return res;
}

MPSState::MPSState(int num_qubits) : sites_(static_cast<std::size_t>(num_qubits)) {
  if (num_qubits < 1) throw std::invalid_argument("an MPS needs at least one qubit");
  for (int q = 0; q < num_qubits; ++q) {
    Tensor& t = sites_[at(q)];
    t.modes = {bond_label(q), phys_label(q), bond_label(q + 1)};
    t.extents = {1, 2, 1};
    t.data = TensorData::Zero(2);
    t.data(0) = 1;
  }
}

std::vector<Extent> MPSState::bond_extents() const {
  std::vector<Extent> e{1};
  for (const auto& s : sites_) e.push_back(s.extents[2]);
  return e;
}

Extent MPSState::max_bond() const {
  const auto e = bond_extents();
  return *std::max_element(e.begin(), e.end());
}

void MPSState::set_site(int q, Tensor t) {
  if (q < 0 || q >= num_qubits()) throw std::out_of_range("site index out of range");
  const std::vector<Label> expect{bond_label(q), phys_label(q), bond_label(q + 1)};
  if (t.modes != expect || t.extents[1] != 2 || t.data.size() != t.size()) throw std::invalid_argument("bad site tensor");
  sites_[at(q)] = std::move(t);
  center_ = -1;
}

// QR of site q; the triangular factor moves into site q + 1.
void MPSState::shift_right(int q) {
  const Label tmp = scratch_label(), bl = bond_label(q), br = bond_label(q + 1), p = phys_label(q);
  const std::vector<Label> left{bl, p}, right{br};
  auto [qf, r] = tensor_qr(sites_[at(q)], left, right, tmp);
  sites_[at(q)] = relabel(std::move(qf), tmp, br);
  const std::vector<Label> keep{tmp, phys_label(q + 1), bond_label(q + 2)};
  sites_[at(q + 1)] = relabel(contract_to(r, sites_[at(q + 1)], keep), tmp, br);
}

// QR of site q from the right; the triangular factor moves into site q - 1.
void MPSState::shift_left(int q) {
  const Label tmp = scratch_label(), bl = bond_label(q), br = bond_label(q + 1), p = phys_label(q);
  const std::vector<Label> left{p, br}, right{bl};
  auto [qf, r] = tensor_qr(sites_[at(q)], left, right, tmp);
  const std::vector<Label> order{tmp, p, br};
  sites_[at(q)] = relabel(reduce_to(qf, order), tmp, bl);
  const std::vector<Label> keep{bond_label(q - 1), phys_label(q - 1), tmp};
  sites_[at(q - 1)] = relabel(contract_to(sites_[at(q - 1)], r, keep), tmp, bl);
}

void MPSState::move_center(int q) {
  if (q < 0 || q >= num_qubits()) throw std::out_of_range("site index out of range");
  if (center_ < 0) {
    for (int i = 0; i < q; ++i) shift_right(i);
    for (int i = num_qubits() - 1; i > q; --i) shift_left(i);
  } else {
    for (int i = center_; i < q; ++i) shift_right(i);
    for (int i = center_; i > q; --i) shift_left(i);
  }
  center_ = q;
}

void MPSState::apply_one(int q, const Eigen::Matrix2cd& g, bool unitary) {
  const Label tmp = scratch_label(), p = phys_label(q);
  Tensor gt;
  gt.modes = {tmp, p};
  gt.extents = {2, 2};
  gt.data.resize(4);
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) gt.data(r * 2 + c) = g(r, c);
  }
  const std::vector<Label> keep{bond_label(q), tmp, bond_label(q + 1)};
  sites_[at(q)] = relabel(contract_to(sites_[at(q)], gt, keep), tmp, p);
  // A unitary on the physical leg keeps every isometry an isometry.
  if (!unitary) center_ = -1;
}

void MPSState::apply_adjacent(int q, const Eigen::Matrix4cd& g, const SvdPolicy& policy, SplitAlgorithm algorithm) {
  move_center(q);
  const Label oa = scratch_label(), ob = oa + 1, ia = phys_label(q), ib = phys_label(q + 1);
  Tensor gt;
  gt.modes = {oa, ob, ia, ib};
  gt.extents = {2, 2, 2, 2};
  gt.data.resize(16);
  // Matrix bit 0 is site q, bit 1 is site q + 1.
  for (int o = 0; o < 4; ++o) {
    for (int i = 0; i < 4; ++i) gt.data(((o & 1) * 2 + (o >> 1)) * 4 + (i & 1) * 2 + (i >> 1)) = g(o, i);
  }
  SvdPolicy pol = policy;
  pol.partition = SvdPartition::kToV;
  auto res = gate_split(sites_[at(q)], sites_[at(q + 1)], gt, algorithm, pol);
  sites_[at(q)] = relabel(std::move(res.a), oa, ia);
  sites_[at(q + 1)] = relabel(std::move(res.b), ob, ib);
  discarded_ += res.info.discarded_weight;
  center_ = q + 1;
}

namespace {

// Dense matrix over targets followed by control qubits.
Eigen::MatrixXcd with_controls(const DenseGate<double>& g, std::vector<QubitIndex>& qubits) {
  qubits = g.targets;
  for (const auto& c : g.controls) qubits.push_back(c.qubit);
  const int k = static_cast<int>(g.targets.size());
  const Eigen::Index dim = Eigen::Index{1} << qubits.size();
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(dim, dim);
  Eigen::Index want = 0;
  for (std::size_t c = 0; c < g.controls.size(); ++c) {
    if (g.controls[c].value) want |= Eigen::Index{1} << (k + static_cast<int>(c));
  }
  const Eigen::Index block = Eigen::Index{1} << k;
  m.block(want, want, block, block) = g.matrix;
  return m;
}

}  // namespace

void mps_apply(MPSState& m, const DenseGate<double>& g, const SvdPolicy& policy, SplitAlgorithm algorithm) {
  policy.validate();
  std::vector<QubitIndex> qubits;
  const Eigen::MatrixXcd mat = with_controls(g, qubits);
  if (qubits.size() > 2) throw std::invalid_argument("MPS gates act on at most two qubits");
  for (auto q : qubits) {
    if (q < 0 || q >= m.num_qubits()) throw std::out_of_range("qubit index out of range");
  }
  if (qubits.size() == 1) {
    m.apply_one(qubits[0], mat, g.unitary);
    return;
  }
  if (qubits[0] == qubits[1]) throw std::invalid_argument("repeated gate qubit");
  Eigen::Matrix4cd g4 = mat;
  int lo = qubits[0], hi = qubits[1];
  if (lo > hi) {
    // Reorder the matrix so bit 0 is the lower qubit.
    Eigen::Matrix4cd sw = gates::swap();
    g4 = sw * g4 * sw;
    std::swap(lo, hi);
  }
  const Eigen::Matrix4cd sw = gates::swap();
  for (int s = hi - 1; s > lo; --s) m.apply_adjacent(s, sw, policy, algorithm);
  m.apply_adjacent(lo, g4, policy, algorithm);
  for (int s = lo + 1; s < hi; ++s) m.apply_adjacent(s, sw, policy, algorithm);
}

void mps_apply(MPSState& m, const Gate& g, const SvdPolicy& policy, SplitAlgorithm algorithm) {
  if (const auto* d = std::get_if<DenseGate<double>>(&g)) {
    mps_apply(m, *d, policy, algorithm);
    return;
  }
  const auto& p = std::get<PermutationGate<double>>(g);
  DenseGate<double> d{dense_matrix(p), p.targets, p.controls, true};
  mps_apply(m, d, policy, algorithm);
}

cplx mps_amplitude(const MPSState& m, BasisIndex bits) {
  Eigen::RowVectorXcd env = Eigen::RowVectorXcd::Ones(1);
  for (int q = 0; q < m.num_qubits(); ++q) {
    const Tensor& t = m.site(q);
    const Extent l = t.extents[0], r = t.extents[2];
    const int p = static_cast<int>((bits >> q) & 1u);
    Eigen::RowVectorXcd next = Eigen::RowVectorXcd::Zero(r);
    for (Extent a = 0; a < l; ++a) {
      next += env(a) * Eigen::Map<const Eigen::RowVectorXcd>(t.data.data() + (a * 2 + p) * r, r);
    }
    env = std::move(next);
  }
  return env(0);
}

cplx mps_amplitude(const MPSState& m, const std::string& bits) {
  if (static_cast<int>(bits.size()) != m.num_qubits()) throw std::invalid_argument("bitstring length must equal the qubit count");
  return mps_amplitude(m, from_bitstring(bits));
}

TensorData mps_to_vector(const MPSState& m) {
  if (m.num_qubits() > 30) throw CapacityError("too many qubits for a dense vector");
  // Rows: basis index of the qubits so far; columns: open right bond.
  Eigen::MatrixXcd psi = Eigen::MatrixXcd::Ones(1, 1);
  for (int q = 0; q < m.num_qubits(); ++q) {
    const Tensor& t = m.site(q);
    const Extent l = t.extents[0], r = t.extents[2];
    Eigen::MatrixXcd next(psi.rows() * 2, r);
    for (int p = 0; p < 2; ++p) {
      Eigen::MatrixXcd ap(l, r);
      for (Extent a = 0; a < l; ++a) {
        for (Extent b = 0; b < r; ++b) ap(a, b) = t.data((a * 2 + p) * r + b);
      }
      next.middleRows(p * psi.rows(), psi.rows()) = psi * ap;
    }
    psi = std::move(next);
  }
  return psi.col(0);
}

double mps_norm_squared(const MPSState& m) {
  // Transfer matrices from the left.
  Eigen::MatrixXcd env = Eigen::MatrixXcd::Ones(1, 1);
  for (int q = 0; q < m.num_qubits(); ++q) {
    const Tensor& t = m.site(q);
    const Extent l = t.extents[0], r = t.extents[2];
    Eigen::MatrixXcd next = Eigen::MatrixXcd::Zero(r, r);
    for (int p = 0; p < 2; ++p) {
      Eigen::MatrixXcd ap(l, r);
      for (Extent a = 0; a < l; ++a) {
        for (Extent b = 0; b < r; ++b) ap(a, b) = t.data((a * 2 + p) * r + b);
      }
      next += ap.adjoint() * env * ap;
    }
    env = std::move(next);
  }
  return env(0, 0).real();
}

std::vector<BasisIndex> mps_sample(const MPSState& state, std::uint64_t shots, std::uint64_t seed) {
  MPSState m = state;
  m.move_center(0);
  const int n = m.num_qubits();
  // Sites right of the center are right isometries, so the weight of a
  // prefix is the squared norm of its left environment.
  std::vector<std::array<Eigen::MatrixXcd, 2>> mats(static_cast<std::size_t>(n));
  for (int q = 0; q < n; ++q) {
    const Tensor& t = m.site(q);
    const Extent l = t.extents[0], r = t.extents[2];
    for (int p = 0; p < 2; ++p) {
      auto& ap = mats[at(q)][static_cast<std::size_t>(p)];
      ap.resize(l, r);
      for (Extent a = 0; a < l; ++a) {
        for (Extent b = 0; b < r; ++b) ap(a, b) = t.data((a * 2 + p) * r + b);
      }
    }
  }
  std::vector<BasisIndex> out;
  out.reserve(shots);
  for (std::uint64_t s = 0; s < shots; ++s) {
    Eigen::RowVectorXcd env = Eigen::RowVectorXcd::Ones(1);
    BasisIndex bits = 0;
    for (int q = 0; q < n; ++q) {
      const Eigen::RowVectorXcd w0 = env * mats[at(q)][0], w1 = env * mats[at(q)][1];
      const double p0 = w0.squaredNorm(), p1 = w1.squaredNorm();
      const double u = counter_uniform(seed, s * static_cast<std::uint64_t>(n) + static_cast<std::uint64_t>(q));
      const bool one = p0 + p1 > 0 && u * (p0 + p1) >= p0;
      const Eigen::RowVectorXcd& w = one ? w1 : w0;
      const double norm = std::sqrt(one ? p1 : p0);
      env = norm > 0 ? Eigen::RowVectorXcd(w / norm) : w;
      if (one) bits |= BasisIndex{1} << q;
    }
    out.push_back(bits);
  }
  return out;
}

void save_mps(const MPSState& m, std::ostream& os) {
  static_assert(std::endian::native == std::endian::little, "raw format assumes a little-endian host");
  nlohmann::json header = {{"format", "qsimkit-mps"},  {"version", 1},
                           {"num_qubits", m.num_qubits()}, {"bond_extents", m.bond_extents()},
                           {"center", m.center()},     {"dtype", "complex128"},
                           {"byte_order", "little"}};
  os << header.dump() << '\n';
  for (int q = 0; q < m.num_qubits(); ++q) {
    const auto& d = m.site(q).data;
    os.write(reinterpret_cast<const char*>(d.data()), static_cast<std::streamsize>(d.size() * sizeof(cplx)));
  }
  if (!os) throw std::runtime_error("failed to write MPS");
}

MPSState load_mps(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("missing MPS header");
  const auto header = nlohmann::json::parse(line);
  if (header.at("format") != "qsimkit-mps" || header.at("version") != 1 || header.at("dtype") != "complex128") {
    throw std::runtime_error("unsupported MPS header");
  }
  const int n = header.at("num_qubits").get<int>();
  const auto bonds = header.at("bond_extents").get<std::vector<Extent>>();
  if (n < 1 || static_cast<int>(bonds.size()) != n + 1 || bonds.front() != 1 || bonds.back() != 1) {
    throw std::runtime_error("inconsistent MPS header");
  }
  MPSState m(n);
  for (int q = 0; q < n; ++q) {
    Tensor& t = m.sites_[at(q)];
    t.extents = {bonds[at(q)], 2, bonds[at(q + 1)]};
    if (t.extents[0] < 1 || t.extents[2] < 1) throw std::runtime_error("bond extents must be positive");
    t.data.resize(t.size());
    is.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * sizeof(cplx)));
    if (!is) throw std::runtime_error("truncated MPS data");
  }
  const int center = header.at("center").get<int>();
  m.center_ = center >= -1 && center < n ? center : -1;
  return m;
}

}  // namespace qsimkit
