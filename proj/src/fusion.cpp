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

#include "qsimkit/fusion.hpp"

#include <algorithm>
#include <unordered_map>

namespace qsimkit {
namespace {

constexpr int kMaxUnion = 10;
// Bounds the backward search for a window that can take a gate on fresh qubits.
constexpr std::ptrdiff_t kScanLimit = 32;

std::unordered_map<QubitIndex, int> position_map(std::span<const QubitIndex> union_targets) {
  std::unordered_map<QubitIndex, int> pos;
  for (std::size_t j = 0; j < union_targets.size(); ++j) {
    if (!pos.emplace(union_targets[j], static_cast<int>(j)).second) {
      throw std::invalid_argument("duplicate qubit in fusion target set");
    }
  }
  return pos;
}

int local(const std::unordered_map<QubitIndex, int>& pos, QubitIndex q) {
  auto it = pos.find(q);
  if (it == pos.end()) throw std::invalid_argument("gate qubit not in fusion target set");
  return it->second;
}

Gate relabel(const Gate& g, const std::unordered_map<QubitIndex, int>& pos) {
  return std::visit(
      [&](const auto& x) -> Gate {
        auto y = x;
        for (auto& t : y.targets) t = local(pos, t);
        for (auto& c : y.controls) c.qubit = local(pos, c.qubit);
        return y;
      },
      g);
}

struct Window {
  enum class Kind { Dense, Diagonal, PassThrough } kind;
  std::vector<QubitIndex> qubits;  // sorted
  std::vector<std::size_t> members;
};

std::vector<QubitIndex> sorted_union(const std::vector<QubitIndex>& a, const std::vector<QubitIndex>& b) {
  std::vector<QubitIndex> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

bool includes(const std::vector<QubitIndex>& outer, const std::vector<QubitIndex>& inner) {
  return std::includes(outer.begin(), outer.end(), inner.begin(), inner.end());
}

}  // namespace

DenseGate<double> fused_matrix(std::span<const Gate> gates, std::span<const QubitIndex> union_targets) {
  if (union_targets.empty()) throw std::invalid_argument("empty fusion target set");
  if (static_cast<int>(union_targets.size()) > kMaxUnion) {
    throw std::invalid_argument("fusion target set larger than 10 qubits");
  }
  const auto pos = position_map(union_targets);
  std::vector<Gate> local_gates;
  local_gates.reserve(gates.size());
  for (const auto& g : gates) local_gates.push_back(relabel(g, pos));

  const int m = static_cast<int>(union_targets.size());
  const Eigen::Index dim = Eigen::Index{1} << m;
  ComplexMatrix<double> product(dim, dim);
  // Column c of the product is the image of basis state |c>.
  for (Eigen::Index c = 0; c < dim; ++c) {
    AmplitudeVector<double> e = AmplitudeVector<double>::Zero(dim);
    e(c) = 1.0;
    auto col = StateVector<double>::from_amplitudes(std::move(e));
    for (const auto& g : local_gates) apply_gate(col, g);
    product.col(c) = col.amplitudes();
  }
  bool unitary = true;
  for (const auto& g : gates) {
    if (const auto* d = std::get_if<DenseGate<double>>(&g); d && !d->unitary) unitary = false;
  }
  return {std::move(product), {union_targets.begin(), union_targets.end()}, {}, unitary};
}

PermutationGate<double> fused_diagonal(std::span<const Gate> gates, std::span<const QubitIndex> union_targets) {
  const auto pos = position_map(union_targets);
  const std::size_t dim = std::size_t{1} << union_targets.size();
  PermutationGate<double> out;
  out.targets.assign(union_targets.begin(), union_targets.end());
  out.permutation.resize(dim);
  std::iota(out.permutation.begin(), out.permutation.end(), 0);
  out.diagonal.assign(dim, cplx(1.0));
  for (const auto& g : gates) {
    if (!is_diagonal(g)) throw std::invalid_argument("fused_diagonal given a non-diagonal gate");
    const auto lg = relabel(g, pos);
    const auto& targets = gate_targets(lg);
    const auto& controls = gate_controls(lg);
    for (std::size_t b = 0; b < dim; ++b) {
      bool ok = true;
      for (const auto& c : controls) ok = ok && static_cast<int>((b >> c.qubit) & 1u) == c.value;
      if (!ok) continue;
      std::size_t sub = 0;
      for (std::size_t j = 0; j < targets.size(); ++j) sub |= ((b >> targets[j]) & 1u) << j;
      if (const auto* p = std::get_if<PermutationGate<double>>(&lg)) {
        out.diagonal[b] *= p->diagonal[sub];
      } else {
        const auto& d = std::get<DenseGate<double>>(lg);
        out.diagonal[b] *= d.matrix(static_cast<Eigen::Index>(sub), static_cast<Eigen::Index>(sub));
      }
    }
  }
  return out;
}

namespace {

FusedCircuit fuse_pass(std::span<const Gate> circuit, const FusionConfig& cfg) {
  const int dense_max = std::min(cfg.max_fused_gate_size, kMaxUnion);
  const int diag_max = cfg.max_fused_diagonal_gate_size;
  std::vector<Window> windows;
  std::unordered_map<QubitIndex, std::ptrdiff_t> last_window;

  for (std::size_t gi = 0; gi < circuit.size(); ++gi) {
    const Gate& g = circuit[gi];
    auto qs = gate_qubits(g);
    std::sort(qs.begin(), qs.end());
    const int size = static_cast<int>(qs.size());
    const bool diag = is_diagonal(g);

    std::ptrdiff_t newest = -1;
    for (auto q : qs) {
      if (auto it = last_window.find(q); it != last_window.end()) newest = std::max(newest, it->second);
    }

    std::ptrdiff_t chosen = -1;
    const bool fusible = diag ? size <= std::max(diag_max, dense_max) : size <= dense_max;
    if (fusible) {
      // Any window at or after `newest` may take the gate without reordering
      // it past a gate on a shared qubit.
      const auto oldest = std::max<std::ptrdiff_t>(
          {newest, 0, static_cast<std::ptrdiff_t>(windows.size()) - kScanLimit});
      for (auto w = static_cast<std::ptrdiff_t>(windows.size()) - 1; w >= oldest; --w) {
        const Window& win = windows[static_cast<std::size_t>(w)];
        if (win.kind == Window::Kind::PassThrough) continue;
        const auto merged = sorted_union(win.qubits, qs);
        const int msize = static_cast<int>(merged.size());
        bool ok = false;
        if (win.kind == Window::Kind::Dense) {
          ok = diag ? includes(win.qubits, qs) : msize <= dense_max;
        } else {
          ok = diag && msize <= diag_max;
        }
        if (ok) {
          chosen = w;
          break;
        }
      }
    }
    if (chosen < 0) {
      Window::Kind kind = Window::Kind::PassThrough;
      if (fusible) {
        if (!diag) kind = Window::Kind::Dense;
        else if (size <= diag_max) kind = Window::Kind::Diagonal;
      }
      windows.push_back({kind, {}, {}});
      chosen = static_cast<std::ptrdiff_t>(windows.size()) - 1;
    }
    Window& win = windows[static_cast<std::size_t>(chosen)];
    win.qubits = sorted_union(win.qubits, qs);
    win.members.push_back(gi);
    for (auto q : qs) last_window[q] = chosen;
  }

  FusedCircuit out;
  for (const auto& win : windows) {
    if (win.members.size() == 1) {
      out.gates.push_back(circuit[win.members.front()]);
    } else {
      std::vector<Gate> members;
      for (auto i : win.members) members.push_back(circuit[i]);
      if (win.kind == Window::Kind::Diagonal) {
        out.gates.emplace_back(fused_diagonal(members, win.qubits));
      } else {
        out.gates.emplace_back(fused_matrix(members, win.qubits));
      }
    }
    out.provenance.push_back(win.members);
  }
  return out;
}

}  // namespace

FusedCircuit fuse(std::span<const Gate> circuit, const FusionConfig& cfg) {
  if (cfg.max_fused_gate_size < 1 || cfg.max_fused_diagonal_gate_size < 1) {
    throw std::invalid_argument("fusion sizes must be >= 1");
  }
  // Repeat the greedy pass until the gate count stops shrinking so the result
  // is a fixed point of the pass.
  FusedCircuit current = fuse_pass(circuit, cfg);
  while (true) {
    FusedCircuit next = fuse_pass(current.gates, cfg);
    if (next.gates.size() >= current.gates.size()) break;
    for (auto& prov : next.provenance) {
      std::vector<std::size_t> sources;
      for (auto i : prov) sources.insert(sources.end(), current.provenance[i].begin(), current.provenance[i].end());
      prov = std::move(sources);
    }
    current = std::move(next);
  }
  return current;
}

}  // namespace qsimkit
