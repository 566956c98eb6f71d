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

#include "qsimkit/distsim.hpp"

#include <algorithm>
#include <limits>
#include <thread>

namespace qsimkit {
namespace {

// Runs fn(worker) on every worker and joins; the join is the phase barrier.
template <typename Fn>
void run_workers(int workers, Fn&& fn) {
  if (workers == 1) {
    fn(0);
    return;
  }
  std::vector<std::jthread> threads;
  threads.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) threads.emplace_back([&fn, w] { fn(w); });
}

void swap_local_bits(AmplitudeVector<double>& v, int a, int b) {
  const std::array<BitPair, 1> p{BitPair{a, b}};
  const auto size = static_cast<std::uint64_t>(v.size());
  for (std::uint64_t i = 0; i < size; ++i) {
    const std::uint64_t j = bit_permute_unchecked(i, p);
    if (i < j) std::swap(v(static_cast<Eigen::Index>(i)), v(static_cast<Eigen::Index>(j)));
  }
}

}  // namespace

SegmentedStateVector::SegmentedStateVector(int num_qubits, int global_bits, int workers)
    : num_qubits_(num_qubits), global_bits_(global_bits), workers_(workers) {
  if (num_qubits < 1 || num_qubits > StateVector<double>::kMaxQubits) {
    throw CapacityError("qubit count out of supported range");
  }
  if (global_bits < 0 || global_bits >= num_qubits) {
    throw std::invalid_argument("global bit count must satisfy 0 <= g < n");
  }
  if (workers < 1) throw std::invalid_argument("worker count must be >= 1");
  const int segments = 1 << global_bits;
  segments_.reserve(static_cast<std::size_t>(segments));
  for (int s = 0; s < segments; ++s) {
    StateVector<double> seg(num_qubits - global_bits);
    if (s != 0) seg.amplitudes().setZero();
    segments_.push_back(std::move(seg));
  }
  qubit_map_.resize(static_cast<std::size_t>(num_qubits));
  std::iota(qubit_map_.begin(), qubit_map_.end(), 0);
}

SegmentedStateVector SegmentedStateVector::scatter(const StateVector<double>& sv, int global_bits, int workers) {
  SegmentedStateVector out(sv.num_qubits(), global_bits, workers);
  const auto logical = logical_amplitudes(sv);
  const Eigen::Index len = Eigen::Index{1} << out.local_bits();
  for (int s = 0; s < out.num_segments(); ++s) {
    out.segments_[static_cast<std::size_t>(s)].amplitudes() = logical.segment(s * len, len);
  }
  return out;
}

AmplitudeVector<double> SegmentedStateVector::concatenated() const {
  const Eigen::Index len = Eigen::Index{1} << local_bits();
  AmplitudeVector<double> out(len * num_segments());
  for (int s = 0; s < num_segments(); ++s) out.segment(s * len, len) = segment(s);
  return out;
}

AmplitudeVector<double> SegmentedStateVector::gather() const {
  const auto phys = concatenated();
  AmplitudeVector<double> out(phys.size());
  for (Eigen::Index i = 0; i < phys.size(); ++i) {
    std::uint64_t logical = 0;
    for (int q = 0; q < num_qubits_; ++q) {
      logical |= ((static_cast<std::uint64_t>(i) >> qubit_map_[static_cast<std::size_t>(q)]) & 1u) << q;
    }
    out(static_cast<Eigen::Index>(logical)) = phys(i);
  }
  return out;
}

ReorderPlan SegmentedStateVector::plan_reorder(std::span<const BitPair> pairs) const {
  validate_bit_pairs(pairs, num_qubits_);
  ReorderPlan plan;
  const int lbits = local_bits();
  const std::uint64_t seg_len = std::uint64_t{1} << lbits;
  for (auto p : pairs) {
    if (p.first > p.second) std::swap(p.first, p.second);
    plan.swaps.push_back(p);
    std::vector<SegmentExchange> phase;
    if (!is_global_bit(p.second)) {
      // Both local: handled inside each segment.
    } else if (!is_global_bit(p.first)) {
      const int gb = p.second - lbits;
      for (int s = 0; s < num_segments(); ++s) {
        if ((s >> gb) & 1) continue;
        phase.push_back({s, s | (1 << gb), p.first, seg_len / 2});
      }
    } else {
      const int ga = p.first - lbits, gb = p.second - lbits;
      for (int s = 0; s < num_segments(); ++s) {
        if (((s >> ga) & 1) == 1 && ((s >> gb) & 1) == 0) {
          phase.push_back({s, s ^ (1 << ga) ^ (1 << gb), -1, seg_len});
        }
      }
    }
    plan.phases.push_back(std::move(phase));
  }
  return plan;
}

void SegmentedStateVector::execute_phase(const std::vector<SegmentExchange>& phase) {
  run_workers(workers_, [&](int w) {
    for (const auto& ex : phase) {
      if (worker_of(ex.segment_a) != w) continue;
      auto& a = segments_[static_cast<std::size_t>(ex.segment_a)].amplitudes();
      auto& b = segments_[static_cast<std::size_t>(ex.segment_b)].amplitudes();
      if (ex.local_bit < 0) {
        a.swap(b);
        continue;
      }
      const std::array<int, 1> ins{ex.local_bit};
      const std::uint64_t bit = std::uint64_t{1} << ex.local_bit;
      for (std::uint64_t k = 0; k < ex.amplitudes; ++k) {
        const std::uint64_t i = insert_zero_bits(k, ins);
        std::swap(a(static_cast<Eigen::Index>(i | bit)), b(static_cast<Eigen::Index>(i)));
      }
    }
  });
  for (const auto& ex : phase) {
    stats_.amplitudes_moved += 2 * ex.amplitudes;
    if (worker_of(ex.segment_a) != worker_of(ex.segment_b)) stats_.inter_worker_amplitudes += 2 * ex.amplitudes;
    ++stats_.exchanges;
  }
}

void SegmentedStateVector::distributed_index_bit_swap(std::span<const BitPair> pairs) {
  const auto plan = plan_reorder(pairs);
  bool transferred = false;
  for (std::size_t k = 0; k < plan.swaps.size(); ++k) {
    const auto p = plan.swaps[k];
    if (!is_global_bit(p.second)) {
      run_workers(workers_, [&](int w) {
        for (int s = w; s < num_segments(); s += workers_) {
          swap_local_bits(segments_[static_cast<std::size_t>(s)].amplitudes(), p.first, p.second);
        }
      });
    } else {
      execute_phase(plan.phases[k]);
      transferred = transferred || !plan.phases[k].empty();
    }
    for (auto& b : qubit_map_) {
      if (b == p.first) {
        b = p.second;
      } else if (b == p.second) {
        b = p.first;
      }
    }
  }
  if (transferred) ++stats_.num_reorders;
}

void SegmentedStateVector::apply(const Gate& g, std::span<const Gate> upcoming) {
  const auto& targets = gate_targets(g);
  if (static_cast<int>(targets.size()) > local_bits()) {
    throw CapacityError("gate arity exceeds local capacity of a segment");
  }
  detail::check_qubits(num_qubits_, targets, gate_controls(g));

  std::vector<QubitIndex> global_targets;
  for (auto q : targets) {
    if (is_global_bit(qubit_map_[static_cast<std::size_t>(q)])) global_targets.push_back(q);
  }
  if (!global_targets.empty()) {
    std::vector<QubitIndex> qubit_on_bit(static_cast<std::size_t>(num_qubits_));
    for (int q = 0; q < num_qubits_; ++q) qubit_on_bit[static_cast<std::size_t>(qubit_map_[static_cast<std::size_t>(q)])] = q;
    auto next_use = [&](QubitIndex q) {
      for (std::size_t i = 0; i < upcoming.size(); ++i) {
        const auto& t = gate_targets(upcoming[i]);
        if (std::find(t.begin(), t.end(), q) != t.end()) return i;
      }
      return std::numeric_limits<std::size_t>::max();
    };
    struct Candidate {
      int bit;
      std::size_t next;
    };
    std::vector<Candidate> candidates;
    for (int b = 0; b < local_bits(); ++b) {
      const QubitIndex q = qubit_on_bit[static_cast<std::size_t>(b)];
      if (std::find(targets.begin(), targets.end(), q) != targets.end()) continue;
      candidates.push_back({b, next_use(q)});
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& x, const Candidate& y) { return x.next > y.next; });
    std::vector<BitPair> swaps;
    for (std::size_t i = 0; i < global_targets.size(); ++i) {
      swaps.push_back({candidates[i].bit, qubit_map_[static_cast<std::size_t>(global_targets[i])]});
    }
    distributed_index_bit_swap(swaps);
  }

  // Segment-local copy of the gate: qubits become physical bits. Controls on
  // global bits select segments instead.
  Gate local = g;
  std::vector<Control> global_controls;
  std::visit(
      [&](auto& x) {
        for (auto& t : x.targets) t = qubit_map_[static_cast<std::size_t>(t)];
        std::vector<Control> kept;
        for (auto c : x.controls) {
          c.qubit = qubit_map_[static_cast<std::size_t>(c.qubit)];
          if (is_global_bit(c.qubit)) {
            global_controls.push_back(c);
          } else {
            kept.push_back(c);
          }
        }
        x.controls = std::move(kept);
      },
      local);
  const int lbits = local_bits();
  run_workers(workers_, [&](int w) {
    for (int s = w; s < num_segments(); s += workers_) {
      bool active = true;
      for (const auto& c : global_controls) active = active && ((s >> (c.qubit - lbits)) & 1) == c.value;
      if (active) apply_gate(segments_[static_cast<std::size_t>(s)], local);
    }
  });
}

void simulate_distributed(SegmentedStateVector& ssv, std::span<const Gate> circuit) {
  for (std::size_t i = 0; i < circuit.size(); ++i) ssv.apply(circuit[i], circuit.subspan(i + 1));
}

}  // namespace qsimkit
