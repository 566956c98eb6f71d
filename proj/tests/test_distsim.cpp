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

#include "oracles.hpp"
#include "qsimkit/distsim.hpp"

using namespace qsimkit;
using oracle::Vector;

namespace {

std::vector<Gate> qft_gates(int n) {
  std::vector<Gate> c;
  for (int i = n - 1; i >= 0; --i) {
    c.push_back(DenseGate<double>{gates::hadamard(), {i}});
    for (int j = i - 1; j >= 0; --j) {
      c.push_back(DenseGate<double>{gates::phase(std::numbers::pi / static_cast<double>(1 << (i - j))), {i}, {{j, 1}}});
    }
  }
  for (int i = 0; i < n / 2; ++i) c.push_back(DenseGate<double>{gates::swap(), {i, n - 1 - i}});
  return c;
}

Vector single_segment(const std::vector<Gate>& c, const Vector& psi) {
  auto sv = StateVector<double>::from_amplitudes(psi);
  for (const auto& g : c) apply_gate(sv, g);
  return sv.amplitudes();
}

}  // namespace

TEST_CASE("global/local swap matches the bit_permute oracle") {
  Vector v(8);
  for (int i = 0; i < 8; ++i) v(i) = cplx(i, 0);
  auto ssv = SegmentedStateVector::scatter(StateVector<double>::from_amplitudes(v), 1, 2);
  const std::vector<BitPair> p{{2, 0}};
  ssv.distributed_index_bit_swap(p);
  Vector seg0(4), seg1(4);
  seg0 << 0.0, 4.0, 2.0, 6.0;
  seg1 << 1.0, 5.0, 3.0, 7.0;
  CHECK(ssv.segment(0) == seg0);
  CHECK(ssv.segment(1) == seg1);
  for (std::uint64_t i = 0; i < 8; ++i) {
    CHECK(ssv.concatenated()(static_cast<Eigen::Index>(bit_permute(i, p))) == v(static_cast<Eigen::Index>(i)));
  }
  CHECK(ssv.gather() == v);
  const auto stats = ssv.transfer_stats();
  CHECK(stats.num_reorders == 1);
  CHECK(stats.amplitudes_moved == 4);

  ssv.distributed_index_bit_swap(p);
  CHECK(ssv.concatenated() == v);
  CHECK(ssv.qubit_map() == std::vector<int>{0, 1, 2});
}

TEST_CASE("local swaps and fresh vectors do not transfer") {
  SegmentedStateVector ssv(4, 2, 2);
  CHECK(ssv.transfer_stats().num_reorders == 0);
  CHECK(ssv.transfer_stats().amplitudes_moved == 0);
  const std::vector<BitPair> local{{0, 1}};
  CHECK(ssv.plan_reorder(local).phases[0].empty());
  ssv.distributed_index_bit_swap(local);
  CHECK(ssv.transfer_stats().amplitudes_moved == 0);
  const std::vector<BitPair> overlap{{0, 3}, {3, 1}};
  CHECK_THROWS_AS(ssv.distributed_index_bit_swap(overlap), std::invalid_argument);
}

TEST_CASE("reorder schedules are perfect matchings") {
  SegmentedStateVector ssv(8, 3, 4);
  const std::vector<BitPair> pairs{{0, 7}, {5, 6}, {1, 2}};
  const auto plan = ssv.plan_reorder(pairs);
  for (const auto& phase : plan.phases) {
    std::vector<int> uses(static_cast<std::size_t>(ssv.num_segments()), 0);
    for (const auto& ex : phase) {
      ++uses[static_cast<std::size_t>(ex.segment_a)];
      ++uses[static_cast<std::size_t>(ex.segment_b)];
    }
    for (int u : uses) CHECK(u <= 1);
  }

  std::mt19937_64 rng(3);
  const Vector psi = oracle::random_state(8, rng);
  auto dist = SegmentedStateVector::scatter(StateVector<double>::from_amplitudes(psi), 3, 4);
  auto single = StateVector<double>::from_amplitudes(psi);
  dist.distributed_index_bit_swap(pairs);
  swap_index_bits(single, pairs);
  CHECK(dist.concatenated() == single.amplitudes());
  CHECK(dist.gather() == psi);
}

TEST_CASE("gates on global qubits reorder first, local gates do not") {
  std::mt19937_64 rng(9);
  const Vector psi = oracle::random_state(3, rng);
  auto ssv = SegmentedStateVector::scatter(StateVector<double>::from_amplitudes(psi), 1, 2);
  const Gate local_h = DenseGate<double>{gates::hadamard(), {0}};
  ssv.apply(local_h);
  CHECK(ssv.transfer_stats().num_reorders == 0);
  const Gate global_h = DenseGate<double>{gates::hadamard(), {2}};
  ssv.apply(global_h);
  CHECK(ssv.transfer_stats().num_reorders == 1);
  const std::vector<Gate> c{local_h, global_h};
  CHECK((ssv.gather() - single_segment(c, psi)).cwiseAbs().maxCoeff() < 1e-15);

  SegmentedStateVector small(3, 2, 1);
  const Gate wide = DenseGate<double>{gates::random_unitary(2, rng), {0, 1}};
  CHECK_THROWS_AS(small.apply(wide), CapacityError);
}

TEST_CASE("controls on global qubits select segments") {
  std::mt19937_64 rng(10);
  const Vector psi = oracle::random_state(5, rng);
  auto ssv = SegmentedStateVector::scatter(StateVector<double>::from_amplitudes(psi), 2, 2);
  const std::vector<Gate> c{DenseGate<double>{gates::random_unitary(1, rng), {1}, {{4, 1}, {3, 0}}}};
  simulate_distributed(ssv, c);
  CHECK(ssv.transfer_stats().num_reorders == 0);
  CHECK((ssv.gather() - single_segment(c, psi)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("distributed QFT and random circuits match single-segment results") {
  const auto qft = qft_gates(12);
  std::mt19937_64 rng(17);
  const Vector psi = oracle::random_state(12, rng);
  for (int g : {1, 2, 3}) {
    for (int workers : {2, 4, 8}) {
      auto ssv = SegmentedStateVector::scatter(StateVector<double>::from_amplitudes(psi), g, workers);
      simulate_distributed(ssv, qft);
      CHECK((ssv.gather() - single_segment(qft, psi)).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(ssv.transfer_stats().num_reorders > 0);
    }
  }
  for (int trial = 0; trial < 10; ++trial) {
    const auto c = oracle::random_circuit(9, 60, 3, rng);
    const Vector p = oracle::random_state(9, rng);
    auto ssv = SegmentedStateVector::scatter(StateVector<double>::from_amplitudes(p), 1 + trial % 3, 3);
    simulate_distributed(ssv, c);
    CHECK((ssv.gather() - single_segment(c, p)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("lookahead keeps soon-used qubits local") {
  // q3 is global; q0 is used right after, q1 much later: the swap must evict q1 or q2.
  SegmentedStateVector ssv(4, 1, 1);
  const std::vector<Gate> c{DenseGate<double>{gates::hadamard(), {3}}, DenseGate<double>{gates::hadamard(), {0}},
                            DenseGate<double>{gates::hadamard(), {2}}, DenseGate<double>{gates::hadamard(), {0}}};
  simulate_distributed(ssv, c);
  CHECK(ssv.transfer_stats().num_reorders == 1);
  CHECK(ssv.qubit_map()[1] == 3);
}
