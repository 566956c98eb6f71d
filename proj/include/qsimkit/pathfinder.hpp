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

/**
 * @file
 * Contraction path optimization: network simplification, greedy and exact
 * (subset DP) path finders, recursive hypergraph bisection with bubbling,
 * slice selection under a memory budget, and the hyper-optimizer that
 * samples configurations of all of these.
 */
#pragma once

#include "qsimkit/tn.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace qsimkit {

inline constexpr double kBytesPerElement = sizeof(cplx);

/// Networks up to this many tensors are solved exactly.
inline constexpr int kMaxOptimalTensors = 12;

struct SimplifyResult {
  TensorNetwork network;
  /// Pairs already contracted, in SSA numbering of the original network.
  std::vector<std::pair<int, int>> pre;
  /// Original-network SSA id of each tensor in `network`.
  std::vector<int> origin;
};

/// Contracts pairs whose result is no larger than the larger operand until
/// none remain. Tensor data is contracted too when `with_data` is set.
SimplifyResult simplify(const TensorNetwork& tn, bool with_data = true);

/// Maps a tree over the simplified network back onto the original one.
ContractionTree expand_simplified(const SimplifyResult& s, const ContractionTree& reduced);

struct GreedyWeights {
  /// score = size(result) - alpha * (size(a) + size(b))
  double alpha = 1.0;
  /// Scale of Gumbel noise added to scores; 0 is fully deterministic.
  double temperature = 0.0;
  /// When positive, pairs of constant tensors whose result has at most this
  /// many elements are contracted before any other pair.
  double constant_first_cap = 0.0;
};

ContractionTree greedy_path(const TensorNetwork& tn, const GreedyWeights& weights = {}, std::uint64_t seed = 0);

/// Minimum-flop tree by dynamic programming over tensor subsets. Throws
/// CapacityError above kMaxOptimalTensors tensors.
ContractionTree optimal_path(const TensorNetwork& tn);

struct PartitionConfig {
  int arity = 2;
  /// Allowed deviation of a part from its target size, as a fraction.
  double imbalance = 0.2;
  /// Subsets at most this large are solved exactly.
  int leaf_size = 8;
  int bubbling_passes = 2;
  int bubbling_subtrees = 5;
  std::uint64_t seed = 0;
};

ContractionTree partition_path(const TensorNetwork& tn, const PartitionConfig& cfg = {});

struct SliceSelection {
  std::vector<Label> sliced;
  double overhead = 1.0;  // sliced flops / unsliced flops
};

/// Greedily slices labels of the largest intermediates until every per-slice
/// intermediate fits in `memory_budget` bytes. Throws InfeasibleError when
/// no choice of slices fits.
SliceSelection select_slices(const TensorNetwork& tn, const ContractionTree& tree, double memory_budget);

struct OptimizerConfig {
  int num_hyper_samples = 16;
  int min_arity = 2;
  int max_arity = 4;
  double min_imbalance = 0.05;
  double max_imbalance = 0.5;
  double min_alpha = 0.0;
  double max_alpha = 1.5;
  double max_temperature = 0.5;
  double memory_budget = std::numeric_limits<double>::infinity();  // bytes
  /// Candidates whose slicing overhead exceeds this rank after all others.
  double max_slicing_overhead = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
  int threads = 1;
  /// Expected contractions of the plan with a warm cache. Above 1, paths are
  /// ranked by total_flops + (repetitions - 1) * warm_flops and
  /// constant-first greedy candidates join the search.
  double repetitions = 1;
};

struct OptimizerResult {
  ContractionTree tree;  // tree.sliced holds the chosen slices
  double total_flops = 0;
  double unsliced_flops = 0;
  double overhead = 1.0;
  double slices = 1;
  double largest_intermediate = 0;  // elements, per slice
  /// Flops of a repeat contraction once every constant intermediate is cached.
  double warm_flops = 0;
  int sample = 0;
  std::string method;
};

/// Hyper-optimizer. Sample 0 is the default greedy path, sample 1 the exact
/// path when the network is small enough; the rest draw random greedy or
/// partition configurations. With repetitions > 1 and mixed constness,
/// sample 2 and about half of the later ones are constant-first greedy. Deterministic for a fixed seed regardless of
/// thread count.
OptimizerResult find_path(const TensorNetwork& tn, const OptimizerConfig& cfg = {});

/// Flops of one contraction when every constant intermediate below the root
/// is served from cache: the root and all nodes with a mutable leaf.
double warm_flops(const TensorNetwork& tn, const ContractionTree& tree);

std::uint64_t tree_hash(const ContractionTree& tree);

}  // namespace qsimkit
