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
 * Contraction execution: plans with workspace sizing, a workspace arena with
 * scratch accounting and a cache for constant intermediates, sliced and
 * accumulated contraction, kernel autotuning and multi-worker slice
 * scheduling.
 */
#pragma once

#include "qsimkit/pathfinder.hpp"
#include "qsimkit/tn.hpp"

#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <utility>
#include <vector>

namespace qsimkit {

struct WorkspaceSizes {
  double min = 0;  // bytes
  double recommended = 0;
  double max = 0;
};

struct ContractionPlan {
  ContractionTree tree;
  std::vector<NodeInfo> nodes;
  /// Internal nodes, children before parents, in minimum-peak order.
  std::vector<int> order;
  WorkspaceSizes workspace;
  /// Per node: every leaf below it was constant when the plan was made.
  std::vector<bool> constant;
  /// Per node: indices into tree.sliced of the sliced labels below it.
  std::vector<std::vector<int>> slice_deps;
  /// Per-slice flops of each node's subtree.
  std::vector<double> subtree_flops;
  std::vector<KernelVariant> variants;
  bool tuned = false;
  double slices = 1;
  std::uint64_t id = 0;

  int root() const { return tree.root(); }
};

ContractionPlan make_plan(const TensorNetwork& tn, const ContractionTree& tree);
ContractionPlan make_plan(const TensorNetwork& tn, const OptimizerResult& result);

/// Bytes needed to cache every constant intermediate the plan would store,
/// over all slice values.
double recommended_cache_bytes(const ContractionPlan& plan, const TensorNetwork& tn);

struct CacheStats {
  double used_bytes = 0;
  double recommended_bytes = 0;
  std::int64_t hits = 0;
  /// Constant nodes computed again after an earlier computation in the same
  /// cache generation.
  std::int64_t recomputes = 0;
  std::int64_t evictions = 0;
  /// Flops executed through this arena.
  double flops = 0;
};

/// Scratch is accounted rather than preallocated: every live intermediate
/// is charged against the scratch capacity and the high-water mark is kept.
/// The cache holds constant intermediates across contraction calls.
class WorkspaceArena {
 public:
  explicit WorkspaceArena(double scratch_bytes = std::numeric_limits<double>::infinity(), double cache_bytes = 0)
      : scratch_capacity_(scratch_bytes), cache_capacity_(cache_bytes) {}

  double scratch_capacity() const { return scratch_capacity_; }
  double cache_capacity() const { return cache_capacity_; }
  double scratch_high_water() const { return high_water_; }
  void reset_high_water() { high_water_ = 0; }

  const CacheStats& cache_stats() const { return stats_; }
  void reset_stats();
  void clear_cache();

  /// Kernel variant used at each node by the last contraction call.
  const std::vector<KernelVariant>& last_variants() const { return last_variants_; }

 private:
  friend class Executor;
  friend void autotune(ContractionPlan&, const TensorNetwork&, WorkspaceArena&, int);

  struct Key {
    int node;
    std::vector<Extent> values;
    friend auto operator<=>(const Key&, const Key&) = default;
  };
  struct Entry {
    std::shared_ptr<const Tensor> value;
    double bytes = 0;
    double density = 0;  // flops saved per byte
  };

  void charge(double bytes);
  void release(double bytes) { scratch_used_ -= bytes; }
  void sync(const ContractionPlan& plan, const TensorNetwork& tn);
  std::shared_ptr<const Tensor> lookup(const Key& key);
  void store(Key key, std::shared_ptr<const Tensor> value, double density);

  double scratch_capacity_;
  double cache_capacity_;
  double scratch_used_ = 0;
  double high_water_ = 0;
  std::map<Key, Entry> cache_;
  std::set<Key> computed_;
  std::uint64_t plan_id_ = 0;
  std::uint64_t generation_ = 0;
  const TensorNetwork* network_ = nullptr;
  CacheStats stats_;
  std::vector<KernelVariant> last_variants_;
};

struct SliceRange {
  double begin = 0;
  double end = std::numeric_limits<double>::infinity();  // clamped to the slice count
  bool accumulate = false;
};

/// Times each kernel variant on every pairwise contraction of the first
/// slice and records the fastest in the plan.
void autotune(ContractionPlan& plan, const TensorNetwork& tn, WorkspaceArena& arena, int repeats = 3);

/// Contracts slices [begin, end) and sums them in ascending ordinal. With
/// `accumulate` the sum is added to `out`; otherwise `out` is overwritten.
void contract_into(const ContractionPlan& plan, const TensorNetwork& tn, WorkspaceArena& arena, const SliceRange& range,
                   Tensor& out);

Tensor contract(const ContractionPlan& plan, const TensorNetwork& tn, WorkspaceArena& arena, const SliceRange& range = {});

/// Round-robin slice assignment over `workers` threads, each with its own
/// arena. Slice results are summed in ascending ordinal, so the value does
/// not depend on the worker count.
Tensor contract_distributed(const ContractionPlan& plan, const TensorNetwork& tn, std::span<WorkspaceArena> arenas,
                            int workers);

inline void mark_constant(TensorNetwork& tn, std::span<const int> ids, bool constant = true) {
  tn.mark_constant(ids, constant);
}

inline const CacheStats& cache_stats(const WorkspaceArena& arena) { return arena.cache_stats(); }

}  // namespace qsimkit
