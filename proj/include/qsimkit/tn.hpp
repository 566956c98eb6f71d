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
 * Tensor networks with einsum semantics, pairwise contraction, and the
 * FLOP/size cost model used by the path finder and executor.
 *
 * Tensor data is row-major in mode order: the last mode varies fastest.
 * One "flop" is one complex multiply-add.
 */
#pragma once

#include "qsimkit/core.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace qsimkit {

using Label = int;
using Extent = std::int64_t;
using TensorData = Eigen::VectorXcd;

struct Tensor {
  std::vector<Label> modes;
  std::vector<Extent> extents;
  /// Empty when the network only describes structure.
  TensorData data;
  bool constant = false;

  int rank() const { return static_cast<int>(modes.size()); }
  Extent size() const;
  bool bound() const { return data.size() == size(); }
  /// Position of `label` in modes, or -1.
  int axis(Label label) const;
  bool has(Label label) const { return axis(label) >= 0; }
};

class TensorNetwork {
 public:
  /// Registers a label (or checks the extent of an existing one).
  Label add_label(const std::string& name, Extent extent);
  Label label(const std::string& name) const;
  const std::string& label_name(Label l) const { return names_.at(static_cast<std::size_t>(l)); }
  Extent extent(Label l) const { return extents_.at(static_cast<std::size_t>(l)); }
  int num_labels() const { return static_cast<int>(names_.size()); }

  /// Adds a tensor over existing labels; `data` may be empty.
  int add_tensor(std::vector<Label> modes, TensorData data = {}, bool constant = false);
  int num_tensors() const { return static_cast<int>(tensors_.size()); }
  const Tensor& tensor(int id) const { return tensors_.at(static_cast<std::size_t>(id)); }
  const std::vector<Tensor>& tensors() const { return tensors_; }

  void set_data(int id, TensorData data);
  void mark_constant(std::span<const int> ids, bool constant = true);

  const std::vector<Label>& output() const { return output_; }
  void set_output(std::vector<Label> output);

  /// Bumped whenever a constant tensor's data or any constness changes.
  std::uint64_t generation() const { return generation_; }

  /// Number of tensors carrying each label, plus one if it is an output label.
  std::vector<int> label_occurrences() const;

 private:
  std::vector<std::string> names_;
  std::vector<Extent> extents_;
  std::unordered_map<std::string, Label> by_name_;
  std::vector<Tensor> tensors_;
  std::vector<Label> output_;
  std::uint64_t generation_ = 0;
};

/**
 * Parses expressions such as "ij,jk->ik" or "[left]a,a[right]->[left][right]".
 * Labels are single characters or bracketed names. Terms yield unbound
 * tensors in order.
 */
TensorNetwork parse_einsum(const std::string& expr, const std::unordered_map<std::string, Extent>& extents);

/// Same, taking one shape per operand; repeated labels must agree in extent.
TensorNetwork parse_einsum(const std::string& expr, const std::vector<std::vector<Extent>>& shapes);

/// Inverse of parse_einsum for the network's structure.
std::string to_einsum(const TensorNetwork& tn);

struct PairwiseCost {
  double flops = 0;
  double intermediate_size = 0;
};

/// Result modes of contracting a and b: labels of either operand that are in
/// `keep`, sorted.
std::vector<Label> pair_result_modes(const Tensor& a, const Tensor& b, std::span<const Label> keep);

PairwiseCost pair_cost(const Tensor& a, const Tensor& b, std::span<const Label> keep);

/// Memory layouts for the pairwise GEMM. Both give the same values.
enum class KernelVariant : std::uint8_t { kGemmAB = 0, kGemmBA = 1 };
inline constexpr int kNumKernelVariants = 2;

/// Sums every label of a or b that is not in `keep`; result modes are sorted.
Tensor contract_pair(const Tensor& a, const Tensor& b, std::span<const Label> keep,
                     KernelVariant variant = KernelVariant::kGemmAB);

/// Transposes to `modes`, summing labels of t not listed.
Tensor reduce_to(const Tensor& t, std::span<const Label> modes);

/// Fixes `label` to `value`, dropping the mode.
Tensor select(const Tensor& t, Label label, Extent value);

/// Binary tree in SSA form: ids [0, num_leaves) are the input tensors and
/// pair k creates id num_leaves + k.
struct ContractionTree {
  int num_leaves = 0;
  std::vector<std::pair<int, int>> pairs;
  std::vector<Label> sliced;

  int num_nodes() const { return num_leaves + static_cast<int>(pairs.size()); }
  int root() const { return num_nodes() - 1; }
  bool is_leaf(int node) const { return node < num_leaves; }
};

/// Throws std::invalid_argument unless the tree is a full binary tree over
/// `num_tensors` leaves.
void validate_tree(const ContractionTree& tree, int num_tensors);

struct NodeInfo {
  std::vector<Label> modes;  // sorted; sliced labels removed
  double size = 1;           // elements per slice
  double flops = 0;          // per slice, 0 for leaves
  int left = -1;
  int right = -1;
  int parent = -1;
};

std::vector<NodeInfo> annotate(const TensorNetwork& tn, const ContractionTree& tree);

double num_slices(const TensorNetwork& tn, std::span<const Label> sliced);

/// Child order that minimizes live intermediate elements, and the peak.
/// Leaves occupy no workspace.
struct EvaluationOrder {
  std::vector<int> order;  // internal nodes, children before parents
  double peak = 0;
};

EvaluationOrder min_peak_order(const std::vector<NodeInfo>& nodes, int root, int num_leaves);

struct PathCost {
  double total_flops = 0;           // summed over slices
  double peak_intermediate_size = 0;
  double largest_intermediate = 0;
  double slices = 1;
};

PathCost path_cost(const TensorNetwork& tn, const ContractionTree& tree);

}  // namespace qsimkit
