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

#include "qsimkit/exec.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <exception>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace qsimkit {

namespace {

std::atomic<std::uint64_t> next_plan_id{1};

std::size_t at(int i) { return static_cast<std::size_t>(i); }

// Which nodes are constant for the network's current flags, and which of
// them get cached: maximal constant internal nodes other than the root.
struct Constness {
  std::vector<bool> constant;
  std::vector<bool> frontier;
  std::vector<int> frontier_of;  // caching node at or above v, or -1
};

Constness constness(const ContractionPlan& plan, const TensorNetwork& tn) {
  const int n = plan.tree.num_nodes();
  Constness c;
  c.constant.assign(at(n), false);
  c.frontier.assign(at(n), false);
  c.frontier_of.assign(at(n), -1);
  for (int i = 0; i < plan.tree.num_leaves; ++i) c.constant[at(i)] = tn.tensor(i).constant;
  for (int v = plan.tree.num_leaves; v < n; ++v) {
    c.constant[at(v)] = c.constant[at(plan.nodes[at(v)].left)] && c.constant[at(plan.nodes[at(v)].right)];
  }
  const int root = plan.root();
  for (int v = n - 1; v >= plan.tree.num_leaves; --v) {
    if (!c.constant[at(v)] || v == root) continue;
    const int p = plan.nodes[at(v)].parent;
    if (p == root || !c.constant[at(p)]) c.frontier[at(v)] = true;
  }
  // Parents have larger ids, so a descending sweep sees them first.
  for (int v = n - 1; v >= 0; --v) {
    if (c.frontier[at(v)]) {
      c.frontier_of[at(v)] = v;
    } else if (c.constant[at(v)] && v != root) {
      c.frontier_of[at(v)] = c.frontier_of[at(plan.nodes[at(v)].parent)];
    }
  }
  return c;
}

std::vector<Extent> slice_values(const ContractionPlan& plan, const TensorNetwork& tn, std::int64_t ordinal) {
  const auto& sliced = plan.tree.sliced;
  std::vector<Extent> v(sliced.size());
  for (std::size_t k = sliced.size(); k-- > 0;) {
    const Extent e = tn.extent(sliced[k]);
    v[k] = ordinal % e;
    ordinal /= e;
  }
  return v;
}

Tensor output_tensor(const TensorNetwork& tn) {
  Tensor out;
  out.modes = tn.output();
  for (auto l : out.modes) out.extents.push_back(tn.extent(l));
  out.data = TensorData::Zero(out.size());
  return out;
}

// Adds `part` into `out` at the block where the sliced output labels take
// their slice values. `part` holds the remaining output labels in order.
void add_block(Tensor& out, const Tensor& part, const ContractionPlan& plan, const std::vector<Extent>& values) {
  const auto r = out.modes.size();
  std::vector<Extent> stride(r, 1);
  for (std::size_t i = r; i-- > 1;) stride[i - 1] = stride[i] * out.extents[i];
  Extent base = 0;
  std::vector<Extent> free_stride, free_extent;
  for (std::size_t i = 0; i < r; ++i) {
    const auto it = std::find(plan.tree.sliced.begin(), plan.tree.sliced.end(), out.modes[i]);
    if (it == plan.tree.sliced.end()) {
      free_stride.push_back(stride[i]);
      free_extent.push_back(out.extents[i]);
    } else {
      base += values[static_cast<std::size_t>(it - plan.tree.sliced.begin())] * stride[i];
    }
  }
  if (free_stride.size() == r) {
    out.data += part.data;
    return;
  }
  std::vector<Extent> idx(free_stride.size(), 0);
  Extent off = base;
  for (Extent k = 0; k < part.size(); ++k) {
    out.data(off) += part.data(k);
    for (std::size_t d = idx.size(); d-- > 0;) {
      off += free_stride[d];
      if (++idx[d] < free_extent[d]) break;
      off -= free_stride[d] * free_extent[d];
      idx[d] = 0;
    }
  }
}

}  // namespace

// Evaluates single slices of a plan against an arena.
class Executor {
 public:
  Executor(const ContractionPlan& plan, const TensorNetwork& tn, WorkspaceArena& arena, bool use_cache)
      : plan_(plan), tn_(tn), arena_(arena), use_cache_(use_cache) {
    if (arena.scratch_capacity() < plan.workspace.min) {
      throw CapacityError("scratch workspace below the plan minimum");
    }
    for (int i = 0; i < tn.num_tensors(); ++i) {
      if (tn.tensor(i).data.size() != tn.tensor(i).size()) throw std::invalid_argument("tensor data not bound");
    }
    if (use_cache_) {
      cx_ = constness(plan, tn);
      arena.sync(plan, tn);
      arena.stats_.recommended_bytes = recommended_cache_bytes(plan, tn);
    }
    arena.last_variants_ = plan.variants;
  }

  /// Root value of one slice, reduced to the unsliced output labels.
  Tensor slice(std::int64_t ordinal, ContractionPlan* tune = nullptr, int repeats = 1) {
    const auto& tree = plan_.tree;
    const int n = tree.num_nodes();
    const auto values = slice_values(plan_, tn_, ordinal);
    std::vector<std::shared_ptr<const Tensor>> val(at(n));
    std::vector<bool> served(at(n), false);

    auto key_of = [&](int v) {
      WorkspaceArena::Key k{v, {}};
      for (int d : plan_.slice_deps[at(v)]) k.values.push_back(values[at(d)]);
      return k;
    };
    if (use_cache_) {
      for (int v = tree.num_leaves; v < n; ++v) {
        if (!cx_.frontier[at(v)]) continue;
        if (auto hit = arena_.lookup(key_of(v))) {
          val[at(v)] = std::move(hit);
          served[at(v)] = true;
        }
      }
    }
    auto operand = [&](int v) -> std::shared_ptr<const Tensor> {
      if (v >= tree.num_leaves) return val[at(v)];
      const Tensor& t = tn_.tensor(v);
      Tensor s = t;
      bool cut = false;
      for (std::size_t k = 0; k < tree.sliced.size(); ++k) {
        if (s.has(tree.sliced[k])) {
          s = select(s, tree.sliced[k], values[k]);
          cut = true;
        }
      }
      // Unsliced leaves are borrowed from the network.
      if (!cut) return std::shared_ptr<const Tensor>(std::shared_ptr<const Tensor>{}, &t);
      return std::make_shared<const Tensor>(std::move(s));
    };
    auto bytes = [&](int v) { return plan_.nodes[at(v)].size * kBytesPerElement; };

    const int root = tree.root();
    std::shared_ptr<const Tensor> result;
    double held = 0;
    if (root < tree.num_leaves) {
      result = operand(root);
    } else {
      for (int v : plan_.order) {
        if (served[at(v)]) continue;
        const int f = use_cache_ ? cx_.frontier_of[at(v)] : -1;
        if (f >= 0 && f != v && served[at(f)]) continue;
        const auto& nd = plan_.nodes[at(v)];
        const auto a = operand(nd.left), b = operand(nd.right);
        arena_.charge(bytes(v));
        Tensor c;
        if (tune != nullptr) {
          double best = std::numeric_limits<double>::infinity();
          for (int k = 0; k < kNumKernelVariants; ++k) {
            const auto variant = static_cast<KernelVariant>(k);
            for (int r = 0; r < repeats; ++r) {
              const auto t0 = std::chrono::steady_clock::now();
              Tensor trial = contract_pair(*a, *b, nd.modes, variant);
              const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
              if (dt < best) {
                best = dt;
                tune->variants[at(v)] = variant;
                c = std::move(trial);
              }
            }
          }
        } else {
          c = contract_pair(*a, *b, nd.modes, plan_.variants[at(v)]);
        }
        arena_.stats_.flops += nd.flops;
        for (int child : {nd.left, nd.right}) {
          if (child >= tree.num_leaves && !served[at(child)]) {
            val[at(child)].reset();
            arena_.release(bytes(child));
          }
        }
        auto value = std::make_shared<const Tensor>(std::move(c));
        if (use_cache_ && cx_.frontier[at(v)]) {
          auto key = key_of(v);
          if (!arena_.computed_.insert(key).second) ++arena_.stats_.recomputes;
          arena_.store(std::move(key), value, plan_.subtree_flops[at(v)] / bytes(v));
        }
        val[at(v)] = std::move(value);
      }
      result = val[at(root)];
      held = served[at(root)] ? 0 : bytes(root);
    }
    std::vector<Label> keep;
    for (auto l : tn_.output()) {
      if (std::find(tree.sliced.begin(), tree.sliced.end(), l) == tree.sliced.end()) keep.push_back(l);
    }
    Tensor part = reduce_to(*result, keep);
    arena_.release(held);
    return part;
  }

  const std::vector<Extent> values(std::int64_t ordinal) const { return slice_values(plan_, tn_, ordinal); }

 private:
  const ContractionPlan& plan_;
  const TensorNetwork& tn_;
  WorkspaceArena& arena_;
  bool use_cache_;
  Constness cx_;
};

void WorkspaceArena::reset_stats() {
  stats_ = CacheStats{};
  for (const auto& [k, e] : cache_) stats_.used_bytes += e.bytes;
}

void WorkspaceArena::clear_cache() {
  cache_.clear();
  computed_.clear();
  stats_.used_bytes = 0;
}

void WorkspaceArena::charge(double bytes) {
  scratch_used_ += bytes;
  if (scratch_used_ > scratch_capacity_ * (1 + 1e-12)) {
    scratch_used_ -= bytes;
    throw CapacityError("scratch overflow");
  }
  high_water_ = std::max(high_water_, scratch_used_);
}

void WorkspaceArena::sync(const ContractionPlan& plan, const TensorNetwork& tn) {
  if (plan.id == plan_id_ && tn.generation() == generation_ && &tn == network_) return;
  clear_cache();
  plan_id_ = plan.id;
  generation_ = tn.generation();
  network_ = &tn;
}

std::shared_ptr<const Tensor> WorkspaceArena::lookup(const Key& key) {
  const auto it = cache_.find(key);
  if (it == cache_.end()) return nullptr;
  ++stats_.hits;
  return it->second.value;
}

void WorkspaceArena::store(Key key, std::shared_ptr<const Tensor> value, double density) {
  const double bytes = static_cast<double>(value->size()) * kBytesPerElement;
  if (bytes > cache_capacity_) return;
  // Evict the lowest benefit density first, but never for a worse entry.
  while (stats_.used_bytes + bytes > cache_capacity_) {
    auto worst = cache_.end();
    for (auto it = cache_.begin(); it != cache_.end(); ++it) {
      if (worst == cache_.end() || it->second.density < worst->second.density) worst = it;
    }
    if (worst == cache_.end() || worst->second.density >= density) return;
    stats_.used_bytes -= worst->second.bytes;
    ++stats_.evictions;
    cache_.erase(worst);
  }
  stats_.used_bytes += bytes;
  cache_[std::move(key)] = Entry{std::move(value), bytes, density};
}

ContractionPlan make_plan(const TensorNetwork& tn, const ContractionTree& tree) {
  ContractionPlan plan;
  plan.tree = tree;
  plan.nodes = annotate(tn, tree);
  plan.slices = num_slices(tn, tree.sliced);
  const int n = tree.num_nodes();
  const auto order = min_peak_order(plan.nodes, tree.root(), tree.num_leaves);
  plan.order = order.order;

  double total = 0, largest = 0;
  for (int v = tree.num_leaves; v < n; ++v) {
    total += plan.nodes[at(v)].size;
    largest = std::max(largest, plan.nodes[at(v)].size);
  }
  plan.workspace.min = order.peak * kBytesPerElement;
  plan.workspace.max = total * kBytesPerElement;
  // Headroom for staging one reordered operand.
  plan.workspace.recommended = std::min(plan.workspace.max, (order.peak + largest) * kBytesPerElement);

  plan.constant.assign(at(n), false);
  plan.slice_deps.assign(at(n), {});
  plan.subtree_flops.assign(at(n), 0);
  for (int i = 0; i < tree.num_leaves; ++i) {
    plan.constant[at(i)] = tn.tensor(i).constant;
    for (std::size_t k = 0; k < tree.sliced.size(); ++k) {
      if (tn.tensor(i).has(tree.sliced[k])) plan.slice_deps[at(i)].push_back(static_cast<int>(k));
    }
  }
  for (int v = tree.num_leaves; v < n; ++v) {
    const auto& nd = plan.nodes[at(v)];
    plan.constant[at(v)] = plan.constant[at(nd.left)] && plan.constant[at(nd.right)];
    auto& deps = plan.slice_deps[at(v)];
    std::set_union(plan.slice_deps[at(nd.left)].begin(), plan.slice_deps[at(nd.left)].end(),
                   plan.slice_deps[at(nd.right)].begin(), plan.slice_deps[at(nd.right)].end(), std::back_inserter(deps));
    plan.subtree_flops[at(v)] = nd.flops + plan.subtree_flops[at(nd.left)] + plan.subtree_flops[at(nd.right)];
  }
  plan.variants.assign(at(n), KernelVariant::kGemmAB);
  plan.id = next_plan_id++;
  return plan;
}

ContractionPlan make_plan(const TensorNetwork& tn, const OptimizerResult& result) { return make_plan(tn, result.tree); }

double recommended_cache_bytes(const ContractionPlan& plan, const TensorNetwork& tn) {
  const auto cx = constness(plan, tn);
  double total = 0;
  for (int v = plan.tree.num_leaves; v < plan.tree.num_nodes(); ++v) {
    if (!cx.frontier[at(v)]) continue;
    double copies = 1;
    for (int d : plan.slice_deps[at(v)]) copies *= static_cast<double>(tn.extent(plan.tree.sliced[at(d)]));
    total += plan.nodes[at(v)].size * kBytesPerElement * copies;
  }
  return total;
}

void autotune(ContractionPlan& plan, const TensorNetwork& tn, WorkspaceArena& arena, int repeats) {
  Executor ex(plan, tn, arena, false);
  ex.slice(0, &plan, std::max(1, repeats));
  plan.tuned = true;
  arena.last_variants_ = plan.variants;
}

namespace {

std::pair<std::int64_t, std::int64_t> slice_bounds(const ContractionPlan& plan, const SliceRange& range) {
  const double end = std::min(range.end, plan.slices);
  if (!(range.begin >= 0) || !(range.begin < end) || range.begin != std::floor(range.begin)) {
    throw std::invalid_argument("slice range must satisfy 0 <= begin < end <= slices");
  }
  if (range.end != std::numeric_limits<double>::infinity() && range.end > plan.slices) {
    throw std::invalid_argument("slice range beyond the slice count");
  }
  return {static_cast<std::int64_t>(range.begin), static_cast<std::int64_t>(end)};
}

}  // namespace

void contract_into(const ContractionPlan& plan, const TensorNetwork& tn, WorkspaceArena& arena, const SliceRange& range,
                   Tensor& out) {
  const auto [begin, end] = slice_bounds(plan, range);
  Executor ex(plan, tn, arena, true);
  if (!range.accumulate || out.modes != tn.output() || out.data.size() != out.size()) out = output_tensor(tn);
  for (std::int64_t s = begin; s < end; ++s) add_block(out, ex.slice(s), plan, ex.values(s));
}

Tensor contract(const ContractionPlan& plan, const TensorNetwork& tn, WorkspaceArena& arena, const SliceRange& range) {
  Tensor out;
  contract_into(plan, tn, arena, range, out);
  return out;
}

Tensor contract_distributed(const ContractionPlan& plan, const TensorNetwork& tn, std::span<WorkspaceArena> arenas,
                            int workers) {
  if (workers < 1) throw std::invalid_argument("workers must be at least 1");
  if (arenas.size() < static_cast<std::size_t>(workers)) throw std::invalid_argument("one arena per worker required");
  const auto total = static_cast<std::int64_t>(plan.slices);
  Tensor out = output_tensor(tn);
  std::mutex mu;
  std::condition_variable turn_cv;
  std::int64_t turn = 0;
  bool failed = false;
  std::exception_ptr error;

  auto work = [&](int w) {
    try {
      Executor ex(plan, tn, arenas[at(w)], true);
      for (std::int64_t s = w; s < total; s += workers) {
        Tensor part = ex.slice(s);
        std::unique_lock lock(mu);
        turn_cv.wait(lock, [&] { return turn == s || failed; });
        if (failed) return;
        add_block(out, part, plan, ex.values(s));
        ++turn;
        turn_cv.notify_all();
      }
    } catch (...) {
      std::lock_guard lock(mu);
      if (!failed) error = std::current_exception();
      failed = true;
      turn_cv.notify_all();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace qsimkit
