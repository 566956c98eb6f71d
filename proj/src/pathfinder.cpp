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

#include "qsimkit/pathfinder.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <optional>
#include <thread>
#include <tuple>

namespace qsimkit {
namespace {

// Live labels of a (sub)tree with their occurrence counts inside it.
using ModeCounts = std::vector<std::pair<Label, int>>;

struct Context {
  std::vector<int> total;  // occurrences in the whole network, output included
  std::vector<double> extent;

  explicit Context(const TensorNetwork& tn) : total(tn.label_occurrences()) {
    for (Label l = 0; l < tn.num_labels(); ++l) extent.push_back(static_cast<double>(tn.extent(l)));
  }

  double size(const ModeCounts& m) const {
    double s = 1;
    for (const auto& [l, c] : m) s *= extent[static_cast<std::size_t>(l)];
    return s;
  }

  // Result of joining a and b; `flops` gets the product over the union.
  ModeCounts merge(const ModeCounts& a, const ModeCounts& b, double* flops = nullptr) const {
    ModeCounts out;
    double f = 1;
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
      std::pair<Label, int> e;
      if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
        e = a[i++];
      } else if (i == a.size() || b[j].first < a[i].first) {
        e = b[j++];
      } else {
        e = {a[i].first, a[i].second + b[j].second};
        ++i;
        ++j;
      }
      f *= extent[static_cast<std::size_t>(e.first)];
      if (e.second < total[static_cast<std::size_t>(e.first)]) out.push_back(e);
    }
    if (flops) *flops = f;
    return out;
  }
};

ModeCounts leaf_counts(const Tensor& t) {
  ModeCounts m;
  for (auto l : t.modes) m.emplace_back(l, 1);
  std::sort(m.begin(), m.end());
  return m;
}

std::vector<ModeCounts> leaf_counts(const TensorNetwork& tn) {
  std::vector<ModeCounts> out;
  for (const auto& t : tn.tensors()) out.push_back(leaf_counts(t));
  return out;
}

// Exact minimum-flop order of up to kMaxOptimalTensors items. Returns pairs in
// local SSA numbering: items are [0, m), pair k creates m + k.
std::vector<std::pair<int, int>> dp_order(const std::vector<ModeCounts>& items, const Context& ctx, double* cost = nullptr) {
  const int m = static_cast<int>(items.size());
  if (m > kMaxOptimalTensors) throw CapacityError("too many tensors for the exact path finder");
  if (m <= 1) {
    if (cost) *cost = 0;
    return {};
  }
  const std::uint32_t full = (1u << m) - 1;
  std::vector<double> best(full + 1, 0);
  std::vector<std::uint32_t> split(full + 1, 0);

  // Labels of the region as bits. A label stays live on a subset while some
  // occurrence lies outside it: in another item or outside the region.
  std::vector<Label> local;
  for (const auto& it : items) {
    for (const auto& [l, c] : it) local.push_back(l);
  }
  std::sort(local.begin(), local.end());
  local.erase(std::unique(local.begin(), local.end()), local.end());
  // Up to 256 labels as a few 64-bit words per subset.
  const std::size_t words = (local.size() + 63) / 64;
  const bool narrow = words <= 4;

  std::vector<std::uint64_t> live(narrow ? (full + 1) * words : 0);
  std::vector<double> size(narrow ? full + 1 : 0, 1);
  std::vector<double> ext(local.size());
  std::vector<ModeCounts> modes(narrow ? 0 : full + 1);
  if (narrow) {
    const auto nl = local.size();
    std::vector<std::uint32_t> holders(nl, 0);
    std::vector<bool> external(nl);
    std::vector<int> count(nl, 0);
    for (int i = 0; i < m; ++i) {
      for (const auto& [l, c] : items[static_cast<std::size_t>(i)]) {
        const auto k = static_cast<std::size_t>(std::lower_bound(local.begin(), local.end(), l) - local.begin());
        holders[k] |= 1u << i;
        count[k] += c;
      }
    }
    for (std::size_t k = 0; k < nl; ++k) {
      ext[k] = ctx.extent[static_cast<std::size_t>(local[k])];
      external[k] = count[k] < ctx.total[static_cast<std::size_t>(local[k])];
    }
    for (std::uint32_t s = 1; s <= full; ++s) {
      std::uint64_t* mask = &live[s * words];
      double sz = 1;
      for (std::size_t k = 0; k < nl; ++k) {
        if ((holders[k] & s) && (external[k] || (holders[k] & ~s & full))) {
          mask[k / 64] |= std::uint64_t{1} << (k % 64);
          sz *= ext[k];
        }
      }
      size[s] = sz;
    }
  } else {
    for (std::uint32_t s = 1; s <= full; ++s) {
      const int low = std::countr_zero(s);
      const std::uint32_t rest = s & (s - 1);
      modes[s] = rest == 0 ? items[static_cast<std::size_t>(low)] : ctx.merge(modes[rest], items[static_cast<std::size_t>(low)]);
    }
  }
  // Product of extents over the union of both operands' labels.
  auto join_flops = [&](std::uint32_t a, std::uint32_t b) {
    if (!narrow) {
      double f = 0;
      ctx.merge(modes[a], modes[b], &f);
      return f;
    }
    double shared = 1;
    for (std::size_t w = 0; w < words; ++w) {
      for (std::uint64_t both = live[a * words + w] & live[b * words + w]; both; both &= both - 1) {
        shared *= ext[w * 64 + static_cast<std::size_t>(std::countr_zero(both))];
      }
    }
    return size[a] * size[b] / shared;
  };
  for (std::uint32_t s = 1; s <= full; ++s) {
    if ((s & (s - 1)) == 0) continue;
    best[s] = std::numeric_limits<double>::infinity();
    // Each unordered split once: the part holding the lowest bit is `a`.
    const std::uint32_t low = s & (~s + 1);
    for (std::uint32_t a = (s - 1) & s; a > 0; a = (a - 1) & s) {
      if (!(a & low)) continue;
      const std::uint32_t b = s ^ a;
      const double sub = best[a] + best[b];
      if (sub >= best[s]) continue;
      const double f = join_flops(a, b);
      if (sub + f < best[s]) {
        best[s] = sub + f;
        split[s] = a;
      }
    }
  }
  if (cost) *cost = best[full];
  std::vector<std::pair<int, int>> pairs;
  auto emit = [&](auto&& self, std::uint32_t s) -> int {
    if ((s & (s - 1)) == 0) return std::countr_zero(s);
    const int a = self(self, split[s]);
    const int b = self(self, s ^ split[s]);
    pairs.emplace_back(a, b);
    return m + static_cast<int>(pairs.size()) - 1;
  };
  emit(emit, full);
  return pairs;
}

// Mutable tree with arbitrary node ids; leaves are [0, num_leaves).
struct Builder {
  const Context& ctx;
  int num_leaves = 0;
  std::vector<ModeCounts> modes;
  std::vector<int> left, right;
  std::vector<double> flops;
  std::vector<int> leaf_count;
  int root = -1;

  Builder(const Context& c, std::vector<ModeCounts> leaves) : ctx(c), num_leaves(static_cast<int>(leaves.size())) {
    modes = std::move(leaves);
    left.assign(modes.size(), -1);
    right.assign(modes.size(), -1);
    flops.assign(modes.size(), 0);
    leaf_count.assign(modes.size(), 1);
    if (num_leaves == 1) root = 0;
  }

  int join(int a, int b) {
    double f = 0;
    modes.push_back(ctx.merge(modes[static_cast<std::size_t>(a)], modes[static_cast<std::size_t>(b)], &f));
    left.push_back(a);
    right.push_back(b);
    flops.push_back(f);
    leaf_count.push_back(leaf_count[static_cast<std::size_t>(a)] + leaf_count[static_cast<std::size_t>(b)]);
    return static_cast<int>(modes.size()) - 1;
  }

  bool internal(int v) const { return left[static_cast<std::size_t>(v)] >= 0; }

  // Optimal subtree over `nodes`; returns its root.
  int solve(const std::vector<int>& nodes, double* cost = nullptr) {
    std::vector<ModeCounts> items;
    for (int v : nodes) items.push_back(modes[static_cast<std::size_t>(v)]);
    const auto pairs = dp_order(items, ctx, cost);
    std::vector<int> id(nodes);
    for (const auto& [a, b] : pairs) id.push_back(join(id[static_cast<std::size_t>(a)], id[static_cast<std::size_t>(b)]));
    return id.back();
  }

  ContractionTree to_tree() const {
    ContractionTree t;
    t.num_leaves = num_leaves;
    std::vector<int> ssa(modes.size(), -1);
    for (int i = 0; i < num_leaves; ++i) ssa[static_cast<std::size_t>(i)] = i;
    std::vector<std::pair<int, bool>> stack{{root, false}};
    while (!stack.empty()) {
      auto [v, expanded] = stack.back();
      stack.pop_back();
      if (!internal(v)) continue;
      const auto sv = static_cast<std::size_t>(v);
      if (expanded) {
        t.pairs.emplace_back(ssa[static_cast<std::size_t>(left[sv])], ssa[static_cast<std::size_t>(right[sv])]);
        ssa[sv] = t.num_nodes() - 1;
        continue;
      }
      stack.emplace_back(v, true);
      stack.emplace_back(right[sv], false);
      stack.emplace_back(left[sv], false);
    }
    return t;
  }
};

class Rng {
 public:
  explicit Rng(std::uint64_t key) : key_(key) {}
  double uniform() { return counter_uniform(key_, counter_++); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int integer(int lo, int hi) {
    return lo + static_cast<int>(counter_hash(key_, counter_++) % static_cast<std::uint64_t>(hi - lo + 1));
  }
  std::uint64_t bits() { return counter_hash(key_, counter_++); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Fiduccia-Mattheyses style refinement of a two-way split of `verts` with a
// target fraction `frac` on side 0.
std::pair<std::vector<int>, std::vector<int>> bisect(const Builder& bld, const std::vector<int>& verts, double frac,
                                                     double imbalance, Rng& rng) {
  const int m = static_cast<int>(verts.size());
  struct Edge {
    double w;
    std::vector<int> v;
  };
  std::vector<Edge> edges;
  std::vector<std::vector<int>> incident(static_cast<std::size_t>(m));
  {
    std::vector<std::pair<Label, int>> occ;
    for (int i = 0; i < m; ++i) {
      for (const auto& [l, c] : bld.modes[static_cast<std::size_t>(verts[static_cast<std::size_t>(i)])]) occ.emplace_back(l, i);
    }
    std::sort(occ.begin(), occ.end());
    for (std::size_t a = 0; a < occ.size();) {
      std::size_t b = a;
      while (b < occ.size() && occ[b].first == occ[a].first) ++b;
      if (b - a >= 2) {
        Edge e{std::log2(bld.ctx.extent[static_cast<std::size_t>(occ[a].first)]), {}};
        for (std::size_t k = a; k < b; ++k) {
          e.v.push_back(occ[k].second);
          incident[static_cast<std::size_t>(occ[k].second)].push_back(static_cast<int>(edges.size()));
        }
        edges.push_back(std::move(e));
      }
      a = b;
    }
  }
  const int target = std::clamp(static_cast<int>(std::lround(frac * m)), 1, m - 1);
  const int slack = std::max(1, static_cast<int>(std::lround(imbalance * m / 2)));
  const int lo = std::max(1, target - slack), hi = std::min(m - 1, target + slack);

  auto cut_of = [&](const std::vector<int>& side) {
    double cut = 0;
    for (const auto& e : edges) {
      bool s0 = false, s1 = false;
      for (int v : e.v) (side[static_cast<std::size_t>(v)] == 0 ? s0 : s1) = true;
      if (s0 && s1) cut += e.w;
    }
    return cut;
  };

  std::vector<int> best_side;
  double best_cut = std::numeric_limits<double>::infinity();
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::vector<int> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    for (int i = m - 1; i > 0; --i) std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(rng.integer(0, i))]);
    std::vector<int> side(static_cast<std::size_t>(m), 1);
    for (int i = 0; i < target; ++i) side[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 0;
    std::vector<std::array<int, 2>> cnt(edges.size(), {0, 0});
    for (std::size_t e = 0; e < edges.size(); ++e) {
      for (int v : edges[e].v) ++cnt[e][static_cast<std::size_t>(side[static_cast<std::size_t>(v)])];
    }
    int size0 = target;
    for (int pass = 0; pass < 10; ++pass) {
      std::vector<bool> locked(static_cast<std::size_t>(m), false);
      std::vector<int> moves;
      double cum = 0, best = 0;
      std::size_t best_k = 0;
      for (int step = 0; step < m; ++step) {
        int pick = -1;
        double pick_gain = -std::numeric_limits<double>::infinity();
        for (int v = 0; v < m; ++v) {
          if (locked[static_cast<std::size_t>(v)]) continue;
          const int s = side[static_cast<std::size_t>(v)];
          const int new_size0 = size0 + (s == 0 ? -1 : 1);
          if (new_size0 < lo || new_size0 > hi) continue;
          double gain = 0;
          for (int e : incident[static_cast<std::size_t>(v)]) {
            const auto& c = cnt[static_cast<std::size_t>(e)];
            const bool before = c[0] > 0 && c[1] > 0;
            const bool after = c[static_cast<std::size_t>(s)] > 1;
            gain += edges[static_cast<std::size_t>(e)].w * ((before ? 1 : 0) - (after ? 1 : 0));
          }
          if (gain > pick_gain) {
            pick_gain = gain;
            pick = v;
          }
        }
        if (pick < 0) break;
        const int s = side[static_cast<std::size_t>(pick)];
        for (int e : incident[static_cast<std::size_t>(pick)]) {
          --cnt[static_cast<std::size_t>(e)][static_cast<std::size_t>(s)];
          ++cnt[static_cast<std::size_t>(e)][static_cast<std::size_t>(1 - s)];
        }
        side[static_cast<std::size_t>(pick)] = 1 - s;
        size0 += s == 0 ? -1 : 1;
        locked[static_cast<std::size_t>(pick)] = true;
        moves.push_back(pick);
        cum += pick_gain;
        if (cum > best + 1e-9) {
          best = cum;
          best_k = moves.size();
        }
      }
      for (std::size_t k = moves.size(); k > best_k; --k) {
        const int v = moves[k - 1];
        const int s = side[static_cast<std::size_t>(v)];
        for (int e : incident[static_cast<std::size_t>(v)]) {
          --cnt[static_cast<std::size_t>(e)][static_cast<std::size_t>(s)];
          ++cnt[static_cast<std::size_t>(e)][static_cast<std::size_t>(1 - s)];
        }
        side[static_cast<std::size_t>(v)] = 1 - s;
        size0 += s == 0 ? -1 : 1;
      }
      if (best <= 1e-9) break;
    }
    const double cut = cut_of(side);
    if (cut < best_cut) {
      best_cut = cut;
      best_side = side;
    }
  }
  std::pair<std::vector<int>, std::vector<int>> parts;
  for (int i = 0; i < m; ++i) (best_side[static_cast<std::size_t>(i)] == 0 ? parts.first : parts.second).push_back(verts[static_cast<std::size_t>(i)]);
  return parts;
}

std::vector<std::vector<int>> kway(const Builder& bld, const std::vector<int>& verts, int k, double imbalance, Rng& rng) {
  if (k <= 1 || verts.size() < 2) return {verts};
  k = std::min<int>(k, static_cast<int>(verts.size()));
  const int k0 = k / 2;
  auto [a, b] = bisect(bld, verts, static_cast<double>(k0) / k, imbalance, rng);
  auto out = kway(bld, a, k0, imbalance, rng);
  auto rest = kway(bld, b, k - k0, imbalance, rng);
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

int build_partitioned(Builder& bld, const std::vector<int>& verts, const PartitionConfig& cfg, Rng& rng) {
  if (static_cast<int>(verts.size()) <= cfg.leaf_size) return bld.solve(verts);
  const auto parts = kway(bld, verts, cfg.arity, cfg.imbalance, rng);
  std::vector<int> roots;
  for (const auto& p : parts) roots.push_back(build_partitioned(bld, p, cfg, rng));
  return bld.solve(roots);
}

// Re-solves the region of up to kMaxOptimalTensors frontier items below `v`
// exactly; splices the result in when it is cheaper.
bool resolve_region(Builder& bld, int v, const std::vector<int>& parent) {
  const auto at = [](int i) { return static_cast<std::size_t>(i); };
  std::vector<int> frontier{bld.left[at(v)], bld.right[at(v)]};
  double region_cost = bld.flops[at(v)];
  while (static_cast<int>(frontier.size()) < kMaxOptimalTensors) {
    int pick = -1;
    for (std::size_t i = 0; i < frontier.size(); ++i) {
      const int f = frontier[i];
      if (!bld.internal(f)) continue;
      const int p = pick < 0 ? f : frontier[at(pick)];
      if (pick < 0 || std::tie(bld.leaf_count[at(f)], bld.flops[at(f)]) > std::tie(bld.leaf_count[at(p)], bld.flops[at(p)])) {
        pick = static_cast<int>(i);
      }
    }
    if (pick < 0) break;
    const int f = frontier[at(pick)];
    region_cost += bld.flops[at(f)];
    frontier[at(pick)] = bld.left[at(f)];
    frontier.push_back(bld.right[at(f)]);
  }
  std::vector<ModeCounts> items;
  for (int f : frontier) items.push_back(bld.modes[at(f)]);
  double cost = 0;
  const auto pairs = dp_order(items, bld.ctx, &cost);
  if (!(cost < region_cost * (1 - 1e-12))) return false;
  std::vector<int> id(frontier);
  for (const auto& [a, b] : pairs) id.push_back(bld.join(id[at(a)], id[at(b)]));
  const int fresh = id.back();
  const int p = parent[at(v)];
  if (p < 0) {
    bld.root = fresh;
  } else if (bld.left[at(p)] == v) {
    bld.left[at(p)] = fresh;
  } else {
    bld.right[at(p)] = fresh;
  }
  return true;
}

// Hot spots: the most expensive nodes. Each is re-solved together with a few
// ancestors, so a costly subtree can bubble up past a poor partition cut.
void bubble(Builder& bld, int passes, int subtrees) {
  constexpr int kClimb = 3;
  const auto at = [](int i) { return static_cast<std::size_t>(i); };
  std::vector<int> parent;
  std::vector<bool> live;
  auto index = [&] {
    parent.assign(bld.modes.size(), -1);
    live.assign(bld.modes.size(), false);
    std::vector<int> stack{bld.root};
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      live[at(v)] = true;
      if (!bld.internal(v)) continue;
      for (int c : {bld.left[at(v)], bld.right[at(v)]}) {
        parent[at(c)] = v;
        stack.push_back(c);
      }
    }
  };
  for (int pass = 0; pass < passes; ++pass) {
    index();
    std::vector<int> hot;
    for (std::size_t v = 0; v < live.size(); ++v) {
      if (live[v] && bld.internal(static_cast<int>(v))) hot.push_back(static_cast<int>(v));
    }
    std::sort(hot.begin(), hot.end(), [&](int a, int b) { return std::tie(bld.flops[at(b)], a) < std::tie(bld.flops[at(a)], b); });
    if (static_cast<int>(hot.size()) > subtrees) hot.resize(at(subtrees));
    bool changed = false;
    // Hot nodes often share ancestors; an unchanged region is not retried.
    std::vector<bool> tried(bld.modes.size(), false);
    for (int h : hot) {
      if (!live[at(h)]) continue;
      std::vector<int> roots{h};
      for (int k = 0; k < kClimb && parent[at(roots.back())] >= 0; ++k) roots.push_back(parent[at(roots.back())]);
      // Widest region first.
      for (auto r = roots.rbegin(); r != roots.rend(); ++r) {
        if (tried[at(*r)]) continue;
        tried[at(*r)] = true;
        if (resolve_region(bld, *r, parent)) {
          tried.resize(bld.modes.size(), false);
          index();
          changed = true;
          break;
        }
      }
    }
    if (!changed) break;
  }
}

double total_flops(const TensorNetwork& tn, const ContractionTree& tree) { return path_cost(tn, tree).total_flops; }

}  // namespace

SimplifyResult simplify(const TensorNetwork& tn, bool with_data) {
  const Context ctx(tn);
  const int n = tn.num_tensors();
  std::vector<ModeCounts> items = leaf_counts(tn);
  std::vector<Tensor> values;
  if (with_data) values = tn.tensors();
  std::vector<int> ssa(static_cast<std::size_t>(n));
  std::iota(ssa.begin(), ssa.end(), 0);
  std::vector<bool> alive(static_cast<std::size_t>(n), true);
  int live = n;
  SimplifyResult out;

  bool changed = true;
  while (changed && live > 1) {
    changed = false;
    for (int i = 0; i < n && live > 1; ++i) {
      if (!alive[static_cast<std::size_t>(i)]) continue;
      for (int j = 0; j < n && live > 1; ++j) {
        if (j == i || !alive[static_cast<std::size_t>(j)]) continue;
        const auto& a = items[static_cast<std::size_t>(i)];
        const auto& b = items[static_cast<std::size_t>(j)];
        bool linked = a.empty() || b.empty();
        for (std::size_t x = 0, y = 0; !linked && x < a.size() && y < b.size();) {
          if (a[x].first == b[y].first) {
            linked = true;
          } else if (a[x].first < b[y].first) {
            ++x;
          } else {
            ++y;
          }
        }
        if (!linked) continue;
        auto merged = ctx.merge(a, b);
        if (ctx.size(merged) > std::max(ctx.size(a), ctx.size(b))) continue;
        const int lo = std::min(i, j), hi = std::max(i, j);
        out.pre.emplace_back(ssa[static_cast<std::size_t>(lo)], ssa[static_cast<std::size_t>(hi)]);
        if (with_data) {
          std::vector<Label> keep;
          for (const auto& [l, c] : merged) keep.push_back(l);
          values[static_cast<std::size_t>(lo)] =
              contract_pair(values[static_cast<std::size_t>(lo)], values[static_cast<std::size_t>(hi)], keep);
        }
        items[static_cast<std::size_t>(lo)] = std::move(merged);
        ssa[static_cast<std::size_t>(lo)] = n + static_cast<int>(out.pre.size()) - 1;
        alive[static_cast<std::size_t>(hi)] = false;
        --live;
        changed = true;
        if (hi == i) break;
      }
    }
  }

  for (Label l = 0; l < tn.num_labels(); ++l) out.network.add_label(tn.label_name(l), tn.extent(l));
  for (int i = 0; i < n; ++i) {
    if (!alive[static_cast<std::size_t>(i)]) continue;
    out.origin.push_back(ssa[static_cast<std::size_t>(i)]);
    if (ssa[static_cast<std::size_t>(i)] == i) {
      const Tensor& t = tn.tensor(i);
      out.network.add_tensor(t.modes, with_data ? t.data : TensorData{}, t.constant);
    } else {
      std::vector<Label> modes;
      for (const auto& [l, c] : items[static_cast<std::size_t>(i)]) modes.push_back(l);
      if (with_data) {
        const Tensor& v = values[static_cast<std::size_t>(i)];
        out.network.add_tensor(v.modes, v.data, v.constant);
      } else {
        out.network.add_tensor(modes);
      }
    }
  }
  out.network.set_output(tn.output());
  return out;
}

ContractionTree expand_simplified(const SimplifyResult& s, const ContractionTree& reduced) {
  validate_tree(reduced, s.network.num_tensors());
  ContractionTree t;
  // Original leaf count: every pre-contraction removed one tensor.
  t.num_leaves = s.network.num_tensors() + static_cast<int>(s.pre.size());
  t.pairs = s.pre;
  t.sliced = reduced.sliced;
  const int base = t.num_nodes();
  auto map = [&](int v) {
    return v < reduced.num_leaves ? s.origin[static_cast<std::size_t>(v)] : base + (v - reduced.num_leaves);
  };
  for (const auto& [a, b] : reduced.pairs) t.pairs.emplace_back(map(a), map(b));
  return t;
}

ContractionTree greedy_path(const TensorNetwork& tn, const GreedyWeights& weights, std::uint64_t seed) {
  if (tn.num_tensors() < 1) throw std::invalid_argument("empty network");
  const Context ctx(tn);
  std::vector<ModeCounts> items = leaf_counts(tn);
  std::vector<int> ssa(items.size());
  std::iota(ssa.begin(), ssa.end(), 0);
  std::vector<bool> alive(items.size(), true);
  std::vector<bool> konst;
  for (int t = 0; t < tn.num_tensors(); ++t) konst.push_back(weights.constant_first_cap > 0 && tn.tensor(t).constant);
  std::vector<std::vector<int>> holders(static_cast<std::size_t>(tn.num_labels()));
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (const auto& [l, c] : items[i]) holders[static_cast<std::size_t>(l)].push_back(static_cast<int>(i));
  }
  ContractionTree tree;
  tree.num_leaves = tn.num_tensors();
  int live = tn.num_tensors();
  std::uint64_t step = 0;

  while (live > 1) {
    struct Cand {
      int tier;
      double score, flops;
      int i, j;
    };
    std::optional<Cand> best;
    auto better = [](const Cand& x, const Cand& y) {
      return std::tie(x.tier, x.score, x.flops, x.i, x.j) < std::tie(y.tier, y.score, y.flops, y.i, y.j);
    };
    for (const auto& h : holders) {
      for (std::size_t x = 0; x < h.size(); ++x) {
        for (std::size_t y = x + 1; y < h.size(); ++y) {
          const int i = std::min(h[x], h[y]), j = std::max(h[x], h[y]);
          const auto& a = items[static_cast<std::size_t>(i)];
          const auto& b = items[static_cast<std::size_t>(j)];
          double f = 0;
          const double sz = ctx.size(ctx.merge(a, b, &f));
          const double operands = ctx.size(a) + ctx.size(b);
          double score = sz - weights.alpha * operands;
          if (weights.temperature > 0) {
            const double u = counter_uniform(counter_hash(seed, step), static_cast<std::uint64_t>(i) << 32 | static_cast<std::uint64_t>(j));
            const double gumbel = -std::log(-std::log(std::max(u, 1e-300)));
            score -= weights.temperature * gumbel * operands;
          }
          const bool first = konst[static_cast<std::size_t>(i)] && konst[static_cast<std::size_t>(j)] && sz <= weights.constant_first_cap;
          const Cand c{first ? 0 : 1, score, f, i, j};
          if (!best || better(c, *best)) best = c;
        }
      }
    }
    if (!best) {
      // No shared labels left: join the two smallest tensors.
      std::vector<std::pair<double, int>> by_size;
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (alive[i]) by_size.emplace_back(ctx.size(items[i]), static_cast<int>(i));
      }
      std::partial_sort(by_size.begin(), by_size.begin() + 2, by_size.end());
      best = Cand{1, 0, 0, std::min(by_size[0].second, by_size[1].second), std::max(by_size[0].second, by_size[1].second)};
    }
    const int i = best->i, j = best->j;
    for (int v : {i, j}) {
      alive[static_cast<std::size_t>(v)] = false;
      for (const auto& [l, c] : items[static_cast<std::size_t>(v)]) {
        auto& h = holders[static_cast<std::size_t>(l)];
        h.erase(std::remove(h.begin(), h.end(), v), h.end());
      }
    }
    items.push_back(ctx.merge(items[static_cast<std::size_t>(i)], items[static_cast<std::size_t>(j)]));
    alive.push_back(true);
    konst.push_back(konst[static_cast<std::size_t>(i)] && konst[static_cast<std::size_t>(j)]);
    const int fresh = static_cast<int>(items.size()) - 1;
    for (const auto& [l, c] : items.back()) holders[static_cast<std::size_t>(l)].push_back(fresh);
    tree.pairs.emplace_back(ssa[static_cast<std::size_t>(i)], ssa[static_cast<std::size_t>(j)]);
    ssa.push_back(tree.num_nodes() - 1);
    --live;
    ++step;
  }
  return tree;
}

ContractionTree optimal_path(const TensorNetwork& tn) {
  if (tn.num_tensors() < 1) throw std::invalid_argument("empty network");
  const Context ctx(tn);
  ContractionTree tree;
  tree.num_leaves = tn.num_tensors();
  tree.pairs = dp_order(leaf_counts(tn), ctx);
  return tree;
}

ContractionTree partition_path(const TensorNetwork& tn, const PartitionConfig& cfg) {
  if (tn.num_tensors() < 1) throw std::invalid_argument("empty network");
  if (cfg.arity < 2) throw std::invalid_argument("partition arity must be >= 2");
  if (cfg.leaf_size < 2 || cfg.leaf_size > kMaxOptimalTensors) throw std::invalid_argument("leaf size must be in [2, 12]");
  const Context ctx(tn);
  Builder bld(ctx, leaf_counts(tn));
  Rng rng(counter_hash(cfg.seed, 0x9a27));
  std::vector<int> all(static_cast<std::size_t>(tn.num_tensors()));
  std::iota(all.begin(), all.end(), 0);
  bld.root = build_partitioned(bld, all, cfg, rng);
  bubble(bld, cfg.bubbling_passes, cfg.bubbling_subtrees);
  return bld.to_tree();
}

SliceSelection select_slices(const TensorNetwork& tn, const ContractionTree& tree, double memory_budget) {
  validate_tree(tree, tn.num_tensors());
  ContractionTree t = tree;
  t.sliced.clear();
  const double unsliced = total_flops(tn, t);
  SliceSelection out;
  auto largest = [&](const std::vector<NodeInfo>& nodes) {
    double m = 0;
    for (int v = t.num_leaves; v < t.num_nodes(); ++v) m = std::max(m, nodes[static_cast<std::size_t>(v)].size);
    return m;
  };
  auto nodes = annotate(tn, t);
  double current_flops = unsliced;
  while (largest(nodes) * kBytesPerElement > memory_budget) {
    // Candidates: labels of the three largest intermediates.
    std::vector<int> internal;
    for (int v = t.num_leaves; v < t.num_nodes(); ++v) internal.push_back(v);
    std::stable_sort(internal.begin(), internal.end(), [&](int a, int b) {
      return nodes[static_cast<std::size_t>(a)].size > nodes[static_cast<std::size_t>(b)].size;
    });
    std::vector<Label> cands;
    for (std::size_t k = 0; k < std::min<std::size_t>(3, internal.size()); ++k) {
      for (auto l : nodes[static_cast<std::size_t>(internal[k])].modes) cands.push_back(l);
    }
    std::sort(cands.begin(), cands.end());
    cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
    if (cands.empty()) throw InfeasibleError("memory budget cannot be met even with every label sliced");
    const double cur_largest = largest(nodes);
    struct Choice {
      double ratio, reduction;
      Label l;
    };
    std::optional<Choice> best;
    for (auto l : cands) {
      ContractionTree trial = t;
      trial.sliced.push_back(l);
      const auto tn_nodes = annotate(tn, trial);
      const double reduction = cur_largest - largest(tn_nodes);
      const double added = total_flops(tn, trial) - current_flops;
      const double ratio = reduction / std::max(added, 1.0);
      if (!best || ratio > best->ratio || (ratio == best->ratio && reduction > best->reduction)) best = Choice{ratio, reduction, l};
    }
    t.sliced.push_back(best->l);
    nodes = annotate(tn, t);
    current_flops = total_flops(tn, t);
  }
  out.sliced = t.sliced;
  out.overhead = unsliced > 0 ? current_flops / unsliced : 1.0;
  return out;
}

std::uint64_t tree_hash(const ContractionTree& tree) {
  std::uint64_t h = counter_hash(0x51ced, static_cast<std::uint64_t>(tree.num_leaves));
  for (const auto& [a, b] : tree.pairs) {
    h = counter_hash(h, static_cast<std::uint64_t>(std::min(a, b)) << 32 | static_cast<std::uint64_t>(std::max(a, b)));
  }
  for (auto l : tree.sliced) h = counter_hash(h ^ 0xabcdef, static_cast<std::uint64_t>(l));
  return h;
}

double warm_flops(const TensorNetwork& tn, const ContractionTree& tree) {
  const auto nodes = annotate(tn, tree);
  std::vector<bool> konst(static_cast<std::size_t>(tree.num_nodes()));
  for (int i = 0; i < tree.num_leaves; ++i) konst[static_cast<std::size_t>(i)] = tn.tensor(i).constant;
  double flops = 0;
  for (int v = tree.num_leaves; v < tree.num_nodes(); ++v) {
    const auto& nd = nodes[static_cast<std::size_t>(v)];
    konst[static_cast<std::size_t>(v)] = konst[static_cast<std::size_t>(nd.left)] && konst[static_cast<std::size_t>(nd.right)];
    if (!konst[static_cast<std::size_t>(v)] || v == tree.root()) flops += nd.flops;
  }
  return flops * num_slices(tn, tree.sliced);
}

OptimizerResult find_path(const TensorNetwork& tn, const OptimizerConfig& cfg) {
  if (cfg.num_hyper_samples < 1) throw std::invalid_argument("num_hyper_samples must be >= 1");
  if (cfg.min_arity < 2 || cfg.max_arity < cfg.min_arity) throw std::invalid_argument("bad partition arity range");
  if (tn.num_tensors() < 1) throw std::invalid_argument("empty network");
  if (!(cfg.repetitions >= 1)) throw std::invalid_argument("repetitions must be >= 1");
  const SimplifyResult simp = simplify(tn, false);
  const TensorNetwork& reduced = simp.network;
  // Constant-first candidates only matter for repeated runs over mixed
  // constness. Their cap spans leaf sizes up to a few times the baseline's
  // largest intermediate.
  bool any_constant = false, any_mutable = false;
  double largest_leaf = 1;
  for (const auto& t : tn.tensors()) {
    (t.constant ? any_constant : any_mutable) = true;
    largest_leaf = std::max(largest_leaf, static_cast<double>(t.size()));
  }
  const bool amortize = cfg.repetitions > 1 && any_constant && any_mutable;
  const double baseline_peak = amortize ? path_cost(tn, greedy_path(tn)).largest_intermediate : 0;

  struct Outcome {
    std::optional<OptimizerResult> result;
    std::exception_ptr error;
  };
  std::vector<Outcome> outcomes(static_cast<std::size_t>(cfg.num_hyper_samples));

  auto run_sample = [&](int i) {
    Rng rng(counter_hash(cfg.seed, static_cast<std::uint64_t>(i)));
    OptimizerResult r;
    r.sample = i;
    ContractionTree tree;
    if (i == 0) {
      // The unmodified baseline, so the result never loses to greedy_path.
      tree = greedy_path(tn);
      r.method = "greedy";
    } else if (amortize && i == 2) {
      GreedyWeights w;
      w.constant_first_cap = baseline_peak;
      tree = greedy_path(tn, w);
      r.method = "constant-first";
    } else if (amortize && i > 2 && rng.uniform() < 0.5) {
      GreedyWeights w{rng.uniform(cfg.min_alpha, cfg.max_alpha), rng.uniform(0, cfg.max_temperature)};
      const double lo = std::log2(largest_leaf), hi = std::log2(std::max(baseline_peak, largest_leaf)) + 2;
      w.constant_first_cap = std::exp2(rng.uniform(lo, hi));
      tree = greedy_path(tn, w, rng.bits());
      r.method = "constant-first";
    } else if (i == 1 && tn.num_tensors() <= kMaxOptimalTensors) {
      tree = optimal_path(tn);
      r.method = "optimal";
    } else if (i == 1 && reduced.num_tensors() <= kMaxOptimalTensors) {
      tree = expand_simplified(simp, optimal_path(reduced));
      r.method = "optimal";
    } else if (rng.uniform() < 0.5 || reduced.num_tensors() < 3) {
      const GreedyWeights w{rng.uniform(cfg.min_alpha, cfg.max_alpha), rng.uniform(0, cfg.max_temperature)};
      tree = expand_simplified(simp, greedy_path(reduced, w, rng.bits()));
      r.method = "greedy";
    } else {
      PartitionConfig p;
      p.arity = rng.integer(cfg.min_arity, cfg.max_arity);
      p.imbalance = rng.uniform(cfg.min_imbalance, cfg.max_imbalance);
      p.leaf_size = rng.integer(6, kMaxOptimalTensors);
      p.seed = rng.bits();
      tree = expand_simplified(simp, partition_path(reduced, p));
      r.method = "partition";
    }
    r.unsliced_flops = total_flops(tn, tree);
    const auto sel = select_slices(tn, tree, cfg.memory_budget);
    tree.sliced = sel.sliced;
    const auto cost = path_cost(tn, tree);
    r.total_flops = cost.total_flops;
    r.overhead = sel.overhead;
    r.slices = cost.slices;
    r.largest_intermediate = cost.largest_intermediate;
    r.warm_flops = warm_flops(tn, tree);
    r.tree = std::move(tree);
    return r;
  };

  auto worker = [&](std::atomic<int>& next) {
    for (int i = next++; i < cfg.num_hyper_samples; i = next++) {
      try {
        outcomes[static_cast<std::size_t>(i)].result = run_sample(i);
      } catch (...) {
        outcomes[static_cast<std::size_t>(i)].error = std::current_exception();
      }
    }
  };
  std::atomic<int> next{0};
  const int threads = std::clamp(cfg.threads, 1, cfg.num_hyper_samples);
  if (threads == 1) {
    worker(next);
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back([&] { worker(next); });
  }

  const OptimizerResult* best = nullptr;
  auto key = [&](const OptimizerResult& r) {
    const double amortized = r.total_flops + (cfg.repetitions - 1) * r.warm_flops;
    return std::make_tuple(r.overhead > cfg.max_slicing_overhead, amortized, r.total_flops, tree_hash(r.tree));
  };
  for (const auto& o : outcomes) {
    if (o.result && (!best || key(*o.result) < key(*best))) best = &*o.result;
  }
  // Infeasible budgets only disqualify a sample; anything else is a bug.
  std::exception_ptr infeasible;
  for (const auto& o : outcomes) {
    if (!o.error) continue;
    try {
      std::rethrow_exception(o.error);
    } catch (const InfeasibleError&) {
      infeasible = o.error;
    }
  }
  if (!best) std::rethrow_exception(infeasible);
  return *best;
}

}  // namespace qsimkit
