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

#include "qsimkit/tn.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace qsimkit {

Extent Tensor::size() const {
  return std::accumulate(extents.begin(), extents.end(), Extent{1}, std::multiplies<>());
}

int Tensor::axis(Label label) const {
  auto it = std::find(modes.begin(), modes.end(), label);
  return it == modes.end() ? -1 : static_cast<int>(it - modes.begin());
}

Label TensorNetwork::add_label(const std::string& name, Extent extent) {
  if (extent < 1) throw std::invalid_argument("extent must be >= 1");
  if (auto it = by_name_.find(name); it != by_name_.end()) {
    if (extents_[static_cast<std::size_t>(it->second)] != extent) {
      throw std::invalid_argument("inconsistent extent for label '" + name + "'");
    }
    return it->second;
  }
  const Label l = static_cast<Label>(names_.size());
  names_.push_back(name);
  extents_.push_back(extent);
  by_name_.emplace(name, l);
  return l;
}

Label TensorNetwork::label(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw std::invalid_argument("unknown label '" + name + "'");
  return it->second;
}

int TensorNetwork::add_tensor(std::vector<Label> modes, TensorData data, bool constant) {
  Tensor t;
  for (auto l : modes) {
    if (l < 0 || l >= num_labels()) throw std::invalid_argument("tensor uses an unregistered label");
    if (std::count(modes.begin(), modes.end(), l) != 1) {
      throw std::invalid_argument("label repeated within one tensor");
    }
    t.extents.push_back(extent(l));
  }
  t.modes = std::move(modes);
  if (data.size() != 0 && data.size() != t.size()) throw std::invalid_argument("tensor data length mismatch");
  t.data = std::move(data);
  t.constant = constant;
  tensors_.push_back(std::move(t));
  return num_tensors() - 1;
}

void TensorNetwork::set_data(int id, TensorData data) {
  Tensor& t = tensors_.at(static_cast<std::size_t>(id));
  if (data.size() != t.size()) throw std::invalid_argument("tensor data length mismatch");
  t.data = std::move(data);
  if (t.constant) ++generation_;
}

void TensorNetwork::mark_constant(std::span<const int> ids, bool constant) {
  for (int id : ids) tensors_.at(static_cast<std::size_t>(id)).constant = constant;
  ++generation_;
}

void TensorNetwork::set_output(std::vector<Label> output) {
  for (auto l : output) {
    if (l < 0 || l >= num_labels()) throw std::invalid_argument("unknown output label");
    if (std::count(output.begin(), output.end(), l) != 1) throw std::invalid_argument("repeated output label");
    const bool present =
        std::any_of(tensors_.begin(), tensors_.end(), [l](const Tensor& t) { return t.has(l); });
    if (!present) throw std::invalid_argument("output label '" + label_name(l) + "' is on no tensor");
  }
  output_ = std::move(output);
}

std::vector<int> TensorNetwork::label_occurrences() const {
  std::vector<int> count(static_cast<std::size_t>(num_labels()), 0);
  for (const auto& t : tensors_) {
    for (auto l : t.modes) ++count[static_cast<std::size_t>(l)];
  }
  for (auto l : output_) ++count[static_cast<std::size_t>(l)];
  return count;
}

namespace {

std::vector<std::vector<std::string>> tokenize_terms(const std::string& spec) {
  std::vector<std::vector<std::string>> terms(1);
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const char c = spec[i];
    if (c == ' ') continue;
    if (c == ',') {
      terms.emplace_back();
    } else if (c == '[') {
      const auto close = spec.find(']', i);
      if (close == std::string::npos || close == i + 1) throw std::invalid_argument("bad bracketed label");
      terms.back().push_back(spec.substr(i + 1, close - i - 1));
      i = close;
    } else if (c == ']' || c == '-' || c == '>') {
      throw std::invalid_argument(std::string("unexpected '") + c + "' in einsum expression");
    } else {
      terms.back().emplace_back(1, c);
    }
  }
  return terms;
}

std::pair<std::vector<std::vector<std::string>>, std::vector<std::string>> split_einsum(const std::string& expr) {
  const auto arrow = expr.find("->");
  if (arrow == std::string::npos) throw std::invalid_argument("einsum expression needs an explicit '->'");
  auto inputs = tokenize_terms(expr.substr(0, arrow));
  auto outputs = tokenize_terms(expr.substr(arrow + 2));
  if (outputs.size() != 1) throw std::invalid_argument("einsum output must be a single term");
  return {std::move(inputs), std::move(outputs.front())};
}

TensorNetwork build_network(const std::vector<std::vector<std::string>>& inputs, const std::vector<std::string>& output,
                            const std::function<Extent(std::size_t term, std::size_t pos, const std::string&)>& extent_of) {
  TensorNetwork tn;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    std::vector<Label> modes;
    for (std::size_t p = 0; p < inputs[t].size(); ++p) modes.push_back(tn.add_label(inputs[t][p], extent_of(t, p, inputs[t][p])));
    tn.add_tensor(std::move(modes));
  }
  std::vector<Label> out;
  for (const auto& name : output) out.push_back(tn.label(name));
  tn.set_output(std::move(out));
  return tn;
}

}  // namespace

TensorNetwork parse_einsum(const std::string& expr, const std::unordered_map<std::string, Extent>& extents) {
  const auto [inputs, output] = split_einsum(expr);
  return build_network(inputs, output, [&](std::size_t, std::size_t, const std::string& name) {
    auto it = extents.find(name);
    if (it == extents.end()) throw std::invalid_argument("no extent given for label '" + name + "'");
    return it->second;
  });
}

TensorNetwork parse_einsum(const std::string& expr, const std::vector<std::vector<Extent>>& shapes) {
  const auto [inputs, output] = split_einsum(expr);
  if (shapes.size() != inputs.size()) throw std::invalid_argument("operand count does not match expression");
  return build_network(inputs, output, [&](std::size_t t, std::size_t p, const std::string&) {
    if (shapes[t].size() != inputs[t].size()) throw std::invalid_argument("operand rank does not match expression");
    return shapes[t][p];
  });
}

std::string to_einsum(const TensorNetwork& tn) {
  auto name = [&](Label l) {
    const auto& s = tn.label_name(l);
    if (s.size() == 1 && s[0] != '[' && s[0] != ',' && s[0] != ' ' && s[0] != '-' && s[0] != '>') return s;
    return "[" + s + "]";
  };
  std::string out;
  for (int t = 0; t < tn.num_tensors(); ++t) {
    if (t > 0) out += ',';
    for (auto l : tn.tensor(t).modes) out += name(l);
  }
  out += "->";
  for (auto l : tn.output()) out += name(l);
  return out;
}

std::vector<Label> pair_result_modes(const Tensor& a, const Tensor& b, std::span<const Label> keep) {
  std::vector<Label> out;
  for (const Tensor* t : {&a, &b}) {
    for (auto l : t->modes) {
      if (std::find(keep.begin(), keep.end(), l) != keep.end()) out.push_back(l);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

PairwiseCost pair_cost(const Tensor& a, const Tensor& b, std::span<const Label> keep) {
  PairwiseCost c;
  c.flops = static_cast<double>(a.size());
  c.intermediate_size = 1;
  for (std::size_t i = 0; i < b.modes.size(); ++i) {
    if (!a.has(b.modes[i])) c.flops *= static_cast<double>(b.extents[i]);
  }
  for (const Tensor* t : {&a, &b}) {
    for (std::size_t i = 0; i < t->modes.size(); ++i) {
      const Label l = t->modes[i];
      if (std::find(keep.begin(), keep.end(), l) == keep.end()) continue;
      if (t == &b && a.has(l)) continue;
      c.intermediate_size *= static_cast<double>(t->extents[i]);
    }
  }
  return c;
}

namespace {

Tensor transpose(const Tensor& t, std::span<const Label> modes) {
  if (!t.bound()) throw std::invalid_argument("tensor data is not bound");
  const int r = t.rank();
  Tensor out;
  out.modes.assign(modes.begin(), modes.end());
  out.constant = t.constant;
  std::vector<Extent> src_stride(static_cast<std::size_t>(r), 1);
  for (int i = r - 2; i >= 0; --i) {
    src_stride[static_cast<std::size_t>(i)] = src_stride[static_cast<std::size_t>(i + 1)] * t.extents[static_cast<std::size_t>(i + 1)];
  }
  std::vector<Extent> stride;  // source stride of each destination axis
  bool identity = true;
  for (int i = 0; i < r; ++i) {
    const int ax = t.axis(modes[static_cast<std::size_t>(i)]);
    identity = identity && ax == i;
    out.extents.push_back(t.extents[static_cast<std::size_t>(ax)]);
    stride.push_back(src_stride[static_cast<std::size_t>(ax)]);
  }
  if (identity) {
    out.data = t.data;
    return out;
  }
  out.data.resize(t.data.size());
  if (r == 0) {
    out.data = t.data;
    return out;
  }
  const Extent inner = out.extents.back();
  const Extent inner_stride = stride.back();
  std::vector<Extent> idx(static_cast<std::size_t>(r), 0);
  Extent src = 0;
  const cplx* in = t.data.data();
  cplx* dst = out.data.data();
  const Extent total = out.data.size();
  for (Extent d = 0; d < total; d += inner) {
    for (Extent k = 0; k < inner; ++k) dst[d + k] = in[src + k * inner_stride];
    for (int ax = r - 2; ax >= 0; --ax) {
      const auto a = static_cast<std::size_t>(ax);
      if (++idx[a] < out.extents[a]) {
        src += stride[a];
        break;
      }
      src -= stride[a] * (out.extents[a] - 1);
      idx[a] = 0;
    }
  }
  return out;
}

bool contains(std::span<const Label> v, Label l) { return std::find(v.begin(), v.end(), l) != v.end(); }

Extent product_of(const Tensor& t, std::span<const Label> labels) {
  Extent p = 1;
  for (auto l : labels) p *= t.extents[static_cast<std::size_t>(t.axis(l))];
  return p;
}

}  // namespace

Tensor reduce_to(const Tensor& t, std::span<const Label> modes) {
  for (auto l : modes) {
    if (!t.has(l)) throw std::invalid_argument("reduce_to target mode missing from tensor");
  }
  std::vector<Label> order(modes.begin(), modes.end());
  std::vector<Label> removed;
  for (auto l : t.modes) {
    if (!contains(modes, l)) removed.push_back(l);
  }
  order.insert(order.end(), removed.begin(), removed.end());
  Tensor p = transpose(t, order);
  if (removed.empty()) return p;
  const Extent block = product_of(p, removed);
  Tensor out;
  out.modes.assign(modes.begin(), modes.end());
  out.extents.assign(p.extents.begin(), p.extents.begin() + static_cast<std::ptrdiff_t>(modes.size()));
  out.constant = t.constant;
  const Extent n = p.data.size() / block;
  out.data.resize(n);
  for (Extent i = 0; i < n; ++i) out.data(i) = p.data.segment(i * block, block).sum();
  return out;
}

Tensor select(const Tensor& t, Label label, Extent value) {
  const int ax = t.axis(label);
  if (ax < 0) throw std::invalid_argument("select label missing from tensor");
  if (value < 0 || value >= t.extents[static_cast<std::size_t>(ax)]) throw std::out_of_range("slice value out of range");
  std::vector<Label> order{label};
  for (auto l : t.modes) {
    if (l != label) order.push_back(l);
  }
  Tensor p = transpose(t, order);
  Tensor out;
  out.modes.assign(order.begin() + 1, order.end());
  out.extents.assign(p.extents.begin() + 1, p.extents.end());
  out.constant = t.constant;
  const Extent len = p.data.size() / p.extents.front();
  out.data = p.data.segment(value * len, len);
  return out;
}

Tensor contract_pair(const Tensor& a0, const Tensor& b0, std::span<const Label> keep, KernelVariant variant) {
  for (std::size_t i = 0; i < a0.modes.size(); ++i) {
    const int bx = b0.axis(a0.modes[i]);
    if (bx >= 0 && b0.extents[static_cast<std::size_t>(bx)] != a0.extents[i]) {
      throw std::invalid_argument("extent mismatch on shared label");
    }
  }
  // Labels private to one operand and not kept are summed up front.
  auto own_modes = [&](const Tensor& t, const Tensor& other) {
    std::vector<Label> m;
    for (auto l : t.modes) {
      if (other.has(l) || contains(keep, l)) m.push_back(l);
    }
    return m;
  };
  const auto am = own_modes(a0, b0);
  const auto bm = own_modes(b0, a0);
  const Tensor a = am.size() == a0.modes.size() ? a0 : reduce_to(a0, am);
  const Tensor b = bm.size() == b0.modes.size() ? b0 : reduce_to(b0, bm);

  std::vector<Label> batch, con, af, bf;
  for (auto l : a.modes) {
    if (b.has(l)) {
      (contains(keep, l) ? batch : con).push_back(l);
    } else {
      af.push_back(l);
    }
  }
  for (auto l : b.modes) {
    if (!a.has(l)) bf.push_back(l);
  }
  const Extent nb = product_of(a, batch), nc = product_of(a, con), na = product_of(a, af), nbf = product_of(b, bf);

  auto concat = [](std::initializer_list<const std::vector<Label>*> parts) {
    std::vector<Label> v;
    for (const auto* p : parts) v.insert(v.end(), p->begin(), p->end());
    return v;
  };
  Tensor c;
  std::vector<Label> c_modes;
  if (variant == KernelVariant::kGemmAB) {
    // C[batch, af, bf] = A[batch, af, con] B[batch, con, bf]
    const Tensor ap = transpose(a, concat({&batch, &af, &con}));
    const Tensor bp = transpose(b, concat({&batch, &con, &bf}));
    c_modes = concat({&batch, &af, &bf});
    c.data.resize(nb * na * nbf);
    for (Extent k = 0; k < nb; ++k) {
      // Row-major X(r, c) is the column-major map of X^T.
      Eigen::Map<const Eigen::MatrixXcd> at(ap.data.data() + k * na * nc, nc, na);
      Eigen::Map<const Eigen::MatrixXcd> bt(bp.data.data() + k * nc * nbf, nbf, nc);
      Eigen::Map<Eigen::MatrixXcd> ct(c.data.data() + k * na * nbf, nbf, na);
      ct.noalias() = bt * at;
    }
  } else {
    // C[batch, bf, af] = B[batch, bf, con] A[batch, con, af]
    const Tensor ap = transpose(a, concat({&batch, &con, &af}));
    const Tensor bp = transpose(b, concat({&batch, &bf, &con}));
    c_modes = concat({&batch, &bf, &af});
    c.data.resize(nb * na * nbf);
    for (Extent k = 0; k < nb; ++k) {
      Eigen::Map<const Eigen::MatrixXcd> at(ap.data.data() + k * na * nc, na, nc);
      Eigen::Map<const Eigen::MatrixXcd> bt(bp.data.data() + k * nc * nbf, nc, nbf);
      Eigen::Map<Eigen::MatrixXcd> ct(c.data.data() + k * na * nbf, na, nbf);
      ct.noalias() = at * bt;
    }
  }
  c.modes = c_modes;
  for (auto l : c_modes) c.extents.push_back(a.has(l) ? a.extents[static_cast<std::size_t>(a.axis(l))] : b.extents[static_cast<std::size_t>(b.axis(l))]);
  c.constant = a0.constant && b0.constant;
  std::vector<Label> sorted = c_modes;
  std::sort(sorted.begin(), sorted.end());
  return sorted == c_modes ? c : transpose(c, sorted);
}

void validate_tree(const ContractionTree& tree, int num_tensors) {
  if (tree.num_leaves != num_tensors) throw std::invalid_argument("tree leaf count does not match the network");
  if (num_tensors < 1) throw std::invalid_argument("tree over an empty network");
  if (static_cast<int>(tree.pairs.size()) != num_tensors - 1) throw std::invalid_argument("tree is not a full binary tree");
  std::vector<bool> used(static_cast<std::size_t>(tree.num_nodes()), false);
  for (std::size_t k = 0; k < tree.pairs.size(); ++k) {
    const int self = tree.num_leaves + static_cast<int>(k);
    for (int child : {tree.pairs[k].first, tree.pairs[k].second}) {
      if (child < 0 || child >= self) throw std::invalid_argument("tree pair references an unknown node");
      if (used[static_cast<std::size_t>(child)]) throw std::invalid_argument("tree node consumed twice");
      used[static_cast<std::size_t>(child)] = true;
    }
    if (tree.pairs[k].first == tree.pairs[k].second) throw std::invalid_argument("tree pair joins a node with itself");
  }
}

std::vector<NodeInfo> annotate(const TensorNetwork& tn, const ContractionTree& tree) {
  validate_tree(tree, tn.num_tensors());
  const auto total = tn.label_occurrences();
  std::vector<NodeInfo> nodes(static_cast<std::size_t>(tree.num_nodes()));
  // Occurrence counts of each live label inside a node's subtree.
  std::vector<std::vector<std::pair<Label, int>>> counts(nodes.size());
  auto is_sliced = [&](Label l) { return contains(tree.sliced, l); };
  auto size_of = [&](const std::vector<Label>& modes) {
    double s = 1;
    for (auto l : modes) s *= is_sliced(l) ? 1.0 : static_cast<double>(tn.extent(l));
    return s;
  };
  for (int i = 0; i < tree.num_leaves; ++i) {
    auto& c = counts[static_cast<std::size_t>(i)];
    for (auto l : tn.tensor(i).modes) c.emplace_back(l, 1);
    std::sort(c.begin(), c.end());
  }
  for (std::size_t k = 0; k < tree.pairs.size(); ++k) {
    const auto [l, r] = tree.pairs[k];
    const auto self = static_cast<std::size_t>(tree.num_leaves) + k;
    const auto& cl = counts[static_cast<std::size_t>(l)];
    const auto& cr = counts[static_cast<std::size_t>(r)];
    std::vector<std::pair<Label, int>> merged;
    std::vector<Label> all;
    std::size_t i = 0, j = 0;
    while (i < cl.size() || j < cr.size()) {
      std::pair<Label, int> e;
      if (j == cr.size() || (i < cl.size() && cl[i].first < cr[j].first)) {
        e = cl[i++];
      } else if (i == cl.size() || cr[j].first < cl[i].first) {
        e = cr[j++];
      } else {
        e = {cl[i].first, cl[i].second + cr[j].second};
        ++i;
        ++j;
      }
      all.push_back(e.first);
      if (e.second < total[static_cast<std::size_t>(e.first)]) merged.push_back(e);
    }
    counts[self] = std::move(merged);
    nodes[self].left = l;
    nodes[self].right = r;
    nodes[static_cast<std::size_t>(l)].parent = static_cast<int>(self);
    nodes[static_cast<std::size_t>(r)].parent = static_cast<int>(self);
    nodes[self].flops = size_of(all);
  }
  for (std::size_t v = 0; v < nodes.size(); ++v) {
    for (const auto& [l, c] : counts[v]) {
      if (!is_sliced(l)) nodes[v].modes.push_back(l);
    }
    nodes[v].size = size_of(nodes[v].modes);
  }
  return nodes;
}

double num_slices(const TensorNetwork& tn, std::span<const Label> sliced) {
  double n = 1;
  for (auto l : sliced) n *= static_cast<double>(tn.extent(l));
  return n;
}

EvaluationOrder min_peak_order(const std::vector<NodeInfo>& nodes, int root, int num_leaves) {
  const auto n = nodes.size();
  std::vector<double> peak(n, 0);
  std::vector<bool> right_first(n, false);
  // Children precede parents in SSA order, so one ascending sweep suffices.
  for (std::size_t v = static_cast<std::size_t>(num_leaves); v < n; ++v) {
    const auto& nd = nodes[v];
    const auto l = static_cast<std::size_t>(nd.left), r = static_cast<std::size_t>(nd.right);
    const double sl = l < static_cast<std::size_t>(num_leaves) ? 0 : nodes[l].size;
    const double sr = r < static_cast<std::size_t>(num_leaves) ? 0 : nodes[r].size;
    const double all = sl + sr + nd.size;
    const double lf = std::max({peak[l], sl + peak[r], all});
    const double rf = std::max({peak[r], sr + peak[l], all});
    if (rf < lf || (rf == lf && peak[r] > peak[l])) {
      right_first[v] = true;
      peak[v] = rf;
    } else {
      peak[v] = lf;
    }
  }
  EvaluationOrder out;
  out.peak = peak[static_cast<std::size_t>(root)];
  // Iterative post-order.
  std::vector<std::pair<int, bool>> stack{{root, false}};
  while (!stack.empty()) {
    auto [v, expanded] = stack.back();
    stack.pop_back();
    if (v < num_leaves) continue;
    if (expanded) {
      out.order.push_back(v);
      continue;
    }
    const auto& nd = nodes[static_cast<std::size_t>(v)];
    const int first = right_first[static_cast<std::size_t>(v)] ? nd.right : nd.left;
    const int second = first == nd.left ? nd.right : nd.left;
    stack.emplace_back(v, true);
    stack.emplace_back(second, false);
    stack.emplace_back(first, false);
  }
  return out;
}

PathCost path_cost(const TensorNetwork& tn, const ContractionTree& tree) {
  const auto nodes = annotate(tn, tree);
  PathCost cost;
  cost.slices = num_slices(tn, tree.sliced);
  for (int v = tree.num_leaves; v < tree.num_nodes(); ++v) {
    cost.total_flops += nodes[static_cast<std::size_t>(v)].flops;
    cost.largest_intermediate = std::max(cost.largest_intermediate, nodes[static_cast<std::size_t>(v)].size);
  }
  cost.total_flops *= cost.slices;
  cost.peak_intermediate_size = min_peak_order(nodes, tree.root(), tree.num_leaves).peak;
  return cost;
}

}  // namespace qsimkit
