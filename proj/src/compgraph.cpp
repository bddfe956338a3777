#include "compoc/compgraph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "compoc/errors.hpp"

namespace compoc {

int CompGraph::add_input(double R) {
  int id = nodes.empty() ? 0 : nodes.back().id + 1;
  nodes.push_back({id, 0, NodeFunction::input(R)});
  built_ = false;
  return id;
}

int CompGraph::add_node(int layer, NodeFunction fn, const std::vector<int>& preds) {
  // structural errors visible at the call site fail here; wiring errors that
  // need the whole graph (arity, layer order) wait for finalize
  if (layer < 1)
    throw Error("computational nodes must sit above the input layer");
  if (preds.empty()) throw Error("a node needs at least one predecessor");
  for (int p : preds) {
    bool known = false;
    for (const auto& n : nodes)
      if (n.id == p) {
        known = true;
        break;
      }
    if (!known) throw Error("unknown predecessor id " + std::to_string(p));
  }
  int id = nodes.empty() ? 0 : nodes.back().id + 1;
  nodes.push_back({id, layer, std::move(fn)});
  for (int p : preds) edges.emplace_back(p, id);
  built_ = false;
  return id;
}

void CompGraph::finalize() {
  if (nodes.empty()) throw Error("graph has no nodes");

  std::unordered_map<int, int> index;
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
    if (!index.emplace(nodes[i].id, i).second)
      throw Error("duplicate node id " + std::to_string(nodes[i].id));
    const bool is_in = nodes[i].fn.is_input();
    if (is_in != (nodes[i].layer == 0))
      throw Error("input markers and only input markers may occupy layer 0");
  }

  preds_.assign(nodes.size(), {});
  std::vector<int> out_degree(nodes.size(), 0);
  for (auto& [s, d] : edges) {
    auto si = index.find(s), di = index.find(d);
    if (si == index.end() || di == index.end())
      throw Error("edge references unknown node id");
    if (nodes[si->second].layer >= nodes[di->second].layer)
      throw Error("edge must go from a lower to a higher layer");
    preds_[di->second].push_back(si->second);
    ++out_degree[si->second];
  }

  inputs_.clear();
  outputs_.clear();
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
    if (nodes[i].fn.is_input()) {
      if (!preds_[i].empty()) throw Error("input node cannot have predecessors");
      inputs_.push_back(i);
      if (out_degree[i] == 0)
        throw Error("input node " + std::to_string(nodes[i].id) + " feeds nothing");
    } else {
      if (static_cast<int>(preds_[i].size()) != nodes[i].fn.dim())
        throw Error("node " + std::to_string(nodes[i].id) +
                    " fan-in does not match its arity");
      if (out_degree[i] == 0) outputs_.push_back(i);
    }
  }
  if (inputs_.empty()) throw Error("graph needs at least one input");
  if (outputs_.empty()) throw Error("graph needs at least one output");
  input_dim = static_cast<int>(inputs_.size());
  output_dim = static_cast<int>(outputs_.size());

  order_.resize(nodes.size());
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i) order_[i] = i;
  std::stable_sort(order_.begin(), order_.end(), [&](int a, int b) {
    return nodes[a].layer < nodes[b].layer;
  });

  built_ = true;
}

void CompGraph::require_built() const {
  if (!built_) throw Error("graph not finalized");
}

int CompGraph::node_index(int id) const {
  require_built();
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i)
    if (nodes[i].id == id) return i;
  throw Error("unknown node id " + std::to_string(id));
}

const std::vector<int>& CompGraph::preds_of(int index) const {
  require_built();
  return preds_[index];
}

Vec CompGraph::input_radii() const {
  require_built();
  Vec r(input_dim);
  for (int i = 0; i < input_dim; ++i) r[i] = nodes[inputs_[i]].fn.radius();
  return r;
}

int CompGraph::max_layer() const {
  int l = 0;
  for (auto& n : nodes) l = std::max(l, n.layer);
  return l;
}

int CompGraph::general_count() const {
  int c = 0;
  for (auto& n : nodes)
    if (!n.fn.is_input() && !n.fn.linear()) ++c;
  return c;
}

void graph_forward_values(const CompGraph& g, const Vec& x, bool check,
                          std::vector<double>& values) {
  if (x.size() != g.input_dim) throw Error("graph input dimension mismatch");
  values.assign(g.nodes.size(), 0.0);

  const auto& inputs = g.input_indices();
  for (int i = 0; i < g.input_dim; ++i) {
    double R = g.nodes[inputs[i]].fn.radius();
    if (check && std::abs(x[i]) > R + kDomainTol)
      throw DomainViolation("graph input " + std::to_string(i) +
                            " outside its box");
    values[inputs[i]] = x[i];
  }

  Vec z;
  for (int idx : g.eval_order()) {
    const auto& node = g.nodes[idx];
    if (node.fn.is_input()) continue;
    const auto& preds = g.preds_of(idx);
    z.resize(preds.size());
    const double R = node.fn.radius();
    for (std::size_t k = 0; k < preds.size(); ++k) {
      z[k] = values[preds[k]];
      if (check && std::abs(z[k]) > R + kDomainTol)
        throw DomainViolation("value feeding node " + std::to_string(node.id) +
                              " left its domain box");
    }
    values[idx] = node.fn.value(z);
  }
}

Vec eval_graph(const CompGraph& g, const Vec& x) {
  std::vector<double> values;
  graph_forward_values(g, x, /*check=*/true, values);
  const auto& outs = g.output_indices();
  Vec y(g.output_dim);
  for (int i = 0; i < g.output_dim; ++i) y[i] = values[outs[i]];
  return y;
}

Mat grad_graph(const CompGraph& g, const Vec& x) {
  std::vector<double> values;
  graph_forward_values(g, x, /*check=*/true, values);

  // row i of jac: gradient of node i's value with respect to the graph inputs
  Mat jac = Mat::Zero(g.nodes.size(), g.input_dim);
  const auto& inputs = g.input_indices();
  for (int i = 0; i < g.input_dim; ++i) jac(inputs[i], i) = 1.0;

  Vec z;
  for (int idx : g.eval_order()) {
    const auto& node = g.nodes[idx];
    if (node.fn.is_input()) continue;
    const auto& preds = g.preds_of(idx);
    z.resize(preds.size());
    for (std::size_t k = 0; k < preds.size(); ++k) z[k] = values[preds[k]];
    const Vec gloc = node.fn.gradient(z);
    for (std::size_t k = 0; k < preds.size(); ++k)
      jac.row(idx) += gloc[k] * jac.row(preds[k]);
  }

  const auto& outs = g.output_indices();
  Mat out(g.output_dim, g.input_dim);
  for (int i = 0; i < g.output_dim; ++i) out.row(i) = jac.row(outs[i]);
  return out;
}

Mat hess_graph(const CompGraph& g, const Vec& x, int output) {
  if (output < 0 || output >= g.output_dim)
    throw Error("hess_graph: output index out of range");
  std::vector<double> values;
  graph_forward_values(g, x, /*check=*/true, values);

  const int d = g.input_dim;
  Mat jac = Mat::Zero(g.nodes.size(), d);
  std::vector<Mat> hess(g.nodes.size());
  const auto& inputs = g.input_indices();
  for (int i = 0; i < d; ++i) jac(inputs[i], i) = 1.0;
  for (auto& h : hess) h = Mat::Zero(d, d);

  Vec z;
  for (int idx : g.eval_order()) {
    const auto& node = g.nodes[idx];
    if (node.fn.is_input()) continue;
    const auto& preds = g.preds_of(idx);
    const int a = static_cast<int>(preds.size());
    z.resize(a);
    for (int k = 0; k < a; ++k) z[k] = values[preds[k]];
    const Vec gloc = node.fn.gradient(z);
    const Mat hloc = node.fn.hessian(z);

    Mat P(a, d);
    for (int k = 0; k < a; ++k) P.row(k) = jac.row(preds[k]);
    Mat H = P.transpose() * hloc * P;
    for (int k = 0; k < a; ++k) {
      H += gloc[k] * hess[preds[k]];
      jac.row(idx) += gloc[k] * P.row(k);
    }
    hess[idx] = std::move(H);
  }

  return hess[g.output_indices()[output]];
}

ValidationReport validate_graph(const CompGraph& g, int n_samples) {
  if (!g.finalized()) throw Error("graph not finalized");
  const Vec radii = g.input_radii();
  const Vec lo = -radii, hi = radii;

  const std::size_t ne = g.edges.size();
  std::vector<double> emin(ne, std::numeric_limits<double>::infinity());
  std::vector<double> emax(ne, -std::numeric_limits<double>::infinity());

  std::vector<double> values;
  std::vector<int> src_idx(ne);
  for (std::size_t e = 0; e < ne; ++e) src_idx[e] = g.node_index(g.edges[e].first);

  for (int s = 1; s <= n_samples; ++s) {
    Vec x = halton_in_box(static_cast<std::uint64_t>(s), lo, hi);
    graph_forward_values(g, x, /*check=*/false, values);
    for (std::size_t e = 0; e < ne; ++e) {
      double v = values[src_idx[e]];
      emin[e] = std::min(emin[e], v);
      emax[e] = std::max(emax[e], v);
    }
  }

  ValidationReport rep;
  rep.pass = true;
  rep.edges.resize(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    const auto& [s, d] = g.edges[e];
    double R = g.nodes[g.node_index(d)].fn.radius();
    EdgeCheck& c = rep.edges[e];
    c.src = s;
    c.dst = d;
    c.lo = emin[e];
    c.hi = emax[e];
    c.limit = 0.99 * R;
    c.ok = (c.lo > -c.limit) && (c.hi < c.limit);
    rep.pass = rep.pass && c.ok;
  }
  return rep;
}

}  // namespace compoc
