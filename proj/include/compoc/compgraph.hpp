#pragma once

#include <utility>
#include <vector>

#include "compoc/catalog.hpp"
#include "compoc/util.hpp"

namespace compoc {

// Tolerance for the domain box check on node inputs.
inline constexpr double kDomainTol = 1e-9;

// Layered DAG of catalog nodes. Edges run from lower to strictly higher
// layers (not necessarily adjacent ones); the inputs of a node are ordered by
// edge insertion order. Input markers occupy layer 0 and carry the per
// coordinate radius of the graph's input box; nodes without outgoing edges are
// the outputs, ordered by their position in the node list.
class CompGraph {
 public:
  struct Node {
    int id;
    int layer;
    NodeFunction fn;
  };

  std::vector<Node> nodes;
  std::vector<std::pair<int, int>> edges;
  int input_dim = 0;
  int output_dim = 0;

  // Builder helpers; both return the id of the new node.
  int add_input(double R);
  int add_node(int layer, NodeFunction fn, const std::vector<int>& preds);

  // Validates the structural invariants and builds the adjacency caches.
  // Must be called before any evaluation; throws Error on violation.
  void finalize();
  bool finalized() const { return built_; }

  int node_index(int id) const;
  const std::vector<int>& preds_of(int index) const;
  const std::vector<int>& input_indices() const { return inputs_; }
  const std::vector<int>& output_indices() const { return outputs_; }
  const std::vector<int>& eval_order() const { return order_; }
  Vec input_radii() const;
  int max_layer() const;

  // |V_G|: nodes that are neither inputs nor members of the linear class
  int general_count() const;
  bool all_linear() const { return general_count() == 0; }

 private:
  void require_built() const;

  bool built_ = false;
  std::vector<std::vector<int>> preds_;   // node-list indices
  std::vector<int> inputs_, outputs_, order_;
};

// Forward evaluation; DomainViolation when a value enters a node's box more
// than kDomainTol outside [-R, R].
Vec eval_graph(const CompGraph& g, const Vec& x);

// Jacobian of the graph map, output_dim x input_dim.
Mat grad_graph(const CompGraph& g, const Vec& x);

// Hessian of one scalar output with respect to the graph inputs.
Mat hess_graph(const CompGraph& g, const Vec& x, int output = 0);

struct EdgeCheck {
  int src = 0, dst = 0;
  double lo = 0, hi = 0;   // sampled range of the source value
  double limit = 0;        // 0.99 * R of the consuming node
  bool ok = false;
};

struct ValidationReport {
  bool pass = false;
  std::vector<EdgeCheck> edges;
};

// Samples the input box and checks that every edge's value range stays
// strictly inside the consuming node's box with a 1% margin.
ValidationReport validate_graph(const CompGraph& g, int n_samples = 4096);

// Internal forward pass shared with the surrogate evaluator: values indexed by
// node-list position, no domain check when check is false.
void graph_forward_values(const CompGraph& g, const Vec& x, bool check,
                          std::vector<double>& values);

}  // namespace compoc
