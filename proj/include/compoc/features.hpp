#pragma once

#include <utility>
#include <vector>

#include "compoc/compgraph.hpp"

namespace compoc {

// Regularity summary of a graph. r_max and v_g are structural; lambda and
// l_max are sampled sup estimates inflated by a fixed safety factor. A graph
// with no general nodes has r_max = 0: the max over an empty node set, so it
// never dominates a width exponent.
struct FeatureTuple {
  double r_max = 0.0;
  double lambda = 0.0;
  double l_max = 0.0;
  int v_g = 0;
};

inline constexpr double kFeatureSafety = 1.1;

// max over (dim, order) pairs of dim/order
double max_dim_order_ratio(const std::vector<std::pair<int, int>>& pairs);

// Per-node estimates over each node's own box: full tensor grid with 17
// points per axis for dim <= 3, n_samples Halton points otherwise. A graph
// with no general nodes returns (0, 0, 0, 0).
FeatureTuple compute_features(const CompGraph& g, int n_samples = 4096);

// Features of a parallel combination of two graphs.
FeatureTuple features_parallel(const FeatureTuple& a, const FeatureTuple& b);

// Terminal-cost extension adds affine nodes only, so features pass through.
FeatureTuple features_extend_terminal(const FeatureTuple& g);

// Sampled Lipschitz constant of the whole graph map: sup of the Jacobian
// spectral norm over the input box, same grid rule, same safety factor.
double graph_lipschitz(const CompGraph& g, int n_samples = 4096);

}  // namespace compoc
