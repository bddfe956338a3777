#pragma once

#include "compoc/ocp.hpp"

namespace compoc {

inline constexpr double kLqResidualTol = 1e-10;
inline constexpr double kLqRankTolRel = 1e-12;

// true when every node's function is a polynomial of total degree at most two
// and no degree-two node sits downstream of another degree-two node
bool graph_is_quadratic(const CompGraph& g);

// linear dynamics and quadratic cost graphs throughout
bool instance_is_lq(const OcpInstance& inst);

struct LqSolution {
  Vec U;
  double residual = 0;  // |H U + c| after the pseudo-inverse solve
  int rank = 0;
};

// Closed-form minimum-norm minimizer of the exactly quadratic objective;
// NotQuadratic when the structure check fails, NoConvergence when the
// stationarity system is inconsistent (objective unbounded below).
LqSolution solve_lq_full(const OcpInstance& inst, const Vec& x);
Vec solve_lq(const OcpInstance& inst, const Vec& x);

struct NumericOptions {
  double tol = 1e-12;          // gradient norm target
  long long max_iters = 1000000;
};

// Fixed-step gradient descent from U0 with step 1 over the sampled curvature
// bound; NoConvergence when the tolerance is not reached.
Vec solve_numeric(const OcpInstance& inst, const Vec& x,
                  const NumericOptions& opt = {});

}  // namespace compoc
