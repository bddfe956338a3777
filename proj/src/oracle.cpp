#include "compoc/oracle.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

#include "compoc/errors.hpp"

namespace compoc {

namespace {

// polynomial degree of a node function in its inputs; -1 when not polynomial
// of degree <= 2
int node_degree(const NodeFunction& fn) {
  switch (fn.kind()) {
    case NodeKind::Input:
      return 1;
    case NodeKind::Affine:
    case NodeKind::WeightedSum:
      return 1;
    case NodeKind::QuadraticForm:
    case NodeKind::SquaredNorm:
      return 2;
    case NodeKind::ScalarSmooth:
      if (fn.family() != ScalarFamily::Polynomial) return -1;
      {
        int deg = 0;
        const Vec& c = fn.coeffs();
        for (int i = 0; i < c.size(); ++i)
          if (c(i) != 0.0) deg = i;
        return deg <= 2 ? deg : -1;
      }
  }
  return -1;
}

}  // namespace

bool graph_is_quadratic(const CompGraph& g) {
  // reached[i]: some strict ancestor of node i has degree two
  std::vector<char> reached(g.nodes.size(), 0);
  for (int idx : g.eval_order()) {
    const auto& nd = g.nodes[idx];
    if (nd.fn.is_input()) continue;
    const int deg = node_degree(nd.fn);
    if (deg < 0) return false;
    char anc = 0;
    for (int p : g.preds_of(idx)) {
      const auto& pf = g.nodes[p].fn;
      anc |= reached[p];
      if (!pf.is_input() && node_degree(pf) == 2) anc = 1;
    }
    if (deg == 2 && anc) return false;
    reached[idx] = anc;
  }
  return true;
}

bool instance_is_lq(const OcpInstance& inst) {
  if (!inst.linear()) return false;
  if (const auto* sep = std::get_if<SeparatedCost>(&inst.stage)) {
    if (!graph_is_quadratic(sep->l1) || !graph_is_quadratic(sep->l2))
      return false;
  }
  return graph_is_quadratic(inst.terminal);
}

LqSolution solve_lq_full(const OcpInstance& inst, const Vec& x) {
  if (!instance_is_lq(inst))
    throw NotQuadratic("instance is not linear-quadratic");
  const Vec U0 = Vec::Zero(inst.m());
  Mat H = hess_J(inst, x, U0);
  Vec c = grad_J(inst, x, U0);

  Eigen::SelfAdjointEigenSolver<Mat> es(H);
  const Vec& ev = es.eigenvalues();
  const Mat& V = es.eigenvectors();
  const double cut = kLqRankTolRel * std::max(ev.cwiseAbs().maxCoeff(), 1.0);
  Vec ct = V.transpose() * c;
  Vec z(ev.size());
  int rank = 0;
  for (int i = 0; i < ev.size(); ++i) {
    if (std::abs(ev(i)) > cut) {
      z(i) = -ct(i) / ev(i);
      ++rank;
    } else {
      z(i) = 0.0;  // minimum-norm component
    }
  }
  LqSolution sol;
  sol.U = V * z;
  sol.rank = rank;
  sol.residual = (H * sol.U + c).norm();
  if (sol.residual > kLqResidualTol * std::max(1.0, c.norm()))
    throw NoConvergence("stationarity system is inconsistent; objective "
                        "unbounded below");
  return sol;
}

Vec solve_lq(const OcpInstance& inst, const Vec& x) {
  return solve_lq_full(inst, x).U;
}

Vec solve_numeric(const OcpInstance& inst, const Vec& x,
                  const NumericOptions& opt) {
  Vec U = inst.domain.U0;
  Mat H = hess_J(inst, x, U);
  Eigen::SelfAdjointEigenSolver<Mat> es(H, Eigen::EigenvaluesOnly);
  double L = es.eigenvalues().cwiseAbs().maxCoeff() * 1.1;
  if (!(L > 0.0)) L = 1.0;
  const double step = 1.0 / L;
  for (long long it = 0; it < opt.max_iters; ++it) {
    Vec g = grad_J(inst, x, U);
    if (g.norm() <= opt.tol) return U;
    U -= step * g;
  }
  Vec g = grad_J(inst, x, U);
  if (g.norm() <= opt.tol) return U;
  throw NoConvergence("descent oracle stalled at gradient norm " +
                      std::to_string(g.norm()));
}

}  // namespace compoc
