#include "compoc/features.hpp"

#include <algorithm>
#include <cmath>

#include "compoc/errors.hpp"

namespace compoc {

double max_dim_order_ratio(const std::vector<std::pair<int, int>>& pairs) {
  if (pairs.empty()) throw Error("max_dim_order_ratio needs at least one pair");
  double r = 0.0;
  for (auto& [d, m] : pairs) {
    if (d < 1 || m < 1) throw Error("dimension and order must be positive");
    r = std::max(r, static_cast<double>(d) / m);
  }
  return r;
}

namespace {

// grid over the node's own box per the pinned rule
Mat node_grid(int dim, double R, int n_samples) {
  if (dim <= 3) return tensor_grid(dim, 17, R);
  Mat pts(n_samples, dim);
  for (int s = 0; s < n_samples; ++s)
    pts.row(s) = halton_in_cube(static_cast<std::uint64_t>(s) + 1, dim, R);
  return pts;
}

// sum over |alpha| <= m of sup |D^alpha f|, each sup taken separately
double node_lambda(const NodeFunction& fn, const Mat& pts) {
  const int d = fn.dim();
  const int m = fn.smooth_order();
  const int n2 = d * (d + 1) / 2;
  const int extra = (fn.kind() == NodeKind::ScalarSmooth) ? std::max(0, m - 2) : 0;
  std::vector<double> sup(1 + d + n2 + extra, 0.0);

  Vec x(d);
  for (int p = 0; p < pts.rows(); ++p) {
    x = pts.row(p).transpose();
    int t = 0;
    sup[t] = std::max(sup[t], std::abs(fn.value(x)));
    ++t;
    const Vec g = fn.gradient(x);
    for (int i = 0; i < d; ++i, ++t) sup[t] = std::max(sup[t], std::abs(g[i]));
    const Mat h = fn.hessian(x);
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j, ++t)
        sup[t] = std::max(sup[t], std::abs(h(i, j)));
    for (int k = 3; k <= 2 + extra; ++k, ++t)
      sup[t] = std::max(sup[t], std::abs(fn.scalar_deriv(k, x[0])));
  }

  double total = 0.0;
  for (double s : sup) total += s;
  return std::max(std::pow(fn.radius(), m), 1.0) * total;
}

double node_lipschitz(const NodeFunction& fn, const Mat& pts) {
  double sup = 0.0;
  Vec x(fn.dim());
  for (int p = 0; p < pts.rows(); ++p) {
    x = pts.row(p).transpose();
    sup = std::max(sup, fn.gradient(x).norm());
  }
  return sup;
}

}  // namespace

FeatureTuple compute_features(const CompGraph& g, int n_samples) {
  if (!g.finalized()) throw Error("graph not finalized");
  FeatureTuple t;
  if (g.all_linear()) return t;  // (0, 0, 0, 0)

  double r = 0.0, lam = 0.0, lip = 0.0;
  int v = 0;
  for (auto& node : g.nodes) {
    if (node.fn.is_input() || node.fn.linear()) continue;
    ++v;
    r = std::max(r, static_cast<double>(node.fn.dim()) / node.fn.smooth_order());
    const Mat pts = node_grid(node.fn.dim(), node.fn.radius(), n_samples);
    lam = std::max(lam, node_lambda(node.fn, pts));
    lip = std::max(lip, node_lipschitz(node.fn, pts));
  }
  t.r_max = r;
  t.lambda = kFeatureSafety * lam;
  t.l_max = kFeatureSafety * lip;
  t.v_g = v;
  return t;
}

FeatureTuple features_parallel(const FeatureTuple& a, const FeatureTuple& b) {
  FeatureTuple t;
  t.r_max = std::max(a.r_max, b.r_max);
  t.lambda = std::max(a.lambda, b.lambda);
  t.l_max = std::max(a.l_max, b.l_max);
  t.v_g = a.v_g + b.v_g;
  return t;
}

FeatureTuple features_extend_terminal(const FeatureTuple& g) { return g; }

double graph_lipschitz(const CompGraph& g, int n_samples) {
  if (!g.finalized()) throw Error("graph not finalized");
  const Vec radii = g.input_radii();
  const Vec lo = -radii, hi = radii;

  // Halton interior points, the same sampling family the range validation
  // uses, so a validated graph never trips a domain check here.
  double sup = 0.0;
  for (int s = 1; s <= n_samples; ++s) {
    const Mat J = grad_graph(g, halton_in_box(static_cast<std::uint64_t>(s), lo, hi));
    sup = std::max(sup, J.jacobiSvd().singularValues()(0));
  }
  return kFeatureSafety * sup;
}

}  // namespace compoc
