#include "compoc/shallow.hpp"

#include <Eigen/QR>
#include <cmath>
#include <limits>
#include <string>

#include "compoc/errors.hpp"
#include "compoc/kernels.hpp"

namespace compoc {

namespace {

// Per-kind constants for the one-node error law, measured over widths
// {8, 16, 32, 64, 128} on catalog nodes and frozen with about a 2x margin.
constexpr double kRateCQuadraticForm = 4.0;
constexpr double kRateCSquaredNorm = 4.0;
constexpr double kRateCTanh = 4.0;
constexpr double kRateCSoftplus = 4.0;
constexpr double kRateCExpNegSq = 4.0;
constexpr double kRateCPolynomial = 4.0;

// 1-D targets get a dense axis so the held-out error tracks the sup over the
// box instead of a grid-resolution floor; higher dimensions trade density for
// coverage.
void fit_grids(int d, double R, Mat& X, Mat& Xv) {
  if (d == 1) {
    X = tensor_grid(1, 513, R);
    Xv = tensor_grid_offset(1, 513, R);
    return;
  }
  if (d <= 3) {
    X = tensor_grid(d, 33, R);
    Xv = tensor_grid_offset(d, 33, R);
    return;
  }
  const int n = 8192;
  X.resize(n, d);
  Xv.resize(n, d);
  for (int i = 0; i < n; ++i) {
    X.row(i) = halton_in_cube(i + 1, d, R).transpose();
    Xv.row(i) = halton_in_cube(i + 1 + n, d, R).transpose();
  }
}

}  // namespace

double ShallowNet::eval(const Vec& x) const {
  double s = 0.0;
  for (int j = 0; j < W.rows(); ++j)
    s += c(j) * std::tanh(W.row(j).dot(x) + b(j));
  return s;
}

ShallowNet fit_node(const NodeFunction& fn, int width, Rng& rng,
                    FitReport* report) {
  if (width < 1) throw ConfigError("fit width must be positive");
  if (fn.is_input() || fn.linear())
    throw ConfigError("only general nodes are fitted");
  const int d = fn.dim();
  const double R = fn.radius();

  ShallowNet net;
  net.R = R;
  net.d = d;
  net.W.resize(width, d);
  net.b.resize(width);
  const double wr = 3.0 / R;
  for (int j = 0; j < width; ++j) {
    for (int k = 0; k < d; ++k) net.W(j, k) = rng.unif(-wr, wr);
    net.b(j) = rng.unif(-3.0, 3.0);
  }

  Mat X, Xv;
  fit_grids(d, R, X, Xv);
  Vec y(X.rows()), yv(Xv.rows());
  for (int i = 0; i < X.rows(); ++i) y(i) = fn.value(X.row(i).transpose());
  for (int i = 0; i < Xv.rows(); ++i) yv(i) = fn.value(Xv.row(i).transpose());

  Mat A = activation_matrix(X, net.W, net.b);
  const double colsc = A.colwise().squaredNorm().mean();
  if (!std::isfinite(colsc) || colsc <= 0.0)
    throw IllConditioned("degenerate feature matrix");

  // Ridge as extra rows keeps the solve in the least-squares regime; the
  // squared normal equations would cost half the working digits.
  const double lam = kRidgeRel * colsc;
  Mat aug(X.rows() + width, width);
  aug.topRows(X.rows()) = A;
  aug.bottomRows(width) = std::sqrt(lam) * Mat::Identity(width, width);
  Vec rhs = Vec::Zero(X.rows() + width);
  rhs.head(X.rows()) = y;
  Eigen::ColPivHouseholderQR<Mat> qr(aug);
  net.c = qr.solve(rhs);

  // Pivoting sorts the R diagonal, so the extreme entries estimate the
  // spectral range of the regularized system.
  const auto& Rf = qr.matrixR();
  const double rmax = std::abs(Rf(0, 0));
  const double rmin = std::abs(Rf(width - 1, width - 1));
  const double cond = rmin > 0.0 ? rmax / rmin
                                 : std::numeric_limits<double>::infinity();
  if (!(cond < kCondLimit))
    throw IllConditioned("shallow fit condition estimate " +
                         std::to_string(cond) + " at width " +
                         std::to_string(width));

  FitReport rep;
  rep.width = width;
  rep.cond = cond;
  rep.train_sup = (A * net.c - y).cwiseAbs().maxCoeff();
  Mat Av = activation_matrix(Xv, net.W, net.b);
  rep.valid_sup = (Av * net.c - yv).cwiseAbs().maxCoeff();
  if (report) *report = rep;
  return net;
}

int SurrogateNet::fitted_nodes() const {
  int n = 0;
  for (const auto& s : nets) n += s.has_value() ? 1 : 0;
  return n;
}

long long SurrogateNet::size() const {
  return (long long)width * fitted_nodes();
}

Vec SurrogateNet::eval(const Vec& x) const {
  const CompGraph& g = graph;
  if (x.size() != g.input_dim)
    throw ConfigError("surrogate input length mismatch");
  std::vector<double> values(g.nodes.size(), 0.0);
  const auto& ins = g.input_indices();
  for (size_t k = 0; k < ins.size(); ++k) values[ins[k]] = x((int)k);
  for (int idx : g.eval_order()) {
    const auto& nd = g.nodes[idx];
    if (nd.fn.is_input()) continue;
    const auto& preds = g.preds_of(idx);
    Vec v((int)preds.size());
    for (size_t k = 0; k < preds.size(); ++k) v((int)k) = values[preds[k]];
    values[idx] = nets[idx] ? nets[idx]->eval(v) : nd.fn.value(v);
  }
  const auto& outs = g.output_indices();
  Vec out((int)outs.size());
  for (size_t k = 0; k < outs.size(); ++k) out((int)k) = values[outs[k]];
  return out;
}

SurrogateNet assemble_surrogate(const CompGraph& g, int width,
                                std::uint64_t seed) {
  if (!g.finalized()) throw ConfigError("graph not finalized");
  SurrogateNet s;
  s.graph = g;
  s.width = width;
  s.nets.resize(g.nodes.size());
  Rng base(seed);
  for (size_t idx = 0; idx < g.nodes.size(); ++idx) {
    const auto& nd = g.nodes[idx];
    if (nd.fn.is_input() || nd.fn.linear()) continue;
    Rng r = base.fork((std::uint64_t)nd.id);
    FitReport rep;
    s.nets[idx] = fit_node(nd.fn, width, r, &rep);
    s.fits.push_back(rep);
  }
  return s;
}

RateReport measure_rate(const NodeFunction& fn, const std::vector<int>& widths,
                        std::uint64_t seed) {
  if (widths.size() < 2) throw ConfigError("rate fit needs at least 2 widths");
  RateReport rep;
  Rng base(seed);
  for (int w : widths) {
    Rng r = base.fork((std::uint64_t)w);
    FitReport fr;
    fit_node(fn, w, r, &fr);
    rep.points.push_back({w, fr.valid_sup});
  }
  const int n = (int)rep.points.size();
  double mx = 0, my = 0;
  std::vector<double> lx(n), ly(n);
  for (int i = 0; i < n; ++i) {
    lx[i] = std::log((double)rep.points[i].width);
    ly[i] = std::log(std::max(rep.points[i].sup_err, 1e-300));
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (int i = 0; i < n; ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  rep.slope = sxy / sxx;
  rep.r_hat = rep.slope < 0 ? -1.0 / rep.slope
                            : std::numeric_limits<double>::infinity();
  return rep;
}

double calibrated_rate_constant(const NodeFunction& fn) {
  switch (fn.kind()) {
    case NodeKind::QuadraticForm:
      return kRateCQuadraticForm;
    case NodeKind::SquaredNorm:
      return kRateCSquaredNorm;
    case NodeKind::ScalarSmooth:
      switch (fn.family()) {
        case ScalarFamily::Tanh:
          return kRateCTanh;
        case ScalarFamily::Softplus:
          return kRateCSoftplus;
        case ScalarFamily::ExpNegSq:
          return kRateCExpNegSq;
        case ScalarFamily::Polynomial:
          return kRateCPolynomial;
      }
      break;
    default:
      break;
  }
  throw ConfigError("no rate constant for linear or input nodes");
}

double surrogate_sup_bound(double C, const FeatureTuple& t, int width) {
  if (t.v_g == 0) return 0.0;
  return C * t.lambda * t.l_max * (double)t.v_g *
         std::pow((double)width, -1.0 / t.r_max);
}

}  // namespace compoc
