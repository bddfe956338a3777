#include "compoc/catalog.hpp"

#include <cmath>

#include "compoc/errors.hpp"

namespace compoc {

std::string kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::Input: return "input";
    case NodeKind::Affine: return "affine";
    case NodeKind::WeightedSum: return "weighted_sum";
    case NodeKind::QuadraticForm: return "quadratic_form";
    case NodeKind::SquaredNorm: return "squared_norm";
    case NodeKind::ScalarSmooth: return "scalar_smooth";
  }
  throw Error("unknown kind");
}

NodeKind kind_from_name(const std::string& s) {
  if (s == "input") return NodeKind::Input;
  if (s == "affine") return NodeKind::Affine;
  if (s == "weighted_sum") return NodeKind::WeightedSum;
  if (s == "quadratic_form") return NodeKind::QuadraticForm;
  if (s == "squared_norm") return NodeKind::SquaredNorm;
  if (s == "scalar_smooth") return NodeKind::ScalarSmooth;
  throw ConfigError("unknown node kind '" + s + "'");
}

std::string family_name(ScalarFamily f) {
  switch (f) {
    case ScalarFamily::Tanh: return "tanh";
    case ScalarFamily::Softplus: return "softplus";
    case ScalarFamily::ExpNegSq: return "exp_neg_sq";
    case ScalarFamily::Polynomial: return "polynomial";
  }
  throw Error("unknown family");
}

ScalarFamily family_from_name(const std::string& s) {
  if (s == "tanh") return ScalarFamily::Tanh;
  if (s == "softplus") return ScalarFamily::Softplus;
  if (s == "exp_neg_sq") return ScalarFamily::ExpNegSq;
  if (s == "polynomial") return ScalarFamily::Polynomial;
  throw ConfigError("unknown scalar family '" + s + "'");
}

namespace {

void check_common(double R, int m) {
  if (!(R > 0) || !std::isfinite(R)) throw Error("node radius must be positive");
  if (m < 2) throw Error("node smoothness order must be >= 2");
}

using Poly = std::vector<double>;  // ascending coefficients

Poly poly_diff(const Poly& p) {
  if (p.size() <= 1) return {0.0};
  Poly d(p.size() - 1);
  for (std::size_t i = 1; i < p.size(); ++i) d[i - 1] = p[i] * static_cast<double>(i);
  return d;
}

Poly poly_mul(const Poly& a, const Poly& b) {
  Poly r(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  return r;
}

Poly poly_add(const Poly& a, const Poly& b) {
  Poly r(std::max(a.size(), b.size()), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) r[i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) r[i] += b[i];
  return r;
}

double poly_eval(const Poly& p, double x) {
  double v = 0.0;
  for (std::size_t i = p.size(); i-- > 0;) v = v * x + p[i];
  return v;
}

double stable_softplus(double u) {
  return u > 0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
}

}  // namespace

NodeFunction NodeFunction::input(double R) {
  if (!(R > 0) || !std::isfinite(R)) throw Error("input radius must be positive");
  NodeFunction f;
  f.kind_ = NodeKind::Input;
  f.dim_ = 0;
  f.radius_ = R;
  return f;
}

NodeFunction NodeFunction::affine(const Vec& w, double c, double R, int m) {
  check_common(R, m);
  if (w.size() < 1) throw Error("affine node needs at least one input");
  NodeFunction f;
  f.kind_ = NodeKind::Affine;
  f.dim_ = static_cast<int>(w.size());
  f.radius_ = R;
  f.m_ = m;
  f.w_ = w;
  f.c0_ = c;
  return f;
}

NodeFunction NodeFunction::weighted_sum(const Vec& w, double R, int m) {
  NodeFunction f = affine(w, 0.0, R, m);
  f.kind_ = NodeKind::WeightedSum;
  return f;
}

NodeFunction NodeFunction::quadratic_form(const Mat& Q, const Vec& b, double c,
                                          double R, int m) {
  check_common(R, m);
  if (Q.rows() != Q.cols() || Q.rows() < 1) throw Error("Q must be square");
  if (b.size() != Q.rows()) throw Error("b size must match Q");
  NodeFunction f;
  f.kind_ = NodeKind::QuadraticForm;
  f.dim_ = static_cast<int>(Q.rows());
  f.radius_ = R;
  f.m_ = m;
  f.Q_ = 0.5 * (Q + Q.transpose());
  f.b_ = b;
  f.c0_ = c;
  return f;
}

NodeFunction NodeFunction::squared_norm(int dim, double R, int m) {
  check_common(R, m);
  if (dim < 1) throw Error("squared_norm needs dim >= 1");
  NodeFunction f;
  f.kind_ = NodeKind::SquaredNorm;
  f.dim_ = dim;
  f.radius_ = R;
  f.m_ = m;
  return f;
}

NodeFunction NodeFunction::scalar_smooth(ScalarFamily fam, double amp,
                                         double scale, double shift, double R,
                                         int m) {
  check_common(R, m);
  if (fam == ScalarFamily::Polynomial)
    throw Error("polynomial nodes carry coefficients; use the polynomial factory");
  NodeFunction f;
  f.kind_ = NodeKind::ScalarSmooth;
  f.dim_ = 1;
  f.radius_ = R;
  f.m_ = m;
  f.family_ = fam;
  f.amp_ = amp;
  f.scale_ = scale;
  f.shift_ = shift;
  return f;
}

NodeFunction NodeFunction::polynomial(const Vec& coeffs, double R, int m) {
  check_common(R, m);
  if (coeffs.size() < 1) throw Error("polynomial needs coefficients");
  NodeFunction f;
  f.kind_ = NodeKind::ScalarSmooth;
  f.dim_ = 1;
  f.radius_ = R;
  f.m_ = m;
  f.family_ = ScalarFamily::Polynomial;
  f.coeffs_ = coeffs;
  return f;
}

double NodeFunction::value(const Vec& x) const {
  if (x.size() != dim_) throw Error("node input arity mismatch");
  switch (kind_) {
    case NodeKind::Input: throw Error("input markers have no function");
    case NodeKind::Affine:
    case NodeKind::WeightedSum: return w_.dot(x) + c0_;
    case NodeKind::QuadraticForm: return x.dot(Q_ * x) + b_.dot(x) + c0_;
    case NodeKind::SquaredNorm: return x.squaredNorm();
    case NodeKind::ScalarSmooth: return scalar_deriv(0, x[0]);
  }
  throw Error("unreachable");
}

Vec NodeFunction::gradient(const Vec& x) const {
  if (x.size() != dim_) throw Error("node input arity mismatch");
  switch (kind_) {
    case NodeKind::Input: throw Error("input markers have no function");
    case NodeKind::Affine:
    case NodeKind::WeightedSum: return w_;
    case NodeKind::QuadraticForm: return 2.0 * (Q_ * x) + b_;
    case NodeKind::SquaredNorm: return 2.0 * x;
    case NodeKind::ScalarSmooth: {
      Vec g(1);
      g[0] = scalar_deriv(1, x[0]);
      return g;
    }
  }
  throw Error("unreachable");
}

Mat NodeFunction::hessian(const Vec& x) const {
  if (x.size() != dim_) throw Error("node input arity mismatch");
  switch (kind_) {
    case NodeKind::Input: throw Error("input markers have no function");
    case NodeKind::Affine:
    case NodeKind::WeightedSum: return Mat::Zero(dim_, dim_);
    case NodeKind::QuadraticForm: return 2.0 * Q_;
    case NodeKind::SquaredNorm:
      return 2.0 * Mat::Identity(dim_, dim_);
    case NodeKind::ScalarSmooth: {
      Mat h(1, 1);
      h(0, 0) = scalar_deriv(2, x[0]);
      return h;
    }
  }
  throw Error("unreachable");
}

double NodeFunction::scalar_deriv(int k, double x) const {
  if (kind_ != NodeKind::ScalarSmooth) {
    if (dim_ != 1) throw Error("scalar_deriv needs a 1-D node");
    // 1-D affine / quadratic special cases fall back to the generic formulas
    Vec v(1);
    v[0] = x;
    if (k == 0) return value(v);
    if (k == 1) return gradient(v)[0];
    if (k == 2) return hessian(v)(0, 0);
    return 0.0;
  }
  const double u = scale_ * x + shift_;
  switch (family_) {
    case ScalarFamily::Polynomial: {
      Poly p(coeffs_.data(), coeffs_.data() + coeffs_.size());
      for (int i = 0; i < k; ++i) p = poly_diff(p);
      return poly_eval(p, x);
    }
    case ScalarFamily::Tanh: {
      // d^k/dx^k amp*tanh(u) = amp*scale^k * P_k(tanh u),
      // P_0 = T, P_{k+1} = P_k'(T) (1 - T^2)
      Poly p = {0.0, 1.0};
      const Poly sech2 = {1.0, 0.0, -1.0};
      for (int i = 0; i < k; ++i) p = poly_mul(poly_diff(p), sech2);
      return amp_ * std::pow(scale_, k) * poly_eval(p, std::tanh(u));
    }
    case ScalarFamily::Softplus: {
      if (k == 0) return amp_ * stable_softplus(u);
      // derivatives are polynomials in the logistic s: S_1 = s,
      // S_{k+1} = S_k'(s) (s - s^2)
      Poly p = {0.0, 1.0};
      const Poly ds = {0.0, 1.0, -1.0};
      for (int i = 1; i < k; ++i) p = poly_mul(poly_diff(p), ds);
      const double s = 1.0 / (1.0 + std::exp(-u));
      return amp_ * std::pow(scale_, k) * poly_eval(p, s);
    }
    case ScalarFamily::ExpNegSq: {
      // d^k/du^k e^{-u^2} = G_k(u) e^{-u^2}, G_{k+1} = G_k' - 2u G_k
      Poly g = {1.0};
      const Poly neg2u = {0.0, -2.0};
      for (int i = 0; i < k; ++i) g = poly_add(poly_diff(g), poly_mul(neg2u, g));
      return amp_ * std::pow(scale_, k) * poly_eval(g, u) * std::exp(-u * u);
    }
  }
  throw Error("unreachable");
}

double NodeFunction::deriv_abs_sum(const Vec& x) const {
  double sum = std::abs(value(x));
  sum += gradient(x).cwiseAbs().sum();
  const Mat H = hessian(x);
  for (int i = 0; i < dim_; ++i)
    for (int j = i; j < dim_; ++j) sum += std::abs(H(i, j));
  if (kind_ == NodeKind::ScalarSmooth)
    for (int k = 3; k <= m_; ++k) sum += std::abs(scalar_deriv(k, x[0]));
  return sum;
}

}  // namespace compoc
