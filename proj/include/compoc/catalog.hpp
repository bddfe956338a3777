#pragma once

#include <string>

#include "compoc/util.hpp"

namespace compoc {

// Node function catalog. Every entry maps a low-dimensional box [-R, R]^d to a
// scalar; vector-valued stages are built as parallel scalar nodes.
enum class NodeKind {
  Input,          // graph input marker, no function attached
  Affine,         // w.x + c
  WeightedSum,    // w.x (no offset)
  QuadraticForm,  // x'Qx + b.x + c, Q symmetric
  SquaredNorm,    // |x|^2
  ScalarSmooth,   // 1-D family below
};

enum class ScalarFamily { Tanh, Softplus, ExpNegSq, Polynomial };

std::string kind_name(NodeKind k);
NodeKind kind_from_name(const std::string& s);
std::string family_name(ScalarFamily f);
ScalarFamily family_from_name(const std::string& s);

class NodeFunction {
 public:
  // factories validate shapes, R > 0 and m >= 2
  static NodeFunction input(double R);
  static NodeFunction affine(const Vec& w, double c, double R, int m = 2);
  static NodeFunction weighted_sum(const Vec& w, double R, int m = 2);
  static NodeFunction quadratic_form(const Mat& Q, const Vec& b, double c,
                                     double R, int m = 2);
  static NodeFunction squared_norm(int dim, double R, int m = 2);
  static NodeFunction scalar_smooth(ScalarFamily fam, double amp, double scale,
                                    double shift, double R, int m = 2);
  static NodeFunction polynomial(const Vec& coeffs, double R, int m = 2);

  NodeKind kind() const { return kind_; }
  int dim() const { return dim_; }
  double radius() const { return radius_; }
  int smooth_order() const { return m_; }
  bool is_input() const { return kind_ == NodeKind::Input; }
  // true for the members of the linear class (exact under surrogate assembly)
  bool linear() const {
    return kind_ == NodeKind::Affine || kind_ == NodeKind::WeightedSum;
  }

  double value(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  Mat hessian(const Vec& x) const;

  // k-th derivative for the 1-D kinds; exact recursions, any k >= 0
  double scalar_deriv(int k, double x) const;

  // Sum over multi-indices |alpha| <= m of |D^alpha f(x)|. Orders above two
  // vanish for the multi-dimensional kinds and use scalar_deriv for the 1-D
  // ones.
  double deriv_abs_sum(const Vec& x) const;

  // accessors used by serialization
  const Vec& w() const { return w_; }
  double c0() const { return c0_; }
  const Mat& Q() const { return Q_; }
  const Vec& b() const { return b_; }
  ScalarFamily family() const { return family_; }
  double amp() const { return amp_; }
  double scale() const { return scale_; }
  double shift() const { return shift_; }
  const Vec& coeffs() const { return coeffs_; }

 private:
  NodeFunction() = default;

  NodeKind kind_ = NodeKind::Input;
  int dim_ = 0;
  double radius_ = 1.0;
  int m_ = 2;

  Vec w_;           // affine / weighted_sum
  double c0_ = 0.0;
  Mat Q_;
  Vec b_;
  ScalarFamily family_ = ScalarFamily::Tanh;
  double amp_ = 1.0, scale_ = 1.0, shift_ = 0.0;
  Vec coeffs_;
};

}  // namespace compoc
