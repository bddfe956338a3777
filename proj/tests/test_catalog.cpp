#include <compoc/catalog.hpp>
#include <compoc/errors.hpp>

#include <doctest.h>

#include <cmath>

using namespace compoc;

namespace {

// central-difference probe of scalar_deriv consistency
double fd1(const NodeFunction& f, const Vec& x, int i, double h = 1e-6) {
  Vec a = x, b = x;
  a[i] += h;
  b[i] -= h;
  return (f.value(a) - f.value(b)) / (2 * h);
}

}  // namespace

TEST_CASE("kind and family names round-trip") {
  for (NodeKind k : {NodeKind::Input, NodeKind::Affine, NodeKind::WeightedSum,
                     NodeKind::QuadraticForm, NodeKind::SquaredNorm,
                     NodeKind::ScalarSmooth})
    CHECK(kind_from_name(kind_name(k)) == k);
  for (ScalarFamily f : {ScalarFamily::Tanh, ScalarFamily::Softplus,
                         ScalarFamily::ExpNegSq, ScalarFamily::Polynomial})
    CHECK(family_from_name(family_name(f)) == f);
  CHECK(kind_name(NodeKind::WeightedSum) == "weighted_sum");
  CHECK(family_name(ScalarFamily::ExpNegSq) == "exp_neg_sq");
  CHECK_THROWS_AS(kind_from_name("frobnicate"), Error);
}

TEST_CASE("affine and weighted_sum evaluate exactly") {
  Vec w(3);
  w << 1.0, -2.0, 0.5;
  auto aff = NodeFunction::affine(w, 4.0, 2.0);
  auto ws = NodeFunction::weighted_sum(w, 2.0);
  Vec x(3);
  x << 0.25, 1.0, -1.0;
  CHECK(aff.value(x) == 0.25 - 2.0 - 0.5 + 4.0);
  CHECK(ws.value(x) == 0.25 - 2.0 - 0.5);
  CHECK(aff.gradient(x) == w);
  CHECK(aff.hessian(x).isZero(0.0));
  CHECK(aff.linear());
  CHECK(ws.linear());
  CHECK(ws.c0() == 0.0);
}

TEST_CASE("quadratic form symmetrizes Q and has linear gradient") {
  Mat Q(2, 2);
  Q << 1.0, 1.0, 0.0, 2.0;  // asymmetric on purpose
  Vec b(2);
  b << 1.0, -1.0;
  auto f = NodeFunction::quadratic_form(Q, b, 3.0, 1.0);
  CHECK(f.Q()(0, 1) == 0.5);
  CHECK(f.Q()(1, 0) == 0.5);
  Vec x(2);
  x << 0.5, -0.5;
  CHECK(f.value(x) == doctest::Approx(4.5).epsilon(1e-15));
  Vec g = f.gradient(x);
  CHECK(g(0) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(g(1) == doctest::Approx(-2.5).epsilon(1e-15));
  Mat H = f.hessian(x);
  CHECK(H(0, 0) == 2.0);
  CHECK(H(0, 1) == 1.0);
  CHECK(H(1, 1) == 4.0);
  CHECK_FALSE(f.linear());
}

TEST_CASE("squared norm") {
  auto f = NodeFunction::squared_norm(2, 3.0);
  Vec x(2);
  x << 1.0, 2.0;
  CHECK(f.value(x) == 5.0);
  CHECK(f.gradient(x)(1) == 4.0);
  CHECK(f.hessian(x)(0, 0) == 2.0);
  CHECK(f.hessian(x)(0, 1) == 0.0);
}

TEST_CASE("tanh family matches closed forms") {
  auto f = NodeFunction::scalar_smooth(ScalarFamily::Tanh, 2.0, 3.0, 0.5, 1.0, 4);
  const double x = 0.1, u = 3.0 * x + 0.5, t = std::tanh(u);
  CHECK(f.scalar_deriv(0, x) == doctest::Approx(2.0 * t).epsilon(1e-15));
  CHECK(f.scalar_deriv(1, x) ==
        doctest::Approx(2.0 * 3.0 * (1 - t * t)).epsilon(1e-14));
  CHECK(f.scalar_deriv(2, x) ==
        doctest::Approx(2.0 * 9.0 * (-2 * t) * (1 - t * t)).epsilon(1e-13));
  Vec xv(1);
  xv << x;
  CHECK(f.gradient(xv)(0) == f.scalar_deriv(1, x));
  CHECK(f.hessian(xv)(0, 0) == f.scalar_deriv(2, x));
  CHECK(fd1(f, xv, 0) == doctest::Approx(f.scalar_deriv(1, x)).epsilon(1e-8));
}

TEST_CASE("softplus family matches closed forms") {
  auto f =
      NodeFunction::scalar_smooth(ScalarFamily::Softplus, 1.5, 2.0, -1.0, 1.0, 3);
  const double x = 0.3, u = 2.0 * x - 1.0;
  const double s = 1.0 / (1.0 + std::exp(-u));
  CHECK(f.scalar_deriv(0, x) ==
        doctest::Approx(1.5 * std::log1p(std::exp(u))).epsilon(1e-14));
  CHECK(f.scalar_deriv(1, x) == doctest::Approx(1.5 * 2.0 * s).epsilon(1e-14));
  CHECK(f.scalar_deriv(2, x) ==
        doctest::Approx(1.5 * 4.0 * s * (1 - s)).epsilon(1e-13));
  // also check stability far out: softplus(-50) ~ e^{-50}, no overflow at +50
  auto g = NodeFunction::scalar_smooth(ScalarFamily::Softplus, 1.0, 1.0, 0.0,
                                       100.0, 2);
  CHECK(g.scalar_deriv(0, 50.0) == doctest::Approx(50.0).epsilon(1e-12));
  CHECK(g.scalar_deriv(0, -50.0) > 0.0);
}

TEST_CASE("exp_neg_sq family matches closed forms") {
  auto f =
      NodeFunction::scalar_smooth(ScalarFamily::ExpNegSq, 1.0, 1.0, 0.0, 2.0, 4);
  const double x = 0.7, e = std::exp(-x * x);
  CHECK(f.scalar_deriv(0, x) == doctest::Approx(e).epsilon(1e-15));
  CHECK(f.scalar_deriv(1, x) == doctest::Approx(-2 * x * e).epsilon(1e-14));
  CHECK(f.scalar_deriv(2, x) ==
        doctest::Approx((4 * x * x - 2) * e).epsilon(1e-13));
  CHECK(f.scalar_deriv(3, x) ==
        doctest::Approx((12 * x - 8 * x * x * x) * e).epsilon(1e-12));
}

TEST_CASE("polynomial derivatives truncate") {
  Vec c(3);
  c << 1.0, -2.0, 3.0;  // 1 - 2x + 3x^2
  auto f = NodeFunction::polynomial(c, 1.0, 5);
  CHECK(f.scalar_deriv(0, 0.5) == doctest::Approx(1 - 1 + 0.75).epsilon(1e-15));
  CHECK(f.scalar_deriv(1, 0.5) == doctest::Approx(-2 + 3).epsilon(1e-15));
  CHECK(f.scalar_deriv(2, 0.5) == 6.0);
  CHECK(f.scalar_deriv(3, 0.5) == 0.0);
  CHECK(f.scalar_deriv(7, 0.5) == 0.0);
}

TEST_CASE("scalar_deriv falls back to generic formulas for 1-D nodes") {
  Vec w(1);
  w << 2.5;
  auto aff = NodeFunction::affine(w, 1.0, 1.0);
  CHECK(aff.scalar_deriv(0, 0.2) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(aff.scalar_deriv(1, 0.2) == 2.5);
  CHECK(aff.scalar_deriv(2, 0.2) == 0.0);
  CHECK(aff.scalar_deriv(3, 0.2) == 0.0);
}

TEST_CASE("deriv_abs_sum counts each unordered second-order index once") {
  auto sq = NodeFunction::squared_norm(2, 3.0, 2);
  Vec x(2);
  x << 1.0, 2.0;
  // |f| = 5, |grad| = 2 + 4, upper-triangle |H| = 2 + 0 + 2
  CHECK(sq.deriv_abs_sum(x) == doctest::Approx(15.0).epsilon(1e-15));

  auto t = NodeFunction::scalar_smooth(ScalarFamily::Tanh, 1.0, 1.0, 0.0, 1.0, 3);
  Vec z(1);
  z << 0.2;
  const double want = std::abs(t.scalar_deriv(0, 0.2)) +
                      std::abs(t.scalar_deriv(1, 0.2)) +
                      std::abs(t.scalar_deriv(2, 0.2)) +
                      std::abs(t.scalar_deriv(3, 0.2));
  CHECK(t.deriv_abs_sum(z) == doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("factories reject bad shapes") {
  Vec w0;  // empty
  CHECK_THROWS_AS(NodeFunction::affine(w0, 0.0, 1.0), Error);
  Vec w1(1);
  w1 << 1.0;
  CHECK_THROWS_AS(NodeFunction::affine(w1, 0.0, -1.0), Error);
  CHECK_THROWS_AS(NodeFunction::affine(w1, 0.0, 1.0, 1), Error);
  Mat Q(2, 3);
  Q.setZero();
  Vec b(2);
  b.setZero();
  CHECK_THROWS_AS(NodeFunction::quadratic_form(Q, b, 0.0, 1.0), Error);
  CHECK_THROWS_AS(NodeFunction::squared_norm(0, 1.0), Error);
  CHECK_THROWS_AS(NodeFunction::polynomial(Vec(), 1.0), Error);
  CHECK_THROWS_AS(
      NodeFunction::scalar_smooth(ScalarFamily::Polynomial, 1, 1, 0, 1.0), Error);
  CHECK_THROWS_AS(NodeFunction::input(0.0), Error);
}

TEST_CASE("arity mismatches are reported") {
  auto f = NodeFunction::squared_norm(3, 1.0);
  Vec x(2);
  x.setZero();
  CHECK_THROWS_AS(f.value(x), Error);
  CHECK_THROWS_AS(f.gradient(x), Error);
}
