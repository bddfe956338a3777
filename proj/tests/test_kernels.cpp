#include <compoc/errors.hpp>
#include <compoc/kernels.hpp>
#include <compoc/parallel.hpp>

#include <doctest.h>

#include <cmath>

using namespace compoc;

namespace {

CompGraph scalar_sq_graph(double R, double coeff = 1.0) {
  CompGraph g;
  int x0 = g.add_input(R);
  Vec c(3);
  c << 0.0, 0.0, coeff;
  g.add_node(1, NodeFunction::polynomial(c, R), {x0});
  g.finalize();
  return g;
}

// 1-state 1-control LQ problem over two steps, strictly convex
OcpInstance small_lq() {
  OcpInstance inst;
  inst.n = 1;
  inst.q = 1;
  inst.N = 2;
  Mat A(1, 1), B(1, 1);
  A << 0.5;
  B << 1.0;
  inst.dynamics = LinearDynamics{A, B};
  SeparatedCost sc;
  sc.l1 = scalar_sq_graph(16.0);
  sc.l2 = scalar_sq_graph(16.0, 0.5);
  inst.stage = sc;
  inst.terminal = scalar_sq_graph(16.0, 2.0);
  OmegaBox box;
  box.lo = Vec::Constant(1, -0.5);
  box.hi = Vec::Constant(1, 0.5);
  inst.domain.omega = box;
  inst.domain.U0 = Vec::Zero(2);
  inst.domain.gamma = 0.5;
  inst.domain.R = 16.0;
  inst.check();
  return inst;
}

struct SerialGuard {
  ~SerialGuard() { par::force_serial(false); }
};

}  // namespace

TEST_CASE("objective batch kernels agree bitwise with their serial twins") {
  OcpInstance inst = small_lq();
  std::vector<Vec> xs, Us;
  Rng rng(5);
  for (int i = 0; i < 24; ++i) {
    xs.push_back(Vec::Constant(1, rng.unif(-0.5, 0.5)));
    Vec U(2);
    U << rng.unif(-0.4, 0.4), rng.unif(-0.4, 0.4);
    Us.push_back(U);
  }

  auto eig_p = batch_min_eig(inst, xs, Us);
  auto eig_s = batch_min_eig_serial(inst, xs, Us);
  auto grd_p = batch_grad_norm(inst, xs, Us);
  auto grd_s = batch_grad_norm_serial(inst, xs, Us);
  auto hes_p = batch_hess_norm(inst, xs, Us);
  auto hes_s = batch_hess_norm_serial(inst, xs, Us);

  REQUIRE(eig_p.size() == xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    CHECK(eig_p[i] == eig_s[i]);
    CHECK(grd_p[i] == grd_s[i]);
    CHECK(hes_p[i] == hes_s[i]);
    CHECK(eig_p[i] > 0.0);  // strictly convex problem
    CHECK(hes_p[i] >= eig_p[i]);
  }
}

TEST_CASE("batch kernels match direct per-sample evaluation") {
  OcpInstance inst = small_lq();
  std::vector<Vec> xs{Vec::Constant(1, 0.3), Vec::Constant(1, -0.2)};
  Vec U1(2), U2(2);
  U1 << 0.1, -0.3;
  U2 << 0.0, 0.2;
  std::vector<Vec> Us{U1, U2};

  auto grd = batch_grad_norm(inst, xs, Us);
  auto hes = batch_hess_norm(inst, xs, Us);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    CHECK(grd[i] == grad_J(inst, xs[i], Us[i]).norm());
    Mat H = hess_J(inst, xs[i], Us[i]);
    CHECK(hes[i] ==
          doctest::Approx(H.jacobiSvd().singularValues()(0)).epsilon(1e-13));
  }
}

TEST_CASE("graph batch eval equals row-wise eval_graph") {
  CompGraph g = scalar_sq_graph(4.0);
  Mat X(5, 1);
  X << -2.0, -0.5, 0.0, 1.0, 2.0;
  Mat Yp = batch_graph_eval(g, X);
  Mat Ys = batch_graph_eval_serial(g, X);
  REQUIRE(Yp.rows() == 5);
  REQUIRE(Yp.cols() == 1);
  for (int i = 0; i < 5; ++i) {
    CHECK(Yp(i, 0) == Ys(i, 0));
    CHECK(Yp(i, 0) == eval_graph(g, X.row(i).transpose())(0));
  }
}

TEST_CASE("activation matrix holds tanh features") {
  Mat X(3, 2), W(4, 2);
  X << 0.1, 0.2, -0.3, 0.4, 0.0, -1.0;
  W << 1.0, 0.0, 0.0, 1.0, 0.5, -0.5, 2.0, 2.0;
  Vec b(4);
  b << 0.0, 0.1, -0.2, 0.3;
  Mat Hp = activation_matrix(X, W, b);
  Mat Hs = activation_matrix_serial(X, W, b);
  REQUIRE(Hp.rows() == 3);
  REQUIRE(Hp.cols() == 4);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) {
      CHECK(Hp(i, j) == Hs(i, j));
      CHECK(Hp(i, j) == std::tanh(W.row(j).dot(X.row(i)) + b(j)));
    }
}

TEST_CASE("forcing serial mode produces identical results") {
  SerialGuard guard;
  OcpInstance inst = small_lq();
  std::vector<Vec> xs{Vec::Constant(1, 0.25)};
  std::vector<Vec> Us{Vec::Zero(2)};

  auto before = batch_min_eig(inst, xs, Us);
  par::force_serial(true);
  CHECK(par::serial_forced());
  auto after = batch_min_eig(inst, xs, Us);
  CHECK(before[0] == after[0]);
  par::force_serial(false);
  CHECK_FALSE(par::serial_forced());
}

TEST_CASE("thread count is reported") {
  CHECK(par::thread_count() >= 1);
}

TEST_CASE("exceptions inside parallel sweeps surface to the caller") {
  OcpInstance inst = small_lq();
  std::vector<Vec> xs{Vec::Constant(1, 0.0), Vec::Constant(1, 100.0)};
  std::vector<Vec> Us{Vec::Zero(2), Vec::Zero(2)};
  CHECK_THROWS_AS(batch_grad_norm(inst, xs, Us), DomainViolation);
  CHECK_THROWS_AS(batch_grad_norm_serial(inst, xs, Us), DomainViolation);
  CHECK_THROWS_AS(batch_min_eig(inst, xs, Us), DomainViolation);
}

TEST_CASE("batch kernels reject mismatched sample lists") {
  OcpInstance inst = small_lq();
  std::vector<Vec> xs{Vec::Constant(1, 0.0)};
  std::vector<Vec> Us;
  CHECK_THROWS_AS(batch_min_eig(inst, xs, Us), Error);
}
