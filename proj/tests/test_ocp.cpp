#include <compoc/errors.hpp>
#include <compoc/ocp.hpp>

#include <doctest.h>

#include <cmath>

using namespace compoc;

namespace {

CompGraph scalar_poly_graph(double R, double c2, double c1 = 0.0,
                            double c0 = 0.0) {
  CompGraph g;
  int x0 = g.add_input(R);
  Vec c(3);
  c << c0, c1, c2;
  g.add_node(1, NodeFunction::polynomial(c, R), {x0});
  g.finalize();
  return g;
}

// scalar LQ: x' = 0.5 x + u, l1 = x^2, l2 = 0.5 u^2, g = 2 x^2
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
  sc.l1 = scalar_poly_graph(16.0, 1.0);
  sc.l2 = scalar_poly_graph(16.0, 0.5);
  inst.stage = sc;
  inst.terminal = scalar_poly_graph(16.0, 2.0);
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

// two-state instance with dense couplings for derivative checks
OcpInstance plane_lq(int N = 3) {
  OcpInstance inst;
  inst.n = 2;
  inst.q = 1;
  inst.N = N;
  Mat A(2, 2), B(2, 1);
  A << 0.6, 0.2, -0.1, 0.5;
  B << 1.0, 0.3;
  inst.dynamics = LinearDynamics{A, B};
  SeparatedCost sc;
  {
    CompGraph l1;
    int a = l1.add_input(16.0);
    int b = l1.add_input(16.0);
    Mat Q(2, 2);
    Q << 1.0, 0.2, 0.2, 0.8;
    l1.add_node(1, NodeFunction::quadratic_form(Q, Vec::Zero(2), 0.0, 16.0),
                {a, b});
    l1.finalize();
    sc.l1 = l1;
  }
  sc.l2 = scalar_poly_graph(16.0, 0.4);
  inst.stage = sc;
  {
    CompGraph g;
    int a = g.add_input(16.0);
    int b = g.add_input(16.0);
    g.add_node(1, NodeFunction::squared_norm(2, 16.0), {a, b});
    g.finalize();
    inst.terminal = g;
  }
  OmegaBox box;
  box.lo = Vec::Constant(2, -0.4);
  box.hi = Vec::Constant(2, 0.4);
  inst.domain.omega = box;
  inst.domain.U0 = Vec::Zero(N);
  inst.domain.gamma = 0.4;
  inst.domain.R = 16.0;
  inst.check();
  return inst;
}

// nonlinear scalar dynamics x' = 0.5 x + u - 0.1 x^2 as a graph
OcpInstance curved_instance() {
  OcpInstance inst;
  inst.n = 1;
  inst.q = 1;
  inst.N = 3;
  CompGraph f;
  int x0 = f.add_input(4.0);
  int u0 = f.add_input(4.0);
  Vec wl(2);
  wl << 0.5, 1.0;
  int lin = f.add_node(1, NodeFunction::weighted_sum(wl, 4.0), {x0, u0});
  Vec c(3);
  c << 0.0, 0.0, 1.0;
  int sq = f.add_node(1, NodeFunction::polynomial(c, 4.0), {x0});
  Vec wc(2);
  wc << 1.0, -0.1;
  f.add_node(2, NodeFunction::weighted_sum(wc, 32.0), {lin, sq});
  f.finalize();
  inst.dynamics = GraphDynamics{f};
  SeparatedCost sc;
  sc.l1 = scalar_poly_graph(16.0, 1.0);
  sc.l2 = scalar_poly_graph(16.0, 0.5);
  inst.stage = sc;
  inst.terminal = scalar_poly_graph(16.0, 2.0);
  OmegaBox box;
  box.lo = Vec::Constant(1, -0.4);
  box.hi = Vec::Constant(1, 0.4);
  inst.domain.omega = box;
  inst.domain.U0 = Vec::Zero(3);
  inst.domain.gamma = 0.3;
  inst.domain.R = 16.0;
  inst.check();
  return inst;
}

}  // namespace

TEST_CASE("instance check catches shape mistakes") {
  OcpInstance inst = small_lq();
  SUBCASE("bad A") {
    std::get<LinearDynamics>(inst.dynamics).A = Mat::Zero(2, 1);
    CHECK_THROWS_AS(inst.check(), ConfigError);
  }
  SUBCASE("bad stage cost arity") {
    auto& sc = std::get<SeparatedCost>(inst.stage);
    sc.l1 = scalar_poly_graph(16.0, 1.0);
    CHECK_NOTHROW(inst.check());
    CompGraph two;
    int a = two.add_input(16.0);
    int b = two.add_input(16.0);
    two.add_node(1, NodeFunction::squared_norm(2, 16.0), {a, b});
    two.finalize();
    sc.l1 = two;
    CHECK_THROWS_AS(inst.check(), ConfigError);
  }
  SUBCASE("bad U0 length") {
    inst.domain.U0 = Vec::Zero(5);
    CHECK_THROWS_AS(inst.check(), ConfigError);
  }
  SUBCASE("nonpositive gamma") {
    inst.domain.gamma = 0.0;
    CHECK_THROWS_AS(inst.check(), ConfigError);
  }
  SUBCASE("reversed start box") {
    OmegaBox box;
    box.lo = Vec::Constant(1, 1.0);
    box.hi = Vec::Constant(1, -1.0);
    inst.domain.omega = box;
    CHECK_THROWS_AS(inst.check(), ConfigError);
  }
}

TEST_CASE("omega sampling is deterministic and cycles point lists") {
  OmegaBox box;
  box.lo = Vec::Constant(2, -1.0);
  box.hi = Vec::Constant(2, 3.0);
  auto s = sample_omega(box, 5);
  REQUIRE(s.size() == 5);
  CHECK(s[0](0) == doctest::Approx(1.0).epsilon(1e-15));  // box center
  auto s2 = sample_omega(box, 5);
  CHECK(s[3] == s2[3]);

  OmegaPoints pts;
  pts.pts.push_back(Vec::Constant(1, 7.0));
  pts.pts.push_back(Vec::Constant(1, 9.0));
  auto sp = sample_omega(pts, 5);
  REQUIRE(sp.size() == 5);
  CHECK(sp[0](0) == 7.0);
  CHECK(sp[1](0) == 9.0);
  CHECK(sp[4](0) == 7.0);
}

TEST_CASE("rollout reproduces the hand-computed trajectory and cost") {
  OcpInstance inst = small_lq();
  Vec x(1), U(2);
  x << 0.4;
  U << 0.2, -0.1;
  Rollout ro = rollout(inst, x, U);
  REQUIRE(ro.states.rows() == 3);
  CHECK(ro.states(0, 0) == 0.4);
  CHECK(ro.states(1, 0) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(ro.states(2, 0) == doctest::Approx(0.1).epsilon(1e-14));
  // (x0^2 + 0.5 u0^2) + (x1^2 + 0.5 u1^2) = 0.18 + 0.165
  CHECK(ro.running == doctest::Approx(0.345).epsilon(1e-14));
  CHECK(ro.cost == doctest::Approx(0.365).epsilon(1e-14));
  CHECK(cost_J(inst, x, U) == ro.cost);
}

TEST_CASE("recursive and matrix rollouts agree") {
  OcpInstance inst = plane_lq(4);
  RolloutMatrices rm = build_rollout_matrices(inst);
  REQUIRE(rm.C.size() == 5);
  CHECK(rm.C[0].isZero(0.0));
  CHECK(rm.Apow[0] == Mat::Identity(2, 2));
  Rng rng(31);
  for (int t = 0; t < 20; ++t) {
    Vec x(2), U(4);
    for (int i = 0; i < 2; ++i) x(i) = rng.unif(-0.4, 0.4);
    for (int i = 0; i < 4; ++i) U(i) = rng.unif(-0.3, 0.3);
    Mat S = rollout_states(inst, x, U);
    for (int k = 0; k <= 4; ++k) {
      Vec xk = rm.Apow[k] * x + rm.C[k] * U;
      CHECK((S.row(k).transpose() - xk).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("linear-path gradient and hessian match finite differences") {
  OcpInstance inst = plane_lq();
  Vec x(2), U(3);
  x << 0.3, -0.2;
  U << 0.1, -0.2, 0.05;
  Vec g = grad_J(inst, x, U);
  const double h = 1e-6;
  for (int j = 0; j < 3; ++j) {
    Vec Up = U, Um = U;
    Up(j) += h;
    Um(j) -= h;
    const double fd = (cost_J(inst, x, Up) - cost_J(inst, x, Um)) / (2 * h);
    CHECK(g(j) == doctest::Approx(fd).epsilon(1e-7));
  }
  Mat H = hess_J(inst, x, U);
  CHECK(H == H.transpose());
  for (int j = 0; j < 3; ++j) {
    Vec Up = U, Um = U;
    Up(j) += 1e-5;
    Um(j) -= 1e-5;
    Vec col = (grad_J(inst, x, Up) - grad_J(inst, x, Um)) / 2e-5;
    for (int i = 0; i < 3; ++i)
      CHECK(H(i, j) == doctest::Approx(col(i)).epsilon(1e-6));
  }
  // quadratic objective: hessian is constant in U
  Vec U2(3);
  U2 << -0.3, 0.2, 0.1;
  CHECK((hess_J(inst, x, U2) - H).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("adjoint gradient through graph dynamics matches finite differences") {
  OcpInstance inst = curved_instance();
  Vec x(1), U(3);
  x << 0.3;
  U << 0.1, -0.15, 0.2;
  Vec g = grad_J(inst, x, U);
  const double h = 1e-6;
  for (int j = 0; j < 3; ++j) {
    Vec Up = U, Um = U;
    Up(j) += h;
    Um(j) -= h;
    const double fd = (cost_J(inst, x, Up) - cost_J(inst, x, Um)) / (2 * h);
    CHECK(g(j) == doctest::Approx(fd).epsilon(1e-6));
  }
  Mat H = hess_J(inst, x, U);
  CHECK(H == H.transpose());
  for (int j = 0; j < 3; ++j) {
    Vec Up = U, Um = U;
    Up(j) += 1e-5;
    Um(j) -= 1e-5;
    Vec col = (grad_J(inst, x, Up) - grad_J(inst, x, Um)) / 2e-5;
    for (int i = 0; i < 3; ++i)
      CHECK(H(i, j) == doctest::Approx(col(i)).epsilon(1e-5));
  }
}

TEST_CASE("linear steps equal the affine-node computation bit for bit") {
  Mat A(2, 2), B(2, 1);
  A << std::sqrt(2.0) / 3.0, -0.21, 0.13, std::sqrt(3.0) / 5.0;
  B << 0.7, -std::sqrt(5.0) / 4.0;
  OcpInstance inst;
  inst.n = 2;
  inst.q = 1;
  inst.N = 1;
  inst.dynamics = LinearDynamics{A, B};
  inst.terminal = [] {
    CompGraph g;
    int a = g.add_input(16.0);
    int b = g.add_input(16.0);
    g.add_node(1, NodeFunction::squared_norm(2, 16.0), {a, b});
    g.finalize();
    return g;
  }();
  OmegaBox box;
  box.lo = Vec::Constant(2, -1.0);
  box.hi = Vec::Constant(2, 1.0);
  inst.domain.omega = box;
  inst.domain.U0 = Vec::Zero(1);
  inst.domain.R = 16.0;
  inst.check();

  CompGraph ldg = linear_dynamics_graph(A, B, 16.0);
  CHECK(ldg.input_dim == 3);
  CHECK(ldg.output_dim == 2);
  Rng rng(77);
  for (int t = 0; t < 25; ++t) {
    Vec x(2), U(1);
    x << rng.unif(-1, 1), rng.unif(-1, 1);
    U << rng.unif(-1, 1);
    Vec z(3);
    z << x, U;
    Mat S = rollout_states(inst, x, U);
    Vec via_graph = eval_graph(ldg, z);
    CHECK(S(1, 0) == via_graph(0));
    CHECK(S(1, 1) == via_graph(1));
  }
}

TEST_CASE("extended system reproduces the original objective bit for bit") {
  OcpInstance inst = small_lq();
  OcpInstance ext = extend_system(inst);
  CHECK(ext.n == 2);
  CHECK(ext.q == 1);
  CHECK(ext.N == inst.N);
  CHECK(std::holds_alternative<ZeroCost>(ext.stage));
  CHECK_FALSE(ext.linear());

  Rng rng(13);
  for (int t = 0; t < 50; ++t) {
    Vec x(1), U(2), xe(2);
    x << rng.unif(-0.5, 0.5);
    U << rng.unif(-0.5, 0.5), rng.unif(-0.5, 0.5);
    xe << x(0), 0.0;
    CHECK(cost_J(ext, xe, U) == cost_J(inst, x, U));
  }
}

TEST_CASE("extension lifts the start set and keeps feature-relevant structure") {
  OcpInstance inst = small_lq();
  OcpInstance ext = extend_system(inst);
  const auto& box = std::get<OmegaBox>(ext.domain.omega);
  REQUIRE(box.lo.size() == 2);
  CHECK(box.lo(1) == 0.0);
  CHECK(box.hi(1) == 0.0);
  CHECK(box.lo(0) == -0.5);

  // general nodes: one per stage-cost square; dynamics and glue are affine
  const auto& F = std::get<GraphDynamics>(ext.dynamics).g;
  CHECK(F.general_count() == 2);
  CHECK(F.input_dim == 3);   // (x, y, u)
  CHECK(F.output_dim == 2);  // (x', y')
  CHECK(ext.terminal.general_count() == 1);
  CHECK(ext.terminal.input_dim == 2);

  // terminal graph computes g(x) + y
  Vec xe(2);
  xe << 0.3, 0.7;
  CHECK(eval_graph(ext.terminal, xe)(0) ==
        doctest::Approx(2.0 * 0.09 + 0.7).epsilon(1e-14));

  OcpInstance inst_pts = inst;
  OmegaPoints pts;
  pts.pts.push_back(Vec::Constant(1, 0.25));
  inst_pts.domain.omega = pts;
  OcpInstance ext_pts = extend_system(inst_pts);
  const auto& lifted = std::get<OmegaPoints>(ext_pts.domain.omega).pts;
  REQUIRE(lifted.size() == 1);
  CHECK(lifted[0](0) == 0.25);
  CHECK(lifted[0](1) == 0.0);
}

TEST_CASE("convexity certification separates the three verdicts") {
  SUBCASE("strictly convex") {
    ConvexityCertificate cert = certify_convexity(small_lq(), 16, 1);
    CHECK(cert.verdict == ConvexityVerdict::StrictlyConvex);
    CHECK(cert.min_eig > kEigTol);
    CHECK(cert.samples == 16);
    CHECK(cert.witness_U.size() == 2);
  }
  SUBCASE("rank-deficient convex") {
    // a = b = 1 with a pure terminal square: the hessian is rank one
    OcpInstance inst;
    inst.n = 1;
    inst.q = 1;
    inst.N = 3;
    Mat A(1, 1), B(1, 1);
    A << 1.0;
    B << 1.0;
    inst.dynamics = LinearDynamics{A, B};
    inst.terminal = scalar_poly_graph(64.0, 1.0);
    OmegaBox box;
    box.lo = Vec::Constant(1, -1.0);
    box.hi = Vec::Constant(1, 1.0);
    inst.domain.omega = box;
    inst.domain.U0 = Vec::Zero(3);
    inst.domain.gamma = 1.0;
    inst.domain.R = 64.0;
    inst.check();
    ConvexityCertificate cert = certify_convexity(inst, 16, 1);
    CHECK(cert.verdict == ConvexityVerdict::ConvexOnly);
    CHECK(std::abs(cert.min_eig) <= kEigTol);
  }
  SUBCASE("concave terminal is rejected") {
    OcpInstance inst = small_lq();
    inst.terminal = scalar_poly_graph(16.0, -5.0);
    ConvexityCertificate cert = certify_convexity(inst, 16, 1);
    CHECK(cert.verdict == ConvexityVerdict::NotCertified);
    CHECK(cert.min_eig < -kEigTol);
  }
}

TEST_CASE("domain calibration centers the trust region on oracle solutions") {
  OcpInstance inst = small_lq();
  auto oracle = [](const Vec& x) {
    Vec U(2);
    U << -x(0), 0.5 * x(0);
    return U;
  };
  OcpInstance cal = calibrate_domain(inst, oracle, 1.25, 33, 1);

  // expected center: mean of the oracle over the same deterministic sample
  auto xs = sample_omega(inst.domain.omega, 33);
  Vec U0 = Vec::Zero(2);
  for (const auto& x : xs) U0 += oracle(x);
  U0 /= 33.0;
  CHECK(cal.domain.U0 == U0);

  double dmax = 0.0;
  for (const auto& x : xs) dmax = std::max(dmax, (oracle(x) - U0).norm());
  CHECK(cal.domain.gamma == std::max(1.25 * dmax, 1e-3));

  const double lg = std::log2(cal.domain.R);
  CHECK(lg == std::floor(lg));
  CHECK(cal.domain.R >= 2.0);
  CHECK(domain_boxes_ok(cal, 8, 3));
}

TEST_CASE("constant oracle hits the gamma floor") {
  OcpInstance inst = small_lq();
  auto oracle = [](const Vec&) { return Vec::Zero(2); };
  OcpInstance cal = calibrate_domain(inst, oracle);
  CHECK(cal.domain.gamma == 1e-3);
  CHECK(cal.domain.U0 == Vec::Zero(2));
}

TEST_CASE("state box violations and divergence are distinct failures") {
  OcpInstance inst = small_lq();
  Vec far(1), U(2);
  far << 100.0;
  U.setZero();
  CHECK_THROWS_AS(rollout(inst, far, U), DomainViolation);

  // doubling map: rollout_states ignores the box but guards divergence
  OcpInstance dbl;
  dbl.n = 1;
  dbl.q = 1;
  dbl.N = 40;
  Mat A(1, 1), B(1, 1);
  A << 2.0;
  B << 1.0;
  dbl.dynamics = LinearDynamics{A, B};
  dbl.terminal = scalar_poly_graph(16.0, 1.0);
  OmegaBox box;
  box.lo = Vec::Constant(1, -1.0);
  box.hi = Vec::Constant(1, 1.0);
  dbl.domain.omega = box;
  dbl.domain.U0 = Vec::Zero(40);
  dbl.domain.R = 16.0;
  dbl.check();
  Vec one(1);
  one << 1.0;
  CHECK_THROWS_AS(rollout_states(dbl, one, Vec::Zero(40)), CalibrationFailure);
}

TEST_CASE("extension requires a separated stage cost") {
  OcpInstance inst = small_lq();
  inst.stage = ZeroCost{};
  CHECK_THROWS_AS(extend_system(inst), ConfigError);
}
