#include <compoc/compgraph.hpp>
#include <compoc/errors.hpp>

#include <doctest.h>

#include <cmath>

using namespace compoc;

namespace {

// y = tanh(x0 + 2 x1) + (x0 - x1)^2, assembled as a three-layer graph with a
// skip edge feeding the squared term
CompGraph two_input_graph() {
  CompGraph g;
  int x0 = g.add_input(1.0);
  int x1 = g.add_input(1.0);
  Vec w(2);
  w << 1.0, 2.0;
  int lin = g.add_node(1, NodeFunction::weighted_sum(w, 4.0), {x0, x1});
  int th = g.add_node(
      2, NodeFunction::scalar_smooth(ScalarFamily::Tanh, 1.0, 1.0, 0.0, 4.0),
      {lin});
  Vec wd(2);
  wd << 1.0, -1.0;
  int diff = g.add_node(1, NodeFunction::weighted_sum(wd, 4.0), {x0, x1});
  Vec c(3);
  c << 0.0, 0.0, 1.0;
  int sq = g.add_node(2, NodeFunction::polynomial(c, 4.0), {diff});
  Vec ws(2);
  ws << 1.0, 1.0;
  g.add_node(3, NodeFunction::weighted_sum(ws, 8.0), {th, sq});
  g.finalize();
  return g;
}

double ref_value(double a, double b) {
  return std::tanh(a + 2 * b) + (a - b) * (a - b);
}

}  // namespace

TEST_CASE("graph evaluation matches the closed form") {
  CompGraph g = two_input_graph();
  CHECK(g.input_dim == 2);
  CHECK(g.output_dim == 1);
  CHECK(g.max_layer() == 3);
  CHECK(g.general_count() == 2);  // tanh node and the square
  CHECK_FALSE(g.all_linear());

  Vec x(2);
  x << 0.3, -0.4;
  Vec y = eval_graph(g, x);
  REQUIRE(y.size() == 1);
  CHECK(y(0) == doctest::Approx(ref_value(0.3, -0.4)).epsilon(1e-15));
}

TEST_CASE("graph jacobian and hessian match finite differences") {
  CompGraph g = two_input_graph();
  Vec x(2);
  x << 0.2, 0.1;
  Mat J = grad_graph(g, x);
  REQUIRE(J.rows() == 1);
  REQUIRE(J.cols() == 2);
  const double h = 1e-6;
  for (int i = 0; i < 2; ++i) {
    Vec a = x, b = x;
    a(i) += h;
    b(i) -= h;
    const double fd = (eval_graph(g, a)(0) - eval_graph(g, b)(0)) / (2 * h);
    CHECK(J(0, i) == doctest::Approx(fd).epsilon(1e-7));
  }
  Mat H = hess_graph(g, x, 0);
  REQUIRE(H.rows() == 2);
  CHECK(H == H.transpose());
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      Vec a = x, b = x;
      a(j) += h;
      b(j) -= h;
      const double fd =
          (grad_graph(g, a)(0, i) - grad_graph(g, b)(0, i)) / (2 * h);
      CHECK(H(i, j) == doctest::Approx(fd).epsilon(5e-6));
    }
}

TEST_CASE("analytic hessian of the closed form") {
  CompGraph g = two_input_graph();
  Vec x(2);
  x << 0.25, -0.1;
  const double u = x(0) + 2 * x(1), t = std::tanh(u);
  const double ddt = -2 * t * (1 - t * t);
  Mat H = hess_graph(g, x, 0);
  CHECK(H(0, 0) == doctest::Approx(ddt + 2.0).epsilon(1e-12));
  CHECK(H(0, 1) == doctest::Approx(2 * ddt - 2.0).epsilon(1e-12));
  CHECK(H(1, 1) == doctest::Approx(4 * ddt + 2.0).epsilon(1e-12));
}

TEST_CASE("multiple outputs keep node-list order") {
  CompGraph g;
  int x0 = g.add_input(1.0);
  Vec w(1);
  w << 2.0;
  g.add_node(1, NodeFunction::affine(w, 1.0, 3.0), {x0});
  Vec c(2);
  c << 0.0, 3.0;
  g.add_node(1, NodeFunction::polynomial(c, 3.0), {x0});
  g.finalize();
  CHECK(g.output_dim == 2);
  Vec x(1);
  x << 0.5;
  Vec y = eval_graph(g, x);
  CHECK(y(0) == 2.0);  // affine listed first
  CHECK(y(1) == 1.5);
  Mat J = grad_graph(g, x);
  CHECK(J(0, 0) == 2.0);
  CHECK(J(1, 0) == 3.0);
}

TEST_CASE("finalize rejects malformed graphs") {
  SUBCASE("edge into an equal or lower layer") {
    CompGraph g;
    int x0 = g.add_input(1.0);
    Vec w(1);
    w << 1.0;
    int a = g.add_node(1, NodeFunction::affine(w, 0.0, 2.0), {x0});
    g.add_node(1, NodeFunction::affine(w, 0.0, 2.0), {a});
    CHECK_THROWS_AS(g.finalize(), Error);
  }
  SUBCASE("arity mismatch") {
    CompGraph g;
    int x0 = g.add_input(1.0);
    Vec w(2);
    w << 1.0, 1.0;
    g.add_node(1, NodeFunction::affine(w, 0.0, 2.0), {x0});
    CHECK_THROWS_AS(g.finalize(), Error);
  }
  SUBCASE("no inputs") {
    CompGraph g;
    Vec c(1);
    c << 1.0;
    CHECK_THROWS_AS(g.add_node(1, NodeFunction::polynomial(c, 1.0), {}),
                    Error);
    CHECK_THROWS_AS(g.finalize(), Error);
  }
  SUBCASE("non-input node on layer zero") {
    CompGraph g;
    g.add_input(1.0);
    Vec w(1);
    w << 1.0;
    CHECK_THROWS_AS(g.add_node(0, NodeFunction::affine(w, 0.0, 1.0), {0}),
                    Error);
  }
  SUBCASE("unknown predecessor id") {
    CompGraph g;
    g.add_input(1.0);
    Vec w(1);
    w << 1.0;
    CHECK_THROWS_AS(g.add_node(1, NodeFunction::affine(w, 0.0, 1.0), {17}),
                    Error);
  }
}

TEST_CASE("evaluation enforces node domains") {
  CompGraph g;
  int x0 = g.add_input(1.0);
  Vec w(1);
  w << 1.0;
  // downstream box is deliberately tight: values above 0.5 violate it
  int a = g.add_node(1, NodeFunction::affine(w, 0.0, 0.5), {x0});
  Vec c(2);
  c << 0.0, 1.0;
  g.add_node(2, NodeFunction::polynomial(c, 0.6), {a});
  g.finalize();
  Vec ok(1), bad(1), outside(1);
  ok << 0.4;
  bad << 0.9;
  outside << 1.5;
  CHECK_NOTHROW(eval_graph(g, ok));
  CHECK_THROWS_AS(eval_graph(g, bad), DomainViolation);
  CHECK_THROWS_AS(eval_graph(g, outside), DomainViolation);
  // the tolerance admits values a hair outside
  Vec edge(1);
  edge << 0.5 + 0.5 * kDomainTol;
  CHECK_NOTHROW(eval_graph(g, edge));
}

TEST_CASE("validate_graph separates comfortable from tight boxes") {
  SUBCASE("comfortable ranges pass") {
    CompGraph g = two_input_graph();
    ValidationReport r = validate_graph(g, 512);
    CHECK(r.pass);
    CHECK(r.edges.size() == g.edges.size());
    for (const auto& e : r.edges) {
      CHECK(e.ok);
      CHECK(e.lo <= e.hi);
      CHECK(e.limit > 0.0);
    }
  }
  SUBCASE("a box with no margin fails") {
    CompGraph g;
    int x0 = g.add_input(1.0);
    Vec w(1);
    w << 1.0;
    // consumer box equal to the value range: the 1% margin is violated
    int a = g.add_node(1, NodeFunction::affine(w, 0.0, 1.0), {x0});
    Vec c(2);
    c << 0.0, 1.0;
    g.add_node(2, NodeFunction::polynomial(c, 1.0), {a});
    g.finalize();
    ValidationReport r = validate_graph(g, 512);
    CHECK_FALSE(r.pass);
    bool found_bad = false;
    for (const auto& e : r.edges)
      if (!e.ok) found_bad = true;
    CHECK(found_bad);
  }
}

TEST_CASE("forward values are indexed by node position") {
  CompGraph g = two_input_graph();
  Vec x(2);
  x << 0.1, 0.2;
  std::vector<double> vals;
  graph_forward_values(g, x, true, vals);
  REQUIRE(vals.size() == g.nodes.size());
  // the final output node's slot holds the graph value
  const int out_idx = g.output_indices()[0];
  CHECK(vals[static_cast<std::size_t>(out_idx)] ==
        doctest::Approx(ref_value(0.1, 0.2)).epsilon(1e-15));
  CHECK(vals[0] == 0.1);
  CHECK(vals[1] == 0.2);
}

TEST_CASE("unfinalized graphs refuse evaluation") {
  CompGraph g;
  g.add_input(1.0);
  Vec x(1);
  x << 0.0;
  CHECK_THROWS_AS(eval_graph(g, x), Error);
}
