// Times the OpenMP batch kernels against their serial reference twins and
// checks that both produce identical bits.

#include <chrono>
#include <cstdio>
#include <vector>

#include "compoc/catalog.hpp"
#include "compoc/compgraph.hpp"
#include "compoc/kernels.hpp"
#include "compoc/ocp.hpp"
#include "compoc/parallel.hpp"
#include "compoc/util.hpp"

using namespace compoc;

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

CompGraph bench_graph() {
  CompGraph g;
  const double R = 2.0;
  std::vector<int> in;
  for (int i = 0; i < 4; ++i) in.push_back(g.add_input(R));
  std::vector<int> mid;
  for (int i = 0; i < 4; ++i)
    mid.push_back(g.add_node(
        1, NodeFunction::scalar_smooth(ScalarFamily::Tanh, 1.0, 0.7, 0.1, R),
        {in[i]}));
  const int sq = g.add_node(1, NodeFunction::squared_norm(4, 4.0 * R), in);
  Vec w(5);
  w << 0.2, -0.3, 0.25, 0.15, 0.05;
  g.add_node(2, NodeFunction::affine(w, 0.1, 8.0 * R),
             {mid[0], mid[1], mid[2], mid[3], sq});
  g.finalize();
  return g;
}

OcpInstance bench_instance() {
  OcpInstance inst;
  inst.n = 4;
  inst.q = 2;
  inst.N = 5;
  Mat A = 0.35 * Mat::Identity(4, 4);
  A(0, 1) = 0.2;
  A(2, 3) = -0.15;
  Mat B = Mat::Zero(4, 2);
  B(0, 0) = 0.8;
  B(1, 0) = 0.3;
  B(2, 1) = 0.7;
  B(3, 1) = -0.2;
  inst.dynamics = LinearDynamics{A, B};

  const double R = 16.0;
  CompGraph l1;
  {
    std::vector<int> xin;
    for (int i = 0; i < 4; ++i) xin.push_back(l1.add_input(R));
    l1.add_node(1, NodeFunction::squared_norm(4, 4.0 * R), xin);
    l1.finalize();
  }
  CompGraph l2;
  {
    std::vector<int> uin;
    for (int i = 0; i < 2; ++i) uin.push_back(l2.add_input(R));
    Mat Q = 0.5 * Mat::Identity(2, 2);
    l2.add_node(1, NodeFunction::quadratic_form(Q, Vec::Zero(2), 0.0, 4.0 * R),
                uin);
    l2.finalize();
  }
  CompGraph term;
  {
    std::vector<int> xin;
    for (int i = 0; i < 4; ++i) xin.push_back(term.add_input(R));
    term.add_node(1, NodeFunction::squared_norm(4, 4.0 * R), xin);
    term.finalize();
  }
  inst.stage = SeparatedCost{l1, l2};
  inst.terminal = term;
  inst.domain.omega = OmegaBox{Vec::Constant(4, -0.5), Vec::Constant(4, 0.5)};
  inst.domain.U0 = Vec::Zero(10);
  inst.domain.gamma = 0.5;
  inst.domain.R = R;
  return inst;
}

struct Row {
  const char* name;
  int samples;
  double serial_ms, parallel_ms;
  bool match;
};

void print_rows(const std::vector<Row>& rows) {
  std::printf("%-18s %9s %12s %12s %9s %7s\n", "kernel", "samples",
              "serial(ms)", "openmp(ms)", "speedup", "match");
  for (const auto& r : rows) {
    std::printf("%-18s %9d %12.2f %12.2f %8.2fx %7s\n", r.name, r.samples,
                r.serial_ms, r.parallel_ms,
                r.parallel_ms > 0 ? r.serial_ms / r.parallel_ms : 0.0,
                r.match ? "yes" : "NO");
  }
}

}  // namespace

int main() {
  std::printf("openmp: %s, threads: %d\n",
              par::openmp_available() ? "yes" : "no", par::thread_count());
  std::vector<Row> rows;

  {
    CompGraph g = bench_graph();
    const int n = 20000;
    Mat X(n, 4);
    for (int i = 0; i < n; ++i)
      X.row(i) = halton_in_cube(i + 1, 4, 2.0).transpose();
    auto t0 = std::chrono::steady_clock::now();
    Mat ys = batch_graph_eval_serial(g, X);
    double ts = ms_since(t0);
    t0 = std::chrono::steady_clock::now();
    Mat yp = batch_graph_eval(g, X);
    double tp = ms_since(t0);
    rows.push_back({"graph_eval", n, ts, tp, ys == yp});
  }

  {
    OcpInstance inst = bench_instance();
    const int n = 192;
    std::vector<Vec> xs, Us;
    Rng rng(7);
    for (int i = 0; i < n; ++i) {
      xs.push_back(halton_in_cube(i + 1, 4, 0.5));
      Us.push_back(ball_point(rng, inst.domain.U0, 2.0 * inst.domain.gamma));
    }
    auto t0 = std::chrono::steady_clock::now();
    auto es = batch_min_eig_serial(inst, xs, Us);
    double ts = ms_since(t0);
    t0 = std::chrono::steady_clock::now();
    auto ep = batch_min_eig(inst, xs, Us);
    double tp = ms_since(t0);
    rows.push_back({"min_eig", n, ts, tp, es == ep});

    t0 = std::chrono::steady_clock::now();
    auto gs = batch_grad_norm_serial(inst, xs, Us);
    ts = ms_since(t0);
    t0 = std::chrono::steady_clock::now();
    auto gp = batch_grad_norm(inst, xs, Us);
    tp = ms_since(t0);
    rows.push_back({"grad_norm", n, ts, tp, gs == gp});

    t0 = std::chrono::steady_clock::now();
    auto hs = batch_hess_norm_serial(inst, xs, Us);
    ts = ms_since(t0);
    t0 = std::chrono::steady_clock::now();
    auto hp = batch_hess_norm(inst, xs, Us);
    tp = ms_since(t0);
    rows.push_back({"hess_norm", n, ts, tp, hs == hp});
  }

  {
    const int n = 8192, w = 384, d = 3;
    Mat X(n, d);
    for (int i = 0; i < n; ++i)
      X.row(i) = halton_in_cube(i + 1, d, 1.0).transpose();
    Rng rng(11);
    Mat W(w, d);
    Vec b(w);
    for (int j = 0; j < w; ++j) {
      for (int k = 0; k < d; ++k) W(j, k) = rng.unif(-3.0, 3.0);
      b(j) = rng.unif(-3.0, 3.0);
    }
    auto t0 = std::chrono::steady_clock::now();
    Mat as = activation_matrix_serial(X, W, b);
    double ts = ms_since(t0);
    t0 = std::chrono::steady_clock::now();
    Mat ap = activation_matrix(X, W, b);
    double tp = ms_since(t0);
    rows.push_back({"activation", n, ts, tp, as == ap});
  }

  print_rows(rows);
  bool all = true;
  for (const auto& r : rows) all = all && r.match;
  if (!all) {
    std::printf("bit mismatch between serial and parallel kernels\n");
    return 1;
  }
  return 0;
}
