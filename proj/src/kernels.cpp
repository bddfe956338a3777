#include "compoc/kernels.hpp"

#include <Eigen/Eigenvalues>
#include <atomic>
#include <cmath>

#include "compoc/errors.hpp"
#include "compoc/parallel.hpp"

namespace compoc {

namespace par {

namespace {
std::atomic<bool> g_force_serial{false};
}

bool openmp_available() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void force_serial(bool on) { g_force_serial.store(on); }
bool serial_forced() { return g_force_serial.load(); }

}  // namespace par

namespace {

void check_batch(const std::vector<Vec>& xs, const std::vector<Vec>& Us) {
  if (xs.size() != Us.size())
    throw ConfigError("batch kernels need matching sample lists");
}

double min_eig_at(const OcpInstance& inst, const Vec& x, const Vec& U) {
  Mat H = hess_J(inst, x, U);
  Eigen::SelfAdjointEigenSolver<Mat> es(H, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double hess_norm_at(const OcpInstance& inst, const Vec& x, const Vec& U) {
  Mat H = hess_J(inst, x, U);
  Eigen::SelfAdjointEigenSolver<Mat> es(H, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

template <class F>
std::vector<double> map_samples(const std::vector<Vec>& xs,
                                const std::vector<Vec>& Us, bool parallel,
                                F&& f) {
  check_batch(xs, Us);
  std::vector<double> out(xs.size());
  if (parallel) {
    par::for_each_index(xs.size(), [&](std::size_t i) { out[i] = f(xs[i], Us[i]); });
  } else {
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = f(xs[i], Us[i]);
  }
  return out;
}

}  // namespace

std::vector<double> batch_min_eig(const OcpInstance& inst,
                                  const std::vector<Vec>& xs,
                                  const std::vector<Vec>& Us) {
  return map_samples(xs, Us, true, [&](const Vec& x, const Vec& U) {
    return min_eig_at(inst, x, U);
  });
}

std::vector<double> batch_min_eig_serial(const OcpInstance& inst,
                                         const std::vector<Vec>& xs,
                                         const std::vector<Vec>& Us) {
  return map_samples(xs, Us, false, [&](const Vec& x, const Vec& U) {
    return min_eig_at(inst, x, U);
  });
}

std::vector<double> batch_grad_norm(const OcpInstance& inst,
                                    const std::vector<Vec>& xs,
                                    const std::vector<Vec>& Us) {
  return map_samples(xs, Us, true, [&](const Vec& x, const Vec& U) {
    return grad_J(inst, x, U).norm();
  });
}

std::vector<double> batch_grad_norm_serial(const OcpInstance& inst,
                                           const std::vector<Vec>& xs,
                                           const std::vector<Vec>& Us) {
  return map_samples(xs, Us, false, [&](const Vec& x, const Vec& U) {
    return grad_J(inst, x, U).norm();
  });
}

std::vector<double> batch_hess_norm(const OcpInstance& inst,
                                    const std::vector<Vec>& xs,
                                    const std::vector<Vec>& Us) {
  return map_samples(xs, Us, true, [&](const Vec& x, const Vec& U) {
    return hess_norm_at(inst, x, U);
  });
}

std::vector<double> batch_hess_norm_serial(const OcpInstance& inst,
                                           const std::vector<Vec>& xs,
                                           const std::vector<Vec>& Us) {
  return map_samples(xs, Us, false, [&](const Vec& x, const Vec& U) {
    return hess_norm_at(inst, x, U);
  });
}

namespace {

Mat graph_eval_rows(const CompGraph& g, const Mat& X, bool parallel) {
  Mat Y(X.rows(), g.output_dim);
  auto row = [&](std::size_t i) {
    Y.row(i) = eval_graph(g, X.row(i).transpose()).transpose();
  };
  if (parallel)
    par::for_each_index((std::size_t)X.rows(), row);
  else
    for (std::size_t i = 0; i < (std::size_t)X.rows(); ++i) row(i);
  return Y;
}

Mat activation_rows(const Mat& X, const Mat& W, const Vec& b, bool parallel) {
  if (X.cols() != W.cols() || W.rows() != b.size())
    throw ConfigError("activation matrix shape mismatch");
  Mat A(X.rows(), W.rows());
  auto row = [&](std::size_t i) {
    for (int j = 0; j < W.rows(); ++j)
      A(i, j) = std::tanh(W.row(j).dot(X.row(i)) + b(j));
  };
  if (parallel)
    par::for_each_index((std::size_t)X.rows(), row);
  else
    for (std::size_t i = 0; i < (std::size_t)X.rows(); ++i) row(i);
  return A;
}

}  // namespace

Mat batch_graph_eval(const CompGraph& g, const Mat& X) {
  return graph_eval_rows(g, X, true);
}

Mat batch_graph_eval_serial(const CompGraph& g, const Mat& X) {
  return graph_eval_rows(g, X, false);
}

Mat activation_matrix(const Mat& X, const Mat& W, const Vec& b) {
  return activation_rows(X, W, b, true);
}

Mat activation_matrix_serial(const Mat& X, const Mat& W, const Vec& b) {
  return activation_rows(X, W, b, false);
}

}  // namespace compoc
