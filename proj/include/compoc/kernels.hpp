#pragma once

#include <vector>

#include "compoc/compgraph.hpp"
#include "compoc/ocp.hpp"

namespace compoc {

// Batch sweeps used by certification, constant estimation and rate
// measurement. Each kernel has a serial reference twin that computes the same
// values in the same per-sample order; the parallel version distributes
// samples across OpenMP threads and writes into preallocated slots, so the
// two agree bitwise.

// smallest eigenvalue of the objective Hessian at each (x_i, U_i)
std::vector<double> batch_min_eig(const OcpInstance& inst,
                                  const std::vector<Vec>& xs,
                                  const std::vector<Vec>& Us);
std::vector<double> batch_min_eig_serial(const OcpInstance& inst,
                                         const std::vector<Vec>& xs,
                                         const std::vector<Vec>& Us);

// Euclidean norm of the objective gradient at each sample
std::vector<double> batch_grad_norm(const OcpInstance& inst,
                                    const std::vector<Vec>& xs,
                                    const std::vector<Vec>& Us);
std::vector<double> batch_grad_norm_serial(const OcpInstance& inst,
                                           const std::vector<Vec>& xs,
                                           const std::vector<Vec>& Us);

// spectral norm of the objective Hessian at each sample
std::vector<double> batch_hess_norm(const OcpInstance& inst,
                                    const std::vector<Vec>& xs,
                                    const std::vector<Vec>& Us);
std::vector<double> batch_hess_norm_serial(const OcpInstance& inst,
                                           const std::vector<Vec>& xs,
                                           const std::vector<Vec>& Us);

// graph outputs for every row of X
Mat batch_graph_eval(const CompGraph& g, const Mat& X);
Mat batch_graph_eval_serial(const CompGraph& g, const Mat& X);

// tanh(X W^T + 1 b^T), the hidden-feature matrix of a shallow fit
Mat activation_matrix(const Mat& X, const Mat& W, const Vec& b);
Mat activation_matrix_serial(const Mat& X, const Mat& W, const Vec& b);

}  // namespace compoc
