#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "compoc/compgraph.hpp"

namespace compoc {

struct LinearDynamics {
  Mat A;  // n x n
  Mat B;  // n x q
};

struct GraphDynamics {
  CompGraph g;  // maps [state; control] in R^{n+q} to R^n
};

using Dynamics = std::variant<LinearDynamics, GraphDynamics>;

struct ZeroCost {};

struct SeparatedCost {
  CompGraph l1;  // R^n -> R, state term
  CompGraph l2;  // R^q -> R, control term
};

using StageCost = std::variant<ZeroCost, SeparatedCost>;

struct OmegaBox {
  Vec lo, hi;
};
struct OmegaPoints {
  std::vector<Vec> pts;
};
using Omega = std::variant<OmegaBox, OmegaPoints>;

struct DomainSpec {
  Omega omega;
  Vec U0;              // center of the control trust region, length q*N
  double gamma = 1.0;  // trust radius
  double R = 16.0;     // state/control box half-width
};

// Discrete-time optimal control instance over horizon N with stacked control
// U = (u_0, ..., u_{N-1}) in R^{qN}.
struct OcpInstance {
  int n = 0, q = 0, N = 0;
  Dynamics dynamics;
  StageCost stage;
  CompGraph terminal;  // R^n -> R
  DomainSpec domain;

  int m() const { return q * N; }
  bool linear() const { return std::holds_alternative<LinearDynamics>(dynamics); }
  bool separated() const { return std::holds_alternative<SeparatedCost>(stage); }

  // structural invariant check; throws Error
  void check() const;
};

// deterministic Omega sample (Halton for boxes, the list itself for points)
std::vector<Vec> sample_omega(const Omega& omega, int count);

struct Rollout {
  Mat states;                       // (N+1) x n, row k = x_k
  double cost = 0.0;                // full objective value
  double running = 0.0;             // accumulated stage cost
};

// Box-checked rollout with cost evaluation; DomainViolation when a state
// leaves [-R, R]^n by more than the shared tolerance.
Rollout rollout(const OcpInstance& inst, const Vec& x, const Vec& U);

// States only, no box check; CalibrationFailure when a coordinate passes 1e8.
Mat rollout_states(const OcpInstance& inst, const Vec& x, const Vec& U);

double cost_J(const OcpInstance& inst, const Vec& x, const Vec& U);

// C[k] maps the stacked control to x_k along linear dynamics, k = 0..N.
struct RolloutMatrices {
  std::vector<Mat> C;     // each n x qN
  std::vector<Mat> Apow;  // A^k, k = 0..N
};

RolloutMatrices build_rollout_matrices(const OcpInstance& inst);

Vec grad_J(const OcpInstance& inst, const Vec& x, const Vec& U);
Mat hess_J(const OcpInstance& inst, const Vec& x, const Vec& U);

enum class ConvexityVerdict { StrictlyConvex, ConvexOnly, NotCertified };

struct ConvexityCertificate {
  ConvexityVerdict verdict = ConvexityVerdict::NotCertified;
  double min_eig = 0.0;
  Vec witness_x, witness_U;  // location of the smallest observed eigenvalue
  int samples = 0;
};

inline constexpr double kEigTol = 1e-10;
inline constexpr double kFdHessStep = 1e-4;
inline constexpr double kStateGuard = 1e8;

// Samples Omega x B_{2 gamma}(U0) and classifies the Hessian spectrum.
ConvexityCertificate certify_convexity(const OcpInstance& inst, int n_samples,
                                       std::uint64_t seed);

// Appends a running-cost coordinate: dynamics become
// (x, y, u) -> (f(x, u), y + l1(x) + l2(u)) and the terminal cost becomes
// g(x) + y, both as graphs; the stage cost of the result is Zero.
OcpInstance extend_system(const OcpInstance& inst);

// Dense affine graph for x' = A x + B u; node boxes all R.
CompGraph linear_dynamics_graph(const Mat& A, const Mat& B, double R);

// Chooses U0 (mean oracle solution over sampled Omega), gamma
// (margin * the largest distance to U0, floored at 1e-3) and the box radius R
// (smallest power of two strictly above twice every sampled rollout state and
// control coordinate, and above 1). Returns the recalibrated instance.
OcpInstance calibrate_domain(const OcpInstance& inst,
                             const std::function<Vec(const Vec&)>& oracle,
                             double margin = 1.25, int omega_samples = 33,
                             std::uint64_t seed = 1);

// true when B_{3 gamma}(U0) fits in the control box and the sampled rollout
// states stay within [-R/2, R/2]^n
bool domain_boxes_ok(const OcpInstance& inst, int omega_samples,
                     std::uint64_t seed);

}  // namespace compoc
