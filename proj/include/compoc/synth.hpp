#pragma once

#include <cstdint>
#include <vector>

#include "compoc/features.hpp"
#include "compoc/ocp.hpp"
#include "compoc/shallow.hpp"

namespace compoc {

struct ObjectiveBounds {
  double L1 = 0;  // sup gradient norm of the objective over the trust region
  double L2 = 0;  // sup Hessian spectral norm, same region
};

// Sampled over Omega x B_{2 gamma}(U0) with the shared safety factor.
ObjectiveBounds estimate_objective_bounds(const OcpInstance& inst,
                                          int n_samples, std::uint64_t seed);

// Everything the planner needs. Objective bounds come from the original
// instance; graph quantities from the extended dynamics and terminal graphs,
// whose general nodes are the ones the surrogate actually fits.
struct ConstantLedger {
  ObjectiveBounds obj;
  double lf = 1, lg = 1;      // whole-graph Lipschitz constants
  FeatureTuple f_dyn, f_term;
  double Cf = 0, Cg = 0;      // frozen rate constants, max over node kinds
  double geom = 0;            // (lf^N - 1) / (lf - 1), N at lf = 1
  double c_tilde1 = 0, c_frak = 0;
  double r = 1;               // max rate exponent of the two graphs
  double C1 = 0, C2 = 0;      // iteration constants of the schedule
};

ConstantLedger estimate_constants(const OcpInstance& orig,
                                  const OcpInstance& ext, int n_samples,
                                  std::uint64_t seed);

struct SynthesisPlan {
  double epsilon = 0;
  long long k_bar = 0;       // descent steps
  double mn = 0;             // perturbation budget of the unrolled descent
  double h_bar = 0;          // forward-difference probe spacing
  double alpha = 0;          // descent step scale, 1 / L2
  double delta_bar = 0;      // admissible surrogate sup error
  long long n_w = 0;         // width per fitted node
  long long surrogate_size = 0;  // trained parameters of the whole objective
  long long size_total = 0;      // evaluation-cost accounting over the run
  double bound_predicted = 0;    // suboptimality bound at delta = delta_bar
};

inline constexpr long long kMaxKBar = 100000000;
inline constexpr long long kPlanWidthCeiling = 1000000;
inline constexpr int kMaxBuildWidth = 32768;

// Pure arithmetic on the ledger; PlanInfeasible when the movement budget
// cannot fit the trust region, the width ceiling is exceeded, or a quantity
// leaves its admissible range.
SynthesisPlan plan_synthesis(const ConstantLedger& lc, const OcpInstance& inst,
                             double epsilon,
                             long long max_width = kPlanWidthCeiling);

double weak_bound(const ObjectiveBounds& obj, double gamma, int m,
                  long long k_bar, double h_bar, double delta);

struct ProbePoint {
  Vec x_ext;
  Vec U;
  double jhat = 0;  // surrogate objective at the probe
};

struct ProbeLog {
  std::vector<ProbePoint> pts;
};

// Zero-order gradient descent unrolled against the fitted surrogate: each
// round takes one base probe plus one shifted probe per coordinate and steps
// by alpha times the difference quotients. Iterates may drift up to gamma
// away from the exact descent path, hence the 3*gamma excursion guard.
struct UnrolledController {
  SurrogateNet f_hat, g_hat;
  Vec U0;
  double gamma = 0, h_bar = 0, alpha = 0;
  long long k_bar = 0;
  int n = 0, q = 0, N = 0;      // original state dimension; extension adds one
  double delta_build = 0;       // sup surrogate error on the build sample
  long long n_w_planned = 0, n_w_used = 0;
  int refits = 0;

  int m() const { return q * N; }
  // surrogate objective: rollout through f_hat, terminal through g_hat
  double surrogate_cost(const Vec& x_ext, const Vec& U) const;
  Vec solve(const Vec& x_orig, ProbeLog* log = nullptr) const;
};

struct BuildOptions {
  std::uint64_t seed = 1;
  int max_refits = 3;     // width doublings after a failed error check
  int delta_samples = 64;
};

// Fits both surrogates, measures the achieved sup error against the original
// objective and doubles the width until it clears the plan's delta_bar;
// SurrogateTooCoarse when the refit budget runs out.
UnrolledController build_controller(const OcpInstance& orig,
                                    const OcpInstance& ext,
                                    const SynthesisPlan& plan,
                                    const BuildOptions& opt = {});

struct EvalReport {
  int n_eval = 0;
  std::vector<double> weak_errs;  // J(controller) - J(oracle) per start
  double weak_err_max = 0, weak_err_mean = 0;
  double delta_probe = 0;   // sup surrogate error over visited probes
  double delta_used = 0;    // max of build and probe sups
  double bound_used = 0;    // weak bound evaluated at delta_used
  bool weak_ok = false;     // weak_err_max <= bound_used
  bool within_eps = false;  // bound_used <= epsilon
};

struct EvalOptions {
  int n_eval = 33;
  std::uint64_t seed = 1;
};

// Runs the controller from sampled starts, compares against the closed-form
// oracle when the instance is linear-quadratic and the descent oracle
// otherwise, and audits every probe the controller visited.
EvalReport evaluate_controller(const OcpInstance& orig,
                               const UnrolledController& ctrl,
                               const SynthesisPlan& plan,
                               const ConstantLedger& lc,
                               const EvalOptions& opt = {});

}  // namespace compoc
