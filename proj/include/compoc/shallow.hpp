#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "compoc/compgraph.hpp"
#include "compoc/features.hpp"
#include "compoc/util.hpp"

namespace compoc {

// The ridge floors the fit error near sqrt(kRidgeRel); 1e-16 sits at the
// double-precision limit of the QR while keeping the condition estimate
// around 1e8, far from the failure threshold.
inline constexpr double kRidgeRel = 1e-16;
inline constexpr double kCondLimit = 1e14;

// One-node surrogate: random tanh features with ridge-fitted output weights.
// Inner weights are uniform in [-3/R, 3/R] per coordinate, biases uniform in
// [-3, 3]; only the output layer is trained.
struct ShallowNet {
  Mat W;         // width x d
  Vec b;         // width
  Vec c;         // width, ridge solution
  double R = 1;  // box the fit is valid on
  int d = 1;

  int width() const { return (int)c.size(); }
  double eval(const Vec& x) const;
};

struct FitReport {
  int width = 0;
  double train_sup = 0;  // sup |net - target| on the training grid
  double valid_sup = 0;  // same on the held-out grid
  double cond = 0;       // extreme R-diagonal ratio of the ridge least squares
};

// Fits fn on its own box. Training grid: 513 points for d == 1, full tensor
// grid with 33 points per axis for d <= 3, 8192 Halton points otherwise.
// Validation: the offset tensor grid, or Halton indices 8193..16384. The
// ridge enters as kRidgeRel * (mean squared feature column norm) appended as
// identity rows, solved by column-pivoted QR. Throws IllConditioned past
// kCondLimit.
ShallowNet fit_node(const NodeFunction& fn, int width, Rng& rng,
                    FitReport* report = nullptr);

// Node-exact surrogate of a graph: members of the linear class are kept
// verbatim, every general node is replaced by a ShallowNet of the shared
// width. Evaluation runs the same forward order without domain checks.
struct SurrogateNet {
  CompGraph graph;
  std::vector<std::optional<ShallowNet>> nets;  // by node index
  std::vector<FitReport> fits;                  // fitted nodes in graph order
  int width = 0;

  int fitted_nodes() const;
  // total trained-parameter count: width per fitted node
  long long size() const;
  Vec eval(const Vec& x) const;
};

// Deterministic per-node seeding: the node id forks the base stream.
SurrogateNet assemble_surrogate(const CompGraph& g, int width,
                                std::uint64_t seed);

struct RatePoint {
  int width = 0;
  double sup_err = 0;
};

struct RateReport {
  std::vector<RatePoint> points;
  double slope = 0;  // d log(err) / d log(width), least squares
  double r_hat = 0;  // -1 / slope
};

RateReport measure_rate(const NodeFunction& fn, const std::vector<int>& widths,
                        std::uint64_t seed);

// Frozen per-kind constant for the one-node error law
//   sup error <= C * lambda * L * width^{-1/r};
// calibrated once over widths {8, 16, 32, 64, 128} with about a 2x margin.
double calibrated_rate_constant(const NodeFunction& fn);

// C * lambda * l_max * v_g * width^{-1/r_max}; zero for all-linear graphs
double surrogate_sup_bound(double C, const FeatureTuple& t, int width);

}  // namespace compoc
