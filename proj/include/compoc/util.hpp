#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace compoc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// ---- number <-> text, bit-exact ----
//
// Decimal strings use the shortest representation that round-trips; hex strings
// use the C hex-float format (no 0x prefix). Both survive JSON untouched.

std::string to_dec(double v);
double from_dec(std::string_view s);
std::string to_hexf(double v);
double from_hexf(std::string_view s);

// ---- content hashing ----

std::uint64_t fnv1a64(std::string_view bytes);
std::string fnv1a64_hex(std::string_view bytes);

// ---- deterministic RNG ----
//
// splitmix64 core with explicit uniform mappings so streams are identical
// across platforms for a given seed.

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();
  // uniform in [0, 1)
  double unif();
  double unif(double lo, double hi);
  // standard normal (Box-Muller, two draws per call, no cached state)
  double normal();
  // independent stream derived from this seed and a tag
  Rng fork(std::uint64_t tag) const;
  std::uint64_t seed() const { return state_; }

 private:
  std::uint64_t state_;
};

// ---- low-discrepancy sampling ----

// Halton point with the first `dim` prime bases, index >= 1. Components in [0,1).
std::vector<double> halton(std::uint64_t index, int dim);
// Halton point mapped into the box [lo, hi] componentwise.
Vec halton_in_box(std::uint64_t index, const Vec& lo, const Vec& hi);
// Centered cube [-r, r]^dim.
Vec halton_in_cube(std::uint64_t index, int dim, double r);

// Uniform draw from the Euclidean ball of given radius around center.
Vec ball_point(Rng& rng, const Vec& center, double radius);

// ---- grids ----

// n equally spaced values from lo to hi inclusive (n >= 2).
std::vector<double> linspace(double lo, double hi, int n);
// Full tensor grid over [-r, r]^dim with per_axis points per axis; rows are points.
Mat tensor_grid(int dim, int per_axis, double r);
// Same cardinality, offset a fraction of a cell so no point coincides with
// tensor_grid's.
Mat tensor_grid_offset(int dim, int per_axis, double r);

// Smallest power of two strictly greater than both v and 1.
double next_pow2_above(double v);

}  // namespace compoc
