#include "compoc/util.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "compoc/errors.hpp"

namespace compoc {

std::string to_dec(double v) {
  std::array<char, 64> buf{};
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw Error("to_dec failed");
  return std::string(buf.data(), p);
}

double from_dec(std::string_view s) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw Error("from_dec: cannot parse '" + std::string(s) + "'");
  return v;
}

std::string to_hexf(double v) {
  std::array<char, 64> buf{};
  auto [p, ec] =
      std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::hex);
  if (ec != std::errc()) throw Error("to_hexf failed");
  return std::string(buf.data(), p);
}

double from_hexf(std::string_view s) {
  double v = 0;
  auto [p, ec] =
      std::from_chars(s.data(), s.data() + s.size(), v, std::chars_format::hex);
  if (ec != std::errc() || p != s.data() + s.size())
    throw Error("from_hexf: cannot parse '" + std::string(s) + "'");
  return v;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string fnv1a64_hex(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return std::string(buf);
}

std::uint64_t Rng::next() {
  state_ += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double Rng::unif() {
  // 53 mantissa bits, value in [0, 1)
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double Rng::unif(double lo, double hi) { return lo + (hi - lo) * unif(); }

double Rng::normal() {
  // open-interval uniforms keep log() finite
  double u1 = (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  double u2 = static_cast<double>(next() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

Rng Rng::fork(std::uint64_t tag) const {
  Rng r(state_ ^ (0x9e3779b97f4a7c15ull * (tag + 1)));
  r.next();
  return r;
}

namespace {

constexpr std::array<int, 24> kPrimes = {2,  3,  5,  7,  11, 13, 17, 19,
                                         23, 29, 31, 37, 41, 43, 47, 53,
                                         59, 61, 67, 71, 73, 79, 83, 89};

double radical_inverse(std::uint64_t index, int base) {
  double inv = 1.0 / base, f = inv, value = 0.0;
  while (index > 0) {
    value += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return value;
}

}  // namespace

std::vector<double> halton(std::uint64_t index, int dim) {
  if (dim > static_cast<int>(kPrimes.size()))
    throw Error("halton: dimension too large");
  std::vector<double> p(dim);
  for (int i = 0; i < dim; ++i) p[i] = radical_inverse(index, kPrimes[i]);
  return p;
}

Vec halton_in_box(std::uint64_t index, const Vec& lo, const Vec& hi) {
  auto h = halton(index, static_cast<int>(lo.size()));
  Vec x(lo.size());
  for (int i = 0; i < lo.size(); ++i) x[i] = lo[i] + (hi[i] - lo[i]) * h[i];
  return x;
}

Vec halton_in_cube(std::uint64_t index, int dim, double r) {
  auto h = halton(index, dim);
  Vec x(dim);
  for (int i = 0; i < dim; ++i) x[i] = -r + 2.0 * r * h[i];
  return x;
}

Vec ball_point(Rng& rng, const Vec& center, double radius) {
  const int d = static_cast<int>(center.size());
  Vec dir(d);
  for (int i = 0; i < d; ++i) dir[i] = rng.normal();
  double nrm = dir.norm();
  if (nrm == 0.0) dir[0] = nrm = 1.0;
  double r = radius * std::pow(rng.unif(), 1.0 / d);
  return center + (r / nrm) * dir;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i)
    v[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  return v;
}

namespace {

Mat tensor_from_axis(int dim, const std::vector<double>& axis) {
  const int per_axis = static_cast<int>(axis.size());
  long total = 1;
  for (int i = 0; i < dim; ++i) total *= per_axis;
  Mat pts(total, dim);
  for (long p = 0; p < total; ++p) {
    long rem = p;
    for (int i = 0; i < dim; ++i) {
      pts(p, i) = axis[rem % per_axis];
      rem /= per_axis;
    }
  }
  return pts;
}

}  // namespace

Mat tensor_grid(int dim, int per_axis, double r) {
  return tensor_from_axis(dim, linspace(-r, r, per_axis));
}

Mat tensor_grid_offset(int dim, int per_axis, double r) {
  // a third of a cell forward; a symmetric half-step shift would land on the
  // origin again, this one shares no axis value with tensor_grid
  std::vector<double> axis(per_axis);
  const double step = 2.0 * r / per_axis;
  for (int k = 0; k < per_axis; ++k)
    axis[k] = -r + (static_cast<double>(k) + 1.0 / 3.0) * step;
  return tensor_from_axis(dim, axis);
}

double next_pow2_above(double v) {
  double p = 2.0;
  while (p <= v) p *= 2.0;
  return p;
}

}  // namespace compoc
