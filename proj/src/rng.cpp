#include "bbcv/rng.hpp"

#include <cmath>
#include <numbers>

#include "bbcv/error.hpp"

namespace bbcv {

uint64_t RngStream::uniform_below(uint64_t n) {
  if (n == 0) throw Error("uniform_below: n must be positive");
  uint64_t threshold = (0 - n) % n;
  for (;;) {
    uint64_t r = next_u64();
    if (r >= threshold) return r % n;
  }
}

double RngStream::normal() {
  double u1 = uniform01();
  double u2 = uniform01();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double RngStream::gamma(double shape) {
  if (!(shape > 0.0)) throw Error("gamma: shape must be positive");
  if (shape < 1.0) {
    double u = uniform01();
    if (u <= 0.0) u = 0x1.0p-53;
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  double d = shape - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    double u = uniform01();
    if (u <= 0.0) u = 0x1.0p-53;
    double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double RngStream::beta(double a, double b) {
  double x = gamma(a);
  double y = gamma(b);
  double s = x + y;
  if (s <= 0.0) return 0.5;
  return x / s;
}

}  // namespace bbcv
