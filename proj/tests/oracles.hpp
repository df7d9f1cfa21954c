#pragma once

// Independent reference computations used only by the tests.

#include "nvdyn/types.hpp"

#include <cmath>
#include <utility>
#include <vector>

namespace oracle {

using nvdyn::Matrix8;
using nvdyn::Vector8;

/// Classic fourth-order Runge-Kutta on dL/dt = M L with a fixed step.
inline Vector8 rk4(const Matrix8& m, Vector8 v, double t, double h) {
  const long steps = std::lround(t / h);
  for (long i = 0; i < steps; ++i) {
    const Vector8 k1 = m * v;
    const Vector8 k2 = m * (v + 0.5 * h * k1);
    const Vector8 k3 = m * (v + 0.5 * h * k2);
    const Vector8 k4 = m * (v + h * k3);
    v += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return v;
}

struct Transition {
  int from, to; // zero-based
  double rate;
};

/// Generator assembled from an explicit transition list (column convention).
inline Matrix8 assemble(const std::vector<Transition>& list) {
  Matrix8 m = Matrix8::Zero();
  for (const auto& t : list) {
    m(t.to, t.from) += t.rate;
    m(t.from, t.from) -= t.rate;
  }
  return m;
}

/// Transition list written out by hand for the eight-level model, with P the
/// pump rate in 1/ns.
struct RawParams {
  double g21, g27, g43, g47, g65, g71, g73, g8, r42, r52;
  double s12, s34, s25, s45, s78, s56, s67, s61, s63;
};

inline std::vector<Transition> eight_level(const RawParams& p, double pump) {
  const double n = 1.0 + p.r42 + p.r52;
  return {
      {0, 1, pump * p.s12}, {2, 3, pump * p.s34}, {1, 4, pump * p.s25}, {3, 4, pump * p.s45},
      {4, 5, pump * p.s56}, {5, 0, pump * p.s61}, {5, 2, pump * p.s63}, {5, 6, pump * p.s67},
      {6, 7, pump * p.s78},
      {1, 0, p.g21}, {1, 6, p.g27}, {3, 2, p.g43}, {3, 6, p.g47}, {5, 4, p.g65}, {6, 0, p.g71}, {6, 2, p.g73},
      {7, 1, p.g8 / n}, {7, 3, p.g8 * p.r42 / n}, {7, 4, p.g8 * p.r52 / n},
  };
}

/// Reference parameter values typed in directly.
inline RawParams reference_raw() {
  return {1 / 13.0, 1 / 93.5, 1 / 13.0, 1 / 14.98, 1 / 20.0, 1 / 186.12, 1 / 2722.0, 1 / 0.2, 2.7, 0.0,
          1.0,      1.0,      0.237,    0.237,      0.0059,   0.562,      0.15,       0.281,     0.3};
}

/// Brute-force window search: every grid-aligned window from index 0.
inline std::pair<double, std::size_t> best_snr_bruteforce(const std::vector<double>& s0,
                                                          const std::vector<double>& s1, double dt) {
  double best = -1e300;
  std::size_t best_k = 0;
  for (std::size_t k = 1; k < s0.size(); ++k) {
    double a = 0.0, b = 0.0;
    for (std::size_t i = 1; i <= k; ++i) {
      a += 0.5 * dt * (s0[i] + s0[i - 1]);
      b += 0.5 * dt * (s1[i] + s1[i - 1]);
    }
    const double v = (a - b) / std::sqrt(a + b);
    if (v > best) {
      best = v;
      best_k = k;
    }
  }
  return {best, best_k};
}

} // namespace oracle
