#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "frontlab/asf.hpp"
#include "frontlab/geometry.hpp"

namespace frontlab::testing {

inline ClosedCurve ellipse(double a, double b, int M) {
  std::vector<Vec2> p(4 * M);
  for (int i = 0; i < 4 * M; ++i) {
    double t = 2.0 * pi * i / (4 * M);
    p[i] = {a * std::cos(t), b * std::sin(t)};
  }
  return resample_uniform_speed(p, M);
}

inline ClosedCurve circle(double r, int M) {
  std::vector<Vec2> p(M);
  for (int i = 0; i < M; ++i) p[i] = {r * std::cos(2.0 * pi * i / M), r * std::sin(2.0 * pi * i / M)};
  return ClosedCurve::from_uniform_nodes(p);
}

// phi_{w(s)}(xi - m(s)) with random low Fourier modes in m and w; derivatives in closed form
inline TransitionProfile random_profile(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  double m0 = 0.1 * U(rng), m1 = 0.1 * U(rng), m2 = 0.05 * U(rng), w0 = 0.6 + 0.1 * U(rng), w1 = 0.1 * U(rng);
  double ph = pi * U(rng);
  auto m = [=](double s) { return m0 + m1 * std::cos(2 * pi * s) + m2 * std::sin(4 * pi * s + ph); };
  auto dm = [=](double s) { return -2 * pi * m1 * std::sin(2 * pi * s) + 4 * pi * m2 * std::cos(4 * pi * s + ph); };
  auto w = [=](double s) { return w0 + w1 * std::sin(2 * pi * s + ph); };
  auto dw = [=](double s) { return 2 * pi * w1 * std::cos(2 * pi * s + ph); };
  auto arg = [=](double s, double xi) { return (xi - m(s) + w(s)) / (2.0 * w(s)); };
  Sampler2 om = [=](double s, double xi) { return detail::smoothstep7(arg(s, xi)) - 0.5; };
  Sampler2 ox = [=](double s, double xi) { return detail::smoothstep7_d(arg(s, xi)) / (2.0 * w(s)); };
  Sampler2 os = [=](double s, double xi) {
    // d/ds of (xi - m + w)/(2w)
    double da = (-dm(s) + dw(s)) / (2.0 * w(s)) - (xi - m(s) + w(s)) * dw(s) / (2.0 * w(s) * w(s));
    return detail::smoothstep7_d(arg(s, xi)) * da;
  };
  BreakFn br = [=](double s) { return std::vector<double>{m(s) - w(s), m(s) + w(s)}; };
  SupportFn sup = [=](double s) { return std::make_pair(m(s) - w(s), m(s) + w(s)); };
  return custom_profile(om, os, ox, br, sup);
}

}  // namespace frontlab::testing
