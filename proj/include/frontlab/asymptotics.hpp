#pragma once

#include <functional>
#include <string>
#include <vector>

#include "frontlab/core.hpp"
#include "frontlab/quadrature.hpp"
#include "frontlab/rate_fit.hpp"

namespace frontlab {

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Sampler1 = std::function<double(double)>;
using Sampler2 = std::function<double(double, double)>;

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");
}

/// sqrt(pi) Gamma(alpha/2) / Gamma((alpha+1)/2) = \int_R (sigma^2+1)^{-(1+alpha)/2} dsigma.
inline double c_alpha(double alpha) {
  check_alpha(alpha);
  return std::sqrt(pi) * std::tgamma(0.5 * alpha) / std::tgamma(0.5 * (alpha + 1.0));
}

namespace detail {

// log(sin(x)/x), accurate near 0
inline double log_sinc(double x) {
  if (std::fabs(x) < 0.1) {
    double x2 = x * x;
    return -x2 * (1.0 / 6.0 + x2 * (1.0 / 180.0 + x2 * (1.0 / 2835.0 + x2 * (1.0 / 37800.0))));
  }
  return std::log(std::sin(x) / x);
}

/// \int_{-1/2}^{1/2} |s|^{-1-alpha} B(s) ds for smooth B with B(0) = 0 (integrable as
/// |s|^{1-alpha} after folding; the odd part of B cancels exactly).
/// Returns {value, self-estimate}.
inline std::pair<double, double> folded_integral(const Sampler1& B, double alpha, int order) {
  auto run = [&](int p) {
    const double h0 = 1.0 / 16.0;
    const auto& gj = gauss_jacobi01(p, 1.0 - alpha);
    CompensatedSum<double> acc;
    for (int k = 0; k < p; ++k) {
      double s = h0 * gj.x[k];
      double phi = (B(s) + B(-s)) / (s * s);
      acc.add(gj.w[k] * std::pow(h0, 2.0 - alpha) * phi);
    }
    auto outer = [&](double s) { return (B(s) + B(-s)) * std::pow(s, -1.0 - alpha); };
    acc.add(gl_composite(outer, h0, 0.5, 7, p));
    return acc.value();
  };
  double v = run(order);
  double c = run(order - 8);
  return {v, std::fabs(v - c)};
}

// 9-point central second derivative
inline double second_derivative(const Sampler1& f, double x, double h) {
  static const double c[5] = {-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0};
  double acc = c[0] * f(x);
  for (int k = 1; k <= 4; ++k) acc += c[k] * (f(x + k * h) + f(x - k * h));
  return acc / (h * h);
}

/// g''(x) at a minimum by Richardson extrapolation (in h^2) of symmetric second differences.
inline double curvature_at(const Sampler1& f, double x) {
  const int n = 8;
  double T[n];
  double h[n];
  const double f0 = f(x);
  for (int k = 0; k < n; ++k) {
    h[k] = 0.05 / std::ldexp(1.0, k);
    T[k] = (f(x + h[k]) + f(x - h[k]) - 2.0 * f0) / (h[k] * h[k]);
  }
  // Neville in h^2 toward h = 0
  for (int m = 1; m < n; ++m)
    for (int k = n - 1; k >= m; --k) {
      double a = h[k - m] * h[k - m], b = h[k] * h[k];
      T[k] = (a * T[k] - b * T[k - 1]) / (a - b);
    }
  return T[n - 1];
}

inline double first_derivative(const Sampler1& f, double x, double h) {
  return (8.0 * (f(x + h) - f(x - h)) - (f(x + 2 * h) - f(x - 2 * h))) / (12.0 * h);
}

}  // namespace detail

/// b_alpha = \int_{-1/2}^{1/2} (|s|^{-1-alpha} - |msin s|^{-1-alpha}) ds.
/// cfg.panel_order sets the rule order (rounded up to 16).
inline double b_alpha(double alpha, const QuadratureConfig& cfg = {}) {
  check_alpha(alpha);
  auto B = [alpha](double s) {
    if (s == 0.0) return 0.0;
    // 1 - (s/msin s)^{1+alpha}
    return -std::expm1(-(1.0 + alpha) * detail::log_sinc(pi * s));
  };
  int p = std::max(16, cfg.panel_order);
  if (cfg.nodes_per_period > 0) p = std::max(p, cfg.nodes_per_period / 2);
  return detail::folded_integral(B, alpha, p).first;
}

struct ExpansionInput {
  Sampler1 a;
  Sampler1 g;
  double alpha = 0.5;
  double tau = 0.1;
};

struct ExpansionResult {
  double leading = 0.0;
  double constant = 0.0;
  double regularized = 0.0;
  double G = 0.0;
  double predicted_order = 0.0;
  double shift = 0.0;  // location of the minimum of g before normalization
  double error_estimate = 0.0;

  double predict(double tau, double alpha) const { return leading * std::pow(tau, -alpha) + constant + regularized; }
};

namespace detail {

// Locates the minimum of g (grid + Newton) and checks the expansion hypotheses.
inline double check_minimum(const Sampler1& g, double* gpp) {
  const int M = 512;
  int jmin = 0;
  double gmin = g(0.0);
  for (int j = 1; j < M; ++j) {
    double v = g(static_cast<double>(j) / M - (j >= M / 2 ? 1.0 : 0.0));
    if (v < gmin) {
      gmin = v;
      jmin = j;
    }
  }
  double s = static_cast<double>(jmin) / M;
  if (s >= 0.5) s -= 1.0;
  for (int it = 0; it < 50; ++it) {
    double d1 = first_derivative(g, s, 1e-4);
    double d2 = second_derivative(g, s, 1e-2);
    if (!(d2 > 0.0)) break;
    double step = d1 / d2;
    s -= step;
    if (std::fabs(step) < 1e-14) break;
  }
  double gmax = 0.0;
  for (int j = 0; j < M; ++j) gmax = std::max(gmax, std::fabs(g(static_cast<double>(j) / M)));
  double d2 = curvature_at(g, s);
  if (!(d2 > 1e-6 * gmax)) throw std::invalid_argument("expansion: degenerate minimum of g (g'' <= 0)");
  if (std::fabs(g(s)) > 1e-10) throw std::invalid_argument("expansion: min g is not zero");
  for (int j = 0; j < M; ++j) {
    double t = static_cast<double>(j) / M - 0.5;
    if (torus_dist(t, s) > 2.0 / M && !(g(t) > 0.0))
      throw std::invalid_argument("expansion: g vanishes away from its minimum");
  }
  *gpp = d2;
  return s;
}

// regularized integral for minimum already at 0 with given G
inline std::pair<double, double> regularized_integral(const Sampler1& a, const Sampler1& g, double G, double alpha,
                                                      int order) {
  const double a0 = a(0.0);
  const double e = 0.5 * (1.0 + alpha);
  auto B = [&](double s) {
    if (s == 0.0) return 0.0;
    double as = std::fabs(s);
    // |s|^{1+alpha} [a/|g|^{(1+alpha)/2} - a0/(G^{1+alpha}|msin s|^{1+alpha})]
    double t1 = a(s) * std::pow(std::fabs(g(s)) / (s * s), -e);
    double t2 = a0 * std::pow(G, -1.0 - alpha) * std::exp(-(1.0 + alpha) * log_sinc(pi * as));
    return t1 - t2;
  };
  return folded_integral(B, alpha, order);
}

}  // namespace detail

/// Expansion of I(tau) = \int a / |g + tau^2|^{(1+alpha)/2} about tau = 0.
/// A minimum of g away from 0 is shifted to 0 first (recorded in `shift`).
inline ExpansionResult expand_I(const ExpansionInput& in, const QuadratureConfig& cfg = {}) {
  check_alpha(in.alpha);
  if (!in.a || !in.g) throw std::invalid_argument("expand_I: samplers required");
  double gpp = 0.0;
  double s0 = detail::check_minimum(in.g, &gpp);
  Sampler1 a = in.a, g = in.g;
  if (std::fabs(s0) > 1e-12) {
    a = [f = in.a, s0](double s) { return f(s + s0); };
    g = [f = in.g, s0](double s) { return f(s + s0); };
  }
  ExpansionResult r;
  r.shift = s0;
  r.G = std::sqrt(0.5 * gpp);
  r.predicted_order = 2.0 - in.alpha;
  const double a0 = a(0.0);
  const double alpha = in.alpha;
  r.leading = a0 * c_alpha(alpha) / r.G;
  r.constant = -a0 * (std::pow(2.0, 1.0 + alpha) / alpha + b_alpha(alpha, cfg)) / std::pow(r.G, 1.0 + alpha);
  auto [reg, err] = detail::regularized_integral(a, g, r.G, alpha, std::max(24, cfg.panel_order + 8));
  r.regularized = reg;
  r.error_estimate = err;
  return r;
}

/// Brute-force quadrature of I(tau), panels graded geometrically toward the minimum at 0.
inline double direct_I(const ExpansionInput& in, const QuadratureConfig& cfg = {}) {
  check_alpha(in.alpha);
  if (!(in.tau > 0.0)) throw std::invalid_argument("direct_I: tau must be positive");
  const double e = 0.5 * (1.0 + in.alpha);
  auto f = [&](double s) { return in.a(s) / std::pow(std::fabs(in.g(s)) + in.tau * in.tau, e); };
  double gpp = 0.0;
  double s0 = detail::check_minimum(in.g, &gpp);
  const double scale = std::min(0.25, in.tau / std::sqrt(0.5 * gpp));
  auto run = [&](int p) {
    CompensatedSum<double> acc;
    std::vector<double> br{0.0};
    double b = scale / 4.0;
    while (b < 0.5) {
      br.push_back(b);
      b *= 2.0;
    }
    br.push_back(0.5);
    for (size_t k = 0; k + 1 < br.size(); ++k) {
      double lo = br[k], hi = br[k + 1];
      int panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / (1.0 / 16.0))));
      acc.add(gl_composite([&](double u) { return f(s0 + u); }, lo, hi, panels, p));
      acc.add(gl_composite([&](double u) { return f(s0 - u); }, lo, hi, panels, p));
    }
    return acc.value();
  };
  int p = std::max(20, cfg.panel_order);
  double v = run(p + 10);
  double c = run(p);
  double tol = std::min(cfg.tolerance, 1e-8);
  if (std::fabs(v - c) > tol * std::max(std::fabs(v), 1e-300) && std::fabs(v - c) > 1e-14)
    throw ConvergenceError("direct_I: self-estimate exceeds tolerance");
  return v;
}

struct RemainderSweep {
  std::vector<double> tau;
  std::vector<double> direct;
  std::vector<double> predicted;
  std::vector<double> abs_err;
  RateFit fit;
};

/// |direct_I - I_pred| over a tau sweep, slope fitted on the middle 60%.
inline RemainderSweep remainder_order(const ExpansionInput& base, const std::vector<double>& taus,
                                      const QuadratureConfig& cfg = {}, const WindowPolicy* policy = nullptr) {
  ExpansionResult ex = expand_I(base, cfg);
  RemainderSweep out;
  for (double t : taus) {
    ExpansionInput in = base;
    in.tau = t;
    double d = direct_I(in, cfg);
    double p = ex.predict(t, base.alpha);
    out.tau.push_back(t);
    out.direct.push_back(d);
    out.predicted.push_back(p);
    out.abs_err.push_back(std::fabs(d - p));
  }
  WindowPolicy pol;
  pol.middle_fraction = 0.6;
  pol.noise_floor = 1e-12;
  if (policy) pol = *policy;
  out.fit = fit_rate(out.tau, out.abs_err, pol);
  return out;
}

/// Regularized integral H(delta) for the family g(., delta).
inline double regularized_H(const Sampler1& a, const Sampler2& g, double delta, double alpha,
                            const QuadratureConfig& cfg = {}) {
  check_alpha(alpha);
  Sampler1 gd = [&](double s) { return g(s, delta); };
  double G = std::sqrt(0.5 * detail::curvature_at(gd, 0.0));
  return detail::regularized_integral(a, gd, G, alpha, std::max(24, cfg.panel_order + 8)).first;
}

/// H'(0) for the family g(s, delta); derivatives in delta by fourth-order central differences.
/// The first integrand term carries the factor -(1+alpha)/2.
inline double expand_dH_ddelta(const Sampler1& a, const Sampler2& g, double alpha, const QuadratureConfig& cfg = {},
                               double fd_step = 1e-3) {
  check_alpha(alpha);
  const double a0 = a(0.0);
  auto dg = [&](double s) { return detail::first_derivative([&](double d) { return g(s, d); }, 0.0, fd_step); };
  // d/ddelta G^{-1-alpha} through d/ddelta G^2 = (dg)''(0)/2, consistent with the first term
  Sampler1 g0 = [&](double s) { return g(s, 0.0); };
  const double G2 = 0.5 * detail::curvature_at(g0, 0.0);
  const double dG2 = 0.5 * detail::curvature_at(dg, 0.0);
  const double dGpow = -0.5 * (1.0 + alpha) * std::pow(G2, -0.5 * (3.0 + alpha)) * dG2;
  const double e = 0.5 * (3.0 + alpha);
  auto B = [&](double s) {
    if (s == 0.0) return 0.0;
    double as = std::fabs(s);
    double g0 = std::fabs(g(s, 0.0));
    // |s|^{1+alpha} [ -(1+alpha)/2 a dg / |g|^{(3+alpha)/2} - dGpow a0 / |msin|^{1+alpha} ]
    double t1 = -0.5 * (1.0 + alpha) * a(s) * (dg(s) / (s * s)) * std::pow(g0 / (s * s), -e);
    double t2 = dGpow * a0 * std::exp(-(1.0 + alpha) * detail::log_sinc(pi * as));
    return t1 - t2;
  };
  // singular parts must cancel at s = 0
  {
    const double s1 = 1e-3;
    double scale = std::fabs(dGpow * a0) + std::fabs(a0) + 1e-300;
    double be = 0.5 * (B(s1) + B(-s1));
    if (std::fabs(be) > 1e-3 * scale)
      throw std::invalid_argument("expand_dH_ddelta: singularity at s = 0 does not cancel");
  }
  return detail::folded_integral(B, alpha, std::max(24, cfg.panel_order + 8)).first;
}

}  // namespace frontlab
