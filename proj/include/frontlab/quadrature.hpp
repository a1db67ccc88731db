#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/special_functions/zeta.hpp>

#include "frontlab/core.hpp"
#include "frontlab/geometry.hpp"

namespace frontlab {

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct KernelParams {
  double alpha = 0.5;
  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("kernel: alpha must lie in (0,1)");
  }
};

enum class PeriodicRule {
  corrected_trapezoid,  // node-only trapezoid with zeta end corrections
  graded_panels         // product Gauss-Jacobi cell plus geometric Gauss-Legendre panels
};

struct QuadratureConfig {
  int nodes_per_period = 0;       // 0: use the curve's node count
  double grading_exponent = 0.0;  // 0: Gauss-Jacobi inner cell; q >= 1: substitution u = h w^q
  double tolerance = 1e-6;
  PeriodicRule rule = PeriodicRule::corrected_trapezoid;
  int panel_order = 16;
  int correction_terms = 3;

  void validate(int m) const {
    if (m < 32) throw std::invalid_argument("quadrature: at least 32 nodes per period required");
    if (grading_exponent != 0.0 && grading_exponent < 1.0)
      throw std::invalid_argument("quadrature: grading exponent must be >= 1");
    if (!(tolerance > 0.0)) throw std::invalid_argument("quadrature: tolerance must be positive");
  }
};

struct QuadResult {
  double value = 0.0;
  double error_estimate = 0.0;
  bool converged = true;
  std::string warning;
};

namespace detail {

inline double zeta_of(double x) {
  if (std::fabs(x - 1.0) < 1e-12) throw QuadratureError("zeta correction hits the pole at 1");
  return boost::math::zeta(x);
}

/// h * sum_{i=1}^{Ne-1} v[st*i] minus generalized Euler-Maclaurin (Navot) corrections
/// for F(u) = |u|^{-beta} G(u). Integer m: G smooth, vanishing to order m at 0.
/// Non-integer m: a(s,s*) behaves like |u|^m, so F = |u|^{m-beta} times a smooth factor.
inline double zeta_corrected_sum(const std::vector<double>& v, int st, double m, double beta, int terms) {
  const int n = static_cast<int>(v.size());
  const int ne = n / st;
  const double h = static_cast<double>(st) / n;
  CompensatedSum<double> acc;
  for (int i = 1; i < ne; ++i) acc.add(v[static_cast<size_t>(st) * i]);
  double sum = h * acc.value();
  if (terms <= 0) return sum;
  int k0 = 0;
  if (std::fabs(m - std::round(m)) < 1e-12) {
    int mi = static_cast<int>(std::lround(m));
    k0 = (mi % 2 == 0) ? std::max(mi, 0) : mi + 1;
  } else {
    beta -= m;
  }
  const int J = terms + 1;
  if (2 * J >= ne) return sum;
  Eigen::MatrixXd A(J, J);
  Eigen::VectorXd b(J);
  for (int i = 1; i <= J; ++i) {
    double u = i * h;
    double even = 0.5 * (v[static_cast<size_t>(st) * i] + v[static_cast<size_t>(n - st * i)]);
    b(i - 1) = even * std::pow(u, beta - k0);
    for (int q = 0; q < J; ++q) A(i - 1, q) = std::pow(u / h, 2.0 * q);
  }
  Eigen::VectorXd e = A.colPivHouseholderQr().solve(b);
  CompensatedSum<double> corr;
  for (int q = 0; q < terms; ++q) {
    int k = k0 + 2 * q;
    double ek = e(q) / std::pow(h, 2.0 * q);
    corr.add(2.0 * zeta_of(beta - k) * ek * std::pow(h, k + 1.0 - beta));
  }
  return sum - corr.value();
}

}  // namespace detail

/// \int_T a(s,s*) / |z(s)-z(s*)|^beta ds*, a vanishing to order m at s* = s.
/// a is called as a(s, s*) with s* in [0,1).
template <class A>
QuadResult integrate_periodic_desingularized(A&& a, double m, double beta, const ClosedCurve& curve, double s,
                                             const QuadratureConfig& cfg = {}) {
  if (!(m - beta > -1.0))
    throw std::invalid_argument("integrate_periodic_desingularized: m - beta <= -1 is not integrable");
  const int M = cfg.nodes_per_period > 0 ? cfg.nodes_per_period : curve.size();
  cfg.validate(M);
  QuadResult res;
  const double sx = s * M;
  const bool aligned = (M == curve.size()) && std::fabs(sx - std::round(sx)) < 1e-9;
  const int i0 = static_cast<int>(std::lround(sx));
  const Vec2 z0 = aligned ? curve.node(i0) : curve.eval(s);

  if (cfg.rule == PeriodicRule::corrected_trapezoid) {
    std::vector<double> v(M, 0.0);
    CompensatedSum<double> mag;
    for (int j = 1; j < M; ++j) {
      double sj = wrap01(s + static_cast<double>(j) / M);
      Vec2 zj = aligned ? curve.node(i0 + j) : curve.eval(sj);
      v[j] = a(s, sj) / std::pow(norm(z0 - zj), beta);
      mag.add(std::fabs(v[j]));
    }
    res.value = detail::zeta_corrected_sum(v, 1, m, beta, cfg.correction_terms);
    double coarse = detail::zeta_corrected_sum(v, 2, m, beta, cfg.correction_terms);
    res.error_estimate = std::fabs(res.value - coarse);
    double scale = std::max(std::fabs(res.value), mag.value() / M);
    if (res.error_estimate > cfg.tolerance * scale) {
      res.converged = false;
      res.warning = "self-estimate exceeds tolerance";
    }
    return res;
  }

  // graded panels
  const double gamma = m - beta;
  auto F = [&](double u) {
    double sj = wrap01(s + u);
    return a(s, sj) / std::pow(norm(z0 - curve.eval(sj)), beta);
  };
  auto run = [&](int p) {
    const double h = 1.0 / M;
    CompensatedSum<double> acc;
    if (cfg.grading_exponent >= 1.0) {
      const double q = cfg.grading_exponent;
      const auto& gl = gauss_legendre(p);
      for (int side : {1, -1})
        for (int k = 0; k < p; ++k) {
          double w = gl.x[k];
          double u = h * std::pow(w, q);
          acc.add(gl.w[k] * q * h * std::pow(w, q - 1.0) * F(side * u));
        }
    } else {
      const auto& gj = gauss_jacobi01(p, gamma);
      for (int side : {1, -1})
        for (int k = 0; k < p; ++k) {
          double u = h * gj.x[k];
          acc.add(gj.w[k] * std::pow(h, 1.0 + gamma) * F(side * u) / std::pow(u, gamma));
        }
    }
    const double hcap = 1.0 / 32.0;
    double b0 = h;
    while (b0 < 0.5 - 1e-15) {
      double b1 = std::min({2.0 * b0, b0 + hcap, 0.5});
      acc.add(gl_integrate(F, b0, b1, p));
      acc.add(gl_integrate(F, -b1, -b0, p));
      b0 = b1;
    }
    return acc.value();
  };
  res.value = run(cfg.panel_order);
  double coarse = run(std::max(4, cfg.panel_order - 4));
  res.error_estimate = std::fabs(res.value - coarse);
  if (res.error_estimate > cfg.tolerance * std::max(1e-300, std::fabs(res.value))) {
    res.converged = false;
    res.warning = "self-estimate exceeds tolerance";
  }
  return res;
}

// ---------------------------------------------------------------------------
// Strip integrals

/// Everything an integrand may need at a chart point (s*, xi*).
struct StripSample {
  double s = 0.0, xi = 0.0;
  Vec2 x, z, T, N;
  double kappa = 0.0;
  double L1 = 0.0;
};

struct StripConfig {
  int far_panels = 32;       // panels per period outside the near window
  int order = 8;             // Gauss-Legendre order per cell direction
  int duffy_order = 10;      // order of the corner (Duffy) rule
  int smooth_nodes = 0;      // trapezoid nodes in s for smooth kernels (0: 2x base nodes)
  double admissibility = 1.0;
  double min_radius_factor = 1e-3;
  bool self_estimate = false;
  double tolerance = 1e-6;
};

using SupportFn = std::function<std::pair<double, double>(double)>;

/// Target of a strip integral: a plane point, optionally with known chart coordinates.
struct StripTarget {
  Vec2 p;
  std::optional<InStrip> coords;
};

template <class T>
struct StripResult {
  T value{};
  double error_estimate = 0.0;
  bool converged = true;
};

namespace detail {

inline StripSample strip_sample(const TubularChart& ch, double s, double xi) {
  FrameAt f = ch.table().frame(s);
  StripSample q;
  q.s = s;
  q.xi = xi;
  q.z = f.z;
  q.T = f.T;
  q.N = f.N;
  q.kappa = f.kappa;
  q.L1 = ch.base().length() * (1.0 - ch.delta() * f.kappa * xi);
  q.x = f.z + ch.delta() * xi * f.N;
  return q;
}

template <class F, class T>
class StripIntegrator {
 public:
  StripIntegrator(F& f, const TubularChart& ch, double beta, const StripConfig& cfg, const SupportFn& sup)
      : f_(f), ch_(ch), beta_(beta), cfg_(cfg), sup_(sup), L_(ch.base().length()), delta_(ch.delta()) {}

  std::pair<double, double> support(double s) const {
    if (sup_) return sup_(wrap01(s));
    return {-ch_.cz(), ch_.cz()};
  }

  double kernel(const Vec2& x) const {
    if (beta_ == 0.0) return 1.0;
    return std::pow(norm2(x - x0_), -0.5 * beta_);
  }

  // Periodic trapezoid in s, Gauss-Legendre across the support.
  T smooth(int ns, int pt, bool with_kernel) const {
    const auto& gl = gauss_legendre(pt);
    CompensatedSum<T> acc;
    for (int i = 0; i < ns; ++i) {
      double s = static_cast<double>(i) / ns;
      auto [a, b] = support(s);
      FrameAt fr = ch_.table().frame(s);
      for (int k = 0; k < pt; ++k) {
        double xi = a + (b - a) * gl.x[k];
        StripSample q = make(fr, s, xi);
        double w = gl.w[k] * (b - a) / ns * delta_ * q.L1;
        if (with_kernel) w *= kernel(q.x);
        acc.add(w * f_(q));
      }
    }
    return acc.value();
  }

  T smooth_at(const Vec2& p, int ns, int pt) {
    x0_ = p;
    return smooth(ns, pt, true);
  }

  T near(double s0, double xi0, const Vec2& x0, int order) {
    x0_ = x0;
    order_ = order;
    const double H = 1.0 / cfg_.far_panels;
    CompensatedSum<T> acc;
    // far panels
    const auto& gl = gauss_legendre(order);
    const int pt = order;
    for (int k = 1; k + 1 < cfg_.far_panels; ++k) {
      double a0 = s0 + k * H;
      for (int i = 0; i < order; ++i) {
        double s = a0 + H * gl.x[i];
        auto [a, b] = support(s);
        FrameAt fr = ch_.table().frame(wrap01(s));
        for (int j = 0; j < pt; ++j) {
          double xi = a + (b - a) * gl.x[j];
          StripSample q = make(fr, s, xi);
          double w = gl.w[i] * H * gl.w[j] * (b - a) * delta_ * q.L1 * kernel(q.x);
          acc.add(w * f_(q));
        }
      }
    }
    // near window
    auto [a0, b0] = support(s0);
    W_ = delta_ * (b0 - a0);
    double t0 = (xi0 - a0) / (b0 - a0);
    s0_ = s0;
    const double A = L_ * H;
    for (int sx : {1, -1}) {
      sx_ = sx;
      if (t0 > 0.0 && t0 < 1.0) {
        d_ = 0.0;
        torig_ = t0;
        sy_ = 1;
        cell(acc, 0.0, A, 0.0, W_ * (1.0 - t0), 0);
        sy_ = -1;
        cell(acc, 0.0, A, 0.0, W_ * t0, 0);
      } else if (t0 <= 0.0) {
        d_ = -t0 * W_;
        torig_ = 0.0;
        sy_ = 1;
        cell(acc, 0.0, A, 0.0, W_, 0);
      } else {
        d_ = (t0 - 1.0) * W_;
        torig_ = 1.0;
        sy_ = -1;
        cell(acc, 0.0, A, 0.0, W_, 0);
      }
    }
    return acc.value();
  }

 private:
  StripSample make(const FrameAt& fr, double s, double xi) const {
    StripSample q;
    q.s = wrap01(s);
    q.xi = xi;
    q.z = fr.z;
    q.T = fr.T;
    q.N = fr.N;
    q.kappa = fr.kappa;
    q.L1 = L_ * (1.0 - delta_ * fr.kappa * xi);
    q.x = fr.z + delta_ * xi * fr.N;
    return q;
  }

  // integrand in quadrant coordinates (X,Y) including the measure ds* dxi*
  T value_at(double X, double Y) const {
    double s = s0_ + sx_ * X / L_;
    auto [a, b] = support(s);
    double t = torig_ + sy_ * Y / W_;
    double xi = a + (b - a) * t;
    FrameAt fr = ch_.table().frame(wrap01(s));
    StripSample q = make(fr, s, xi);
    double w = (b - a) / (L_ * W_) * delta_ * q.L1 * kernel(q.x);
    return w * f_(q);
  }

  void gl_cell(CompensatedSum<T>& acc, double x0, double x1, double y0, double y1) const {
    const auto& gl = gauss_legendre(order_);
    const double wx = x1 - x0, wy = y1 - y0;
    for (int i = 0; i < order_; ++i) {
      double X = x0 + wx * gl.x[i];
      double s = s0_ + sx_ * X / L_;
      auto [a, b] = support(s);
      FrameAt fr = ch_.table().frame(wrap01(s));
      for (int j = 0; j < order_; ++j) {
        double Y = y0 + wy * gl.x[j];
        double t = torig_ + sy_ * Y / W_;
        double xi = a + (b - a) * t;
        StripSample q = make(fr, s, xi);
        double w = gl.w[i] * gl.w[j] * wx * wy * (b - a) / (L_ * W_) * delta_ * q.L1 * kernel(q.x);
        acc.add(w * f_(q));
      }
    }
  }

  void duffy_cell(CompensatedSum<T>& acc, double wx, double wy) const {
    const int p = cfg_.duffy_order;
    const auto& gj = gauss_jacobi01(p, 1.0 - beta_);
    const auto& gl = gauss_legendre(p);
    for (int tri = 0; tri < 2; ++tri)
      for (int k = 0; k < p; ++k) {
        double u = gj.x[k];
        for (int l = 0; l < p; ++l) {
          double v = gl.x[l];
          double X = tri == 0 ? wx * u : wx * u * v;
          double Y = tri == 0 ? wy * u * v : wy * u;
          double w = gj.w[k] * gl.w[l] * wx * wy * std::pow(u, beta_);
          acc.add(w * value_at(X, Y));
        }
      }
  }

  void cell(CompensatedSum<T>& acc, double x0, double x1, double y0, double y1, int depth) const {
    const double wx = x1 - x0, wy = y1 - y0;
    if (wx <= 0.0 || wy <= 0.0) return;
    const bool corner = d_ == 0.0 && x0 == 0.0 && y0 == 0.0;
    const double floor_size = cfg_.min_radius_factor * delta_;
    if (corner) {
      if ((wx <= 2.0 * wy && wy <= 2.0 * wx) || std::max(wx, wy) < floor_size || depth > 200) {
        duffy_cell(acc, wx, wy);
        return;
      }
    } else {
      double dist = std::hypot(x0, y0 + d_);
      double size = std::max(wx, wy);
      if (size <= cfg_.admissibility * dist || size < floor_size || depth > 200) {
        gl_cell(acc, x0, x1, y0, y1);
        return;
      }
    }
    if (wx > 2.0 * wy) {
      double xm = 0.5 * (x0 + x1);
      cell(acc, x0, xm, y0, y1, depth + 1);
      cell(acc, xm, x1, y0, y1, depth + 1);
    } else if (wy > 2.0 * wx) {
      double ym = 0.5 * (y0 + y1);
      cell(acc, x0, x1, y0, ym, depth + 1);
      cell(acc, x0, x1, ym, y1, depth + 1);
    } else {
      double xm = 0.5 * (x0 + x1), ym = 0.5 * (y0 + y1);
      cell(acc, x0, xm, y0, ym, depth + 1);
      cell(acc, xm, x1, y0, ym, depth + 1);
      cell(acc, x0, xm, ym, y1, depth + 1);
      cell(acc, xm, x1, ym, y1, depth + 1);
    }
  }

  F& f_;
  const TubularChart& ch_;
  double beta_;
  const StripConfig& cfg_;
  const SupportFn& sup_;
  double L_, delta_;
  Vec2 x0_;
  int order_ = 8;
  double s0_ = 0.0, W_ = 1.0, d_ = 0.0, torig_ = 0.0;
  int sx_ = 1, sy_ = 1;
};

}  // namespace detail

/// \iint F(s*,xi*) |x - x*|^{-beta} delta L1* ds* dxi* over the strip (or over the
/// support given by `support`, a sub-range of [-C^z, C^z] per s*).
/// Without a target the kernel is 1 and beta must be 0.
template <class F>
auto integrate_strip(F&& f, const TubularChart& ch, const std::optional<StripTarget>& target, double beta,
                     const StripConfig& cfg = {}, const SupportFn& support = {})
    -> StripResult<decltype(f(StripSample{}))> {
  using T = decltype(f(StripSample{}));
  if (beta < 0.0 || beta >= 2.0) throw std::invalid_argument("integrate_strip: need 0 <= beta < 2");
  StripResult<T> out;
  const int ns = cfg.smooth_nodes > 0 ? cfg.smooth_nodes : 2 * ch.base().size();
  detail::StripIntegrator<std::remove_reference_t<F>, T> it(f, ch, beta, cfg, support);
  if (!target) {
    if (beta != 0.0) throw std::invalid_argument("integrate_strip: a kernel needs a target point");
    out.value = it.smooth(ns, cfg.order + 4, false);
    if (cfg.self_estimate) {
      T coarse = it.smooth(ns / 2, cfg.order, false);
      out.error_estimate = norm_of(out.value - coarse);
    }
    return out;
  }
  double s0, xi0;
  bool near = true;
  if (target->coords) {
    s0 = target->coords->s;
    xi0 = target->coords->xi;
  } else {
    auto pr = project_to_curve(ch.base(), target->p);
    if (!pr) {
      near = false;
      s0 = xi0 = 0.0;
    } else {
      s0 = pr->s;
      xi0 = pr->offset / ch.delta();
      auto [a, b] = it.support(s0);
      double gap = ch.delta() * std::max({0.0, a - xi0, xi0 - b});
      if (gap > 4.0 * ch.base().length() / ns) near = false;
    }
  }
  auto run = [&](int order) {
    if (!near) {
      detail::StripIntegrator<std::remove_reference_t<F>, T> sm(f, ch, beta, cfg, support);
      return sm.smooth_at(target->p, ns, order + 4);
    }
    return it.near(s0, xi0, target->p, order);
  };
  out.value = run(cfg.order);
  if (cfg.self_estimate) {
    T fine = run(cfg.order + 4);
    out.error_estimate = norm_of(fine - out.value);
    out.value = fine;
    if (out.error_estimate > cfg.tolerance * std::max(1e-300, norm_of(out.value))) out.converged = false;
  }
  return out;
}

}  // namespace frontlab
