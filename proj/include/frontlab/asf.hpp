#pragma once

#include <algorithm>
#include <array>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "frontlab/asymptotics.hpp"
#include "frontlab/cde.hpp"
#include "frontlab/fourier.hpp"
#include "frontlab/geometry.hpp"
#include "frontlab/parallel.hpp"
#include "frontlab/quadrature.hpp"

namespace frontlab {

class ProfileError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using BreakFn = std::function<std::vector<double>(double)>;

namespace detail {

// 35x^4 - 84x^5 + 70x^6 - 20x^7: C^3 step from 0 to 1 on [0,1]
inline double smoothstep7(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return x * x * x * x * (35.0 + x * (-84.0 + x * (70.0 - 20.0 * x)));
}

inline double smoothstep7_d(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  double y = x * (1.0 - x);
  return 140.0 * y * y * y;
}

}  // namespace detail

/// Transition profile on T x [-1,1] in the centred convention (values -1/2 .. 1/2).
/// Callers outside [-1,1] get the constant extension.
struct TransitionProfile {
  std::string family;
  Sampler2 omega, omega_s, omega_xi;
  BreakFn breaks;         // interior xi where smoothness drops, may be empty
  SupportFn transition;   // xi-range carrying omega_xi; empty means [-1,1]

  double value(double s, double xi) const {
    if (xi <= -1.0) return -0.5;
    if (xi >= 1.0) return 0.5;
    return omega(wrap01(s), xi);
  }
  double d_s(double s, double xi) const { return std::fabs(xi) >= 1.0 ? 0.0 : omega_s(wrap01(s), xi); }
  double d_xi(double s, double xi) const { return std::fabs(xi) >= 1.0 ? 0.0 : omega_xi(wrap01(s), xi); }

  std::pair<double, double> support(double s) const {
    if (!transition) return {-1.0, 1.0};
    auto [a, b] = transition(wrap01(s));
    return {std::max(-1.0, a), std::min(1.0, b)};
  }

  /// Sorted partition of [lo, hi] at the breakpoints and at +-1.
  std::vector<double> pieces(double s, double lo = -1.0, double hi = 1.0) const {
    std::vector<double> p{lo, hi};
    for (double e : {-1.0, 1.0})
      if (e > lo && e < hi) p.push_back(e);
    if (breaks)
      for (double b : breaks(wrap01(s)))
        if (b > lo && b < hi) p.push_back(b);
    std::sort(p.begin(), p.end());
    p.erase(std::unique(p.begin(), p.end(), [](double a, double b) { return std::fabs(a - b) < 1e-15; }), p.end());
    return p;
  }
};

/// Odd C^3 smoothstep of half-width w in xi.
inline TransitionProfile odd_smoothstep_profile(double w = 1.0) {
  if (!(w > 0.0 && w <= 1.0)) throw ProfileError("odd_smoothstep: width must lie in (0,1]");
  TransitionProfile p;
  p.family = "odd-smoothstep";
  p.omega = [w](double, double xi) { return detail::smoothstep7((xi + w) / (2.0 * w)) - 0.5; };
  p.omega_s = [](double, double) { return 0.0; };
  p.omega_xi = [w](double, double xi) { return detail::smoothstep7_d((xi + w) / (2.0 * w)) / (2.0 * w); };
  p.breaks = [w](double) { return std::vector<double>{-w, w}; };
  p.transition = [w](double) { return std::make_pair(-w, w); };
  return p;
}

struct ShiftShape {
  std::function<double(double)> c, dc;
  double max_abs = 1.0;
};

inline ShiftShape cosine_shift() {
  return {[](double s) { return std::cos(2.0 * pi * s); }, [](double s) { return -2.0 * pi * std::sin(2.0 * pi * s); },
          1.0};
}

inline ShiftShape constant_shift() {
  return {[](double) { return 1.0; }, [](double) { return 0.0; }, 1.0};
}

/// phi_w(xi - eps c(s)). Needs eps max|c| + w < 1 so the layer saturates inside the chart.
inline TransitionProfile shifted_profile(double eps, double w, ShiftShape sh = cosine_shift()) {
  if (!(w > 0.0 && w <= 1.0)) throw ProfileError("shifted: width must lie in (0,1]");
  if (!(std::fabs(eps) * sh.max_abs + w < 1.0))
    throw ProfileError("shifted: saturation margin violated (eps max|c| + w must stay below 1)");
  TransitionProfile p;
  p.family = "shifted";
  auto c = sh.c, dc = sh.dc;
  p.omega = [=](double s, double xi) { return detail::smoothstep7((xi - eps * c(s) + w) / (2.0 * w)) - 0.5; };
  p.omega_xi = [=](double s, double xi) {
    return detail::smoothstep7_d((xi - eps * c(s) + w) / (2.0 * w)) / (2.0 * w);
  };
  p.omega_s = [=](double s, double xi) {
    return -eps * dc(s) * detail::smoothstep7_d((xi - eps * c(s) + w) / (2.0 * w)) / (2.0 * w);
  };
  p.breaks = [=](double s) {
    double m = eps * c(s);
    return std::vector<double>{m - w, m + w};
  };
  p.transition = [=](double s) {
    double m = eps * c(s);
    return std::make_pair(m - w, m + w);
  };
  return p;
}

/// User-supplied profile. Missing derivatives fall back to fourth-order central differences.
inline TransitionProfile custom_profile(Sampler2 omega, Sampler2 omega_s = {}, Sampler2 omega_xi = {}, BreakFn breaks = {},
                                        SupportFn transition = {}) {
  if (!omega) throw ProfileError("custom profile: omega sampler required");
  TransitionProfile p;
  p.family = "custom";
  const double h = 1e-3;
  if (!omega_s)
    omega_s = [omega, h](double s, double xi) {
      return (8.0 * (omega(wrap01(s + h), xi) - omega(wrap01(s - h), xi)) - omega(wrap01(s + 2 * h), xi) +
              omega(wrap01(s - 2 * h), xi)) /
             (12.0 * h);
    };
  if (!omega_xi)
    omega_xi = [omega, h](double s, double xi) {
      auto o = [&](double x) { return x <= -1.0 ? -0.5 : (x >= 1.0 ? 0.5 : omega(s, x)); };
      return (8.0 * (o(xi + h) - o(xi - h)) - o(xi + 2 * h) + o(xi - 2 * h)) / (12.0 * h);
    };
  p.omega = std::move(omega);
  p.omega_s = std::move(omega_s);
  p.omega_xi = std::move(omega_xi);
  p.breaks = std::move(breaks);
  p.transition = std::move(transition);
  return p;
}

/// \int_lo^hi fn(xi) dxi, Gauss-Legendre on the profile's smooth pieces.
template <class Fn>
double xi_integral(const TransitionProfile& pr, double s, Fn&& fn, double lo = -1.0, double hi = 1.0, int order = 16) {
  auto p = pr.pieces(s, lo, hi);
  CompensatedSum<double> acc;
  for (size_t k = 0; k + 1 < p.size(); ++k) {
    int panels = std::max(1, static_cast<int>(std::ceil((p[k + 1] - p[k]) / 0.25)));
    acc.add(gl_composite(fn, p[k], p[k + 1], panels, order));
  }
  return acc.value();
}

struct XiMoments {
  double mass = 0.0;   // \int omega_xi dxi
  double first = 0.0;  // \int xi omega_xi dxi
};

inline XiMoments xi_moments(const TransitionProfile& pr, double s) {
  XiMoments m;
  m.mass = xi_integral(pr, s, [&](double xi) { return pr.d_xi(s, xi); });
  m.first = xi_integral(pr, s, [&](double xi) { return xi * pr.d_xi(s, xi); });
  return m;
}

struct AlmostSharpFront {
  TubularChart chart;
  TransitionProfile profile;
  double alpha = 0.5;
  double growth = 0.0;  // max |omega_xi| on the validation grid

  const ClosedCurve& curve() const { return chart.base(); }
  double delta() const { return chart.delta(); }
};

struct ProfileSpec {
  enum class Family { odd_smoothstep, shifted, custom };
  Family family = Family::odd_smoothstep;
  double width = 1.0;
  double epsilon = 0.0;
  ShiftShape shift = cosine_shift();
  std::optional<TransitionProfile> custom;
};

/// Checks boundary saturation, flat edges and unit mass on a grid of s values.
inline double validate_profile(const TransitionProfile& p, int ns = 64) {
  double growth = 0.0;
  for (int i = 0; i < ns; ++i) {
    double s = static_cast<double>(i) / ns;
    if (std::fabs(p.omega(s, -1.0) + 0.5) > 1e-10 || std::fabs(p.omega(s, 1.0) - 0.5) > 1e-10)
      throw ProfileError("profile: omega(s, +-1) must equal +-1/2");
    if (std::fabs(p.omega_xi(s, -1.0)) > 1e-8 || std::fabs(p.omega_xi(s, 1.0)) > 1e-8)
      throw ProfileError("profile: omega_xi must vanish at xi = +-1");
    double mass = xi_integral(p, s, [&](double xi) { return p.d_xi(s, xi); });
    if (std::fabs(mass - 1.0) > 1e-8) throw ProfileError("profile: omega_xi mass differs from 1");
    for (int k = 0; k <= 64; ++k) growth = std::max(growth, std::fabs(p.d_xi(s, -1.0 + k / 32.0)));
  }
  return growth;
}

/// Chart with C^z = 1 around `curve` plus a validated profile.
inline AlmostSharpFront build_asf(const ClosedCurve& curve, double delta, const ProfileSpec& spec, double alpha = 0.5) {
  KernelParams{alpha}.validate();
  TransitionProfile p;
  switch (spec.family) {
    case ProfileSpec::Family::odd_smoothstep:
      p = odd_smoothstep_profile(spec.width);
      break;
    case ProfileSpec::Family::shifted:
      p = shifted_profile(spec.epsilon, spec.width, spec.shift);
      break;
    case ProfileSpec::Family::custom:
      if (!spec.custom) throw ProfileError("build_asf: custom family needs a profile");
      p = *spec.custom;
      break;
  }
  double growth = validate_profile(p);
  return AlmostSharpFront{TubularChart(curve, delta, 1.0), std::move(p), alpha, growth};
}

enum class ThetaConvention { centered, unit };

inline double theta_eval(const AlmostSharpFront& a, const Vec2& p, ThetaConvention conv = ThetaConvention::centered) {
  double v = std::visit(
      [&](auto&& c) -> double {
        using C = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<C, Inside>) return 0.5;
        else if constexpr (std::is_same_v<C, Outside>) return -0.5;
        else return a.profile.value(c.s, c.xi);
      },
      classify_point(a.chart, p));
  return conv == ThetaConvention::unit ? v + 0.5 : v;
}

/// u(p) = \iint (delta N* omega_s* - L1* T* omega_xi*) / |p - x*|^{1+alpha} dxi* ds*.
inline StripResult<Vec2> asf_velocity(const AlmostSharpFront& a, const Vec2& p, const StripConfig& cfg = {},
                                      std::optional<InStrip> coords = std::nullopt) {
  const double d = a.delta();
  auto F = [&](const StripSample& q) {
    return (a.profile.d_s(q.s, q.xi) / q.L1) * q.N - (a.profile.d_xi(q.s, q.xi) / d) * q.T;
  };
  SupportFn sup = [&](double s) { return a.profile.support(s); };
  auto r = integrate_strip(F, a.chart, StripTarget{p, coords}, 1.0 + a.alpha, cfg, sup);
  if (!std::isfinite(r.value.x) || !std::isfinite(r.value.y))
    throw QuadratureFailure("asf_velocity: non-finite value", -1);
  return r;
}

struct HFunction {
  std::vector<double> h;       // at the base nodes
  std::vector<double> hprime;  // d h / ds, spectral
};

inline HFunction h_function(const AlmostSharpFront& a) {
  const int M = a.curve().size();
  HFunction out;
  out.h.resize(M);
  for (int j = 0; j < M; ++j) {
    double s = a.curve().param(j);
    out.h[j] = xi_integral(a.profile, s, [&](double xi) { return a.profile.value(s, xi); });
  }
  out.hprime = spectral_derivative(out.h);
  return out;
}

// ---- even-kernel bilinear identity ----

namespace detail {

// \int_a^b |x - t|^{-alpha} g(t) dt with x outside (a,b)
template <class G>
double weakly_singular_piece(G&& g, double x, double a, double b, double alpha, int n) {
  const double len = b - a;
  if (len <= 0.0) return 0.0;
  if (x <= a + 1e-15 * len || x >= b - 1e-15 * len) {
    const bool left = std::fabs(x - a) <= std::fabs(x - b);
    if (std::fabs(left ? x - a : b - x) < 1e-15 * std::max(1.0, len)) {
      const auto& gj = gauss_jacobi01(n, -alpha);
      CompensatedSum<double> acc;
      for (int k = 0; k < n; ++k) {
        double t = left ? a + len * gj.x[k] : b - len * gj.x[k];
        acc.add(gj.w[k] * g(t));
      }
      return std::pow(len, 1.0 - alpha) * acc.value();
    }
  }
  // near-singular: panels growing geometrically away from the end closest to x
  const bool left = std::fabs(x - a) <= std::fabs(x - b);
  const double dist = std::min(std::fabs(x - a), std::fabs(x - b));
  auto f = [&](double t) { return std::pow(std::fabs(x - t), -alpha) * g(t); };
  CompensatedSum<double> acc;
  double lo = 0.0, step = std::max(dist, 1e-3 * len);
  while (lo < len) {
    double hi = std::min(len, lo + step);
    acc.add(left ? gl_integrate(f, a + lo, a + hi, n) : gl_integrate(f, b - hi, b - lo, n));
    lo = hi;
    step *= 2.0;
  }
  return acc.value();
}

}  // namespace detail

/// W(x) = \int_{-1}^{1} |x - t|^{-alpha} g(t) dt, split at x and at the given pieces.
template <class G>
double weakly_singular_xi(G&& g, double x, double alpha, const std::vector<double>& pieces, int n = 20) {
  std::vector<double> p = pieces;
  if (x > p.front() && x < p.back()) p.push_back(x);
  std::sort(p.begin(), p.end());
  CompensatedSum<double> acc;
  for (size_t k = 0; k + 1 < p.size(); ++k) acc.add(detail::weakly_singular_piece(g, x, p[k], p[k + 1], alpha, n));
  return acc.value();
}

struct BilinearCheck {
  double forward = 0.0;   // \iint F(xi-xi*) f(xi) g(xi*)
  double backward = 0.0;  // \iint F(xi-xi*) f(xi*) g(xi), other nesting order
  double gap = 0.0;
};

/// Both halves of \iint |xi - xi*|^{-alpha} [f(xi) g(xi*) - f(xi*) g(xi)] computed separately.
/// The first nests xi* inside xi; the second nests xi inside xi*.
template <class Ff, class Fg>
BilinearCheck xi_cancellation(double alpha, Ff&& f, Fg&& g, const std::vector<double>& pieces, int n = 20) {
  auto outer = [&](auto&& w, auto&& inner_fn) {
    CompensatedSum<double> acc;
    for (size_t k = 0; k + 1 < pieces.size(); ++k) {
      int panels = std::max(1, static_cast<int>(std::ceil((pieces[k + 1] - pieces[k]) / 0.125)));
      acc.add(gl_composite([&](double x) { return w(x) * weakly_singular_xi(inner_fn, x, alpha, pieces, n); },
                           pieces[k], pieces[k + 1], panels, n));
    }
    return acc.value();
  };
  BilinearCheck c;
  c.forward = outer(f, g);
  c.backward = outer(g, f);
  c.gap = std::fabs(c.forward - c.backward);
  return c;
}

// ---- limit operator for h ----

/// Integrals shared by the h-operator and the residual, per base node.
struct CurveMoments {
  std::vector<double> A3;  // (1+a) L \int (T*.N)((z-z*).N) / |z-z*|^{3+a}
  std::vector<double> B3;  // (1+a) L \int (T*.N) h* ((z-z*).N*) / |z-z*|^{3+a}
  std::vector<double> K;   // \int L kappa* (T*.N) h* / |z-z*|^{1+a}
  std::vector<double> T3;  // \int (T*.T)(h'* - h') / |z-z*|^{1+a}
  std::vector<double> P;   // \int [T*.T - (|z-z*|/(L|msin|))^{1+a}] / |z-z*|^{1+a}
  std::vector<double> Q;   // \int [(T*.T) h'* - h' (|z-z*|/(L|msin|))^{1+a}] / |z-z*|^{1+a}
  double error_estimate = 0.0;
};

namespace detail {

// numerator of the 3+alpha integrand must vanish to third order at s* = s
inline void check_cubic_cancellation(const ClosedCurve& c, int i) {
  FrameAt f0 = frame_at(c, c.param(i));
  const double L = c.length();
  auto num = [&](double u) {
    FrameAt f = frame_at(c, wrap01(c.param(i) + u));
    return std::fabs(dot(f.T, f0.N) * dot(f0.z - f.z, f0.N)) / (L * L);
  };
  double u = 1.0 / c.size();
  double n1 = num(u), n2 = num(0.5 * u);
  if (n1 < 1e-13) return;
  double order = std::log2(n1 / std::max(n2, 1e-300));
  if (order < 2.5)
    throw QuadratureFailure("h_limit_rhs: 3+alpha numerator does not cancel to third order (curve under-resolved)", i);
}

}  // namespace detail

inline CurveMoments curve_moments(const ClosedCurve& c, const std::vector<double>& h, const std::vector<double>& hp,
                                  double alpha, const QuadratureConfig& cfg = {}, bool check = true) {
  KernelParams{alpha}.validate();
  const int M = c.size();
  if (static_cast<int>(h.size()) != M || static_cast<int>(hp.size()) != M)
    throw std::invalid_argument("curve_moments: h must be sampled at the curve nodes");
  const double L = c.length();
  const double b1 = 1.0 + alpha, b3 = 3.0 + alpha, cl = 1.0 + alpha;
  auto fr = frenet_frame(c);
  QuadratureConfig q = cfg;
  q.nodes_per_period = M;
  CurveMoments m;
  for (auto* v : {&m.A3, &m.B3, &m.K, &m.T3, &m.P, &m.Q}) v->assign(M, 0.0);
  std::vector<double> err(M, 0.0);
  parallel_for(M, [&](int i) {
    if (check) detail::check_cubic_cancellation(c, i);
    const double s = c.param(i);
    auto idx = [&](double sj) { return static_cast<int>(std::lround(sj * M)) % M; };
    const Vec2 zi = c.node(i), Ti = fr.tangent[i], Ni = fr.normal[i];
    auto ratio = [&](int j) {
      double ms = std::fabs(msin(s - c.param(j)));
      return std::pow(norm(zi - c.node(j)) / (L * ms), b1);
    };
    auto run = [&](auto&& a, double mo, double beta) {
      auto r = integrate_periodic_desingularized([&](double, double sj) { return a(idx(sj)); }, mo, beta, c, s, q);
      err[i] = std::max(err[i], r.error_estimate);
      return r.value;
    };
    m.A3[i] = cl * L * run([&](int j) { return dot(fr.tangent[j], Ni) * dot(zi - c.node(j), Ni); }, 3, b3);
    m.B3[i] = cl * L * run([&](int j) { return dot(fr.tangent[j], Ni) * h[j] * dot(zi - c.node(j), fr.normal[j]); }, 3, b3);
    m.K[i] = run([&](int j) { return L * fr.curvature[j] * dot(fr.tangent[j], Ni) * h[j]; }, 1, b1);
    m.T3[i] = run([&](int j) { return dot(fr.tangent[j], Ti) * (hp[j] - hp[i]); }, 1, b1);
    m.P[i] = run([&](int j) { return dot(fr.tangent[j], Ti) - ratio(j); }, 2, b1);
    m.Q[i] = run([&](int j) { return dot(fr.tangent[j], Ti) * hp[j] - hp[i] * ratio(j); }, 1, b1);
  });
  for (double e : err) m.error_estimate = std::max(m.error_estimate, e);
  return m;
}

/// d h / d tau of the limit equation, zero tangential gauge:
/// (1+a)L \int (T*.N)(z-z*).(hN - h*N*)/|z-z*|^{3+a} + \int L kappa* (T*.N) h*/|z-z*|^{1+a}
/// - \int (T*.T)(h'* - h')/|z-z*|^{1+a}.
/// This is the linearisation of the sharp-front normal velocity under z -> z + eps h N.
inline std::vector<double> h_limit_rhs(const ClosedCurve& c, const HFunction& hf, double alpha,
                                       const QuadratureConfig& cfg = {}) {
  auto m = curve_moments(c, hf.h, hf.hprime, alpha, cfg);
  std::vector<double> out(c.size());
  for (int i = 0; i < c.size(); ++i) out[i] = (hf.h[i] * m.A3[i] - m.B3[i]) + m.K[i] - m.T3[i];
  return out;
}

// ---- residual of the approximate omega equation ----

struct ResidualField {
  static constexpr int n_terms = 7;
  static constexpr std::array<const char*, n_terms> names{"omega_tau", "transport", "curvature_3", "curvature_1",
                                                          "local_c1",  "local_c2",  "regularized"};
  std::vector<double> s, xi;  // grid; values are row-major [i * xi.size() + k]
  std::vector<double> total;
  std::array<std::vector<double>, n_terms> terms;
  double c1 = 0.0, c2 = 0.0;
  double error_estimate = 0.0;

  double at(int i, int k) const { return total[static_cast<size_t>(i) * xi.size() + k]; }
  double term(int t, int i, int k) const { return terms[t][static_cast<size_t>(i) * xi.size() + k]; }
};

inline std::vector<double> uniform_xi_grid(int n) {
  std::vector<double> x(n);
  for (int k = 0; k < n; ++k) x[k] = -1.0 + 2.0 * k / (n - 1);
  return x;
}

/// Every term of the approximate omega equation on (base nodes) x xi. The xi* integrals of the
/// curvature and far-field terms are done with the exact moment identities; the local |xi-xi*|^-a
/// term by weakly singular quadrature. z_tau . T enters the transport term (zero by default);
/// z_tau . N does not appear in the equation and is only checked for size.
inline ResidualField asf_residual(const AlmostSharpFront& a, const Sampler2& omega_tau,
                                  const std::vector<double>& z_tau_normal, const std::vector<double>& xi = uniform_xi_grid(41),
                                  const std::vector<double>& z_tau_tangent = {}, const QuadratureConfig& cfg = {}) {
  const ClosedCurve& c = a.curve();
  const int M = c.size();
  if (!z_tau_normal.empty() && static_cast<int>(z_tau_normal.size()) != M)
    throw std::invalid_argument("asf_residual: z_tau_normal must have one value per node");
  if (!z_tau_tangent.empty() && static_cast<int>(z_tau_tangent.size()) != M)
    throw std::invalid_argument("asf_residual: z_tau_tangent must have one value per node");
  const double alpha = a.alpha, L = c.length(), d = a.delta();
  HFunction hf = h_function(a);
  CurveMoments m = curve_moments(c, hf.h, hf.hprime, alpha, cfg);
  ResidualField r;
  r.c1 = c_alpha(alpha);
  r.c2 = -(std::pow(2.0, 1.0 + alpha) / alpha + b_alpha(alpha, cfg));
  r.error_estimate = m.error_estimate;
  r.xi = xi;
  r.s.resize(M);
  const int nx = static_cast<int>(xi.size());
  r.total.assign(static_cast<size_t>(M) * nx, 0.0);
  for (auto& t : r.terms) t.assign(static_cast<size_t>(M) * nx, 0.0);
  const double loc = r.c1 * std::pow(d, -alpha) / L, cst = r.c2 / std::pow(L, 1.0 + alpha);
  const auto& pr = a.profile;
  parallel_for(M, [&](int i) {
    const double s = c.param(i);
    r.s[i] = s;
    auto pieces = pr.pieces(s);
    auto gx = [&](double x) { return pr.d_xi(s, x); };
    auto gs = [&](double x) { return pr.d_s(s, x); };
    const double tt = z_tau_tangent.empty() ? 0.0 : z_tau_tangent[i];
    for (int k = 0; k < nx; ++k) {
      const double x = xi[k];
      const double os = pr.d_s(s, x), ox = pr.d_xi(s, x);
      double w_x = 0.0, w_s = 0.0;
      if (os != 0.0 || ox != 0.0) {
        w_x = weakly_singular_xi(gx, x, alpha, pieces);
        w_s = weakly_singular_xi(gs, x, alpha, pieces);
      }
      std::array<double, ResidualField::n_terms> t{
          omega_tau ? omega_tau(s, x) : 0.0,
          -(tt / L) * os,
          (x * m.A3[i] + m.B3[i]) * ox,
          -m.K[i] * ox,
          loc * (-w_x * os + w_s * ox),
          cst * (-os + hf.hprime[i] * ox),
          -os * m.P[i] + ox * m.Q[i]};
      const size_t at = static_cast<size_t>(i) * nx + k;
      double sum = 0.0;
      for (int q = 0; q < ResidualField::n_terms; ++q) {
        r.terms[q][at] = t[q];
        sum += t[q];
      }
      r.total[at] = sum;
    }
  });
  return r;
}

}  // namespace frontlab
