#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "frontlab/asf.hpp"
#include "frontlab/cde.hpp"
#include "frontlab/fourier.hpp"
#include "frontlab/parallel.hpp"
#include "frontlab/rate_fit.hpp"

namespace frontlab {

class SpineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SpineResult {
  std::vector<double> f;      // xi-units, one per base node
  std::vector<Vec2> nodes;    // S(s_j) = z_j + delta f_j N_j on the base parameter
  ClosedCurve spine;          // the same curve resampled to uniform speed
  double identity_residual = 0.0;  // max_j |\int (xi - f_j) omega_xi dxi|
};

/// f by the moment identity \int (xi - f) omega_xi = 0, checked by a second quadrature.
inline SpineResult extract_spine(const AlmostSharpFront& a) {
  const ClosedCurve& c = a.curve();
  const int M = c.size();
  const auto& fr = a.chart.frame();
  SpineResult r;
  r.f.resize(M);
  r.nodes.resize(M);
  for (int j = 0; j < M; ++j) {
    double s = c.param(j);
    XiMoments m = xi_moments(a.profile, s);
    r.f[j] = m.first / m.mass;
    if (std::fabs(r.f[j]) > a.chart.cz()) throw SpineError("extract_spine: |f| exceeds C^z, spine leaves the chart");
    r.nodes[j] = c.node(j) + (a.delta() * r.f[j]) * fr.normal[j];
    auto pc = a.profile.pieces(s);
    double res = 0.0;
    for (size_t k = 0; k + 1 < pc.size(); ++k)
      res += gl_adaptive([&](double xi) { return (xi - r.f[j]) * a.profile.d_xi(s, xi); }, pc[k], pc[k + 1], 1e-15, 12);
    r.identity_residual = std::max(r.identity_residual, std::fabs(res));
  }
  if (r.identity_residual > 1e-8) throw SpineError("extract_spine: defining identity fails the independent check");
  r.spine = resample_uniform_speed(r.nodes, M);
  return r;
}

/// The base curve with f = 0, for contrast experiments.
inline SpineResult base_curve_as_candidate(const AlmostSharpFront& a) {
  SpineResult r;
  r.f.assign(a.curve().size(), 0.0);
  r.nodes = a.curve().nodes();
  r.spine = a.curve();
  return r;
}

/// \int_{f-C-1}^{f+C+1} omega dxi per node (constant extension outside the chart).
inline std::vector<double> spine_cancellation(const AlmostSharpFront& a, const SpineResult& sp, double C) {
  double fmax = 0.0;
  for (double v : sp.f) fmax = std::max(fmax, std::fabs(v));
  if (C < fmax - 1e-12) throw std::invalid_argument("spine_cancellation: C must be at least max|f|");
  const ClosedCurve& c = a.curve();
  std::vector<double> out(c.size());
  for (int j = 0; j < c.size(); ++j) {
    double s = c.param(j), f = sp.f[j];
    out[j] = xi_integral(a.profile, s, [&](double xi) { return a.profile.value(s, xi); }, f - C - 1.0, f + C + 1.0);
  }
  return out;
}

// ---- test functions ----

struct TestFunction {
  std::function<double(const Vec2&)> value;
  std::function<Vec2(const Vec2&)> gradient;
  std::function<std::array<double, 3>(const Vec2&)> hessian;  // xx, xy, yy
  double c2_norm = 0.0;  // sup|G| + sup|grad G| + sup|hess G| (operator norm)
  Vec2 centre;
  double radius = 0.0;
};

/// exp(1 - 1/(1 - |x-c|^2/R^2)) inside the disc, 0 outside.
inline TestFunction bump(const Vec2& c, double R) {
  TestFunction t;
  t.centre = c;
  t.radius = R;
  const double R2 = R * R;
  auto parts = [=](const Vec2& x, double& g, double& g1, double& g2) {
    double rho = norm2(x - c) / R2;
    if (rho >= 1.0) {
      g = g1 = g2 = 0.0;
      return false;
    }
    double q = 1.0 / (1.0 - rho);
    g = std::exp(1.0 - q);
    g1 = -g * q * q;
    g2 = g * q * q * q * q - 2.0 * g * q * q * q;
    return true;
  };
  t.value = [=](const Vec2& x) {
    double g, g1, g2;
    parts(x, g, g1, g2);
    return g;
  };
  t.gradient = [=](const Vec2& x) {
    double g, g1, g2;
    if (!parts(x, g, g1, g2)) return Vec2{0.0, 0.0};
    return (2.0 * g1 / R2) * (x - c);
  };
  t.hessian = [=](const Vec2& x) {
    double g, g1, g2;
    if (!parts(x, g, g1, g2)) return std::array<double, 3>{0.0, 0.0, 0.0};
    Vec2 d = x - c;
    double a = 4.0 * g2 / (R2 * R2), b = 2.0 * g1 / R2;
    return std::array<double, 3>{a * d.x * d.x + b, a * d.x * d.y, a * d.y * d.y + b};
  };
  // radial profile: sample on a fine grid
  double v0 = 0.0, v1 = 0.0, v2 = 0.0;
  for (int k = 0; k < 4000; ++k) {
    Vec2 x = c + Vec2{R * (k + 0.5) / 4000.0, 0.0};
    v0 = std::max(v0, std::fabs(t.value(x)));
    v1 = std::max(v1, norm(t.gradient(x)));
    auto h = t.hessian(x);
    v2 = std::max(v2, std::max(std::fabs(h[0]), std::fabs(h[2])));
  }
  t.c2_norm = v0 + v1 + v2;
  return t;
}

/// Three bumps at distinct curve points, support radius 0.3 * diameter.
inline std::vector<TestFunction> standard_battery(const ClosedCurve& c) {
  double diam = 0.0;
  for (const auto& p : c.nodes())
    for (const auto& q : c.nodes()) diam = std::max(diam, norm(p - q));
  std::vector<TestFunction> b;
  for (double s : {0.05, 0.3, 0.6}) b.push_back(bump(c.eval(s), 0.3 * diam));
  return b;
}

// ---- pairing property ----

struct PairingResult {
  Vec2 lhs, rhs;
  double gap = 0.0;
  double c2_delta2 = 0.0;  // ||Gamma||_{C^2} delta^2
};

namespace detail {

// -\int G(S) S_s ds on the trigonometric interpolant of the given nodes
inline Vec2 curve_pairing(const std::vector<Vec2>& nodes, const TestFunction& g, int oversampling = 8) {
  std::vector<cplx> z(nodes.size());
  for (size_t j = 0; j < nodes.size(); ++j) z[j] = {nodes[j].x, nodes[j].y};
  TrigInterpolant t(z);
  const int n = oversampling * static_cast<int>(nodes.size());
  auto p = t.oversample(n, 0), d = t.oversample(n, 1);
  CompensatedSum<Vec2> acc;
  for (int j = 0; j < n; ++j) acc.add(g.value({p[j].real(), p[j].imag()}) * Vec2{d[j].real(), d[j].imag()});
  return (-1.0 / n) * acc.value();
}

}  // namespace detail

/// lhs = \iint G(x(s,xi)) (delta N omega_s - L1 T omega_xi) ds dxi, rhs = -\int G(S) S_s ds.
inline PairingResult spine_pairing_check(const AlmostSharpFront& a, const SpineResult& sp, const TestFunction& g,
                                         int smooth_nodes = 0) {
  const double d = a.delta();
  auto F = [&](const StripSample& q) {
    return g.value(q.x) * ((a.profile.d_s(q.s, q.xi) / q.L1) * q.N - (a.profile.d_xi(q.s, q.xi) / d) * q.T);
  };
  SupportFn sup = [&](double s) { return a.profile.support(s); };
  StripConfig cfg;
  cfg.smooth_nodes = smooth_nodes > 0 ? smooth_nodes : 8 * a.curve().size();
  PairingResult r;
  r.lhs = integrate_strip(F, a.chart, std::nullopt, 0.0, cfg, sup).value;
  r.rhs = detail::curve_pairing(sp.nodes, g);
  r.gap = norm(r.lhs - r.rhs);
  r.c2_delta2 = g.c2_norm * d * d;
  return r;
}

// ---- transported-curve rate experiment ----

enum class Candidate { spine, compatible };

inline const char* candidate_name(Candidate c) { return c == Candidate::spine ? "spine" : "compatible"; }

struct TransportOptions {
  double dt_factor = 0.1;  // dt_micro = dt_factor * delta^2 / max|u|
  bool calibrate = true;   // repeat with dt/2 and report the change
  int xi_panels = 4;       // per transition layer
  int xi_order = 12;
  StripConfig strip;
};

struct TransportSample {
  double delta = 0.0;
  double dt = 0.0;
  double max_speed = 0.0;
  double error = 0.0;          // e_delta, max over the battery
  double calibration = 0.0;    // change in e_delta when dt is halved
  double cde_pairing = 0.0;    // max over the battery |\int G v_CDE dl|
  std::vector<double> v_measured;  // on the candidate, base parameter
  std::vector<double> v_cde;       // on the resampled candidate
};

namespace detail {

inline std::vector<Vec2> normals_of(const std::vector<Vec2>& nodes) {
  auto c = ClosedCurve::unchecked(nodes);
  std::vector<Vec2> n(nodes.size());
  for (size_t j = 0; j < nodes.size(); ++j) n[j] = perp(c.zs()[j] / norm(c.zs()[j]));
  return n;
}

inline std::vector<double> speeds_of(const std::vector<Vec2>& nodes) {
  auto c = ClosedCurve::unchecked(nodes);
  std::vector<double> v(nodes.size());
  for (size_t j = 0; j < nodes.size(); ++j) v[j] = norm(c.zs()[j]);
  return v;
}

}  // namespace detail

/// One delta of the experiment: measured normal velocity of the candidate after one
/// semi-Lagrangian micro-step of theta, against the sharp-front law on the candidate,
/// paired with each test function.
inline TransportSample transported_curve_sample(const AlmostSharpFront& a, Candidate cand,
                                                const std::vector<TestFunction>& battery,
                                                const TransportOptions& opt = {}) {
  const ClosedCurve& c = a.curve();
  const int M = c.size();
  const double d = a.delta();
  const auto& fr = a.chart.frame();
  TransportSample out;
  out.delta = d;

  std::vector<Vec2> cand_nodes(M);
  SpineResult sp;
  if (cand == Candidate::spine) {
    sp = extract_spine(a);
    cand_nodes = sp.nodes;
  } else {
    for (int j = 0; j < M; ++j) cand_nodes[j] = c.node(j) + d * fr.normal[j];
  }
  auto Nc = detail::normals_of(cand_nodes);
  auto speed = detail::speeds_of(cand_nodes);

  if (cand == Candidate::compatible) {
    // strip edge tracked as material points
    std::vector<Vec2> u(M);
    parallel_for(M, [&](int j) { u[j] = asf_velocity(a, cand_nodes[j], opt.strip, InStrip{c.param(j), 1.0}).value; });
    out.v_measured.resize(M);
    for (int j = 0; j < M; ++j) {
      out.v_measured[j] = dot(u[j], Nc[j]);
      out.max_speed = std::max(out.max_speed, norm(u[j]));
    }
  } else {
    // velocity at the xi-nodes of each transition layer
    const auto& gl = gauss_legendre(opt.xi_order);
    const int per = opt.xi_panels * opt.xi_order;
    std::vector<double> xs(static_cast<size_t>(M) * per), ws(xs.size());
    std::vector<Vec2> px(xs.size()), ux(xs.size());
    for (int j = 0; j < M; ++j) {
      auto [lo, hi] = a.profile.support(c.param(j));
      double h = (hi - lo) / opt.xi_panels;
      for (int p = 0; p < opt.xi_panels; ++p)
        for (int k = 0; k < opt.xi_order; ++k) {
          size_t at = static_cast<size_t>(j) * per + p * opt.xi_order + k;
          xs[at] = lo + h * (p + gl.x[k]);
          ws[at] = h * gl.w[k];
          px[at] = c.node(j) + (d * xs[at]) * fr.normal[j];
        }
    }
    parallel_for(static_cast<int>(xs.size()), [&](int at) {
      int j = at / per;
      ux[at] = asf_velocity(a, px[at], opt.strip, InStrip{c.param(j), xs[at]}).value;
    });
    for (const auto& v : ux) out.max_speed = std::max(out.max_speed, norm(v));
    // outside the layer theta stays saturated for steps this small
    auto fdot = [&](double dt) {
      std::vector<double> r(M);
      parallel_for(M, [&](int j) {
        auto [lo, hi] = a.profile.support(c.param(j));
        CompensatedSum<double> fp, fm;
        for (int k = 0; k < per; ++k) {
          size_t at = static_cast<size_t>(j) * per + k;
          fp.add(ws[at] * theta_eval(a, px[at] - dt * ux[at]));
          fm.add(ws[at] * theta_eval(a, px[at] + dt * ux[at]));
        }
        // saturated parts of [-1,1] contribute -(lo + 1)/2 + (1 - hi)/2 to both and cancel
        double hp = fp.value(), hm = fm.value();
        r[j] = -(hp - hm) / (2.0 * dt);
      });
      return r;
    };
    out.dt = opt.dt_factor * d * d / out.max_speed;
    if (out.dt * out.max_speed > 0.1 * d * a.chart.cz())
      throw SpineError("transported_curve_sample: micro-step moves the strip out of its chart, reduce dt_factor");
    auto fd = fdot(out.dt);
    out.v_measured.resize(M);
    for (int j = 0; j < M; ++j) out.v_measured[j] = d * fd[j] * dot(fr.normal[j], Nc[j]);
    if (opt.calibrate) {
      auto fd2 = fdot(0.5 * out.dt);
      std::vector<double> v2(M);
      for (int j = 0; j < M; ++j) v2[j] = d * fd2[j] * dot(fr.normal[j], Nc[j]);
      out.v_cde.clear();
      // pairing difference between the two step sizes
      double worst = 0.0;
      for (const auto& g : battery) {
        CompensatedSum<double> acc;
        for (int j = 0; j < M; ++j) acc.add(g.value(cand_nodes[j]) * (out.v_measured[j] - v2[j]) * speed[j] / M);
        worst = std::max(worst, std::fabs(acc.value()));
      }
      out.calibration = worst;
    }
  }
  if (cand == Candidate::compatible) out.dt = 0.0;

  ClosedCurve cc;
  try {
    cc = cand == Candidate::spine ? sp.spine : resample_uniform_speed(cand_nodes, M);
  } catch (const GeometryError& e) {
    throw SpineError(std::string("transported_curve_sample: candidate curve invalid: ") + e.what());
  }
  out.v_cde = sharp_front_velocity(cc, a.alpha).normal;
  const double Lc = cc.length();
  for (const auto& g : battery) {
    CompensatedSum<double> meas, law;
    for (int j = 0; j < M; ++j) {
      meas.add(g.value(cand_nodes[j]) * out.v_measured[j] * speed[j] / M);
      law.add(g.value(cc.node(j)) * out.v_cde[j] * Lc / M);
    }
    out.error = std::max(out.error, std::fabs(meas.value() - law.value()));
    out.cde_pairing = std::max(out.cde_pairing, std::fabs(law.value()));
  }
  return out;
}

struct RateExperiment {
  Candidate candidate = Candidate::spine;
  std::vector<TransportSample> samples;
  RateFit fit;
};

/// delta-sweep on a fixed shape and profile; the fit drops the largest delta and any error
/// within 3x of the calibrated floor.
inline RateExperiment transported_curve_rate(const ClosedCurve& shape, const ProfileSpec& profile, double alpha,
                                             const std::vector<double>& deltas, Candidate cand,
                                             const TransportOptions& opt = {}) {
  KernelParams{alpha}.validate();
  RateExperiment ex;
  ex.candidate = cand;
  auto battery = standard_battery(shape);
  for (double d : deltas) ex.samples.push_back(transported_curve_sample(build_asf(shape, d, profile, alpha), cand, battery, opt));
  std::vector<double> x, y;
  double floor = 0.0;
  for (const auto& s : ex.samples) {
    x.push_back(s.delta);
    y.push_back(s.error);
    floor = std::max(floor, s.calibration);
  }
  WindowPolicy pol;
  pol.drop_head = 1;
  pol.noise_floor = floor;
  pol.floor_factor = 3.0;
  ex.fit = fit_rate(x, y, pol);
  return ex;
}

}  // namespace frontlab
