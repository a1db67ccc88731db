#pragma once

#include <string>
#include <vector>

#include "frontlab/geometry.hpp"
#include "frontlab/parallel.hpp"
#include "frontlab/quadrature.hpp"

namespace frontlab {

struct FrontState {
  ClosedCurve curve;
  double time = 0.0;
  double alpha = 0.5;
  double area0 = 0.0;  // enclosed area at t = 0

  static FrontState initial(ClosedCurve c, double alpha) {
    KernelParams{alpha}.validate();
    FrontState s;
    s.area0 = c.area();
    s.curve = std::move(c);
    s.alpha = alpha;
    return s;
  }
};

struct FrontVelocity {
  std::vector<double> normal;  // v(s_j) = -I(z)(s_j) . N(s_j)
  std::vector<Vec2> full;      // -I(z)(s_j)
  double error_estimate = 0.0;
};

class QuadratureFailure : public std::runtime_error {
 public:
  QuadratureFailure(const std::string& what, int node) : std::runtime_error(what), node(node) {}
  int node;
};

/// Normal velocity of a sharp front, node by node. Works for any smooth parameterisation:
/// the subtracted z_s(s) term is normal-free, so v does not depend on the gauge.
inline FrontVelocity sharp_front_velocity(const ClosedCurve& c, double alpha, const QuadratureConfig& cfg = {}) {
  KernelParams{alpha}.validate();
  const int M = c.size();
  const double beta = 1.0 + alpha;
  FrontVelocity out;
  out.normal.resize(M);
  out.full.resize(M);
  std::vector<double> errs(M, 0.0);
  QuadratureConfig q = cfg;
  q.nodes_per_period = M;
  const auto& zs = c.zs();
  parallel_for(M, [&](int i) {
    const double s = c.param(i);
    auto idx = [&](double sj) { return static_cast<int>(std::lround(sj * M)) % M; };
    auto ax = [&](double, double sj) { return zs[idx(sj)].x - zs[i].x; };
    auto ay = [&](double, double sj) { return zs[idx(sj)].y - zs[i].y; };
    QuadResult rx = integrate_periodic_desingularized(ax, 1, beta, c, s, q);
    QuadResult ry = integrate_periodic_desingularized(ay, 1, beta, c, s, q);
    Vec2 I{rx.value, ry.value};
    Vec2 N = perp(zs[i] / norm(zs[i]));
    out.full[i] = -I;
    out.normal[i] = -dot(I, N);
    errs[i] = std::max(rx.error_estimate, ry.error_estimate);
  });
  for (int i = 0; i < M; ++i) {
    if (!std::isfinite(out.normal[i])) throw QuadratureFailure("sharp_front_velocity: non-finite value", i);
    out.error_estimate = std::max(out.error_estimate, errs[i]);
  }
  return out;
}

inline FrontVelocity sharp_front_velocity(const FrontState& st, const QuadratureConfig& cfg = {}) {
  return sharp_front_velocity(st.curve, st.alpha, cfg);
}

/// Velocity of a sharp front at a point p off the curve, -\int z_s* / |p - z*|^{1+alpha} ds*
/// (the tangential counterpart of the CDE subtraction is dropped). Trapezoid on an oversampled curve.
inline Vec2 sharp_exterior_velocity(const ClosedCurve& c, double alpha, const Vec2& p, int oversampling = 8) {
  KernelParams{alpha}.validate();
  const int n = oversampling * c.size();
  auto z = c.interpolant().oversample(n, 0);
  auto zs = c.interpolant().oversample(n, 1);
  CompensatedSum<Vec2> acc;
  for (int j = 0; j < n; ++j) {
    Vec2 d{p.x - z[j].real(), p.y - z[j].imag()};
    double r = norm(d);
    if (r == 0.0) throw std::invalid_argument("sharp_exterior_velocity: point lies on the curve");
    acc.add(std::pow(r, -1.0 - alpha) * Vec2{zs[j].real(), zs[j].imag()});
  }
  return (-1.0 / n) * acc.value();
}

class EvolutionHalted : public std::runtime_error {
 public:
  EvolutionHalted(const std::string& what, std::vector<Vec2> dump, double t)
      : std::runtime_error(what), nodes(std::move(dump)), time(t) {}
  std::vector<Vec2> nodes;  // state at the failed step
  double time;
};

class CflViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Largest linear frequency of the discrete front: boundary waves of arclength wavenumber K
/// move with |omega| = pi K^{1+alpha} / (Gamma(1+alpha) sin(pi alpha/2)); K_max = pi M / L.
inline double max_wave_frequency(const ClosedCurve& c, double alpha) {
  double K = pi * c.size() / c.length();
  return pi * std::pow(K, 1.0 + alpha) / (std::tgamma(1.0 + alpha) * std::sin(0.5 * pi * alpha));
}

struct StepOptions {
  double cfl = 0.1;        // dt max|v| < cfl * min node spacing
  double stability = 2.5;  // dt * max_wave_frequency below the RK4 imaginary-axis bound 2 sqrt 2
  bool reparameterize = true;  // off: keep the raw RK4 nodes (order studies of the integrator alone)
  QuadratureConfig quad;
  CurveOptions curve;
};

/// One explicit RK4 step of z_t = v N, then uniform-speed reparameterisation.
inline FrontState step_front(const FrontState& st, double dt, const StepOptions& opt = {}) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_front: dt must be positive");
  const int M = st.curve.size();
  auto rate = [&](const ClosedCurve& c) {
    FrontVelocity v = sharp_front_velocity(c, st.alpha, opt.quad);
    std::vector<Vec2> k(M);
    for (int j = 0; j < M; ++j) k[j] = v.normal[j] * perp(c.zs()[j] / norm(c.zs()[j]));
    return std::make_pair(k, v);
  };
  auto [k1, v1] = rate(st.curve);
  double vmax = 0.0;
  for (double v : v1.normal) vmax = std::max(vmax, std::fabs(v));
  double spacing = 1e300;
  for (int j = 0; j < M; ++j) spacing = std::min(spacing, norm(st.curve.node(j + 1) - st.curve.node(j)));
  if (dt * vmax >= opt.cfl * spacing) throw CflViolation("step_front: CFL guard violated");
  if (dt * max_wave_frequency(st.curve, st.alpha) >= opt.stability)
    throw CflViolation("step_front: dt exceeds the RK4 stability bound for the highest resolved mode");

  auto shifted = [&](const std::vector<Vec2>& k, double h) {
    std::vector<Vec2> p(M);
    for (int j = 0; j < M; ++j) p[j] = st.curve.node(j) + h * k[j];
    return ClosedCurve::unchecked(std::move(p));
  };
  auto k2 = rate(shifted(k1, 0.5 * dt)).first;
  auto k3 = rate(shifted(k2, 0.5 * dt)).first;
  auto k4 = rate(shifted(k3, dt)).first;
  std::vector<Vec2> next(M);
  for (int j = 0; j < M; ++j)
    next[j] = st.curve.node(j) + (dt / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);

  FrontState out = st;
  out.time = st.time + dt;
  if (!opt.reparameterize) {
    out.curve = ClosedCurve::unchecked(std::move(next));
    return out;
  }
  try {
    out.curve = resample_uniform_speed(next, M, opt.curve);
  } catch (const GeometryError& e) {
    throw EvolutionHalted(std::string("step_front: ") + e.what(), next, out.time);
  }
  return out;
}

struct StepDiagnostics {
  int step = 0;
  double t = 0.0;
  double length = 0.0;
  double area = 0.0;
  double max_curvature = 0.0;
  double min_chord_arc = 0.0;
};

struct Trajectory {
  std::vector<FrontState> states;
  std::vector<StepDiagnostics> diagnostics;
};

inline StepDiagnostics diagnose(const FrontState& s, int step) {
  StepDiagnostics d;
  d.step = step;
  d.t = s.time;
  d.length = s.curve.length();
  d.area = s.curve.area();
  auto fr = frenet_frame(s.curve);
  for (double k : fr.curvature) d.max_curvature = std::max(d.max_curvature, std::fabs(k));
  d.min_chord_arc = s.curve.chord_arc_constant();
  return d;
}

/// n_steps RK4 steps; states[0] is the input.
inline Trajectory evolve_front(const FrontState& st, double dt, int n_steps, const StepOptions& opt = {}) {
  if (n_steps < 0) throw std::invalid_argument("evolve_front: negative step count");
  Trajectory tr;
  tr.states.push_back(st);
  tr.diagnostics.push_back(diagnose(st, 0));
  for (int n = 1; n <= n_steps; ++n) {
    tr.states.push_back(step_front(tr.states.back(), dt, opt));
    tr.diagnostics.push_back(diagnose(tr.states.back(), n));
  }
  return tr;
}

}  // namespace frontlab
