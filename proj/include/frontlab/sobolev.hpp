#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "frontlab/core.hpp"
#include "frontlab/geometry.hpp"
#include "frontlab/parallel.hpp"
#include "frontlab/rate_fit.hpp"

namespace frontlab {

// ---- counter-based uniforms ----

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Uniforms in (0,1) as a hash of (seed, stream, counter): any sample can be regenerated alone.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t start = 0)
      : key_(detail::splitmix64(seed ^ detail::splitmix64(stream + 0x632be59bd9b4e019ULL))), ctr_(start) {}
  double uniform() {
    std::uint64_t x = detail::splitmix64(key_ + detail::splitmix64(ctr_++));
    return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
  }
  std::uint64_t counter() const { return ctr_; }

 private:
  std::uint64_t key_;
  std::uint64_t ctr_;
};

// ---- regions ----

struct Disk {
  double r;
  Vec2 c{0.0, 0.0};
};
struct Rectangle {
  double w, h;  // centred at the origin
};
struct EllipseRegion {
  double a, b;  // semi-axes, centred at the origin
};
struct CurveInterior {
  ClosedCurve curve;
};

/// A point in a boundary layer and the reciprocal of its sampling density.
struct LayerPoint {
  Vec2 x;
  double weight;
};

class Region {
 public:
  using Shape = std::variant<Disk, Rectangle, EllipseRegion, CurveInterior>;

  static Region disk(double r, Vec2 c = {0.0, 0.0}) { return Region(Disk{r, c}); }
  static Region rectangle(double w, double h) { return Region(Rectangle{w, h}); }
  static Region ellipse(double a, double b) { return Region(EllipseRegion{a, b}); }
  static Region curve_interior(const ClosedCurve& c) { return Region(CurveInterior{c}); }

  const Shape& shape() const { return shape_; }
  double area() const { return area_; }
  Vec2 box_lo() const { return lo_; }
  Vec2 box_hi() const { return hi_; }
  double diameter_bound() const { return norm(hi_ - lo_); }  // bounding-box diagonal
  std::string describe() const;

  bool contains(const Vec2& p) const {
    return std::visit(
        [&](const auto& s) -> bool {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, Disk>) {
            return norm2(p - s.c) < s.r * s.r;
          } else if constexpr (std::is_same_v<S, Rectangle>) {
            return std::fabs(p.x) < 0.5 * s.w && std::fabs(p.y) < 0.5 * s.h;
          } else if constexpr (std::is_same_v<S, EllipseRegion>) {
            return (p.x / s.a) * (p.x / s.a) + (p.y / s.b) * (p.y / s.b) < 1.0;
          } else {
            if (p.x <= lo_.x || p.x >= hi_.x || p.y <= lo_.y || p.y >= hi_.y) return false;
            return winding_number(dense_, p) != 0;
          }
        },
        shape_);
  }

  /// Uniform point of A.
  Vec2 sample_uniform(CounterRng& g) const {
    return std::visit(
        [&](const auto& s) -> Vec2 {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, Disk>) {
            double rho = s.r * std::sqrt(g.uniform()), t = 2.0 * pi * g.uniform();
            return s.c + Vec2{rho * std::cos(t), rho * std::sin(t)};
          } else if constexpr (std::is_same_v<S, Rectangle>) {
            return {s.w * (g.uniform() - 0.5), s.h * (g.uniform() - 0.5)};
          } else if constexpr (std::is_same_v<S, EllipseRegion>) {
            double rho = std::sqrt(g.uniform()), t = 2.0 * pi * g.uniform();
            return {s.a * rho * std::cos(t), s.b * rho * std::sin(t)};
          } else {
            for (;;) {
              Vec2 p{lo_.x + (hi_.x - lo_.x) * g.uniform(), lo_.y + (hi_.y - lo_.y) * g.uniform()};
              if (contains(p)) return p;
            }
          }
        },
        shape_);
  }

  /// Point of a set containing {x in A : dist(x, dA) < r} (inside) or {y notin A : dist(y, A) < r}
  /// (outside), with weight 1/density so that E[weight * g(x)] = integral of g over that set.
  LayerPoint sample_layer(double r, bool inside, CounterRng& g) const;

 private:
  explicit Region(Shape s);
  LayerPoint boundary_offset(double r, bool inside, CounterRng& g) const;
  void boundary_jet(double t, Vec2& b, Vec2& bt, Vec2& btt) const;

  Shape shape_;
  double area_ = 0.0;
  Vec2 lo_, hi_;
  double reach_ = 0.0;  // normal offsets below this stay injective
  std::vector<Vec2> dense_;
  std::shared_ptr<CurveTable> table_;
};

inline Region::Region(Shape s) : shape_(std::move(s)) {
  std::visit(
      [&](const auto& v) {
        using S = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<S, Disk>) {
          if (!(v.r > 0.0)) throw std::invalid_argument("Region: disk radius must be positive");
          area_ = pi * v.r * v.r;
          lo_ = v.c - Vec2{v.r, v.r};
          hi_ = v.c + Vec2{v.r, v.r};
          reach_ = v.r;
        } else if constexpr (std::is_same_v<S, Rectangle>) {
          if (!(v.w > 0.0 && v.h > 0.0)) throw std::invalid_argument("Region: rectangle sides must be positive");
          area_ = v.w * v.h;
          lo_ = {-0.5 * v.w, -0.5 * v.h};
          hi_ = {0.5 * v.w, 0.5 * v.h};
        } else if constexpr (std::is_same_v<S, EllipseRegion>) {
          if (!(v.a > 0.0 && v.b > 0.0)) throw std::invalid_argument("Region: ellipse axes must be positive");
          area_ = pi * v.a * v.b;
          lo_ = {-v.a, -v.b};
          hi_ = {v.a, v.b};
          double lo = std::min(v.a, v.b), hi = std::max(v.a, v.b);
          reach_ = 0.5 * lo * lo / hi;
        } else {
          area_ = v.curve.area();
          if (!(area_ > 0.0)) throw std::invalid_argument("Region: curve must be counter-clockwise with positive area");
          table_ = std::make_shared<CurveTable>(v.curve);
          const int n = 16 * v.curve.size();
          dense_.resize(n);
          Vec2 z, zs, zss;
          lo_ = {1e300, 1e300};
          hi_ = {-1e300, -1e300};
          for (int i = 0; i < n; ++i) {
            table_->eval(static_cast<double>(i) / n, z, zs, zss);
            dense_[i] = z;
            lo_ = {std::min(lo_.x, z.x), std::min(lo_.y, z.y)};
            hi_ = {std::max(hi_.x, z.x), std::max(hi_.y, z.y)};
          }
          auto fr = frenet_frame(v.curve);
          double kmax = 0.0;
          for (double k : fr.curvature) kmax = std::max(kmax, std::fabs(k));
          reach_ = 0.5 * v.curve.chord_arc_constant() / std::max(kmax, 1e-300);
        }
      },
      shape_);
}

inline std::string Region::describe() const {
  return std::visit(
      [](const auto& s) -> std::string {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Disk>) return "disk(" + std::to_string(s.r) + ")";
        else if constexpr (std::is_same_v<S, Rectangle>) return "rectangle(" + std::to_string(s.w) + "," + std::to_string(s.h) + ")";
        else if constexpr (std::is_same_v<S, EllipseRegion>) return "ellipse(" + std::to_string(s.a) + "," + std::to_string(s.b) + ")";
        else return "curve(" + std::to_string(s.curve.size()) + " nodes)";
      },
      shape_);
}

inline void Region::boundary_jet(double t, Vec2& b, Vec2& bt, Vec2& btt) const {
  if (const auto* e = std::get_if<EllipseRegion>(&shape_)) {
    double th = 2.0 * pi * t, c = std::cos(th), s = std::sin(th), w = 2.0 * pi;
    b = {e->a * c, e->b * s};
    bt = {-w * e->a * s, w * e->b * c};
    btt = {-w * w * e->a * c, -w * w * e->b * s};
    return;
  }
  table_->eval(t, b, bt, btt);
}

// x = b(t) +- u n(t), n the inward normal; dx = |b'| (1 -+ kappa u) dt du
inline LayerPoint Region::boundary_offset(double r, bool inside, CounterRng& g) const {
  double t = g.uniform(), u = r * g.uniform();
  Vec2 b, bt, btt;
  boundary_jet(t, b, bt, btt);
  double sp = norm(bt);
  Vec2 n = perp(bt / sp);
  double kappa = cross(bt, btt) / (sp * sp * sp);
  double jac = inside ? 1.0 - kappa * u : 1.0 + kappa * u;
  return {inside ? b + u * n : b - u * n, sp * jac * r};
}

inline LayerPoint Region::sample_layer(double r, bool inside, CounterRng& g) const {
  if (const auto* d = std::get_if<Disk>(&shape_)) {
    double r0 = inside ? std::max(d->r - r, 0.0) : d->r, r1 = inside ? d->r : d->r + r;
    double rho = std::sqrt(r0 * r0 + g.uniform() * (r1 * r1 - r0 * r0)), t = 2.0 * pi * g.uniform();
    return {d->c + Vec2{rho * std::cos(t), rho * std::sin(t)}, pi * (r1 * r1 - r0 * r0)};
  }
  if (const auto* q = std::get_if<Rectangle>(&shape_)) {
    // four disjoint strips: bottom, top (full width), left, right
    double hw = 0.5 * q->w, hh = 0.5 * q->h;
    struct Box { double x0, x1, y0, y1; };
    Box bx[4];
    if (inside) {
      double rx = std::min(r, hw), ry = std::min(r, hh);
      bx[0] = {-hw, hw, -hh, -hh + ry};
      bx[1] = {-hw, hw, hh - ry, hh};
      bx[2] = {-hw, -hw + rx, -hh + ry, hh - ry};
      bx[3] = {hw - rx, hw, -hh + ry, hh - ry};
    } else {
      bx[0] = {-hw - r, hw + r, -hh - r, -hh};
      bx[1] = {-hw - r, hw + r, hh, hh + r};
      bx[2] = {-hw - r, -hw, -hh, hh};
      bx[3] = {hw, hw + r, -hh, hh};
    }
    double a[4], tot = 0.0;
    for (int k = 0; k < 4; ++k) tot += a[k] = std::max(bx[k].x1 - bx[k].x0, 0.0) * std::max(bx[k].y1 - bx[k].y0, 0.0);
    double pick = g.uniform() * tot, ux = g.uniform(), uy = g.uniform();
    int k = 0;
    while (k < 3 && pick > a[k]) pick -= a[k++];
    return {{bx[k].x0 + ux * (bx[k].x1 - bx[k].x0), bx[k].y0 + uy * (bx[k].y1 - bx[k].y0)}, tot};
  }
  if (r < reach_ || (!inside && std::holds_alternative<EllipseRegion>(shape_))) return boundary_offset(r, inside, g);
  if (inside) return {sample_uniform(g), area_};
  // box grown by r; points of A carry zero integrand
  Vec2 lo = lo_ - Vec2{r, r}, hi = hi_ + Vec2{r, r};
  return {{lo.x + (hi.x - lo.x) * g.uniform(), lo.y + (hi.y - lo.y) * g.uniform()}, (hi.x - lo.x) * (hi.y - lo.y)};
}

// ---- estimators ----

struct SeminormEstimate {
  double value = 0.0;
  double std_error = 0.0;
  long long samples = 0;
  std::uint64_t seed = 0;
  bool partial = false;  // target std_error not reached within the budget
};

struct SamplerConfig {
  std::uint64_t seed = 20240917;
  long long budget = 1000000;   // pairs
  double target_rel = 0.0;      // stop once std_error <= target_rel * value; 0 spends the budget
  int strata = 16;              // geometric shells in |x - y| below the diameter
  int rounds = 8;
  bool exterior = false;        // second, independent sampler: layer outside A, partner inside
  std::optional<double> box_half_width;  // optional sampling box, must leave room for A^c
};

class SamplingError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

struct Shell {
  double lo, hi;
};

inline std::vector<Shell> shells(double D, int k) {
  std::vector<Shell> out;
  double lo = D * std::ldexp(1.0, -(k - 1));
  out.push_back({0.0, lo});
  for (int i = 0; i + 1 < k; ++i) out.push_back({lo * std::ldexp(1.0, i), lo * std::ldexp(1.0, i + 1)});
  return out;
}

// r on [lo,hi] with density proportional to r^{q-1}; returns r and 1/p(r)
inline std::pair<double, double> power_radius(double lo, double hi, double q, double u) {
  double a = std::pow(lo, q), b = std::pow(hi, q);
  double r = std::pow(a + u * (b - a), 1.0 / q);
  return {r, (b - a) / (q * std::pow(r, q - 1.0))};
}

inline void check_s(double s) {
  if (!(s > 0.0 && s < 0.5)) throw std::invalid_argument("sobolev: s must lie in (0, 1/2)");
}

inline void check_box(const Region& A, const SamplerConfig& cfg) {
  if (!cfg.box_half_width) return;
  double b = *cfg.box_half_width;
  Vec2 lo = A.box_lo(), hi = A.box_hi();
  if (lo.x <= -b && lo.y <= -b && hi.x >= b && hi.y >= b)
    throw SamplingError("sobolev: region covers the sampling box, A^c cannot be sampled");
}

// sum over strata of independent estimates, with budget rounds and an optional early stop
template <class Draw>
SeminormEstimate run_strata(int n_strata, const SamplerConfig& cfg, std::uint64_t salt, Draw&& draw) {
  if (cfg.rounds < 1 || cfg.budget < static_cast<long long>(n_strata) * cfg.rounds) throw std::invalid_argument("sobolev: budget smaller than the number of strata");
  struct Acc {
    CompensatedSum<double> s1, s2;
    long long n = 0;
  };
  std::vector<Acc> acc(n_strata);
  const long long per_round = std::max<long long>(1, cfg.budget / (static_cast<long long>(n_strata) * cfg.rounds));
  SeminormEstimate out;
  out.seed = cfg.seed;
  for (int round = 0; round < cfg.rounds; ++round) {
    parallel_for(n_strata, [&](int k) {
      const std::uint64_t base = (salt << 56) | (static_cast<std::uint64_t>(k) << 44);
      for (long long i = 0; i < per_round; ++i) {
        CounterRng gi(cfg.seed, base | static_cast<std::uint64_t>(acc[k].n + i));
        double w = draw(k, gi);
        acc[k].s1.add(w);
        acc[k].s2.add(w * w);
      }
      acc[k].n += per_round;
    });
    double v = 0.0, var = 0.0;
    long long n = 0;
    for (const auto& a : acc) {
      double m = a.s1.value() / a.n;
      double s2 = std::max(a.s2.value() / a.n - m * m, 0.0);
      v += m;
      var += s2 * a.n / std::max<long long>(a.n - 1, 1) / a.n;
      n += a.n;
    }
    out.value = v;
    out.std_error = std::sqrt(var);
    out.samples = n;
    if (cfg.target_rel > 0.0 && out.std_error <= cfg.target_rel * std::fabs(out.value)) return out;
  }
  out.partial = cfg.target_rel > 0.0;
  return out;
}

// \iint_{A x A^c} F(x) |x - y|^{-2-2s}, x in A; strata in r = |x - y| plus the far tail r > D
template <class Fx>
SeminormEstimate cross_part(const Region& A, double s, const SamplerConfig& cfg, Fx&& F, std::uint64_t salt) {
  check_s(s);
  check_box(A, cfg);
  const double D = A.diameter_bound();
  auto sh = shells(D, cfg.strata);
  const int n = static_cast<int>(sh.size()) + 1;
  const double q = 1.0 - 2.0 * s;  // radial density ~ r^{-2s}
  return run_strata(n, cfg, salt + (cfg.exterior ? 7 : 0), [&](int k, CounterRng& g) -> double {
    if (k == n - 1) {
      // r > D: every partner is outside
      Vec2 x = A.sample_uniform(g);
      return A.area() * F(x) * 2.0 * pi * std::pow(D, -2.0 * s) / (2.0 * s);
    }
    auto [r, inv_p] = power_radius(sh[k].lo, sh[k].hi, q, g.uniform());
    double phi = 2.0 * pi * g.uniform();
    Vec2 d{r * std::cos(phi), r * std::sin(phi)};
    double ker = 2.0 * pi * std::pow(r, -1.0 - 2.0 * s) * inv_p;
    if (!cfg.exterior) {
      LayerPoint lx = A.sample_layer(r, true, g);
      if (!A.contains(lx.x) || A.contains(lx.x + d)) return 0.0;
      return ker * lx.weight * F(lx.x);
    }
    LayerPoint ly = A.sample_layer(r, false, g);
    if (A.contains(ly.x) || !A.contains(ly.x - d)) return 0.0;
    return ker * ly.weight * F(ly.x - d);
  });
}

}  // namespace detail

/// [1_A]^2_{H^s} = 2 \iint_{A x A^c} |x - y|^{-2-2s} dy dx.
inline SeminormEstimate gagliardo_indicator(const Region& A, double s, const SamplerConfig& cfg = {}) {
  auto e = detail::cross_part(A, s, cfg, [](const Vec2&) { return 1.0; }, 1);
  e.value *= 2.0;
  e.std_error *= 2.0;
  return e;
}

struct HolderFunction {
  std::function<double(const Vec2&)> f;
  double exponent = 0.0;   // s'
  double constant = 0.0;   // [f]_{C^{s'}}
  double sup = 0.0;        // ||f||_inf on the region
};

/// |x|^{s'}: Holder constant 1; sup over a disk centred at the origin is r^{s'}.
inline HolderFunction power_weight(double sp, double sup) {
  return {[sp](const Vec2& x) { return std::pow(norm(x), sp); }, sp, 1.0, sup};
}

inline HolderFunction constant_weight(double c) {
  return {[c](const Vec2&) { return c; }, 1.0, 0.0, std::fabs(c)};
}

struct WeightedEstimate {
  SeminormEstimate total;
  SeminormEstimate cross;  // \iint_{A x A^c} |f(x)|^2 k
  SeminormEstimate inner;  // \iint_{A x A} |f(x) - f(y)|^2 k
};

/// [f 1_A]^2_{H^s} = 2 cross + inner.
inline WeightedEstimate gagliardo_weighted(const Region& A, const HolderFunction& f, double s,
                                           const SamplerConfig& cfg = {}) {
  detail::check_s(s);
  if (!(s < f.exponent)) throw std::invalid_argument("gagliardo_weighted: need s < s'");
  WeightedEstimate w;
  w.cross = detail::cross_part(A, s, cfg, [&](const Vec2& x) { double v = f.f(x); return v * v; }, 2);
  const double D = A.diameter_bound();
  auto sh = detail::shells(D, cfg.strata);
  const double q = 2.0 * (f.exponent - s);  // |f(x)-f(y)|^2 k r dr ~ r^{q-1}
  SamplerConfig ci = cfg;
  ci.target_rel = 0.0;
  w.inner = detail::run_strata(static_cast<int>(sh.size()), ci, 3, [&](int k, CounterRng& g) -> double {
    Vec2 x = A.sample_uniform(g);
    auto [r, inv_p] = detail::power_radius(sh[k].lo, sh[k].hi, q, g.uniform());
    double phi = 2.0 * pi * g.uniform();
    Vec2 y = x + Vec2{r * std::cos(phi), r * std::sin(phi)};
    if (!A.contains(y)) return 0.0;
    double df = f.f(x) - f.f(y);
    return A.area() * 2.0 * pi * std::pow(r, -1.0 - 2.0 * s) * inv_p * df * df;
  });
  w.total.value = 2.0 * w.cross.value + w.inner.value;
  w.total.std_error = std::hypot(2.0 * w.cross.std_error, w.inner.std_error);
  w.total.samples = w.cross.samples + w.inner.samples;
  w.total.seed = cfg.seed;
  w.total.partial = w.cross.partial || w.inner.partial;
  return w;
}

// ---- bound checks ----

struct BoundCheck {
  std::vector<double> area;
  std::vector<double> estimate;
  std::vector<double> std_error;
  std::vector<double> bound_term;  // right side of the bound without the constant
  double constant = 0.0;           // fitted at the first member
  double safety = 2.0;
  bool holds = true;
  RateFit fit;                     // log estimate vs log |A|
};

namespace detail {

inline void finish_bound(BoundCheck& b) {
  b.constant = b.estimate[0] / b.bound_term[0];
  for (size_t i = 0; i < b.area.size(); ++i)
    if (b.estimate[i] - 3.0 * b.std_error[i] > b.safety * b.constant * b.bound_term[i]) b.holds = false;
  b.fit = fit_rate(b.area, b.estimate);
}

}  // namespace detail

/// Thin rectangles 1 x eps (|A| = eps) against C |A|^{1-2s}, C from the first member.
inline BoundCheck indicator_scaling_check(const std::vector<double>& eps, double s, const SamplerConfig& cfg = {},
                                          double safety = 2.0) {
  detail::check_s(s);
  BoundCheck b;
  b.safety = safety;
  for (size_t i = 0; i < eps.size(); ++i) {
    SamplerConfig c = cfg;
    c.seed = cfg.seed + i;
    auto e = gagliardo_indicator(Region::rectangle(1.0, eps[i]), s, c);
    b.area.push_back(eps[i]);
    b.estimate.push_back(e.value);
    b.std_error.push_back(e.std_error);
    b.bound_term.push_back(std::pow(eps[i], 1.0 - 2.0 * s));
  }
  detail::finish_bound(b);
  return b;
}

/// Disks of the given radii with f = |x|^{s'} against
/// C (||f||^2 |A|^{1-2s} + [f]^2 |A|^{1 - 2(s - s')/d}), d = 2.
inline BoundCheck weighted_scaling_check(const std::vector<double>& radii, double s, double sp,
                                         const SamplerConfig& cfg = {}, double safety = 2.0) {
  BoundCheck b;
  b.safety = safety;
  for (size_t i = 0; i < radii.size(); ++i) {
    SamplerConfig c = cfg;
    c.seed = cfg.seed + i;
    Region A = Region::disk(radii[i]);
    auto f = power_weight(sp, std::pow(radii[i], sp));
    auto e = gagliardo_weighted(A, f, s, c);
    b.area.push_back(A.area());
    b.estimate.push_back(e.total.value);
    b.std_error.push_back(e.total.std_error);
    b.bound_term.push_back(f.sup * f.sup * std::pow(A.area(), 1.0 - 2.0 * s) +
                           f.constant * f.constant * std::pow(A.area(), 1.0 - 2.0 * (s - sp) / 2.0));
  }
  detail::finish_bound(b);
  return b;
}

}  // namespace frontlab
