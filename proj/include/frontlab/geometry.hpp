#pragma once

#include <array>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "frontlab/core.hpp"
#include "frontlab/fourier.hpp"

namespace frontlab {

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CurveOptions {
  double chord_arc = 0.1;         // c in |z(s)-z(s')| >= c L |s-s'|
  double speed_tol = 1e-6;        // relative uniform-speed tolerance
  double resample_tol = 1e-8;     // fixed-point tolerance for node motion
  int max_resample_iter = 60;
};

inline double shoelace_area(const std::vector<Vec2>& p) {
  CompensatedSum<double> acc;
  const size_t n = p.size();
  for (size_t i = 0; i < n; ++i) acc.add(cross(p[i], p[(i + 1) % n]));
  return 0.5 * acc.value();
}

/// Value and first three s-derivatives of the curve at a parameter.
struct CurveJet {
  Vec2 z, zs, zss, zsss;
};

/// Uniform-speed closed curve sampled at s_j = j/M, counter-clockwise.
class ClosedCurve {
 public:
  ClosedCurve() = default;

  /// Wraps nodes that are already uniform-speed; validates every invariant.
  static ClosedCurve from_uniform_nodes(std::vector<Vec2> nodes, const CurveOptions& opt = {}) {
    ClosedCurve c;
    c.init(std::move(nodes));
    c.validate(opt);
    return c;
  }

  /// Same as from_uniform_nodes without the uniform-speed/chord-arc checks.
  static ClosedCurve unchecked(std::vector<Vec2> nodes) {
    ClosedCurve c;
    c.init(std::move(nodes));
    return c;
  }

  int size() const { return static_cast<int>(nodes_.size()); }
  const std::vector<Vec2>& nodes() const { return nodes_; }
  const Vec2& node(int j) const { return nodes_[((j % size()) + size()) % size()]; }
  double length() const { return length_; }
  double param(int j) const { return static_cast<double>(j) / size(); }
  /// Enclosed area 1/2 \oint z x z_s ds of the interpolant.
  double area() const {
    CompensatedSum<double> acc;
    for (size_t i = 0; i < nodes_.size(); ++i) acc.add(cross(nodes_[i], zs_[i]));
    return 0.5 * acc.value() / static_cast<double>(nodes_.size());
  }
  double polygon_area() const { return shoelace_area(nodes_); }

  /// Spectral derivatives at nodes.
  const std::vector<Vec2>& zs() const { return zs_; }
  const std::vector<Vec2>& zss() const { return zss_; }
  const std::vector<Vec2>& zsss() const { return zsss_; }

  Vec2 eval(double s) const { return to_vec(interp_.eval(s)); }

  CurveJet jet(double s) const {
    std::array<cplx, 4> d;
    interp_.eval_many(s, 0, d.data(), 4);
    return {to_vec(d[0]), to_vec(d[1]), to_vec(d[2]), to_vec(d[3])};
  }

  const TrigInterpolant& interpolant() const { return interp_; }

  /// max_j | |z_s(s_j)|/L - 1 |
  double speed_deviation() const {
    double dev = 0.0;
    for (const auto& v : zs_) dev = std::max(dev, std::fabs(norm(v) / length_ - 1.0));
    return dev;
  }

  /// min over node pairs of |z_i - z_j| / (L |s_i-s_j|_T).
  double chord_arc_constant() const {
    const int m = size();
    double c = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) {
        double ds = torus_dist(param(i), param(j));
        c = std::min(c, norm(nodes_[i] - nodes_[j]) / (length_ * ds));
      }
    return c;
  }

  void validate(const CurveOptions& opt) const {
    if (size() < 16) throw GeometryError("curve needs at least 16 nodes");
    if (!(area() > 0.0)) throw GeometryError("curve is not positively oriented");
    double dev = speed_deviation();
    if (dev > opt.speed_tol) {
      std::ostringstream os;
      os << "uniform speed violated: max relative deviation " << dev
         << " (curvature under-resolved for M=" << size() << ")";
      throw GeometryError(os.str());
    }
    double ca = chord_arc_constant();
    if (ca < opt.chord_arc) {
      std::ostringstream os;
      os << "chord-arc constant " << ca << " below " << opt.chord_arc << " (self-intersection?)";
      throw GeometryError(os.str());
    }
  }

 private:
  static Vec2 to_vec(const cplx& c) { return {c.real(), c.imag()}; }

  void init(std::vector<Vec2> nodes) {
    nodes_ = std::move(nodes);
    std::vector<cplx> c(nodes_.size());
    for (size_t i = 0; i < nodes_.size(); ++i) c[i] = {nodes_[i].x, nodes_[i].y};
    interp_ = TrigInterpolant(c);
    auto d1 = interp_.node_derivative(1);
    auto d2 = interp_.node_derivative(2);
    auto d3 = interp_.node_derivative(3);
    zs_.resize(nodes_.size());
    zss_.resize(nodes_.size());
    zsss_.resize(nodes_.size());
    CompensatedSum<double> len;
    for (size_t i = 0; i < nodes_.size(); ++i) {
      zs_[i] = to_vec(d1[i]);
      zss_[i] = to_vec(d2[i]);
      zsss_[i] = to_vec(d3[i]);
      len.add(norm(zs_[i]));
    }
    length_ = len.value() / static_cast<double>(nodes_.size());
  }

  std::vector<Vec2> nodes_;
  std::vector<Vec2> zs_, zss_, zsss_;
  TrigInterpolant interp_;
  double length_ = 0.0;
};

namespace detail {

// Arclength of a trigonometric interpolant as an explicit Fourier series.
struct ArclengthMap {
  TrigInterpolant curve;
  std::vector<int> k;
  std::vector<cplx> speed_coef;  // Fourier coefficients of |z_t|
  double total = 0.0;

  explicit ArclengthMap(const std::vector<Vec2>& pts) {
    std::vector<cplx> c(pts.size());
    for (size_t i = 0; i < pts.size(); ++i) c[i] = {pts[i].x, pts[i].y};
    curve = TrigInterpolant(c);
    int nf = 1;
    while (nf < 8 * static_cast<int>(pts.size())) nf *= 2;
    nf = std::max(nf, 1024);
    auto d = curve.oversample(nf, 1);
    std::vector<double> speed(nf);
    for (int i = 0; i < nf; ++i) speed[i] = std::abs(d[i]);
    TrigInterpolant sp(speed);
    sp.truncate(1e-17);
    k = sp.wavenumbers();
    speed_coef = sp.coefficients();
    for (size_t i = 0; i < k.size(); ++i)
      if (k[i] == 0) total = speed_coef[i].real();
  }

  double speed(double t) const { return std::abs(curve.eval(t, 1)); }

  // sigma(t) = \int_0^t |z_t|
  double sigma(double t) const {
    CompensatedSum<double> acc;
    acc.add(total * t);
    for (size_t i = 0; i < k.size(); ++i) {
      if (k[i] == 0) continue;
      cplx ik(0.0, 2.0 * pi * k[i]);
      cplx term = speed_coef[i] * (std::polar(1.0, 2.0 * pi * k[i] * t) - 1.0) / ik;
      acc.add(term.real());
    }
    return acc.value();
  }
};

// Fritsch-Carlson monotone cubic through (x_i, y_i), x increasing.
inline double monotone_cubic(const std::vector<double>& x, const std::vector<double>& y, double q) {
  const size_t n = x.size();
  size_t i = std::upper_bound(x.begin(), x.end(), q) - x.begin();
  i = std::clamp<size_t>(i, 1, n - 1) - 1;
  auto slope = [&](size_t a) { return (y[a + 1] - y[a]) / (x[a + 1] - x[a]); };
  auto tangent = [&](size_t a) {
    if (a == 0) return slope(0);
    if (a == n - 1) return slope(n - 2);
    double d0 = slope(a - 1), d1 = slope(a);
    if (d0 * d1 <= 0.0) return 0.0;
    return 2.0 / (1.0 / d0 + 1.0 / d1);
  };
  double h = x[i + 1] - x[i];
  double t = (q - x[i]) / h;
  double m0 = tangent(i) * h, m1 = tangent(i + 1) * h;
  double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * y[i] + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * y[i + 1] +
         (t3 - t2) * m1;
}

// One pass: sample the interpolant of `pts` at M equal-arclength points.
inline std::vector<Vec2> arclength_pass(const std::vector<Vec2>& pts, int m, double* length) {
  ArclengthMap map(pts);
  const double L = map.total;
  const int nt = 8 * std::max<int>(m, static_cast<int>(pts.size()));
  std::vector<double> tt(nt + 1), ss(nt + 1);
  for (int i = 0; i <= nt; ++i) {
    tt[i] = static_cast<double>(i) / nt;
    ss[i] = map.sigma(tt[i]);
  }
  ss[0] = 0.0;
  ss[nt] = L;
  std::vector<Vec2> out(m);
  for (int j = 0; j < m; ++j) {
    double target = L * j / m;
    double t = monotone_cubic(ss, tt, target);
    for (int it = 0; it < 30; ++it) {
      double dt = (map.sigma(t) - target) / map.speed(t);
      t -= dt;
      if (std::fabs(dt) < 1e-15) break;
    }
    cplx z = map.curve.eval(t);
    out[j] = {z.real(), z.imag()};
  }
  *length = L;
  return out;
}

}  // namespace detail

/// Resample a closed point sequence (any parameterisation) to M uniform-speed nodes.
/// Clockwise input is reversed, keeping the first point as s = 0.
inline ClosedCurve resample_uniform_speed(std::vector<Vec2> points, int m, const CurveOptions& opt = {}) {
  if (m < 16) throw GeometryError("resample_uniform_speed: M must be at least 16");
  if (points.size() < 3) throw GeometryError("resample_uniform_speed: need at least 3 points");
  if (shoelace_area(points) < 0.0) std::reverse(points.begin() + 1, points.end());
  double L = 0.0;
  std::vector<Vec2> cur = detail::arclength_pass(points, m, &L);
  double scale = std::max(1.0, L / (2.0 * pi));
  for (int it = 0; it < opt.max_resample_iter; ++it) {
    std::vector<Vec2> next = detail::arclength_pass(cur, m, &L);
    double change = 0.0;
    for (int j = 0; j < m; ++j) change = std::max(change, norm(next[j] - cur[j]));
    cur = std::move(next);
    if (change < opt.resample_tol * scale) break;
  }
  return ClosedCurve::from_uniform_nodes(std::move(cur), opt);
}

struct FrenetData {
  std::vector<Vec2> tangent;
  std::vector<Vec2> normal;
  std::vector<double> curvature;
};

inline FrenetData frenet_frame(const ClosedCurve& c) {
  FrenetData f;
  const int m = c.size();
  const double L = c.length();
  f.tangent.resize(m);
  f.normal.resize(m);
  f.curvature.resize(m);
  for (int j = 0; j < m; ++j) {
    Vec2 t = c.zs()[j] / norm(c.zs()[j]);
    f.tangent[j] = t;
    f.normal[j] = perp(t);
    f.curvature[j] = dot(c.zss()[j], perp(c.zs()[j])) / (L * L * L);
  }
  return f;
}

/// Frame and curvature at an arbitrary parameter.
struct FrameAt {
  Vec2 z, T, N;
  double kappa;
};

inline FrameAt frame_at(const ClosedCurve& c, double s) {
  CurveJet j = c.jet(s);
  const double L = c.length();
  Vec2 t = j.zs / norm(j.zs);
  return {j.z, t, perp(t), dot(j.zss, perp(j.zs)) / (L * L * L)};
}

/// Dense oversampled table of z, z_s, z_ss with 8-point Lagrange interpolation.
/// Cheap repeated off-grid evaluation of a spectrally represented curve.
class CurveTable {
 public:
  CurveTable() = default;
  explicit CurveTable(const ClosedCurve& c, int oversampling = 16) : length_(c.length()) {
    n_ = 1;
    while (n_ < oversampling * c.size()) n_ *= 2;
    auto d0 = c.interpolant().oversample(n_, 0);
    auto d1 = c.interpolant().oversample(n_, 1);
    auto d2 = c.interpolant().oversample(n_, 2);
    data_.resize(static_cast<size_t>(n_) * 6);
    for (int i = 0; i < n_; ++i) {
      double* r = &data_[static_cast<size_t>(i) * 6];
      r[0] = d0[i].real(); r[1] = d0[i].imag();
      r[2] = d1[i].real(); r[3] = d1[i].imag();
      r[4] = d2[i].real(); r[5] = d2[i].imag();
    }
  }

  double length() const { return length_; }

  /// z, z_s, z_ss at s.
  void eval(double s, Vec2& z, Vec2& zs, Vec2& zss) const {
    double x = s * n_;
    double fl = std::floor(x);
    double t = x - fl;  // in [0,1)
    long base = static_cast<long>(fl) - 3;
    double w[8];
    // barycentric-free Lagrange weights on nodes -3..4 relative to fl
    for (int a = 0; a < 8; ++a) {
      double num = 1.0, den = 1.0;
      for (int b = 0; b < 8; ++b) {
        if (b == a) continue;
        num *= (t - (b - 3));
        den *= (a - b);
      }
      w[a] = num / den;
    }
    double acc[6] = {0, 0, 0, 0, 0, 0};
    for (int a = 0; a < 8; ++a) {
      long idx = ((base + a) % n_ + n_) % n_;
      const double* r = &data_[static_cast<size_t>(idx) * 6];
      for (int q = 0; q < 6; ++q) acc[q] += w[a] * r[q];
    }
    z = {acc[0], acc[1]};
    zs = {acc[2], acc[3]};
    zss = {acc[4], acc[5]};
  }

  FrameAt frame(double s) const {
    Vec2 z, zs, zss;
    eval(s, z, zs, zss);
    Vec2 t = zs / norm(zs);
    return {z, t, perp(t), dot(zss, perp(zs)) / (length_ * length_ * length_)};
  }

 private:
  int n_ = 0;
  double length_ = 0.0;
  std::vector<double> data_;
};

class TubularChart {
 public:
  TubularChart(ClosedCurve base, double delta, double cz = 1.0) : base_(std::move(base)), delta_(delta), cz_(cz) {
    if (!(delta > 0.0)) throw GeometryError("tubular chart: delta must be positive");
    if (!(cz > 0.0)) throw GeometryError("tubular chart: C^z must be positive");
    auto fr = frenet_frame(base_);
    kmax_ = 0.0;
    for (double k : fr.curvature) kmax_ = std::max(kmax_, std::fabs(k));
    if (!(delta_ * cz_ * kmax_ < 1.0)) throw GeometryError("tubular chart degenerate: delta*C^z*max|kappa| >= 1");
    frame_ = std::move(fr);
    table_ = std::make_shared<const CurveTable>(base_);
  }

  const ClosedCurve& base() const { return base_; }
  double delta() const { return delta_; }
  double cz() const { return cz_; }
  double max_curvature() const { return kmax_; }
  const FrenetData& frame() const { return frame_; }
  const CurveTable& table() const { return *table_; }

 private:
  ClosedCurve base_;
  double delta_;
  double cz_;
  double kmax_ = 0.0;
  FrenetData frame_;
  std::shared_ptr<const CurveTable> table_;
};

struct ChartPoint {
  Vec2 point;
  double jacobian;  // delta * L1
};

inline ChartPoint tubular_point(const TubularChart& ch, double s, double xi) {
  if (std::fabs(xi) > ch.cz() * (1.0 + 1e-14)) throw GeometryError("tubular_point: |xi| exceeds C^z");
  FrameAt f = frame_at(ch.base(), s);
  const double L = ch.base().length();
  return {f.z + ch.delta() * xi * f.N, ch.delta() * L * (1.0 - ch.delta() * f.kappa * xi)};
}

struct Inside {};
struct Outside {};
struct InStrip {
  double s;
  double xi;
};
using PointClass = std::variant<Inside, Outside, InStrip>;

/// Winding number of the node polygon around p.
inline int winding_number(const std::vector<Vec2>& poly, const Vec2& p) {
  int wn = 0;
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    double c = cross(b - a, p - a);
    if (a.y <= p.y) {
      if (b.y > p.y && c > 0) ++wn;
    } else if (b.y <= p.y && c < 0) {
      --wn;
    }
  }
  return wn;
}

/// Nearest-point projection onto the base curve: Newton on (p - z(s)).T(s) = 0
/// from the three closest nodes. Returns parameter and signed normal offset.
struct Projection {
  double s;
  double offset;  // (p - z(s)).N(s)
  double dist;
};

inline std::optional<Projection> project_to_curve(const ClosedCurve& c, const Vec2& p) {
  const int m = c.size();
  const double L = c.length();
  std::array<std::pair<double, int>, 3> best{{{1e300, 0}, {1e300, 0}, {1e300, 0}}};
  for (int j = 0; j < m; ++j) {
    double d = norm2(c.nodes()[j] - p);
    if (d < best[2].first) {
      best[2] = {d, j};
      std::sort(best.begin(), best.end());
    }
  }
  std::optional<Projection> out;
  for (const auto& b : best) {
    double s = c.param(b.second);
    bool ok = false;
    for (int it = 0; it < 60; ++it) {
      CurveJet j = c.jet(s);
      Vec2 r = p - j.z;
      double F = dot(r, j.zs);
      double dF = -norm2(j.zs) + dot(r, j.zss);
      if (dF >= 0.0) break;  // not a distance minimum
      double ds = -F / dF;
      ds = std::clamp(ds, -0.5 / m, 0.5 / m);
      s += ds;
      if (std::fabs(ds) < 1e-15) { ok = true; break; }
    }
    if (!ok) continue;
    FrameAt f = frame_at(c, s);
    Vec2 r = p - f.z;
    double tangential = std::fabs(dot(r, f.T));
    if (tangential > 1e-9 * std::max(1.0, L)) continue;
    Projection pr{wrap01(s), dot(r, f.N), norm(r)};
    if (!out || pr.dist < out->dist) out = pr;
  }
  return out;
}

inline PointClass classify_point(const TubularChart& ch, const Vec2& p) {
  const ClosedCurve& c = ch.base();
  const double band = ch.delta() * ch.cz();
  double dmin = 1e300;
  for (const auto& q : c.nodes()) dmin = std::min(dmin, norm(q - p));
  const double spacing = c.length() / c.size();
  if (dmin > band + 2.0 * spacing) {
    return winding_number(c.nodes(), p) != 0 ? PointClass{Inside{}} : PointClass{Outside{}};
  }
  auto pr = project_to_curve(c, p);
  if (!pr) throw GeometryError("classify_point: projection Newton iteration did not converge");
  double xi = pr->offset / ch.delta();
  if (std::fabs(xi) <= ch.cz() * (1.0 + 1e-9)) return InStrip{pr->s, std::clamp(xi, -ch.cz(), ch.cz())};
  return xi > 0.0 ? PointClass{Inside{}} : PointClass{Outside{}};
}

}  // namespace frontlab
