#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace frontlab {

inline constexpr double pi = std::numbers::pi;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2() = default;
  constexpr Vec2(double a, double b) : x(a), y(b) {}

  constexpr Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
  constexpr Vec2& operator*=(double a) { x *= a; y *= a; return *this; }
};

constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
constexpr Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
constexpr Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }
constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
/// x^perp = (-x2, x1), rotation by +90 degrees.
constexpr Vec2 perp(const Vec2& a) { return {-a.y, a.x}; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }
constexpr double norm2(const Vec2& a) { return a.x * a.x + a.y * a.y; }
inline double norm_of(double a) { return std::fabs(a); }
inline double norm_of(const Vec2& a) { return norm(a); }

/// Distance on the circle R/Z.
inline double torus_dist(double a, double b) {
  double d = std::fmod(std::fabs(a - b), 1.0);
  return std::min(d, 1.0 - d);
}

/// Wrap to [0,1).
inline double wrap01(double s) {
  double r = s - std::floor(s);
  return r >= 1.0 ? 0.0 : r;
}

/// Neumaier compensated accumulator. Summation order is the call order.
template <class T>
class CompensatedSum {
 public:
  void add(const T& v) { add_impl(v); }
  T value() const { return sum_ + comp_; }

 private:
  void add_impl(double v) {
    double t = sum_ + v;
    if (std::fabs(sum_) >= std::fabs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  void add_impl(const Vec2& v) {
    double tx = sum_.x + v.x;
    comp_.x += std::fabs(sum_.x) >= std::fabs(v.x) ? (sum_.x - tx) + v.x : (v.x - tx) + sum_.x;
    sum_.x = tx;
    double ty = sum_.y + v.y;
    comp_.y += std::fabs(sum_.y) >= std::fabs(v.y) ? (sum_.y - ty) + v.y : (v.y - ty) + sum_.y;
    sum_.y = ty;
  }
  T sum_{};
  T comp_{};
};

/// Nodes and weights on [0,1].
struct QuadRule {
  std::vector<double> x;
  std::vector<double> w;
};

namespace detail {

inline QuadRule compute_gauss_legendre(int n) {
  QuadRule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (t * p1 - p0) / (t * t - 1.0);
      double dt = p1 / dp;
      t -= dt;
      if (std::fabs(dt) < 1e-16) break;
    }
    double p0 = 1.0, p1 = t;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n == 1 ? 1.0 : n * (t * p1 - p0) / (t * t - 1.0);
    double w = 2.0 / ((1.0 - t * t) * dp * dp);
    r.x[n - 1 - i] = 0.5 * (t + 1.0);
    r.w[n - 1 - i] = 0.5 * w;
  }
  return r;
}

// Golub-Welsch for the weight u^gamma on [0,1].
inline QuadRule compute_gauss_jacobi01(int n, double gamma) {
  const double a = 0.0, b = gamma;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    double s = 2.0 * k + a + b;
    double alpha_k = (k == 0) ? (b - a) / (a + b + 2.0) : (b * b - a * a) / (s * (s + 2.0));
    J(k, k) = alpha_k;
    if (k + 1 < n) {
      double m = k + 1.0;
      double sm = 2.0 * m + a + b;
      double beta = 4.0 * m * (m + a) * (m + b) * (m + a + b) / (sm * sm * (sm + 1.0) * (sm - 1.0));
      J(k, k + 1) = J(k + 1, k) = std::sqrt(beta);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  double mu0 = std::pow(2.0, a + b + 1.0) * std::tgamma(a + 1.0) * std::tgamma(b + 1.0) /
               std::tgamma(a + b + 2.0);
  QuadRule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < n; ++i) {
    double v0 = es.eigenvectors()(0, i);
    r.x[i] = 0.5 * (es.eigenvalues()(i) + 1.0);
    r.w[i] = mu0 * v0 * v0 * std::pow(2.0, -gamma - 1.0);
  }
  return r;
}

}  // namespace detail

/// Gauss-Legendre rule on [0,1], cached.
inline const QuadRule& gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, QuadRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, detail::compute_gauss_legendre(n)).first;
  return it->second;
}

/// Gauss rule for \int_0^1 u^gamma f(u) du, gamma > -1, cached.
inline const QuadRule& gauss_jacobi01(int n, double gamma) {
  if (!(gamma > -1.0)) throw std::invalid_argument("gauss_jacobi01: gamma must exceed -1");
  static std::mutex mu;
  static std::map<std::pair<int, double>, QuadRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(n, gamma);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, detail::compute_gauss_jacobi01(n, gamma)).first;
  return it->second;
}

/// Integrate f over [a,b] with an n-point Gauss-Legendre rule.
template <class F>
auto gl_integrate(F&& f, double a, double b, int n) {
  const auto& r = gauss_legendre(n);
  using T = decltype(f(a));
  CompensatedSum<T> acc;
  double h = b - a;
  for (int i = 0; i < n; ++i) acc.add(r.w[i] * h * f(a + h * r.x[i]));
  return acc.value();
}

/// Composite Gauss-Legendre on [a,b] with `panels` equal panels.
template <class F>
auto gl_composite(F&& f, double a, double b, int panels, int n) {
  using T = decltype(f(a));
  CompensatedSum<T> acc;
  double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) acc.add(gl_integrate(f, a + p * h, a + (p + 1) * h, n));
  return acc.value();
}

/// Adaptive Gauss-Kronrod style bisection on Gauss-Legendre pairs (n vs 2n).
template <class F>
double gl_adaptive(F&& f, double a, double b, double tol, int n = 10, int depth = 40) {
  double coarse = gl_integrate(f, a, b, n);
  double fine = gl_integrate(f, a, b, 2 * n);
  if (std::fabs(fine - coarse) <= std::max(tol, 1e-15 * std::fabs(fine)) || depth == 0) return fine;
  double m = 0.5 * (a + b);
  return gl_adaptive(f, a, m, 0.5 * tol, n, depth - 1) + gl_adaptive(f, m, b, 0.5 * tol, n, depth - 1);
}

/// msin(s) = sin(pi s)/pi.
inline double msin(double s) { return std::sin(pi * s) / pi; }

}  // namespace frontlab
