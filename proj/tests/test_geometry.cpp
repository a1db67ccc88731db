#include <gtest/gtest.h>

#include <cmath>

#include "frontlab/geometry.hpp"

using namespace frontlab;

namespace {

std::vector<Vec2> ellipse_by_angle(double a, double b, int n) {
  std::vector<Vec2> p(n);
  for (int j = 0; j < n; ++j) {
    double t = 2 * pi * j / n;
    p[j] = {a * std::cos(t), b * std::sin(t)};
  }
  return p;
}

double ellipse_arclength_reference(double a, double b) {
  return gl_adaptive([&](double t) { return std::hypot(a * std::sin(t), b * std::cos(t)); }, 0.0, 2 * pi,
                     1e-13, 12);
}

}  // namespace

TEST(Resample, UnitCircleLength) {
  auto c = resample_uniform_speed(ellipse_by_angle(1, 1, 64), 64);
  EXPECT_NEAR(c.length(), 2 * pi, 1e-6);
}

TEST(Resample, UniformCircleIsIdempotent) {
  auto pts = ellipse_by_angle(1, 1, 64);
  auto c = resample_uniform_speed(pts, 64);
  for (int j = 0; j < 64; ++j) EXPECT_LT(norm(c.nodes()[j] - pts[j]), 1e-8);
}

TEST(Resample, EllipseArclengthMatchesAdaptiveQuadrature) {
  auto c = resample_uniform_speed(ellipse_by_angle(3, 1, 200), 256);
  double ref = ellipse_arclength_reference(3, 1);
  EXPECT_NEAR(c.length() / ref, 1.0, 1e-4);
  EXPECT_LT(c.speed_deviation(), 1e-6);
}

TEST(Resample, TwiceIsIdempotent) {
  auto c = resample_uniform_speed(ellipse_by_angle(2, 1, 100), 128);
  auto c2 = resample_uniform_speed(c.nodes(), 128);
  for (int j = 0; j < 128; ++j) EXPECT_LT(norm(c.nodes()[j] - c2.nodes()[j]), 1e-8);
}

TEST(Resample, PreservesArea) {
  auto c = resample_uniform_speed(ellipse_by_angle(2, 1, 400), 256);
  EXPECT_NEAR(c.area() / (2 * pi), 1.0, 1e-6);
}

TEST(Resample, ClockwiseInputIsReoriented) {
  auto p = ellipse_by_angle(2, 1, 64);
  std::reverse(p.begin(), p.end());
  auto c = resample_uniform_speed(p, 128);
  EXPECT_GT(c.area(), 0.0);
  EXPECT_LT(norm(c.nodes()[0] - p[0]), 1e-12);
}

TEST(Resample, UnderResolvedEllipseRejected) {
  EXPECT_THROW(resample_uniform_speed(ellipse_by_angle(4, 1, 64), 32), GeometryError);
}

TEST(Resample, RejectsSmallM) { EXPECT_THROW(resample_uniform_speed(ellipse_by_angle(1, 1, 64), 8), GeometryError); }

TEST(Resample, RejectsFigureEight) {
  std::vector<Vec2> p(128);
  for (int j = 0; j < 128; ++j) {
    double t = 2 * pi * j / 128;
    p[j] = {std::sin(t), std::sin(t) * std::cos(t) + 0.3 * std::sin(2 * t) * 0.0};
  }
  EXPECT_THROW(resample_uniform_speed(p, 64), GeometryError);
}

TEST(Frenet, UnitCircle) {
  auto c = resample_uniform_speed(ellipse_by_angle(1, 1, 64), 64);
  auto f = frenet_frame(c);
  for (int j = 0; j < 64; ++j) EXPECT_NEAR(f.curvature[j], 1.0, 1e-10);
  EXPECT_NEAR(f.normal[0].x, -1.0, 1e-12);
  EXPECT_NEAR(f.normal[0].y, 0.0, 1e-12);
}

TEST(Frenet, CircleRadiusScaling) {
  auto c = resample_uniform_speed(ellipse_by_angle(2.5, 2.5, 64), 64);
  auto f = frenet_frame(c);
  for (int j = 0; j < 64; ++j) EXPECT_NEAR(f.curvature[j], 0.4, 1e-10);
}

TEST(Frenet, EllipseCurvatureMatchesFiniteDifferences) {
  auto c = resample_uniform_speed(ellipse_by_angle(2, 1, 256), 256);
  auto f = frenet_frame(c);
  EXPECT_NEAR(f.curvature[0], 2.0, 1e-6);
  // 4th-order finite differences of the node sequence
  const int m = c.size();
  const double h = 1.0 / m;
  auto at = [&](int j) { return c.node(j); };
  Vec2 d1 = (at(-2) - 8.0 * at(-1) + 8.0 * at(1) - at(2)) / (12 * h);
  Vec2 d2 = (-1.0 * at(-2) + 16.0 * at(-1) - 30.0 * at(0) + 16.0 * at(1) - at(2)) / (12 * h * h);
  double kfd = cross(d1, d2) / std::pow(norm(d1), 3);
  EXPECT_NEAR(f.curvature[0], kfd, 1e-4);
  EXPECT_NEAR(kfd, 2.0, 1e-4);
}

TEST(Frenet, FrenetFormulas) {
  auto c = resample_uniform_speed(ellipse_by_angle(2, 1, 256), 256);
  auto f = frenet_frame(c);
  std::vector<double> tx(256), ty(256), nx(256), ny(256);
  for (int j = 0; j < 256; ++j) {
    tx[j] = f.tangent[j].x; ty[j] = f.tangent[j].y;
    nx[j] = f.normal[j].x; ny[j] = f.normal[j].y;
  }
  auto dtx = spectral_derivative(tx), dty = spectral_derivative(ty);
  auto dnx = spectral_derivative(nx), dny = spectral_derivative(ny);
  const double L = c.length();
  for (int j = 0; j < 256; ++j) {
    double k = f.curvature[j];
    double scale = L * std::fabs(k);
    EXPECT_LT(norm(Vec2{dtx[j], dty[j]} - L * k * f.normal[j]), 1e-4 * scale);
    EXPECT_LT(norm(Vec2{dnx[j], dny[j]} + L * k * f.tangent[j]), 1e-4 * scale);
    EXPECT_NEAR(norm(f.tangent[j]), 1.0, 1e-8);
  }
}

TEST(Tubular, CircleExplicit) {
  auto c = resample_uniform_speed(ellipse_by_angle(1, 1, 64), 64);
  TubularChart ch(c, 0.1);
  auto p = tubular_point(ch, 0.0, 1.0);
  EXPECT_NEAR(p.point.x, 0.9, 1e-12);
  EXPECT_NEAR(p.point.y, 0.0, 1e-12);
  EXPECT_NEAR(p.jacobian, 0.1 * 2 * pi * 0.9, 1e-10);
  auto q = tubular_point(ch, 0.3, 0.0);
  EXPECT_LT(norm(q.point - c.eval(0.3)), 1e-14);
  EXPECT_NEAR(q.jacobian, 0.1 * c.length(), 1e-14);
  EXPECT_THROW(tubular_point(ch, 0.1, 1.5), GeometryError);
}

TEST(Tubular, JacobianMatchesFiniteDifferences) {
  auto c = resample_uniform_speed(ellipse_by_angle(2, 1, 256), 256);
  TubularChart ch(c, 0.05);
  const double e = 1e-5;
  for (auto [s, xi] : {std::pair{0.13, 0.4}, {0.71, -0.8}, {0.5, 0.95}}) {
    Vec2 xs = (tubular_point(ch, s + e, xi).point - tubular_point(ch, s - e, xi).point) / (2 * e);
    Vec2 xx = (tubular_point(ch, s, xi + e).point - tubular_point(ch, s, xi - e).point) / (2 * e);
    double det = std::fabs(cross(xs, xx));
    EXPECT_NEAR(tubular_point(ch, s, xi).jacobian / det, 1.0, 1e-5);
  }
}

TEST(Tubular, DegenerateChartRejected) {
  auto c = resample_uniform_speed(ellipse_by_angle(2, 1, 256), 256);
  EXPECT_THROW(TubularChart(c, 0.6), GeometryError);
}

TEST(Classify, CenterAndFarPoints) {
  auto c = resample_uniform_speed(ellipse_by_angle(1, 1, 64), 64);
  TubularChart ch(c, 0.05);
  EXPECT_TRUE(std::holds_alternative<Inside>(classify_point(ch, {0, 0})));
  EXPECT_TRUE(std::holds_alternative<Outside>(classify_point(ch, {1.0 + 2 * 0.05, 0.0})));
  EXPECT_TRUE(std::holds_alternative<Outside>(classify_point(ch, {5.0, 1.0})));
}

TEST(Classify, RoundTrip) {
  auto c = resample_uniform_speed(ellipse_by_angle(2, 1, 256), 256);
  TubularChart ch(c, 0.05);
  for (double s : {0.0, 0.3, 0.77, 0.999}) {
    for (double xi : {-1.0, -0.3, 0.0, 0.5, 1.0}) {
      auto r = classify_point(ch, tubular_point(ch, s, xi).point);
      ASSERT_TRUE(std::holds_alternative<InStrip>(r));
      auto st = std::get<InStrip>(r);
      EXPECT_LT(torus_dist(st.s, s), 1e-6);
      EXPECT_NEAR(st.xi, xi, 1e-6);
    }
  }
}
