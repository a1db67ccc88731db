#include <gtest/gtest.h>

#include "frontlab/rate_fit.hpp"

using namespace frontlab;

TEST(FitRate, ExactPowerLaw) {
  std::vector<double> x{1.0, 0.5, 0.25, 0.125}, y;
  for (double v : x) y.push_back(3.0 * v * v);
  auto f = fit_rate(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-10);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
  EXPECT_NEAR(std::exp(f.intercept), 3.0, 1e-10);
}

TEST(FitRate, FloorTailDropped) {
  std::vector<double> x{0.1, 0.05, 0.025, 0.0125, 0.00625}, y;
  for (double v : x) y.push_back(2.0 * std::pow(v, 1.5));
  y.back() = 2e-9;  // floor-contaminated
  WindowPolicy p;
  p.noise_floor = 1e-9;
  auto f = fit_rate(x, y, p);
  EXPECT_NEAR(f.slope, 1.5, 0.05);
  EXPECT_EQ(f.used, 4);

  WindowPolicy a;
  a.auto_floor = true;
  y.back() = 1.9 * std::pow(0.0125, 1.5);
  auto g = fit_rate(x, y, a);
  EXPECT_NEAR(g.slope, 1.5, 0.05);
}

TEST(FitRate, TooFewPairsIsInconclusive) {
  std::vector<double> x{1.0, 0.5, 0.25}, y{1.0, 0.25, 0.0625};
  WindowPolicy p;
  p.drop_head = 1;
  EXPECT_THROW(fit_rate(x, y, p), InconclusiveFit);
}

TEST(FitRate, MiddleFractionAndFlag) {
  std::vector<double> x, y;
  for (int k = 0; k < 10; ++k) {
    x.push_back(std::ldexp(1.0, -k));
    y.push_back(std::pow(x.back(), 1.0) * (k % 2 ? 3.0 : 0.3));
  }
  WindowPolicy p;
  p.middle_fraction = 0.6;
  auto f = fit_rate(x, y, p);
  EXPECT_EQ(f.used, 6);
  EXPECT_TRUE(f.flagged);
}
