#include <gtest/gtest.h>

#include <sstream>

#include "frontlab/io.hpp"
#include "frontlab/runner.hpp"
#include "shapes.hpp"

using namespace frontlab;
using namespace frontlab::runner;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("frontlab_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST(Config, DefaultsRoundTrip) {
  for (const auto& sub : subcommands()) {
    json d = default_config(sub);
    EXPECT_EQ(resolve_config(sub, json::object()), d) << sub;
    EXPECT_EQ(resolve_config(sub, d), d) << sub;
    EXPECT_EQ(resolve_config(sub, json::parse(d.dump())), d) << sub;
    EXPECT_EQ(schema_docs(sub).size(), d.size()) << sub;
  }
}

TEST(Config, RejectsUnknownKeysTypesAndRanges) {
  EXPECT_THROW(resolve_config("cde-evolve", {{"nodez", 64}}), ConfigError);
  EXPECT_THROW(resolve_config("cde-evolve", {{"nodes", "64"}}), ConfigError);
  EXPECT_THROW(resolve_config("cde-evolve", {{"alpha", 1.5}}), ConfigError);
  EXPECT_THROW(resolve_config("cde-evolve", {{"shape", "square:1"}}), ConfigError);
  EXPECT_THROW(resolve_config("rate-experiment", {{"deltas", {0.02, -0.01}}}), ConfigError);
  EXPECT_THROW(resolve_config("sobolev-scaling", {{"s", 0.5}}), ConfigError);
  EXPECT_THROW(resolve_config("sobolev-scaling", {{"family", "disk-weighted"}, {"s", 0.3}, {"s_prime", 0.2}}), ConfigError);
  EXPECT_THROW(resolve_config("no-such-command", json::object()), ConfigError);
}

TEST(Config, IntegerAcceptedForDouble) {
  auto c = resolve_config("cde-evolve", {{"dt", 1}});
  EXPECT_TRUE(c["dt"].is_number_float());
  EXPECT_EQ(c["dt"].get<double>(), 1.0);
}

TEST(Run, ConfigErrorWritesNothing) {
  auto out = scratch("bad");
  std::ostringstream log;
  EXPECT_EQ(run_and_write("asymptotics-check", {{"alpha", 1.5}}, out, log), exit_config);
  EXPECT_FALSE(std::filesystem::exists(out));
  EXPECT_NE(log.str().find("alpha"), std::string::npos);
}

TEST(Run, MissingCurveFileIsAConfigError) {
  auto r = run("asf-residual", {{"shape", "fourier:/nonexistent/curve.csv"}});
  EXPECT_EQ(r.exit_code, exit_config);
  EXPECT_TRUE(r.files.empty());
}

TEST(Run, FailedVerdictStillWritesOutputs) {
  auto out = scratch("verdict");
  std::ostringstream log;
  EXPECT_EQ(run_and_write("asymptotics-check", {{"slope_tolerance", 1e-9}}, out, log), exit_verdict);
  EXPECT_TRUE(std::filesystem::exists(out / "asymptotics.csv"));
  auto rep = json::parse(read_file(out / "report.json"));
  EXPECT_FALSE(rep["verdicts"][0]["pass"].get<bool>());
  std::filesystem::remove_all(out);
}

TEST(Run, OutputsAreDeterministic) {
  json cfg = {{"family", "dilation"}, {"budget", 50000}};
  auto a = run("sobolev-scaling", cfg), b = run("sobolev-scaling", cfg);
  ASSERT_EQ(a.exit_code, b.exit_code);
  EXPECT_EQ(a.files, b.files);
  cfg["seed"] = 1;
  EXPECT_NE(run("sobolev-scaling", cfg).files, a.files);
}

TEST(Run, ReportEchoesResolvedConfig) {
  auto r = run("spine-extract", {{"delta", 0.05}});
  ASSERT_EQ(r.exit_code, exit_ok);
  EXPECT_EQ(r.report["config"], resolve_config("spine-extract", {{"delta", 0.05}}));
  EXPECT_EQ(r.report["config"]["delta"].get<double>(), 0.05);
}

TEST(Run, CurveFileShapeMatchesBuiltIn) {
  auto out = scratch("curve");
  auto c = frontlab::testing::ellipse(2.0, 1.0, 256);
  write_file_atomic(out / "e.csv", curve_csv(c));
  auto a = run("spine-extract", {{"shape", "fourier:" + (out / "e.csv").string()}});
  auto b = run("spine-extract", json::object());
  ASSERT_EQ(a.exit_code, exit_ok);
  EXPECT_NEAR(a.report["max_abs_f"].get<double>(), b.report["max_abs_f"].get<double>(), 1e-9);
  std::filesystem::remove_all(out);
}

TEST(Io, AtomicWriteLeavesNoTemporary) {
  auto out = scratch("atomic");
  write_file_atomic(out / "sub" / "x.txt", "one");
  write_file_atomic(out / "sub" / "x.txt", "two");
  EXPECT_EQ(read_file(out / "sub" / "x.txt"), "two");
  int n = 0;
  for (const auto& e : std::filesystem::directory_iterator(out / "sub")) n += e.is_regular_file();
  EXPECT_EQ(n, 1);
  std::filesystem::remove_all(out);
}

TEST(Io, CurveCsvRoundTripAndValidation) {
  auto c = frontlab::testing::circle(1.0, 16);
  auto p = parse_curve_csv(curve_csv(c));
  ASSERT_EQ(p.size(), 16u);
  for (int j = 0; j < 16; ++j) {
    EXPECT_EQ(p[j].x, c.node(j).x);
    EXPECT_EQ(p[j].y, c.node(j).y);
  }
  EXPECT_THROW(parse_curve_csv("x,y\n0,1\n"), IoError);
  EXPECT_THROW(parse_curve_csv("s,x,y\n0,1,0\n0.5,0,1\n"), IoError);
  EXPECT_THROW(parse_curve_csv("s,x,y\n0.5,1,0\n0.1,0,1\n0.2,1,1\n0.3,1,1\n0.4,1,1\n0.6,1,1\n0.7,1,1\n0.8,1,1\n"), IoError);
}

TEST(Io, ShortestRoundTripDoubles) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17}) EXPECT_EQ(std::stod(fmt_double(v)), v);
}
