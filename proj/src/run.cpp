#include <chrono>
#include <cstdio>
#include <ostream>

#include "frontlab/asymptotics.hpp"
#include "frontlab/cde.hpp"
#include "frontlab/io.hpp"
#include "frontlab/runner.hpp"
#include "frontlab/sobolev.hpp"
#include "frontlab/spine.hpp"
#include "schema.hpp"

namespace frontlab::runner {

ClosedCurve build_shape(const ShapeSpec& sp, int m) {
  std::vector<Vec2> p;
  if (sp.kind == ShapeSpec::file) {
    p = parse_curve_csv(read_file(sp.path));
    if (shoelace_area(p) < 0.0) std::reverse(p.begin(), p.end());
    return resample_uniform_speed(p, m);
  }
  const int n = 4 * m;
  double a = sp.a, b = sp.kind == ShapeSpec::circle ? sp.a : sp.b;
  for (int i = 0; i < n; ++i) {
    double t = 2.0 * pi * i / n;
    p.push_back({a * std::cos(t), b * std::sin(t)});
  }
  return resample_uniform_speed(p, m);
}

namespace {

json fit_json(const RateFit& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r_squared},
          {"window", {f.window_lo, f.window_hi}}, {"used", f.used}, {"flagged", f.flagged}, {"note", f.note}};
}

std::vector<double> as_vec(const json& a) {
  std::vector<double> v;
  for (const auto& e : a) v.push_back(e.get<double>());
  return v;
}

void add(RunResult& r, std::string name, bool pass, std::string detail) {
  r.verdicts.push_back({std::move(name), pass, std::move(detail)});
}

std::string num(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.4g", v);
  return b;
}

ProfileSpec profile_from(const json& c, const std::string& family) {
  ProfileSpec p;
  p.width = c["width"].get<double>();
  p.epsilon = c["epsilon"].get<double>();
  if (family == "odd") {
    p.family = ProfileSpec::Family::odd_smoothstep;
  } else {
    p.family = ProfileSpec::Family::shifted;
    if (family == "constant-shift") p.shift = constant_shift();
  }
  return p;
}

void asymptotics_check(const json& c, RunResult& r) {
  const double alpha = c["alpha"], lam = c["lambda"];
  ExpansionInput in;
  in.alpha = alpha;
  in.g = [lam](double s) { return lam * lam * msin(s) * msin(s); };
  if (c["amplitude"] == "one")
    in.a = [](double) { return 1.0; };
  else
    in.a = [](double s) { return 1.0 + 0.3 * std::sin(2.0 * pi * s); };
  auto ex = expand_I(in);
  auto sw = remainder_order(in, as_vec(c["taus"]));
  CsvTable t({"tau", "I_direct", "I_pred", "abs_err"});
  for (size_t i = 0; i < sw.tau.size(); ++i) t.row({sw.tau[i], sw.direct[i], sw.predicted[i], sw.abs_err[i]});
  r.files["asymptotics.csv"] = t.str();
  r.report["expansion"] = {{"leading", ex.leading}, {"constant", ex.constant}, {"regularized", ex.regularized}, {"G", ex.G},
                           {"predicted_order", ex.predicted_order}};
  r.report["fit"] = fit_json(sw.fit);
  double tol = c["slope_tolerance"], r2 = c["min_r2"];
  add(r, "remainder order 2 - alpha", std::fabs(sw.fit.slope - (2.0 - alpha)) <= tol,
      "slope " + num(sw.fit.slope) + " vs " + num(2.0 - alpha));
  add(r, "remainder fit r^2", sw.fit.r_squared >= r2, "r2 " + num(sw.fit.r_squared));
}

void cde_evolve(const json& c, RunResult& r) {
  const int M = c["nodes"], steps = c["steps"], every = c["write_every"];
  const double dt = c["dt"];
  auto st = FrontState::initial(build_shape(parse_shape_spec(c["shape"]), M), c["alpha"]);
  CsvTable diag({"step", "t", "length", "area", "max_curvature"});
  auto put = [&](const FrontState& s, int n) {
    auto d = diagnose(s, n);
    diag.row({static_cast<double>(n), d.t, d.length, d.area, d.max_curvature});
    char name[48];
    std::snprintf(name, sizeof name, "curves/curve_%05d.csv", n);
    if (n == 0 || n == steps || (every > 0 && n % every == 0)) r.files[name] = curve_csv(s.curve);
    return d;
  };
  put(st, 0);
  FrontState cur = st;
  double drift = 0.0, min_ca = 1e300;
  for (int n = 1; n <= steps; ++n) {
    cur = step_front(cur, dt);
    auto d = put(cur, n);
    drift = std::max(drift, std::fabs(d.area - st.area0) / st.area0);
    min_ca = std::min(min_ca, d.min_chord_arc);
  }
  r.files["diagnostics.csv"] = diag.str();
  r.report["final_time"] = cur.time;
  r.report["max_area_drift"] = drift;
  r.report["min_chord_arc"] = steps > 0 ? min_ca : st.curve.chord_arc_constant();
  add(r, "area conservation", drift <= c["area_tolerance"].get<double>(), "relative drift " + num(drift));
}

void rate_experiment(const json& c, RunResult& r) {
  const auto shape = build_shape(parse_shape_spec(c["shape"]), c["nodes"]);
  ProfileSpec prof = profile_from(c, "shifted");
  TransportOptions opt;
  opt.dt_factor = c["dt_factor"];
  std::vector<Candidate> cands;
  if (c["candidate"] != "compatible") cands.push_back(Candidate::spine);
  if (c["candidate"] != "spine") cands.push_back(Candidate::compatible);
  std::map<Candidate, double> slope;
  std::vector<std::vector<double>> px, py;
  std::vector<std::string> names;
  for (Candidate k : cands) {
    auto ex = transported_curve_rate(shape, prof, c["alpha"], as_vec(c["deltas"]), k, opt);
    std::string nm = candidate_name(k);
    CsvTable t({"delta", "error"});
    json rows = json::array();
    std::vector<double> xs, ys;
    for (const auto& s : ex.samples) {
      t.row({s.delta, s.error});
      xs.push_back(s.delta);
      ys.push_back(s.error);
      rows.push_back({{"delta", s.delta}, {"error", s.error}, {"dt", s.dt}, {"max_speed", s.max_speed},
                      {"calibration", s.calibration}, {"cde_pairing", s.cde_pairing}});
    }
    r.files["rate_" + nm + ".csv"] = t.str();
    if (c["plot"].get<bool>()) {
      std::string dat = "# delta error\n";
      for (size_t i = 0; i < xs.size(); ++i) dat += fmt_double(xs[i]) + " " + fmt_double(ys[i]) + "\n";
      r.files["rate_" + nm + ".dat"] = dat;
    }
    px.push_back(xs);
    py.push_back(ys);
    names.push_back(nm);
    r.report[nm] = fit_json(ex.fit);
    r.report[nm]["samples"] = rows;
    slope[k] = ex.fit.slope;
    auto bandj = c[k == Candidate::spine ? "spine_band" : "compatible_band"];
    bool in = ex.fit.slope >= bandj[0].get<double>() && ex.fit.slope <= bandj[1].get<double>();
    add(r, nm + " weak-form rate", in && !ex.fit.flagged,
        "slope " + num(ex.fit.slope) + " in [" + num(bandj[0]) + ", " + num(bandj[1]) + "]" +
            (ex.fit.flagged ? " (inconclusive: " + ex.fit.note + ")" : ""));
    const auto& last = ex.samples.back();
    add(r, nm + " weak-form consistency", last.error <= c["consistency"].get<double>() * last.cde_pairing,
        "e " + num(last.error) + " vs pairing " + num(last.cde_pairing));
  }
  if (cands.size() == 2)
    add(r, "rate ordering", slope[Candidate::spine] >= slope[Candidate::compatible] + c["min_gap"].get<double>(),
        "gap " + num(slope[Candidate::spine] - slope[Candidate::compatible]));
  if (c["plot"].get<bool>()) r.files["rate.svg"] = loglog_svg("weak-form error vs delta", names, px, py);
}

void sobolev_scaling(const json& c, RunResult& r) {
  SamplerConfig cfg;
  cfg.budget = c["budget"];
  cfg.strata = c["strata"];
  cfg.seed = c["seed"].get<std::uint64_t>();
  const double s = c["s"], safety = c["safety"];
  CsvTable t({"area", "estimate", "std_error"});
  const std::string fam = c["family"];
  if (fam == "dilation") {
    const double lam = c["lambda"];
    auto a = gagliardo_indicator(Region::disk(1.0), s, cfg);
    SamplerConfig c2 = cfg;
    c2.seed = cfg.seed + 1;
    auto b = gagliardo_indicator(Region::disk(lam), s, c2);
    t.row({pi, a.value, a.std_error});
    t.row({pi * lam * lam, b.value, b.std_error});
    double k = std::pow(lam, 2.0 - 2.0 * s), sig = std::hypot(b.std_error, k * a.std_error);
    r.report["ratio"] = b.value / a.value;
    r.report["expected_ratio"] = k;
    add(r, "dilation covariance", std::fabs(b.value - k * a.value) <= 3.0 * sig,
        "|diff| " + num(std::fabs(b.value - k * a.value)) + " vs 3 sigma " + num(3.0 * sig));
  } else {
    BoundCheck b = fam == "thin-rectangles" ? indicator_scaling_check(as_vec(c["eps"]), s, cfg, safety)
                                            : weighted_scaling_check(as_vec(c["radii"]), s, c["s_prime"], cfg, safety);
    for (size_t i = 0; i < b.area.size(); ++i) t.row({b.area[i], b.estimate[i], b.std_error[i]});
    r.report["constant"] = b.constant;
    r.report["bound_terms"] = b.bound_term;
    r.report["fit"] = fit_json(b.fit);
    add(r, fam == "thin-rectangles" ? "indicator bound" : "two-term weighted bound", b.holds,
        "C " + num(b.constant) + ", safety " + num(safety));
    if (c["plot"].get<bool>()) {
      std::string dat = "# area estimate\n";
      for (size_t i = 0; i < b.area.size(); ++i) dat += fmt_double(b.area[i]) + " " + fmt_double(b.estimate[i]) + "\n";
      r.files["sobolev.dat"] = dat;
      std::vector<double> bound;
      for (size_t i = 0; i < b.area.size(); ++i) bound.push_back(safety * b.constant * b.bound_term[i]);
      r.files["sobolev.svg"] = loglog_svg("seminorm estimate vs area", {"estimate", "bound"}, {b.area, b.area}, {b.estimate, bound});
    }
  }
  r.files["sobolev.csv"] = t.str();
}

void spine_extract(const json& c, RunResult& r) {
  const auto shape = build_shape(parse_shape_spec(c["shape"]), c["nodes"]);
  auto a = build_asf(shape, c["delta"], profile_from(c, c["profile"]), c["alpha"]);
  auto sp = extract_spine(a);
  auto hf = h_function(a);
  const int M = shape.size();
  double fmax = 0.0, idgap = 0.0;
  for (int j = 0; j < M; ++j) {
    fmax = std::max(fmax, std::fabs(sp.f[j]));
    idgap = std::max(idgap, std::fabs(sp.f[j] + hf.h[j]));
  }
  const double base = fmax > 0.0 ? fmax : 1.0;
  std::vector<std::vector<double>> canc;
  double cmax = 0.0;
  for (double k : {1.0, 2.0, 5.0}) {
    canc.push_back(spine_cancellation(a, sp, k * base));
    for (double v : canc.back()) cmax = std::max(cmax, std::fabs(v));
  }
  CsvTable t({"s", "f", "h", "cancel_1", "cancel_2", "cancel_5"});
  for (int j = 0; j < M; ++j) t.row({shape.param(j), sp.f[j], hf.h[j], canc[0][j], canc[1][j], canc[2][j]});
  r.files["spine_f.csv"] = t.str();
  r.files["spine.csv"] = curve_csv(sp.spine);
  json pairs = json::array();
  for (const auto& g : standard_battery(shape)) {
    auto p = spine_pairing_check(a, sp, g);
    pairs.push_back({{"centre", {g.centre.x, g.centre.y}}, {"radius", g.radius}, {"gap", p.gap}, {"c2_delta2", p.c2_delta2}});
  }
  r.report["max_abs_f"] = fmax;
  r.report["identity_residual"] = sp.identity_residual;
  r.report["pairing"] = pairs;
  add(r, "f = -h", idgap <= c["identity_tolerance"].get<double>(), "max |f + h| " + num(idgap));
  add(r, "spine cancellation", cmax <= c["cancellation_tolerance"].get<double>(), "max " + num(cmax) + " over 3 values of C");
}

void asf_residual_run(const json& c, RunResult& r) {
  const auto shape = build_shape(parse_shape_spec(c["shape"]), c["nodes"]);
  auto a = build_asf(shape, c["delta"], profile_from(c, c["profile"]), c["alpha"]);
  std::vector<double> zn(shape.size(), 0.0);
  if (c["z_tau"] == "cde") zn = sharp_front_velocity(shape, a.alpha).normal;
  Sampler2 zero = [](double, double) { return 0.0; };
  auto res = asf_residual(a, zero, zn, uniform_xi_grid(c["xi_points"]));
  CsvTable t({"s", "xi", "residual"});
  std::vector<std::string> hdr{"s", "xi"};
  for (const auto& n : ResidualField::names) hdr.push_back(n);
  CsvTable terms(hdr);
  double mx = 0.0;
  json tmax = json::object();
  std::vector<double> tm(ResidualField::n_terms, 0.0);
  for (size_t i = 0; i < res.s.size(); ++i)
    for (size_t k = 0; k < res.xi.size(); ++k) {
      t.row({res.s[i], res.xi[k], res.at(i, k)});
      std::vector<double> row{res.s[i], res.xi[k]};
      for (int q = 0; q < ResidualField::n_terms; ++q) {
        row.push_back(res.term(q, i, k));
        tm[q] = std::max(tm[q], std::fabs(res.term(q, i, k)));
      }
      terms.row(row);
      mx = std::max(mx, std::fabs(res.at(i, k)));
    }
  for (int q = 0; q < ResidualField::n_terms; ++q) tmax[ResidualField::names[q]] = tm[q];
  r.files["residual.csv"] = t.str();
  r.files["residual_terms.csv"] = terms.str();
  r.report["max_abs_residual"] = mx;
  r.report["max_abs_term"] = tmax;
  r.report["error_estimate"] = res.error_estimate;
  add(r, "residual size", mx <= c["residual_tolerance"].get<double>(), "max |residual| " + num(mx));
}

}  // namespace

RunResult run(const std::string& sub, const json& user_config) {
  RunResult r;
  json cfg;
  try {
    cfg = resolve_config(sub, user_config);
  } catch (const ConfigError& e) {
    r.exit_code = exit_config;
    r.error = e.what();
    return r;
  }
  r.report["subcommand"] = sub;
  r.report["config"] = cfg;
  r.report["threads"] = thread_count();
  auto t0 = std::chrono::steady_clock::now();
  try {
    if (sub == "asymptotics-check") asymptotics_check(cfg, r);
    else if (sub == "cde-evolve") cde_evolve(cfg, r);
    else if (sub == "rate-experiment") rate_experiment(cfg, r);
    else if (sub == "sobolev-scaling") sobolev_scaling(cfg, r);
    else if (sub == "spine-extract") spine_extract(cfg, r);
    else asf_residual_run(cfg, r);
  } catch (const InconclusiveFit& e) {
    add(r, "rate fit", false, std::string("inconclusive: ") + e.what());
  } catch (const IoError& e) {
    // unreadable input curve
    r.exit_code = exit_config;
    r.error = e.what();
    r.files.clear();
    return r;
  } catch (const std::invalid_argument& e) {
    // bad dt, saturation margin, unreadable parameters
    r.exit_code = exit_config;
    r.error = e.what();
    r.files.clear();
    return r;
  } catch (const std::exception& e) {
    r.exit_code = exit_numerical;
    r.error = e.what();
    r.files.clear();
    return r;
  }
  json v = json::array();
  bool ok = true;
  for (const auto& x : r.verdicts) {
    v.push_back({{"name", x.name}, {"pass", x.pass}, {"detail", x.detail}});
    ok = ok && x.pass;
  }
  r.report["verdicts"] = v;
  r.report["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.report["files"] = json::array();
  for (const auto& [name, _] : r.files) r.report["files"].push_back(name);
  r.exit_code = ok ? exit_ok : exit_verdict;
  return r;
}

int run_and_write(const std::string& sub, const json& user_config, const std::filesystem::path& out_dir, std::ostream& log) {
  RunResult r = run(sub, user_config);
  if (r.exit_code == exit_config || r.exit_code == exit_numerical) {
    log << (r.exit_code == exit_config ? "config error: " : "numerical failure: ") << r.error << "\n";
    return r.exit_code;
  }
  try {
    for (const auto& [name, content] : r.files) write_file_atomic(out_dir / name, content);
    write_file_atomic(out_dir / "report.json", r.report.dump(2) + "\n");
  } catch (const std::exception& e) {
    log << "output failure: " << e.what() << "\n";
    return exit_numerical;
  }
  for (const auto& v : r.verdicts) log << (v.pass ? "PASS " : "FAIL ") << v.name << ": " << v.detail << "\n";
  return r.exit_code;
}

}  // namespace frontlab::runner
