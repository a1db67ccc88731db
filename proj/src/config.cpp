#include <cmath>
#include <functional>
#include <sstream>

#include "frontlab/io.hpp"
#include "frontlab/runner.hpp"
#include "schema.hpp"

namespace frontlab::runner {

namespace {

using Check = std::function<void(const std::string&, const json&)>;

Check open_range(double lo, double hi) {
  return [=](const std::string& k, const json& v) {
    double x = v.get<double>();
    if (!(x > lo && x < hi))
      throw ConfigError(k + " = " + v.dump() + " outside (" + fmt_double(lo) + ", " + fmt_double(hi) + ")");
  };
}

Check positive() {
  return [](const std::string& k, const json& v) {
    if (!(v.get<double>() > 0.0)) throw ConfigError(k + " must be positive");
  };
}

Check positive_list(double hi = 1e300) {
  return [=](const std::string& k, const json& v) {
    if (v.empty()) throw ConfigError(k + " must not be empty");
    for (const auto& e : v)
      if (!(e.get<double>() > 0.0 && e.get<double>() <= hi)) throw ConfigError(k + " entries must lie in (0, " + fmt_double(hi) + "]");
  };
}

Check min_int(long long lo) {
  return [=](const std::string& k, const json& v) {
    if (v.get<long long>() < lo) throw ConfigError(k + " must be at least " + std::to_string(lo));
  };
}

Check one_of(std::vector<std::string> opts) {
  return [=](const std::string& k, const json& v) {
    for (const auto& o : opts)
      if (v.get<std::string>() == o) return;
    std::string all;
    for (const auto& o : opts) all += (all.empty() ? "" : "|") + o;
    throw ConfigError(k + " must be one of " + all);
  };
}

Check shape_spec() {
  return [](const std::string& k, const json& v) {
    try {
      (void)parse_shape_spec(v.get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(k + ": " + e.what());
    }
  };
}

Check band() {
  return [](const std::string& k, const json& v) {
    if (v.size() != 2 || !(v[0].get<double>() < v[1].get<double>())) throw ConfigError(k + " must be [lo, hi] with lo < hi");
  };
}

Check any() {
  return [](const std::string&, const json&) {};
}

struct Key {
  std::string name;
  json value;
  std::string doc;
  Check check;
};

json geometric(double first, int n) {
  json a = json::array();
  for (int k = 0; k < n; ++k) a.push_back(std::ldexp(first, -k));
  return a;
}

const std::map<std::string, std::vector<Key>>& schemas() {
  static const std::map<std::string, std::vector<Key>> s = [] {
    std::map<std::string, std::vector<Key>> m;
    m["asymptotics-check"] = {
        {"alpha", 0.5, "kernel exponent in (0,1)", open_range(0, 1)},
        {"lambda", 1.0, "g = lambda^2 msin^2", positive()},
        {"amplitude", "one", "a(s): one | cos (1 + 0.3 sin 2 pi s)", one_of({"one", "cos"})},
        {"taus", geometric(0.125, 10), "tau sweep", positive_list()},
        {"slope_tolerance", 0.3, "allowed |slope - (2 - alpha)|", positive()},
        {"min_r2", 0.95, "minimum r^2 of the fit", open_range(0, 1.0000001)},
    };
    m["cde-evolve"] = {
        {"shape", "ellipse:2,1", "circle[:r] | ellipse:a,b | fourier:<curve csv>", shape_spec()},
        {"nodes", 256, "nodes on the curve", min_int(16)},
        {"alpha", 0.5, "kernel exponent in (0,1)", open_range(0, 1)},
        {"dt", 5e-4, "RK4 step", positive()},
        {"steps", 100, "number of steps", min_int(0)},
        {"write_every", 0, "curve CSV every k steps (0: first and last only)", min_int(0)},
        {"area_tolerance", 1e-5, "allowed relative area drift", positive()},
    };
    m["rate-experiment"] = {
        {"shape", "ellipse:2,1", "circle[:r] | ellipse:a,b | fourier:<curve csv>", shape_spec()},
        {"nodes", 256, "nodes on the base curve", min_int(16)},
        {"alpha", 0.5, "kernel exponent in (0,1)", open_range(0, 1)},
        {"candidate", "both", "spine | compatible | both", one_of({"spine", "compatible", "both"})},
        {"deltas", json::array({0.02, 0.01, 0.005, 0.0025}), "strip widths", positive_list(0.5)},
        {"epsilon", 0.2, "profile shift amplitude", any()},
        {"width", 0.7, "half-width of the transition layer in xi", open_range(0, 1)},
        {"dt_factor", 0.1, "dt_micro = dt_factor delta^2 / max|u|", positive()},
        {"spine_band", json::array({1.2, 1.8}), "accepted spine slope", band()},
        {"compatible_band", json::array({0.2, 1.0}), "accepted compatible-curve slope", band()},
        {"min_gap", 0.5, "required slope(spine) - slope(compatible)", any()},
        {"consistency", 0.05, "e_delta at the smallest delta relative to the v_CDE pairing", positive()},
        {"plot", false, "also write gnuplot .dat and an SVG chart", any()},
    };
    m["sobolev-scaling"] = {
        {"family", "thin-rectangles", "thin-rectangles | disk-weighted | dilation",
         one_of({"thin-rectangles", "disk-weighted", "dilation"})},
        {"s", 0.25, "Sobolev exponent in (0,1/2)", open_range(0, 0.5)},
        {"s_prime", 0.4, "Holder exponent of |x|^s' (disk-weighted), > s", open_range(0, 1)},
        {"eps", json::array({1.0, 0.5, 0.25, 0.125}), "rectangle heights (width 1)", positive_list(1.0)},
        {"radii", json::array({0.5, 0.25, 0.125, 0.0625}), "disk radii (disk-weighted)", positive_list(0.5641895835477563)},
        {"lambda", 2.0, "dilation factor (dilation)", positive()},
        {"budget", 400000, "Monte-Carlo pairs per estimate", min_int(1000)},
        {"strata", 16, "radial strata", min_int(2)},
        {"seed", 20240917, "RNG seed", min_int(0)},
        {"safety", 2.0, "safety factor on the fitted constant", positive()},
        {"plot", false, "also write gnuplot .dat and an SVG chart", any()},
    };
    m["spine-extract"] = {
        {"shape", "ellipse:2,1", "circle[:r] | ellipse:a,b | fourier:<curve csv>", shape_spec()},
        {"nodes", 128, "nodes on the base curve", min_int(16)},
        {"alpha", 0.5, "kernel exponent in (0,1)", open_range(0, 1)},
        {"delta", 0.02, "strip width", open_range(0, 0.5)},
        {"profile", "shifted", "odd | shifted | constant-shift", one_of({"odd", "shifted", "constant-shift"})},
        {"epsilon", 0.2, "profile shift amplitude", any()},
        {"width", 0.7, "half-width of the transition layer in xi", open_range(0, 1)},
        {"identity_tolerance", 1e-10, "allowed |f + h|", positive()},
        {"cancellation_tolerance", 1e-8, "allowed |cancellation integral|", positive()},
    };
    m["asf-residual"] = {
        {"shape", "circle", "circle[:r] | ellipse:a,b | fourier:<curve csv>", shape_spec()},
        {"nodes", 64, "nodes on the base curve", min_int(16)},
        {"alpha", 0.5, "kernel exponent in (0,1)", open_range(0, 1)},
        {"delta", 0.02, "strip width", open_range(0, 0.5)},
        {"profile", "odd", "odd | shifted | constant-shift", one_of({"odd", "shifted", "constant-shift"})},
        {"epsilon", 0.0, "profile shift amplitude", any()},
        {"width", 1.0, "half-width of the transition layer in xi", open_range(0, 1.0000001)},
        {"xi_points", 41, "uniform xi grid size", min_int(3)},
        {"z_tau", "cde", "normal velocity of the base curve: cde | zero", one_of({"cde", "zero"})},
        {"residual_tolerance", 1e-6, "allowed max |residual|", positive()},
    };
    return m;
  }();
  return s;
}

const std::vector<Key>& keys_of(const std::string& sub) {
  auto it = schemas().find(sub);
  if (it == schemas().end()) throw ConfigError("unknown subcommand: " + sub);
  return it->second;
}

bool same_kind(const json& def, const json& v) {
  if (def.is_boolean()) return v.is_boolean();
  if (def.is_string()) return v.is_string();
  if (def.is_number_integer()) return v.is_number_integer() || (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>());
  if (def.is_number()) return v.is_number();
  if (def.is_array()) {
    if (!v.is_array()) return false;
    for (const auto& e : v)
      if (!e.is_number()) return false;
    return true;
  }
  return false;
}

}  // namespace

ShapeSpec parse_shape_spec(const std::string& s) {
  ShapeSpec sp;
  auto colon = s.find(':');
  std::string head = s.substr(0, colon), tail = colon == std::string::npos ? "" : s.substr(colon + 1);
  auto numbers = [&](const std::string& t) {
    std::vector<double> v;
    std::stringstream ss(t);
    std::string item;
    while (std::getline(ss, item, ',')) {
      size_t used = 0;
      double x = 0.0;
      try {
        x = std::stod(item, &used);
      } catch (const std::exception&) {
        throw std::invalid_argument("bad number '" + item + "' in shape");
      }
      if (used != item.size() || !(x > 0.0)) throw std::invalid_argument("shape parameters must be positive numbers");
      v.push_back(x);
    }
    return v;
  };
  if (head == "circle") {
    sp.kind = ShapeSpec::circle;
    if (!tail.empty()) {
      auto v = numbers(tail);
      if (v.size() != 1) throw std::invalid_argument("circle takes one radius");
      sp.a = v[0];
    }
  } else if (head == "ellipse") {
    auto v = numbers(tail);
    if (v.size() != 2) throw std::invalid_argument("ellipse needs a,b");
    sp.kind = ShapeSpec::ellipse;
    sp.a = v[0];
    sp.b = v[1];
  } else if (head == "fourier") {
    if (tail.empty()) throw std::invalid_argument("fourier needs a curve csv path");
    sp.kind = ShapeSpec::file;
    sp.path = tail;
  } else {
    throw std::invalid_argument("unknown shape '" + s + "'");
  }
  return sp;
}

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> v = {"cde-evolve",  "asymptotics-check", "rate-experiment",
                                             "sobolev-scaling", "spine-extract", "asf-residual"};
  return v;
}

std::string schema_help(const std::string& sub) {
  std::ostringstream o;
  for (const auto& k : keys_of(sub)) o << "  " << k.name << " (default " << k.value.dump() << "): " << k.doc << "\n";
  return o.str();
}

std::vector<std::pair<std::string, std::string>> schema_docs(const std::string& sub) {
  std::vector<std::pair<std::string, std::string>> v;
  for (const auto& k : keys_of(sub)) v.emplace_back(k.name, k.doc);
  return v;
}

json default_config(const std::string& sub) {
  json j = json::object();
  for (const auto& k : keys_of(sub)) j[k.name] = k.value;
  return j;
}

json resolve_config(const std::string& sub, const json& user) {
  const auto& keys = keys_of(sub);
  if (!user.is_null() && !user.is_object()) throw ConfigError("config must be a JSON object");
  json out = json::object();
  if (user.is_object())
    for (const auto& [name, v] : user.items()) {
      bool known = false;
      for (const auto& k : keys) known = known || k.name == name;
      if (!known) throw ConfigError("unknown key '" + name + "' for " + sub);
    }
  for (const auto& k : keys) {
    json v = (user.is_object() && user.contains(k.name)) ? user.at(k.name) : k.value;
    if (!same_kind(k.value, v)) throw ConfigError(k.name + " has the wrong type (expected like " + k.value.dump() + ")");
    if (k.value.is_number_integer()) v = v.get<long long>();
    if (k.value.is_number_float()) v = v.get<double>();
    if (k.value.is_array()) {
      json a = json::array();
      for (const auto& e : v) a.push_back(e.get<double>());
      v = a;
    }
    k.check(k.name, v);
    out[k.name] = v;
  }
  if (sub == "sobolev-scaling" && out["family"] == "disk-weighted" && !(out["s"].get<double>() < out["s_prime"].get<double>()))
    throw ConfigError("s must be below s_prime");
  return out;
}

}  // namespace frontlab::runner
