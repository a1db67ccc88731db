#include <CLI11.hpp>
#include <iostream>
#include <map>
#include <sstream>

#include "frontlab/io.hpp"
#include "frontlab/runner.hpp"

using frontlab::runner::json;
namespace rn = frontlab::runner;

namespace {

std::string flag_name(std::string key) {
  for (char& c : key)
    if (c == '_') c = '-';
  return key;
}

// a flag value in the type of the schema default
json coerce(const std::string& key, const json& def, const std::string& text) {
  try {
    if (def.is_boolean()) {
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      throw std::invalid_argument("expected true or false");
    }
    if (def.is_string()) return text;
    if (def.is_array()) {
      json a = json::array();
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) {
        size_t used = 0;
        a.push_back(std::stod(item, &used));
        if (used != item.size()) throw std::invalid_argument("bad number");
      }
      return a;
    }
    size_t used = 0;
    json v;
    if (def.is_number_integer()) v = std::stoll(text, &used);
    else v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("bad number");
    return v;
  } catch (const std::exception& e) {
    throw rn::ConfigError("--" + flag_name(key) + " '" + text + "': " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"frontlab: sharp-front, almost-sharp-front and fractional Sobolev experiments"};
  app.require_subcommand(1);
  app.footer("FRONTLAB_THREADS caps worker threads. Exit codes: 0 pass, 1 verdict failure, 2 config error, 3 numerical failure.");

  struct Sub {
    CLI::App* app;
    std::string config_file;
    std::string out;
    bool print_config = false;
    std::map<std::string, std::string> flags;
  };
  std::map<std::string, Sub> subs;
  for (const auto& name : rn::subcommands()) {
    Sub& s = subs[name];
    s.app = app.add_subcommand(name, "run " + name);
    s.out = "out/" + name;
    s.app->add_option("--config", s.config_file, "JSON config file (keys below; flags override it)");
    s.app->add_option("--out", s.out, "output directory")->capture_default_str();
    s.app->add_flag("--print-config", s.print_config, "print the resolved config and exit");
    json def = rn::default_config(name);
    for (const auto& [key, doc] : rn::schema_docs(name)) {
      const json& d = def[key];
      std::string type = d.is_boolean() ? "BOOL" : d.is_number_integer() ? "INT" : d.is_number() ? "FLOAT" : d.is_array() ? "LIST" : "TEXT";
      s.app->add_option("--" + flag_name(key), s.flags[key], doc + " [default " + d.dump() + "]")->type_name(type);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : rn::exit_config;
  }

  for (auto& [name, s] : subs) {
    if (!s.app->parsed()) continue;
    try {
      json cfg = json::object();
      if (!s.config_file.empty()) cfg = json::parse(frontlab::read_file(s.config_file));
      if (!cfg.is_object()) throw rn::ConfigError("config file must hold a JSON object");
      json def = rn::default_config(name);
      for (const auto& [key, text] : s.flags)
        if (s.app->count("--" + flag_name(key)) > 0) cfg[key] = coerce(key, def[key], text);
      if (s.print_config) {
        std::cout << rn::resolve_config(name, cfg).dump(2) << "\n";
        return rn::exit_ok;
      }
      int code = rn::run_and_write(name, cfg, s.out, std::cerr);
      if (code == rn::exit_ok || code == rn::exit_verdict) std::cerr << "report: " << (std::filesystem::path(s.out) / "report.json").string() << "\n";
      return code;
    } catch (const rn::ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return rn::exit_config;
    } catch (const json::exception& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return rn::exit_config;
    } catch (const frontlab::IoError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return rn::exit_config;
    }
  }
  return rn::exit_config;
}
