#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace frontlab::runner {

using json = nlohmann::ordered_json;

enum ExitCode : int { exit_ok = 0, exit_verdict = 1, exit_config = 2, exit_numerical = 3 };

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Verdict {
  std::string name;       // invariant or criterion it checks
  bool pass = false;
  std::string detail;
};

struct RunResult {
  int exit_code = exit_ok;
  json report;
  std::map<std::string, std::string> files;  // relative path -> content, written only on success or verdict failure
  std::vector<Verdict> verdicts;
  std::string error;
};

const std::vector<std::string>& subcommands();

/// One line per key: name, default, meaning.
std::string schema_help(const std::string& sub);

/// (key, meaning) in schema order.
std::vector<std::pair<std::string, std::string>> schema_docs(const std::string& sub);

json default_config(const std::string& sub);

/// Defaults merged with `user`; unknown keys, wrong types and out-of-range values throw ConfigError.
json resolve_config(const std::string& sub, const json& user);

/// Runs without touching the filesystem (except reading input curves).
RunResult run(const std::string& sub, const json& user_config);

/// run() then, unless the exit code is 2 or 3, writes every file and report.json atomically under out_dir.
int run_and_write(const std::string& sub, const json& user_config, const std::filesystem::path& out_dir, std::ostream& log);

}  // namespace frontlab::runner
