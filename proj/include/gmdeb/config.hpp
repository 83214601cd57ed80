#pragma once

// A small TOML subset for simulation configs: `key = value` pairs with
// strings, integers, floats, booleans and single- or multi-line arrays,
// `[table]` headers, `[[array-of-tables]]` headers and `#` comments.
// Dotted keys, inline tables and dates are not supported.

#include "gmdeb/bench.hpp"

#include <map>
#include <string>
#include <vector>

namespace gmdeb {

struct TomlValue {
  enum class Kind { String, Integer, Float, Bool, Array };

  Kind kind = Kind::String;
  std::string str;
  long long integer = 0;
  double real = 0.0;
  bool boolean = false;
  std::vector<TomlValue> array;

  bool is_number() const { return kind == Kind::Integer || kind == Kind::Float; }
  double as_double() const { return kind == Kind::Integer ? static_cast<double>(integer) : real; }
};

struct TomlTable {
  std::map<std::string, TomlValue> values;
  std::map<std::string, TomlTable> tables;
  std::map<std::string, std::vector<TomlTable>> table_arrays;
};

//! ParseError messages carry the line number.
TomlTable parse_toml(const std::string& text);

struct SimulateConfig {
  std::vector<Scenario> scenarios;
  std::vector<Estimator> estimators{Estimator::GMDEB, Estimator::GMDE};
  BenchOptions options;
  //! Output path prefix: <prefix>.csv and <prefix>.json.
  std::string output = "benchmark";
};

//! Top-level keys: seed, n, replications (defaults for scenarios),
//! estimators, jobs (0 leaves the choice to the caller), select_jobs,
//! timing, resolution, g_max, max_iter, tol, output. Each [[scenario]] needs
//! `name` and `distribution`, optionally `params`, `n`, `replications`,
//! `seed`. Errors name the offending key path.
SimulateConfig parse_simulate_config(const std::string& text);

}  // namespace gmdeb
