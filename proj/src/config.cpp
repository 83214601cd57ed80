#include "gmdeb/config.hpp"

#include "gmdeb/errors.hpp"

#include <cctype>
#include <charconv>
#include <set>
#include <sstream>

namespace gmdeb {

namespace {

class Reader {
 public:
  explicit Reader(const std::string& text) : text_(text) {}

  TomlTable parse() {
    TomlTable root;
    TomlTable* current = &root;
    while (!eof()) {
      skip_ws_and_comments(true);
      if (eof()) {
        break;
      }
      if (peek() == '[') {
        current = header(root);
      } else {
        key_value(*current);
      }
    }
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("config line " + std::to_string(line_) + ": " + what);
  }

  bool eof() const { return pos_ >= text_.size(); }
  char peek() const { return eof() ? '\0' : text_[pos_]; }
  char get() {
    const char c = text_[pos_++];
    if (c == '\n') {
      ++line_;
    }
    return c;
  }

  void skip_ws_and_comments(bool newlines) {
    while (!eof()) {
      const char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || (newlines && c == '\n')) {
        get();
      } else if (c == '#') {
        while (!eof() && peek() != '\n') {
          get();
        }
      } else {
        break;
      }
    }
  }

  void end_of_line() {
    skip_ws_and_comments(false);
    if (!eof() && peek() != '\n') {
      fail(std::string("unexpected '") + peek() + "' after value");
    }
  }

  std::string bare_key() {
    std::string k;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' ||
                      peek() == '-')) {
      k.push_back(get());
    }
    if (k.empty()) {
      fail("expected a key");
    }
    return k;
  }

  TomlTable* header(TomlTable& root) {
    get();
    const bool array = peek() == '[';
    if (array) {
      get();
    }
    skip_ws_and_comments(false);
    const std::string name = bare_key();
    skip_ws_and_comments(false);
    if (get() != ']' || (array && get() != ']')) {
      fail("malformed table header");
    }
    end_of_line();
    if (array) {
      auto& vec = root.table_arrays[name];
      vec.emplace_back();
      return &vec.back();
    }
    if (root.tables.count(name) != 0) {
      fail("table [" + name + "] defined twice");
    }
    return &root.tables[name];
  }

  void key_value(TomlTable& t) {
    const std::string key = bare_key();
    skip_ws_and_comments(false);
    if (get() != '=') {
      fail("expected '=' after key '" + key + "'");
    }
    skip_ws_and_comments(false);
    if (t.values.count(key) != 0) {
      fail("duplicate key '" + key + "'");
    }
    t.values[key] = value();
    end_of_line();
  }

  TomlValue value() {
    if (eof()) {
      fail("missing value");
    }
    const char c = peek();
    if (c == '"') {
      return string_value();
    }
    if (c == '[') {
      return array_value();
    }
    std::string tok;
    while (!eof() && peek() != ',' && peek() != ']' && peek() != '\n' && peek() != '#' &&
           peek() != ' ' && peek() != '\t' && peek() != '\r') {
      tok.push_back(get());
    }
    TomlValue v;
    if (tok == "true" || tok == "false") {
      v.kind = TomlValue::Kind::Bool;
      v.boolean = tok == "true";
      return v;
    }
    std::string digits;
    for (char ch : tok) {
      if (ch != '_') {
        digits.push_back(ch);
      }
    }
    const char* first = digits.data();
    const char* last = digits.data() + digits.size();
    if (first != last && *first == '+') {
      ++first;
    }
    const bool looks_float = digits.find_first_of(".eE") != std::string::npos ||
                             digits == "inf" || digits == "nan";
    if (!looks_float) {
      long long iv = 0;
      const auto [p, ec] = std::from_chars(first, last, iv);
      if (ec == std::errc() && p == last && first != last) {
        v.kind = TomlValue::Kind::Integer;
        v.integer = iv;
        return v;
      }
    } else {
      double dv = 0.0;
      const auto [p, ec] = std::from_chars(first, last, dv);
      if (ec == std::errc() && p == last) {
        v.kind = TomlValue::Kind::Float;
        v.real = dv;
        return v;
      }
    }
    fail("cannot parse value '" + tok + "'");
  }

  TomlValue string_value() {
    get();
    TomlValue v;
    v.kind = TomlValue::Kind::String;
    while (true) {
      if (eof() || peek() == '\n') {
        fail("unterminated string");
      }
      const char c = get();
      if (c == '"') {
        break;
      }
      if (c == '\\') {
        const char e = eof() ? '\0' : get();
        switch (e) {
          case 'n':
            v.str.push_back('\n');
            break;
          case 't':
            v.str.push_back('\t');
            break;
          case '"':
          case '\\':
            v.str.push_back(e);
            break;
          default:
            fail("unsupported escape sequence");
        }
      } else {
        v.str.push_back(c);
      }
    }
    return v;
  }

  TomlValue array_value() {
    get();
    TomlValue v;
    v.kind = TomlValue::Kind::Array;
    skip_ws_and_comments(true);
    while (peek() != ']') {
      v.array.push_back(value());
      skip_ws_and_comments(true);
      if (peek() == ',') {
        get();
        skip_ws_and_comments(true);
      } else if (peek() != ']') {
        fail("expected ',' or ']' in array");
      }
    }
    get();
    return v;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
  throw ParseError("config key '" + path + "': " + what);
}

const TomlValue* find(const TomlTable& t, const std::string& key) {
  const auto it = t.values.find(key);
  return it == t.values.end() ? nullptr : &it->second;
}

long long get_int(const TomlTable& t, const std::string& key, const std::string& path,
                  long long fallback) {
  const TomlValue* v = find(t, key);
  if (!v) {
    return fallback;
  }
  if (v->kind != TomlValue::Kind::Integer) {
    config_error(path, "expected an integer");
  }
  return v->integer;
}

double get_double(const TomlTable& t, const std::string& key, const std::string& path,
                  double fallback) {
  const TomlValue* v = find(t, key);
  if (!v) {
    return fallback;
  }
  if (!v->is_number()) {
    config_error(path, "expected a number");
  }
  return v->as_double();
}

std::string get_string(const TomlTable& t, const std::string& key, const std::string& path) {
  const TomlValue* v = find(t, key);
  if (!v) {
    config_error(path, "is required");
  }
  if (v->kind != TomlValue::Kind::String) {
    config_error(path, "expected a string");
  }
  return v->str;
}

void reject_unknown(const TomlTable& t, const std::set<std::string>& known,
                    const std::string& prefix) {
  for (const auto& [k, v] : t.values) {
    if (known.count(k) == 0) {
      config_error(prefix + k, "unknown key");
    }
  }
}

}  // namespace

TomlTable parse_toml(const std::string& text) { return Reader(text).parse(); }

SimulateConfig parse_simulate_config(const std::string& text) {
  const TomlTable root = parse_toml(text);
  reject_unknown(root,
                 {"seed", "n", "replications", "estimators", "jobs", "select_jobs", "timing",
                  "resolution", "g_max", "max_iter", "tol", "output"},
                 "");
  for (const auto& [name, t] : root.tables) {
    config_error(name, "unknown table");
  }
  for (const auto& [name, t] : root.table_arrays) {
    if (name != "scenario") {
      config_error(name, "unknown table array");
    }
  }

  SimulateConfig cfg;
  const auto seed = get_int(root, "seed", "seed", 1);
  const auto n_default = get_int(root, "n", "n", 200);
  const auto reps_default = get_int(root, "replications", "replications", 100);
  cfg.options.jobs = static_cast<int>(get_int(root, "jobs", "jobs", 0));
  cfg.options.select_jobs = static_cast<int>(get_int(root, "select_jobs", "select_jobs", 1));
  cfg.options.resolution = static_cast<int>(get_int(root, "resolution", "resolution", 8192));
  cfg.options.fit.max_iter = static_cast<int>(get_int(root, "max_iter", "max_iter", 500));
  cfg.options.fit.tol = get_double(root, "tol", "tol", 1e-8);
  const auto g_max = get_int(root, "g_max", "g_max", 9);
  if (g_max < 1) {
    config_error("g_max", "must be >= 1");
  }
  if (cfg.options.resolution < 2) {
    config_error("resolution", "must be >= 2");
  }
  if (cfg.options.jobs < 0) {
    config_error("jobs", "must be >= 0 (0 defers to GMDEB_JOBS)");
  }
  if (cfg.options.select_jobs < 1) {
    config_error("select_jobs", "must be >= 1");
  }
  cfg.options.g_range.clear();
  for (long long g = 1; g <= g_max; ++g) {
    cfg.options.g_range.push_back(static_cast<int>(g));
  }
  if (const TomlValue* v = find(root, "timing")) {
    if (v->kind != TomlValue::Kind::Bool) {
      config_error("timing", "expected a boolean");
    }
    cfg.options.timing = v->boolean;
  }
  if (find(root, "output")) {
    cfg.output = get_string(root, "output", "output");
  }
  if (const TomlValue* v = find(root, "estimators")) {
    if (v->kind != TomlValue::Kind::Array || v->array.empty()) {
      config_error("estimators", "expected a non-empty array of strings");
    }
    cfg.estimators.clear();
    for (std::size_t i = 0; i < v->array.size(); ++i) {
      const auto& e = v->array[i];
      const auto est = e.kind == TomlValue::Kind::String ? parse_estimator(e.str) : std::nullopt;
      if (!est) {
        config_error("estimators[" + std::to_string(i) + "]",
                     "expected one of GMDEB, GMDE, GMDEB-fixed");
      }
      cfg.estimators.push_back(*est);
    }
  }

  const auto it = root.table_arrays.find("scenario");
  if (it == root.table_arrays.end() || it->second.empty()) {
    config_error("scenario", "at least one [[scenario]] is required");
  }
  for (std::size_t i = 0; i < it->second.size(); ++i) {
    const TomlTable& t = it->second[i];
    const std::string prefix = "scenario[" + std::to_string(i) + "].";
    reject_unknown(t, {"name", "distribution", "params", "n", "replications", "seed"}, prefix);
    Scenario sc;
    sc.name = get_string(t, "name", prefix + "name");
    const std::string dist = get_string(t, "distribution", prefix + "distribution");
    std::vector<double> params;
    if (const TomlValue* v = find(t, "params")) {
      if (v->kind != TomlValue::Kind::Array) {
        config_error(prefix + "params", "expected an array of numbers");
      }
      for (const auto& e : v->array) {
        if (!e.is_number()) {
          config_error(prefix + "params", "expected an array of numbers");
        }
        params.push_back(e.as_double());
      }
    }
    try {
      sc.law = reference(dist, params);
    } catch (const Error& e) {
      config_error(prefix + "distribution", e.what());
    }
    sc.n = static_cast<int>(get_int(t, "n", prefix + "n", n_default));
    sc.replications =
        static_cast<int>(get_int(t, "replications", prefix + "replications", reps_default));
    sc.seed = static_cast<std::uint64_t>(get_int(t, "seed", prefix + "seed", seed));
    if (sc.n < 2) {
      config_error(prefix + "n", "must be >= 2");
    }
    if (sc.replications < 1) {
      config_error(prefix + "replications", "must be >= 1");
    }
    cfg.scenarios.push_back(std::move(sc));
  }
  return cfg;
}

}  // namespace gmdeb
