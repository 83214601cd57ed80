#include "gmdeb/io.hpp"

#include "gmdeb/errors.hpp"

#include "json.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace gmdeb {

namespace {

using json = nlohmann::ordered_json;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(b, e - b + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') {
    out = out.substr(1, out.size() - 2);
  }
  return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, sep)) {
    out.push_back(trim(cur));
  }
  if (!line.empty() && line.back() == sep) {
    out.emplace_back();
  }
  return out;
}

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "na" || cell == "NaN" || cell == "nan";
}

bool parse_number(const std::string& s, double& v) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') {
    ++first;
  }
  const auto [ptr, ec] = std::from_chars(first, last, v);
  return ec == std::errc() && ptr == last;
}

double number_or_throw(const std::string& s, const std::string& what) {
  double v = 0.0;
  if (!parse_number(trim(s), v)) {
    throw ParseError("cannot parse " + what + " '" + s + "' as a number");
  }
  return v;
}

json bound_to_json(const BoundSpec& b) {
  json j;
  switch (b.kind) {
    case BoundSpec::Kind::Unbounded:
      j["kind"] = "none";
      break;
    case BoundSpec::Kind::Lower:
      j["kind"] = "lower";
      j["lower"] = b.lower;
      break;
    case BoundSpec::Kind::Interval:
      j["kind"] = "interval";
      j["lower"] = b.lower;
      j["upper"] = b.upper;
      break;
  }
  return j;
}

BoundSpec bound_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "none") {
    return BoundSpec::unbounded();
  }
  if (kind == "lower") {
    return BoundSpec::lower_bound(j.at("lower").get<double>());
  }
  if (kind == "interval") {
    return BoundSpec::interval(j.at("lower").get<double>(), j.at("upper").get<double>());
  }
  throw ParseError("unknown bound kind '" + kind + "'");
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      r.push_back(m(i, j));
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index p) {
  Eigen::MatrixXd m(p, p);
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != p) {
    throw ParseError("covariance matrix has the wrong shape");
  }
  for (Eigen::Index i = 0; i < p; ++i) {
    const auto& row = j.at(static_cast<std::size_t>(i));
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != p) {
      throw ParseError("covariance matrix has the wrong shape");
    }
    for (Eigen::Index k = 0; k < p; ++k) {
      m(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
    }
  }
  return m;
}

}  // namespace

Dataset read_csv(std::istream& in) {
  Dataset ds;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      break;
    }
  }
  if (line_no == 0 || trim(line).empty()) {
    throw ParseError("CSV input is empty (a header line is required)");
  }
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) {
    line = line.substr(3);  // UTF-8 BOM
  }
  ds.columns = split(line, ',');
  const auto p = ds.columns.size();
  for (const auto& c : ds.columns) {
    if (c.empty()) {
      throw ParseError("CSV header has an empty column name");
    }
  }

  std::vector<double> values;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      continue;
    }
    const auto cells = split(line, ',');
    if (cells.size() != p) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(p) +
                       " fields, found " + std::to_string(cells.size()));
    }
    bool missing = false;
    std::vector<double> row(p);
    for (std::size_t j = 0; j < p; ++j) {
      if (is_missing(cells[j])) {
        missing = true;
        continue;
      }
      if (!parse_number(cells[j], row[j]) || !std::isfinite(row[j])) {
        throw ParseError("line " + std::to_string(line_no) + ", column '" + ds.columns[j] +
                         "': cannot parse '" + cells[j] + "' as a number");
      }
    }
    if (missing) {
      ++ds.dropped_rows;
      continue;
    }
    values.insert(values.end(), row.begin(), row.end());
    ++n;
  }
  ds.rows.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      ds.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * p + j];
    }
  }
  ds.bounds.assign(p, BoundSpec::unbounded());
  return ds;
}

Dataset read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open '" + path + "'");
  }
  return read_csv(in);
}

std::pair<std::string, BoundSpec> parse_bound_flag(const std::string& flag) {
  const auto colon = flag.rfind(':');
  if (colon == std::string::npos || colon == 0) {
    throw ParseError("bounds flag '" + flag + "' must look like name:none, name:lower=L or name:interval=L,U");
  }
  const std::string name = flag.substr(0, colon);
  const std::string spec = flag.substr(colon + 1);
  if (spec == "none") {
    return {name, BoundSpec::unbounded()};
  }
  const auto eq = spec.find('=');
  if (eq == std::string::npos) {
    throw ParseError("bounds flag '" + flag + "' is missing '='");
  }
  const std::string kind = spec.substr(0, eq);
  const std::string args = spec.substr(eq + 1);
  try {
    if (kind == "lower") {
      return {name, BoundSpec::lower_bound(number_or_throw(args, "lower bound"))};
    }
    if (kind == "interval") {
      const auto parts = split(args, ',');
      if (parts.size() != 2) {
        throw ParseError("interval bounds need two values");
      }
      return {name, BoundSpec::interval(number_or_throw(parts[0], "lower bound"),
                                        number_or_throw(parts[1], "upper bound"))};
    }
  } catch (const InvalidParams& e) {
    throw ParseError("bounds flag '" + flag + "': " + e.what());
  }
  throw ParseError("bounds flag '" + flag + "' has unknown kind '" + kind + "'");
}

std::vector<BoundSpec> resolve_bounds(const std::vector<std::string>& columns,
                                      const std::vector<std::string>& flags) {
  std::vector<BoundSpec> out(columns.size(), BoundSpec::unbounded());
  for (const auto& f : flags) {
    const auto [name, b] = parse_bound_flag(f);
    bool found = false;
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (columns[j] == name) {
        out[j] = b;
        found = true;
      }
    }
    if (!found) {
      throw ParseError("bounds flag names unknown column '" + name + "'");
    }
  }
  return out;
}

int apply_jitter(Eigen::MatrixXd& data, const std::vector<BoundSpec>& bounds, double eps) {
  if (!(eps > 0.0)) {
    throw InvalidParams("jitter must be > 0");
  }
  int moved = 0;
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    const auto& b = bounds[static_cast<std::size_t>(j)];
    if (!b.bounded()) {
      continue;
    }
    const double step =
        b.kind == BoundSpec::Kind::Interval ? eps * (b.upper - b.lower) : eps;
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      double& v = data(i, j);
      if (v <= b.lower) {
        v = b.lower + step;
        ++moved;
      } else if (b.kind == BoundSpec::Kind::Interval && v >= b.upper) {
        v = b.upper - step;
        ++moved;
      }
    }
  }
  return moved;
}

std::string serialize_model(const ModelFile& model) {
  const MixtureFit& f = model.fit;
  json j;
  j["schema_version"] = kModelSchemaVersion;
  j["columns"] = model.columns;
  json bounds = json::array();
  for (const auto& b : f.transform.bounds) {
    bounds.push_back(bound_to_json(b));
  }
  j["bounds"] = std::move(bounds);
  j["lambda"] = f.transform.lambdas;
  j["G"] = f.G;
  j["model"] = std::string(to_string(f.model));
  j["weights"] = std::vector<double>(f.params.weights.data(),
                                     f.params.weights.data() + f.params.weights.size());
  json means = json::array();
  for (const auto& m : f.params.means) {
    means.push_back(std::vector<double>(m.data(), m.data() + m.size()));
  }
  j["means"] = std::move(means);
  json covs = json::array();
  for (const auto& c : f.params.covariances) {
    covs.push_back(matrix_to_json(c));
  }
  j["covariances"] = std::move(covs);
  j["loglik"] = f.loglik;
  j["bic"] = f.bic;
  j["icl"] = f.icl;
  j["n_obs"] = f.n_obs;
  j["n_params"] = f.n_params;
  j["n_iter"] = f.n_iter;
  j["converged"] = f.converged;
  json opts;
  opts["max_iter"] = model.options.max_iter;
  opts["tol"] = model.options.tol;
  opts["n_kmeans_starts"] = model.options.n_kmeans_starts;
  opts["lambda_objective"] =
      model.options.lambda_objective == LambdaObjective::HoldPrevious ? "hold" : "profile";
  opts["lambda_fixed"] = model.options.lambda_fixed ? json(*model.options.lambda_fixed) : json();
  j["fit_options"] = std::move(opts);
  j["seed"] = model.seed;
  return j.dump(2) + "\n";
}

ModelFile parse_model_file(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    const int version = j.at("schema_version").get<int>();
    if (version != kModelSchemaVersion) {
      throw ParseError("model file schema_version " + std::to_string(version) +
                       " is not supported (expected " + std::to_string(kModelSchemaVersion) + ")");
    }
    ModelFile m;
    m.columns = j.at("columns").get<std::vector<std::string>>();
    std::vector<BoundSpec> bounds;
    for (const auto& b : j.at("bounds")) {
      bounds.push_back(bound_from_json(b));
    }
    const auto p = static_cast<Eigen::Index>(bounds.size());
    if (m.columns.size() != bounds.size()) {
      throw ParseError("columns and bounds differ in length");
    }
    MixtureFit& f = m.fit;
    f.transform = TransformParams(j.at("lambda").get<std::vector<double>>(), bounds);
    f.G = j.at("G").get<int>();
    const auto model = parse_model(j.at("model").get<std::string>());
    if (!model) {
      throw ParseError("unknown covariance model '" + j.at("model").get<std::string>() + "'");
    }
    f.model = *model;
    const auto w = j.at("weights").get<std::vector<double>>();
    if (static_cast<int>(w.size()) != f.G || f.G < 1) {
      throw ParseError("weights length does not match G");
    }
    f.params.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), f.G);
    const auto& means = j.at("means");
    const auto& covs = j.at("covariances");
    if (static_cast<int>(means.size()) != f.G || static_cast<int>(covs.size()) != f.G) {
      throw ParseError("means/covariances length does not match G");
    }
    for (int g = 0; g < f.G; ++g) {
      const auto mu = means.at(static_cast<std::size_t>(g)).get<std::vector<double>>();
      if (static_cast<Eigen::Index>(mu.size()) != p) {
        throw ParseError("mean has the wrong dimension");
      }
      f.params.means.emplace_back(Eigen::Map<const Eigen::VectorXd>(mu.data(), p));
      f.params.covariances.push_back(matrix_from_json(covs.at(static_cast<std::size_t>(g)), p));
    }
    f.loglik = j.at("loglik").get<double>();
    f.bic = j.at("bic").get<double>();
    f.icl = j.at("icl").get<double>();
    f.n_obs = j.at("n_obs").get<int>();
    f.n_params = j.at("n_params").get<int>();
    f.n_iter = j.at("n_iter").get<int>();
    f.converged = j.at("converged").get<bool>();
    f.loglik_trace = {f.loglik};
    const auto& o = j.at("fit_options");
    m.options.max_iter = o.at("max_iter").get<int>();
    m.options.tol = o.at("tol").get<double>();
    m.options.n_kmeans_starts = o.at("n_kmeans_starts").get<int>();
    const auto obj = o.at("lambda_objective").get<std::string>();
    if (obj != "hold" && obj != "profile") {
      throw ParseError("unknown lambda_objective '" + obj + "'");
    }
    m.options.lambda_objective = obj == "hold" ? LambdaObjective::HoldPrevious : LambdaObjective::Profile;
    if (!o.at("lambda_fixed").is_null()) {
      m.options.lambda_fixed = o.at("lambda_fixed").get<std::vector<double>>();
    }
    m.seed = j.at("seed").get<std::uint64_t>();
    m.options.seed = m.seed;
    return m;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed model file: ") + e.what());
  } catch (const InvalidParams& e) {
    throw ParseError(std::string("malformed model file: ") + e.what());
  }
}

ModelFile read_model_file(const std::string& path) { return parse_model_file(read_text_file(path)); }

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError("cannot open '" + path + "'");
  }
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ParseError("cannot write '" + path + "'");
  }
  out << contents;
}

}  // namespace gmdeb
