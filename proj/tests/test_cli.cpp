#include "doctest.h"
#include "helpers.hpp"

#include "gmdeb/cli.hpp"
#include "gmdeb/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

using namespace gmdeb;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string write_column_csv(const std::filesystem::path& dir, const std::string& file, const std::string& name,
                             const Eigen::MatrixXd& x) {
  const auto path = (dir / file).string();
  std::ofstream os(path);
  os << name << "\n" << std::setprecision(17);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    os << x(i, 0) << "\n";
  }
  return path;
}

int count_lines(const std::string& s) {
  return static_cast<int>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  CHECK(run({"--help"}).code == kExitOk);
  CHECK(run({"fit"}).code == kExitUsage);
  CHECK(run({"fit", "/nonexistent.csv"}).code == kExitUsage);
  CHECK(run({"density", "m.json", "--grid", "10", "--at", "p.csv"}).code == kExitUsage);

  const auto dir = testing::temp_dir("cli_usage");
  const auto bad = (dir / "bad.csv").string();
  std::ofstream(bad) << "x\n1\nfoo\n";
  const auto r = run({"fit", bad});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("line 3") != std::string::npos);

  const auto csv = write_column_csv(dir, "x.csv", "x", testing::lognormal_column(50, 0.0, 1));
  CHECK(run({"fit", csv, "--bounds", "y:lower=0"}).code == kExitUsage);
  CHECK(run({"fit", csv, "--model", "QQQ"}).code == kExitUsage);
  CHECK(run({"fit", csv, "--model", "VVV", "--g", "0"}).code == kExitUsage);
  CHECK(run({"select", csv, "--criterion", "aic"}).code == kExitUsage);
}

TEST_CASE("fit on normal data and the summary") {
  const auto dir = testing::temp_dir("cli_fit");
  const auto csv = write_column_csv(dir, "x.csv", "x", testing::normal_matrix(400, 1, 2));
  const auto model = (dir / "m.json").string();
  const auto r = run({"fit", csv, "--bounds", "x:none", "--g", "1", "--model", "V", "--out", model});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("model: V") != std::string::npos);
  CHECK(r.out.find("bic:") != std::string::npos);
  const auto m = read_model_file(model);
  CHECK(std::abs(m.fit.params.means[0](0)) < 0.15);
  CHECK(std::abs(m.fit.params.covariances[0](0, 0) - 1.0) < 0.2);
  CHECK(m.columns == std::vector<std::string>{"x"});
}

TEST_CASE("a value on the bound exits 3 with its row") {
  const auto dir = testing::temp_dir("cli_domain");
  auto x = testing::lognormal_column(40, 0.0, 3);
  x(12, 0) = 0.0;
  const auto csv = write_column_csv(dir, "x.csv", "x", x);
  const auto r = run({"fit", csv, "--bounds", "x:lower=0", "--out", (dir / "m.json").string()});
  CHECK(r.code == kExitDomain);
  CHECK(r.err.find("row") != std::string::npos);
  CHECK(r.err.find("12") != std::string::npos);

  const auto ok = run({"fit", csv, "--bounds", "x:lower=0", "--jitter", "1e-6", "--out",
                       (dir / "m.json").string()});
  CHECK(ok.code == kExitOk);
}

TEST_CASE("fit failures exit 4") {
  const auto dir = testing::temp_dir("cli_fail");
  const auto csv = write_column_csv(dir, "x.csv", "x", testing::lognormal_column(8, 0.0, 4));
  const auto r = run({"select", csv, "--bounds", "x:lower=0", "--g", "4:5", "--out", (dir / "m.json").string()});
  CHECK(r.code == kExitFitFailure);
}

TEST_CASE("select writes a report and a model") {
  const auto dir = testing::temp_dir("cli_select");
  const auto csv = write_column_csv(dir, "x.csv", "x", testing::lognormal_column(150, 0.0, 5));
  const auto report = (dir / "r.csv").string();
  const auto model = (dir / "m.json").string();
  const auto r = run({"select", csv, "--bounds", "x:lower=0", "--g", "1:3", "--models", "E,V", "--report", report,
                      "--out", model});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("selected:") != std::string::npos);
  const auto text = read_text_file(report);
  CHECK(text.rfind("G,model,loglik,nparams,bic,icl,converged\n", 0) == 0);
  CHECK(count_lines(text) == 7);

  const auto one = (dir / "one.csv").string();
  REQUIRE(run({"select", csv, "--bounds", "x:lower=0", "--g", "1", "--models", "V", "--report", one, "--out",
               model})
              .code == kExitOk);
  CHECK(count_lines(read_text_file(one)) == 2);
}

TEST_CASE("reruns are byte-identical") {
  const auto dir = testing::temp_dir("cli_repro");
  const auto csv = write_column_csv(dir, "x.csv", "x", testing::lognormal_column(120, 1.0, 6));
  std::vector<std::string> texts;
  for (int k = 0; k < 2; ++k) {
    const auto tag = std::to_string(k);
    const auto model = (dir / ("m" + tag + ".json")).string();
    const auto report = (dir / ("r" + tag + ".csv")).string();
    const auto draws = (dir / ("s" + tag + ".csv")).string();
    const auto grid = (dir / ("g" + tag + ".csv")).string();
    const auto sel = run({"select", csv, "--bounds", "x:lower=1", "--g", "1:2", "--seed", "9", "--report", report,
                          "--out", model});
    REQUIRE(sel.code == kExitOk);
    REQUIRE(run({"sample", model, "--n", "50", "--seed", "3", "--out", draws}).code == kExitOk);
    REQUIRE(run({"density", model, "--grid", "64", "--hdr", "0.5,0.9", "--out", grid}).code == kExitOk);
    texts.push_back(sel.out + read_text_file(model) + read_text_file(report) + read_text_file(draws) +
                    read_text_file(grid));
  }
  CHECK(texts[0] == texts[1]);
}

TEST_CASE("sample framing") {
  const auto dir = testing::temp_dir("cli_sample");
  const auto model = (dir / "m.json").string();
  ModelFile m;
  m.columns = {"conc"};
  m.fit = testing::univariate_fit(BoundSpec::lower_bound(0.0), 0.0, {1.0}, {0.0}, {1.0});
  write_text_file(model, serialize_model(m));
  const auto r = run({"sample", model, "--n", "25", "--seed", "1"});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.rfind("conc\n", 0) == 0);
  CHECK(count_lines(r.out) == 26);
  CHECK(run({"sample", model, "--n", "0"}).code == kExitUsage);
}

TEST_CASE("density output") {
  const auto dir = testing::temp_dir("cli_density");
  const auto lognormal = (dir / "ln.json").string();
  ModelFile m;
  m.columns = {"x"};
  m.fit = testing::univariate_fit(BoundSpec::lower_bound(0.0), 0.0, {1.0}, {0.0}, {1.0});
  write_text_file(lognormal, serialize_model(m));
  const auto pts = (dir / "pts.csv").string();
  std::ofstream(pts) << "x\n1\n0\n";
  const auto at = run({"density", lognormal, "--at", pts});
  REQUIRE(at.code == kExitOk);
  std::istringstream is(at.out);
  std::string header;
  std::string first;
  std::string second;
  std::getline(is, header);
  std::getline(is, first);
  std::getline(is, second);
  CHECK(header == "x,density");
  CHECK(std::stod(first.substr(first.find(',') + 1)) == doctest::Approx(0.398942).epsilon(1e-6));
  CHECK(std::stod(second.substr(second.find(',') + 1)) == 0.0);

  const auto interval = (dir / "iv.json").string();
  m.fit = testing::univariate_fit(BoundSpec::interval(0.0, 1.0), 0.3, {0.4, 0.6}, {-1.0, 1.0}, {0.5, 0.5});
  write_text_file(interval, serialize_model(m));
  const auto grid = run({"density", interval, "--grid", "512"});
  REQUIRE(grid.code == kExitOk);
  std::istringstream gs(grid.out);
  std::string line;
  std::getline(gs, line);
  CHECK(line == "x,density");
  int rows = 0;
  while (std::getline(gs, line)) {
    ++rows;
    const double x = std::stod(line.substr(0, line.find(',')));
    const double f = std::stod(line.substr(line.find(',') + 1));
    CHECK(x > 0.0);
    CHECK(x < 1.0);
    CHECK(f >= 0.0);
  }
  CHECK(rows == 512);

  const auto hdr = run({"density", interval, "--grid", "32", "--hdr", "0.25,0.5,0.75,0.9"});
  REQUIRE(hdr.code == kExitOk);
  CHECK(hdr.out.rfind("x,density,hdr\n", 0) == 0);
  CHECK(hdr.err.find("0.75") != std::string::npos);
}

TEST_CASE("simulate") {
  const auto dir = testing::temp_dir("cli_simulate");
  const auto cfg = (dir / "sim.toml").string();
  std::ofstream(cfg) << "seed = 1\nn = 200\nreplications = 5\ng_max = 3\ntiming = false\n"
                     << "output = \"" << (dir / "bench").string() << "\"\n"
                     << "[[scenario]]\nname = \"chi2\"\ndistribution = \"chi2\"\nparams = [3]\n";
  const auto first = run({"simulate", cfg});
  REQUIRE(first.code == kExitOk);
  const auto csv = read_text_file((dir / "bench.csv").string());
  CHECK(count_lines(csv) == 11);
  CHECK(read_text_file((dir / "bench.json").string()).find("chi2") != std::string::npos);
  CHECK(first.out.find("scenario,estimator,n_ok,n_failed,median_ise,median_seconds") != std::string::npos);

  REQUIRE(run({"simulate", cfg, "--jobs", "2"}).code == kExitOk);
  CHECK(read_text_file((dir / "bench.csv").string()) == csv);

  const auto bad = (dir / "bad.toml").string();
  std::ofstream(bad) << "[[scenario]]\nname = \"x\"\ndistribution = \"nope\"\n";
  const auto r = run({"simulate", bad});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("scenario[0].distribution") != std::string::npos);
}
