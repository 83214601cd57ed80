#include "gmdeb/cli.hpp"

#include "gmdeb/bench.hpp"
#include "gmdeb/config.hpp"
#include "gmdeb/density.hpp"
#include "gmdeb/emfit.hpp"
#include "gmdeb/errors.hpp"
#include "gmdeb/io.hpp"
#include "gmdeb/modelselect.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

namespace gmdeb {

namespace {

constexpr int kPrecision = 15;

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

int parse_int(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used == s.size()) {
      return v;
    }
  } catch (const std::exception&) {
  }
  throw ParseError("cannot parse " + what + " '" + s + "' as an integer");
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) {
      return v;
    }
  } catch (const std::exception&) {
  }
  throw ParseError("cannot parse " + what + " '" + s + "' as a number");
}

//! "3", "1:5" or "1,2,4".
std::vector<int> parse_g_list(const std::string& s) {
  std::vector<int> gs;
  if (const auto colon = s.find(':'); colon != std::string::npos) {
    const int a = parse_int(s.substr(0, colon), "--g");
    const int b = parse_int(s.substr(colon + 1), "--g");
    if (a < 1 || b < a) {
      throw ParseError("--g range '" + s + "' must satisfy 1 <= a <= b");
    }
    for (int g = a; g <= b; ++g) {
      gs.push_back(g);
    }
    return gs;
  }
  for (const auto& part : split_list(s, ',')) {
    const int g = parse_int(part, "--g");
    if (g < 1) {
      throw ParseError("--g values must be >= 1");
    }
    gs.push_back(g);
  }
  return gs;
}

CovarianceModel parse_model_flag(const std::string& name, int p) {
  const auto m = parse_model(name);
  if (!m) {
    throw ParseError("unknown covariance model '" + name + "'");
  }
  if (!valid_for_dimension(*m, p)) {
    throw ParseError("covariance model '" + name + "' is not available for " +
                     std::to_string(p) + " variable(s)");
  }
  return *m;
}

struct DataFlags {
  std::string csv;
  std::vector<std::string> bounds;
  std::optional<double> jitter;
};

Dataset load_data(const DataFlags& f, std::ostream& err) {
  Dataset ds = read_csv_file(f.csv);
  if (ds.dropped_rows > 0) {
    err << "warning: dropped " << ds.dropped_rows << " row(s) with missing values\n";
  }
  ds.bounds = resolve_bounds(ds.columns, f.bounds);
  if (f.jitter) {
    const int moved = apply_jitter(ds.rows, ds.bounds, *f.jitter);
    err << "jitter: moved " << moved << " value(s) inside the support\n";
  }
  check_support(ds.rows, ds.bounds);
  return ds;
}

struct FitFlags {
  std::uint64_t seed = 0;
  int max_iter = 500;
  double tol = 1e-8;
  int kmeans_starts = 10;
  std::string fixed_lambda;
  std::string lambda_objective = "profile";
};

FitOptions make_fit_options(const FitFlags& f, int p) {
  FitOptions o;
  o.seed = f.seed;
  o.max_iter = f.max_iter;
  o.tol = f.tol;
  o.n_kmeans_starts = f.kmeans_starts;
  if (f.lambda_objective == "hold") {
    o.lambda_objective = LambdaObjective::HoldPrevious;
  } else if (f.lambda_objective == "profile") {
    o.lambda_objective = LambdaObjective::Profile;
  } else {
    throw ParseError("--lambda-objective must be 'hold' or 'profile'");
  }
  if (!f.fixed_lambda.empty()) {
    std::vector<double> lam;
    for (const auto& part : split_list(f.fixed_lambda, ',')) {
      lam.push_back(parse_double(part, "--fixed-lambda"));
    }
    if (lam.size() == 1 && p > 1) {
      lam.assign(static_cast<std::size_t>(p), lam[0]);
    }
    if (static_cast<int>(lam.size()) != p) {
      throw ParseError("--fixed-lambda needs 1 or " + std::to_string(p) + " values");
    }
    o.lambda_fixed = lam;
  }
  try {
    o.validate();
  } catch (const InvalidParams& e) {
    throw ParseError(e.what());
  }
  return o;
}

void add_fit_flags(CLI::App* cmd, FitFlags& f) {
  cmd->add_option("--seed", f.seed, "Random seed for initialization");
  cmd->add_option("--max-iter", f.max_iter, "Maximum EM iterations");
  cmd->add_option("--tol", f.tol, "Relative log-likelihood tolerance");
  cmd->add_option("--kmeans-starts", f.kmeans_starts, "k-means restarts for initialization");
  cmd->add_option("--fixed-lambda", f.fixed_lambda,
                  "Hold the power parameters fixed (comma-separated, one per column)");
  cmd->add_option("--lambda-objective", f.lambda_objective, "profile (default) | hold");
}

void add_data_flags(CLI::App* cmd, DataFlags& f) {
  cmd->add_option("csv", f.csv, "Input CSV with a header row")->required();
  cmd->add_option("--bounds", f.bounds,
                  "Support of a column: name:none, name:lower=L or name:interval=L,U")
      ->allow_extra_args(false);
  cmd->add_option("--jitter", f.jitter,
                  "Move values on or outside their bounds inward by eps (times the width for "
                  "intervals)");
}

void print_summary(std::ostream& out, const std::vector<std::string>& columns,
                   const MixtureFit& fit) {
  out << std::setprecision(kPrecision);
  out << "model: " << to_string(fit.model) << "\n";
  out << "G: " << fit.G << "\n";
  out << "n_obs: " << fit.n_obs << "\n";
  out << "lambda:";
  for (std::size_t j = 0; j < columns.size(); ++j) {
    out << " " << columns[j] << "=";
    if (fit.transform.bounds[j].bounded()) {
      out << fit.transform.lambdas[j];
    } else {
      out << "none";
    }
  }
  out << "\n";
  out << "weights:";
  for (Eigen::Index g = 0; g < fit.params.weights.size(); ++g) {
    out << " " << fit.params.weights(g);
  }
  out << "\n";
  for (int g = 0; g < fit.G; ++g) {
    const auto& mu = fit.params.means[static_cast<std::size_t>(g)];
    const auto& s = fit.params.covariances[static_cast<std::size_t>(g)];
    out << "component " << g + 1 << ": mean";
    for (Eigen::Index j = 0; j < mu.size(); ++j) {
      out << " " << mu(j);
    }
    out << "; covariance";
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
      for (Eigen::Index c = 0; c < s.cols(); ++c) {
        out << " " << s(r, c);
      }
    }
    out << "\n";
  }
  out << "loglik: " << fit.loglik << "\n";
  out << "n_params: " << fit.n_params << "\n";
  out << "bic: " << fit.bic << "\n";
  out << "icl: " << fit.icl << "\n";
  out << "iterations: " << fit.n_iter << "\n";
  out << "converged: " << (fit.converged ? "true" : "false") << "\n";
}

void write_model(const std::string& path, const std::vector<std::string>& columns,
                 const MixtureFit& fit, const FitOptions& opts) {
  ModelFile m;
  m.columns = columns;
  m.fit = fit;
  m.options = opts;
  m.seed = opts.seed;
  write_text_file(path, serialize_model(m));
}

template <typename Body>
void with_output(const std::string& path, std::ostream& fallback, Body body) {
  if (path.empty() || path == "-") {
    body(fallback);
    return;
  }
  std::ostringstream os;
  body(os);
  write_text_file(path, os.str());
}

std::vector<int> parse_grid_flag(const std::string& s, int p) {
  std::vector<int> n;
  for (const auto& part : split_list(s, 'x')) {
    const int v = parse_int(part, "--grid");
    if (v < 2) {
      throw ParseError("--grid sizes must be >= 2");
    }
    n.push_back(v);
  }
  if (n.size() == 1) {
    n.assign(static_cast<std::size_t>(p), n[0]);
  }
  if (static_cast<int>(n.size()) != p) {
    throw ParseError("--grid needs 1 or " + std::to_string(p) + " sizes");
  }
  return n;
}

int check_resolution(int p) {
  switch (p) {
    case 1:
      return 2048;
    case 2:
      return 256;
    default:
      return 64;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Density estimation for bounded data with range-power transformed Gaussian mixtures",
               "gmdeb"};
  app.require_subcommand(1);

  DataFlags data_flags;
  FitFlags fit_flags;

  auto* fit_cmd = app.add_subcommand("fit", "Fit one model and write a JSON model file");
  std::string fit_g = "1";
  std::string fit_model;
  std::string fit_out = "model.json";
  add_data_flags(fit_cmd, data_flags);
  add_fit_flags(fit_cmd, fit_flags);
  fit_cmd->add_option("--g", fit_g, "Number of components");
  fit_cmd->add_option("--model", fit_model, "Covariance model (default V, or VVV for p > 1)");
  fit_cmd->add_option("--out", fit_out, "Model file to write");

  auto* sel_cmd = app.add_subcommand("select", "Choose G and covariance model by BIC or ICL");
  std::string sel_g = "1:9";
  std::string sel_models;
  std::string sel_criterion = "bic";
  std::string sel_report;
  std::string sel_out = "model.json";
  int sel_jobs = 0;
  add_data_flags(sel_cmd, data_flags);
  add_fit_flags(sel_cmd, fit_flags);
  sel_cmd->add_option("--g", sel_g, "Component counts: a:b or a,b,c");
  sel_cmd->add_option("--models", sel_models, "Comma-separated covariance models");
  sel_cmd->add_option("--criterion", sel_criterion, "bic | icl");
  sel_cmd->add_option("--report", sel_report, "Candidate table CSV");
  sel_cmd->add_option("--out", sel_out, "Model file for the selected candidate");
  sel_cmd->add_option("--jobs", sel_jobs, "Worker threads (default $GMDEB_JOBS or 1)");

  auto* den_cmd = app.add_subcommand("density", "Evaluate a fitted density");
  std::string den_model;
  std::string den_grid;
  std::string den_at;
  std::string den_hdr;
  int den_n_mc = 10000;
  std::uint64_t den_seed = 0;
  std::string den_out;
  den_cmd->add_option("model", den_model, "Model file")->required();
  auto* grid_opt = den_cmd->add_option("--grid", den_grid, "Grid size per axis: N or NxM[xK]");
  auto* at_opt = den_cmd->add_option("--at", den_at, "CSV of points to evaluate");
  grid_opt->excludes(at_opt);
  den_cmd->add_option("--hdr", den_hdr,
                      "Comma-separated HDR probabilities; adds an hdr column with the "
                      "smallest level containing each point");
  den_cmd->add_option("--n-mc", den_n_mc, "Monte Carlo draws for HDR thresholds");
  den_cmd->add_option("--seed", den_seed, "Seed for HDR draws");
  den_cmd->add_option("--out", den_out, "Output CSV (default stdout)");

  auto* smp_cmd = app.add_subcommand("sample", "Draw from a fitted density");
  std::string smp_model;
  int smp_n = 0;
  std::uint64_t smp_seed = 0;
  std::string smp_out;
  smp_cmd->add_option("model", smp_model, "Model file")->required();
  smp_cmd->add_option("--n", smp_n, "Number of draws")->required();
  smp_cmd->add_option("--seed", smp_seed, "Random seed");
  smp_cmd->add_option("--out", smp_out, "Output CSV (default stdout)");

  auto* sim_cmd = app.add_subcommand("simulate", "Run a simulation study from a config file");
  std::string sim_config;
  int sim_jobs = 0;
  std::string sim_output;
  sim_cmd->add_option("config", sim_config, "TOML config")->required();
  sim_cmd->add_option("--jobs", sim_jobs, "Worker threads (overrides the config)");
  sim_cmd->add_option("--output", sim_output, "Output prefix (overrides the config)");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*fit_cmd) {
      const Dataset ds = load_data(data_flags, err);
      const int p = static_cast<int>(ds.columns.size());
      const auto gs = parse_g_list(fit_g);
      if (gs.size() != 1) {
        throw ParseError("fit takes a single --g value; use select for a range");
      }
      const CovarianceModel model =
          parse_model_flag(fit_model.empty() ? (p == 1 ? "V" : "VVV") : fit_model, p);
      const FitOptions opts = make_fit_options(fit_flags, p);
      const MixtureFit result = fit(ds.rows, ds.bounds, gs[0], model, opts);
      if (!result.converged) {
        err << "warning: EM stopped after " << result.n_iter << " iterations without converging\n";
      }
      write_model(fit_out, ds.columns, result, opts);
      print_summary(out, ds.columns, result);
      return kExitOk;
    }

    if (*sel_cmd) {
      const Dataset ds = load_data(data_flags, err);
      const int p = static_cast<int>(ds.columns.size());
      SelectionGrid grid = SelectionGrid::defaults(p);
      grid.g_range = parse_g_list(sel_g);
      if (!sel_models.empty()) {
        grid.models.clear();
        for (const auto& name : split_list(sel_models, ',')) {
          grid.models.push_back(parse_model_flag(name, p));
        }
      }
      if (sel_criterion == "bic") {
        grid.criterion = Criterion::BIC;
      } else if (sel_criterion == "icl") {
        grid.criterion = Criterion::ICL;
      } else {
        throw ParseError("--criterion must be 'bic' or 'icl'");
      }
      const FitOptions opts = make_fit_options(fit_flags, p);
      const SelectionReport report = select(ds.rows, ds.bounds, grid, opts, resolve_jobs(sel_jobs));
      for (const auto* f : report.failures()) {
        err << "warning: candidate " << to_string(f->model) << " G=" << f->G
            << " failed: " << f->failure << "\n";
      }
      for (const auto& c : report.table) {
        if (c.ok() && !c.converged) {
          err << "warning: candidate " << to_string(c.model) << " G=" << c.G
              << " did not converge and was not considered\n";
        }
      }
      if (!sel_report.empty()) {
        with_output(sel_report, out, [&](std::ostream& os) {
          os << std::setprecision(kPrecision);
          os << "G,model,loglik,nparams,bic,icl,converged\n";
          for (const auto& c : report.table) {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            os << c.G << "," << to_string(c.model) << "," << (c.ok() ? c.loglik : nan) << ","
               << c.n_params << "," << (c.ok() ? c.bic : nan) << "," << (c.ok() ? c.icl : nan)
               << "," << (c.eligible() ? "true" : "false") << "\n";
          }
        });
      }
      const CandidateResult& best = report.best_candidate();
      FitOptions best_opts = opts;
      best_opts.seed = best.seed;
      write_model(sel_out, ds.columns, report.best_fit(), best_opts);
      out << "selected: " << to_string(best.model) << " G=" << best.G << " by "
          << (grid.criterion == Criterion::BIC ? "BIC" : "ICL") << "\n";
      print_summary(out, ds.columns, report.best_fit());
      return kExitOk;
    }

    if (*den_cmd) {
      const ModelFile mf = read_model_file(den_model);
      const MixtureFit& fit = mf.fit;
      const int p = fit.dim();
      if (den_grid.empty() && den_at.empty()) {
        throw ParseError("density needs --grid or --at");
      }
      std::optional<HdrSpec> hdr;
      std::vector<double> thresholds;
      if (!den_hdr.empty()) {
        HdrSpec spec;
        spec.probs.clear();
        for (const auto& part : split_list(den_hdr, ',')) {
          spec.probs.push_back(parse_double(part, "--hdr"));
        }
        spec.n_mc = den_n_mc;
        try {
          spec.validate();
        } catch (const InvalidParams& e) {
          throw ParseError(e.what());
        }
        thresholds = hdr_thresholds(fit, spec, den_seed);
        hdr = spec;
      }
      std::ostream& info = den_out.empty() ? err : out;
      if (hdr) {
        info << std::setprecision(kPrecision);
        for (std::size_t k = 0; k < thresholds.size(); ++k) {
          info << "hdr " << hdr->probs[k] << ": density >= " << thresholds[k] << "\n";
        }
      }

      if (!den_grid.empty()) {
        DensityGrid grid = evaluate_grid(fit, default_axes(fit, parse_grid_flag(den_grid, p)));
        if (hdr) {
          grid.hdr_levels.resize(grid.size());
          for (std::size_t k = 0; k < grid.size(); ++k) {
            grid.hdr_levels[k] = hdr_level(grid.values[k], hdr->probs, thresholds);
          }
        }
        if (p <= 3) {
          const double mass = integrate_pdf(fit, check_resolution(p));
          if (mass < 0.98) {
            err << "warning: fitted density integrates to " << std::setprecision(6) << mass
                << " over its support\n";
          }
        }
        with_output(den_out, out, [&](std::ostream& os) { write_density_csv(os, grid, mf.columns); });
        return kExitOk;
      }

      const Dataset pts = read_csv_file(den_at);
      if (static_cast<int>(pts.columns.size()) != p) {
        throw ParseError("--at file has " + std::to_string(pts.columns.size()) +
                         " columns; the model has " + std::to_string(p));
      }
      const Eigen::VectorXd f = pdf(pts.rows, fit);
      with_output(den_out, out, [&](std::ostream& os) {
        os << std::setprecision(kPrecision);
        for (const auto& c : mf.columns) {
          os << c << ",";
        }
        os << "density" << (hdr ? ",hdr" : "") << "\n";
        for (Eigen::Index i = 0; i < pts.rows.rows(); ++i) {
          for (Eigen::Index j = 0; j < p; ++j) {
            os << pts.rows(i, j) << ",";
          }
          os << f(i);
          if (hdr) {
            os << "," << hdr_level(f(i), hdr->probs, thresholds);
          }
          os << "\n";
        }
      });
      return kExitOk;
    }

    if (*smp_cmd) {
      if (smp_n < 1) {
        throw ParseError("--n must be >= 1");
      }
      const ModelFile mf = read_model_file(smp_model);
      const Eigen::MatrixXd draws = sample(smp_n, mf.fit, smp_seed);
      with_output(smp_out, out, [&](std::ostream& os) {
        os << std::setprecision(kPrecision);
        for (std::size_t j = 0; j < mf.columns.size(); ++j) {
          os << (j ? "," : "") << mf.columns[j];
        }
        os << "\n";
        for (Eigen::Index i = 0; i < draws.rows(); ++i) {
          for (Eigen::Index j = 0; j < draws.cols(); ++j) {
            os << (j ? "," : "") << draws(i, j);
          }
          os << "\n";
        }
      });
      return kExitOk;
    }

    if (*sim_cmd) {
      SimulateConfig cfg = parse_simulate_config(read_text_file(sim_config));
      cfg.options.jobs = resolve_jobs(sim_jobs > 0 ? sim_jobs : cfg.options.jobs);
      if (!sim_output.empty()) {
        cfg.output = sim_output;
      }
      for (const auto& sc : cfg.scenarios) {
        sc.validate();
      }
      const BenchmarkReport report = run_benchmark(cfg.scenarios, cfg.estimators, cfg.options);
      std::ostringstream csv;
      write_report_csv(csv, report);
      write_text_file(cfg.output + ".csv", csv.str());
      std::ostringstream js;
      write_summary_json(js, report);
      write_text_file(cfg.output + ".json", js.str());
      out << std::setprecision(kPrecision);
      out << "scenario,estimator,n_ok,n_failed,median_ise,median_seconds\n";
      for (const auto& c : report.summary) {
        out << c.scenario << "," << to_string(c.estimator) << "," << c.n_ok << "," << c.n_failed
            << "," << c.ise_median << "," << c.seconds_median << "\n";
      }
      return kExitOk;
    }
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidParams& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UnknownDistribution& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UnsupportedModel& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const NonFinite& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFitFailure;
  }
  return kExitUsage;
}

}  // namespace gmdeb
