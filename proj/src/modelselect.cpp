#include "gmdeb/modelselect.hpp"

#include "gmdeb/errors.hpp"
#include "gmdeb/parallel.hpp"
#include "gmdeb/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

namespace gmdeb {

double bic(double loglik, int n_params, int n_obs) {
  return 2.0 * loglik - static_cast<double>(n_params) * std::log(static_cast<double>(n_obs));
}

double icl(double bic_value, const Eigen::MatrixXd& z) {
  double ent = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index g = 0; g < z.cols(); ++g) {
      const double v = z(i, g);
      if (v > 0.0) {
        ent += v * std::log(v);
      }
    }
  }
  return bic_value + 2.0 * ent;
}

SelectionGrid SelectionGrid::defaults(int p) {
  SelectionGrid grid;
  for (int g = 1; g <= 9; ++g) {
    grid.g_range.push_back(g);
  }
  grid.models = models_for_dimension(p);
  return grid;
}

void SelectionGrid::validate(int p) const {
  if (g_range.empty() || models.empty()) {
    throw InvalidParams("selection grid needs at least one G and one model");
  }
  for (int g : g_range) {
    if (g < 1) {
      throw InvalidParams("G values must be >= 1");
    }
  }
  for (auto m : models) {
    if (!valid_for_dimension(m, p)) {
      throw UnsupportedModel(std::string("model ") + std::string(to_string(m)) +
                             " is not available for p = " + std::to_string(p));
    }
  }
}

std::vector<const CandidateResult*> SelectionReport::failures() const {
  std::vector<const CandidateResult*> out;
  for (const auto& c : table) {
    if (!c.ok()) {
      out.push_back(&c);
    }
  }
  return out;
}

std::uint64_t candidate_seed(std::uint64_t seed, int G, CovarianceModel model) {
  return mix_seed(mix_seed(seed, static_cast<std::uint64_t>(G)), hash_string(to_string(model)));
}

int resolve_jobs(int requested) {
  if (requested > 0) {
    return requested;
  }
  if (const char* env = std::getenv("GMDEB_JOBS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) {
        return v;
      }
    } catch (const std::exception&) {
    }
  }
  return 1;
}

SelectionReport select(const Eigen::MatrixXd& data, const std::vector<BoundSpec>& bounds,
                       const SelectionGrid& grid, const FitOptions& opts, int jobs) {
  const int p = static_cast<int>(data.cols());
  grid.validate(p);
  opts.validate();

  std::vector<CandidateResult> table;
  for (int g : grid.g_range) {
    for (auto m : grid.models) {
      CandidateResult c;
      c.G = g;
      c.model = m;
      c.seed = candidate_seed(opts.seed, g, m);
      const int n_lambda = opts.lambda_fixed ? 0
                                             : static_cast<int>(std::count_if(
                                                   bounds.begin(), bounds.end(),
                                                   [](const BoundSpec& b) { return b.bounded(); }));
      c.n_params = n_free_params(m, p, g, n_lambda);
      table.push_back(std::move(c));
    }
  }

  parallel_for(table.size(), jobs, [&](std::size_t k) {
    CandidateResult& c = table[k];
    FitOptions local = opts;
    local.seed = c.seed;
    try {
      MixtureFit f = fit(data, bounds, c.G, c.model, local);
      c.loglik = f.loglik;
      c.n_params = f.n_params;
      c.bic = f.bic;
      c.icl = f.icl;
      c.converged = f.converged;
      if (!std::isfinite(f.bic) || !std::isfinite(f.icl)) {
        c.failure = "non-finite criterion value";
      } else {
        c.fit = std::move(f);
      }
    } catch (const DomainError&) {
      throw;
    } catch (const Error& e) {
      c.failure = e.what();
    }
  });

  const Criterion crit = grid.criterion;
  // converged fits first, then non-converged ones, then failures
  const auto tier = [](const CandidateResult& c) { return c.ok() ? (c.eligible() ? 0 : 1) : 2; };
  std::stable_sort(table.begin(), table.end(), [crit, tier](const CandidateResult& a,
                                                            const CandidateResult& b) {
    if (tier(a) != tier(b)) {
      return tier(a) < tier(b);
    }
    if (!a.ok()) {
      return false;
    }
    if (a.score(crit) != b.score(crit)) {
      return a.score(crit) > b.score(crit);
    }
    if (a.n_params != b.n_params) {
      return a.n_params < b.n_params;
    }
    return a.G < b.G;
  });

  SelectionReport rep;
  rep.criterion = crit;
  rep.table = std::move(table);
  if (rep.table.empty() || !rep.table.front().eligible()) {
    throw AllCandidatesFailed("no (G, model) candidate produced a converged fit");
  }
  rep.best = 0;
  return rep;
}

}  // namespace gmdeb
