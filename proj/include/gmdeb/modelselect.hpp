#pragma once

#include "gmdeb/emfit.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gmdeb {

//! BIC on the "larger is better" scale: 2 loglik - k log n.
double bic(double loglik, int n_params, int n_obs);

//! ICL = BIC + 2 sum_ig z_ig log z_ig.
double icl(double bic_value, const Eigen::MatrixXd& z);

enum class Criterion { BIC, ICL };

struct SelectionGrid {
  std::vector<int> g_range;
  std::vector<CovarianceModel> models;
  Criterion criterion = Criterion::BIC;

  //! G = 1..9 and every model valid at dimension p.
  static SelectionGrid defaults(int p);
  void validate(int p) const;
};

struct CandidateResult {
  int G = 0;
  CovarianceModel model = CovarianceModel::V;
  std::uint64_t seed = 0;
  double loglik = 0.0;
  int n_params = 0;
  double bic = 0.0;
  double icl = 0.0;
  bool converged = false;
  //! Empty on success.
  std::string failure;
  std::optional<MixtureFit> fit;

  //! The fit ran to completion (converged or not).
  bool ok() const { return failure.empty(); }
  //! Only converged fits can be selected.
  bool eligible() const { return ok() && converged; }
  double score(Criterion c) const { return c == Criterion::BIC ? bic : icl; }
};

struct SelectionReport {
  //! Sorted: converged candidates by criterion (best first, ties to fewer
  //! parameters then smaller G), then non-converged ones in the same order,
  //! then failed candidates.
  std::vector<CandidateResult> table;
  //! Index into `table` of the winner.
  std::size_t best = 0;
  Criterion criterion = Criterion::BIC;

  const CandidateResult& best_candidate() const { return table.at(best); }
  const MixtureFit& best_fit() const { return *table.at(best).fit; }
  std::vector<const CandidateResult*> failures() const;
};

//! Seed for one (G, model) candidate.
std::uint64_t candidate_seed(std::uint64_t seed, int G, CovarianceModel model);

//! Worker count: `requested` if positive, else $GMDEB_JOBS, else 1.
int resolve_jobs(int requested);

//! Fits every (G, model) candidate on `jobs` worker threads. Results do not
//! depend on scheduling. Throws AllCandidatesFailed if no candidate both
//! succeeds and converges.
SelectionReport select(const Eigen::MatrixXd& data, const std::vector<BoundSpec>& bounds,
                       const SelectionGrid& grid, const FitOptions& opts, int jobs = 1);

}  // namespace gmdeb
