#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "laf/prediction_matrix.hpp"
#include "laf/ranking.hpp"

namespace laf {

enum class Prior {
  uniform,    // p(y = c) = 1 / C
  empirical,  // Laplace-smoothed majority-vote label frequencies
};

struct LafConfig {
  Prior prior = Prior::uniform;
  double convergence_tol = 1e-5;  // on |(Q - Q_last) / Q_last|
  int max_outer_iters = 500;
  int m_step_inner_iters = 25;
  double initial_step = 0.1;
  int max_halvings = 30;
  double prob_floor = 1e-12;  // sigmoid is clamped to [floor, 1 - floor]
  std::optional<std::uint64_t> seed;  // reserved; the solver is deterministic

  /// Throws InvalidArgument on non-positive tolerances or iteration caps.
  void validate() const;
};

/// EM parameters: per-sample easiness alpha (larger = easier) and per-model
/// specialty beta (larger = better).
struct LafParams {
  std::vector<double> alpha;
  std::vector<double> beta;

  bool operator==(const LafParams&) const = default;
};

/// Posterior over the true label of one retained sample. Labels nobody
/// predicted have identical likelihoods and share `other_prob`.
struct PosteriorRow {
  std::vector<Label> labels;  // distinct predicted labels, ascending
  std::vector<double> probs;
  int other_multiplicity = 0;  // C - labels.size()
  double other_prob = 0.0;     // per unpredicted class

  double total() const;
};

struct PosteriorTable {
  std::vector<PosteriorRow> rows;
};

/// Most frequent label of each retained row; ties go to the smallest label.
std::vector<Label> majority_vote(const PrunedMatrix& pruned);

/// beta_j = fraction of rows where model j agrees with the pseudo label;
/// alpha_i = fraction of models agreeing with the pseudo label of row i.
LafParams init_params(const PrunedMatrix& pruned, std::span<const Label> pseudo);

PosteriorTable e_step(const PrunedMatrix& pruned, const LafParams& params, const LafConfig& config);

/// Expected complete-data log-likelihood under `posterior`.
double compute_q(const PrunedMatrix& pruned, const PosteriorTable& posterior,
                 const LafParams& params, const LafConfig& config);

/// Analytic gradient of compute_q with respect to (alpha, beta).
LafParams q_gradient(const PrunedMatrix& pruned, const PosteriorTable& posterior,
                     const LafParams& params, const LafConfig& config);

/// Backtracking gradient ascent on Q with the posterior held fixed.
LafParams m_step(const PrunedMatrix& pruned, const PosteriorTable& posterior,
                 const LafParams& params, const LafConfig& config);

/// Observed-data log-likelihood log p(predictions | params), with the true
/// labels marginalised out. EM never decreases it.
double observed_log_likelihood(const PrunedMatrix& pruned, const LafParams& params,
                               const LafConfig& config);

struct LafResult {
  Ranking ranking;
  LafParams params;  // alpha per retained row (source order), beta per model
  RunInfo info;
  /// Q after initialisation followed by Q after every M-step.
  std::vector<double> q_trace;
  std::size_t retained_samples = 0;
};

/// Prune, initialise by majority vote, run EM to convergence and rank the
/// models by beta. A matrix with no discriminating rows yields an all-tied
/// ranking with a warning instead of an error.
LafResult run_laf(const PredictionMatrix& matrix, const LafConfig& config = {});

}  // namespace laf
