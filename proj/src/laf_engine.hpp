#pragma once

// Internal EM machinery shared by the public step functions and run_laf().
//
// A Problem is a set of weighted rows: a row of weight w stands for w
// identical samples. Identical samples keep identical alpha throughout EM
// (same start, same gradient), so collapsing them is exact as long as the
// alpha step is scaled by 1 / (w * n) and the beta step by 1 / W, W being
// the total weight. The public functions use unit weights.

#include <cstdint>
#include <span>
#include <vector>

#include "laf/laf.hpp"

namespace laf::detail {

struct Problem {
  std::size_t num_rows = 0;
  std::size_t num_models = 0;
  int num_classes = 0;
  std::vector<Label> labels;    // num_rows * num_models
  std::vector<double> weights;  // per row
  double total_weight = 0.0;

  // Distinct predicted labels of row i live in
  // cand_labels[cand_offset[i] .. cand_offset[i + 1]), ascending.
  std::vector<std::size_t> cand_offset;
  std::vector<Label> cand_labels;
  // Position of labels[i * n + j] inside row i's candidate list.
  std::vector<std::uint32_t> cand_of;

  std::vector<double> log_prior;  // per class
  // Per row, for the classes nobody predicted: log of their total prior
  // mass and their prior-weighted mean log prior.
  std::vector<double> other_log_mass;
  std::vector<double> other_mean_log_prior;

  std::size_t candidates(std::size_t row) const { return cand_offset[row + 1] - cand_offset[row]; }
  int other_multiplicity(std::size_t row) const {
    return num_classes - static_cast<int>(candidates(row));
  }
};

/// Majority label per row (ties to the smallest label).
std::vector<Label> majority(std::span<const Label> labels, std::size_t num_models);

/// Builds a problem from row-major labels. `pseudo` (one per row) is used
/// only for the empirical prior.
Problem make_problem(std::vector<Label> labels, std::vector<double> weights,
                     std::size_t num_models, int num_classes, Prior prior,
                     std::span<const Label> pseudo);

Problem make_problem(const PrunedMatrix& pruned, Prior prior);

LafParams initial_params(const Problem& problem, std::span<const Label> pseudo);

/// Flattened posterior: cand_prob aligned with Problem::cand_labels and the
/// total mass of the unpredicted classes per row.
struct Posterior {
  std::vector<double> cand_prob;
  std::vector<double> other_mass;
};

Posterior expectation(const Problem& problem, const LafParams& params, double prob_floor);

/// Weighted observed-data log-likelihood log p(labels | params).
double log_likelihood(const Problem& problem, const LafParams& params, double prob_floor);

double q_value(const Problem& problem, const Posterior& posterior, const LafParams& params,
               double prob_floor);

/// Returns Q and writes dQ/dalpha, dQ/dbeta into `gradient`.
double q_gradient(const Problem& problem, const Posterior& posterior, const LafParams& params,
                  double prob_floor, LafParams& gradient);

LafParams maximization(const Problem& problem, const Posterior& posterior, LafParams params,
                       const LafConfig& config);

struct EmOutcome {
  LafParams params;
  std::vector<double> q_trace;
  bool converged = false;
  int iterations = 0;
};

EmOutcome run_em(const Problem& problem, LafParams start, const LafConfig& config);

Posterior to_flat(const Problem& problem, const PosteriorTable& table);
PosteriorTable to_table(const Problem& problem, const Posterior& posterior);

}  // namespace laf::detail
