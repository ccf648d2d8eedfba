#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "laf/prediction_matrix.hpp"
#include "laf/ranking.hpp"

namespace laf {

/// Labeling budgets and repetition count for the sampling baselines.
struct BudgetPlan {
  std::vector<int> budgets;
  int repetitions = 50;
  std::uint64_t seed = 0;

  /// Budgets n, n+5, ..., up to 180.
  static std::vector<int> default_budgets(int num_models);
  /// Parses `start:stop:step` (inclusive stop) or a comma-separated list.
  static std::vector<int> parse_budgets(const std::string& text);
};

/// Ranks models by accuracy on `budget` samples drawn uniformly without
/// replacement.
Ranking random_rank(const PredictionMatrix& matrix, const GroundTruth& truth, int budget,
                    std::uint64_t seed);

struct SdsOptions {
  double group_fraction = 0.27;  // size of the top and bottom model groups
  double pool_fraction = 0.25;   // share of most discriminative samples kept
};

/// Item-discrimination score of every sample: share of the top model group
/// matching the majority label minus the share of the bottom group. Needs
/// at least four models.
std::vector<double> sds_scores(const PredictionMatrix& matrix, const SdsOptions& options = {});

/// Rows making up the SDS candidate pool: the ceil(pool_fraction * m) best
/// scores, ties broken by ascending sample id. Returned in that order.
std::vector<std::size_t> sds_pool(const PredictionMatrix& matrix, const SdsOptions& options = {});

/// Ranks models by accuracy on `budget` samples drawn uniformly from the
/// SDS pool.
Ranking sds_rank(const PredictionMatrix& matrix, const GroundTruth& truth, int budget,
                 std::uint64_t seed, const SdsOptions& options = {});

/// Ranks models by accuracy on the given subset of rows.
Ranking accuracy_ranking(const PredictionMatrix& matrix, std::span<const Label> truth_labels,
                         std::span<const std::size_t> rows);

}  // namespace laf
