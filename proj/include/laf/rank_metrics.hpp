#pragma once

#include <cstdint>
#include <vector>

#include "laf/prediction_matrix.hpp"
#include "laf/ranking.hpp"

namespace laf {

/// Two rankings of the same model set, aligned model by model.
class RankPair {
 public:
  /// Throws InvalidArgument listing the symmetric difference when the name
  /// sets differ.
  RankPair(const Ranking& truth, const Ranking& estimate);
  /// Already aligned rank vectors (index i is the same model on both sides).
  RankPair(std::vector<double> truth_ranks, std::vector<double> estimate_ranks);

  std::size_t size() const { return truth_.size(); }
  const std::vector<double>& truth() const { return truth_; }
  const std::vector<double>& estimate() const { return estimate_; }

 private:
  std::vector<double> truth_;
  std::vector<double> estimate_;
};

/// Models ranked by exact accuracy against the true labels.
Ranking ground_truth_ranking(const PredictionMatrix& matrix, const GroundTruth& truth);

/// Product-moment correlation of the two rank vectors. Throws
/// InvalidArgument when either side is constant or n < 2.
double spearman(const RankPair& pair);

/// Tau-b from concordant/discordant/tie pair counts. Throws InvalidArgument
/// when either side is constant or n < 2.
double kendall(const RankPair& pair);

/// Pair counts used by kendall(): P concordant, Q discordant, T tied only
/// in truth, U tied only in estimate.
struct PairCounts {
  std::int64_t concordant = 0;
  std::int64_t discordant = 0;
  std::int64_t truth_ties = 0;
  std::int64_t estimate_ties = 0;
};
PairCounts count_pairs(const RankPair& pair);

/// |top_k(truth) ∩ top_k(estimate)| / |union|, where top_k holds every model
/// with rank <= k. A tied group whose shared rank exceeds k is left out.
double jaccard_topk(const RankPair& pair, int k);

/// Two-sided permutation p-value of the observed Spearman correlation.
/// Enumerates all n! permutations when n <= 7; otherwise draws
/// `permutations` random ones and applies the (count + 1) / (N + 1)
/// correction. Monte-Carlo runs need at least 1000 permutations.
double spearman_pvalue(const RankPair& pair, int permutations, std::uint64_t seed);

}  // namespace laf
