#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "laf/prediction_matrix.hpp"

namespace laf {

/// Configuration of a synthetic prediction matrix with known ground truth.
struct SynthSpec {
  int num_models = 2;
  int num_samples = 1;
  int num_classes = 2;
  /// Per-model target accuracy. When empty, accuracies are spaced evenly
  /// from acc_min (first model) to acc_max (last model).
  std::vector<double> accuracies;
  double acc_min = 0.5;
  double acc_max = 0.9;
  double hard_fraction = 0.0;  // probability that a sample is hard
  double hard_penalty = 0.5;   // hard samples scale accuracy by (1 - penalty)
  std::uint64_t seed = 0;

  void validate() const;
  /// The accuracy vector actually used by generate().
  std::vector<double> target_accuracies() const;
};

struct SynthData {
  PredictionMatrix matrix;
  GroundTruth truth;
};

/// Draws a matrix from `spec`. For each sample in order: the true label
/// (uniform over C), one hardness draw, then for each model one accuracy
/// draw and, on a miss, one draw of a uniformly random wrong label. All
/// draws come from a single mt19937_64 seeded with `spec.seed`.
///
/// Models are named f01..fNN and samples x0001..xMMMM (zero-padded so that
/// lexical and numeric order agree).
SynthData generate(const SynthSpec& spec);

/// Per-model fraction of samples whose prediction equals the true label.
std::vector<double> realized_accuracy(const PredictionMatrix& matrix, const GroundTruth& truth);

}  // namespace laf
