#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace laf {

using Label = std::int32_t;

/// Predicted class labels of n models on m samples, stored row-major
/// (one row per sample, one column per model).
///
/// The struct is a plain value type; validate() checks the invariants that
/// parsers and run_laf() rely on. Low-level routines only need the shape to
/// be consistent, which lets tests build degenerate fixtures directly.
struct PredictionMatrix {
  std::vector<std::string> model_names;
  std::vector<std::string> sample_ids;
  std::vector<Label> labels;  // m * n, row-major
  int num_classes = 0;

  std::size_t num_models() const { return model_names.size(); }
  std::size_t num_samples() const { return sample_ids.size(); }

  Label at(std::size_t sample, std::size_t model) const {
    return labels[sample * num_models() + model];
  }
  std::span<const Label> row(std::size_t sample) const {
    return {labels.data() + sample * num_models(), num_models()};
  }

  /// Throws InvalidArgument unless n >= 2, m >= 1, C >= 1, names and ids are
  /// non-empty and unique, and every label lies in [0, C).
  void validate() const;

  bool operator==(const PredictionMatrix&) const = default;
};

/// Rows of a source matrix on which at least two models disagree.
struct PrunedMatrix {
  PredictionMatrix inner;
  std::vector<std::size_t> origin_index;  // retained row -> source row
  std::size_t pruned_count = 0;
};

/// True labels keyed by sample id.
struct GroundTruth {
  std::vector<std::string> sample_ids;
  std::vector<Label> labels;

  std::size_t size() const { return sample_ids.size(); }

  /// Returns the true label of every sample of `matrix`, in row order.
  /// Throws InvalidArgument listing the sample ids that have no entry, or
  /// naming a label outside [0, C).
  std::vector<Label> align(const PredictionMatrix& matrix) const;

  bool operator==(const GroundTruth&) const = default;
};

/// Removes unanimous rows. Throws NoDiscriminatingData when nothing is left.
PrunedMatrix prune(const PredictionMatrix& matrix);

}  // namespace laf
