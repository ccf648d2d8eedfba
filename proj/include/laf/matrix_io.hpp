#pragma once

#include <iosfwd>
#include <string>
#include <string_view>

#include "laf/prediction_matrix.hpp"

namespace laf {

// Prediction matrix CSV:
//
//   #classes=3            (optional; otherwise C = 1 + max label)
//   sample_id,f1,f2
//   x1,0,1
//   x2,2,2
//
// Either `\n` or `\r\n` line endings are accepted; `\n` is emitted. The JSON
// form is an object with `model_names`, `sample_ids`, `num_classes` and a
// row-major `labels` array of arrays.

PredictionMatrix parse_predictions_csv(std::string_view text);
PredictionMatrix parse_predictions_json(std::string_view text);
/// Dispatches on the first non-blank character: `{` selects JSON.
PredictionMatrix parse_predictions(std::string_view text);

std::string predictions_to_csv(const PredictionMatrix& matrix);
std::string predictions_to_json(const PredictionMatrix& matrix);

// Ground truth CSV has the header `sample_id,label`; the JSON form is an
// object with `sample_ids` and `labels`.
GroundTruth parse_ground_truth_csv(std::string_view text);
GroundTruth parse_ground_truth_json(std::string_view text);
GroundTruth parse_ground_truth(std::string_view text);

std::string ground_truth_to_csv(const GroundTruth& truth);
std::string ground_truth_to_json(const GroundTruth& truth);

/// Reads a whole file; throws Error if it cannot be opened.
std::string read_file(const std::string& path);
/// Writes `contents` verbatim (binary mode, no newline translation).
void write_file(const std::string& path, std::string_view contents);

}  // namespace laf
