#include "laf/prediction_matrix.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "laf/error.hpp"

namespace laf {
namespace {

void check_names(const std::vector<std::string>& names, const char* what) {
  std::unordered_set<std::string> seen;
  for (const auto& name : names) {
    if (name.empty()) throw InvalidArgument(std::string("empty ") + what);
    if (!seen.insert(name).second) {
      throw InvalidArgument(std::string("duplicate ") + what + " '" + name + "'");
    }
  }
}

}  // namespace

void PredictionMatrix::validate() const {
  if (num_models() < 2) throw InvalidArgument("need at least 2 models");
  if (num_samples() < 1) throw InvalidArgument("no samples");
  if (num_classes < 1) throw InvalidArgument("num_classes must be positive");
  if (labels.size() != num_models() * num_samples()) {
    throw InvalidArgument("label matrix size does not match models x samples");
  }
  check_names(model_names, "model name");
  check_names(sample_ids, "sample id");
  for (std::size_t i = 0; i < num_samples(); ++i) {
    for (std::size_t j = 0; j < num_models(); ++j) {
      const Label y = at(i, j);
      if (y < 0 || y >= num_classes) {
        std::ostringstream msg;
        msg << "row " << sample_ids[i] << ", column " << model_names[j] << ": label " << y
            << " outside [0, " << num_classes << ")";
        throw InvalidArgument(msg.str());
      }
    }
  }
}

std::vector<Label> GroundTruth::align(const PredictionMatrix& matrix) const {
  std::unordered_map<std::string_view, Label> by_id;
  by_id.reserve(sample_ids.size());
  for (std::size_t i = 0; i < sample_ids.size(); ++i) by_id.emplace(sample_ids[i], labels[i]);

  std::vector<Label> out;
  out.reserve(matrix.num_samples());
  std::vector<std::string_view> missing;
  for (const auto& id : matrix.sample_ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      missing.push_back(id);
      continue;
    }
    if (it->second < 0 || it->second >= matrix.num_classes) {
      std::ostringstream msg;
      msg << "sample " << id << ": true label " << it->second << " outside [0, "
          << matrix.num_classes << ")";
      throw InvalidArgument(msg.str());
    }
    out.push_back(it->second);
  }
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << "ground truth is missing " << missing.size() << " sample(s):";
    for (std::size_t k = 0; k < missing.size() && k < 20; ++k) msg << ' ' << missing[k];
    if (missing.size() > 20) msg << " ...";
    throw InvalidArgument(msg.str());
  }
  return out;
}

PrunedMatrix prune(const PredictionMatrix& matrix) {
  if (matrix.num_models() == 0) throw InvalidArgument("matrix has no models");
  PrunedMatrix out;
  out.inner.model_names = matrix.model_names;
  out.inner.num_classes = matrix.num_classes;
  for (std::size_t i = 0; i < matrix.num_samples(); ++i) {
    const auto row = matrix.row(i);
    const bool unanimous =
        std::all_of(row.begin(), row.end(), [&](Label y) { return y == row.front(); });
    if (unanimous) {
      ++out.pruned_count;
      continue;
    }
    out.inner.sample_ids.push_back(matrix.sample_ids[i]);
    out.inner.labels.insert(out.inner.labels.end(), row.begin(), row.end());
    out.origin_index.push_back(i);
  }
  if (out.origin_index.empty()) throw NoDiscriminatingData();
  return out;
}

}  // namespace laf
