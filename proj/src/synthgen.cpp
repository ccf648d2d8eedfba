#include "laf/synthgen.hpp"

#include <cmath>
#include <string>

#include "laf/error.hpp"
#include "laf/random.hpp"

namespace laf {
namespace {

std::string padded(const char* prefix, std::size_t value, std::size_t width) {
  std::string digits = std::to_string(value);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return prefix + digits;
}

}  // namespace

void SynthSpec::validate() const {
  if (num_models < 2) throw InvalidArgument("num_models must be at least 2");
  if (num_samples < 1) throw InvalidArgument("num_samples must be at least 1");
  if (num_classes < 2) throw InvalidArgument("num_classes must be at least 2");
  if (!accuracies.empty()) {
    if (accuracies.size() != static_cast<std::size_t>(num_models)) {
      throw InvalidArgument("expected " + std::to_string(num_models) + " accuracies, got " +
                            std::to_string(accuracies.size()));
    }
    for (double a : accuracies) {
      if (!(a >= 0.0 && a <= 1.0)) throw InvalidArgument("accuracies must lie in [0, 1]");
    }
  } else {
    if (!(acc_min >= 0.0 && acc_max <= 1.0 && acc_min <= acc_max)) {
      throw InvalidArgument("accuracy range must satisfy 0 <= min <= max <= 1");
    }
  }
  if (!(hard_fraction >= 0.0 && hard_fraction < 1.0)) {
    throw InvalidArgument("hard_fraction must lie in [0, 1)");
  }
  if (!(hard_penalty >= 0.0 && hard_penalty <= 1.0)) {
    throw InvalidArgument("hard_penalty must lie in [0, 1]");
  }
}

std::vector<double> SynthSpec::target_accuracies() const {
  if (!accuracies.empty()) return accuracies;
  std::vector<double> out(static_cast<std::size_t>(num_models));
  for (int j = 0; j < num_models; ++j) {
    out[static_cast<std::size_t>(j)] =
        acc_min + (acc_max - acc_min) * static_cast<double>(j) / static_cast<double>(num_models - 1);
  }
  return out;
}

SynthData generate(const SynthSpec& spec) {
  spec.validate();
  const auto n = static_cast<std::size_t>(spec.num_models);
  const auto m = static_cast<std::size_t>(spec.num_samples);
  const auto classes = static_cast<std::uint64_t>(spec.num_classes);
  const auto accuracy = spec.target_accuracies();

  SynthData data;
  auto& matrix = data.matrix;
  matrix.num_classes = spec.num_classes;
  const auto model_width = std::to_string(n).size();
  const auto sample_width = std::to_string(m).size();
  for (std::size_t j = 0; j < n; ++j) matrix.model_names.push_back(padded("f", j + 1, model_width));
  matrix.sample_ids.reserve(m);
  matrix.labels.reserve(m * n);
  data.truth.sample_ids.reserve(m);
  data.truth.labels.reserve(m);

  Rng rng(spec.seed);
  for (std::size_t i = 0; i < m; ++i) {
    const auto truth = static_cast<Label>(uniform_index(rng, classes));
    const bool hard = uniform_real(rng) < spec.hard_fraction;
    for (std::size_t j = 0; j < n; ++j) {
      const double p = hard ? accuracy[j] * (1.0 - spec.hard_penalty) : accuracy[j];
      Label predicted = truth;
      if (!(uniform_real(rng) < p)) {
        predicted = static_cast<Label>(uniform_index(rng, classes - 1));
        if (predicted >= truth) ++predicted;
      }
      matrix.labels.push_back(predicted);
    }
    auto id = padded("x", i + 1, sample_width);
    matrix.sample_ids.push_back(id);
    data.truth.sample_ids.push_back(std::move(id));
    data.truth.labels.push_back(truth);
  }
  return data;
}

std::vector<double> realized_accuracy(const PredictionMatrix& matrix, const GroundTruth& truth) {
  const auto labels = truth.align(matrix);
  const std::size_t n = matrix.num_models();
  std::vector<std::size_t> correct(n, 0);
  for (std::size_t i = 0; i < matrix.num_samples(); ++i) {
    for (std::size_t j = 0; j < n; ++j) correct[j] += matrix.at(i, j) == labels[i];
  }
  std::vector<double> out(n);
  const double m = static_cast<double>(matrix.num_samples());
  for (std::size_t j = 0; j < n; ++j) out[j] = static_cast<double>(correct[j]) / m;
  return out;
}

}  // namespace laf
