#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "laf/laf.hpp"
#include "laf/prediction_matrix.hpp"
#include "laf/random.hpp"

namespace laf::test {

/// Matrix with models f1..fn and samples x1..xm.
inline PredictionMatrix make_matrix(const std::vector<std::vector<Label>>& rows, int num_classes) {
  PredictionMatrix m;
  m.num_classes = num_classes;
  for (std::size_t j = 0; j < rows.front().size(); ++j) m.model_names.push_back("f" + std::to_string(j + 1));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    m.sample_ids.push_back("x" + std::to_string(i + 1));
    m.labels.insert(m.labels.end(), rows[i].begin(), rows[i].end());
  }
  return m;
}

inline PrunedMatrix as_pruned(const PredictionMatrix& m) {
  PrunedMatrix p;
  p.inner = m;
  for (std::size_t i = 0; i < m.num_samples(); ++i) p.origin_index.push_back(i);
  return p;
}

/// Uniformly random labels.
inline PredictionMatrix random_matrix(Rng& rng, std::size_t m, std::size_t n, int classes) {
  std::vector<std::vector<Label>> rows(m, std::vector<Label>(n));
  for (auto& row : rows) {
    for (auto& y : row) y = static_cast<Label>(uniform_index(rng, static_cast<std::uint64_t>(classes)));
  }
  return make_matrix(rows, classes);
}

/// Random matrix whose every row has at least two distinct labels.
inline PredictionMatrix random_discordant_matrix(Rng& rng, std::size_t m, std::size_t n, int classes) {
  auto mat = random_matrix(rng, m, n, classes);
  for (std::size_t i = 0; i < m; ++i) {
    auto* row = mat.labels.data() + i * n;
    if (std::all_of(row, row + n, [&](Label y) { return y == row[0]; })) {
      row[n - 1] = (row[0] + 1) % classes;
    }
  }
  return mat;
}

inline LafParams random_params(Rng& rng, std::size_t m, std::size_t n, double lo, double hi) {
  LafParams p;
  for (std::size_t i = 0; i < m; ++i) p.alpha.push_back(lo + (hi - lo) * uniform_real(rng));
  for (std::size_t j = 0; j < n; ++j) p.beta.push_back(lo + (hi - lo) * uniform_real(rng));
  return p;
}

}  // namespace laf::test
