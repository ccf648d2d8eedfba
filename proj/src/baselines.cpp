#include "laf/baselines.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "laf/error.hpp"
#include "laf/random.hpp"
#include "laf_engine.hpp"

namespace laf {
namespace {

int parse_int(std::string_view s, const std::string& context) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    throw InvalidArgument("invalid integer '" + std::string(s) + "' in " + context);
  }
  return value;
}

std::size_t fraction_count(double fraction, std::size_t total) {
  // ceil() with slack for products such as 0.27 * 100 = 27.000000000000004
  return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(total) - 1e-9));
}

}  // namespace

std::vector<int> BudgetPlan::default_budgets(int num_models) {
  std::vector<int> out;
  for (int b = std::max(num_models, 1); b <= 180; b += 5) out.push_back(b);
  return out;
}

std::vector<int> BudgetPlan::parse_budgets(const std::string& text) {
  std::vector<int> out;
  if (text.find(':') != std::string::npos) {
    const auto first = text.find(':');
    const auto second = text.find(':', first + 1);
    if (second == std::string::npos || text.find(':', second + 1) != std::string::npos) {
      throw InvalidArgument("budget range must look like start:stop:step, got '" + text + "'");
    }
    const std::string_view view(text);
    const int start = parse_int(view.substr(0, first), "budget range");
    const int stop = parse_int(view.substr(first + 1, second - first - 1), "budget range");
    const int step = parse_int(view.substr(second + 1), "budget range");
    if (start < 1 || step < 1 || stop < start) {
      throw InvalidArgument("budget range needs 1 <= start <= stop and step >= 1, got '" + text + "'");
    }
    for (int b = start; b <= stop; b += step) out.push_back(b);
    return out;
  }
  std::string_view rest(text);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const int b = parse_int(rest.substr(0, comma), "budget list");
    if (b < 1) throw InvalidArgument("budgets must be positive");
    out.push_back(b);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  if (out.empty()) throw InvalidArgument("empty budget list");
  return out;
}

Ranking accuracy_ranking(const PredictionMatrix& matrix, std::span<const Label> truth_labels,
                         std::span<const std::size_t> rows) {
  const std::size_t n = matrix.num_models();
  std::vector<double> correct(n, 0.0);
  for (const std::size_t i : rows) {
    for (std::size_t j = 0; j < n; ++j) correct[j] += matrix.at(i, j) == truth_labels[i] ? 1.0 : 0.0;
  }
  const double count = static_cast<double>(rows.size());
  for (double& c : correct) c /= count;
  return rank_from_scores(matrix.model_names, correct);
}

Ranking random_rank(const PredictionMatrix& matrix, const GroundTruth& truth, int budget,
                    std::uint64_t seed) {
  if (budget < 1 || static_cast<std::size_t>(budget) > matrix.num_samples()) {
    throw InvalidArgument("random: budget " + std::to_string(budget) + " outside [1, " +
                          std::to_string(matrix.num_samples()) + "]");
  }
  const auto labels = truth.align(matrix);
  Rng rng(seed);
  const auto rows =
      sample_without_replacement(rng, matrix.num_samples(), static_cast<std::size_t>(budget));
  return accuracy_ranking(matrix, labels, rows);
}

std::vector<double> sds_scores(const PredictionMatrix& matrix, const SdsOptions& options) {
  const std::size_t n = matrix.num_models();
  if (n < 4) throw InvalidArgument("sds: needs at least 4 models, got " + std::to_string(n));
  const std::size_t group = fraction_count(options.group_fraction, n);
  if (group < 1 || 2 * group > n) {
    throw InvalidArgument("sds: group fraction gives groups of " + std::to_string(group) +
                          " models out of " + std::to_string(n));
  }
  const std::size_t m = matrix.num_samples();
  const auto pseudo = detail::majority(matrix.labels, n);

  std::vector<std::size_t> hits(n, 0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) hits[j] += matrix.at(i, j) == pseudo[i];
  }
  std::vector<std::size_t> models(n);
  std::iota(models.begin(), models.end(), std::size_t{0});
  std::sort(models.begin(), models.end(), [&](std::size_t a, std::size_t b) {
    if (hits[a] != hits[b]) return hits[a] > hits[b];
    return matrix.model_names[a] < matrix.model_names[b];
  });
  const std::span<const std::size_t> top(models.data(), group);
  const std::span<const std::size_t> bottom(models.data() + n - group, group);

  std::vector<double> scores(m);
  const double size = static_cast<double>(group);
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t top_hits = 0, bottom_hits = 0;
    for (std::size_t j : top) top_hits += matrix.at(i, j) == pseudo[i];
    for (std::size_t j : bottom) bottom_hits += matrix.at(i, j) == pseudo[i];
    scores[i] = static_cast<double>(top_hits) / size - static_cast<double>(bottom_hits) / size;
  }
  return scores;
}

std::vector<std::size_t> sds_pool(const PredictionMatrix& matrix, const SdsOptions& options) {
  const auto scores = sds_scores(matrix, options);
  std::vector<std::size_t> rows(matrix.num_samples());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return matrix.sample_ids[a] < matrix.sample_ids[b];
  });
  rows.resize(std::max<std::size_t>(1, fraction_count(options.pool_fraction, rows.size())));
  return rows;
}

Ranking sds_rank(const PredictionMatrix& matrix, const GroundTruth& truth, int budget,
                 std::uint64_t seed, const SdsOptions& options) {
  const auto pool = sds_pool(matrix, options);
  if (budget < 1 || static_cast<std::size_t>(budget) > pool.size()) {
    throw InvalidArgument("sds: budget " + std::to_string(budget) + " exceeds the pool of " +
                          std::to_string(pool.size()) + " samples");
  }
  const auto labels = truth.align(matrix);
  Rng rng(seed);
  const auto picks = sample_without_replacement(rng, pool.size(), static_cast<std::size_t>(budget));
  std::vector<std::size_t> rows(picks.size());
  for (std::size_t k = 0; k < picks.size(); ++k) rows[k] = pool[picks[k]];
  return accuracy_ranking(matrix, labels, rows);
}

}  // namespace laf
