#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace laf {

struct RankEntry {
  std::string model;
  double score = 0.0;
  double rank = 0.0;  // 1 = best; tied scores share the mean of their ranks

  bool operator==(const RankEntry&) const = default;
};

/// Models ordered by descending score, equal scores by ascending name.
struct Ranking {
  std::vector<RankEntry> entries;

  std::size_t size() const { return entries.size(); }
  /// Throws InvalidArgument if `model` is not ranked.
  const RankEntry& find(std::string_view model) const;

  bool operator==(const Ranking&) const = default;
};

/// Sorts by descending score and assigns fractional ranks. NaN scores and
/// length mismatches throw InvalidArgument.
Ranking rank_from_scores(std::span<const std::string> names, std::span<const double> scores);

/// Metadata written next to a ranking.
struct RunInfo {
  bool converged = true;
  int iterations = 0;
  std::optional<std::string> warning;
};

/// {"ranking": [{"model", "score", "rank"}...], "converged", "iterations",
/// "warning"?}
std::string ranking_to_json(const Ranking& ranking, const RunInfo& info);
/// `model,score,rank` with a header line.
std::string ranking_to_csv(const Ranking& ranking);

/// Accepts the JSON object above, a bare JSON array of entries, or the CSV
/// form. Entries are re-sorted into canonical order.
Ranking parse_ranking(std::string_view text);

/// Shortest decimal representation that round-trips to the same double.
std::string format_real(double value);

}  // namespace laf
