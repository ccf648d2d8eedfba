#include "laf/ranking.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include <json.hpp>

#include "laf/error.hpp"

namespace laf {
namespace {

using nlohmann::json;

void sort_and_rank(std::vector<RankEntry>& entries) {
  std::sort(entries.begin(), entries.end(), [](const RankEntry& a, const RankEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.model < b.model;
  });
  for (std::size_t begin = 0; begin < entries.size();) {
    std::size_t end = begin + 1;
    while (end < entries.size() && entries[end].score == entries[begin].score) ++end;
    // positions begin..end-1 hold ranks begin+1..end
    const double rank = 0.5 * static_cast<double>(begin + 1 + end);
    for (std::size_t k = begin; k < end; ++k) entries[k].rank = rank;
    begin = end;
  }
}

double parse_real(std::string_view s, const std::string& where) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ParseError(where + ": invalid number '" + std::string(s) + "'");
  }
  return value;
}

Ranking finish(std::vector<RankEntry> entries) {
  if (entries.empty()) throw ParseError("ranking has no entries");
  std::unordered_set<std::string_view> seen;
  for (const auto& e : entries) {
    if (e.model.empty()) throw ParseError("ranking entry with empty model name");
    if (!seen.insert(e.model).second) throw ParseError("duplicate model '" + e.model + "'");
    if (std::isnan(e.score)) throw ParseError("model '" + e.model + "': NaN score");
  }
  // Keep the stored ranks; only the order is canonicalised.
  std::sort(entries.begin(), entries.end(), [](const RankEntry& a, const RankEntry& b) {
    if (a.rank != b.rank) return a.rank < b.rank;
    if (a.score != b.score) return a.score > b.score;
    return a.model < b.model;
  });
  return Ranking{std::move(entries)};
}

std::vector<RankEntry> entries_from_json(const json& array) {
  std::vector<RankEntry> entries;
  for (const auto& item : array) {
    RankEntry e;
    e.model = item.at("model").get<std::string>();
    e.score = item.at("score").get<double>();
    e.rank = item.at("rank").get<double>();
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace

const RankEntry& Ranking::find(std::string_view model) const {
  for (const auto& e : entries) {
    if (e.model == model) return e;
  }
  throw InvalidArgument("model '" + std::string(model) + "' is not ranked");
}

Ranking rank_from_scores(std::span<const std::string> names, std::span<const double> scores) {
  if (names.size() != scores.size()) {
    throw InvalidArgument("rank_from_scores: " + std::to_string(names.size()) + " names but " +
                          std::to_string(scores.size()) + " scores");
  }
  Ranking ranking;
  ranking.entries.reserve(names.size());
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (std::isnan(scores[j])) throw InvalidArgument("score of '" + names[j] + "' is NaN");
    ranking.entries.push_back({names[j], scores[j], 0.0});
  }
  sort_and_rank(ranking.entries);
  return ranking;
}

std::string format_real(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ec == std::errc{} ? ptr : buffer);
}

std::string ranking_to_json(const Ranking& ranking, const RunInfo& info) {
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (const auto& e : ranking.entries) {
    nlohmann::ordered_json item;
    item["model"] = e.model;
    item["score"] = e.score;
    item["rank"] = e.rank;
    entries.push_back(std::move(item));
  }
  nlohmann::ordered_json doc;
  doc["ranking"] = std::move(entries);
  doc["converged"] = info.converged;
  doc["iterations"] = info.iterations;
  if (info.warning) doc["warning"] = *info.warning;
  return doc.dump(2) + '\n';
}

std::string ranking_to_csv(const Ranking& ranking) {
  std::string out = "model,score,rank\n";
  for (const auto& e : ranking.entries) {
    out += e.model + ',' + format_real(e.score) + ',' + format_real(e.rank) + '\n';
  }
  return out;
}

Ranking parse_ranking(std::string_view text) {
  const auto start = text.find_first_not_of(" \t\r\n");
  if (start == std::string_view::npos) throw ParseError("empty ranking file");
  if (text[start] == '{' || text[start] == '[') {
    try {
      const json doc = json::parse(text);
      if (doc.is_array()) return finish(entries_from_json(doc));
      return finish(entries_from_json(doc.at("ranking")));
    } catch (const json::exception& e) {
      throw ParseError(std::string("ranking JSON: ") + e.what());
    }
  }

  std::vector<RankEntry> entries;
  bool header = true;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto eol = text.find('\n');
    auto line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    if (header) {
      if (line != "model,score,rank") throw ParseError("ranking CSV header must be 'model,score,rank'");
      header = false;
      continue;
    }
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string_view::npos || line.find(',', c2 + 1) != std::string_view::npos) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 3 fields");
    }
    const std::string where = "line " + std::to_string(line_no);
    RankEntry e;
    e.model = std::string(line.substr(0, c1));
    e.score = parse_real(line.substr(c1 + 1, c2 - c1 - 1), where);
    e.rank = parse_real(line.substr(c2 + 1), where);
    entries.push_back(std::move(e));
  }
  return finish(std::move(entries));
}

}  // namespace laf
