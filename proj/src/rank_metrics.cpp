#include "laf/rank_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "laf/error.hpp"
#include "laf/random.hpp"
#include "laf/synthgen.hpp"

namespace laf {
namespace {

std::int64_t tied_pairs(std::int64_t run) { return run * (run - 1) / 2; }

// Merge sort of `v` counting strict inversions (a before b with v[a] > v[b]).
std::int64_t count_inversions(std::vector<double>& v, std::vector<double>& scratch,
                              std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = count_inversions(v, scratch, lo, mid) + count_inversions(v, scratch, mid, hi);
  std::size_t a = lo, b = mid, out = lo;
  while (a < mid && b < hi) {
    if (v[b] < v[a]) {
      swaps += static_cast<std::int64_t>(mid - a);
      scratch[out++] = v[b++];
    } else {
      scratch[out++] = v[a++];
    }
  }
  while (a < mid) scratch[out++] = v[a++];
  while (b < hi) scratch[out++] = v[b++];
  std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo),
            scratch.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

void require_spread(const std::vector<double>& v, const char* side) {
  if (v.size() < 2) throw InvalidArgument("rank correlation needs at least 2 models");
  if (std::all_of(v.begin(), v.end(), [&](double r) { return r == v.front(); })) {
    throw InvalidArgument(std::string("correlation undefined: ") + side + " ranking is constant");
  }
}

// Centered, scaled copy of v so that the correlation becomes a dot product.
std::vector<double> standardize(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  std::vector<double> out(v.size());
  double norm = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = v[i] - mean;
    norm += out[i] * out[i];
  }
  norm = std::sqrt(norm);
  for (double& x : out) x /= norm;
  return out;
}

double dot_permuted(const std::vector<double>& a, const std::vector<double>& b,
                    const std::vector<std::size_t>& perm) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[perm[i]];
  return sum;
}

}  // namespace

RankPair::RankPair(const Ranking& truth, const Ranking& estimate) {
  std::map<std::string_view, double> est;
  for (const auto& e : estimate.entries) est.emplace(e.model, e.rank);
  std::set<std::string_view> only_truth, only_estimate;
  for (const auto& e : truth.entries) {
    auto it = est.find(e.model);
    if (it == est.end()) {
      only_truth.insert(e.model);
      continue;
    }
    truth_.push_back(e.rank);
    estimate_.push_back(it->second);
  }
  for (const auto& e : estimate.entries) {
    if (std::none_of(truth.entries.begin(), truth.entries.end(),
                     [&](const RankEntry& t) { return t.model == e.model; })) {
      only_estimate.insert(e.model);
    }
  }
  if (!only_truth.empty() || !only_estimate.empty()) {
    std::string msg = "rankings rank different models;";
    if (!only_truth.empty()) {
      msg += " only in truth:";
      for (auto name : only_truth) msg += ' ' + std::string(name);
      if (!only_estimate.empty()) msg += ';';
    }
    if (!only_estimate.empty()) {
      msg += " only in estimate:";
      for (auto name : only_estimate) msg += ' ' + std::string(name);
    }
    throw InvalidArgument(msg);
  }
}

RankPair::RankPair(std::vector<double> truth_ranks, std::vector<double> estimate_ranks)
    : truth_(std::move(truth_ranks)), estimate_(std::move(estimate_ranks)) {
  if (truth_.size() != estimate_.size()) throw InvalidArgument("rank vectors differ in length");
}

Ranking ground_truth_ranking(const PredictionMatrix& matrix, const GroundTruth& truth) {
  const auto accuracy = realized_accuracy(matrix, truth);
  return rank_from_scores(matrix.model_names, accuracy);
}

double spearman(const RankPair& pair) {
  const auto& r = pair.truth();
  const auto& e = pair.estimate();
  require_spread(r, "truth");
  require_spread(e, "estimate");
  const double n = static_cast<double>(r.size());
  double sr = 0.0, se = 0.0, sre = 0.0, srr = 0.0, see = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    sr += r[i];
    se += e[i];
    sre += r[i] * e[i];
    srr += r[i] * r[i];
    see += e[i] * e[i];
  }
  const double rho = (n * sre - sr * se) / std::sqrt((n * srr - sr * sr) * (n * see - se * se));
  return std::clamp(rho, -1.0, 1.0);
}

PairCounts count_pairs(const RankPair& pair) {
  const std::size_t n = pair.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto& x = pair.truth();
  const auto& y = pair.estimate();
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] != x[b] ? x[a] < x[b] : y[a] < y[b];
  });

  std::int64_t x_ties = 0, joint_ties = 0;
  for (std::size_t a = 0; a < n;) {
    std::size_t b = a;
    while (b < n && x[order[b]] == x[order[a]]) ++b;
    x_ties += tied_pairs(static_cast<std::int64_t>(b - a));
    for (std::size_t c = a; c < b;) {
      std::size_t d = c;
      while (d < b && y[order[d]] == y[order[c]]) ++d;
      joint_ties += tied_pairs(static_cast<std::int64_t>(d - c));
      c = d;
    }
    a = b;
  }

  std::vector<double> ys(n), scratch(n);
  for (std::size_t k = 0; k < n; ++k) ys[k] = y[order[k]];
  const std::int64_t discordant = count_inversions(ys, scratch, 0, n);

  std::int64_t y_ties = 0;
  for (std::size_t a = 0; a < n;) {
    std::size_t b = a;
    while (b < n && ys[b] == ys[a]) ++b;
    y_ties += tied_pairs(static_cast<std::int64_t>(b - a));
    a = b;
  }

  const std::int64_t total = tied_pairs(static_cast<std::int64_t>(n));
  PairCounts counts;
  counts.discordant = discordant;
  counts.truth_ties = x_ties - joint_ties;
  counts.estimate_ties = y_ties - joint_ties;
  counts.concordant = total - x_ties - y_ties + joint_ties - discordant;
  return counts;
}

double kendall(const RankPair& pair) {
  require_spread(pair.truth(), "truth");
  require_spread(pair.estimate(), "estimate");
  const auto c = count_pairs(pair);
  const auto tied_free = c.concordant + c.discordant;
  return static_cast<double>(c.concordant - c.discordant) /
         std::sqrt(static_cast<double>(tied_free + c.truth_ties) *
                   static_cast<double>(tied_free + c.estimate_ties));
}

double jaccard_topk(const RankPair& pair, int k) {
  if (k < 1 || static_cast<std::size_t>(k) > pair.size()) {
    throw InvalidArgument("k = " + std::to_string(k) + " outside [1, " +
                          std::to_string(pair.size()) + "]");
  }
  const double limit = static_cast<double>(k);
  std::size_t both = 0, either = 0;
  for (std::size_t i = 0; i < pair.size(); ++i) {
    const bool in_truth = pair.truth()[i] <= limit;
    const bool in_estimate = pair.estimate()[i] <= limit;
    both += in_truth && in_estimate;
    either += in_truth || in_estimate;
  }
  // Both top-k sets can be empty when a tied group spans rank 1..k.
  if (either == 0) return 1.0;
  return static_cast<double>(both) / static_cast<double>(either);
}

double spearman_pvalue(const RankPair& pair, int permutations, std::uint64_t seed) {
  require_spread(pair.truth(), "truth");
  require_spread(pair.estimate(), "estimate");
  const auto a = standardize(pair.truth());
  const auto b = standardize(pair.estimate());
  const std::size_t n = a.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  // Slack so permutations reaching exactly the observed |rho| are counted
  // despite rounding.
  const double observed = std::abs(dot_permuted(a, b, perm)) - 1e-12;

  if (n <= 7) {
    std::size_t hits = 0, total = 0;
    do {
      ++total;
      hits += std::abs(dot_permuted(a, b, perm)) >= observed;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return static_cast<double>(hits) / static_cast<double>(total);
  }

  if (permutations < 1000) throw InvalidArgument("at least 1000 permutations are required");
  Rng rng(seed);
  std::size_t hits = 0;
  for (int t = 0; t < permutations; ++t) {
    for (std::size_t k = n - 1; k > 0; --k) std::swap(perm[k], perm[uniform_index(rng, k + 1)]);
    hits += std::abs(dot_permuted(a, b, perm)) >= observed;
  }
  return static_cast<double>(hits + 1) / static_cast<double>(permutations + 1);
}

}  // namespace laf
