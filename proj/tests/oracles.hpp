#pragma once

// Reference computations used only by tests. Each one follows the textbook
// definition directly and shares no code with the library path it checks.

#include <cmath>
#include <cstdint>
#include <vector>

#include "laf/laf.hpp"

namespace laf::oracle {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Posterior over every class c in [0, C) by direct Bayes enumeration in
/// probability space, uniform prior, no clamping.
inline std::vector<std::vector<double>> bayes_posterior(const PredictionMatrix& m,
                                                        const LafParams& p) {
  const std::size_t C = static_cast<std::size_t>(m.num_classes);
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < m.num_samples(); ++i) {
    std::vector<double> joint(C);
    double z = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      double like = 1.0 / static_cast<double>(C);
      for (std::size_t j = 0; j < m.num_models(); ++j) {
        const double s = sigmoid(p.alpha[i] * p.beta[j]);
        like *= m.at(i, j) == static_cast<Label>(c) ? s : (1.0 - s) / static_cast<double>(C - 1);
      }
      joint[c] = like;
      z += like;
    }
    for (double& v : joint) v /= z;
    out.push_back(std::move(joint));
  }
  return out;
}

/// Q = sum_i sum_c q_ic [log prior(c) + sum_j log L_ij(c)], uniform prior,
/// summed over every class explicitly.
inline double q_by_enumeration(const PredictionMatrix& m, const std::vector<std::vector<double>>& q,
                               const LafParams& p) {
  const std::size_t C = static_cast<std::size_t>(m.num_classes);
  double total = 0.0;
  for (std::size_t i = 0; i < m.num_samples(); ++i) {
    for (std::size_t c = 0; c < C; ++c) {
      double term = std::log(1.0 / static_cast<double>(C));
      for (std::size_t j = 0; j < m.num_models(); ++j) {
        const double s = sigmoid(p.alpha[i] * p.beta[j]);
        term += std::log(m.at(i, j) == static_cast<Label>(c) ? s
                                                              : (1.0 - s) / static_cast<double>(C - 1));
      }
      total += q[i][c] * term;
    }
  }
  return total;
}

/// Expands a candidate-reduced posterior row to all C classes.
inline std::vector<std::vector<double>> expand(const PosteriorTable& t, int num_classes) {
  std::vector<std::vector<double>> out;
  for (const auto& row : t.rows) {
    std::vector<double> full(static_cast<std::size_t>(num_classes), row.other_prob);
    for (std::size_t k = 0; k < row.labels.size(); ++k) {
      full[static_cast<std::size_t>(row.labels[k])] = row.probs[k];
    }
    out.push_back(std::move(full));
  }
  return out;
}

struct BrutePairs {
  std::int64_t p = 0, q = 0, t = 0, u = 0;
};

/// O(n^2) concordant/discordant/tie counting.
inline BrutePairs brute_pairs(const std::vector<double>& x, const std::vector<double>& y) {
  BrutePairs c;
  for (std::size_t a = 0; a < x.size(); ++a) {
    for (std::size_t b = a + 1; b < x.size(); ++b) {
      const double dx = x[a] - x[b];
      const double dy = y[a] - y[b];
      if (dx == 0.0 && dy == 0.0) continue;
      if (dx == 0.0) {
        ++c.t;
      } else if (dy == 0.0) {
        ++c.u;
      } else if ((dx > 0) == (dy > 0)) {
        ++c.p;
      } else {
        ++c.q;
      }
    }
  }
  return c;
}

inline double brute_kendall(const std::vector<double>& x, const std::vector<double>& y) {
  const auto c = brute_pairs(x, y);
  return static_cast<double>(c.p - c.q) /
         std::sqrt(static_cast<double>(c.p + c.q + c.t) * static_cast<double>(c.p + c.q + c.u));
}

/// Pearson correlation via mean-centred vectors.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

/// Fractional (average) ranks, rank 1 for the largest value.
inline std::vector<double> fractional_ranks_desc(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double greater = 0.0, equal = 0.0;
    for (double w : v) {
      greater += w > v[i];
      equal += w == v[i];
    }
    r[i] = greater + (equal + 1.0) / 2.0;
  }
  return r;
}

}  // namespace laf::oracle
