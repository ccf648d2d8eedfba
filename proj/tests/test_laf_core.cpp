#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "fixtures.hpp"
#include "laf/error.hpp"
#include "laf/laf.hpp"
#include "laf/synthgen.hpp"
#include "oracles.hpp"

using namespace laf;

namespace {

// Five discordant samples plus one unanimous sample; majority-vote accuracy
// of (f1, f2, f3) on the retained five is (4/5, 1/5, 3/5).
PredictionMatrix motivating_matrix() {
  return test::make_matrix({{0, 0, 1}, {1, 2, 1}, {2, 0, 2}, {0, 1, 2}, {2, 1, 0}, {2, 2, 2}}, 3);
}

double entropy(const PosteriorTable& t) {
  double h = 0.0;
  for (const auto& row : t.rows) {
    for (double p : row.probs) h -= p > 0 ? p * std::log(p) : 0.0;
    if (row.other_prob > 0) h -= row.other_multiplicity * row.other_prob * std::log(row.other_prob);
  }
  return h;
}

std::vector<double> ranks_of(const Ranking& r, const std::vector<std::string>& names) {
  std::vector<double> out;
  for (const auto& n : names) out.push_back(r.find(n).rank);
  return out;
}

}  // namespace

TEST(MajorityVote, Examples) {
  EXPECT_EQ(majority_vote(test::as_pruned(test::make_matrix({{0, 0, 1}}, 2))), (std::vector<Label>{0}));
  EXPECT_EQ(majority_vote(test::as_pruned(test::make_matrix({{2, 2, 2}}, 3))), (std::vector<Label>{2}));
  EXPECT_EQ(majority_vote(test::as_pruned(test::make_matrix({{1, 0}}, 2))), (std::vector<Label>{0}));
  EXPECT_EQ(majority_vote(test::as_pruned(test::make_matrix({{3, 1, 3, 1, 2}}, 4))), (std::vector<Label>{1}));
}

TEST(InitParams, AlphaIsAgreementRatio) {
  const auto p = test::as_pruned(test::make_matrix({{0, 0, 1}}, 2));
  const auto params = init_params(p, majority_vote(p));
  ASSERT_EQ(params.alpha.size(), 1u);
  EXPECT_DOUBLE_EQ(params.alpha[0], 1.0 - 1.0 / 3.0);
}

TEST(InitParams, BetaIsPseudoAccuracy) {
  const auto two = test::as_pruned(test::make_matrix({{0, 0, 1}, {1, 1, 0}}, 2));
  EXPECT_DOUBLE_EQ(init_params(two, majority_vote(two)).beta[1], 1.0);

  const auto pruned = prune(motivating_matrix());
  ASSERT_EQ(pruned.inner.num_samples(), 5u);
  const auto params = init_params(pruned, majority_vote(pruned));
  EXPECT_DOUBLE_EQ(params.beta[0], 4.0 / 5.0);
  EXPECT_DOUBLE_EQ(params.beta[1], 1.0 / 5.0);
  EXPECT_DOUBLE_EQ(params.beta[2], 3.0 / 5.0);
}

TEST(EStep, TwoModelExample) {
  const auto p = test::as_pruned(test::make_matrix({{0, 1}}, 2));
  const LafParams params{{0.5}, {1.0, 0.0}};
  const auto post = e_step(p, params, {});
  ASSERT_EQ(post.rows.size(), 1u);
  const auto& row = post.rows[0];
  EXPECT_EQ(row.labels, (std::vector<Label>{0, 1}));
  EXPECT_EQ(row.other_multiplicity, 0);
  EXPECT_NEAR(row.probs[0], 0.6225, 5e-5);
  EXPECT_NEAR(row.probs[1], 0.3775, 5e-5);

  const auto oracle = oracle::bayes_posterior(p.inner, params);
  EXPECT_NEAR(row.probs[0], oracle[0][0], 1e-14);
}

TEST(EStep, ZeroAlphaGivesPriorForBinaryLabels) {
  const auto p = test::as_pruned(test::make_matrix({{0, 1, 1}, {1, 0, 0}}, 2));
  const LafParams params{{0.0, 0.0}, {1.3, -0.4, 2.0}};
  for (const auto& row : e_step(p, params, {}).rows) {
    for (double q : row.probs) EXPECT_NEAR(q, 0.5, 1e-15);
  }
}

TEST(EStep, ZeroAlphaWeighsVotesByClassCount) {
  // sigma = 1/2 against (1/2) / (C - 1): each vote multiplies by C - 1.
  const auto p = test::as_pruned(test::make_matrix({{0, 3, 3}}, 5));
  const LafParams params{{0.0}, {1.3, -0.4, 2.0}};
  const auto row = e_step(p, params, {}).rows.at(0);
  const double z = 4.0 + 16.0 + 3.0;
  EXPECT_NEAR(row.probs[0], 4.0 / z, 1e-15);
  EXPECT_NEAR(row.probs[1], 16.0 / z, 1e-15);
  EXPECT_NEAR(row.other_prob, 1.0 / z, 1e-15);
}

TEST(EStep, MatchesFullEnumeration) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const int classes = 2 + static_cast<int>(uniform_index(rng, 6));
    const auto mat = test::random_discordant_matrix(rng, 1 + uniform_index(rng, 8), 2 + uniform_index(rng, 5), classes);
    const auto params = test::random_params(rng, mat.num_samples(), mat.num_models(), -2.0, 3.0);
    const auto full = oracle::expand(e_step(test::as_pruned(mat), params, {}), classes);
    const auto expected = oracle::bayes_posterior(mat, params);
    for (std::size_t i = 0; i < full.size(); ++i) {
      for (int c = 0; c < classes; ++c) EXPECT_NEAR(full[i][c], expected[i][c], 1e-12);
    }
  }
}

TEST(EStep, RowsAreNormalised) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int classes = 2 + static_cast<int>(uniform_index(rng, 40));
    const auto mat = test::random_discordant_matrix(rng, 1 + uniform_index(rng, 10), 2 + uniform_index(rng, 8), classes);
    const auto params = test::random_params(rng, mat.num_samples(), mat.num_models(), -30.0, 30.0);
    LafConfig config;
    config.prior = trial % 2 ? Prior::empirical : Prior::uniform;
    for (const auto& row : e_step(test::as_pruned(mat), params, config).rows) {
      EXPECT_NEAR(row.total(), 1.0, 1e-9);
      for (double q : row.probs) {
        EXPECT_GE(q, 0.0);
        EXPECT_LE(q, 1.0);
      }
      EXPECT_GE(row.other_prob, 0.0);
      EXPECT_LE(row.other_prob, 1.0);
    }
  }
}

TEST(ComputeQ, SingleModelExample) {
  const auto p = test::as_pruned(test::make_matrix({{0}}, 2));
  PosteriorTable post;
  post.rows.push_back({{0}, {1.0}, 1, 0.0});
  const double q = compute_q(p, post, LafParams{{0.0}, {0.0}}, {});
  EXPECT_NEAR(q, 2.0 * std::log(0.5), 1e-15);
  EXPECT_NEAR(q, -1.3863, 5e-5);
}

TEST(ComputeQ, MatchesEnumerationAndIsNonPositive) {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const int classes = 2 + static_cast<int>(uniform_index(rng, 6));
    const auto mat = test::random_discordant_matrix(rng, 1 + uniform_index(rng, 8), 2 + uniform_index(rng, 5), classes);
    const auto p = test::as_pruned(mat);
    const auto params = test::random_params(rng, mat.num_samples(), mat.num_models(), -2.0, 3.0);
    const auto post = e_step(p, params, {});
    const double q = compute_q(p, post, params, {});
    const double expected = oracle::q_by_enumeration(mat, oracle::expand(post, classes), params);
    EXPECT_NEAR(q, expected, 1e-10 * std::abs(expected));
    EXPECT_TRUE(std::isfinite(q));
    EXPECT_LE(q, 0.0);
  }
}

// The E-step posterior maximises Q(q) + H(q) over distributions q on the
// same candidates, and the maximum equals the observed log-likelihood.
TEST(ComputeQ, PosteriorMaximisesLowerBound) {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const auto mat = test::random_discordant_matrix(rng, 5, 3, 4);
    const auto p = test::as_pruned(mat);
    const auto params = test::random_params(rng, 5, 3, -2.0, 3.0);
    const auto best = e_step(p, params, {});
    const double bound = compute_q(p, best, params, {}) + entropy(best);
    EXPECT_NEAR(bound, observed_log_likelihood(p, params, {}), 1e-10 * std::abs(bound));
    for (int draw = 0; draw < 1000; ++draw) {
      PosteriorTable other = best;
      for (auto& row : other.rows) {
        double z = 0.0;
        for (double& q : row.probs) z += (q = uniform_real(rng));
        const double rest = row.other_multiplicity > 0 ? uniform_real(rng) : 0.0;
        z += rest;
        for (double& q : row.probs) q /= z;
        row.other_prob = row.other_multiplicity > 0 ? rest / z / row.other_multiplicity : 0.0;
      }
      EXPECT_LE(compute_q(p, other, params, {}) + entropy(other), bound + 1e-12);
    }
  }
}

TEST(QGradient, MatchesCentralDifferences) {
  Rng rng(17);
  const double h = 1e-6;
  for (int trial = 0; trial < 50; ++trial) {
    const auto mat = test::random_discordant_matrix(rng, 6, 4, 2 + static_cast<int>(uniform_index(rng, 5)));
    const auto p = test::as_pruned(mat);
    const auto params = test::random_params(rng, 6, 4, -2.0, 2.0);
    const auto post = e_step(p, test::random_params(rng, 6, 4, -2.0, 2.0), {});
    const auto grad = q_gradient(p, post, params, {});
    const auto check = [&](std::vector<double> LafParams::*field, std::size_t k, double analytic) {
      LafParams up = params, down = params;
      (up.*field)[k] += h;
      (down.*field)[k] -= h;
      const double fd = (compute_q(p, post, up, {}) - compute_q(p, post, down, {})) / (2 * h);
      const double scale = std::max({std::abs(analytic), std::abs(fd), 1e-3});
      EXPECT_LE(std::abs(analytic - fd) / scale, 1e-5) << "analytic " << analytic << " fd " << fd;
    };
    for (std::size_t i = 0; i < 6; ++i) check(&LafParams::alpha, i, grad.alpha[i]);
    for (std::size_t j = 0; j < 4; ++j) check(&LafParams::beta, j, grad.beta[j]);
  }
}

TEST(MStep, NeverDecreasesQ) {
  Rng rng(19);
  for (int trial = 0; trial < 50; ++trial) {
    const auto mat = test::random_discordant_matrix(rng, 3 + uniform_index(rng, 20), 2 + uniform_index(rng, 6), 2 + static_cast<int>(uniform_index(rng, 8)));
    const auto p = test::as_pruned(mat);
    const auto params = test::random_params(rng, mat.num_samples(), mat.num_models(), -1.0, 2.0);
    const auto post = e_step(p, params, {});
    const double before = compute_q(p, post, params, {});
    const auto updated = m_step(p, post, params, {});
    EXPECT_GE(compute_q(p, post, updated, {}), before - 1e-9 * std::abs(before));
  }
}

TEST(MStep, ModelMatchingTheCertainLabelGainsSpecialty) {
  // Posterior puts all mass on f1's prediction, so f1 is right everywhere.
  const auto p = test::as_pruned(test::make_matrix({{0, 1, 0}, {2, 2, 1}, {1, 0, 0}, {3, 1, 3}}, 4));
  PosteriorTable post;
  for (std::size_t i = 0; i < 4; ++i) {
    PosteriorRow row;
    const auto r = p.inner.row(i);
    std::vector<Label> labels(r.begin(), r.end());
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    for (Label y : labels) {
      row.labels.push_back(y);
      row.probs.push_back(y == r[0] ? 1.0 : 0.0);
    }
    row.other_multiplicity = 4 - static_cast<int>(labels.size());
    post.rows.push_back(row);
  }
  const auto start = init_params(p, majority_vote(p));
  EXPECT_GE(q_gradient(p, post, start, {}).beta[0], 0.0);
  EXPECT_GE(m_step(p, post, start, {}).beta[0], start.beta[0]);
}

TEST(MStep, StationaryPointIsFixed) {
  const auto p = test::as_pruned(test::make_matrix({{0, 1, 0}, {2, 2, 1}}, 3));
  const LafParams zero{{0.0, 0.0}, {0.0, 0.0, 0.0}};
  const auto post = e_step(p, zero, {});
  EXPECT_EQ(m_step(p, post, zero, {}), zero);
}

TEST(MStep, ConvergedMaximiserBarelyMoves) {
  Rng rng(23);
  const auto mat = test::random_discordant_matrix(rng, 8, 4, 3);
  const auto p = test::as_pruned(mat);
  auto params = init_params(p, majority_vote(p));
  const auto post = e_step(p, params, {});
  LafConfig long_run;
  long_run.m_step_inner_iters = 20000;
  params = m_step(p, post, params, long_run);
  const auto again = m_step(p, post, params, {});
  for (std::size_t j = 0; j < params.beta.size(); ++j) EXPECT_NEAR(again.beta[j], params.beta[j], 1e-6);
}

TEST(RankFromScores, Examples) {
  const std::vector<std::string> names{"f1", "f2", "f3"};
  const auto r = rank_from_scores(names, std::vector<double>{0.8, 0.2, 0.6});
  EXPECT_EQ(ranks_of(r, names), (std::vector<double>{1, 3, 2}));
  EXPECT_EQ(r.entries.front().model, "f1");

  const std::vector<std::string> two{"b", "a"};
  const auto tied = rank_from_scores(two, std::vector<double>{0.5, 0.5});
  EXPECT_EQ(ranks_of(tied, two), (std::vector<double>{1.5, 1.5}));
  EXPECT_EQ(tied.entries.front().model, "a");

  const std::vector<std::string> one{"only"};
  EXPECT_EQ(rank_from_scores(one, std::vector<double>{1.0}).entries.front().rank, 1.0);

  EXPECT_THROW(rank_from_scores(names, std::vector<double>{0.1, NAN, 0.3}), InvalidArgument);
  EXPECT_THROW(rank_from_scores(names, std::vector<double>{0.1}), InvalidArgument);
}

TEST(RankFromScores, TiedGroupsShareAverageRank) {
  const std::vector<std::string> names{"a", "b", "c", "d", "e"};
  const auto r = rank_from_scores(names, std::vector<double>{3, 1, 3, 3, 0});
  EXPECT_EQ(ranks_of(r, names), (std::vector<double>{2, 4, 2, 2, 5}));
}

TEST(RunLaf, RecoversAccuracyOrder) {
  SynthSpec spec;
  spec.num_models = 3;
  spec.num_samples = 3000;
  spec.num_classes = 10;
  spec.accuracies = {0.9, 0.6, 0.75};
  spec.seed = 2024;
  const auto data = generate(spec);
  const auto realized = realized_accuracy(data.matrix, data.truth);
  ASSERT_GT(realized[0], realized[2]);
  ASSERT_GT(realized[2], realized[1]);

  const auto result = run_laf(data.matrix);
  ASSERT_EQ(result.ranking.size(), 3u);
  EXPECT_EQ(result.ranking.entries[0].model, "f1");
  EXPECT_EQ(result.ranking.entries[1].model, "f3");
  EXPECT_EQ(result.ranking.entries[2].model, "f2");
  EXPECT_TRUE(result.info.converged);
  EXPECT_FALSE(result.info.warning.has_value());
}

TEST(RunLaf, UnanimousMatrixIsAllTied) {
  std::vector<std::vector<Label>> rows;
  for (int i = 0; i < 10; ++i) rows.push_back({i % 3, i % 3, i % 3});
  const auto result = run_laf(test::make_matrix(rows, 3));
  ASSERT_TRUE(result.info.warning.has_value());
  for (const auto& e : result.ranking.entries) EXPECT_EQ(e.rank, 2.0);
  EXPECT_EQ(result.info.iterations, 0);
}

TEST(RunLaf, DuplicatedRowsGiveSameBeta) {
  Rng rng(29);
  const auto mat = test::random_discordant_matrix(rng, 40, 5, 4);
  PredictionMatrix doubled = mat;
  for (std::size_t i = 0; i < mat.num_samples(); ++i) {
    doubled.sample_ids.push_back(mat.sample_ids[i] + "_copy");
    const auto row = mat.row(i);
    doubled.labels.insert(doubled.labels.end(), row.begin(), row.end());
  }
  const auto a = run_laf(mat);
  const auto b = run_laf(doubled);
  for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(a.params.beta[j], b.params.beta[j], 1e-9);
  EXPECT_EQ(ranking_to_csv(a.ranking), ranking_to_csv(b.ranking));
}

TEST(RunLaf, Deterministic) {
  Rng rng(31);
  const auto mat = test::random_discordant_matrix(rng, 60, 6, 5);
  const auto a = run_laf(mat);
  const auto b = run_laf(mat);
  EXPECT_EQ(ranking_to_json(a.ranking, a.info), ranking_to_json(b.ranking, b.info));
}

TEST(RunLaf, AgreesWithStepwiseLoop) {
  Rng rng(37);
  const auto mat = test::random_discordant_matrix(rng, 30, 4, 3);
  const LafConfig config;
  const auto result = run_laf(mat, config);

  const auto pruned = prune(mat);
  auto params = init_params(pruned, majority_vote(pruned));
  auto post = e_step(pruned, params, config);
  double q_last = compute_q(pruned, post, params, config);
  params = m_step(pruned, post, params, config);
  double q = compute_q(pruned, post, params, config);
  int iterations = 1;
  while (std::abs((q - q_last) / q_last) > config.convergence_tol && iterations < config.max_outer_iters) {
    q_last = q;
    post = e_step(pruned, params, config);
    params = m_step(pruned, post, params, config);
    q = compute_q(pruned, post, params, config);
    ++iterations;
  }
  EXPECT_EQ(iterations, result.info.iterations);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(params.beta[j], result.params.beta[j], 1e-8);
}

TEST(RunLaf, EmIncreasesLikelihoodEveryIteration) {
  Rng rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const auto mat = test::random_discordant_matrix(rng, 20 + uniform_index(rng, 40), 4, 3);
    const auto pruned = prune(mat);
    LafConfig config;
    auto params = init_params(pruned, majority_vote(pruned));
    double last = observed_log_likelihood(pruned, params, config);
    for (int it = 0; it < 30; ++it) {
      const auto post = e_step(pruned, params, config);
      params = m_step(pruned, post, params, config);
      const double now = observed_log_likelihood(pruned, params, config);
      EXPECT_GE(now, last - 1e-9 * std::abs(last));
      last = now;
    }
  }
}

TEST(RunLaf, InvariantToUnanimousRowsAndPermutations) {
  Rng rng(43);
  const auto mat = test::random_discordant_matrix(rng, 50, 5, 4);
  const auto base = run_laf(mat);

  PredictionMatrix padded = mat;
  for (int i = 0; i < 30; ++i) {
    padded.sample_ids.push_back("u" + std::to_string(i));
    for (int j = 0; j < 5; ++j) padded.labels.push_back(i % 4);
  }
  EXPECT_EQ(run_laf(padded).params.beta, base.params.beta);

  PredictionMatrix reversed = mat;
  std::reverse(reversed.sample_ids.begin(), reversed.sample_ids.end());
  for (std::size_t i = 0; i < mat.num_samples(); ++i) {
    const auto row = mat.row(mat.num_samples() - 1 - i);
    std::copy(row.begin(), row.end(), reversed.labels.begin() + static_cast<std::ptrdiff_t>(i * 5));
  }
  EXPECT_EQ(run_laf(reversed).params.beta, base.params.beta);

  PredictionMatrix swapped = mat;  // columns in reverse order, names follow
  std::reverse(swapped.model_names.begin(), swapped.model_names.end());
  for (std::size_t i = 0; i < mat.num_samples(); ++i) {
    for (std::size_t j = 0; j < 5; ++j) swapped.labels[i * 5 + j] = mat.at(i, 4 - j);
  }
  const auto s = run_laf(swapped);
  EXPECT_EQ(s.ranking, base.ranking);
  for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(s.params.beta[j], base.params.beta[4 - j]);
}

TEST(RunLaf, EmpiricalPriorRuns) {
  SynthSpec spec;
  spec.num_models = 5;
  spec.num_samples = 500;
  spec.num_classes = 6;
  spec.accuracies = {0.9, 0.5, 0.7, 0.6, 0.8};
  spec.seed = 5;
  const auto data = generate(spec);
  LafConfig config;
  config.prior = Prior::empirical;
  const auto result = run_laf(data.matrix, config);
  EXPECT_EQ(result.ranking.entries.front().model, "f1");
  EXPECT_EQ(result.ranking.entries.back().model, "f2");
}

TEST(LafConfig, Validation) {
  LafConfig c;
  c.convergence_tol = 0.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.max_outer_iters = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.m_step_inner_iters = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
}
