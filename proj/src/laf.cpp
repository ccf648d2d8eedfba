#include "laf/laf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "laf/error.hpp"
#include "laf_engine.hpp"

namespace laf {

void LafConfig::validate() const {
  if (!(convergence_tol > 0.0)) throw InvalidArgument("convergence_tol must be positive");
  if (max_outer_iters < 1) throw InvalidArgument("max_outer_iters must be positive");
  if (m_step_inner_iters < 1) throw InvalidArgument("m_step_inner_iters must be positive");
  if (!(initial_step > 0.0)) throw InvalidArgument("initial_step must be positive");
  if (max_halvings < 0) throw InvalidArgument("max_halvings must be non-negative");
  if (!(prob_floor > 0.0 && prob_floor < 0.5)) {
    throw InvalidArgument("prob_floor must lie in (0, 0.5)");
  }
}

double PosteriorRow::total() const {
  double sum = other_multiplicity * other_prob;
  for (double p : probs) sum += p;
  return sum;
}

std::vector<Label> majority_vote(const PrunedMatrix& pruned) {
  return detail::majority(pruned.inner.labels, pruned.inner.num_models());
}

LafParams init_params(const PrunedMatrix& pruned, std::span<const Label> pseudo) {
  const auto& m = pruned.inner;
  if (pseudo.size() != m.num_samples()) {
    throw InvalidArgument("init_params: one pseudo label per retained row is required");
  }
  const auto pb = detail::make_problem(m.labels, std::vector<double>(m.num_samples(), 1.0),
                                       m.num_models(), std::max(m.num_classes, 2),
                                       Prior::uniform, pseudo);
  return detail::initial_params(pb, pseudo);
}

namespace {

void check_params(const detail::Problem& pb, const LafParams& params) {
  if (params.alpha.size() != pb.num_rows || params.beta.size() != pb.num_models) {
    throw InvalidArgument("parameter sizes do not match the matrix");
  }
  const auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(params.alpha.begin(), params.alpha.end(), finite) ||
      !std::all_of(params.beta.begin(), params.beta.end(), finite)) {
    throw InvalidArgument("parameters must be finite");
  }
}

}  // namespace

PosteriorTable e_step(const PrunedMatrix& pruned, const LafParams& params, const LafConfig& config) {
  const auto pb = detail::make_problem(pruned, config.prior);
  check_params(pb, params);
  return detail::to_table(pb, detail::expectation(pb, params, config.prob_floor));
}

double compute_q(const PrunedMatrix& pruned, const PosteriorTable& posterior,
                 const LafParams& params, const LafConfig& config) {
  const auto pb = detail::make_problem(pruned, config.prior);
  check_params(pb, params);
  return detail::q_value(pb, detail::to_flat(pb, posterior), params, config.prob_floor);
}

LafParams q_gradient(const PrunedMatrix& pruned, const PosteriorTable& posterior,
                     const LafParams& params, const LafConfig& config) {
  const auto pb = detail::make_problem(pruned, config.prior);
  check_params(pb, params);
  LafParams gradient;
  detail::q_gradient(pb, detail::to_flat(pb, posterior), params, config.prob_floor, gradient);
  return gradient;
}

LafParams m_step(const PrunedMatrix& pruned, const PosteriorTable& posterior,
                 const LafParams& params, const LafConfig& config) {
  config.validate();
  const auto pb = detail::make_problem(pruned, config.prior);
  check_params(pb, params);
  return detail::maximization(pb, detail::to_flat(pb, posterior), params, config);
}

double observed_log_likelihood(const PrunedMatrix& pruned, const LafParams& params,
                               const LafConfig& config) {
  const auto pb = detail::make_problem(pruned, config.prior);
  check_params(pb, params);
  return detail::log_likelihood(pb, params, config.prob_floor);
}

LafResult run_laf(const PredictionMatrix& matrix, const LafConfig& config) {
  config.validate();
  matrix.validate();
  const std::size_t n = matrix.num_models();

  LafResult result;
  PrunedMatrix pruned;
  try {
    pruned = prune(matrix);
  } catch (const NoDiscriminatingData& e) {
    result.params.beta.assign(n, 0.0);
    result.ranking = rank_from_scores(matrix.model_names, result.params.beta);
    result.info = {true, 0, std::string(e.what())};
    return result;
  }
  const std::size_t rows = pruned.inner.num_samples();
  result.retained_samples = rows;

  // Canonical form: columns ordered by model name, identical rows merged
  // into one weighted row, rows sorted lexicographically. The outcome then
  // depends only on the multiset of (name -> prediction) rows, not on the
  // order of rows or columns in the file.
  std::vector<std::size_t> column(n);
  std::iota(column.begin(), column.end(), std::size_t{0});
  std::sort(column.begin(), column.end(), [&](std::size_t a, std::size_t b) {
    return matrix.model_names[a] < matrix.model_names[b];
  });
  std::vector<Label> canonical(rows * n);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t k = 0; k < n; ++k) canonical[i * n + k] = pruned.inner.at(i, column[k]);
  }
  const auto row_of = [&](std::size_t i) {
    return std::span<const Label>(canonical).subspan(i * n, n);
  };
  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ra = row_of(a);
    const auto rb = row_of(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  });
  std::vector<Label> unique_labels;
  std::vector<double> weights;
  std::vector<std::size_t> unique_of(rows);
  for (std::size_t k = 0; k < rows; ++k) {
    const auto r = row_of(order[k]);
    if (k == 0 || !std::equal(r.begin(), r.end(), row_of(order[k - 1]).begin())) {
      unique_labels.insert(unique_labels.end(), r.begin(), r.end());
      weights.push_back(0.0);
    }
    weights.back() += 1.0;
    unique_of[order[k]] = weights.size() - 1;
  }

  const auto pseudo = detail::majority(unique_labels, n);
  const auto problem = detail::make_problem(std::move(unique_labels), std::move(weights), n,
                                            matrix.num_classes, config.prior, pseudo);
  auto em = detail::run_em(problem, detail::initial_params(problem, pseudo), config);

  result.params.beta.resize(n);
  for (std::size_t k = 0; k < n; ++k) result.params.beta[column[k]] = em.params.beta[k];
  result.params.alpha.resize(rows);
  for (std::size_t i = 0; i < rows; ++i) result.params.alpha[i] = em.params.alpha[unique_of[i]];

  result.ranking = rank_from_scores(matrix.model_names, result.params.beta);
  result.info.converged = em.converged;
  result.info.iterations = em.iterations;
  if (!em.converged) {
    result.info.warning = "EM stopped at the iteration cap (" +
                          std::to_string(config.max_outer_iters) + ") before converging";
  }
  result.q_trace = std::move(em.q_trace);
  return result;
}

}  // namespace laf
