#include "laf_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "laf/error.hpp"

namespace laf::detail {
namespace {

// Clamped sigmoid of x = alpha * beta in log form.
struct Link {
  double prob;       // sigma(x), clamped
  double log_prob;   // log sigma(x)
  double log_miss;   // log(1 - sigma(x))
  bool clamped;
};

Link link(double x, double floor) {
  const double e = std::exp(-std::abs(x));
  const double s = x >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
  if (s < floor || s > 1.0 - floor || std::isnan(s)) {
    const double p = (x > 0.0) ? 1.0 - floor : floor;
    return {p, std::log(p), std::log1p(-p), true};
  }
  const double t = std::log1p(e);  // log(1 + exp(-|x|))
  if (x >= 0.0) return {s, -t, -x - t, false};
  return {s, x - t, -t, false};
}

double log_sum_exp(std::span<const double> values) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : values) hi = std::max(hi, v);
  if (!std::isfinite(hi)) return hi;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - hi);
  return hi + std::log(sum);
}

// Unnormalised log joint scores of row i: one per candidate, then the total
// over unpredicted classes (if any) at the end.
void row_scores(const Problem& pb, const LafParams& params, double floor, std::size_t i,
                std::vector<double>& scores) {
  const std::size_t n = pb.num_models;
  const std::size_t begin = pb.cand_offset[i];
  const std::size_t count = pb.candidates(i);
  const double log_wrong = std::log(static_cast<double>(pb.num_classes - 1));
  scores.assign(count, 0.0);
  double base = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const Link l = link(params.alpha[i] * params.beta[j], floor);
    base += l.log_miss - log_wrong;
    scores[pb.cand_of[i * n + j]] += l.log_prob - l.log_miss + log_wrong;
  }
  for (std::size_t c = 0; c < count; ++c) {
    scores[c] += base + pb.log_prior[static_cast<std::size_t>(pb.cand_labels[begin + c])];
  }
  if (pb.other_multiplicity(i) > 0) scores.push_back(base + pb.other_log_mass[i]);
}

}  // namespace

std::vector<Label> majority(std::span<const Label> labels, std::size_t num_models) {
  const std::size_t rows = num_models == 0 ? 0 : labels.size() / num_models;
  std::vector<Label> out(rows);
  std::vector<Label> sorted(num_models);
  for (std::size_t i = 0; i < rows; ++i) {
    std::copy_n(labels.begin() + static_cast<std::ptrdiff_t>(i * num_models), num_models,
                sorted.begin());
    std::sort(sorted.begin(), sorted.end());
    Label best = sorted.front();
    std::size_t best_count = 0;
    for (std::size_t a = 0; a < num_models;) {
      std::size_t b = a;
      while (b < num_models && sorted[b] == sorted[a]) ++b;
      // strict '>' keeps the smallest label among equally frequent ones
      if (b - a > best_count) {
        best_count = b - a;
        best = sorted[a];
      }
      a = b;
    }
    out[i] = best;
  }
  return out;
}

Problem make_problem(std::vector<Label> labels, std::vector<double> weights,
                     std::size_t num_models, int num_classes, Prior prior,
                     std::span<const Label> pseudo) {
  Problem pb;
  pb.num_models = num_models;
  pb.num_rows = weights.size();
  pb.num_classes = num_classes;
  pb.labels = std::move(labels);
  pb.weights = std::move(weights);
  if (pb.labels.size() != pb.num_rows * num_models) {
    throw InvalidArgument("label matrix does not match row count");
  }
  if (num_classes < 2) throw InvalidArgument("at least 2 classes are required");
  pb.total_weight = 0.0;
  for (double w : pb.weights) pb.total_weight += w;

  const auto classes = static_cast<std::size_t>(num_classes);
  pb.log_prior.assign(classes, -std::log(static_cast<double>(num_classes)));
  if (prior == Prior::empirical) {
    std::vector<double> counts(classes, 1.0);  // Laplace smoothing
    for (std::size_t i = 0; i < pb.num_rows; ++i) {
      counts[static_cast<std::size_t>(pseudo[i])] += pb.weights[i];
    }
    const double norm = pb.total_weight + static_cast<double>(classes);
    for (std::size_t c = 0; c < classes; ++c) pb.log_prior[c] = std::log(counts[c] / norm);
  }
  double plogp_all = 0.0;
  for (double lp : pb.log_prior) plogp_all += std::exp(lp) * lp;

  pb.cand_offset.reserve(pb.num_rows + 1);
  pb.cand_offset.push_back(0);
  pb.cand_of.resize(pb.labels.size());
  pb.other_log_mass.resize(pb.num_rows, 0.0);
  pb.other_mean_log_prior.resize(pb.num_rows, 0.0);
  std::vector<Label> distinct;
  for (std::size_t i = 0; i < pb.num_rows; ++i) {
    const auto row = std::span<const Label>(pb.labels).subspan(i * num_models, num_models);
    distinct.assign(row.begin(), row.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    for (std::size_t j = 0; j < num_models; ++j) {
      pb.cand_of[i * num_models + j] = static_cast<std::uint32_t>(
          std::lower_bound(distinct.begin(), distinct.end(), row[j]) - distinct.begin());
    }
    pb.cand_labels.insert(pb.cand_labels.end(), distinct.begin(), distinct.end());
    pb.cand_offset.push_back(pb.cand_labels.size());

    const auto others = classes - distinct.size();
    if (others == 0) continue;
    if (prior == Prior::uniform) {
      pb.other_log_mass[i] = std::log(static_cast<double>(others) / static_cast<double>(classes));
      pb.other_mean_log_prior[i] = pb.log_prior.front();
    } else {
      double mass = 1.0;
      double plogp = plogp_all;
      for (Label c : distinct) {
        const double lp = pb.log_prior[static_cast<std::size_t>(c)];
        mass -= std::exp(lp);
        plogp -= std::exp(lp) * lp;
      }
      pb.other_log_mass[i] = std::log(mass);
      pb.other_mean_log_prior[i] = plogp / mass;
    }
  }
  return pb;
}

Problem make_problem(const PrunedMatrix& pruned, Prior prior) {
  const auto& m = pruned.inner;
  const auto pseudo = majority(m.labels, m.num_models());
  return make_problem(m.labels, std::vector<double>(m.num_samples(), 1.0), m.num_models(),
                      m.num_classes, prior, pseudo);
}

LafParams initial_params(const Problem& pb, std::span<const Label> pseudo) {
  const std::size_t n = pb.num_models;
  LafParams params;
  params.alpha.resize(pb.num_rows);
  params.beta.assign(n, 0.0);
  for (std::size_t i = 0; i < pb.num_rows; ++i) {
    std::size_t agree = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (pb.labels[i * n + j] == pseudo[i]) {
        ++agree;
        params.beta[j] += pb.weights[i];
      }
    }
    params.alpha[i] = static_cast<double>(agree) / static_cast<double>(n);
  }
  for (double& b : params.beta) b /= pb.total_weight;
  return params;
}

Posterior expectation(const Problem& pb, const LafParams& params, double floor) {
  Posterior post;
  post.cand_prob.resize(pb.cand_labels.size());
  post.other_mass.assign(pb.num_rows, 0.0);
  std::vector<double> scores;
  for (std::size_t i = 0; i < pb.num_rows; ++i) {
    row_scores(pb, params, floor, i, scores);
    const double norm = log_sum_exp(scores);
    const std::size_t begin = pb.cand_offset[i];
    for (std::size_t c = 0; c < pb.candidates(i); ++c) {
      post.cand_prob[begin + c] = std::exp(scores[c] - norm);
    }
    if (pb.other_multiplicity(i) > 0) post.other_mass[i] = std::exp(scores.back() - norm);
  }
  return post;
}

double log_likelihood(const Problem& pb, const LafParams& params, double floor) {
  double total = 0.0;
  std::vector<double> scores;
  for (std::size_t i = 0; i < pb.num_rows; ++i) {
    row_scores(pb, params, floor, i, scores);
    total += pb.weights[i] * log_sum_exp(scores);
  }
  return total;
}

namespace {

template <bool WithGradient>
double q_impl(const Problem& pb, const Posterior& post, const LafParams& params, double floor,
              LafParams* gradient) {
  const std::size_t n = pb.num_models;
  const double log_wrong = std::log(static_cast<double>(pb.num_classes - 1));
  if constexpr (WithGradient) {
    gradient->alpha.assign(pb.num_rows, 0.0);
    gradient->beta.assign(n, 0.0);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < pb.num_rows; ++i) {
    const std::size_t begin = pb.cand_offset[i];
    double row = post.other_mass[i] * pb.other_mean_log_prior[i];
    for (std::size_t c = 0; c < pb.candidates(i); ++c) {
      row += post.cand_prob[begin + c] *
             pb.log_prior[static_cast<std::size_t>(pb.cand_labels[begin + c])];
    }
    const double a = params.alpha[i];
    double grad_alpha = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      // posterior mass on model j's own prediction being the true label
      const double hit = post.cand_prob[begin + pb.cand_of[i * n + j]];
      const Link l = link(a * params.beta[j], floor);
      row += hit * l.log_prob + (1.0 - hit) * (l.log_miss - log_wrong);
      if constexpr (WithGradient) {
        if (!l.clamped) {
          const double d = pb.weights[i] * (hit - l.prob);
          grad_alpha += d * params.beta[j];
          gradient->beta[j] += d * a;
        }
      }
    }
    if constexpr (WithGradient) gradient->alpha[i] = grad_alpha;
    total += pb.weights[i] * row;
  }
  return total;
}

}  // namespace

double q_value(const Problem& pb, const Posterior& post, const LafParams& params, double floor) {
  return q_impl<false>(pb, post, params, floor, nullptr);
}

double q_gradient(const Problem& pb, const Posterior& post, const LafParams& params, double floor,
                  LafParams& gradient) {
  return q_impl<true>(pb, post, params, floor, &gradient);
}

LafParams maximization(const Problem& pb, const Posterior& post, LafParams params,
                       const LafConfig& config) {
  const double floor = config.prob_floor;
  const double n = static_cast<double>(pb.num_models);
  LafParams grad;
  double current = q_gradient(pb, post, params, floor, grad);
  LafParams trial = params;
  LafParams trial_grad;
  const auto is_zero = [](double g) { return g == 0.0; };

  for (int iter = 0; iter < config.m_step_inner_iters; ++iter) {
    if (std::all_of(grad.alpha.begin(), grad.alpha.end(), is_zero) &&
        std::all_of(grad.beta.begin(), grad.beta.end(), is_zero)) {
      break;
    }
    // Diagonal preconditioning: alpha_i collects n terms per unit of row
    // weight and beta_j collects total_weight terms.
    double step = config.initial_step;
    bool accepted = false;
    for (int halving = 0; halving <= config.max_halvings; ++halving, step *= 0.5) {
      for (std::size_t i = 0; i < pb.num_rows; ++i) {
        trial.alpha[i] = params.alpha[i] + step * grad.alpha[i] / (pb.weights[i] * n);
      }
      for (std::size_t j = 0; j < pb.num_models; ++j) {
        trial.beta[j] = params.beta[j] + step * grad.beta[j] / pb.total_weight;
      }
      const double value = q_gradient(pb, post, trial, floor, trial_grad);
      if (std::isfinite(value) && value > current) {
        current = value;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    std::swap(params, trial);
    std::swap(grad, trial_grad);
  }
  return params;
}

EmOutcome run_em(const Problem& pb, LafParams start, const LafConfig& config) {
  const double floor = config.prob_floor;
  EmOutcome out;
  Posterior post = expectation(pb, start, floor);
  double q_last = q_value(pb, post, start, floor);
  out.q_trace.push_back(q_last);
  out.params = maximization(pb, post, std::move(start), config);
  double q = q_value(pb, post, out.params, floor);
  out.q_trace.push_back(q);
  out.iterations = 1;

  const auto converged = [&](double now, double before) {
    if (before == 0.0) return now == 0.0;
    return std::abs((now - before) / before) <= config.convergence_tol;
  };
  while (!converged(q, q_last)) {
    if (out.iterations >= config.max_outer_iters) return out;
    q_last = q;
    post = expectation(pb, out.params, floor);
    out.params = maximization(pb, post, std::move(out.params), config);
    q = q_value(pb, post, out.params, floor);
    out.q_trace.push_back(q);
    ++out.iterations;
  }
  out.converged = true;
  return out;
}

Posterior to_flat(const Problem& pb, const PosteriorTable& table) {
  if (table.rows.size() != pb.num_rows) {
    throw InvalidArgument("posterior has " + std::to_string(table.rows.size()) +
                          " rows, expected " + std::to_string(pb.num_rows));
  }
  Posterior post;
  post.cand_prob.resize(pb.cand_labels.size());
  post.other_mass.resize(pb.num_rows);
  for (std::size_t i = 0; i < pb.num_rows; ++i) {
    const auto& row = table.rows[i];
    const std::size_t begin = pb.cand_offset[i];
    if (row.labels.size() != pb.candidates(i) || row.probs.size() != row.labels.size() ||
        !std::equal(row.labels.begin(), row.labels.end(), pb.cand_labels.begin() + static_cast<std::ptrdiff_t>(begin))) {
      throw InvalidArgument("posterior row " + std::to_string(i) +
                            " does not list the row's predicted labels");
    }
    std::copy(row.probs.begin(), row.probs.end(), post.cand_prob.begin() + static_cast<std::ptrdiff_t>(begin));
    post.other_mass[i] = pb.other_multiplicity(i) * row.other_prob;
  }
  return post;
}

PosteriorTable to_table(const Problem& pb, const Posterior& post) {
  PosteriorTable table;
  table.rows.resize(pb.num_rows);
  for (std::size_t i = 0; i < pb.num_rows; ++i) {
    auto& row = table.rows[i];
    const auto begin = static_cast<std::ptrdiff_t>(pb.cand_offset[i]);
    const auto end = static_cast<std::ptrdiff_t>(pb.cand_offset[i + 1]);
    row.labels.assign(pb.cand_labels.begin() + begin, pb.cand_labels.begin() + end);
    row.probs.assign(post.cand_prob.begin() + begin, post.cand_prob.begin() + end);
    row.other_multiplicity = pb.other_multiplicity(i);
    row.other_prob = row.other_multiplicity > 0 ? post.other_mass[i] / row.other_multiplicity : 0.0;
  }
  return table;
}

}  // namespace laf::detail
