#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "laf/baselines.hpp"
#include "laf/error.hpp"
#include "laf/laf.hpp"
#include "laf/matrix_io.hpp"
#include "laf/rank_metrics.hpp"
#include "laf/random.hpp"
#include "laf/synthgen.hpp"

namespace laf::cli {
namespace {

enum class Format { csv, json };

struct Output {
  std::optional<std::string> path;
  std::optional<std::string> format;

  Format resolve() const {
    if (format) return *format == "csv" ? Format::csv : Format::json;
    if (path && std::filesystem::path(*path).extension() == ".csv") return Format::csv;
    return Format::json;
  }
};

void emit(const std::optional<std::string>& path, const std::string& text, std::ostream& out) {
  if (path) {
    write_file(*path, text);
  } else {
    out << text;
  }
}

std::vector<int> parse_int_list(const std::string& text, const char* what) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw InvalidArgument(std::string("invalid ") + what + " '" + item + "'");
    }
  }
  if (out.empty()) throw InvalidArgument(std::string("empty ") + what + " list");
  return out;
}

std::vector<double> parse_real_list(const std::string& text, char sep, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw InvalidArgument(std::string("invalid ") + what + " '" + item + "'");
    }
  }
  return out;
}

// LafConfig flags shared by `rank` and `eval`.
struct ConfigFlags {
  std::string prior = "uniform";
  LafConfig config;

  void attach(CLI::App& app) {
    app.add_option("--prior", prior, "Class prior for the true labels")
        ->check(CLI::IsMember({"uniform", "empirical"}))
        ->capture_default_str();
    app.add_option("--tol", config.convergence_tol, "Relative change of Q that stops EM")
        ->capture_default_str();
    app.add_option("--max-iters", config.max_outer_iters, "Cap on EM iterations")
        ->capture_default_str();
    app.add_option("--inner-iters", config.m_step_inner_iters, "Gradient steps per M-step")
        ->capture_default_str();
    app.add_option("--step", config.initial_step, "Initial gradient step")->capture_default_str();
    app.add_option("--prob-floor", config.prob_floor, "Clamp for the sigmoid link")
        ->capture_default_str();
  }

  LafConfig build() const {
    LafConfig c = config;
    c.prior = prior == "empirical" ? Prior::empirical : Prior::uniform;
    c.validate();
    return c;
  }
};

// ---------------------------------------------------------------- rank

struct RankArgs {
  std::string predictions;
  std::string method = "laf";
  std::optional<std::string> truth;
  int budget = 0;
  std::uint64_t seed = 0;
  Output output;
  ConfigFlags flags;
};

int cmd_rank(const RankArgs& args, std::ostream& out, std::ostream& err) {
  const auto matrix = parse_predictions(read_file(args.predictions));
  matrix.validate();
  Ranking ranking;
  RunInfo info;
  if (args.method == "laf") {
    const auto result = run_laf(matrix, args.flags.build());
    ranking = result.ranking;
    info = result.info;
  } else {
    if (!args.truth) throw InvalidArgument("--method " + args.method + " requires --truth");
    const auto truth = parse_ground_truth(read_file(*args.truth));
    if (args.method == "truth") {
      ranking = ground_truth_ranking(matrix, truth);
    } else if (args.method == "random") {
      ranking = random_rank(matrix, truth, args.budget, args.seed);
    } else {
      ranking = sds_rank(matrix, truth, args.budget, args.seed);
    }
  }
  const auto text = args.output.resolve() == Format::csv ? ranking_to_csv(ranking)
                                                          : ranking_to_json(ranking, info);
  emit(args.output.path, text, out);
  const bool degenerate = args.method == "laf" && info.warning && info.iterations == 0;
  if (info.warning) err << "warning: " << *info.warning << '\n';
  return degenerate ? kDegenerate : kOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string predictions;
  std::string truth;
  std::string methods = "laf,random,sds";
  std::optional<std::string> budgets;
  int reps = 50;
  std::uint64_t seed = 0;
  std::string ks = "1,3,5,10";
  std::string out_dir = ".";
  std::string prefix = "eval";
  ConfigFlags flags;
};

struct Scores {
  double spearman = 0.0;
  double kendall = 0.0;
  std::vector<double> jaccard;
};

struct Task {
  std::string method;
  int budget = 0;
  int repetition = 0;
};

// Correlations are undefined when an estimate ties every model; such a
// ranking carries no order information and scores 0.
double correlation_or_zero(double (*metric)(const RankPair&), const RankPair& pair) {
  try {
    return metric(pair);
  } catch (const InvalidArgument&) {
    return 0.0;
  }
}

Scores score(const Ranking& truth, const Ranking& estimate, const std::vector<int>& ks) {
  const RankPair pair(truth, estimate);
  Scores s;
  s.spearman = correlation_or_zero(&spearman, pair);
  s.kendall = correlation_or_zero(&kendall, pair);
  for (int k : ks) s.jaccard.push_back(jaccard_topk(pair, k));
  return s;
}

std::uint64_t method_id(const std::string& method) { return method == "random" ? 1 : 2; }

int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err) {
  const auto matrix = parse_predictions(read_file(args.predictions));
  matrix.validate();
  const auto truth = parse_ground_truth(read_file(args.truth));
  const auto truth_ranking = ground_truth_ranking(matrix, truth);
  {
    const RankPair self(truth_ranking, truth_ranking);
    (void)spearman(self);  // rejects a constant ground-truth ranking up front
  }

  std::vector<std::string> methods;
  {
    std::stringstream ss(args.methods);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item != "laf" && item != "random" && item != "sds") {
        throw InvalidArgument("unknown method '" + item + "' (expected laf, random or sds)");
      }
      if (std::find(methods.begin(), methods.end(), item) == methods.end()) methods.push_back(item);
    }
    if (methods.empty()) throw InvalidArgument("no methods given");
  }
  const auto budgets = args.budgets ? BudgetPlan::parse_budgets(*args.budgets)
                                    : BudgetPlan::default_budgets(static_cast<int>(matrix.num_models()));
  if (args.reps < 1) throw InvalidArgument("--reps must be positive");
  std::vector<int> ks;
  for (int k : parse_int_list(args.ks, "k")) {
    if (k < 1) throw InvalidArgument("k must be positive");
    if (static_cast<std::size_t>(k) <= matrix.num_models()) ks.push_back(k);
  }

  // Feasibility of every (method, budget) before any work.
  std::size_t sds_pool_size = 0;
  for (const auto& method : methods) {
    if (method == "random") {
      for (int b : budgets) {
        if (static_cast<std::size_t>(b) > matrix.num_samples()) {
          throw InvalidArgument("method random: budget " + std::to_string(b) + " exceeds the " +
                                std::to_string(matrix.num_samples()) + " samples");
        }
      }
    } else if (method == "sds") {
      sds_pool_size = sds_pool(matrix).size();
      for (int b : budgets) {
        if (static_cast<std::size_t>(b) > sds_pool_size) {
          throw InvalidArgument("method sds: budget " + std::to_string(b) +
                                " exceeds the pool of " + std::to_string(sds_pool_size) +
                                " samples");
        }
      }
    }
  }

  std::vector<Task> tasks;
  for (const auto& method : methods) {
    if (method == "laf") {
      tasks.push_back({method, 0, 0});
      continue;
    }
    for (int b : budgets) {
      for (int r = 0; r < args.reps; ++r) tasks.push_back({method, b, r});
    }
  }

  const LafConfig config = args.flags.build();
  std::vector<Scores> results(tasks.size());
  std::vector<std::string> warnings(tasks.size());
  std::vector<char> degenerate(tasks.size(), 0);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    for (std::size_t t = next++; t < tasks.size() && !failed; t = next++) {
      try {
        const auto& task = tasks[t];
        Ranking estimate;
        if (task.method == "laf") {
          const auto result = run_laf(matrix, config);
          estimate = result.ranking;
          if (result.info.warning) warnings[t] = *result.info.warning;
          degenerate[t] = result.info.warning && result.info.iterations == 0;
        } else {
          const auto seed = derive_seed(args.seed, method_id(task.method),
                                        static_cast<std::uint64_t>(task.budget),
                                        static_cast<std::uint64_t>(task.repetition));
          estimate = task.method == "random" ? random_rank(matrix, truth, task.budget, seed)
                                             : sds_rank(matrix, truth, task.budget, seed);
        }
        results[t] = score(truth_ranking, estimate, ks);
      } catch (const std::exception& e) {
        std::lock_guard lock(failure_mutex);
        if (!failed.exchange(true)) failure = e.what();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(worker_count(), static_cast<unsigned>(tasks.size())));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < threads; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failed) throw Error(failure);

  std::string header_tail;
  for (int k : ks) header_tail += ",jaccard@" + std::to_string(k);

  std::string per_rep = "method,budget,repetition,spearman,kendall" + header_tail + '\n';
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    per_rep += tasks[t].method + ',' + std::to_string(tasks[t].budget) + ',' +
               std::to_string(tasks[t].repetition) + ',' + format_real(results[t].spearman) + ',' +
               format_real(results[t].kendall);
    for (double j : results[t].jaccard) per_rep += ',' + format_real(j);
    per_rep += '\n';
  }

  std::string aggregate = "method,budget,repetitions,spearman_mean,spearman_std,kendall_mean,kendall_std";
  for (int k : ks) {
    aggregate += ",jaccard@" + std::to_string(k) + "_mean,jaccard@" + std::to_string(k) + "_std";
  }
  aggregate += '\n';
  for (std::size_t begin = 0; begin < tasks.size();) {
    std::size_t end = begin;
    while (end < tasks.size() && tasks[end].method == tasks[begin].method &&
           tasks[end].budget == tasks[begin].budget) {
      ++end;
    }
    const auto count = static_cast<double>(end - begin);
    // population standard deviation, as numpy reports it
    const auto mean_std = [&](auto get) {
      double mean = 0.0;
      for (std::size_t t = begin; t < end; ++t) mean += get(results[t]);
      mean /= count;
      double var = 0.0;
      for (std::size_t t = begin; t < end; ++t) var += (get(results[t]) - mean) * (get(results[t]) - mean);
      return format_real(mean) + ',' + format_real(std::sqrt(var / count));
    };
    aggregate += tasks[begin].method + ',' + std::to_string(tasks[begin].budget) + ',' +
                 std::to_string(end - begin) + ',' +
                 mean_std([](const Scores& s) { return s.spearman; }) + ',' +
                 mean_std([](const Scores& s) { return s.kendall; });
    for (std::size_t k = 0; k < ks.size(); ++k) {
      aggregate += ',' + mean_std([k](const Scores& s) { return s.jaccard[k]; });
    }
    aggregate += '\n';
    begin = end;
  }

  const std::filesystem::path dir(args.out_dir);
  std::filesystem::create_directories(dir);
  const auto per_rep_path = (dir / (args.prefix + "_repetitions.csv")).string();
  const auto aggregate_path = (dir / (args.prefix + "_aggregate.csv")).string();
  write_file(per_rep_path, per_rep);
  write_file(aggregate_path, aggregate);
  out << "wrote " << per_rep_path << " and " << aggregate_path << '\n';
  for (const auto& w : warnings) {
    if (!w.empty()) err << "warning: " << w << '\n';
  }
  return std::any_of(degenerate.begin(), degenerate.end(), [](char d) { return d != 0; }) ? kDegenerate : kOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  SynthSpec spec;
  std::optional<std::string> acc_range;
  std::optional<std::string> accuracies;
  std::string out_predictions;
  std::string out_truth;
  std::optional<std::string> format;
};

int cmd_simulate(SimulateArgs args, std::ostream& out) {
  if (args.acc_range && args.accuracies) {
    throw InvalidArgument("--acc and --accuracies are mutually exclusive");
  }
  if (args.acc_range) {
    const auto range = parse_real_list(*args.acc_range, ':', "accuracy range");
    if (range.size() != 2) throw InvalidArgument("--acc expects min:max");
    args.spec.acc_min = range[0];
    args.spec.acc_max = range[1];
  }
  if (args.accuracies) args.spec.accuracies = parse_real_list(*args.accuracies, ',', "accuracy");
  const auto data = generate(args.spec);

  const auto format_of = [&](const std::string& path) {
    return Output{path, args.format}.resolve();
  };
  write_file(args.out_predictions, format_of(args.out_predictions) == Format::csv
                                       ? predictions_to_csv(data.matrix)
                                       : predictions_to_json(data.matrix));
  write_file(args.out_truth, format_of(args.out_truth) == Format::csv
                                 ? ground_truth_to_csv(data.truth)
                                 : ground_truth_to_json(data.truth));
  out << "wrote " << args.out_predictions << " and " << args.out_truth << '\n';
  return kOk;
}

// ---------------------------------------------------------------- metrics

struct MetricsArgs {
  std::string truth_ranking;
  std::string estimate_ranking;
  std::string ks = "1,3,5,10";
  int permutations = 10000;
  std::uint64_t seed = 0;
  std::optional<std::string> out;
};

int cmd_metrics(const MetricsArgs& args, std::ostream& out, std::ostream& err) {
  const auto truth = parse_ranking(read_file(args.truth_ranking));
  const auto estimate = parse_ranking(read_file(args.estimate_ranking));
  const RankPair pair(truth, estimate);

  nlohmann::ordered_json doc;
  std::optional<std::string> warning;
  try {
    doc["spearman"] = spearman(pair);
    doc["kendall"] = kendall(pair);
    doc["p_value"] = spearman_pvalue(pair, args.permutations, args.seed);
  } catch (const InvalidArgument& e) {
    warning = e.what();
    doc["spearman"] = nullptr;
    doc["kendall"] = nullptr;
    doc["p_value"] = nullptr;
  }
  nlohmann::ordered_json jaccard = nlohmann::ordered_json::object();
  for (int k : parse_int_list(args.ks, "k")) {
    if (k >= 1 && static_cast<std::size_t>(k) <= pair.size()) {
      jaccard[std::to_string(k)] = jaccard_topk(pair, k);
    }
  }
  // key order: spearman, kendall, jaccard, p_value, warning
  nlohmann::ordered_json ordered;
  ordered["spearman"] = doc["spearman"];
  ordered["kendall"] = doc["kendall"];
  ordered["jaccard"] = std::move(jaccard);
  ordered["p_value"] = doc["p_value"];
  if (warning) ordered["warning"] = *warning;
  emit(args.out, ordered.dump(2) + '\n', out);
  if (warning) {
    err << "warning: " << *warning << '\n';
    return kDegenerate;
  }
  return kOk;
}

}  // namespace

unsigned worker_count() {
  if (const char* env = std::getenv("LAF_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Labeling-free ranking of classifiers from their predicted labels"};
  app.name("laf");
  app.require_subcommand(1);

  RankArgs rank;
  auto* rank_cmd = app.add_subcommand("rank", "Rank models from a prediction matrix");
  rank_cmd->add_option("--predictions", rank.predictions, "Prediction matrix (CSV or JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  rank_cmd->add_option("--method", rank.method, "laf (default), or a labeled reference")
      ->check(CLI::IsMember({"laf", "truth", "random", "sds"}));
  rank_cmd->add_option("--truth", rank.truth, "Ground truth, for truth/random/sds")
      ->check(CLI::ExistingFile);
  rank_cmd->add_option("--budget", rank.budget, "Labeling budget for random/sds");
  rank_cmd->add_option("--seed", rank.seed, "Sampling seed for random/sds");
  rank_cmd->add_option("--out", rank.output.path, "Output file (default: standard output)");
  rank_cmd->add_option("--format", rank.output.format, "csv or json (default: from --out)")
      ->check(CLI::IsMember({"csv", "json"}));
  rank.flags.attach(*rank_cmd);

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Compare LaF and labeled baselines against ground truth");
  eval_cmd->add_option("--predictions", eval.predictions, "Prediction matrix")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--truth", eval.truth, "Ground truth")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--methods", eval.methods, "Comma-separated subset of laf,random,sds")
      ->capture_default_str();
  eval_cmd->add_option("--budgets", eval.budgets, "start:stop:step or a list (default n:180:5)");
  eval_cmd->add_option("--reps", eval.reps, "Repetitions per baseline budget")->capture_default_str();
  eval_cmd->add_option("--seed", eval.seed, "Base seed")->capture_default_str();
  eval_cmd->add_option("--k", eval.ks, "Top-k cut-offs for Jaccard")->capture_default_str();
  eval_cmd->add_option("--out-dir", eval.out_dir, "Directory for the report CSVs")
      ->capture_default_str();
  eval_cmd->add_option("--prefix", eval.prefix, "Report file prefix")->capture_default_str();
  eval.flags.attach(*eval_cmd);

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic prediction matrix");
  sim_cmd->add_option("--models", sim.spec.num_models, "Number of models")->required();
  sim_cmd->add_option("--samples", sim.spec.num_samples, "Number of samples")->required();
  sim_cmd->add_option("--classes", sim.spec.num_classes, "Number of classes")->required();
  sim_cmd->add_option("--acc", sim.acc_range, "Evenly spaced accuracies min:max");
  sim_cmd->add_option("--accuracies", sim.accuracies, "Explicit accuracies a1,a2,...");
  sim_cmd->add_option("--hard-fraction", sim.spec.hard_fraction, "Share of hard samples")
      ->capture_default_str();
  sim_cmd->add_option("--hard-penalty", sim.spec.hard_penalty, "Accuracy penalty on hard samples")
      ->capture_default_str();
  sim_cmd->add_option("--seed", sim.spec.seed, "Generator seed")->capture_default_str();
  sim_cmd->add_option("--out-predictions", sim.out_predictions, "Prediction matrix output")->required();
  sim_cmd->add_option("--out-truth", sim.out_truth, "Ground truth output")->required();
  sim_cmd->add_option("--format", sim.format, "csv or json (default: from file extension)")
      ->check(CLI::IsMember({"csv", "json"}));

  MetricsArgs metrics;
  auto* metrics_cmd = app.add_subcommand("metrics", "Compare an estimated ranking with the truth");
  metrics_cmd->add_option("--truth-ranking", metrics.truth_ranking, "Reference ranking")
      ->required()
      ->check(CLI::ExistingFile);
  metrics_cmd->add_option("--estimate-ranking", metrics.estimate_ranking, "Estimated ranking")
      ->required()
      ->check(CLI::ExistingFile);
  metrics_cmd->add_option("--k", metrics.ks, "Top-k cut-offs for Jaccard")->capture_default_str();
  metrics_cmd->add_option("--permutations", metrics.permutations, "Monte-Carlo permutations")
      ->capture_default_str();
  metrics_cmd->add_option("--seed", metrics.seed, "Permutation seed")->capture_default_str();
  metrics_cmd->add_option("--out", metrics.out, "Output file (default: standard output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kInputError;
  }

  try {
    if (rank_cmd->parsed()) return cmd_rank(rank, out, err);
    if (eval_cmd->parsed()) return cmd_eval(eval, out, err);
    if (sim_cmd->parsed()) return cmd_simulate(sim, out);
    if (metrics_cmd->parsed()) return cmd_metrics(metrics, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("laf");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace laf::cli
