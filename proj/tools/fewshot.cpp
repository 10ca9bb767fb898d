// Command-line front end: dataset synthesis and preparation, meta-training,
// evaluation, the conventional baseline sweep and the savings report.
//
// Exit codes: 0 ok, 1 usage, 2 I/O, 3 infeasible data, 4 config/checkpoint mismatch.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>

#include "fewshot/fewshot.hpp"

using namespace fewshot;

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kIo = 2, kInfeasible = 3, kMismatch = 4 };

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("'" + path + "' is not valid JSON: " + e.what(), 0);
  }
}

template <typename J>
void write_json_file(const J& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write to '" + path + "' failed");
}

void echo_config(const RunConfig& c) { std::cerr << "effective config: " << to_json(c).dump() << '\n'; }

std::set<std::string> originals_of(const GestureDataset& d) {
  std::set<std::string> out;
  for (const auto& s : d.samples())
    for (auto& o : original_classes(s)) out.insert(o);
  return out;
}

struct Options {
  std::string config_path;
  std::optional<std::size_t> threads;

  // gen-synthetic
  std::size_t classes = 0, samples = 0;
  double noise = 0.01;
  // shared
  std::uint64_t seed = 0;
  std::string in, out;
  // build-dataset
  std::size_t samples_per_class = 0;
  std::optional<std::size_t> pairs;
  // split
  std::size_t n_train = 0, n_val = 0, n_test = 0;
  std::string out_prefix;
  // train
  std::string train_path, val_path, history_path;
  std::optional<std::size_t> episodes, n_way, k_shot, q_queries, hidden_size, eval_every, queries;
  std::optional<double> learning_rate;
  std::optional<std::uint64_t> opt_seed, episode_seed;
  // eval
  std::string checkpoint, data;
  // train-sml
  std::string fsl_report;
  std::optional<std::size_t> sml_classes, epochs, max_samples, test_per_class;
  bool full_sweep = false;
  // savings
  std::string report, sweep_path;
  std::optional<long long> sml_samples, s_k_shot, s_n_way;
};

RunConfig base_config(const Options& o) {
  RunConfig c = o.config_path.empty() ? RunConfig{} : load_run_config(o.config_path);
  if (o.threads) c.threads = *o.threads;
  c.train.threads = c.worker_count();
  return c;
}

int cmd_gen_synthetic(const Options& o) {
  const auto d = gen_synthetic(o.classes, o.samples, o.noise, o.seed);
  save_gsjl(d, o.out);
  std::cerr << "wrote " << d.size() << " sequences in " << d.class_count() << " classes to " << o.out << '\n';
  return kOk;
}

int cmd_build_dataset(const Options& o) {
  const auto base = load_gsjl(o.in);
  const auto d = build_combined_dataset(base, o.samples_per_class, o.seed, o.pairs);
  save_gsjl(d, o.out);
  std::cerr << "wrote " << d.size() << " sequences in " << d.class_count() << " combined classes to " << o.out << '\n';
  return kOk;
}

int cmd_split(const Options& o) {
  const auto data = load_gsjl(o.in);
  const auto s = split_by_original_class(data, SplitSpec{o.n_train, o.n_val, o.n_test, o.seed});
  const char* names[3] = {"train", "val", "test"};
  const GestureDataset* parts[3] = {&s.train, &s.val, &s.test};
  std::set<std::string> seen;
  bool overlap = false;
  for (int g = 0; g < 3; ++g) {
    save_gsjl(*parts[g], o.out_prefix + "_" + names[g] + ".gsjl");
    const auto orig = originals_of(*parts[g]);
    for (const auto& name : orig) overlap = overlap || !seen.insert(name).second;
    std::cout << names[g] << ": " << parts[g]->class_count() << " classes, " << parts[g]->size()
              << " sequences, originals";
    for (const auto& name : s.groups[static_cast<std::size_t>(g)]) std::cout << ' ' << name;
    std::cout << '\n';
  }
  std::cout << "dropped " << s.dropped_classes << " classes spanning groups\n";
  std::cout << "original class overlap across splits: " << (overlap ? "FOUND" : "none") << '\n';
  return overlap ? kInfeasible : kOk;
}

int cmd_train(const Options& o) {
  RunConfig c = base_config(o);
  if (o.episodes) c.train.episodes = *o.episodes;
  if (o.n_way) c.train.spec.n_way = *o.n_way;
  if (o.k_shot) c.train.spec.k_shot = *o.k_shot;
  if (o.q_queries) c.train.spec.q_queries = *o.q_queries;
  if (o.eval_every) c.train.eval_every = *o.eval_every;
  if (o.learning_rate) c.train.adam.learning_rate = *o.learning_rate;
  if (o.hidden_size) c.net.hidden_size = *o.hidden_size;
  if (o.opt_seed) c.train.seed = *o.opt_seed;
  if (o.episode_seed) c.train.spec.seed = *o.episode_seed;
  c.net.validate();
  c.train.validate();
  echo_config(c);

  const auto train = load_gsjl(o.train_path);
  const GestureDataset val = o.val_path.empty() ? GestureDataset{} : load_gsjl(o.val_path);
  const std::size_t report_every = c.train.eval_every;
  const auto result = meta_train(train, val, c.net, c.train, [&](const HistoryRow& row) {
    if ((row.episode + 1) % report_every == 0) {
      std::cerr << "episode " << row.episode + 1 << " loss_rmse " << row.loss_rmse;
      if (row.val_accuracy) std::cerr << " val_accuracy " << *row.val_accuracy;
      std::cerr << '\n';
    }
  });
  save_checkpoint(Checkpoint{result.best, c.train, config_digest(c.net, c.train)}, o.out);
  if (!o.history_path.empty()) {
    std::ofstream h(o.history_path, std::ios::binary | std::ios::trunc);
    if (!h) throw IoError("cannot open '" + o.history_path + "' for writing");
    write_history_csv(h, result.history);
  }
  std::cout << "checkpoint " << o.out << " from episode " << result.best_episode + 1;
  if (result.best_val) std::cout << " val_accuracy=" << result.best_val->accuracy;
  std::cout << '\n';
  return kOk;
}

int cmd_eval(const Options& o) {
  RunConfig c = base_config(o);
  const auto ck = load_checkpoint(o.checkpoint);
  if (!o.config_path.empty()) require_architecture(ck, c.net);
  c.net = ck.params.config;
  EpisodeSpec spec = ck.train.spec;
  spec.q_queries = o.queries.value_or(c.eval_queries);
  if (o.n_way) spec.n_way = *o.n_way;
  if (o.k_shot) spec.k_shot = *o.k_shot;
  spec.seed = o.opt_seed.value_or(c.eval_seed);
  const std::size_t episodes = o.episodes.value_or(c.eval_episodes);
  c.eval_episodes = episodes;
  c.eval_queries = spec.q_queries;
  c.eval_seed = spec.seed;
  c.train = ck.train;
  echo_config(c);

  const auto data = load_gsjl(o.data);
  const auto r = evaluate(ck.params, data, spec, episodes, c.worker_count());
  char line[128];
  std::snprintf(line, sizeof line, "accuracy=%.4f ci95=%.4f episodes=%zu", r.accuracy, r.ci95_halfwidth, r.episodes);
  std::cout << line << '\n';
  if (!o.out.empty()) write_json_file(to_json(r), o.out);
  return kOk;
}

int cmd_train_sml(const Options& o) {
  RunConfig c = base_config(o);
  if (o.epochs) c.sml.epochs = *o.epochs;
  if (o.max_samples) c.sml.max_samples = *o.max_samples;
  if (o.test_per_class) c.sml.test_per_class = *o.test_per_class;
  if (o.opt_seed) c.sml.seed = *o.opt_seed;
  echo_config(c);

  const auto fsl = eval_report_from_json(read_json_file(o.fsl_report));
  const auto data = load_gsjl(o.data);
  const auto classes = select_classes(fsl, o.sml_classes.value_or(fsl.n_way));
  const auto sweep = sweep_sml(data, classes, fsl.accuracy, c.sml, !o.full_sweep);
  for (const auto& r : sweep.results)
    std::cout << "samples_per_class=" << r.samples_per_class << " test_accuracy=" << r.test_accuracy << '\n';
  if (sweep.crossing)
    std::cout << "crossing at " << sweep.crossing->samples_per_class << " samples per class (fsl_accuracy="
              << fsl.accuracy << ")\n";
  else
    std::cout << "no crossing up to " << c.sml.max_samples << " samples per class\n";
  write_json_file(to_json(sweep), o.out);
  return kOk;
}

int cmd_savings(const Options& o) {
  if (o.sml_samples || o.s_k_shot || o.s_n_way) {
    if (!(o.sml_samples && o.s_k_shot && o.s_n_way))
      throw InvalidInputError("savings: --sml-samples, --k-shot and --n-way go together");
    std::cout << compute_savings(*o.sml_samples, *o.s_k_shot, *o.s_n_way) << '\n';
    return kOk;
  }
  if (o.report.empty() || o.sweep_path.empty())
    throw InvalidInputError("savings: give --report and --sweep, or --sml-samples/--k-shot/--n-way");
  const auto fsl = eval_report_from_json(read_json_file(o.report));
  const auto sweep = sml_sweep_from_json(read_json_file(o.sweep_path));
  if (!sweep.crossing) {
    std::cerr << "error: the SML sweep never exceeded the FSL accuracy\n";
    return kInfeasible;
  }
  const auto r = make_savings_report(fsl, sweep);
  std::cout << r.savings << '\n';
  if (!o.out.empty()) write_json_file(to_json(r), o.out);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Few-shot dynamic hand gesture recognition"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config_path, "JSON run configuration (flags override it)");
  app.add_option("--threads", o.threads, "Worker threads (default: all cores)");

  auto* gen = app.add_subcommand("gen-synthetic", "Write a synthetic GSJL dataset");
  gen->add_option("--classes", o.classes, "Number of classes (>= 2)")->required()->check(CLI::Range(2, 1 << 20));
  gen->add_option("--samples", o.samples, "Samples per class")->required()->check(CLI::PositiveNumber);
  gen->add_option("--noise", o.noise, "Per-sample noise sigma")->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", o.seed, "Generator seed");
  gen->add_option("--out", o.out, "Output GSJL file")->required();

  auto* build = app.add_subcommand("build-dataset", "Concatenate base gestures into combined classes");
  build->add_option("--in", o.in, "Base GSJL file")->required();
  build->add_option("--samples-per-class", o.samples_per_class, "Samples per combined class")->required();
  build->add_option("--pairs", o.pairs, "Number of ordered class pairs to use (default: all)");
  build->add_option("--seed", o.seed, "Seed");
  build->add_option("--out", o.out, "Output GSJL file")->required();

  auto* split = app.add_subcommand("split", "Split by original class into train/val/test");
  split->add_option("--in", o.in, "Input GSJL file")->required();
  split->add_option("--train", o.n_train, "Original classes for training")->required();
  split->add_option("--val", o.n_val, "Original classes for validation")->required();
  split->add_option("--test", o.n_test, "Original classes for testing")->required();
  split->add_option("--seed", o.seed, "Seed");
  split->add_option("--out-prefix", o.out_prefix, "Writes <prefix>_{train,val,test}.gsjl")->required();

  auto* train = app.add_subcommand("train", "Meta-train a relation network");
  train->add_option("--train", o.train_path, "Training GSJL file")->required();
  train->add_option("--val", o.val_path, "Validation GSJL file (enables best-checkpoint selection)");
  train->add_option("--out", o.out, "Checkpoint file")->required();
  train->add_option("--history", o.history_path, "Per-episode CSV history");
  train->add_option("--episodes", o.episodes, "Training episodes");
  train->add_option("--n-way", o.n_way, "Classes per episode");
  train->add_option("--k-shot", o.k_shot, "Support samples per class");
  train->add_option("--q-queries", o.q_queries, "Query samples per class");
  train->add_option("--eval-every", o.eval_every, "Validation interval in episodes");
  train->add_option("--learning-rate", o.learning_rate, "Adam learning rate");
  train->add_option("--hidden-size", o.hidden_size, "LSTM hidden size");
  train->add_option("--seed", o.opt_seed, "Initialisation and validation seed");
  train->add_option("--episode-seed", o.episode_seed, "Training episode seed");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on N-way K-shot episodes");
  eval->add_option("--checkpoint", o.checkpoint, "RNCK checkpoint")->required();
  eval->add_option("--data", o.data, "GSJL file with the evaluation classes")->required();
  eval->add_option("--episodes", o.episodes, "Episodes (default 1000)");
  eval->add_option("--queries", o.queries, "Queries per class (default 1)");
  eval->add_option("--n-way", o.n_way, "Classes per episode (default: as trained)");
  eval->add_option("--k-shot", o.k_shot, "Shots per class (default: as trained)");
  eval->add_option("--seed", o.opt_seed, "Episode seed");
  eval->add_option("--out", o.out, "EvalReport JSON");

  auto* sml = app.add_subcommand("train-sml", "Sweep the conventional classifier against an FSL report");
  sml->add_option("--data", o.data, "GSJL file with enough samples of the selected classes")->required();
  sml->add_option("--fsl-report", o.fsl_report, "EvalReport JSON of the few-shot model")->required();
  sml->add_option("--classes", o.sml_classes, "Classes to use (default: the report's n_way)");
  sml->add_option("--epochs", o.epochs, "Epochs per run");
  sml->add_option("--max-samples", o.max_samples, "Largest samples per class");
  sml->add_option("--test-per-class", o.test_per_class, "Held-out test samples per class");
  sml->add_option("--seed", o.opt_seed, "Seed");
  sml->add_flag("--full", o.full_sweep, "Keep going after the first crossing");
  sml->add_option("--out", o.out, "Sweep JSON")->required();

  auto* sav = app.add_subcommand("savings", "Extra labelled samples the conventional model needs");
  sav->add_option("--report", o.report, "EvalReport JSON");
  sav->add_option("--sweep", o.sweep_path, "Sweep JSON from train-sml");
  sav->add_option("--out", o.out, "SavingsReport JSON");
  sav->add_option("--sml-samples", o.sml_samples, "SML samples per class");
  sav->add_option("--k-shot", o.s_k_shot, "Shots per class");
  sav->add_option("--n-way", o.s_n_way, "Classes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return cmd_gen_synthetic(o);
    if (*build) return cmd_build_dataset(o);
    if (*split) return cmd_split(o);
    if (*train) return cmd_train(o);
    if (*eval) return cmd_eval(o);
    if (*sml) return cmd_train_sml(o);
    if (*sav) return cmd_savings(o);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const CapacityError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInfeasible;
  } catch (const InfeasibleSplitError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInfeasible;
  } catch (const ConfigMismatchError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kMismatch;
  } catch (const InvalidInputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
