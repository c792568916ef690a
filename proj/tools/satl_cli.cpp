// Command-line front end: dataset generation, single training runs,
// experiment grids, hyperparameter sweeps, histogram dumps and evaluation.
#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "satl/experiment.hpp"
#include "satl/io.hpp"

namespace fs = std::filesystem;
using namespace satl;

namespace {

std::vector<Real> parse_real_list(const std::string& text) {
  std::vector<Real> values;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) values.push_back(std::stod(item));
  }
  return values;
}

struct GeneratorOptions {
  GeneratorConfig config;
  std::string prevalence_list;
  Real prevalence_uniform = 0.25;
  Real prevalence_longtail = -1.0;

  void finalize() {
    if (!prevalence_list.empty()) {
      config.prevalence = parse_real_list(prevalence_list);
    } else if (prevalence_longtail > 0.0) {
      config.prevalence = long_tail_prevalence(config.n_categories, prevalence_longtail);
    } else {
      config.prevalence = uniform_prevalence(config.n_categories, prevalence_uniform);
    }
  }
};

void add_generator_options(CLI::App* cmd, GeneratorOptions& options) {
  cmd->add_option("--samples", options.config.n_samples, "Number of samples");
  cmd->add_option("--categories", options.config.n_categories, "Number of categories");
  cmd->add_option("--features", options.config.feature_dim, "Feature dimension");
  cmd->add_option("--separation", options.config.separation, "Prototype distance scale");
  cmd->add_option("--noise", options.config.noise_scale, "Isotropic noise scale");
  cmd->add_option("--cooccurrence", options.config.cooccurrence_strength,
                  "Adjacent-category co-occurrence strength in [0,1]");
  cmd->add_option("--seed", options.config.seed, "Generator seed");
  auto* list = cmd->add_option("--prevalence", options.prevalence_list,
                               "Comma-separated per-category positive rates");
  auto* uniform = cmd->add_option("--prevalence-uniform", options.prevalence_uniform,
                                  "Uniform positive rate for all categories");
  auto* longtail = cmd->add_option("--prevalence-longtail", options.prevalence_longtail,
                                   "Long-tail profile base/(c+1) with this base rate");
  list->excludes(uniform)->excludes(longtail);
  uniform->excludes(longtail);
}

struct TrainOptions {
  TrainConfig config;
  std::optional<Real> gamma;  // explicit value overrides the proportion-keyed default
  std::string threshold_mode = "sate";

  TrainConfig finalize(Real known_proportion) {
    if (threshold_mode == "fixed") config.threshold.mode = ThresholdMode::kFixed;
    else if (threshold_mode == "linear-decay") config.threshold.mode = ThresholdMode::kLinearDecay;
    else if (threshold_mode == "sate") config.threshold.mode = ThresholdMode::kSate;
    else throw CLI::ValidationError("--threshold-mode must be sate, fixed or linear-decay");
    config.sate.gamma = gamma.value_or(auto_gamma(known_proportion));
    return config;
  }
};

void add_train_options(CLI::App* cmd, TrainOptions& options, bool alias_plain_seed = false) {
  cmd->add_option("--lr1", options.config.lr_stage1, "Stage-1 learning rate");
  cmd->add_option("--lr2", options.config.lr_stage2, "Stage-2 learning rate");
  cmd->add_option("--stage1-epochs", options.config.stage1_epochs, "Warmup epoch count");
  cmd->add_option("--total-epochs", options.config.total_epochs, "Total epoch count");
  cmd->add_option("--batch", options.config.batch_size, "Mini-batch size");
  cmd->add_option("--lambda", options.config.lambda, "Ranking-loss weight");
  cmd->add_option("--momentum", options.config.momentum, "SGD momentum");
  cmd->add_option("--hidden", options.config.hidden_dim, "Hidden width (one_hidden arch)");
  cmd->add_option("--holdout", options.config.holdout_fraction, "Validation fraction");
  cmd->add_option("--f1-threshold", options.config.prediction_threshold, "F1 binarization point");
  cmd->add_option(alias_plain_seed ? "--train-seed,--seed" : "--train-seed", options.config.seed,
                  "Training seed");
  cmd->add_option("--kappa-pos", options.config.sate.kappa_pos, "Positive-side quantile level");
  cmd->add_option("--kappa-neg", options.config.sate.kappa_neg, "Negative-side quantile level");
  cmd->add_option("--min-known", options.config.sate.min_known_count,
                  "Per-side sample floor for threshold estimation");
  cmd->add_option("--initial-threshold", options.config.sate.initial_threshold,
                  "Threshold before the first update");
  cmd->add_option_function<Real>(
      "--gamma", [&options](Real g) { options.gamma = g; },
      "EMA weight on the previous threshold (default keyed to the known proportion)");
  cmd->add_option("--threshold-mode", options.threshold_mode, "sate | fixed | linear-decay");
  cmd->add_option("--fixed-value", options.config.threshold.fixed_value,
                  "Threshold for --threshold-mode fixed");
  cmd->add_option("--decay-start", options.config.threshold.decay_start,
                  "Start threshold for linear decay");
  cmd->add_option("--decay-end", options.config.threshold.decay_end,
                  "End threshold for linear decay");
  cmd->add_option_function<std::string>(
      "--arch",
      [&options](const std::string& a) {
        if (a == "linear") options.config.arch = Architecture::kLinear;
        else if (a == "one_hidden") options.config.arch = Architecture::kOneHidden;
        else throw CLI::ValidationError("--arch must be linear or one_hidden");
      },
      "linear | one_hidden");
}

struct LoadedDataset {
  SyntheticDataset dataset;
  LabelMatrix masked;
  Real known_fraction = 1.0;
};

LoadedDataset load_dataset(const fs::path& dir) {
  LoadedDataset loaded;
  loaded.dataset.features = io::read_matrix_csv(dir / "features.csv");
  loaded.dataset.full_labels = io::read_label_csv(dir / "labels_full.csv");
  const fs::path masked_path = dir / "labels_masked.csv";
  loaded.masked = fs::exists(masked_path) ? io::read_label_csv(masked_path)
                                          : loaded.dataset.full_labels;
  loaded.known_fraction =
      static_cast<Real>(known_count(loaded.masked)) /
      static_cast<Real>(loaded.masked.rows() * loaded.masked.cols());
  return loaded;
}

int run_generate(const GeneratorOptions& generator_options, const std::string& out,
                 Real known_proportion, std::uint64_t mask_seed_value) {
  GeneratorOptions options = generator_options;
  options.finalize();
  const SyntheticDataset dataset = generate(options.config);
  const LabelMatrix masked = mask_labels(dataset.full_labels, known_proportion, mask_seed_value);

  const fs::path dir(out);
  fs::create_directories(dir);
  io::write_matrix_csv(dir / "features.csv", dataset.features);
  io::write_label_csv(dir / "labels_full.csv", dataset.full_labels);
  io::write_label_csv(dir / "labels_masked.csv", masked);

  io::json manifest{{"generator", to_json(options.config)},
                    {"known_proportion", known_proportion},
                    {"mask_seed", mask_seed_value},
                    {"files", {"features.csv", "labels_full.csv", "labels_masked.csv"}}};
  io::write_text_file(dir / "dataset.json", manifest.dump(2) + "\n");
  std::cout << "wrote dataset to " << dir.string() << "\n";
  return 0;
}

int run_train(const std::string& data_dir, const std::string& out, TrainOptions options,
              int histogram_bins) {
  const LoadedDataset loaded = load_dataset(data_dir);
  const TrainConfig config = options.finalize(loaded.known_fraction);
  const TrainRun run = train(loaded.dataset, loaded.masked, config);

  const fs::path dir(out);
  fs::create_directories(dir);
  io::write_metrics_csv(dir / "metrics.csv", run);
  io::write_threshold_csv(dir / "thresholds.csv", run);
  const auto dists = known_score_distributions(run.model,
                                               loaded.dataset.features.topRows(run.train_rows),
                                               loaded.masked.topRows(run.train_rows));
  io::write_histogram_dump(dir / "histograms.json", dists, histogram_bins);
  io::write_checkpoint(dir / "checkpoint.json", run.model, run.final_thresholds,
                       run.config.total_epochs);

  const auto& last = run.records.back();
  const std::size_t best = best_epoch_index(run);
  io::json summary{{"epochs", run.records.size()},
                   {"final_map", last.eval.map ? io::json(*last.eval.map) : io::json()},
                   {"best_epoch", run.records[best].epoch},
                   {"best_map", run.records[best].eval.map ? io::json(*run.records[best].eval.map)
                                                           : io::json()},
                   {"recalled_total", last.recalled_total},
                   {"pseudo_precision", last.pseudo.mean_precision
                                            ? io::json(*last.pseudo.mean_precision)
                                            : io::json()},
                   {"pseudo_recall", last.pseudo.mean_recall ? io::json(*last.pseudo.mean_recall)
                                                             : io::json()}};
  io::write_text_file(dir / "summary.json", summary.dump(2) + "\n");
  std::cout << summary.dump(2) << "\n";
  return 0;
}

// Named arm presets matching the standard ablation grid.
ArmSpec make_arm(const std::string& name, const TrainConfig& base) {
  ArmSpec arm{name, base, true};
  if (name == "fixed" || name == "fixed-0.9") {
    arm.config.threshold.mode = ThresholdMode::kFixed;
    arm.config.lambda = 0.0;
  } else if (name == "linear-decay") {
    arm.config.threshold.mode = ThresholdMode::kLinearDecay;
    arm.config.lambda = 0.0;
  } else if (name == "sate") {
    arm.config.threshold.mode = ThresholdMode::kSate;
    arm.config.lambda = 0.0;
  } else if (name == "sate-drl") {
    arm.config.threshold.mode = ThresholdMode::kSate;
  } else {
    throw CLI::ValidationError("unknown arm preset: " + name +
                               " (expected fixed, linear-decay, sate or sate-drl)");
  }
  return arm;
}

int run_experiment_cmd(const std::string& spec_file, ExperimentSpec spec,
                       const std::string& out_override, int jobs, bool spec_given) {
  if (spec_given) {
    spec = experiment_spec_from_json(io::json::parse(io::read_text_file(spec_file)));
  }
  if (!out_override.empty()) spec.output_dir = out_override;
  const ExperimentResult result = run_experiment(spec, jobs);
  std::cout << "summary: " << result.summary_path.string() << "\n"
            << "manifest: " << result.manifest_path.string() << "\n";
  if (!result.all_ok) {
    std::cerr << "some cells failed; see manifest\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic-aware threshold learning on synthetic multi-label benchmarks"};
  app.require_subcommand(1);

  // generate ----------------------------------------------------------------
  auto* generate_cmd = app.add_subcommand("generate", "Generate a synthetic dataset");
  GeneratorOptions generator_options;
  std::string generate_out = "dataset";
  Real known_proportion = 0.2;
  std::uint64_t mask_seed_value = 1;
  generate_cmd->add_option("--out", generate_out, "Output directory")->required();
  add_generator_options(generate_cmd, generator_options);
  generate_cmd->add_option("--known-proportion", known_proportion,
                           "Fraction of labels kept known, in (0, 1]");
  generate_cmd->add_option("--mask-seed", mask_seed_value, "Masking seed");

  // train -------------------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "Train on a generated dataset");
  std::string train_data, train_out = "run";
  TrainOptions train_options;
  int train_bins = 50;
  train_cmd->add_option("--data", train_data, "Dataset directory from `generate`")->required();
  train_cmd->add_option("--out", train_out, "Output directory");
  train_cmd->add_option("--bins", train_bins, "Histogram bins");
  add_train_options(train_cmd, train_options, /*alias_plain_seed=*/true);

  // experiment ----------------------------------------------------------------
  auto* experiment_cmd =
      app.add_subcommand("experiment", "Run an experiment grid from a spec file or flags");
  std::string spec_file, experiment_out, experiment_name = "experiment";
  std::string arm_list = "fixed,linear-decay,sate,sate-drl";
  std::string proportion_list = "0.05,0.1,0.2,0.3,0.4,0.5";
  GeneratorOptions experiment_generator;
  TrainOptions experiment_train;
  Index experiment_repeats = 1;
  std::uint64_t experiment_base_seed = 1;
  int jobs = 1;
  auto* spec_opt =
      experiment_cmd->add_option("--spec", spec_file, "Experiment spec JSON (overrides flags)")
          ->check(CLI::ExistingFile);
  experiment_cmd->add_option("--out", experiment_out, "Output directory");
  experiment_cmd->add_option("--jobs", jobs, "Worker pool size");
  experiment_cmd->add_option("--name", experiment_name, "Experiment name");
  experiment_cmd->add_option("--arms", arm_list,
                             "Comma-separated arm presets: fixed, linear-decay, sate, sate-drl");
  experiment_cmd->add_option("--proportions", proportion_list,
                             "Comma-separated known-label proportions");
  experiment_cmd->add_option("--repeats", experiment_repeats, "Independent repeats per cell");
  experiment_cmd->add_option("--base-seed", experiment_base_seed, "Base seed for the grid");
  add_generator_options(experiment_cmd, experiment_generator);
  add_train_options(experiment_cmd, experiment_train);

  // sweeps --------------------------------------------------------------------
  auto* gamma_cmd = app.add_subcommand("sweep-gamma", "Best-epoch pseudo-label quality vs gamma");
  GeneratorOptions gamma_generator;
  TrainOptions gamma_train;
  std::string gamma_out = "sweep_gamma.csv", gamma_list = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9";
  Real gamma_proportion = 0.2;
  std::uint64_t gamma_base_seed = 1;
  gamma_cmd->add_option("--out", gamma_out, "Output CSV path");
  gamma_cmd->add_option("--gammas", gamma_list, "Comma-separated gamma values");
  gamma_cmd->add_option("--known-proportion", gamma_proportion, "Known-label proportion");
  gamma_cmd->add_option("--base-seed", gamma_base_seed, "Masking seed");
  add_generator_options(gamma_cmd, gamma_generator);
  add_train_options(gamma_cmd, gamma_train);

  auto* kappa_cmd = app.add_subcommand("sweep-kappa", "Pseudo-label quality vs kappa levels");
  GeneratorOptions kappa_generator;
  TrainOptions kappa_train;
  std::string kappa_out = "sweep_kappa.csv";
  std::string kappa_pos_list, kappa_neg_list;
  Real kappa_fixed = 0.1;
  Real kappa_proportion = 0.2;
  std::uint64_t kappa_base_seed = 1;
  kappa_cmd->add_option("--out", kappa_out, "Output CSV path");
  auto* pos_opt = kappa_cmd->add_option("--kappa-pos-values", kappa_pos_list,
                                        "Vary the positive-side level over these values");
  auto* neg_opt = kappa_cmd->add_option("--kappa-neg-values", kappa_neg_list,
                                        "Vary the negative-side level over these values");
  pos_opt->excludes(neg_opt);
  kappa_cmd->add_option("--fixed-kappa", kappa_fixed, "Level held fixed on the other side");
  kappa_cmd->add_option("--known-proportion", kappa_proportion, "Known-label proportion");
  kappa_cmd->add_option("--base-seed", kappa_base_seed, "Masking seed");
  add_generator_options(kappa_cmd, kappa_generator);
  add_train_options(kappa_cmd, kappa_train);

  // dump-distributions ---------------------------------------------------------
  auto* dump_cmd = app.add_subcommand("dump-distributions",
                                      "Known-score histograms under a checkpointed model");
  std::string dump_data, dump_checkpoint, dump_out = "histograms.json";
  int dump_bins = 50;
  dump_cmd->add_option("--data", dump_data, "Dataset directory")->required();
  dump_cmd->add_option("--checkpoint", dump_checkpoint, "Checkpoint file")->required();
  dump_cmd->add_option("--out", dump_out, "Output JSON path");
  dump_cmd->add_option("--bins", dump_bins, "Histogram bins");

  // eval ------------------------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint against ground truth");
  std::string eval_data, eval_checkpoint;
  Real eval_threshold = 0.5;
  eval_cmd->add_option("--data", eval_data, "Dataset directory")->required();
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--threshold", eval_threshold, "F1 binarization point");

  CLI11_PARSE(app, argc, argv);

  std::string failure_dir = ".";
  try {
    if (generate_cmd->parsed()) {
      failure_dir = generate_out;
      return run_generate(generator_options, generate_out, known_proportion, mask_seed_value);
    }
    if (train_cmd->parsed()) {
      failure_dir = train_out;
      return run_train(train_data, train_out, train_options, train_bins);
    }
    if (experiment_cmd->parsed()) {
      failure_dir = experiment_out.empty() ? "." : experiment_out;
      ExperimentSpec spec;
      if (spec_opt->count() == 0) {
        spec.name = experiment_name;
        GeneratorOptions generator = experiment_generator;
        generator.finalize();
        spec.generator = generator.config;
        spec.known_proportions = parse_real_list(proportion_list);
        spec.repeats = experiment_repeats;
        spec.base_seed = experiment_base_seed;
        // gamma stays proportion-keyed per cell unless --gamma was given
        TrainConfig base = experiment_train.finalize(0.2);
        std::istringstream arms_in(arm_list);
        std::string arm_name;
        while (std::getline(arms_in, arm_name, ',')) {
          if (arm_name.empty()) continue;
          ArmSpec arm = make_arm(arm_name, base);
          arm.gamma_auto = !experiment_train.gamma.has_value();
          spec.arms.push_back(std::move(arm));
        }
        if (experiment_out.empty()) {
          throw CLI::ValidationError("experiment: provide --out (or a --spec with output_dir)");
        }
      }
      return run_experiment_cmd(spec_file, std::move(spec), experiment_out, jobs,
                                spec_opt->count() > 0);
    }
    if (gamma_cmd->parsed()) {
      failure_dir = fs::path(gamma_out).parent_path().string();
      GeneratorOptions generator = gamma_generator;
      generator.finalize();
      SweepConfig sweep;
      sweep.generator = generator.config;
      sweep.known_proportion = gamma_proportion;
      sweep.base = gamma_train.finalize(gamma_proportion);
      sweep.base_seed = gamma_base_seed;
      const auto rows = sweep_gamma(sweep, parse_real_list(gamma_list));
      write_sweep_csv(gamma_out, rows);
      std::cout << "wrote " << gamma_out << "\n";
      return 0;
    }
    if (kappa_cmd->parsed()) {
      failure_dir = fs::path(kappa_out).parent_path().string();
      GeneratorOptions generator = kappa_generator;
      generator.finalize();
      SweepConfig sweep;
      sweep.generator = generator.config;
      sweep.known_proportion = kappa_proportion;
      sweep.base = kappa_train.finalize(kappa_proportion);
      sweep.base_seed = kappa_base_seed;
      const bool vary_pos = !kappa_pos_list.empty();
      if (!vary_pos && kappa_neg_list.empty()) {
        throw CLI::ValidationError("provide --kappa-pos-values or --kappa-neg-values");
      }
      const auto rows = sweep_kappa(sweep, vary_pos ? KappaSide::kPositive : KappaSide::kNegative,
                                    parse_real_list(vary_pos ? kappa_pos_list : kappa_neg_list),
                                    kappa_fixed);
      write_sweep_csv(kappa_out, rows);
      std::cout << "wrote " << kappa_out << "\n";
      return 0;
    }
    if (dump_cmd->parsed()) {
      const LoadedDataset loaded = load_dataset(dump_data);
      const auto ckpt = io::read_checkpoint(dump_checkpoint);
      const auto dists =
          known_score_distributions(ckpt.model, loaded.dataset.features, loaded.masked);
      io::write_histogram_dump(dump_out, dists, dump_bins);
      std::cout << "wrote " << dump_out << "\n";
      return 0;
    }
    if (eval_cmd->parsed()) {
      const LoadedDataset loaded = load_dataset(eval_data);
      const auto ckpt = io::read_checkpoint(eval_checkpoint);
      const auto report = evaluate_scores(forward(ckpt.model, loaded.dataset.features),
                                          loaded.dataset.full_labels, eval_threshold);
      io::json out{{"map", report.map ? io::json(*report.map) : io::json()},
                   {"of1", report.f1.overall_f1 ? io::json(*report.f1.overall_f1) : io::json()},
                   {"cf1", report.f1.per_class_f1 ? io::json(*report.f1.per_class_f1) : io::json()},
                   {"prediction_threshold", report.prediction_threshold}};
      io::json aps = io::json::array();
      for (const auto& ap : report.per_class_ap) aps.push_back(ap ? io::json(*ap) : io::json());
      out["per_class_ap"] = aps;
      std::cout << out.dump(2) << "\n";
      return 0;
    }
  } catch (const std::exception& error) {
    io::json failure{{"status", "failed"},
                     {"command", app.get_subcommands().empty()
                                     ? std::string{"unknown"}
                                     : app.get_subcommands().front()->get_name()},
                     {"error", error.what()}};
    std::error_code ec;
    fs::create_directories(failure_dir.empty() ? "." : failure_dir, ec);
    const fs::path failure_path =
        fs::path(failure_dir.empty() ? "." : failure_dir) / "failure_manifest.json";
    try {
      io::write_text_file(failure_path, failure.dump(2) + "\n");
    } catch (...) {
      // stderr still carries the diagnostics below
    }
    std::cerr << "error: " << error.what() << "\n(failure manifest: " << failure_path.string()
              << ")\n";
    return 1;
  }
  return 0;
}
