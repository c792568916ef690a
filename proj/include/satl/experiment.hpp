// Experiment grid runner and hyperparameter sweeps. A grid cell is one
// training run at a (known-label proportion, arm, repeat) coordinate; cells
// run on a bounded worker pool, write their own files, and are summarized
// into one mean +/- std table plus a hashed manifest. All outputs are
// reproducible byte-for-byte from the spec and seeds (no timestamps).
#pragma once

#include <atomic>
#include <cctype>
#include <filesystem>
#include <mutex>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "satl/io.hpp"
#include "satl/trainer.hpp"

namespace satl {

struct ArmSpec {
  std::string label;
  TrainConfig config;
  // When set, each cell's EMA momentum is picked from the cell's known-label
  // proportion instead of config.sate.gamma.
  bool gamma_auto = true;
};

struct ExperimentSpec {
  std::string name = "experiment";
  GeneratorConfig generator;
  std::vector<Real> known_proportions = {0.05, 0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<ArmSpec> arms;
  Index repeats = 1;
  std::string output_dir = "out";
  std::uint64_t base_seed = 1;
};

inline void validate(const ExperimentSpec& spec) {
  validate(spec.generator);
  if (spec.arms.empty()) throw std::invalid_argument("ExperimentSpec: need at least one arm");
  if (spec.repeats < 1) throw std::invalid_argument("ExperimentSpec: repeats must be >= 1");
  if (spec.known_proportions.empty()) {
    throw std::invalid_argument("ExperimentSpec: need at least one known proportion");
  }
  for (Real p : spec.known_proportions) {
    if (!(p > 0.0 && p <= 1.0)) {
      throw std::invalid_argument("ExperimentSpec: proportions must lie in (0, 1]");
    }
  }
  for (std::size_t i = 0; i < spec.arms.size(); ++i) {
    if (spec.arms[i].label.empty()) throw std::invalid_argument("ExperimentSpec: empty arm label");
    for (std::size_t j = i + 1; j < spec.arms.size(); ++j) {
      if (spec.arms[i].label == spec.arms[j].label) {
        throw std::invalid_argument("ExperimentSpec: duplicate arm label " + spec.arms[i].label);
      }
    }
  }
}

struct CellOutcome {
  Index prop_idx = 0;
  Index arm_idx = 0;
  Index repeat = 0;
  bool ok = false;
  std::string error;
  std::uint64_t seed = 0;
  std::string directory;
  std::vector<std::string> files;  // relative to the experiment output dir
  std::optional<Real> final_map, final_of1, final_cf1;
  std::optional<Real> best_precision, best_recall;
  Index best_epoch = 0;  // 1-based
};

struct ExperimentResult {
  bool all_ok = true;
  std::vector<CellOutcome> cells;
  std::filesystem::path summary_path;
  std::filesystem::path manifest_path;
};

namespace detail {

inline std::string sanitize_label(const std::string& label) {
  std::string out;
  for (char ch : label) {
    out.push_back(std::isalnum(static_cast<unsigned char>(ch)) ? ch : '-');
  }
  return out;
}

inline std::string cell_directory_name(Index prop_idx, const std::string& arm_label, Index repeat) {
  std::ostringstream out;
  out << 'p' << prop_idx << '_' << sanitize_label(arm_label) << "_r" << repeat;
  return out.str();
}

inline std::uint64_t mask_seed(const ExperimentSpec& spec, Index prop_idx, Index repeat) {
  return rng::derive_seed(spec.base_seed,
                          {0x4D53u, static_cast<std::uint64_t>(prop_idx),
                           static_cast<std::uint64_t>(repeat)});
}

inline std::uint64_t cell_seed(const ExperimentSpec& spec, Index prop_idx, Index arm_idx,
                               Index repeat) {
  return rng::derive_seed(spec.base_seed,
                          {0x5452u, static_cast<std::uint64_t>(prop_idx),
                           static_cast<std::uint64_t>(arm_idx), static_cast<std::uint64_t>(repeat)});
}

struct MeanStd {
  std::optional<Real> mean, stddev;
};

inline MeanStd mean_std(const std::vector<Real>& values) {
  MeanStd out;
  if (values.empty()) return out;
  Real sum = 0.0;
  for (Real v : values) sum += v;
  const Real mean = sum / static_cast<Real>(values.size());
  out.mean = mean;
  if (values.size() >= 2) {
    Real ss = 0.0;
    for (Real v : values) ss += (v - mean) * (v - mean);
    out.stddev = std::sqrt(ss / static_cast<Real>(values.size() - 1));
  }
  return out;
}

}  // namespace detail

// JSON round-trip for specs (used by the CLI spec-file interface).
inline io::json to_json(const TrainConfig& config) {
  io::json j;
  j["lr_stage1"] = config.lr_stage1;
  j["lr_stage2"] = config.lr_stage2;
  j["stage1_epochs"] = config.stage1_epochs;
  j["total_epochs"] = config.total_epochs;
  j["batch_size"] = config.batch_size;
  j["lambda"] = config.lambda;
  j["momentum"] = config.momentum;
  j["arch"] = config.arch == Architecture::kLinear ? "linear" : "one_hidden";
  j["hidden_dim"] = config.hidden_dim;
  j["holdout_fraction"] = config.holdout_fraction;
  j["prediction_threshold"] = config.prediction_threshold;
  j["seed"] = config.seed;
  j["kappa_neg"] = config.sate.kappa_neg;
  j["kappa_pos"] = config.sate.kappa_pos;
  j["gamma"] = config.sate.gamma;
  j["initial_threshold"] = config.sate.initial_threshold;
  j["min_known_count"] = config.sate.min_known_count;
  switch (config.threshold.mode) {
    case ThresholdMode::kSate: j["threshold_mode"] = "sate"; break;
    case ThresholdMode::kFixed: j["threshold_mode"] = "fixed"; break;
    case ThresholdMode::kLinearDecay: j["threshold_mode"] = "linear_decay"; break;
  }
  j["fixed_value"] = config.threshold.fixed_value;
  j["decay_start"] = config.threshold.decay_start;
  j["decay_end"] = config.threshold.decay_end;
  return j;
}

inline TrainConfig train_config_from_json(const io::json& j) {
  TrainConfig config;
  config.lr_stage1 = j.value("lr_stage1", config.lr_stage1);
  config.lr_stage2 = j.value("lr_stage2", config.lr_stage2);
  config.stage1_epochs = j.value("stage1_epochs", config.stage1_epochs);
  config.total_epochs = j.value("total_epochs", config.total_epochs);
  config.batch_size = j.value("batch_size", config.batch_size);
  config.lambda = j.value("lambda", config.lambda);
  config.momentum = j.value("momentum", config.momentum);
  if (j.contains("arch")) {
    config.arch = j.at("arch").get<std::string>() == "one_hidden" ? Architecture::kOneHidden
                                                                  : Architecture::kLinear;
  }
  config.hidden_dim = j.value("hidden_dim", config.hidden_dim);
  config.holdout_fraction = j.value("holdout_fraction", config.holdout_fraction);
  config.prediction_threshold = j.value("prediction_threshold", config.prediction_threshold);
  config.seed = j.value("seed", config.seed);
  config.sate.kappa_neg = j.value("kappa_neg", config.sate.kappa_neg);
  config.sate.kappa_pos = j.value("kappa_pos", config.sate.kappa_pos);
  config.sate.gamma = j.value("gamma", config.sate.gamma);
  config.sate.initial_threshold = j.value("initial_threshold", config.sate.initial_threshold);
  config.sate.min_known_count = j.value("min_known_count", config.sate.min_known_count);
  const std::string mode = j.value("threshold_mode", "sate");
  if (mode == "fixed") config.threshold.mode = ThresholdMode::kFixed;
  else if (mode == "linear_decay") config.threshold.mode = ThresholdMode::kLinearDecay;
  else config.threshold.mode = ThresholdMode::kSate;
  config.threshold.fixed_value = j.value("fixed_value", config.threshold.fixed_value);
  config.threshold.decay_start = j.value("decay_start", config.threshold.decay_start);
  config.threshold.decay_end = j.value("decay_end", config.threshold.decay_end);
  return config;
}

inline io::json to_json(const GeneratorConfig& config) {
  io::json j;
  j["n_samples"] = config.n_samples;
  j["n_categories"] = config.n_categories;
  j["feature_dim"] = config.feature_dim;
  j["separation"] = config.separation;
  j["prevalence"] = config.prevalence;
  j["cooccurrence_strength"] = config.cooccurrence_strength;
  j["noise_scale"] = config.noise_scale;
  j["seed"] = config.seed;
  return j;
}

inline GeneratorConfig generator_config_from_json(const io::json& j) {
  GeneratorConfig config;
  config.n_samples = j.value("n_samples", config.n_samples);
  config.n_categories = j.value("n_categories", config.n_categories);
  config.feature_dim = j.value("feature_dim", config.feature_dim);
  config.separation = j.value("separation", config.separation);
  config.cooccurrence_strength = j.value("cooccurrence_strength", config.cooccurrence_strength);
  config.noise_scale = j.value("noise_scale", config.noise_scale);
  config.seed = j.value("seed", config.seed);
  if (j.contains("prevalence")) {
    if (j.at("prevalence").is_array()) {
      config.prevalence = j.at("prevalence").get<std::vector<Real>>();
    } else {
      const auto& p = j.at("prevalence");
      const std::string kind = p.value("kind", "uniform");
      if (kind == "long_tail") {
        config.prevalence = long_tail_prevalence(config.n_categories, p.value("base", 0.4));
      } else {
        config.prevalence = uniform_prevalence(config.n_categories, p.value("p", 0.25));
      }
    }
  } else {
    config.prevalence = uniform_prevalence(config.n_categories, 0.25);
  }
  return config;
}

inline io::json to_json(const ExperimentSpec& spec) {
  io::json arms = io::json::array();
  for (const auto& arm : spec.arms) {
    io::json a = to_json(arm.config);
    a["label"] = arm.label;
    a["gamma_auto"] = arm.gamma_auto;
    arms.push_back(std::move(a));
  }
  return io::json{{"name", spec.name},
                  {"generator", to_json(spec.generator)},
                  {"known_proportions", spec.known_proportions},
                  {"arms", arms},
                  {"repeats", spec.repeats},
                  {"output_dir", spec.output_dir},
                  {"base_seed", spec.base_seed}};
}

inline ExperimentSpec experiment_spec_from_json(const io::json& j) {
  ExperimentSpec spec;
  spec.name = j.value("name", spec.name);
  if (j.contains("generator")) spec.generator = generator_config_from_json(j.at("generator"));
  if (j.contains("known_proportions")) {
    spec.known_proportions = j.at("known_proportions").get<std::vector<Real>>();
  }
  spec.repeats = j.value("repeats", spec.repeats);
  spec.output_dir = j.value("output_dir", spec.output_dir);
  spec.base_seed = j.value("base_seed", spec.base_seed);
  if (j.contains("arms")) {
    for (const auto& a : j.at("arms")) {
      ArmSpec arm;
      arm.label = a.value("label", "arm");
      arm.config = train_config_from_json(a);
      arm.gamma_auto = a.value("gamma_auto", true);
      spec.arms.push_back(std::move(arm));
    }
  }
  return spec;
}

// Runs one grid cell end to end and writes its artifact files.
inline CellOutcome run_cell(const ExperimentSpec& spec, const SyntheticDataset& dataset,
                            Index prop_idx, Index arm_idx, Index repeat, int histogram_bins = 50) {
  CellOutcome outcome;
  outcome.prop_idx = prop_idx;
  outcome.arm_idx = arm_idx;
  outcome.repeat = repeat;
  const auto& arm = spec.arms[static_cast<std::size_t>(arm_idx)];
  const Real proportion = spec.known_proportions[static_cast<std::size_t>(prop_idx)];
  outcome.seed = detail::cell_seed(spec, prop_idx, arm_idx, repeat);
  outcome.directory = "runs/" + detail::cell_directory_name(prop_idx, arm.label, repeat);
  try {
    const LabelMatrix masked =
        mask_labels(dataset.full_labels, proportion, detail::mask_seed(spec, prop_idx, repeat));
    TrainConfig config = arm.config;
    config.seed = outcome.seed;
    if (arm.gamma_auto) config.sate.gamma = auto_gamma(proportion);
    const TrainRun run = train(dataset, masked, config);

    const std::filesystem::path cell_dir = std::filesystem::path(spec.output_dir) / outcome.directory;
    std::filesystem::create_directories(cell_dir);
    io::write_metrics_csv(cell_dir / "metrics.csv", run);
    io::write_threshold_csv(cell_dir / "thresholds.csv", run);
    const auto dists = known_score_distributions(
        run.model, dataset.features.topRows(run.train_rows), masked.topRows(run.train_rows));
    io::write_histogram_dump(cell_dir / "histograms.json", dists, histogram_bins);
    outcome.files = {outcome.directory + "/metrics.csv", outcome.directory + "/thresholds.csv",
                     outcome.directory + "/histograms.json"};

    const auto& last = run.records.back();
    outcome.final_map = last.eval.map;
    outcome.final_of1 = last.eval.f1.overall_f1;
    outcome.final_cf1 = last.eval.f1.per_class_f1;
    const std::size_t best = best_epoch_index(run);
    outcome.best_epoch = run.records[best].epoch;
    outcome.best_precision = run.records[best].pseudo.mean_precision;
    outcome.best_recall = run.records[best].pseudo.mean_recall;
    outcome.ok = true;
  } catch (const std::exception& error) {
    outcome.ok = false;
    outcome.error = error.what();
  }
  return outcome;
}

inline ExperimentResult run_experiment(const ExperimentSpec& spec, int jobs = 1) {
  validate(spec);
  const std::filesystem::path out_dir(spec.output_dir);
  std::filesystem::create_directories(out_dir / "runs");

  const SyntheticDataset dataset = generate(spec.generator);

  struct CellKey {
    Index prop_idx, arm_idx, repeat;
  };
  std::vector<CellKey> keys;
  for (Index p = 0; p < static_cast<Index>(spec.known_proportions.size()); ++p) {
    for (Index a = 0; a < static_cast<Index>(spec.arms.size()); ++a) {
      for (Index r = 0; r < spec.repeats; ++r) keys.push_back({p, a, r});
    }
  }

  ExperimentResult result;
  result.cells.resize(keys.size());
  const int worker_count = std::max(1, std::min<int>(jobs, static_cast<int>(keys.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= keys.size()) break;
      result.cells[i] = run_cell(spec, dataset, keys[i].prop_idx, keys[i].arm_idx, keys[i].repeat);
    }
  };
  if (worker_count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(worker_count));
    for (int w = 0; w < worker_count; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Summary: one row per (proportion, arm), aggregated over repeats.
  std::ostringstream summary;
  summary << "proportion,arm,repeats,map_mean,map_std,of1_mean,of1_std,cf1_mean,cf1_std,"
             "pseudo_precision_mean,pseudo_precision_std,pseudo_recall_mean,pseudo_recall_std\n";
  for (Index p = 0; p < static_cast<Index>(spec.known_proportions.size()); ++p) {
    for (Index a = 0; a < static_cast<Index>(spec.arms.size()); ++a) {
      std::vector<Real> maps, of1s, cf1s, precisions, recalls;
      for (const auto& cell : result.cells) {
        if (cell.prop_idx != p || cell.arm_idx != a || !cell.ok) continue;
        if (cell.final_map) maps.push_back(*cell.final_map);
        if (cell.final_of1) of1s.push_back(*cell.final_of1);
        if (cell.final_cf1) cf1s.push_back(*cell.final_cf1);
        if (cell.best_precision) precisions.push_back(*cell.best_precision);
        if (cell.best_recall) recalls.push_back(*cell.best_recall);
      }
      const auto map_ms = detail::mean_std(maps);
      const auto of1_ms = detail::mean_std(of1s);
      const auto cf1_ms = detail::mean_std(cf1s);
      const auto prec_ms = detail::mean_std(precisions);
      const auto rec_ms = detail::mean_std(recalls);
      summary << io::format_real(spec.known_proportions[static_cast<std::size_t>(p)]) << ','
              << spec.arms[static_cast<std::size_t>(a)].label << ',' << spec.repeats << ','
              << io::format_optional(map_ms.mean) << ',' << io::format_optional(map_ms.stddev)
              << ',' << io::format_optional(of1_ms.mean) << ',' << io::format_optional(of1_ms.stddev)
              << ',' << io::format_optional(cf1_ms.mean) << ',' << io::format_optional(cf1_ms.stddev)
              << ',' << io::format_optional(prec_ms.mean) << ',' << io::format_optional(prec_ms.stddev)
              << ',' << io::format_optional(rec_ms.mean) << ',' << io::format_optional(rec_ms.stddev)
              << '\n';
    }
  }
  result.summary_path = out_dir / "summary.csv";
  io::write_text_file(result.summary_path, summary.str());

  // Manifest: spec echo, per-cell status, and a content hash per output file.
  io::json cells = io::json::array();
  io::json failures = io::json::array();
  for (const auto& cell : result.cells) {
    io::json c{{"proportion", spec.known_proportions[static_cast<std::size_t>(cell.prop_idx)]},
               {"arm", spec.arms[static_cast<std::size_t>(cell.arm_idx)].label},
               {"repeat", cell.repeat},
               {"seed", cell.seed},
               {"directory", cell.directory},
               {"status", cell.ok ? "ok" : "failed"}};
    if (!cell.ok) {
      c["error"] = cell.error;
      failures.push_back(c);
      result.all_ok = false;
    }
    cells.push_back(std::move(c));
  }
  io::json files = io::json::array();
  files.push_back({{"path", "summary.csv"},
                   {"hash", io::file_content_hash(result.summary_path)}});
  for (const auto& cell : result.cells) {
    for (const auto& rel : cell.files) {
      files.push_back({{"path", rel}, {"hash", io::file_content_hash(out_dir / rel)}});
    }
  }
  io::json manifest{{"name", spec.name},
                    {"spec", to_json(spec)},
                    {"cells", cells},
                    {"failures", failures},
                    {"files", files},
                    {"status", result.all_ok ? "ok" : "failed"}};
  result.manifest_path = out_dir / "manifest.json";
  io::write_text_file(result.manifest_path, manifest.dump(2) + "\n");
  return result;
}

// ---------------------------------------------------------------------------
// Hyperparameter sweeps. Each sweep varies one knob on a shared dataset and
// masking, reporting best-epoch pseudo-label quality with the ranking loss
// disabled so the threshold machinery is observed in isolation.
// ---------------------------------------------------------------------------

struct SweepConfig {
  GeneratorConfig generator;
  Real known_proportion = 0.2;
  TrainConfig base;
  std::uint64_t base_seed = 1;
  Index repeats = 1;  // independent mask/train seeds averaged per sweep point
};

struct SweepRow {
  Real gamma = 0.0;
  Real kappa_pos = 0.0;
  Real kappa_neg = 0.0;
  Index best_epoch = 0;  // from the first repeat
  std::optional<Real> precision, recall, final_map;  // means over repeats
};

namespace detail {

inline SweepRow sweep_point(const SweepConfig& sweep, const SyntheticDataset& dataset,
                            const TrainConfig& config) {
  SweepRow row;
  row.gamma = config.sate.gamma;
  row.kappa_pos = config.sate.kappa_pos;
  row.kappa_neg = config.sate.kappa_neg;
  std::vector<Real> precisions, recalls, maps;
  for (Index repeat = 0; repeat < std::max<Index>(1, sweep.repeats); ++repeat) {
    const LabelMatrix masked =
        mask_labels(dataset.full_labels, sweep.known_proportion,
                    rng::derive_seed(sweep.base_seed, {0x4D53u, static_cast<std::uint64_t>(repeat)}));
    TrainConfig cell = config;
    cell.seed = rng::derive_seed(config.seed, {0x5357u, static_cast<std::uint64_t>(repeat)});
    const TrainRun run = train(dataset, masked, cell);
    const std::size_t best = best_epoch_index(run);
    if (repeat == 0) row.best_epoch = run.records[best].epoch;
    if (run.records[best].pseudo.mean_precision) {
      precisions.push_back(*run.records[best].pseudo.mean_precision);
    }
    if (run.records[best].pseudo.mean_recall) {
      recalls.push_back(*run.records[best].pseudo.mean_recall);
    }
    if (run.records.back().eval.map) maps.push_back(*run.records.back().eval.map);
  }
  row.precision = mean_std(precisions).mean;
  row.recall = mean_std(recalls).mean;
  row.final_map = mean_std(maps).mean;
  return row;
}

}  // namespace detail

inline std::vector<SweepRow> sweep_gamma(const SweepConfig& sweep, std::span<const Real> gammas) {
  for (Real g : gammas) {
    if (!(g > 0.0 && g < 1.0)) throw std::invalid_argument("sweep_gamma: gamma must lie in (0, 1)");
  }
  const SyntheticDataset dataset = generate(sweep.generator);
  std::vector<SweepRow> rows;
  for (Real g : gammas) {
    TrainConfig config = sweep.base;
    config.lambda = 0.0;  // threshold estimation observed without the ranking loss
    config.threshold.mode = ThresholdMode::kSate;
    config.sate.gamma = g;
    rows.push_back(detail::sweep_point(sweep, dataset, config));
  }
  return rows;
}

enum class KappaSide { kPositive, kNegative };

inline std::vector<SweepRow> sweep_kappa(const SweepConfig& sweep, KappaSide varied,
                                         std::span<const Real> values, Real fixed_other) {
  for (Real v : values) {
    if (!(v > 0.0 && v < 1.0)) throw std::invalid_argument("sweep_kappa: values must lie in (0, 1)");
  }
  if (!(fixed_other > 0.0 && fixed_other < 1.0)) {
    throw std::invalid_argument("sweep_kappa: fixed value must lie in (0, 1)");
  }
  const SyntheticDataset dataset = generate(sweep.generator);
  std::vector<SweepRow> rows;
  for (Real v : values) {
    TrainConfig config = sweep.base;
    config.lambda = 0.0;
    config.threshold.mode = ThresholdMode::kSate;
    if (varied == KappaSide::kPositive) {
      config.sate.kappa_pos = v;
      config.sate.kappa_neg = fixed_other;
    } else {
      config.sate.kappa_neg = v;
      config.sate.kappa_pos = fixed_other;
    }
    rows.push_back(detail::sweep_point(sweep, dataset, config));
  }
  return rows;
}

inline void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "gamma,kappa_pos,kappa_neg,best_epoch,precision,recall,final_map\n";
  for (const auto& row : rows) {
    out << io::format_real(row.gamma) << ',' << io::format_real(row.kappa_pos) << ','
        << io::format_real(row.kappa_neg) << ',' << row.best_epoch << ','
        << io::format_optional(row.precision) << ',' << io::format_optional(row.recall) << ','
        << io::format_optional(row.final_map) << '\n';
  }
  io::write_text_file(path, out.str());
}

}  // namespace satl
