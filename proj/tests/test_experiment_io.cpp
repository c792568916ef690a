#include <doctest.h>

#include <filesystem>

#include "satl/experiment.hpp"
#include "satl/io.hpp"
#include "test_util.hpp"

using namespace satl;

namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "satl_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ExperimentSpec tiny_spec(const fs::path& out_dir) {
  ExperimentSpec spec;
  spec.name = "tiny";
  spec.generator.n_samples = 400;
  spec.generator.n_categories = 4;
  spec.generator.feature_dim = 12;
  spec.generator.separation = 5.0;
  spec.generator.prevalence = uniform_prevalence(4, 0.3);
  spec.generator.noise_scale = 1.0;
  spec.generator.seed = 5;
  spec.known_proportions = {0.3, 0.5};
  spec.repeats = 2;
  spec.base_seed = 9;
  spec.output_dir = out_dir.string();

  TrainConfig base;
  base.stage1_epochs = 2;
  base.total_epochs = 8;
  base.batch_size = 50;
  base.sate.min_known_count = 5;

  ArmSpec sate_arm{"sate", base, true};
  ArmSpec fixed_arm{"fixed-0.9", base, true};
  fixed_arm.config.threshold.mode = ThresholdMode::kFixed;
  fixed_arm.config.threshold.fixed_value = 0.9;
  spec.arms = {sate_arm, fixed_arm};
  return spec;
}

}  // namespace

TEST_CASE("matrix and label CSVs round-trip") {
  const fs::path dir = temp_dir("csv");
  auto engine = rng::make_engine(3);
  const DenseMatrix<Real> m = testutil::random_scores(7, 3, engine, -5.0, 5.0);
  io::write_matrix_csv(dir / "m.csv", m);
  const DenseMatrix<Real> back = io::read_matrix_csv(dir / "m.csv");
  CHECK((m - back).cwiseAbs().maxCoeff() < 1e-9);

  const LabelMatrix labels = testutil::random_ternary(6, 4, engine);
  io::write_label_csv(dir / "labels.csv", labels);
  CHECK(io::read_label_csv(dir / "labels.csv") == labels);
}

TEST_CASE("checkpoint round-trips exactly and validates its magic") {
  const fs::path dir = temp_dir("ckpt");
  const Classifier model = make_classifier(Architecture::kOneHidden, 5, 3, 4, 31);
  DenseVector<Real> tau(3);
  tau << 0.4, 0.6, 1.0;
  io::write_checkpoint(dir / "ckpt.json", model, tau, 17);
  const auto ckpt = io::read_checkpoint(dir / "ckpt.json");
  CHECK(ckpt.model.arch == Architecture::kOneHidden);
  CHECK(ckpt.model.hidden_weight == model.hidden_weight);
  CHECK(ckpt.model.output_weight == model.output_weight);
  CHECK(ckpt.thresholds == tau);
  CHECK(ckpt.epoch == 17);

  io::write_text_file(dir / "not_ckpt.json", "{\"magic\":\"nope\"}");
  CHECK_THROWS(io::read_checkpoint(dir / "not_ckpt.json"));
}

TEST_CASE("experiment and train config JSON round-trip") {
  TrainConfig config;
  config.lambda = 0.5;
  config.threshold.mode = ThresholdMode::kLinearDecay;
  config.sate.kappa_pos = 0.25;
  config.arch = Architecture::kOneHidden;
  const TrainConfig back = train_config_from_json(to_json(config));
  CHECK(back.lambda == config.lambda);
  CHECK(back.threshold.mode == ThresholdMode::kLinearDecay);
  CHECK(back.sate.kappa_pos == 0.25);
  CHECK(back.arch == Architecture::kOneHidden);

  const ExperimentSpec spec = tiny_spec("unused");
  const ExperimentSpec round = experiment_spec_from_json(to_json(spec));
  CHECK(round.name == spec.name);
  CHECK(round.arms.size() == spec.arms.size());
  CHECK(round.arms[1].label == "fixed-0.9");
  CHECK(round.known_proportions == spec.known_proportions);
  CHECK(round.generator.prevalence == spec.generator.prevalence);
}

TEST_CASE("metrics and threshold CSV exports mirror the run records") {
  const fs::path dir = temp_dir("export");
  GeneratorConfig g = tiny_spec("unused").generator;
  const SyntheticDataset dataset = generate(g);
  const LabelMatrix masked = mask_labels(dataset.full_labels, 0.4, 3);
  TrainConfig config;
  config.stage1_epochs = 2;
  config.total_epochs = 6;
  config.batch_size = 50;
  config.sate.min_known_count = 5;
  config.seed = 8;
  const TrainRun run = train(dataset, masked, config);

  io::write_metrics_csv(dir / "metrics.csv", run);
  const auto metrics = io::parse_csv(io::read_text_file(dir / "metrics.csv"));
  REQUIRE(metrics.size() == 1 + run.records.size());
  CHECK(metrics[0][0] == "epoch");
  for (std::size_t i = 0; i < run.records.size(); ++i) {
    CHECK(metrics[i + 1][0] == std::to_string(run.records[i].epoch));
    CHECK(metrics[i + 1][1] == std::to_string(run.records[i].stage));
  }

  io::write_threshold_csv(dir / "thresholds.csv", run);
  const auto thresholds = io::parse_csv(io::read_text_file(dir / "thresholds.csv"));
  const auto categories = static_cast<std::size_t>(dataset.full_labels.cols());
  REQUIRE(thresholds.size() == 1 + run.records.size() * categories);
  // Stage-1 rows carry no boundary estimates; stage-2 SATE rows carry them
  // whenever the category had enough known samples.
  for (std::size_t row = 1; row < thresholds.size(); ++row) {
    const auto& fields = thresholds[row];
    REQUIRE(fields.size() == 6);
    const std::size_t epoch_idx = (row - 1) / categories;
    if (run.records[epoch_idx].stage == 1) {
      CHECK(fields[2].empty());
      CHECK(fields[4].empty());
      CHECK(fields[5] == io::format_real(1.0));
    }
  }
}

TEST_CASE("training without a holdout still runs; eval metrics stay absent") {
  GeneratorConfig g = tiny_spec("unused").generator;
  const SyntheticDataset dataset = generate(g);
  const LabelMatrix masked = mask_labels(dataset.full_labels, 0.5, 5);
  TrainConfig config;
  config.stage1_epochs = 2;
  config.total_epochs = 5;
  config.batch_size = 50;
  config.holdout_fraction = 0.0;
  config.sate.min_known_count = 5;
  const TrainRun run = train(dataset, masked, config);
  CHECK(run.holdout_rows == 0);
  CHECK(run.train_rows == dataset.features.rows());
  for (const auto& record : run.records) CHECK_FALSE(record.eval.map.has_value());
  CHECK(best_epoch_index(run) == 0);
}

TEST_CASE("run_experiment produces the full grid with summary and manifest") {
  const fs::path dir = temp_dir("grid");
  const ExperimentSpec spec = tiny_spec(dir);
  const ExperimentResult result = run_experiment(spec, 2);
  CHECK(result.all_ok);
  CHECK(result.cells.size() == 2 * 2 * 2);  // proportions x arms x repeats

  REQUIRE(fs::exists(result.summary_path));
  REQUIRE(fs::exists(result.manifest_path));
  const auto summary_rows = io::parse_csv(io::read_text_file(result.summary_path));
  CHECK(summary_rows.size() == 1 + 2 * 2);  // header + (proportion x arm)
  // repeats = 2 implies the std column is populated.
  CHECK_FALSE(summary_rows[1][4].empty());

  const auto manifest = io::json::parse(io::read_text_file(result.manifest_path));
  CHECK(manifest.at("status") == "ok");
  CHECK(manifest.at("files").size() == 1 + result.cells.size() * 3);
  for (const auto& file : manifest.at("files")) {
    const fs::path path = dir / file.at("path").get<std::string>();
    REQUIRE(fs::exists(path));
    CHECK(io::file_content_hash(path) == file.at("hash").get<std::string>());
  }
}

TEST_CASE("run_experiment is byte-deterministic across executions") {
  const fs::path dir_a = temp_dir("det_a");
  const fs::path dir_b = temp_dir("det_b");
  ExperimentSpec spec = tiny_spec(dir_a);
  const ExperimentResult a = run_experiment(spec, 2);
  spec.output_dir = dir_b.string();
  const ExperimentResult b = run_experiment(spec, 1);  // job count must not matter
  CHECK(io::read_text_file(a.summary_path) == io::read_text_file(b.summary_path));
  const auto metrics_rel = fs::path(a.cells.front().directory) / "metrics.csv";
  CHECK(io::read_text_file(dir_a / metrics_rel) == io::read_text_file(dir_b / metrics_rel));
}

TEST_CASE("single-arm single-proportion spec runs exactly one cell") {
  const fs::path dir = temp_dir("single");
  ExperimentSpec spec = tiny_spec(dir);
  spec.known_proportions = {0.4};
  spec.repeats = 1;
  spec.arms.resize(1);
  const ExperimentResult result = run_experiment(spec, 1);
  CHECK(result.all_ok);
  CHECK(result.cells.size() == 1);
  const auto rows = io::parse_csv(io::read_text_file(result.summary_path));
  CHECK(rows.size() == 2);  // header + one row
  // repeats = 1 leaves the std columns empty.
  CHECK(rows[1][4].empty());
}

TEST_CASE("failed arms are recorded while the rest continue") {
  const fs::path dir = temp_dir("fail");
  ExperimentSpec spec = tiny_spec(dir);
  spec.arms[1].config.holdout_fraction = 0.999;  // leaves no training rows
  spec.arms[1].config.stage1_epochs = 1;
  const ExperimentResult result = run_experiment(spec, 1);
  CHECK_FALSE(result.all_ok);
  Index failed = 0, ok = 0;
  for (const auto& cell : result.cells) (cell.ok ? ok : failed) += 1;
  CHECK(failed == 4);  // the bad arm across 2 proportions x 2 repeats
  CHECK(ok == 4);
  const auto manifest = io::json::parse(io::read_text_file(result.manifest_path));
  CHECK(manifest.at("status") == "failed");
  CHECK(manifest.at("failures").size() == 4);
}

TEST_CASE("sweep rows carry best-epoch pseudo-label quality") {
  SweepConfig sweep;
  sweep.generator = tiny_spec("unused").generator;
  sweep.known_proportion = 0.4;
  sweep.base.stage1_epochs = 2;
  sweep.base.total_epochs = 10;
  sweep.base.batch_size = 50;
  sweep.base.sate.min_known_count = 5;
  sweep.base.seed = 3;
  sweep.base_seed = 3;

  const std::vector<Real> gammas{0.3, 0.7};
  const auto rows = sweep_gamma(sweep, gammas);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].gamma == 0.3);
  CHECK(rows[1].gamma == 0.7);
  for (const auto& row : rows) {
    CHECK(row.best_epoch >= 1);
    CHECK(row.final_map.has_value());
  }

  // A degenerate single-value sweep is just that run's report.
  const auto single = sweep_gamma(sweep, std::vector<Real>{0.3});
  REQUIRE(single.size() == 1);
  CHECK(single[0].precision == rows[0].precision);
  CHECK(single[0].recall == rows[0].recall);

  const std::vector<Real> kappas{0.9, 0.5};
  const auto kappa_rows = sweep_kappa(sweep, KappaSide::kPositive, kappas, 0.1);
  REQUIRE(kappa_rows.size() == 2);
  CHECK(kappa_rows[0].kappa_pos == 0.9);
  CHECK(kappa_rows[0].kappa_neg == 0.1);

  const fs::path dir = temp_dir("sweep");
  write_sweep_csv(dir / "sweep.csv", rows);
  const auto parsed = io::parse_csv(io::read_text_file(dir / "sweep.csv"));
  CHECK(parsed.size() == 3);  // header + 2 rows
}
