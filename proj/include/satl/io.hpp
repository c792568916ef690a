// File formats: dense CSV matrices, per-epoch metrics and threshold
// trajectory tables, histogram dumps, checkpoints and hashed manifests.
// All writers use one canonical number formatter so outputs are byte-stable.
#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "satl/distribution.hpp"
#include "satl/model.hpp"
#include "satl/trainer.hpp"
#include "satl/types.hpp"

namespace satl::io {

using nlohmann::json;

inline std::string format_real(Real value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.12g", value);
  return buffer;
}

inline std::string format_optional(const std::optional<Real>& value) {
  return value ? format_real(*value) : std::string{};
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// ---------------------------------------------------------------------------
// Dense CSV matrices: one row per sample, one column per category/feature.
// ---------------------------------------------------------------------------

inline void write_matrix_csv(const std::filesystem::path& path, const DenseMatrix<Real>& m) {
  std::ostringstream out;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_real(m(i, j));
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

inline void write_label_csv(const std::filesystem::path& path, const LabelMatrix& labels) {
  std::ostringstream out;
  for (Index i = 0; i < labels.rows(); ++i) {
    for (Index j = 0; j < labels.cols(); ++j) {
      if (j) out << ',';
      out << static_cast<int>(labels(i, j));
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream fields_in(line);
    std::string field;
    while (std::getline(fields_in, field, ',')) fields.push_back(field);
    rows.push_back(std::move(fields));
  }
  return rows;
}

inline DenseMatrix<Real> read_matrix_csv(const std::filesystem::path& path) {
  const auto rows = parse_csv(read_text_file(path));
  if (rows.empty()) throw std::runtime_error("empty matrix file: " + path.string());
  const auto cols = rows.front().size();
  DenseMatrix<Real> m(static_cast<Index>(rows.size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) throw std::runtime_error("ragged matrix file: " + path.string());
    for (std::size_t j = 0; j < cols; ++j) {
      m(static_cast<Index>(i), static_cast<Index>(j)) = std::stod(rows[i][j]);
    }
  }
  return m;
}

inline LabelMatrix read_label_csv(const std::filesystem::path& path) {
  const auto rows = parse_csv(read_text_file(path));
  if (rows.empty()) throw std::runtime_error("empty label file: " + path.string());
  const auto cols = rows.front().size();
  LabelMatrix m(static_cast<Index>(rows.size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) throw std::runtime_error("ragged label file: " + path.string());
    for (std::size_t j = 0; j < cols; ++j) {
      const int v = std::stoi(rows[i][j]);
      if (v < -1 || v > 1) throw std::runtime_error("label outside {-1,0,1}: " + path.string());
      m(static_cast<Index>(i), static_cast<Index>(j)) = static_cast<std::int8_t>(v);
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Per-epoch metrics table.
// ---------------------------------------------------------------------------

inline std::string metrics_csv_header() {
  return "epoch,stage,cls_loss,drl_loss,total_loss,recalled_total,pseudo_precision,"
         "pseudo_recall,val_map,val_of1,val_cf1,val_op,val_cp,val_or,val_cr,mean_tau";
}

inline std::string metrics_csv_row(const EpochRecord& record) {
  std::ostringstream out;
  out << record.epoch << ',' << record.stage << ',' << format_real(record.cls_loss) << ','
      << format_real(record.drl_loss) << ',' << format_real(record.total_loss) << ','
      << record.recalled_total << ',' << format_optional(record.pseudo.mean_precision) << ','
      << format_optional(record.pseudo.mean_recall) << ',' << format_optional(record.eval.map)
      << ',' << format_optional(record.eval.f1.overall_f1) << ','
      << format_optional(record.eval.f1.per_class_f1) << ','
      << format_optional(record.eval.f1.overall_precision) << ','
      << format_optional(record.eval.f1.per_class_precision) << ','
      << format_optional(record.eval.f1.overall_recall) << ','
      << format_optional(record.eval.f1.per_class_recall) << ','
      << format_real(record.thresholds.mean());
  return out.str();
}

inline void write_metrics_csv(const std::filesystem::path& path, const TrainRun& run) {
  std::ostringstream out;
  out << metrics_csv_header() << '\n';
  for (const auto& record : run.records) out << metrics_csv_row(record) << '\n';
  write_text_file(path, out.str());
}

// ---------------------------------------------------------------------------
// Threshold trajectory: one row per (epoch, category).
// ---------------------------------------------------------------------------

inline void write_threshold_csv(const std::filesystem::path& path, const TrainRun& run) {
  std::ostringstream out;
  out << "epoch,category,tau_neg,tau_pos,tau_star,tau_live\n";
  for (const auto& record : run.records) {
    for (Index c = 0; c < record.thresholds.size(); ++c) {
      const auto idx = static_cast<std::size_t>(c);
      out << record.epoch << ',' << c << ','
          << (idx < record.tau_neg.size() ? format_optional(record.tau_neg[idx]) : std::string{})
          << ','
          << (idx < record.tau_pos.size() ? format_optional(record.tau_pos[idx]) : std::string{})
          << ','
          << (idx < record.tau_star.size() ? format_optional(record.tau_star[idx]) : std::string{})
          << ',' << format_real(record.thresholds[c]) << '\n';
    }
  }
  write_text_file(path, out.str());
}

// ---------------------------------------------------------------------------
// Histogram dump: per-category bin edges and counts, for external plotting.
// ---------------------------------------------------------------------------

inline json histogram_dump_json(const std::vector<ClassDistribution>& dists, int bins) {
  json categories = json::array();
  for (const auto& dist : dists) {
    const HistogramSummary summary = histogram(dist, bins);
    categories.push_back({{"category", dist.category},
                          {"positive_count", dist.positive_scores.size()},
                          {"negative_count", dist.negative_scores.size()},
                          {"bin_edges", summary.bin_edges},
                          {"positive_counts", summary.positive_counts},
                          {"negative_counts", summary.negative_counts}});
  }
  return json{{"bins", bins}, {"categories", categories}};
}

inline void write_histogram_dump(const std::filesystem::path& path,
                                 const std::vector<ClassDistribution>& dists, int bins) {
  write_text_file(path, histogram_dump_json(dists, bins).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Checkpoints: model parameters + thresholds + epoch, self-describing.
// ---------------------------------------------------------------------------

inline constexpr const char* kCheckpointMagic = "SATL-CHECKPOINT";
inline constexpr int kCheckpointVersion = 1;

inline json matrix_to_json(const DenseMatrix<Real>& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline DenseMatrix<Real> matrix_from_json(const json& rows) {
  if (!rows.is_array()) throw std::runtime_error("checkpoint: expected array of rows");
  const auto r = static_cast<Index>(rows.size());
  if (r == 0) return DenseMatrix<Real>(0, 0);
  const auto c = static_cast<Index>(rows.front().size());
  DenseMatrix<Real> m(r, c);
  for (Index i = 0; i < r; ++i) {
    for (Index j = 0; j < c; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].get<Real>();
  }
  return m;
}

inline void write_checkpoint(const std::filesystem::path& path, const Classifier& model,
                             const DenseVector<Real>& thresholds, Index epoch) {
  json doc;
  doc["magic"] = kCheckpointMagic;
  doc["version"] = kCheckpointVersion;
  doc["arch"] = model.arch == Architecture::kLinear ? "linear" : "one_hidden";
  doc["hidden_weight"] = matrix_to_json(model.hidden_weight);
  doc["hidden_bias"] = std::vector<Real>(model.hidden_bias.begin(), model.hidden_bias.end());
  doc["output_weight"] = matrix_to_json(model.output_weight);
  doc["output_bias"] = std::vector<Real>(model.output_bias.begin(), model.output_bias.end());
  doc["thresholds"] = std::vector<Real>(thresholds.begin(), thresholds.end());
  doc["epoch"] = epoch;
  write_text_file(path, doc.dump(2) + "\n");
}

struct Checkpoint {
  Classifier model;
  DenseVector<Real> thresholds;
  Index epoch = 0;
};

inline Checkpoint read_checkpoint(const std::filesystem::path& path) {
  const json doc = json::parse(read_text_file(path));
  if (doc.value("magic", "") != kCheckpointMagic) {
    throw std::runtime_error("not a checkpoint file: " + path.string());
  }
  if (doc.value("version", 0) != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version in " + path.string());
  }
  Checkpoint ckpt;
  ckpt.model.arch =
      doc.at("arch").get<std::string>() == "linear" ? Architecture::kLinear : Architecture::kOneHidden;
  ckpt.model.hidden_weight = matrix_from_json(doc.at("hidden_weight"));
  const auto hb = doc.at("hidden_bias").get<std::vector<Real>>();
  ckpt.model.hidden_bias = Eigen::Map<const DenseVector<Real>>(hb.data(), static_cast<Index>(hb.size()));
  ckpt.model.output_weight = matrix_from_json(doc.at("output_weight"));
  const auto ob = doc.at("output_bias").get<std::vector<Real>>();
  ckpt.model.output_bias = Eigen::Map<const DenseVector<Real>>(ob.data(), static_cast<Index>(ob.size()));
  const auto th = doc.at("thresholds").get<std::vector<Real>>();
  ckpt.thresholds = Eigen::Map<const DenseVector<Real>>(th.data(), static_cast<Index>(th.size()));
  ckpt.epoch = doc.at("epoch").get<Index>();
  return ckpt;
}

// ---------------------------------------------------------------------------
// Content hashing for manifests.
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t hash = 0xCBF29CE484222325ull;
  for (unsigned char byte : bytes) {
    hash ^= byte;
    hash *= 0x100000001B3ull;
  }
  return hash;
}

inline std::string file_content_hash(const std::filesystem::path& path) {
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(fnv1a64(read_text_file(path))));
  return buffer;
}

}  // namespace satl::io
