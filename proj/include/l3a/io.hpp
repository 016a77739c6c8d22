/*
 * Copyright 2026 The L3A Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// On-disk formats for features, labels and manifests.
//
//   Feature file (little-endian):
//     "L3AF" | u32 version = 1 | u32 n_samples | u32 dim | n*dim f32, row-major
//   Label file: one JSON object per line, {"id": <int>, "labels": [<ids>]}
//   Manifest:   {"num_classes": K, "feature_dim": d,
//                "phases": [{"id": 1, "classes": [...]}, ...]}

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "l3a/data_model.hpp"
#include "l3a/error.hpp"

namespace l3a {

namespace io_detail {

// Little-endian byte buffer, independent of host byte order.
class ByteWriter {
 public:
  void magic(std::string_view m) { bytes_.insert(bytes_.end(), m.begin(), m.end()); }

  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  void write_to(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(FormatErrc::io, "cannot open " + path.string());
    out.write(bytes_.data(), static_cast<std::streamsize>(bytes_.size()));
    if (!out) throw FormatError(FormatErrc::io, "short write to " + path.string());
  }

 private:
  void put(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) {
      bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
  }

  std::vector<char> bytes_;
};

class ByteReader {
 public:
  static ByteReader from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(FormatErrc::io, "cannot open " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    return ByteReader(std::move(bytes), path.string());
  }

  ByteReader(std::vector<char> bytes, std::string name)
      : bytes_(std::move(bytes)), name_(std::move(name)) {}

  std::string magic() {
    need(4, "magic");
    std::string m(bytes_.data() + pos_, 4);
    pos_ += 4;
    return m;
  }

  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(get(4, what)); }
  std::uint64_t u64(const char* what) { return get(8, what); }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }

  std::size_t remaining() const { return bytes_.size() - pos_; }
  const std::string& name() const { return name_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw FormatError(FormatErrc::truncated_payload,
                        name_ + ": file ends inside " + what);
    }
  }

 private:
  std::uint64_t get(int width, const char* what) {
    need(static_cast<std::size_t>(width), what);
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    }
    pos_ += static_cast<std::size_t>(width);
    return v;
  }

  std::vector<char> bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace io_detail

inline constexpr std::string_view kFeatureMagic = "L3AF";
inline constexpr std::string_view kCheckpointMagic = "L3AM";
inline constexpr std::uint32_t kFeatureVersion = 1;

// Values are narrowed to 32-bit floats.
inline void save_features(const Matrix& features, const std::filesystem::path& path) {
  io_detail::ByteWriter w;
  w.magic(kFeatureMagic);
  w.u32(kFeatureVersion);
  w.u32(static_cast<std::uint32_t>(features.rows()));
  w.u32(static_cast<std::uint32_t>(features.cols()));
  for (Index i = 0; i < features.rows(); ++i) {
    for (Index j = 0; j < features.cols(); ++j) {
      w.f32(static_cast<float>(features(i, j)));
    }
  }
  w.write_to(path);
}

// `expected_dim`, when given, is checked against the header (a manifest's
// feature_dim, typically).
inline Matrix load_features(const std::filesystem::path& path,
                            std::optional<std::uint32_t> expected_dim = std::nullopt) {
  auto r = io_detail::ByteReader::from_file(path);
  const std::string magic = r.magic();
  if (magic == kCheckpointMagic) {
    throw FormatError(FormatErrc::wrong_file_kind,
                      path.string() + " is a model checkpoint, not a feature file");
  }
  if (magic != kFeatureMagic) {
    throw FormatError(FormatErrc::bad_magic, path.string());
  }
  const std::uint32_t version = r.u32("header");
  if (version != kFeatureVersion) {
    throw FormatError(FormatErrc::version_mismatch,
                      path.string() + ": version " + std::to_string(version));
  }
  const std::uint32_t rows = r.u32("header");
  const std::uint32_t cols = r.u32("header");
  if (expected_dim && cols != *expected_dim) {
    throw FormatError(FormatErrc::dimension_mismatch,
                      path.string() + ": dim " + std::to_string(cols) +
                          ", expected " + std::to_string(*expected_dim));
  }
  const std::uint64_t payload = std::uint64_t{rows} * cols * 4;
  r.need(payload, "payload");
  if (r.remaining() != payload) {
    throw FormatError(FormatErrc::malformed_record,
                      path.string() + ": trailing bytes after payload");
  }
  Matrix out(rows, cols);
  for (Index i = 0; i < out.rows(); ++i) {
    for (Index j = 0; j < out.cols(); ++j) out(i, j) = r.f32("payload");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Labels

struct LabelRecord {
  SampleId id = 0;
  std::vector<ClassId> labels;

  bool operator==(const LabelRecord&) const = default;
};

inline void save_labels(std::span<const LabelRecord> records,
                        const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError(FormatErrc::io, "cannot open " + path.string());
  for (const auto& rec : records) {
    nlohmann::json j;
    j["id"] = rec.id;
    j["labels"] = rec.labels;
    out << j.dump() << '\n';
  }
  if (!out) throw FormatError(FormatErrc::io, "short write to " + path.string());
}

// Every class id must lie in [0, K) of `manifest`.
inline std::vector<LabelRecord> load_labels(const std::filesystem::path& path,
                                            const PhaseManifest& manifest) {
  std::ifstream in(path);
  if (!in) throw FormatError(FormatErrc::io, "cannot open " + path.string());
  std::vector<LabelRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    LabelRecord rec;
    try {
      const auto j = nlohmann::json::parse(line);
      rec.id = j.at("id").get<SampleId>();
      for (const auto& c : j.at("labels")) {
        const auto v = c.get<std::int64_t>();
        if (v < 0 || v >= manifest.num_classes()) {
          throw FormatError(FormatErrc::dimension_mismatch,
                            where + ": class " + std::to_string(v) +
                                " outside [0, " +
                                std::to_string(manifest.num_classes()) + ")");
        }
        rec.labels.push_back(static_cast<ClassId>(v));
      }
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(FormatErrc::malformed_record, where + ": " + e.what());
    }
    out.push_back(std::move(rec));
  }
  return out;
}

// Multi-hot matrix whose column j is class `columns[j]`. Labels outside
// `columns` are an error unless `allow_other` (used for masked splits).
inline Matrix multi_hot(std::span<const LabelRecord> records,
                        std::span<const ClassId> columns, bool allow_other = false) {
  std::unordered_map<ClassId, Index> column_of;
  for (std::size_t j = 0; j < columns.size(); ++j) {
    column_of[columns[j]] = static_cast<Index>(j);
  }
  Matrix out = Matrix::Zero(static_cast<Index>(records.size()),
                            static_cast<Index>(columns.size()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (ClassId c : records[i].labels) {
      const auto it = column_of.find(c);
      if (it == column_of.end()) {
        if (allow_other) continue;
        throw FormatError(FormatErrc::malformed_record,
                          "sample " + std::to_string(records[i].id) +
                              " carries class " + std::to_string(c) +
                              " outside this split's label space");
      }
      out(static_cast<Index>(i), it->second) = 1.0;
    }
  }
  return out;
}

inline std::vector<LabelRecord> label_records(const Matrix& labels,
                                              std::span<const ClassId> columns,
                                              std::span<const SampleId> ids) {
  if (static_cast<std::size_t>(labels.cols()) != columns.size() ||
      static_cast<std::size_t>(labels.rows()) != ids.size()) {
    throw DimensionMismatch("label_records: shape does not match columns/ids");
  }
  std::vector<LabelRecord> out;
  for (Index i = 0; i < labels.rows(); ++i) {
    LabelRecord rec{ids[static_cast<std::size_t>(i)], {}};
    for (Index j = 0; j < labels.cols(); ++j) {
      if (labels(i, j) != 0.0) rec.labels.push_back(columns[static_cast<std::size_t>(j)]);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Manifest

inline nlohmann::json to_json(const PhaseManifest& m) {
  nlohmann::json phases = nlohmann::json::array();
  for (const auto& p : m.phases()) {
    phases.push_back({{"id", p.id}, {"classes", p.classes}});
  }
  return {{"num_classes", m.num_classes()},
          {"feature_dim", m.feature_dim()},
          {"phases", phases}};
}

inline PhaseManifest manifest_from_json(const nlohmann::json& j) {
  try {
    std::vector<PhaseSpec> phases;
    for (const auto& p : j.at("phases")) {
      phases.push_back({p.at("id").get<std::uint32_t>(),
                        p.at("classes").get<std::vector<ClassId>>()});
    }
    return PhaseManifest(j.at("num_classes").get<std::uint32_t>(),
                         j.at("feature_dim").get<std::uint32_t>(), std::move(phases));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(FormatErrc::malformed_record, std::string("manifest: ") + e.what());
  }
}

inline void save_manifest(const PhaseManifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError(FormatErrc::io, "cannot open " + path.string());
  out << to_json(m).dump(2) << '\n';
}

inline PhaseManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(FormatErrc::io, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(FormatErrc::malformed_record,
                      path.string() + ": " + e.what());
  }
  return manifest_from_json(j);
}

// ---------------------------------------------------------------------------
// Stream directories: manifest.json plus {train,test}_phase<t>.{feat,jsonl}.

inline std::filesystem::path split_path(const std::filesystem::path& dir,
                                        bool test, std::uint32_t t,
                                        std::string_view ext) {
  return dir / ((test ? "test_phase" : "train_phase") + std::to_string(t) +
                std::string(ext));
}

inline void save_split(const std::filesystem::path& dir, const PhaseManifest& manifest,
                       const PhaseDataset& ds) {
  check_dataset(ds);
  save_features(ds.features, split_path(dir, ds.full_labels, ds.phase_id, ".feat"));
  std::vector<ClassId> columns;
  if (ds.full_labels) {
    columns.resize(manifest.num_classes());
    for (ClassId c = 0; c < manifest.num_classes(); ++c) columns[c] = c;
  } else {
    columns = manifest.phase(ds.phase_id).classes;
  }
  const auto records = label_records(ds.labels, columns, ds.sample_ids);
  save_labels(records, split_path(dir, ds.full_labels, ds.phase_id, ".jsonl"));
}

// Training splits reject labels outside C^t.
inline PhaseDataset load_split(const std::filesystem::path& dir,
                               const PhaseManifest& manifest, bool test,
                               std::uint32_t t) {
  PhaseDataset ds;
  ds.phase_id = t;
  ds.full_labels = test;
  ds.features = load_features(split_path(dir, test, t, ".feat"), manifest.feature_dim());
  const auto records = load_labels(split_path(dir, test, t, ".jsonl"), manifest);
  if (records.size() != static_cast<std::size_t>(ds.features.rows())) {
    throw FormatError(FormatErrc::dimension_mismatch,
                      split_path(dir, test, t, ".jsonl").string() + ": " +
                          std::to_string(records.size()) + " label records for " +
                          std::to_string(ds.features.rows()) + " feature rows");
  }
  std::vector<ClassId> columns;
  if (test) {
    columns.resize(manifest.num_classes());
    for (ClassId c = 0; c < manifest.num_classes(); ++c) columns[c] = c;
  } else {
    columns = manifest.phase(t).classes;
  }
  ds.labels = multi_hot(records, columns);
  for (const auto& rec : records) ds.sample_ids.push_back(rec.id);
  return ds;
}

inline void save_stream(const std::filesystem::path& dir, const PhaseManifest& manifest,
                        std::span<const PhaseDataset> train,
                        std::span<const PhaseDataset> test) {
  std::filesystem::create_directories(dir);
  save_manifest(manifest, dir / "manifest.json");
  for (const auto& ds : train) save_split(dir, manifest, ds);
  for (const auto& ds : test) save_split(dir, manifest, ds);
}

inline std::vector<PhaseDataset> load_splits(const std::filesystem::path& dir,
                                             const PhaseManifest& manifest, bool test) {
  std::vector<PhaseDataset> out;
  for (std::uint32_t t = 1; t <= manifest.num_phases(); ++t) {
    out.push_back(load_split(dir, manifest, test, t));
  }
  return out;
}

}  // namespace l3a
