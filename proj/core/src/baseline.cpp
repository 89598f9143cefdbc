#include "vtckit/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "vtckit/errors.hpp"

namespace vtckit::baseline {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(field);
  return fields;
}

double lookup_tms(const dataset::DatasetManifest& manifest,
                  const std::string& speaker_id) {
  const auto* record = manifest.find(speaker_id);
  if (record == nullptr) {
    throw InputError("speaker '" + speaker_id + "' not present in manifest");
  }
  return record->tms;
}

std::string channel_label(int c) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "ch%02d", c);
  return buf;
}

}  // namespace

std::string to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::raw_stats: return "raw_stats";
    case FeatureKind::fvtc: return "fvtc";
    case FeatureKind::evtc: return "evtc";
    case FeatureKind::external: return "external";
  }
  return "raw_stats";
}

std::vector<double> FeatureTable::targets() const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(row.target_tms);
  return out;
}

void FeatureTable::validate() const {
  if (values.size() != rows.size() * dim()) {
    throw ValidationError("feature table dimensions inconsistent: " +
                          std::to_string(values.size()) + " values for " +
                          std::to_string(rows.size()) + " x " +
                          std::to_string(dim()));
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t f = 0; f < dim(); ++f) {
      if (!std::isfinite(at(r, f))) {
        throw ValidationError("non-finite feature value at row " +
                              std::to_string(r) + " ('" + rows[r].speaker_id +
                              "'), column '" + feature_names[f] + "'");
      }
    }
  }
}

std::vector<std::string> pool_stat_names(int channels) {
  static const char* kStats[] = {"mean", "std", "min", "max", "median"};
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(channels) * 5);
  for (int c = 0; c < channels; ++c) {
    for (const char* stat : kStats) {
      names.push_back(channel_label(c) + "_" + stat);
    }
  }
  return names;
}

std::vector<double> pool_stats(const dsp::FrameMatrix& frames) {
  if (frames.frames < 1) throw InputError("pool_stats needs at least one frame");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(frames.channels) * 5);
  std::vector<double> sorted(frames.frames);
  for (int c = 0; c < frames.channels; ++c) {
    const auto channel = frames.channel(c);
    double mean = 0.0;
    for (double v : channel) mean += v;
    mean /= frames.frames;
    double var = 0.0;
    for (double v : channel) var += (v - mean) * (v - mean);
    var /= frames.frames;

    std::copy(channel.begin(), channel.end(), sorted.begin());
    std::sort(sorted.begin(), sorted.end());
    const int n = frames.frames;
    const double median =
        n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

    out.push_back(mean);
    out.push_back(std::sqrt(var));
    out.push_back(sorted.front());
    out.push_back(sorted.back());
    out.push_back(median);
  }
  return out;
}

FeatureTable import_external_features(const std::filesystem::path& csv_path,
                                      const dataset::DatasetManifest& manifest,
                                      std::vector<std::string>* warnings) {
  std::ifstream in(csv_path);
  if (!in) throw IoError("cannot open feature csv: " + csv_path.string());

  std::string line;
  if (!std::getline(in, line)) {
    throw SchemaError("feature csv is empty: " + csv_path.string());
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "speaker_id" ||
      header[1] != "segment_index") {
    throw SchemaError("feature csv header must start with "
                      "'speaker_id,segment_index': " + csv_path.string());
  }

  FeatureTable table;
  table.kind = FeatureKind::external;
  table.feature_names.assign(header.begin() + 2, header.end());

  std::vector<std::string> unknown;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw SchemaError("feature csv line " + std::to_string(line_no) +
                        " has " + std::to_string(fields.size()) +
                        " fields, expected " + std::to_string(header.size()));
    }
    const auto* record = manifest.find(fields[0]);
    if (record == nullptr) {
      unknown.push_back(fields[0]);
      continue;
    }
    FeatureRow row;
    row.speaker_id = fields[0];
    row.segment_index = std::stoi(fields[1]);
    row.target_tms = record->tms;
    for (std::size_t f = 2; f < fields.size(); ++f) {
      double v = 0.0;
      try {
        v = std::stod(fields[f]);
      } catch (const std::exception&) {
        throw ValidationError("feature csv line " + std::to_string(line_no) +
                              ", column '" + header[f] + "': cannot parse '" +
                              fields[f] + "'");
      }
      if (!std::isfinite(v)) {
        throw ValidationError("feature csv line " + std::to_string(line_no) +
                              ", column '" + header[f] + "': non-finite value");
      }
      table.values.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }

  if (!unknown.empty()) {
    std::string ids;
    for (const auto& id : unknown) ids += (ids.empty() ? "" : ", ") + id;
    throw InputError("feature csv speakers absent from manifest: " + ids);
  }
  if (table.rows.empty() && warnings != nullptr) {
    warnings->push_back("feature csv has a header but no rows: " +
                        csv_path.string());
  }
  table.validate();
  return table;
}

FeatureTable flatten_fvtc(std::span<const vtc::VtcTensor> tensors,
                          const dataset::DatasetManifest& manifest) {
  FeatureTable table;
  table.kind = FeatureKind::fvtc;
  if (tensors.empty()) return table;

  const auto& first = tensors.front();
  const int n = first.n_channels;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int d : first.delays) {
        table.feature_names.push_back("r_i" + std::to_string(i) + "_j" +
                                      std::to_string(j) + "_d" + std::to_string(d));
      }
    }
  }

  for (const auto& tensor : tensors) {
    if (tensor.n_channels != n || tensor.delays != first.delays) {
      throw InputError("inconsistent tensor shapes in flatten_fvtc");
    }
    FeatureRow row;
    row.speaker_id = tensor.speaker_id;
    row.segment_index = tensor.segment_index;
    row.target_tms = lookup_tms(manifest, tensor.speaker_id);
    table.rows.push_back(std::move(row));
    table.values.insert(table.values.end(), tensor.values.begin(),
                        tensor.values.end());
  }
  table.validate();
  return table;
}

FeatureTable flatten_evtc(std::span<const vtc::EvtcMatrix> matrices,
                          const dataset::DatasetManifest& manifest) {
  FeatureTable table;
  table.kind = FeatureKind::evtc;
  if (matrices.empty()) return table;

  const auto& first = matrices.front();
  for (int k = 0; k < first.n_channels; ++k) {
    for (int d : first.delays) {
      table.feature_names.push_back("eig" + std::to_string(k) + "_d" +
                                    std::to_string(d));
    }
  }

  for (const auto& matrix : matrices) {
    if (matrix.n_channels != first.n_channels || matrix.delays != first.delays) {
      throw InputError("inconsistent matrix shapes in flatten_evtc");
    }
    FeatureRow row;
    row.speaker_id = matrix.speaker_id;
    row.segment_index = matrix.segment_index;
    row.target_tms = lookup_tms(manifest, matrix.speaker_id);
    table.rows.push_back(std::move(row));
    table.values.insert(table.values.end(), matrix.values.begin(),
                        matrix.values.end());
  }
  table.validate();
  return table;
}

FeatureTable flatten_vtc(const std::vector<VtcFeature>& features,
                         const dataset::DatasetManifest& manifest) {
  if (features.empty()) return FeatureTable{};
  const bool first_is_tensor = std::holds_alternative<vtc::VtcTensor>(features.front());
  std::vector<vtc::VtcTensor> tensors;
  std::vector<vtc::EvtcMatrix> matrices;
  for (const auto& feature : features) {
    if (std::holds_alternative<vtc::VtcTensor>(feature) != first_is_tensor) {
      throw InputError("flatten_vtc input mixes FVTC tensors and EVTC matrices");
    }
    if (first_is_tensor) {
      tensors.push_back(std::get<vtc::VtcTensor>(feature));
    } else {
      matrices.push_back(std::get<vtc::EvtcMatrix>(feature));
    }
  }
  return first_is_tensor ? flatten_fvtc(tensors, manifest)
                         : flatten_evtc(matrices, manifest);
}

void export_table_csv(const FeatureTable& table,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write csv: " + path.string());
  out << "speaker_id,segment_index,target_tms";
  for (const auto& name : table.feature_names) out << ',' << name;
  out << "\n";
  out.precision(17);
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    out << table.rows[r].speaker_id << ',' << table.rows[r].segment_index << ','
        << table.rows[r].target_tms;
    for (std::size_t f = 0; f < table.dim(); ++f) out << ',' << table.at(r, f);
    out << "\n";
  }
  if (!out) throw IoError("failed writing csv: " + path.string());
}

}  // namespace vtckit::baseline
