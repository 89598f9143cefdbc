#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "vtckit/dataset.hpp"
#include "vtckit/dsp.hpp"
#include "vtckit/vtc.hpp"

namespace vtckit::baseline {

enum class FeatureKind { raw_stats, fvtc, evtc, external };

std::string to_string(FeatureKind kind);

struct FeatureRow {
  std::string speaker_id;
  int segment_index = 0;
  double target_tms = 0.0;
};

/// Segment-level feature matrix: one row per segment, aligned row metadata.
struct FeatureTable {
  std::vector<FeatureRow> rows;
  std::vector<std::string> feature_names;
  FeatureKind kind = FeatureKind::raw_stats;
  std::vector<double> values;  // rows x dim, row-major

  std::size_t dim() const { return feature_names.size(); }
  std::size_t n_rows() const { return rows.size(); }
  double at(std::size_t r, std::size_t f) const { return values[r * dim() + f]; }
  std::span<const double> row(std::size_t r) const {
    return {values.data() + r * dim(), dim()};
  }
  std::vector<double> targets() const;

  /// Checks dimensional consistency and the no-NaN/Inf invariant.
  void validate() const;
};

/// Broad statistics per channel: mean, population std, min, max, median
/// (even counts average the middle two). 5 x channels values with names
/// like ch03_std.
std::vector<double> pool_stats(const dsp::FrameMatrix& frames);
std::vector<std::string> pool_stat_names(int channels);

/// Joins an externally computed feature CSV (header
/// `speaker_id,segment_index,f_0,...`) against manifest targets. Unknown
/// speakers are a join error; NaN cells are validation errors. A header-only
/// file yields an empty table plus a warning.
FeatureTable import_external_features(const std::filesystem::path& csv_path,
                                      const dataset::DatasetManifest& manifest,
                                      std::vector<std::string>* warnings = nullptr);

FeatureTable flatten_fvtc(std::span<const vtc::VtcTensor> tensors,
                          const dataset::DatasetManifest& manifest);
FeatureTable flatten_evtc(std::span<const vtc::EvtcMatrix> matrices,
                          const dataset::DatasetManifest& manifest);

/// Variant entry point matching the one-op contract; mixed kinds in one
/// list are an input error.
using VtcFeature = std::variant<vtc::VtcTensor, vtc::EvtcMatrix>;
FeatureTable flatten_vtc(const std::vector<VtcFeature>& features,
                         const dataset::DatasetManifest& manifest);

void export_table_csv(const FeatureTable& table, const std::filesystem::path& path);

}  // namespace vtckit::baseline
