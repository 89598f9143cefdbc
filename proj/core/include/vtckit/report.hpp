#pragma once

// Report emission: CSV exports with documented headers, schema-versioned
// JSON, and standalone SVG figures.

#include <filesystem>
#include <vector>

#include "vtckit/harness.hpp"

namespace vtckit::report {

/// Header: segment_s,feature_set,metric,mean,std
void write_sweep_csv(const harness::SweepResult& sweep,
                     const std::filesystem::path& path);

/// Header: i,j,value (tidy triples of the n x n matrix).
void write_heatmap_csv(const harness::HeatmapResult& heatmap,
                       const std::filesystem::path& path);

/// Matrix figure with axis labels "channel i" / "channel j".
void write_heatmap_svg(const harness::HeatmapResult& heatmap,
                       const std::filesystem::path& path);

/// Header: speaker_id,truth,mean_pred,std_pred,n_runs_tested
void write_speaker_predictions_csv(
    const std::vector<harness::SpeakerPrediction>& predictions,
    const std::filesystem::path& path);

/// Truth vs mean prediction scatter with +/- std whiskers.
void write_speaker_predictions_svg(
    const std::vector<harness::SpeakerPrediction>& predictions,
    const std::filesystem::path& path);

/// Pairwise Tukey table. Header:
/// metric,group_a,group_b,mean_diff,q_stat,p_adj,significant
void write_significance_csv(const harness::CompareResult& result,
                            const std::filesystem::path& path);

nlohmann::json compare_to_json(const harness::CompareResult& result);

}  // namespace vtckit::report
