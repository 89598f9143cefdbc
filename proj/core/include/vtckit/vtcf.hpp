#pragma once

// VTCF binary container: magic "VTCF", u32 version=1, little-endian u32
// dimensions, f32 row-major payload, length-prefixed UTF-8 speaker id.
// The dimension count is fixed by artifact kind: frame matrices and EVTC
// matrices carry two dims, correlation tensors three, feature tables two
// (rows x dim, with names and row metadata in a sidecar JSON).

#include <filesystem>

#include "vtckit/baseline.hpp"
#include "vtckit/dsp.hpp"
#include "vtckit/vtc.hpp"

namespace vtckit::io {

void write_frames_vtcf(const dsp::FrameMatrix& frames,
                       const std::filesystem::path& path);
dsp::FrameMatrix read_frames_vtcf(const std::filesystem::path& path);

void write_tensor_vtcf(const vtc::VtcTensor& tensor,
                       const std::filesystem::path& path);
vtc::VtcTensor read_tensor_vtcf(const std::filesystem::path& path);

void write_evtc_vtcf(const vtc::EvtcMatrix& matrix,
                     const std::filesystem::path& path);
vtc::EvtcMatrix read_evtc_vtcf(const std::filesystem::path& path);

/// Writes <path> plus sidecar <path>.json (names, kind, row metadata).
void write_table_vtcf(const baseline::FeatureTable& table,
                      const std::filesystem::path& path);
baseline::FeatureTable read_table_vtcf(const std::filesystem::path& path);

}  // namespace vtckit::io
