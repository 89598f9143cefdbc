#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "vtckit/dsp.hpp"

namespace vtckit::vtc {

struct VtcConfig {
  int max_delay = 80;      // D; delays run 0 .. D-1
  int delay_stride = 1;    // coarser grids keep every stride-th delay
  int n_channels = 15;     // N
  bool degenerate_to_zero = false;  // map silent-channel correlations to 0

  std::vector<int> delays() const;
  int n_delays() const;
};

/// N x N x D tensor of normalized delayed correlations, flattened with
/// index (i * N + j) * D + d_index.
struct VtcTensor {
  std::vector<double> values;
  int n_channels = 0;
  std::vector<int> delays;
  std::string speaker_id;
  int segment_index = 0;

  std::size_t flat_index(int i, int j, int d_index) const {
    return (static_cast<std::size_t>(i) * n_channels + j) * delays.size() + d_index;
  }
  double at(int i, int j, int d_index) const { return values[flat_index(i, j, d_index)]; }
  std::size_t size() const { return values.size(); }
};

/// N x D matrix: column d holds the descending eigenvalues of the
/// symmetrized delay-d channel correlation matrix.
struct EvtcMatrix {
  std::vector<double> values;  // row-major, N rows (eigenvalue rank) x D cols
  int n_channels = 0;
  std::vector<int> delays;
  std::string speaker_id;
  int segment_index = 0;

  double at(int rank, int d_index) const {
    return values[static_cast<std::size_t>(rank) * delays.size() + d_index];
  }
};

/// Normalized delayed correlation between channels i and j at delay d:
/// the numerator sums x_i[t] x_j[t+d] over the first T-d frames, the
/// denominator is sqrt of the full-length zero-lag autocorrelation sums of
/// both channels. Frames are expected to be CMVN'd. Throws
/// DegenerateChannelError when either channel has zero energy.
double xcorr(const dsp::FrameMatrix& frames, int i, int j, int d);

/// Full tensor over all channel pairs and configured delays. Requires
/// exactly cfg.n_channels channels and more frames than the largest delay.
/// Per-(i,j,d) sums are single sequential passes, so results do not depend
/// on any parallel schedule.
VtcTensor fvtc(const dsp::FrameMatrix& frames, const VtcConfig& cfg);

/// Per-delay eigendecomposition: for each delay the N x N slice is
/// symmetrized to (R + R^T)/2 and its eigenvalues are sorted descending.
EvtcMatrix evtc(const VtcTensor& tensor);

/// Eigenvalues of a dense symmetric n x n matrix (row-major), descending.
/// Cyclic Jacobi rotations; exposed for reuse and testing.
std::vector<double> sym_eigenvalues(std::span<const double> matrix, int n);

/// Rebuilds a tensor from a flat feature row (inverse of the fvtc
/// flattening order).
VtcTensor unflatten_fvtc(std::span<const double> flat, const VtcConfig& cfg);

/// CSV export with columns i,j,d,value.
void export_tensor_csv(const VtcTensor& tensor, const std::filesystem::path& path);

}  // namespace vtckit::vtc
