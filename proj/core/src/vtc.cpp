#include "vtckit/vtc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "vtckit/errors.hpp"

namespace vtckit::vtc {

namespace {

double delayed_sum(std::span<const double> xi, std::span<const double> xj, int d) {
  // One sequential pass per (i, j, d); this keeps results independent of any
  // parallel schedule above.
  const std::size_t n = xi.size() - static_cast<std::size_t>(d);
  double acc = 0.0;
  for (std::size_t t = 0; t < n; ++t) acc += xi[t] * xj[t + d];
  return acc;
}

double zero_lag_energy(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc;
}

}  // namespace

std::vector<int> VtcConfig::delays() const {
  if (max_delay < 1 || delay_stride < 1) {
    throw InputError("max_delay and delay_stride must be >= 1");
  }
  std::vector<int> out;
  for (int d = 0; d < max_delay; d += delay_stride) out.push_back(d);
  return out;
}

int VtcConfig::n_delays() const {
  return static_cast<int>(delays().size());
}

double xcorr(const dsp::FrameMatrix& frames, int i, int j, int d) {
  if (i < 0 || i >= frames.channels || j < 0 || j >= frames.channels) {
    throw InputError("xcorr channel out of range");
  }
  if (d < 0 || d >= frames.frames) {
    throw InputError("xcorr delay " + std::to_string(d) +
                     " out of range for " + std::to_string(frames.frames) +
                     " frames");
  }
  const double ei = zero_lag_energy(frames.channel(i));
  const double ej = zero_lag_energy(frames.channel(j));
  if (ei <= 0.0 || ej <= 0.0) throw DegenerateChannelError(i, j);
  return delayed_sum(frames.channel(i), frames.channel(j), d) / std::sqrt(ei * ej);
}

VtcTensor fvtc(const dsp::FrameMatrix& frames, const VtcConfig& cfg) {
  if (frames.channels != cfg.n_channels) {
    throw InputError("fvtc expects " + std::to_string(cfg.n_channels) +
                     " channels, got " + std::to_string(frames.channels));
  }
  if (frames.frames <= cfg.max_delay) {
    throw InputError("segment too short: " + std::to_string(frames.frames) +
                     " frames <= max delay " + std::to_string(cfg.max_delay));
  }

  const int n = cfg.n_channels;
  const auto delays = cfg.delays();

  std::vector<double> energy(n);
  for (int c = 0; c < n; ++c) energy[c] = zero_lag_energy(frames.channel(c));

  VtcTensor tensor;
  tensor.n_channels = n;
  tensor.delays = delays;
  tensor.speaker_id = frames.speaker_id;
  tensor.values.resize(static_cast<std::size_t>(n) * n * delays.size());

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const bool degenerate = energy[i] <= 0.0 || energy[j] <= 0.0;
      if (degenerate && !cfg.degenerate_to_zero) {
        throw DegenerateChannelError(i, j);
      }
      const double inv_norm = degenerate ? 0.0 : 1.0 / std::sqrt(energy[i] * energy[j]);
      auto xi = frames.channel(i);
      auto xj = frames.channel(j);
      for (std::size_t di = 0; di < delays.size(); ++di) {
        tensor.values[tensor.flat_index(i, j, static_cast<int>(di))] =
            degenerate ? 0.0 : delayed_sum(xi, xj, delays[di]) * inv_norm;
      }
    }
  }
  return tensor;
}

std::vector<double> sym_eigenvalues(std::span<const double> matrix, int n) {
  // Cyclic Jacobi. The matrices here are 15x15 channel correlations; a few
  // sweeps reach machine precision.
  std::vector<double> a(matrix.begin(), matrix.end());
  auto at = [&](int r, int c) -> double& { return a[static_cast<std::size_t>(r) * n + c]; };

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) off += at(p, q) * at(p, q);
    }
    if (off < 1e-28 * static_cast<double>(n) * n) break;

    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (apq == 0.0) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
      }
    }
  }

  std::vector<double> eig(n);
  for (int k = 0; k < n; ++k) eig[k] = at(k, k);
  std::sort(eig.begin(), eig.end(), std::greater<>());
  return eig;
}

EvtcMatrix evtc(const VtcTensor& tensor) {
  const int n = tensor.n_channels;
  const int n_delays = static_cast<int>(tensor.delays.size());

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int di = 0; di < n_delays; ++di) {
        if (!std::isfinite(tensor.at(i, j, di))) {
          throw InputError("non-finite tensor entry at (" + std::to_string(i) +
                           ", " + std::to_string(j) + ", d=" +
                           std::to_string(tensor.delays[di]) + ")");
        }
      }
    }
  }

  EvtcMatrix out;
  out.n_channels = n;
  out.delays = tensor.delays;
  out.speaker_id = tensor.speaker_id;
  out.segment_index = tensor.segment_index;
  out.values.resize(static_cast<std::size_t>(n) * n_delays);

  std::vector<double> slice(static_cast<std::size_t>(n) * n);
  for (int di = 0; di < n_delays; ++di) {
    // The delay-d slice is not symmetric; (R + R^T)/2 keeps the spectrum real.
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        slice[static_cast<std::size_t>(i) * n + j] =
            0.5 * (tensor.at(i, j, di) + tensor.at(j, i, di));
      }
    }
    const auto eig = sym_eigenvalues(slice, n);
    for (int k = 0; k < n; ++k) {
      out.values[static_cast<std::size_t>(k) * n_delays + di] = eig[k];
    }
  }
  return out;
}

VtcTensor unflatten_fvtc(std::span<const double> flat, const VtcConfig& cfg) {
  const auto delays = cfg.delays();
  const std::size_t expected =
      static_cast<std::size_t>(cfg.n_channels) * cfg.n_channels * delays.size();
  if (flat.size() != expected) {
    throw InputError("unflatten_fvtc expects " + std::to_string(expected) +
                     " values, got " + std::to_string(flat.size()));
  }
  VtcTensor tensor;
  tensor.n_channels = cfg.n_channels;
  tensor.delays = delays;
  tensor.values.assign(flat.begin(), flat.end());
  return tensor;
}

void export_tensor_csv(const VtcTensor& tensor, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write csv: " + path.string());
  out << "i,j,d,value\n";
  out.precision(17);
  for (int i = 0; i < tensor.n_channels; ++i) {
    for (int j = 0; j < tensor.n_channels; ++j) {
      for (std::size_t di = 0; di < tensor.delays.size(); ++di) {
        out << i << ',' << j << ',' << tensor.delays[di] << ','
            << tensor.at(i, j, static_cast<int>(di)) << "\n";
      }
    }
  }
  if (!out) throw IoError("failed writing csv: " + path.string());
}

}  // namespace vtckit::vtc
