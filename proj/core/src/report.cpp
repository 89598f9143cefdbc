#include "vtckit/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "vtckit/errors.hpp"

namespace vtckit::report {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write: " + path.string());
  return out;
}

void close_out(std::ofstream& out, const std::filesystem::path& path) {
  if (!out) throw IoError("failed writing: " + path.string());
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

// Light-to-dark blue ramp, value already normalized to [0, 1].
std::string heat_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(247 - t * (247 - 8)));
  const int g = static_cast<int>(std::lround(251 - t * (251 - 48)));
  const int b = static_cast<int>(std::lround(255 - t * (255 - 107)));
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace

void write_sweep_csv(const harness::SweepResult& sweep,
                     const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "segment_s,feature_set,metric,mean,std\n";
  for (const auto& row : sweep.rows) {
    out << fmt(row.segment_s) << ',' << harness::to_string(row.feature_set)
        << ',' << row.metric << ',' << fmt(row.mean) << ',' << fmt(row.stddev)
        << "\n";
  }
  close_out(out, path);
}

void write_heatmap_csv(const harness::HeatmapResult& heatmap,
                       const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "i,j,value\n";
  const int n = heatmap.n_channels;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      out << i << ',' << j << ','
          << fmt(heatmap.matrix[static_cast<std::size_t>(i) * n + j]) << "\n";
    }
  }
  close_out(out, path);
}

void write_heatmap_svg(const harness::HeatmapResult& heatmap,
                       const std::filesystem::path& path) {
  const int n = heatmap.n_channels;
  const int cell = 28;
  const int margin = 60;
  const int size = margin + n * cell + 20;

  double max_value = 0.0;
  for (double v : heatmap.matrix) max_value = std::max(max_value, v);
  if (max_value <= 0.0) max_value = 1.0;

  auto out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size
      << "\" height=\"" << size << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double v = heatmap.matrix[static_cast<std::size_t>(i) * n + j];
      out << "<rect x=\"" << margin + j * cell << "\" y=\"" << margin + i * cell
          << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\""
          << heat_color(v / max_value) << "\"><title>i=" << i << " j=" << j
          << " value=" << fmt(v) << "</title></rect>\n";
    }
  }
  for (int k = 0; k < n; ++k) {
    out << "<text x=\"" << margin + k * cell + cell / 2 << "\" y=\""
        << margin - 8 << "\" font-size=\"11\" text-anchor=\"middle\">" << k
        << "</text>\n";
    out << "<text x=\"" << margin - 8 << "\" y=\""
        << margin + k * cell + cell / 2 + 4
        << "\" font-size=\"11\" text-anchor=\"end\">" << k << "</text>\n";
  }
  out << "<text x=\"" << margin + n * cell / 2 << "\" y=\"" << margin - 30
      << "\" font-size=\"14\" text-anchor=\"middle\">channel j</text>\n";
  out << "<text x=\"14\" y=\"" << margin + n * cell / 2
      << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << margin + n * cell / 2 << ")\">channel i</text>\n";
  out << "</svg>\n";
  close_out(out, path);
}

void write_speaker_predictions_csv(
    const std::vector<harness::SpeakerPrediction>& predictions,
    const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "speaker_id,truth,mean_pred,std_pred,n_runs_tested\n";
  for (const auto& p : predictions) {
    out << p.speaker_id << ',' << fmt(p.truth) << ',' << fmt(p.mean_pred) << ','
        << fmt(p.std_pred) << ',' << p.n_runs_tested << "\n";
  }
  close_out(out, path);
}

void write_speaker_predictions_svg(
    const std::vector<harness::SpeakerPrediction>& predictions,
    const std::filesystem::path& path) {
  const int width = 520, height = 520, margin = 50;
  double lo = 0.0, hi = 1.0;
  for (const auto& p : predictions) {
    lo = std::min({lo, p.truth, p.mean_pred - p.std_pred});
    hi = std::max({hi, p.truth, p.mean_pred + p.std_pred});
  }
  const double span = hi - lo > 0 ? hi - lo : 1.0;
  auto sx = [&](double v) {
    return margin + (v - lo) / span * (width - 2 * margin);
  };
  auto sy = [&](double v) {
    return height - margin - (v - lo) / span * (height - 2 * margin);
  };

  auto out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << sx(lo) << "\" y1=\"" << sy(lo) << "\" x2=\"" << sx(hi)
      << "\" y2=\"" << sy(hi) << "\" stroke=\"#999\" stroke-dasharray=\"4\"/>\n";
  for (const auto& p : predictions) {
    out << "<line x1=\"" << sx(p.truth) << "\" y1=\"" << sy(p.mean_pred - p.std_pred)
        << "\" x2=\"" << sx(p.truth) << "\" y2=\"" << sy(p.mean_pred + p.std_pred)
        << "\" stroke=\"#bbb\"/>\n";
    out << "<circle cx=\"" << sx(p.truth) << "\" cy=\"" << sy(p.mean_pred)
        << "\" r=\"4\" fill=\"#e2771a\"><title>" << p.speaker_id << " truth="
        << fmt(p.truth) << " pred=" << fmt(p.mean_pred) << "</title></circle>\n";
  }
  out << "<text x=\"" << width / 2 << "\" y=\"" << height - 12
      << "\" font-size=\"14\" text-anchor=\"middle\">true TMS</text>\n";
  out << "<text x=\"16\" y=\"" << height / 2
      << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << height / 2 << ")\">predicted TMS</text>\n";
  out << "</svg>\n";
  close_out(out, path);
}

void write_significance_csv(const harness::CompareResult& result,
                            const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "metric,group_a,group_b,mean_diff,q_stat,p_adj,significant\n";
  for (const auto& [metric, report] : result.significance) {
    for (const auto& cmp : report.pairwise) {
      out << metric << ',' << cmp.group_a << ',' << cmp.group_b << ','
          << fmt(cmp.mean_diff) << ',' << fmt(cmp.q_stat) << ','
          << fmt(cmp.p_adj) << ',' << (cmp.significant ? 1 : 0) << "\n";
    }
  }
  close_out(out, path);
}

nlohmann::json compare_to_json(const harness::CompareResult& result) {
  nlohmann::json experiments = nlohmann::json::array();
  for (const auto& experiment : result.experiments) {
    experiments.push_back(harness::aggregate_to_json(experiment));
  }
  nlohmann::json significance = nlohmann::json::object();
  for (const auto& [metric, report] : result.significance) {
    significance[metric] = eval::to_json(report);
  }
  return {{"schema_version", 1},
          {"experiments", experiments},
          {"significance", significance}};
}

}  // namespace vtckit::report
