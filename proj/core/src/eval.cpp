#include "vtckit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "vtckit/errors.hpp"

namespace vtckit::eval {

namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;  // population
};

Moments moments(std::span<const double> v) {
  Moments m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  for (double x : v) m.var += (x - m.mean) * (x - m.mean);
  m.var /= static_cast<double>(v.size());
  return m;
}

/// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on P_n.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.resize(n);
  weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
}

/// P(range of k standard normals < u) = k Int phi(z) (Phi(z) - Phi(z-u))^{k-1} dz.
double normal_range_cdf(double u, int k, const std::vector<double>& nodes,
                        const std::vector<double>& weights) {
  if (u <= 0.0) return 0.0;
  const double lo = -9.0, hi = 9.0;
  const double mid = 0.5 * (hi + lo), halfw = 0.5 * (hi - lo);
  double acc = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double z = mid + halfw * nodes[i];
    const double phi = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    const double span = normal_cdf(z) - normal_cdf(z - u);
    acc += weights[i] * phi * std::pow(span, k - 1);
  }
  return std::min(1.0, k * halfw * acc);
}

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double rmse(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size() || pred.empty()) {
    throw InputError("rmse: length mismatch or empty input");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(pred.size()));
}

double r2(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size() || pred.size() < 2) {
    throw InputError("r2: length mismatch or fewer than 2 samples");
  }
  const Moments mt = moments(truth);
  if (mt.var <= 0.0) throw InputError("r2 undefined for constant truth");
  double ss_res = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = truth[i] - pred[i];
    ss_res += d * d;
  }
  return 1.0 - ss_res / (mt.var * static_cast<double>(truth.size()));
}

double ccc(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size() || pred.size() < 2) {
    throw InputError("ccc: length mismatch or fewer than 2 samples");
  }
  const Moments mp = moments(pred);
  const Moments mt = moments(truth);
  double cov = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    cov += (pred[i] - mp.mean) * (truth[i] - mt.mean);
  }
  cov /= static_cast<double>(pred.size());
  const double mean_gap = mp.mean - mt.mean;
  const double denom = mp.var + mt.var + mean_gap * mean_gap;
  if (denom <= 0.0) return 1.0;  // both constant and equal
  return 2.0 * cov / denom;
}

SeverityCcc ccc_by_severity(
    const std::vector<std::pair<std::string, double>>& pred_by_speaker,
    const dataset::DatasetManifest& manifest) {
  std::map<dataset::Severity, std::vector<std::pair<double, double>>> groups;
  for (const auto& [speaker_id, pred] : pred_by_speaker) {
    const auto* record = manifest.find(speaker_id);
    if (record == nullptr) {
      throw InputError("speaker '" + speaker_id + "' not present in manifest");
    }
    groups[record->severity].emplace_back(pred, record->tms);
  }

  SeverityCcc out;
  for (const auto& [severity, pairs] : groups) {
    if (pairs.size() < 2) {
      out.warnings.push_back("severity group '" + dataset::to_string(severity) +
                             "' has " + std::to_string(pairs.size()) +
                             " test speaker(s); CCC omitted");
      continue;
    }
    std::vector<double> preds, truths;
    for (const auto& [p, t] : pairs) {
      preds.push_back(p);
      truths.push_back(t);
    }
    out.value[severity] = ccc(preds, truths);
  }
  return out;
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;

  // Continued fraction (Lentz); the symmetry transform keeps it convergent.
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const bool swap = x >= (a + 1.0) / (a + b + 2.0);
  const double aa = swap ? b : a;
  const double bb = swap ? a : b;
  const double xx = swap ? 1.0 - x : x;

  const double tiny = 1e-300;
  double c = 1.0;
  double d = 1.0 - (aa + bb) * xx / (aa + 1.0);
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double result = d;
  for (int m = 1; m <= 300; ++m) {
    const double m2 = 2.0 * m;
    double num = m * (bb - m) * xx / ((aa + m2 - 1.0) * (aa + m2));
    d = 1.0 + num * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    result *= d * c;
    num = -(aa + m) * (aa + bb + m) * xx / ((aa + m2) * (aa + m2 + 1.0));
    d = 1.0 + num * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    result *= delta;
    if (std::abs(delta - 1.0) < 1e-14) break;
  }
  const double front = std::exp(ln_front - std::log(swap ? bb : aa));
  const double value = swap ? 1.0 - front * result : front * result;
  return std::clamp(value, 0.0, 1.0);
}

std::pair<double, double> anova_oneway(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw InputError("anova needs at least 2 groups");
  std::size_t n = 0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw InputError("anova groups need at least 2 samples");
    n += g.size();
  }
  const std::size_t k = groups.size();

  double grand = 0.0;
  for (const auto& g : groups) {
    for (double v : g) grand += v;
  }
  grand /= static_cast<double>(n);

  double ssb = 0.0, ssw = 0.0;
  for (const auto& g : groups) {
    double mean = 0.0;
    for (double v : g) mean += v;
    mean /= static_cast<double>(g.size());
    ssb += static_cast<double>(g.size()) * (mean - grand) * (mean - grand);
    for (double v : g) ssw += (v - mean) * (v - mean);
  }

  const double df1 = static_cast<double>(k - 1);
  const double df2 = static_cast<double>(n - k);
  if (df2 <= 0.0) throw InputError("anova: no within-group degrees of freedom");
  const double msb = ssb / df1;
  const double msw = ssw / df2;
  if (msw <= 0.0) {
    return {ssb > 0.0 ? std::numeric_limits<double>::infinity() : 0.0,
            ssb > 0.0 ? 0.0 : 1.0};
  }
  const double f = msb / msw;
  const double p = regularized_incomplete_beta(df2 / 2.0, df1 / 2.0,
                                               df2 / (df2 + df1 * f));
  return {f, p};
}

double studentized_range_cdf(double q, int k, double df, int outer_nodes,
                             int inner_nodes) {
  if (k < 2) throw InputError("studentized range needs k >= 2");
  if (q <= 0.0) return 0.0;

  std::vector<double> in_nodes, in_weights;
  gauss_legendre(inner_nodes, in_nodes, in_weights);

  if (!std::isfinite(df) || df > 1e7) {
    return normal_range_cdf(q, k, in_nodes, in_weights);
  }
  if (df <= 0.0) throw InputError("studentized range needs df > 0");

  std::vector<double> out_nodes, out_weights;
  gauss_legendre(outer_nodes, out_nodes, out_weights);

  // s = sqrt(chi^2_df / df): density exp(C + (df-1) ln s - df s^2 / 2),
  // concentrated near 1 with spread ~ 1/sqrt(2 df).
  const double ln_const = std::log(2.0) + 0.5 * df * std::log(df / 2.0) -
                          std::lgamma(df / 2.0);
  const double spread = 1.0 / std::sqrt(2.0 * df);
  const double lo = std::max(0.0, 1.0 - 10.0 * spread);
  const double hi = 1.0 + 10.0 * spread;
  const double mid = 0.5 * (hi + lo), halfw = 0.5 * (hi - lo);

  double acc = 0.0;
  for (int i = 0; i < outer_nodes; ++i) {
    const double s = mid + halfw * out_nodes[i];
    if (s <= 0.0) continue;
    const double density = std::exp(ln_const + (df - 1.0) * std::log(s) -
                                    0.5 * df * s * s);
    acc += out_weights[i] * density *
           normal_range_cdf(q * s, k, in_nodes, in_weights);
  }
  return std::clamp(halfw * acc, 0.0, 1.0);
}

SignificanceReport tukey_hsd(const std::vector<std::vector<double>>& groups,
                             const std::vector<std::string>& labels) {
  if (labels.size() != groups.size()) {
    throw InputError("tukey_hsd: one label per group required");
  }
  const auto [f, p] = anova_oneway(groups);

  std::size_t n = 0;
  for (const auto& g : groups) n += g.size();
  const std::size_t k = groups.size();
  const double df = static_cast<double>(n - k);

  double ssw = 0.0;
  std::vector<double> means(k);
  for (std::size_t g = 0; g < k; ++g) {
    double mean = 0.0;
    for (double v : groups[g]) mean += v;
    mean /= static_cast<double>(groups[g].size());
    means[g] = mean;
    for (double v : groups[g]) ssw += (v - mean) * (v - mean);
  }
  const double msw = ssw / df;
  if (msw <= 0.0) throw InputError("tukey_hsd: zero within-group variance");

  SignificanceReport report;
  report.anova_f = f;
  report.anova_p = p;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      PairwiseComparison cmp;
      cmp.group_a = labels[a];
      cmp.group_b = labels[b];
      cmp.mean_diff = means[a] - means[b];
      const double se = std::sqrt(
          0.5 * msw * (1.0 / static_cast<double>(groups[a].size()) +
                       1.0 / static_cast<double>(groups[b].size())));
      cmp.q_stat = std::abs(cmp.mean_diff) / se;
      cmp.p_adj = 1.0 - studentized_range_cdf(cmp.q_stat, static_cast<int>(k), df);
      cmp.significant = cmp.p_adj < 0.05;
      report.pairwise.push_back(std::move(cmp));
    }
  }
  return report;
}

nlohmann::json to_json(const MetricReport& report) {
  nlohmann::json by_severity = nlohmann::json::object();
  for (const auto& [severity, value] : report.ccc_by_severity) {
    by_severity[dataset::to_string(severity)] = value;
  }
  return {{"rmse", report.rmse},
          {"r2", report.r2},
          {"ccc", report.ccc},
          {"ccc_by_severity", by_severity},
          {"n_speakers", report.n_speakers}};
}

nlohmann::json to_json(const SignificanceReport& report) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& cmp : report.pairwise) {
    pairs.push_back({{"group_a", cmp.group_a},
                     {"group_b", cmp.group_b},
                     {"mean_diff", cmp.mean_diff},
                     {"q_stat", cmp.q_stat},
                     {"p_adj", cmp.p_adj},
                     {"significant", cmp.significant}});
  }
  return {{"anova_f", report.anova_f}, {"anova_p", report.anova_p},
          {"pairwise", pairs}};
}

}  // namespace vtckit::eval
