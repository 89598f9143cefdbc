#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vtckit/dataset.hpp"

namespace vtckit::eval {

double rmse(std::span<const double> pred, std::span<const double> truth);

/// Coefficient of determination 1 - SS_res/SS_tot; undefined (error) for a
/// constant truth vector. May be negative.
double r2(std::span<const double> pred, std::span<const double> truth);

/// Lin's concordance correlation coefficient with population moments:
///   2 cov / (var_p + var_t + (mean_p - mean_t)^2).
/// Two identical constant inputs score 1 by convention; otherwise a constant
/// input scores 0.
double ccc(std::span<const double> pred, std::span<const double> truth);

struct MetricReport {
  double rmse = 0.0;
  double r2 = 0.0;
  double ccc = 0.0;
  std::map<dataset::Severity, double> ccc_by_severity;  // groups with >= 2 speakers
  int n_speakers = 0;
};

struct SeverityCcc {
  std::map<dataset::Severity, double> value;
  std::vector<std::string> warnings;  // groups omitted for having < 2 speakers
};

/// CCC restricted to each severity group among the scored speakers.
SeverityCcc ccc_by_severity(
    const std::vector<std::pair<std::string, double>>& pred_by_speaker,
    const dataset::DatasetManifest& manifest);

/// One-way ANOVA over >= 2 groups of >= 2 samples; returns (F, p) with p
/// from the F distribution via the regularized incomplete beta function.
std::pair<double, double> anova_oneway(const std::vector<std::vector<double>>& groups);

struct PairwiseComparison {
  std::string group_a;
  std::string group_b;
  double mean_diff = 0.0;
  double q_stat = 0.0;
  double p_adj = 0.0;
  bool significant = false;  // p_adj < 0.05
};

struct SignificanceReport {
  double anova_f = 0.0;
  double anova_p = 1.0;
  std::vector<PairwiseComparison> pairwise;
};

/// Tukey HSD over all group pairs (Tukey-Kramer standard error for unequal
/// sizes); adjusted p-values from the studentized range distribution.
SignificanceReport tukey_hsd(const std::vector<std::vector<double>>& groups,
                             const std::vector<std::string>& labels);

/// CDF of the studentized range with k groups and df error degrees of
/// freedom, evaluated by two-level Gauss-Legendre quadrature: the outer
/// integral runs over the chi scale variable, the inner over the normal
/// range probability. df = infinity collapses to the inner integral.
double studentized_range_cdf(double q, int k, double df, int outer_nodes = 64,
                             int inner_nodes = 64);

/// Regularized incomplete beta I_x(a, b) via Lentz continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

double normal_cdf(double z);

nlohmann::json to_json(const MetricReport& report);
nlohmann::json to_json(const SignificanceReport& report);

}  // namespace vtckit::eval
