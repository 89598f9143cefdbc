#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vtckit/baseline.hpp"

namespace vtckit::model {

/// Per-feature mean/std computed on training rows only. Constant features
/// are flagged and transform to 0.
struct StandardizerState {
  std::vector<double> mean;
  std::vector<double> stddev;  // population; 1.0 where constant
  std::vector<bool> constant;
};

StandardizerState fit_standardizer(const baseline::FeatureTable& table);
baseline::FeatureTable apply_standardizer(const StandardizerState& state,
                                          const baseline::FeatureTable& table);

/// Univariate regression F-statistic: F = r^2 / (1 - r^2) * (n - 2) with r
/// the Pearson correlation, r^2 clamped to 1 - 1e-12. Constant feature or
/// target scores 0. Requires n >= 3.
double f_value(std::span<const double> feature, std::span<const double> target);

std::vector<double> f_values(const baseline::FeatureTable& table,
                             std::span<const double> target);

struct SelectorState {
  std::vector<double> scores;
  std::vector<int> selected;  // k indices of largest scores, ties to lower index
};

SelectorState select_top_k(const baseline::FeatureTable& table,
                           std::span<const double> target, int k);

struct ElasticNetParams {
  double alpha = 1.0;      // overall penalty weight
  double l1_ratio = 0.5;   // rho in [0, 1]
  double tol = 1e-4;       // max coordinate change per sweep
  int max_iter = 1000;     // sweep cap
};

/// Fitted elastic net for objective
///   (1/(2n)) ||y - Xw - b||^2 + alpha*rho*||w||_1 + (alpha*(1-rho)/2)*||w||^2
/// with the intercept b unpenalized.
struct ElasticNetModel {
  std::vector<double> weights;
  double intercept = 0.0;
  ElasticNetParams params;
  bool converged = true;
  int n_sweeps = 0;
  std::vector<double> objective_trace;  // objective after each sweep
};

/// Cyclic coordinate descent with the exact per-coordinate soft-threshold
/// update; b is refreshed to mean(y - Xw) every sweep. X is n x p row-major.
ElasticNetModel fit_elastic_net(std::span<const double> x, std::size_t n,
                                std::size_t p, std::span<const double> y,
                                const ElasticNetParams& params = {});

std::vector<double> predict(const ElasticNetModel& model,
                            std::span<const double> x, std::size_t n,
                            std::size_t p);

double elastic_net_objective(std::span<const double> x, std::size_t n,
                             std::size_t p, std::span<const double> y,
                             std::span<const double> weights, double intercept,
                             const ElasticNetParams& params);

struct KktReport {
  double max_violation_active = 0.0;    // over nonzero coordinates
  double max_violation_inactive = 0.0;  // excess of |grad| over alpha*rho
};

/// Stationarity residuals of the fitted model on its training data.
KktReport kkt_residual(const ElasticNetModel& model, std::span<const double> x,
                       std::size_t n, std::size_t p, std::span<const double> y);

/// Full trained-pipeline state for one run, serializable to JSON.
struct FittedPipeline {
  StandardizerState standardizer;
  std::vector<int> selected;
  ElasticNetModel net;
};

nlohmann::json to_json(const FittedPipeline& pipeline);
FittedPipeline pipeline_from_json(const nlohmann::json& j);

}  // namespace vtckit::model
