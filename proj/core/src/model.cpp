#include "vtckit/model.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>

#include "vtckit/errors.hpp"

namespace vtckit::model {

namespace {

double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

}  // namespace

StandardizerState fit_standardizer(const baseline::FeatureTable& table) {
  const std::size_t n = table.n_rows();
  const std::size_t p = table.dim();
  if (n == 0) throw InputError("fit_standardizer on empty table");

  StandardizerState state;
  state.mean.assign(p, 0.0);
  state.stddev.assign(p, 1.0);
  state.constant.assign(p, false);

  for (std::size_t f = 0; f < p; ++f) {
    // Exact constancy test; see cmvn for why a variance test is unsafe.
    double lo = table.at(0, f), hi = table.at(0, f);
    for (std::size_t r = 1; r < n; ++r) {
      lo = std::min(lo, table.at(r, f));
      hi = std::max(hi, table.at(r, f));
    }
    if (lo == hi) {
      state.mean[f] = lo;
      state.stddev[f] = 1.0;
      state.constant[f] = true;
      continue;
    }
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += table.at(r, f);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double d = table.at(r, f) - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    state.mean[f] = mean;
    state.stddev[f] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return state;
}

baseline::FeatureTable apply_standardizer(const StandardizerState& state,
                                          const baseline::FeatureTable& table) {
  if (state.mean.size() != table.dim()) {
    throw InputError("standardizer dimensionality mismatch");
  }
  baseline::FeatureTable out = table;
  const std::size_t p = table.dim();
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    for (std::size_t f = 0; f < p; ++f) {
      out.values[r * p + f] =
          state.constant[f] ? 0.0
                            : (table.at(r, f) - state.mean[f]) / state.stddev[f];
    }
  }
  return out;
}

double f_value(std::span<const double> feature, std::span<const double> target) {
  const std::size_t n = feature.size();
  if (n != target.size()) throw InputError("f_value length mismatch");
  if (n < 3) throw InputError("f_value needs at least 3 samples");

  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += feature[i];
    my += target[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);

  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = feature[i] - mx;
    const double dy = target[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;

  double r2 = (sxy * sxy) / (sxx * syy);
  r2 = std::min(r2, 1.0 - 1e-12);
  return r2 / (1.0 - r2) * static_cast<double>(n - 2);
}

std::vector<double> f_values(const baseline::FeatureTable& table,
                             std::span<const double> target) {
  const std::size_t p = table.dim();
  const std::size_t n = table.n_rows();
  if (target.size() != n) throw InputError("f_values target length mismatch");
  if (n < 3) throw InputError("f_values needs at least 3 rows");

  // Column-wise pass mirroring f_value; one traversal of the table.
  double my = 0.0;
  for (double y : target) my += y;
  my /= static_cast<double>(n);
  double syy = 0.0;
  for (double y : target) syy += (y - my) * (y - my);

  std::vector<double> mx(p, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = table.row(r);
    for (std::size_t f = 0; f < p; ++f) mx[f] += row[f];
  }
  for (auto& v : mx) v /= static_cast<double>(n);

  std::vector<double> sxy(p, 0.0), sxx(p, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = table.row(r);
    const double dy = target[r] - my;
    for (std::size_t f = 0; f < p; ++f) {
      const double dx = row[f] - mx[f];
      sxy[f] += dx * dy;
      sxx[f] += dx * dx;
    }
  }

  std::vector<double> scores(p, 0.0);
  if (syy <= 0.0) return scores;
  for (std::size_t f = 0; f < p; ++f) {
    if (sxx[f] <= 0.0) continue;
    double r2 = (sxy[f] * sxy[f]) / (sxx[f] * syy);
    r2 = std::min(r2, 1.0 - 1e-12);
    scores[f] = r2 / (1.0 - r2) * static_cast<double>(n - 2);
  }
  return scores;
}

SelectorState select_top_k(const baseline::FeatureTable& table,
                           std::span<const double> target, int k) {
  if (k < 0 || static_cast<std::size_t>(k) > table.dim()) {
    throw InputError("select_top_k: k=" + std::to_string(k) +
                     " exceeds dimensionality " + std::to_string(table.dim()));
  }
  SelectorState state;
  state.scores = f_values(table, target);

  std::vector<int> order(table.dim());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (state.scores[a] != state.scores[b]) return state.scores[a] > state.scores[b];
    return a < b;  // deterministic tie-break: lower index wins
  });
  state.selected.assign(order.begin(), order.begin() + k);
  std::sort(state.selected.begin(), state.selected.end());
  return state;
}

ElasticNetModel fit_elastic_net(std::span<const double> x, std::size_t n,
                                std::size_t p, std::span<const double> y,
                                const ElasticNetParams& params) {
  if (x.size() != n * p || y.size() != n) {
    throw InputError("fit_elastic_net shape mismatch");
  }
  if (n < 2) throw InputError("fit_elastic_net needs at least 2 rows");
  for (double v : x) {
    if (!std::isfinite(v)) throw InputError("fit_elastic_net: non-finite X");
  }
  for (double v : y) {
    if (!std::isfinite(v)) throw InputError("fit_elastic_net: non-finite y");
  }

  ElasticNetModel model;
  model.params = params;
  model.weights.assign(p, 0.0);

  const double inv_n = 1.0 / static_cast<double>(n);
  const double l1 = params.alpha * params.l1_ratio;
  const double l2 = params.alpha * (1.0 - params.l1_ratio);

  std::vector<double> col_sq(p, 0.0);  // c_j = (1/n) sum x_ij^2
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      const double v = x[i * p + j];
      col_sq[j] += v * v;
    }
  }
  for (auto& c : col_sq) c *= inv_n;

  double intercept = 0.0;
  for (double v : y) intercept += v;
  intercept *= inv_n;

  std::vector<double> residual(n);
  for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - intercept;

  model.converged = false;
  for (int sweep = 0; sweep < params.max_iter; ++sweep) {
    double max_change = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      if (col_sq[j] == 0.0) continue;
      const double old = model.weights[j];
      // Partial-residual least-squares term for coordinate j.
      double z = 0.0;
      for (std::size_t i = 0; i < n; ++i) z += x[i * p + j] * residual[i];
      z = z * inv_n + col_sq[j] * old;

      const double updated = soft_threshold(z, l1) / (col_sq[j] + l2);
      const double change = updated - old;
      if (change != 0.0) {
        for (std::size_t i = 0; i < n; ++i) residual[i] -= x[i * p + j] * change;
        model.weights[j] = updated;
      }
      max_change = std::max(max_change, std::abs(change));
    }

    double shift = 0.0;
    for (double r : residual) shift += r;
    shift *= inv_n;
    if (shift != 0.0) {
      intercept += shift;
      for (auto& r : residual) r -= shift;
    }
    max_change = std::max(max_change, std::abs(shift));

    model.n_sweeps = sweep + 1;
    model.intercept = intercept;
    model.objective_trace.push_back(
        elastic_net_objective(x, n, p, y, model.weights, intercept, params));
    assert(model.objective_trace.size() < 2 ||
           model.objective_trace.back() <=
               model.objective_trace[model.objective_trace.size() - 2] + 1e-12);

    if (max_change < params.tol) {
      model.converged = true;
      break;
    }
  }
  model.intercept = intercept;
  return model;
}

std::vector<double> predict(const ElasticNetModel& model,
                            std::span<const double> x, std::size_t n,
                            std::size_t p) {
  if (p != model.weights.size() || x.size() != n * p) {
    throw InputError("predict dimensionality mismatch");
  }
  std::vector<double> out(n, model.intercept);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < p; ++j) acc += x[i * p + j] * model.weights[j];
    out[i] += acc;
  }
  return out;
}

double elastic_net_objective(std::span<const double> x, std::size_t n,
                             std::size_t p, std::span<const double> y,
                             std::span<const double> weights, double intercept,
                             const ElasticNetParams& params) {
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double pred = intercept;
    for (std::size_t j = 0; j < p; ++j) pred += x[i * p + j] * weights[j];
    const double d = y[i] - pred;
    sse += d * d;
  }
  double l1 = 0.0, l2 = 0.0;
  for (double w : weights) {
    l1 += std::abs(w);
    l2 += w * w;
  }
  return sse / (2.0 * static_cast<double>(n)) + params.alpha * params.l1_ratio * l1 +
         0.5 * params.alpha * (1.0 - params.l1_ratio) * l2;
}

KktReport kkt_residual(const ElasticNetModel& model, std::span<const double> x,
                       std::size_t n, std::size_t p, std::span<const double> y) {
  if (p != model.weights.size()) throw InputError("kkt_residual shape mismatch");
  const double inv_n = 1.0 / static_cast<double>(n);
  const double l1 = model.params.alpha * model.params.l1_ratio;
  const double l2 = model.params.alpha * (1.0 - model.params.l1_ratio);

  std::vector<double> residual(n);
  for (std::size_t i = 0; i < n; ++i) {
    double pred = model.intercept;
    for (std::size_t j = 0; j < p; ++j) pred += x[i * p + j] * model.weights[j];
    residual[i] = y[i] - pred;
  }

  KktReport report;
  for (std::size_t j = 0; j < p; ++j) {
    double grad = 0.0;  // d/dw_j of the smooth part
    for (std::size_t i = 0; i < n; ++i) grad -= x[i * p + j] * residual[i];
    grad = grad * inv_n + l2 * model.weights[j];
    if (model.weights[j] != 0.0) {
      const double v = std::abs(grad + l1 * (model.weights[j] > 0 ? 1.0 : -1.0));
      report.max_violation_active = std::max(report.max_violation_active, v);
    } else {
      const double v = std::max(0.0, std::abs(grad) - l1);
      report.max_violation_inactive = std::max(report.max_violation_inactive, v);
    }
  }
  return report;
}

nlohmann::json to_json(const FittedPipeline& pipeline) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["standardizer"] = {{"mean", pipeline.standardizer.mean},
                       {"std", pipeline.standardizer.stddev},
                       {"constant", pipeline.standardizer.constant}};
  j["selected"] = pipeline.selected;
  j["elastic_net"] = {{"weights", pipeline.net.weights},
                      {"intercept", pipeline.net.intercept},
                      {"alpha", pipeline.net.params.alpha},
                      {"l1_ratio", pipeline.net.params.l1_ratio},
                      {"tol", pipeline.net.params.tol},
                      {"max_iter", pipeline.net.params.max_iter},
                      {"converged", pipeline.net.converged},
                      {"n_sweeps", pipeline.net.n_sweeps}};
  return j;
}

FittedPipeline pipeline_from_json(const nlohmann::json& j) {
  FittedPipeline pipeline;
  const auto& s = j.at("standardizer");
  pipeline.standardizer.mean = s.at("mean").get<std::vector<double>>();
  pipeline.standardizer.stddev = s.at("std").get<std::vector<double>>();
  pipeline.standardizer.constant = s.at("constant").get<std::vector<bool>>();
  pipeline.selected = j.at("selected").get<std::vector<int>>();
  const auto& e = j.at("elastic_net");
  pipeline.net.weights = e.at("weights").get<std::vector<double>>();
  pipeline.net.intercept = e.at("intercept").get<double>();
  pipeline.net.params.alpha = e.at("alpha").get<double>();
  pipeline.net.params.l1_ratio = e.at("l1_ratio").get<double>();
  pipeline.net.params.tol = e.at("tol").get<double>();
  pipeline.net.params.max_iter = e.at("max_iter").get<int>();
  pipeline.net.converged = e.at("converged").get<bool>();
  pipeline.net.n_sweeps = e.at("n_sweeps").get<int>();
  return pipeline;
}

}  // namespace vtckit::model
