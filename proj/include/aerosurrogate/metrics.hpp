#pragma once

#include "aerosurrogate/common.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace aerosurrogate {

struct MetricsReport {
  double mae = 0.0;
  double rmse = 0.0;
  double r2 = 0.0;
  std::vector<double> sample_mae;  // one per column
  std::vector<double> sample_rmse;
};

namespace detail {
inline void check_pair(const Matrix& pred, const Matrix& truth) {
  require(pred.rows() == truth.rows() && pred.cols() == truth.cols(), "metrics: shape mismatch");
  require(pred.size() > 0, "metrics: empty input");
}
}  // namespace detail

inline double mae(const Matrix& pred, const Matrix& truth) {
  detail::check_pair(pred, truth);
  return (pred - truth).cwiseAbs().sum() / static_cast<double>(pred.size());
}

inline double rmse(const Matrix& pred, const Matrix& truth) {
  detail::check_pair(pred, truth);
  return std::sqrt((pred - truth).squaredNorm() / static_cast<double>(pred.size()));
}

/// Coefficient of determination over all entries, SS_tot about the global truth mean.
inline double r2(const Matrix& pred, const Matrix& truth) {
  detail::check_pair(pred, truth);
  const double ss_tot = (truth.array() - truth.mean()).square().sum();
  if (!(ss_tot > 0.0)) throw InvalidArgument("r2: truth has zero variance, R^2 undefined");
  return 1.0 - (pred - truth).squaredNorm() / ss_tot;
}

inline MetricsReport evaluate_metrics(const Matrix& pred, const Matrix& truth) {
  MetricsReport rep{mae(pred, truth), rmse(pred, truth), r2(pred, truth), {}, {}};
  for (Index c = 0; c < pred.cols(); ++c) {
    const Vector err = pred.col(c) - truth.col(c);
    rep.sample_mae.push_back(err.cwiseAbs().mean());
    rep.sample_rmse.push_back(std::sqrt(err.squaredNorm() / static_cast<double>(err.size())));
  }
  return rep;
}

/// ||mu - mu_hat|| / ||mu - mu_bar|| for one latent sample.
inline double nrmse_latent(const Vector& mu, const Vector& mu_hat, const Vector& mu_bar) {
  require(mu.size() == mu_hat.size() && mu.size() == mu_bar.size() && mu.size() > 0,
          "nrmse_latent: length mismatch");
  const double denom = (mu - mu_bar).norm();
  if (!(denom > 0.0)) throw InvalidArgument("nrmse_latent: sample equals the mean, normalization undefined");
  return (mu - mu_hat).norm() / denom;
}

/// Column-wise NRMSE; samples that coincide with the mean are skipped.
inline std::vector<double> nrmse_columns(const Matrix& mu, const Matrix& mu_hat, const Vector& mu_bar) {
  require(mu.rows() == mu_hat.rows() && mu.cols() == mu_hat.cols(), "nrmse_columns: shape mismatch");
  std::vector<double> out;
  for (Index c = 0; c < mu.cols(); ++c) {
    if ((mu.col(c) - mu_bar).norm() > 0.0) out.push_back(nrmse_latent(mu.col(c), mu_hat.col(c), mu_bar));
  }
  return out;
}

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Linear-interpolated quantile, q in [0, 1].
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double pearson(const Vector& a, const Vector& b) {
  require(a.size() == b.size() && a.size() >= 2, "pearson: need two equal-length samples");
  const Vector da = a.array() - a.mean();
  const Vector db = b.array() - b.mean();
  const double denom = da.norm() * db.norm();
  return denom > 0.0 ? da.dot(db) / denom : 0.0;
}

}  // namespace aerosurrogate
