#pragma once

// Exact Gaussian-process regression with a product kernel
//   k(p, p') = (sum_j w_j p_j p'_j) * s2 (1 + sqrt(3) rho) exp(-sqrt(3) rho),
//   rho = || (p - p') / l ||_2
// with per-input weights w_j and lengthscales l_j (ARD). Each output column
// of the targets is an independent single-output GP with zero prior mean.

#include "aerosurrogate/common.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace aerosurrogate {

struct KernelParams {
  static constexpr double kNoiseFloor = 1e-8;

  Vector linear_weights;  // per input
  double matern_variance = 1.0;
  Vector lengthscales;  // per input
  double noise_variance = kNoiseFloor;

  Index inputs() const { return linear_weights.size(); }

  static KernelParams unit(Index inputs, double noise = kNoiseFloor) {
    return {Vector::Ones(inputs), 1.0, Vector::Ones(inputs), noise};
  }

  void validate() const {
    require(linear_weights.size() == lengthscales.size() && inputs() >= 1,
            "kernel parameter dimensions disagree");
    require(linear_weights.allFinite() && lengthscales.allFinite() &&
                std::isfinite(matern_variance) && std::isfinite(noise_variance),
            "kernel parameters must be finite");
    require((linear_weights.array() >= 0.0).all(), "linear weights must be nonnegative");
    require(matern_variance > 0.0 && (lengthscales.array() > 0.0).all(),
            "Matern variance and lengthscales must be positive");
    require(noise_variance >= kNoiseFloor, "noise variance below floor");
  }

  // Log-space coordinates used by the optimizer:
  // [log w (D), log s2, log l (D), log(noise - floor)].
  Vector to_log() const {
    const Index D = inputs();
    Vector theta(2 * D + 2);
    theta.head(D) = linear_weights.array().log();
    theta(D) = std::log(matern_variance);
    theta.segment(D + 1, D) = lengthscales.array().log();
    theta(2 * D + 1) = std::log(std::max(noise_variance - kNoiseFloor, 1e-300));
    return theta;
  }

  static KernelParams from_log(const Vector& theta) {
    require(theta.size() >= 4 && theta.size() % 2 == 0, "bad log-parameter vector length");
    const Index D = (theta.size() - 2) / 2;
    return {theta.head(D).array().exp(), std::exp(theta(D)),
            theta.segment(D + 1, D).array().exp(), kNoiseFloor + std::exp(theta(2 * D + 1))};
  }
};

namespace detail {

inline double matern32_shape(double rho) {
  const double s = std::numbers::sqrt3 * rho;
  return (1.0 + s) * std::exp(-s);
}

}  // namespace detail

inline double kernel_eval(const KernelParams& params, const Eigen::Ref<const Vector>& p,
                          const Eigen::Ref<const Vector>& p2) {
  const double linear = (params.linear_weights.array() * p.array() * p2.array()).sum();
  const double rho = ((p - p2).array() / params.lengthscales.array()).matrix().norm();
  return linear * params.matern_variance * detail::matern32_shape(rho);
}

/// Gram matrix between point sets given as rows.
inline Matrix kernel_matrix(const KernelParams& params, const Matrix& a, const Matrix& b) {
  require(a.cols() == params.inputs() && b.cols() == params.inputs(),
          "kernel_matrix: input dimension mismatch");
  Matrix k(a.rows(), b.rows());
  for (Index j = 0; j < b.rows(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      k(i, j) = kernel_eval(params, a.row(i).transpose(), b.row(j).transpose());
    }
  }
  return k;
}

struct Factorization {
  Matrix lower;   // L with L L^T = K + (noise + jitter) I
  double jitter = 0.0;
};

/// Cholesky of K + noise I, escalating diagonal jitter 1e-10 -> 1e-6 on failure.
inline Factorization factorize(const Matrix& gram, double noise) {
  const Index n = gram.rows();
  double jitter = 0.0;
  for (int attempt = 0; attempt < 6; ++attempt) {
    Matrix a = gram;
    a.diagonal().array() += noise + jitter;
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() == Eigen::Success && llt.matrixLLT().allFinite()) {
      return {llt.matrixL(), jitter};
    }
    jitter = attempt == 0 ? 1e-10 : jitter * 10.0;
  }
  throw IndefiniteKernel("kernel matrix of size " + std::to_string(n) +
                         " is not positive definite after jitter 1e-6");
}

inline Vector cholesky_solve(const Matrix& lower, const Vector& rhs) {
  const auto L = lower.triangularView<Eigen::Lower>();
  return L.transpose().solve(L.solve(rhs));
}

inline double log_marginal_likelihood(const KernelParams& params, const Matrix& inputs,
                                      const Vector& y) {
  params.validate();
  require(inputs.rows() == y.size() && y.size() >= 1, "log_marginal_likelihood: size mismatch");
  const Factorization f = factorize(kernel_matrix(params, inputs, inputs), params.noise_variance);
  const Vector weights = cholesky_solve(f.lower, y);
  const double n = static_cast<double>(y.size());
  return -0.5 * y.dot(weights) - f.lower.diagonal().array().log().sum() -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

/// Log marginal likelihood and its gradient with respect to KernelParams::to_log().
inline double log_marginal_likelihood(const Vector& theta, const Matrix& inputs, const Vector& y,
                                      Vector& gradient) {
  const KernelParams params = KernelParams::from_log(theta);
  const Index D = params.inputs();
  const Index n = inputs.rows();
  require(inputs.cols() == D && y.size() == n, "log_marginal_likelihood: size mismatch");

  // per-pair pieces shared by the kernel and its derivatives
  Matrix gram(n, n), shape(n, n), dshape_scaled(n, n);
  std::vector<Matrix> sq_ratio(static_cast<std::size_t>(D), Matrix(n, n));
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i <= j; ++i) {
      double rho2 = 0.0;
      for (Index c = 0; c < D; ++c) {
        const double r = (inputs(i, c) - inputs(j, c)) / params.lengthscales(c);
        sq_ratio[static_cast<std::size_t>(c)](i, j) = sq_ratio[static_cast<std::size_t>(c)](j, i) = r * r;
        rho2 += r * r;
      }
      const double rho = std::sqrt(rho2);
      const double e = std::exp(-std::numbers::sqrt3 * rho);
      shape(i, j) = shape(j, i) = (1.0 + std::numbers::sqrt3 * rho) * e;
      // d shape / d log l_c = 3 r_c^2 exp(-sqrt3 rho)
      dshape_scaled(i, j) = dshape_scaled(j, i) = 3.0 * e;
    }
  }
  Matrix linear = Matrix::Zero(n, n);
  for (Index c = 0; c < D; ++c) {
    linear.noalias() += params.linear_weights(c) * inputs.col(c) * inputs.col(c).transpose();
  }
  gram = params.matern_variance * linear.cwiseProduct(shape);

  const Factorization f = factorize(gram, params.noise_variance);
  const Vector weights = cholesky_solve(f.lower, y);
  const auto L = f.lower.triangularView<Eigen::Lower>();
  Matrix inv = Matrix::Identity(n, n);
  L.solveInPlace(inv);
  L.transpose().solveInPlace(inv);
  const Matrix w = weights * weights.transpose() - inv;

  gradient.resize(theta.size());
  for (Index c = 0; c < D; ++c) {
    const Matrix dk = params.linear_weights(c) * (inputs.col(c) * inputs.col(c).transpose())
                                                      .cwiseProduct(shape) *
                      params.matern_variance;
    gradient(c) = 0.5 * w.cwiseProduct(dk).sum();
  }
  gradient(D) = 0.5 * w.cwiseProduct(gram).sum();
  for (Index c = 0; c < D; ++c) {
    const Matrix dk = params.matern_variance *
                      linear.cwiseProduct(dshape_scaled).cwiseProduct(sq_ratio[static_cast<std::size_t>(c)]);
    gradient(D + 1 + c) = 0.5 * w.cwiseProduct(dk).sum();
  }
  gradient(2 * D + 1) = 0.5 * (params.noise_variance - KernelParams::kNoiseFloor) * w.trace();

  return -0.5 * y.dot(weights) - f.lower.diagonal().array().log().sum() -
         0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

struct GprOptions {
  int restarts = 8;
  int iterations = 200;
  std::uint64_t seed = 0;
  // Restart draws, log-uniform.
  double kernel_draw_min = 1e-2;
  double kernel_draw_max = 1e2;
  double noise_draw_min = 1e-8;
  double noise_draw_max = 1e-1;

  void validate() const {
    require(restarts >= 1, "GPR restarts must be at least 1");
    require(iterations >= 1, "GPR iterations must be at least 1");
  }
};

struct GprModel {
  Vector input_lower;  // normalization: (p - lower) / (upper - lower)
  Vector input_upper;
  Matrix inputs;   // n x D, normalized
  Matrix targets;  // n x d
  std::vector<KernelParams> params;
  std::vector<Matrix> factors;  // per output, lower triangular
  Matrix weights;               // n x d, (K + noise I)^-1 y per output
  std::vector<double> log_ml;

  Index outputs() const { return targets.cols(); }
  Index input_dim() const { return inputs.cols(); }

  Matrix normalize(const Matrix& raw) const {
    require(raw.cols() == input_lower.size(), "GPR: input dimension mismatch");
    return (raw.rowwise() - input_lower.transpose()).array().rowwise() /
           (input_upper - input_lower).transpose().array();
  }
};

namespace detail {

// Box for log-space parameters; keeps the optimizer away from overflow.
constexpr double kLogKernelMin = -16.0;
constexpr double kLogKernelMax = 16.0;
constexpr double kLogNoiseMin = -28.0;
constexpr double kLogNoiseMax = 2.5;

inline Vector project(Vector theta) {
  const Index last = theta.size() - 1;
  for (Index i = 0; i < last; ++i) theta(i) = std::clamp(theta(i), kLogKernelMin, kLogKernelMax);
  theta(last) = std::clamp(theta(last), kLogNoiseMin, kLogNoiseMax);
  return theta;
}

struct Objective {
  const Matrix& inputs;
  const Vector& y;
  int evaluations = 0;

  // Negative log-ML; nullopt when the kernel cannot be factorized.
  std::optional<double> operator()(const Vector& theta, Vector& grad) {
    ++evaluations;
    try {
      const double v = log_marginal_likelihood(theta, inputs, y, grad);
      if (!std::isfinite(v) || !grad.allFinite()) return std::nullopt;
      grad = -grad;
      return -v;
    } catch (const IndefiniteKernel&) {
      return std::nullopt;
    }
  }
};

/// Limited-memory BFGS with Armijo backtracking inside the parameter box.
inline std::optional<std::pair<Vector, double>> minimize(Objective& f, Vector x, int iterations) {
  constexpr int kMemory = 6;
  x = project(std::move(x));
  Vector g;
  auto fx = f(x, g);
  if (!fx) return std::nullopt;
  std::vector<Vector> s_hist, y_hist;
  for (int it = 0; it < iterations; ++it) {
    // two-loop recursion
    Vector dir = -g;
    std::vector<double> alphas(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      alphas[k] = s_hist[k].dot(dir) / y_hist[k].dot(s_hist[k]);
      dir -= alphas[k] * y_hist[k];
    }
    if (!s_hist.empty()) dir *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double b = y_hist[k].dot(dir) / y_hist[k].dot(s_hist[k]);
      dir += (alphas[k] - b) * s_hist[k];
    }
    if (dir.dot(g) >= 0.0) {
      dir = -g;
      s_hist.clear();
      y_hist.clear();
    }
    double step = s_hist.empty() ? std::min(1.0, 1.0 / std::max(g.norm(), 1e-12)) : 1.0;

    bool accepted = false;
    Vector x_new, g_new;
    double f_new = 0.0;
    for (int bt = 0; bt < 40; ++bt, step *= 0.5) {
      x_new = project(x + step * dir);
      const auto v = f(x_new, g_new);
      if (v && *v <= *fx + 1e-4 * g.dot(x_new - x)) {
        f_new = *v;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    const Vector s = x_new - x;
    const Vector yv = g_new - g;
    const double improvement = *fx - f_new;
    x = x_new;
    g = g_new;
    fx = f_new;
    if (s.dot(yv) > 1e-12) {
      s_hist.push_back(s);
      y_hist.push_back(yv);
      if (static_cast<int>(s_hist.size()) > kMemory) {
        s_hist.erase(s_hist.begin());
        y_hist.erase(y_hist.begin());
      }
    }
    if (improvement < 1e-10 * (1.0 + std::abs(*fx)) || s.lpNorm<Eigen::Infinity>() < 1e-10) break;
  }
  return std::make_pair(x, *fx);
}

inline double log_uniform(Rng& rng, double lo, double hi) {
  return rng.uniform(std::log(lo), std::log(hi));
}

}  // namespace detail

/// Fits a GP on already-normalized inputs with fixed hyperparameters.
inline void gpr_condition(GprModel& model) {
  const Index n = model.inputs.rows();
  model.factors.clear();
  model.weights.resize(n, model.outputs());
  for (Index o = 0; o < model.outputs(); ++o) {
    const auto& p = model.params[static_cast<std::size_t>(o)];
    const Factorization f = factorize(kernel_matrix(p, model.inputs, model.inputs), p.noise_variance);
    model.weights.col(o) = cholesky_solve(f.lower, model.targets.col(o));
    model.factors.push_back(f.lower);
  }
}

/// `inputs` is n x D raw; `lower`/`upper` map each input column onto [0, 1].
inline GprModel gpr_fit(const Matrix& inputs, const Matrix& targets, const Vector& lower,
                        const Vector& upper, const GprOptions& opts = {}) {
  opts.validate();
  require(inputs.rows() >= 2, "gpr_fit: need at least 2 training points");
  require(inputs.rows() == targets.rows(), "gpr_fit: input/target row counts differ");
  require(targets.cols() >= 1, "gpr_fit: no outputs");
  require(lower.size() == inputs.cols() && upper.size() == inputs.cols(),
          "gpr_fit: normalization bounds dimension mismatch");
  require((upper.array() > lower.array()).all(), "gpr_fit: degenerate normalization bounds");
  require(inputs.allFinite() && targets.allFinite(), "gpr_fit: non-finite data");

  GprModel model;
  model.input_lower = lower;
  model.input_upper = upper;
  model.inputs = model.normalize(inputs);
  model.targets = targets;
  const Index D = inputs.cols();

  for (Index o = 0; o < targets.cols(); ++o) {
    const Vector y = targets.col(o);
    detail::Objective objective{model.inputs, y};
    Rng rng(derive_seed(opts.seed, static_cast<std::uint64_t>(o)));
    std::optional<std::pair<Vector, double>> best;
    for (int r = 0; r < opts.restarts; ++r) {
      Vector theta(2 * D + 2);
      for (Index i = 0; i < 2 * D + 1; ++i) {
        theta(i) = detail::log_uniform(rng, opts.kernel_draw_min, opts.kernel_draw_max);
      }
      theta(2 * D + 1) = detail::log_uniform(rng, opts.noise_draw_min, opts.noise_draw_max);
      const auto result = detail::minimize(objective, theta, opts.iterations);
      if (result && (!best || result->second < best->second)) best = result;
    }
    if (!best) {
      throw FitError("gpr_fit: all " + std::to_string(opts.restarts) +
                     " restarts failed for output " + std::to_string(o) + " after " +
                     std::to_string(objective.evaluations) + " evaluations");
    }
    model.params.push_back(KernelParams::from_log(best->first));
    model.log_ml.push_back(-best->second);
  }
  gpr_condition(model);
  return model;
}

struct GprPrediction {
  Matrix means;      // m x d
  Matrix variances;  // m x d
};

inline GprPrediction gpr_predict(const GprModel& model, const Matrix& queries) {
  require(queries.cols() == model.input_dim(), "gpr_predict: input dimension mismatch");
  require(!model.factors.empty(), "gpr_predict: model is not fitted");
  const Matrix x = model.normalize(queries);
  GprPrediction out{Matrix(x.rows(), model.outputs()), Matrix(x.rows(), model.outputs())};
  for (Index o = 0; o < model.outputs(); ++o) {
    const auto& p = model.params[static_cast<std::size_t>(o)];
    const Matrix cross = kernel_matrix(p, x, model.inputs);  // m x n
    out.means.col(o) = cross * model.weights.col(o);
    const Matrix v = model.factors[static_cast<std::size_t>(o)]
                         .triangularView<Eigen::Lower>()
                         .solve(cross.transpose());
    for (Index i = 0; i < x.rows(); ++i) {
      double var = kernel_eval(p, x.row(i).transpose(), x.row(i).transpose()) -
                   v.col(i).squaredNorm();
      if (var < 0.0 && var > -1e-10) var = 0.0;
      out.variances(i, o) = var;
    }
  }
  return out;
}

}  // namespace aerosurrogate
