#pragma once

// Fully connected networks with ELU hidden layers and a linear output layer,
// hand-written backpropagation and Adam. Samples are stored column-wise.

#include "aerosurrogate/common.hpp"

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

namespace aerosurrogate {

struct MlpArchitecture {
  Index input_dim = 1;
  std::vector<Index> hidden_sizes;
  Index output_dim = 1;

  void validate() const {
    require(input_dim >= 1 && output_dim >= 1, "MLP dimensions must be positive");
    for (Index h : hidden_sizes) require(h >= 1, "MLP hidden sizes must be positive");
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    Index fan_in = input_dim;
    for (Index h : hidden_sizes) {
      n += static_cast<std::size_t>((fan_in + 1) * h);
      fan_in = h;
    }
    return n + static_cast<std::size_t>((fan_in + 1) * output_dim);
  }

  bool operator==(const MlpArchitecture&) const = default;
};

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out

  bool operator==(const DenseLayer& o) const {
    return weight.rows() == o.weight.rows() && weight.cols() == o.weight.cols() &&
           weight == o.weight && bias.size() == o.bias.size() && bias == o.bias;
  }
};

inline Matrix elu(const Matrix& z) {
  return (z.array() > 0.0).select(z.array(), z.array().exp() - 1.0);
}

/// Derivative of ELU expressed through its output a = elu(z).
inline Matrix elu_derivative_from_output(const Matrix& a) {
  return (a.array() > 0.0).select(Matrix::Ones(a.rows(), a.cols()).array(), a.array() + 1.0);
}

class Mlp {
 public:
  /// Activations of every layer boundary; front() is the input.
  using Cache = std::vector<Matrix>;

  Mlp() = default;

  /// Fan-in scaled uniform weights in +-sqrt(6 / fan_in), zero biases.
  Mlp(const MlpArchitecture& arch, Rng& rng) : arch_(arch) {
    arch.validate();
    Index fan_in = arch.input_dim;
    std::vector<Index> widths = arch.hidden_sizes;
    widths.push_back(arch.output_dim);
    for (Index width : widths) {
      DenseLayer layer;
      const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
      layer.weight.resize(width, fan_in);
      for (Index c = 0; c < fan_in; ++c) {
        for (Index r = 0; r < width; ++r) layer.weight(r, c) = rng.uniform(-bound, bound);
      }
      layer.bias = Vector::Zero(width);
      layers_.push_back(std::move(layer));
      fan_in = width;
    }
  }

  Mlp(MlpArchitecture arch, std::vector<DenseLayer> layers)
      : arch_(std::move(arch)), layers_(std::move(layers)) {
    arch_.validate();
    require(layers_.size() == arch_.hidden_sizes.size() + 1, "MLP layer count mismatch");
    Index fan_in = arch_.input_dim;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const Index width =
          l < arch_.hidden_sizes.size() ? arch_.hidden_sizes[l] : arch_.output_dim;
      require(layers_[l].weight.rows() == width && layers_[l].weight.cols() == fan_in &&
                  layers_[l].bias.size() == width,
              "MLP layer shape does not match architecture");
      fan_in = width;
    }
  }

  const MlpArchitecture& architecture() const { return arch_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  Index input_dim() const { return arch_.input_dim; }
  Index output_dim() const { return arch_.output_dim; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
  }

  bool all_finite() const {
    for (const auto& l : layers_) {
      if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    }
    return true;
  }

  Matrix forward(const Matrix& x) const {
    require(x.rows() == arch_.input_dim, "MLP input dimension mismatch");
    Matrix a = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Matrix z = layers_[l].weight * a;
      z.colwise() += layers_[l].bias;
      a = is_hidden(l) ? elu(z) : std::move(z);
    }
    return a;
  }

  Matrix forward(const Matrix& x, Cache& cache) const {
    require(x.rows() == arch_.input_dim, "MLP input dimension mismatch");
    cache.resize(layers_.size() + 1);
    cache[0] = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Matrix z;
      z.noalias() = layers_[l].weight * cache[l];
      z.colwise() += layers_[l].bias;
      cache[l + 1] = is_hidden(l) ? elu(z) : std::move(z);
    }
    return cache.back();
  }

  /// Accumulates parameter gradients into `grads` (shaped like layers()) and
  /// returns the gradient with respect to the network input.
  Matrix backward(const Cache& cache, const Matrix& grad_out,
                  std::vector<DenseLayer>& grads) const {
    require(cache.size() == layers_.size() + 1, "MLP backward: stale cache");
    if (grads.size() != layers_.size()) grads = zero_gradients();
    Matrix delta = grad_out;
    for (std::size_t l = layers_.size(); l-- > 0;) {
      if (is_hidden(l)) delta.array() *= elu_derivative_from_output(cache[l + 1]).array();
      grads[l].weight.noalias() += delta * cache[l].transpose();
      grads[l].bias += delta.rowwise().sum();
      Matrix prev;
      prev.noalias() = layers_[l].weight.transpose() * delta;
      delta = std::move(prev);
    }
    return delta;
  }

  std::vector<DenseLayer> zero_gradients() const {
    std::vector<DenseLayer> g;
    g.reserve(layers_.size());
    for (const auto& l : layers_) {
      g.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
    }
    return g;
  }

  bool operator==(const Mlp& o) const { return arch_ == o.arch_ && layers_ == o.layers_; }

 private:
  bool is_hidden(std::size_t l) const { return l + 1 < layers_.size(); }

  MlpArchitecture arch_;
  std::vector<DenseLayer> layers_;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int epochs = 2000;
  Index batch_size = 0;  // 0 means full batch
  std::uint64_t seed = 0;

  void validate() const {
    require(std::isfinite(learning_rate) && learning_rate >= 0.0,
            "learning rate must be finite and nonnegative");
    require(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0,
            "Adam betas must lie in [0, 1)");
    require(adam_eps > 0.0, "Adam epsilon must be positive");
    require(epochs >= 1, "epochs must be at least 1");
    require(batch_size >= 0, "batch size must be nonnegative");
  }
};

class Adam {
 public:
  Adam(const Mlp& net, const TrainConfig& cfg)
      : cfg_(cfg), m_(net.zero_gradients()), v_(net.zero_gradients()) {}

  void step(Mlp& net, const std::vector<DenseLayer>& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.adam_beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.adam_beta2, static_cast<double>(t_));
    auto& layers = net.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      update(layers[l].weight, m_[l].weight, v_[l].weight, grads[l].weight, c1, c2);
      update(layers[l].bias, m_[l].bias, v_[l].bias, grads[l].bias, c1, c2);
    }
  }

 private:
  template <typename P, typename G>
  void update(P& param, P& m, P& v, const G& g, double c1, double c2) const {
    m = cfg_.adam_beta1 * m + (1.0 - cfg_.adam_beta1) * g;
    v = cfg_.adam_beta2 * v + (1.0 - cfg_.adam_beta2) * g.cwiseAbs2();
    param.array() -= cfg_.learning_rate * (m.array() / c1) /
                     ((v.array() / c2).sqrt() + cfg_.adam_eps);
  }

  TrainConfig cfg_;
  std::vector<DenseLayer> m_;
  std::vector<DenseLayer> v_;
  long t_ = 0;
};

/// Yields the minibatch column lists for one epoch (one list when full batch).
inline std::vector<std::vector<Index>> epoch_batches(Index n, Index batch_size, Rng& rng) {
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  if (batch_size <= 0 || batch_size >= n) return {order};
  rng.shuffle(order.begin(), order.end());
  std::vector<std::vector<Index>> batches;
  for (Index start = 0; start < n; start += batch_size) {
    const Index stop = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + start, order.begin() + stop);
  }
  return batches;
}

inline Matrix gather_columns(const Matrix& m, const std::vector<Index>& cols) {
  if (static_cast<Index>(cols.size()) == m.cols()) {
    bool identity = true;
    for (std::size_t k = 0; k < cols.size() && identity; ++k) {
      identity = cols[k] == static_cast<Index>(k);
    }
    if (identity) return m;
  }
  Matrix out(m.rows(), static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Index>(k)) = m.col(cols[k]);
  return out;
}

/// Mean over samples of (1/q)||target - prediction||^2.
inline double mse_loss(const Matrix& prediction, const Matrix& target) {
  return (prediction - target).squaredNorm() /
         static_cast<double>(prediction.rows() * prediction.cols());
}

/// Trains `net` in place on an MSE objective; returns the per-epoch loss.
inline std::vector<double> train_regressor(Mlp& net, const Matrix& inputs, const Matrix& targets,
                                           const TrainConfig& cfg, const std::string& stage) {
  cfg.validate();
  require(inputs.cols() == targets.cols() && inputs.cols() >= 1,
          stage + ": input/target sample counts differ");
  require(targets.rows() == net.output_dim(), stage + ": target dimension mismatch");
  Adam adam(net, cfg);
  Rng rng(cfg.seed);
  Mlp::Cache cache;
  std::vector<double> history;
  history.reserve(static_cast<std::size_t>(cfg.epochs));
  const double q = static_cast<double>(targets.rows());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double loss_sum = 0.0;
    for (const auto& batch : epoch_batches(inputs.cols(), cfg.batch_size, rng)) {
      const Matrix x = gather_columns(inputs, batch);
      const Matrix y = gather_columns(targets, batch);
      const Matrix pred = net.forward(x, cache);
      const double b = static_cast<double>(batch.size());
      loss_sum += (pred - y).squaredNorm() / q;
      auto grads = net.zero_gradients();
      net.backward(cache, (2.0 / (q * b)) * (pred - y), grads);
      adam.step(net, grads);
    }
    const double loss = loss_sum / static_cast<double>(inputs.cols());
    if (!std::isfinite(loss) || !net.all_finite()) throw DivergenceError(stage, epoch);
    history.push_back(loss);
  }
  return history;
}

}  // namespace aerosurrogate
