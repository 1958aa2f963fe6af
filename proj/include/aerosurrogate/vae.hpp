#pragma once

// beta-VAE on top of the MLP primitives: the encoder emits [mu; logvar]
// (width 2d), the decoder maps a latent vector back to input space.

#include "aerosurrogate/common.hpp"
#include "aerosurrogate/mlp.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace aerosurrogate {

struct VaeModel {
  Mlp encoder;
  Mlp decoder;
  Index latent_dim = 0;
  double beta = 0.0;

  Index input_dim() const { return encoder.input_dim(); }
  std::size_t parameter_count() const {
    return encoder.parameter_count() + decoder.parameter_count();
  }

  void validate() const {
    require(latent_dim >= 1, "VAE latent dimension must be positive");
    require(std::isfinite(beta) && beta >= 0.0, "VAE beta must be finite and nonnegative");
    require(encoder.output_dim() == 2 * latent_dim, "encoder head width must be 2d");
    require(decoder.input_dim() == latent_dim, "decoder input width must be d");
    require(decoder.output_dim() == encoder.input_dim(),
            "decoder output width must equal encoder input width");
  }

  bool operator==(const VaeModel&) const = default;
};

/// Encoder layout input -> hidden -> 2d and the mirrored decoder d -> reversed hidden -> input.
inline std::pair<MlpArchitecture, MlpArchitecture> mirrored_architectures(
    Index input_dim, const std::vector<Index>& encoder_hidden, Index latent_dim) {
  MlpArchitecture enc{input_dim, encoder_hidden, 2 * latent_dim};
  MlpArchitecture dec{latent_dim, {encoder_hidden.rbegin(), encoder_hidden.rend()}, input_dim};
  return {enc, dec};
}

inline VaeModel init_vae(const MlpArchitecture& encoder_arch, const MlpArchitecture& decoder_arch,
                         Index latent_dim, double beta, std::uint64_t seed) {
  require(latent_dim >= 1, "init_vae: latent dimension must be positive");
  require(encoder_arch.output_dim == 2 * latent_dim, "init_vae: encoder output must be 2d");
  require(decoder_arch.input_dim == latent_dim, "init_vae: decoder input must be d");
  require(decoder_arch.output_dim == encoder_arch.input_dim,
          "init_vae: decoder output must match encoder input");
  require(std::isfinite(beta) && beta >= 0.0, "init_vae: beta must be nonnegative");

  Rng rng(seed);
  VaeModel model{Mlp(encoder_arch, rng), Mlp(decoder_arch, rng), latent_dim, beta};
  // logvar head starts at zero so every initial sigma is 1
  auto& head = model.encoder.layers().back();
  head.weight.bottomRows(latent_dim).setZero();
  head.bias.tail(latent_dim).setZero();
  return model;
}

struct Encoding {
  Matrix mu;      // d x k
  Matrix logvar;  // d x k
};

inline Encoding encode(const VaeModel& model, const Matrix& x) {
  require(x.rows() == model.input_dim(), "encode: input dimension mismatch");
  require(x.allFinite(), "encode: non-finite input");
  const Matrix head = model.encoder.forward(x);
  return {head.topRows(model.latent_dim), head.bottomRows(model.latent_dim)};
}

inline Matrix decode(const VaeModel& model, const Matrix& z) {
  require(z.rows() == model.latent_dim, "decode: latent dimension mismatch");
  return model.decoder.forward(z);
}

inline Matrix reparameterize(const Matrix& mu, const Matrix& logvar, const Matrix& eps) {
  require(mu.rows() == logvar.rows() && mu.cols() == logvar.cols() && eps.rows() == mu.rows() &&
              eps.cols() == mu.cols(),
          "reparameterize: shape mismatch");
  return mu.array() + (0.5 * logvar.array()).exp() * eps.array();
}

inline Matrix reparameterize(const Matrix& mu, const Matrix& logvar, Rng& rng) {
  Matrix eps(mu.rows(), mu.cols());
  for (Index c = 0; c < eps.cols(); ++c) {
    for (Index r = 0; r < eps.rows(); ++r) eps(r, c) = rng.normal();
  }
  return reparameterize(mu, logvar, eps);
}

struct LossTerms {
  double total = 0.0;
  double rec = 0.0;
  double kl = 0.0;
};

/// KL(N(mu, sigma^2) || N(0, 1)) summed over latents, one value per sample.
inline Vector kl_divergence(const Matrix& mu, const Matrix& logvar) {
  return (0.5 * (mu.array().square() + logvar.array().exp() - logvar.array() - 1.0))
      .colwise()
      .sum()
      .transpose();
}

/// Batch means of rec = (1/q)||x - x_rec||^2 and KL; total = rec + beta * KL.
inline LossTerms vae_loss(const Matrix& x, const Matrix& x_rec, const Matrix& mu,
                          const Matrix& logvar, double beta) {
  require(x.rows() == x_rec.rows() && x.cols() == x_rec.cols(), "vae_loss: reconstruction shape mismatch");
  require(mu.rows() == logvar.rows() && mu.cols() == logvar.cols() && mu.cols() == x.cols(),
          "vae_loss: latent shape mismatch");
  require(beta >= 0.0, "vae_loss: beta must be nonnegative");
  require(x.allFinite() && x_rec.allFinite() && mu.allFinite() && logvar.allFinite(),
          "vae_loss: non-finite input");
  const double n = static_cast<double>(x.cols());
  LossTerms t;
  t.rec = (x - x_rec).squaredNorm() / (static_cast<double>(x.rows()) * n);
  t.kl = kl_divergence(mu, logvar).sum() / n;
  t.total = t.rec + beta * t.kl;
  return t;
}

struct VaeGradients {
  std::vector<DenseLayer> encoder;
  std::vector<DenseLayer> decoder;
};

/// Loss and parameter gradients for one batch with fixed noise draws `eps`.
inline LossTerms vae_loss_and_gradients(const VaeModel& model, const Matrix& x, const Matrix& eps,
                                        VaeGradients& grads) {
  const Index d = model.latent_dim;
  Mlp::Cache enc_cache, dec_cache;
  const Matrix head = model.encoder.forward(x, enc_cache);
  const Matrix mu = head.topRows(d);
  const Matrix logvar = head.bottomRows(d);
  const Matrix sigma = (0.5 * logvar.array()).exp();
  const Matrix z = mu.array() + sigma.array() * eps.array();
  const Matrix x_rec = model.decoder.forward(z, dec_cache);

  const LossTerms terms = vae_loss(x, x_rec, mu, logvar, model.beta);
  const double n = static_cast<double>(x.cols());
  const double q = static_cast<double>(x.rows());

  grads.encoder = model.encoder.zero_gradients();
  grads.decoder = model.decoder.zero_gradients();
  const Matrix grad_z =
      model.decoder.backward(dec_cache, (2.0 / (q * n)) * (x_rec - x), grads.decoder);

  Matrix grad_head(2 * d, x.cols());
  grad_head.topRows(d) = grad_z + (model.beta / n) * mu;
  grad_head.bottomRows(d) =
      (grad_z.array() * eps.array() * 0.5 * sigma.array() +
       (model.beta / n) * 0.5 * (logvar.array().exp() - 1.0))
          .matrix();
  model.encoder.backward(enc_cache, grad_head, grads.encoder);
  return terms;
}

struct TrainHistory {
  std::vector<double> total;
  std::vector<double> rec;
  std::vector<double> kl;
};

struct VaeTrainResult {
  VaeModel model;
  TrainHistory history;
};

/// Adam training on the columns of `data`; one reparameterization draw per
/// sample per step.
inline VaeTrainResult train_vae(VaeModel model, const Matrix& data, const TrainConfig& cfg) {
  cfg.validate();
  model.validate();
  require(data.cols() >= 1, "train_vae: empty data");
  require(data.rows() == model.input_dim(), "train_vae: data dimension mismatch");
  require(data.allFinite(), "train_vae: non-finite data");

  Adam enc_opt(model.encoder, cfg);
  Adam dec_opt(model.decoder, cfg);
  Rng batch_rng(derive_seed(cfg.seed, 0));
  Rng noise_rng(derive_seed(cfg.seed, 1));
  TrainHistory history;
  VaeGradients grads;
  const double n = static_cast<double>(data.cols());

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    LossTerms sums;
    for (const auto& batch : epoch_batches(data.cols(), cfg.batch_size, batch_rng)) {
      const Matrix x = gather_columns(data, batch);
      Matrix eps(model.latent_dim, x.cols());
      for (Index c = 0; c < eps.cols(); ++c) {
        for (Index r = 0; r < eps.rows(); ++r) eps(r, c) = noise_rng.normal();
      }
      LossTerms t;
      try {
        t = vae_loss_and_gradients(model, x, eps, grads);
      } catch (const InvalidArgument&) {
        throw DivergenceError("train_vae", epoch);
      }
      const double b = static_cast<double>(batch.size());
      sums.total += t.total * b;
      sums.rec += t.rec * b;
      sums.kl += t.kl * b;
      enc_opt.step(model.encoder, grads.encoder);
      dec_opt.step(model.decoder, grads.decoder);
    }
    const LossTerms mean{sums.total / n, sums.rec / n, sums.kl / n};
    if (!std::isfinite(mean.total) || !std::isfinite(mean.rec) || !std::isfinite(mean.kl) ||
        !model.encoder.all_finite() || !model.decoder.all_finite()) {
      throw DivergenceError("train_vae", epoch);
    }
    history.total.push_back(mean.total);
    history.rec.push_back(mean.rec);
    history.kl.push_back(mean.kl);
  }
  return {std::move(model), std::move(history)};
}

/// Reconstruction RMSE when each latent mean in turn is set to zero before decoding.
inline std::vector<double> latent_zeroing_errors(const VaeModel& model, const Matrix& data) {
  require(data.cols() >= 1, "latent_zeroing_errors: empty data");
  const Matrix mu = encode(model, data).mu;
  std::vector<double> errors;
  for (Index i = 0; i < model.latent_dim; ++i) {
    Matrix masked = mu;
    masked.row(i).setZero();
    const Matrix rec = decode(model, masked);
    errors.push_back(std::sqrt((rec - data).squaredNorm() / static_cast<double>(data.size())));
  }
  return errors;
}

/// Latent indices ordered by decreasing zero-out error; ties keep the lower index first.
inline std::vector<Index> rank_latents(const VaeModel& model, const Matrix& data) {
  const auto errors = latent_zeroing_errors(model, data);
  std::vector<Index> order(errors.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return errors[static_cast<std::size_t>(a)] > errors[static_cast<std::size_t>(b)];
  });
  return order;
}

}  // namespace aerosurrogate
