#include "aerosurrogate/vae.hpp"

#include <gtest/gtest.h>

#include <chrono>

using namespace aerosurrogate;

namespace {

Matrix random_matrix(Index rows, Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

void perturb(Mlp& net, Rng& rng) {
  for (auto& l : net.layers()) {
    for (Index i = 0; i < l.weight.size(); ++i) l.weight.data()[i] += rng.uniform(-0.5, 0.5);
    for (Index i = 0; i < l.bias.size(); ++i) l.bias(i) = rng.uniform(-0.5, 0.5);
  }
}

double& parameter(Mlp& net, std::size_t layer, bool weight, Index k) {
  return weight ? net.layers()[layer].weight.data()[k] : net.layers()[layer].bias(k);
}

}  // namespace

TEST(VaeArchitecture, PaperPcaModeParameterCount) {
  const auto [enc, dec] = mirrored_architectures(305, {256, 128, 64, 32, 16}, 2);
  Rng rng(1);
  const VaeModel m{Mlp(enc, rng), Mlp(dec, rng), 2, 1e-3};
  EXPECT_EQ(m.parameter_count(), 244597u);
  EXPECT_EQ(enc.hidden_sizes.size() + dec.hidden_sizes.size(), 10u);
  EXPECT_EQ(dec.hidden_sizes, (std::vector<Index>{16, 32, 64, 128, 256}));
}

TEST(VaeArchitecture, PaperRawModeParameterCount) {
  const auto [enc, dec] = mirrored_architectures(49574, {1024, 512, 256, 128, 64}, 2);
  EXPECT_EQ(enc.parameter_count() + dec.parameter_count(), 102974122u);
}

TEST(VaeArchitecture, InitStartsWithUnitSigma) {
  const auto [enc, dec] = mirrored_architectures(6, {5, 4}, 3);
  const VaeModel m = init_vae(enc, dec, 3, 0.1, 11);
  Rng rng(2);
  const Encoding e = encode(m, random_matrix(6, 4, rng));
  EXPECT_TRUE(e.logvar.isZero(0.0));
  EXPECT_EQ(e.mu.rows(), 3);
}

TEST(VaeArchitecture, InconsistentShapesRejected) {
  const auto [enc, dec] = mirrored_architectures(6, {5}, 2);
  EXPECT_THROW(init_vae(enc, dec, 3, 0.1, 1), InvalidArgument);
  EXPECT_THROW(init_vae(enc, dec, 2, -1.0, 1), InvalidArgument);
  MlpArchitecture wrong_out = dec;
  wrong_out.output_dim = 5;
  EXPECT_THROW(init_vae(enc, wrong_out, 2, 0.1, 1), InvalidArgument);
}

TEST(Kl, ZeroForStandardNormal) {
  EXPECT_TRUE(kl_divergence(Matrix::Zero(3, 2), Matrix::Zero(3, 2)).isZero(0.0));
}

TEST(Kl, ClosedFormValues) {
  Matrix mu(1, 2), lv(1, 2);
  mu << 1.0, 0.0;
  lv << 0.0, std::log(4.0);
  const Vector kl = kl_divergence(mu, lv);
  EXPECT_DOUBLE_EQ(kl(0), 0.5);
  EXPECT_NEAR(kl(1), 0.5 * (4.0 - std::log(4.0) - 1.0), 1e-15);
}

TEST(Kl, MatchesMonteCarloEstimate) {
  Rng rng(3);
  for (int draw = 0; draw < 5; ++draw) {
    Matrix mu(2, 1), lv(2, 1);
    for (Index i = 0; i < 2; ++i) {
      mu(i, 0) = rng.uniform(-1.5, 1.5);
      lv(i, 0) = rng.uniform(-1.0, 1.0);
    }
    double acc = 0.0;
    const int samples = 1'000'000;
    for (int s = 0; s < samples; ++s) {
      for (Index i = 0; i < 2; ++i) {
        const double e = rng.normal();
        const double z = mu(i, 0) + std::exp(0.5 * lv(i, 0)) * e;
        acc += -0.5 * lv(i, 0) - 0.5 * e * e + 0.5 * z * z;
      }
    }
    EXPECT_NEAR(acc / samples, kl_divergence(mu, lv)(0), 1e-2);
  }
}

TEST(VaeLoss, CompositionAndBetaZero) {
  Matrix x(2, 2), xr(2, 2), mu(1, 2), lv(1, 2);
  x << 1, 2, 3, 4;
  xr << 1, 2, 3, 6;  // one error of 2 -> rec = 4 / (2 * 2) = 1
  mu << 1, 1;
  lv << 0, 0;  // KL 0.5 per sample
  const LossTerms t = vae_loss(x, xr, mu, lv, 0.2);
  EXPECT_DOUBLE_EQ(t.rec, 1.0);
  EXPECT_DOUBLE_EQ(t.kl, 0.5);
  EXPECT_DOUBLE_EQ(t.total, 1.1);
  EXPECT_DOUBLE_EQ(vae_loss(x, xr, mu, lv, 0.0).total, 1.0);
  EXPECT_THROW(vae_loss(x, xr, mu, lv, -0.1), InvalidArgument);
}

TEST(Reparameterize, UsesSigmaTimesNoise) {
  Matrix mu(1, 2), lv(1, 2), eps(1, 2);
  mu << 1.0, -1.0;
  lv << std::log(4.0), 0.0;
  eps << 0.5, 2.0;
  const Matrix z = reparameterize(mu, lv, eps);
  EXPECT_DOUBLE_EQ(z(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(z(0, 1), 1.0);
}

TEST(VaeGradient, MatchesCentralDifferencesOnTinyNet) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto [enc, dec] = mirrored_architectures(4, {2}, 2);
  Rng rng(4);
  VaeModel model{Mlp(enc, rng), Mlp(dec, rng), 2, 0.7};
  perturb(model.encoder, rng);
  perturb(model.decoder, rng);
  const Matrix x = random_matrix(4, 3, rng);
  const Matrix eps = random_matrix(2, 3, rng);
  VaeGradients grads;
  vae_loss_and_gradients(model, x, eps, grads);

  const double h = 1e-5;
  for (bool encoder : {true, false}) {
    const auto& analytic = encoder ? grads.encoder : grads.decoder;
    const std::size_t layers = (encoder ? model.encoder : model.decoder).layers().size();
    for (std::size_t l = 0; l < layers; ++l) {
      for (bool weight : {true, false}) {
        const Index count = weight ? analytic[l].weight.size() : analytic[l].bias.size();
        for (Index k = 0; k < count; ++k) {
          auto loss_at = [&](double delta) {
            VaeModel m = model;
            parameter(encoder ? m.encoder : m.decoder, l, weight, k) += delta;
            VaeGradients unused;
            return vae_loss_and_gradients(m, x, eps, unused).total;
          };
          const double fd = (loss_at(h) - loss_at(-h)) / (2.0 * h);
          const double exact = weight ? analytic[l].weight.data()[k] : analytic[l].bias(k);
          const double scale = std::max({std::abs(fd), std::abs(exact), 1e-6});
          EXPECT_LE(std::abs(fd - exact) / scale, 1e-4)
              << (encoder ? "encoder" : "decoder") << " layer " << l << (weight ? " weight " : " bias ") << k;
        }
      }
    }
  }
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 10.0);
}

TEST(TrainVae, ReducesLossAndIsDeterministic) {
  Rng rng(5);
  // samples on a 1-D curve embedded in R^6
  Matrix data(6, 40);
  for (Index c = 0; c < 40; ++c) {
    const double t = -1.0 + 2.0 * static_cast<double>(c) / 39.0;
    for (Index r = 0; r < 6; ++r) data(r, c) = std::sin(t * static_cast<double>(r + 1));
  }
  const auto [enc, dec] = mirrored_architectures(6, {16, 8}, 2);
  const VaeModel init = init_vae(enc, dec, 2, 1e-3, 9);
  TrainConfig cfg;
  cfg.epochs = 150;
  cfg.batch_size = 8;
  cfg.seed = 3;
  const auto a = train_vae(init, data, cfg);
  const auto b = train_vae(init, data, cfg);
  EXPECT_LT(a.history.rec.back(), 0.2 * a.history.rec.front());
  EXPECT_TRUE(a.model == b.model);
  EXPECT_EQ(a.history.total, b.history.total);
  cfg.seed = 4;
  EXPECT_FALSE(train_vae(init, data, cfg).model == a.model);
}

TEST(TrainVae, RejectsMismatchedData) {
  const auto [enc, dec] = mirrored_architectures(6, {4}, 2);
  const VaeModel init = init_vae(enc, dec, 2, 1e-3, 1);
  EXPECT_THROW(train_vae(init, Matrix::Zero(5, 3), TrainConfig{}), InvalidArgument);
}

TEST(LatentRanking, ZeroingErrorsNonincreasingAlongRanking) {
  const auto [enc, dec] = mirrored_architectures(5, {6}, 3);
  Rng rng(6);
  VaeModel model{Mlp(enc, rng), Mlp(dec, rng), 3, 0.0};
  perturb(model.encoder, rng);
  const Matrix data = random_matrix(5, 12, rng);
  const auto errors = latent_zeroing_errors(model, data);
  const auto ranking = rank_latents(model, data);
  ASSERT_EQ(ranking.size(), 3u);
  for (std::size_t i = 1; i < ranking.size(); ++i) {
    EXPECT_GE(errors[static_cast<std::size_t>(ranking[i - 1])],
              errors[static_cast<std::size_t>(ranking[i])]);
  }
}

TEST(LatentRanking, UnusedLatentRanksLast) {
  // linear encoder mu = (x0, x1); decoder reproduces x0 from z0 and ignores z1
  const auto [enc, dec] = mirrored_architectures(3, {}, 2);
  Rng rng(7);
  VaeModel model{Mlp(enc, rng), Mlp(dec, rng), 2, 0.0};
  model.encoder.layers()[0].weight.setZero();
  model.encoder.layers()[0].weight(0, 0) = 1.0;
  model.encoder.layers()[0].weight(1, 1) = 1.0;
  model.decoder.layers()[0].weight.setZero();
  model.decoder.layers()[0].weight(0, 0) = 1.0;
  const Matrix data = random_matrix(3, 10, rng);
  const auto errors = latent_zeroing_errors(model, data);
  const double kept = data.bottomRows(2).squaredNorm();
  EXPECT_NEAR(errors[1], std::sqrt(kept / 30.0), 1e-15);
  EXPECT_NEAR(errors[0], std::sqrt(data.squaredNorm() / 30.0), 1e-15);
  EXPECT_EQ(rank_latents(model, data), (std::vector<Index>{0, 1}));
}
