#include "aerosurrogate/metrics.hpp"

#include <gtest/gtest.h>

using namespace aerosurrogate;

TEST(PointMetrics, PerfectPrediction) {
  Matrix t(2, 2);
  t << 1, 2, 3, 5;
  EXPECT_EQ(mae(t, t), 0.0);
  EXPECT_EQ(rmse(t, t), 0.0);
  EXPECT_EQ(r2(t, t), 1.0);
}

TEST(PointMetrics, HandComputedPair) {
  Matrix pred = Matrix::Zero(1, 2), truth(1, 2);
  truth << 1, 3;
  EXPECT_DOUBLE_EQ(mae(pred, truth), 2.0);
  EXPECT_DOUBLE_EQ(rmse(pred, truth), std::sqrt(5.0));
}

TEST(PointMetrics, ConstantMeanPredictionHasZeroR2) {
  Matrix truth(2, 3);
  truth << 1, 4, 2, 8, 5, 4;
  const Matrix pred = Matrix::Constant(2, 3, truth.mean());
  EXPECT_NEAR(r2(pred, truth), 0.0, 1e-15);
}

TEST(PointMetrics, R2MatchesRmseIdentity) {
  Matrix truth(3, 2), pred(3, 2);
  truth << 0.1, -0.4, 0.9, 1.3, -0.2, 0.5;
  pred << 0.0, -0.3, 1.0, 1.1, -0.1, 0.7;
  const double n = 6.0;
  const double ss_tot = (truth.array() - truth.mean()).square().sum();
  const double e = rmse(pred, truth);
  EXPECT_NEAR(r2(pred, truth), 1.0 - e * e * n / ss_tot, 1e-14);
}

TEST(PointMetrics, PermutationInvariant) {
  Matrix truth(2, 3), pred(2, 3);
  truth << 1, 2, 3, 4, 5, 7;
  pred << 1.5, 2, 2, 4, 6, 7;
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(3);
  perm.indices() << 2, 0, 1;
  const Matrix tp = truth * perm, pp = pred * perm;
  EXPECT_DOUBLE_EQ(mae(pp, tp), mae(pred, truth));
  EXPECT_DOUBLE_EQ(rmse(pp, tp), rmse(pred, truth));
  EXPECT_NEAR(r2(pp, tp), r2(pred, truth), 1e-15);
}

TEST(PointMetrics, Errors) {
  EXPECT_THROW(mae(Matrix::Zero(1, 2), Matrix::Zero(2, 1)), InvalidArgument);
  EXPECT_THROW(rmse(Matrix(0, 0), Matrix(0, 0)), InvalidArgument);
  EXPECT_THROW(r2(Matrix::Zero(2, 2), Matrix::Ones(2, 2)), InvalidArgument);
}

TEST(EvaluateMetrics, PerSampleColumns) {
  Matrix truth = Matrix::Zero(2, 2), pred(2, 2);
  pred << 1, 0, -3, 2;
  truth(0, 1) = 1.0;
  const MetricsReport rep = evaluate_metrics(pred, truth);
  ASSERT_EQ(rep.sample_mae.size(), 2u);
  EXPECT_DOUBLE_EQ(rep.sample_mae[0], 2.0);
  EXPECT_DOUBLE_EQ(rep.sample_mae[1], 1.5);
  EXPECT_DOUBLE_EQ(rep.sample_rmse[0], std::sqrt(5.0));
  EXPECT_DOUBLE_EQ(rep.sample_rmse[1], std::sqrt(2.5));
  EXPECT_DOUBLE_EQ(rep.mae, mae(pred, truth));
}

TEST(Nrmse, HandComputedAndZero) {
  const Vector mu{{1.0, 0.0}}, hat{{0.0, 0.0}}, bar{{0.5, 0.0}};
  EXPECT_DOUBLE_EQ(nrmse_latent(mu, hat, bar), 2.0);
  EXPECT_EQ(nrmse_latent(mu, mu, bar), 0.0);
  EXPECT_THROW(nrmse_latent(bar, hat, bar), InvalidArgument);
  EXPECT_THROW(nrmse_latent(mu, Vector::Zero(3), bar), InvalidArgument);
}

TEST(Nrmse, ScalingAndTranslationInvariant) {
  const Vector mu{{0.3, -1.2}}, hat{{0.1, -0.9}}, bar{{-0.2, 0.4}};
  const double base = nrmse_latent(mu, hat, bar);
  for (double c : {-3.0, 0.01, 7.5}) {
    EXPECT_NEAR(nrmse_latent(c * mu, c * hat, c * bar), base, 1e-14);
  }
  const Vector shift{{4.0, -2.0}};
  EXPECT_NEAR(nrmse_latent(mu + shift, hat + shift, bar + shift), base, 1e-14);
}

TEST(Nrmse, ColumnsSkipSamplesAtTheMean) {
  Matrix mu(1, 3), hat(1, 3);
  mu << 1.0, 0.0, -2.0;
  hat << 0.5, 0.3, -2.0;
  const auto v = nrmse_columns(mu, hat, Vector::Zero(1));
  ASSERT_EQ(v.size(), 2u);
  EXPECT_DOUBLE_EQ(v[0], 0.5);
  EXPECT_DOUBLE_EQ(v[1], 0.0);
}

TEST(Summaries, MeanAndQuantile) {
  EXPECT_DOUBLE_EQ(mean_of({1.0, 2.0, 6.0}), 3.0);
  EXPECT_TRUE(std::isnan(mean_of({})));
  EXPECT_DOUBLE_EQ(quantile({4.0, 1.0, 3.0, 2.0}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile({4.0, 1.0, 3.0, 2.0}, 0.9), 3.7);
  EXPECT_DOUBLE_EQ(quantile({4.0, 1.0}, 0.0), 1.0);
}

TEST(Pearson, PerfectAndDegenerate) {
  const Vector a{{1.0, 2.0, 3.0}};
  EXPECT_NEAR(pearson(a, 2.0 * a), 1.0, 1e-15);
  EXPECT_NEAR(pearson(a, -a), -1.0, 1e-15);
  EXPECT_EQ(pearson(a, Vector::Ones(3)), 0.0);
  EXPECT_THROW(pearson(a, Vector::Ones(2)), InvalidArgument);
}
