#include "aerosurrogate/gpr.hpp"

#include <gtest/gtest.h>

using namespace aerosurrogate;

namespace {

Matrix five_points() {
  Matrix p(5, 1);
  p << 0.1, 0.25, 0.45, 0.7, 1.0;
  return p;
}

GprModel fixed_model(const Matrix& p, const Matrix& y, const KernelParams& params) {
  GprModel m;
  m.input_lower = Vector::Zero(p.cols());
  m.input_upper = Vector::Ones(p.cols());
  m.inputs = p;
  m.targets = y;
  m.params.assign(static_cast<std::size_t>(y.cols()), params);
  gpr_condition(m);
  return m;
}

KernelParams noisy_params() {
  KernelParams q = KernelParams::unit(1);
  q.linear_weights(0) = 0.7;
  q.matern_variance = 1.3;
  q.lengthscales(0) = 0.4;
  q.noise_variance = 0.05;
  return q;
}

}  // namespace

TEST(Kernel, HandEvaluatedValues) {
  const KernelParams unit = KernelParams::unit(2);
  const Vector a{{1.0, 1.0}}, b{{2.0, 2.0}};
  EXPECT_DOUBLE_EQ(kernel_eval(unit, a, a), 2.0);
  const double s6 = std::sqrt(6.0);
  EXPECT_NEAR(kernel_eval(unit, a, b), 4.0 * (1.0 + s6) * std::exp(-s6), 1e-12);
  EXPECT_EQ(kernel_eval(unit, Vector::Zero(2), b), 0.0);
}

TEST(Kernel, SymmetricAndArd) {
  KernelParams p = KernelParams::unit(2);
  p.linear_weights << 0.5, 2.0;
  p.lengthscales << 0.3, 3.0;
  p.matern_variance = 1.7;
  const Vector a{{0.2, 0.9}}, b{{0.6, 0.1}};
  EXPECT_EQ(kernel_eval(p, a, b), kernel_eval(p, b, a));
  const double linear = 0.5 * 0.2 * 0.6 + 2.0 * 0.9 * 0.1;
  const double rho = std::hypot(0.4 / 0.3, 0.8 / 3.0);
  const double s = std::sqrt(3.0) * rho;
  EXPECT_NEAR(kernel_eval(p, a, b), linear * 1.7 * (1.0 + s) * std::exp(-s), 1e-15);
}

TEST(KernelParams, LogRoundTripAndValidation) {
  const KernelParams q = noisy_params();
  const KernelParams back = KernelParams::from_log(q.to_log());
  EXPECT_NEAR(back.noise_variance, q.noise_variance, 1e-15);
  EXPECT_NEAR(back.lengthscales(0), 0.4, 1e-15);
  KernelParams bad = q;
  bad.noise_variance = 1e-9;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = q;
  bad.lengthscales(0) = 0.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(LogMarginalLikelihood, ScalarClosedForm) {
  const KernelParams q = noisy_params();
  Matrix p(1, 1);
  p << 0.6;
  const Vector y{{0.8}};
  const double k = kernel_eval(q, p.row(0).transpose(), p.row(0).transpose()) + q.noise_variance;
  const double expected = -0.5 * 0.64 / k - 0.5 * std::log(k) - 0.5 * std::log(2.0 * std::numbers::pi);
  EXPECT_NEAR(log_marginal_likelihood(q, p, y), expected, 1e-14);
}

TEST(LogMarginalLikelihood, MatchesExplicitInverse) {
  const KernelParams q = noisy_params();
  const Matrix p = five_points();
  const Vector y{{0.3, -0.4, 0.8, 0.1, -0.6}};
  Matrix K = kernel_matrix(q, p, p);
  K.diagonal().array() += q.noise_variance;
  const double oracle = -0.5 * y.dot(K.inverse() * y) - 0.5 * std::log(K.determinant()) -
                        2.5 * std::log(2.0 * std::numbers::pi);
  EXPECT_NEAR(log_marginal_likelihood(q, p, y), oracle, 1e-8);
}

TEST(LogMarginalLikelihood, GradientMatchesFiniteDifferences) {
  Matrix p(5, 2);
  p << 0.1, 0.9, 0.3, 0.2, 0.5, 0.6, 0.8, 0.4, 1.0, 1.0;
  const Vector y{{0.2, -0.5, 0.4, 0.9, -0.1}};
  KernelParams q = KernelParams::unit(2, 0.02);
  q.linear_weights << 0.6, 1.4;
  q.lengthscales << 0.5, 0.8;
  const Vector theta = q.to_log();
  Vector grad;
  const double value = log_marginal_likelihood(theta, p, y, grad);
  EXPECT_NEAR(value, log_marginal_likelihood(q, p, y), 1e-12);
  const double h = 1e-5;
  for (Index i = 0; i < theta.size(); ++i) {
    Vector tp = theta, tm = theta, unused;
    tp(i) += h;
    tm(i) -= h;
    const double fd = (log_marginal_likelihood(tp, p, y, unused) -
                       log_marginal_likelihood(tm, p, y, unused)) / (2.0 * h);
    EXPECT_NEAR(grad(i), fd, 1e-5 * std::max(1.0, std::abs(fd))) << "parameter " << i;
  }
}

TEST(Factorize, NoiseShrinksWeights) {
  const Matrix p = five_points();
  const Vector y{{0.3, -0.4, 0.8, 0.1, -0.6}};
  const KernelParams q = noisy_params();
  const Matrix K = kernel_matrix(q, p, p);
  const double low = cholesky_solve(factorize(K, 0.01).lower, y).norm();
  const double high = cholesky_solve(factorize(K, 0.1).lower, y).norm();
  EXPECT_LT(high, low);
}

TEST(Factorize, JitterEscalationAndFailure) {
  // rank-one Gram with zero noise needs jitter
  const Matrix rank_one = Matrix::Ones(3, 3);
  const Factorization f = factorize(rank_one, 0.0);
  EXPECT_GT(f.jitter, 0.0);
  EXPECT_LE(f.jitter, 1e-6);
  Matrix indefinite = Matrix::Identity(2, 2);
  indefinite(1, 1) = -1.0;
  EXPECT_THROW(factorize(indefinite, 0.0), IndefiniteKernel);
}

TEST(GprPredict, SinglePointClosedForm) {
  Matrix p(1, 1), y(1, 1);
  p << 1.0;
  y << 1.0;
  KernelParams q = KernelParams::unit(1, 0.25);
  const GprModel m = fixed_model(p, y, q);
  const double k = kernel_eval(q, p.row(0).transpose(), p.row(0).transpose());
  const auto pred = gpr_predict(m, p);
  EXPECT_NEAR(pred.means(0, 0), k / (k + 0.25), 1e-15);
  EXPECT_NEAR(pred.variances(0, 0), k - k * k / (k + 0.25), 1e-14);
}

TEST(GprPredict, VarianceGrowsAwayFromData) {
  const Matrix p = five_points();
  Matrix y(5, 1);
  y << 0.3, -0.4, 0.8, 0.1, -0.6;
  const GprModel m = fixed_model(p, y, noisy_params());
  Matrix far(1, 1);
  far << 3.0;
  const auto at_train = gpr_predict(m, p.topRows(1));
  const auto outside = gpr_predict(m, far);
  EXPECT_LE(at_train.variances(0, 0), outside.variances(0, 0));
  const auto all = gpr_predict(m, p);
  EXPECT_TRUE((all.variances.array() >= 0.0).all());
}

TEST(GprPredict, CachedWeightsSolveTheSystem) {
  const Matrix p = five_points();
  Matrix y(5, 1);
  y << 0.3, -0.4, 0.8, 0.1, -0.6;
  const KernelParams q = noisy_params();
  const GprModel m = fixed_model(p, y, q);
  Matrix K = kernel_matrix(q, p, p);
  K.diagonal().array() += q.noise_variance;
  EXPECT_LE((K * m.weights.col(0) - y.col(0)).norm() / y.norm(), 1e-8);
}

TEST(GprFit, InterpolatesNoiselessLine) {
  const Matrix p = five_points();
  GprModel m = gpr_fit(p, p, Vector::Zero(1), Vector::Ones(1));
  m.params[0].noise_variance = KernelParams::kNoiseFloor;
  gpr_condition(m);
  EXPECT_LE((gpr_predict(m, p).means - p).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(GprFit, ZeroTargetsPredictZero) {
  const Matrix p = five_points();
  const GprModel m = gpr_fit(p, Matrix::Zero(5, 1), Vector::Zero(1), Vector::Ones(1));
  Matrix q(2, 1);
  q << 0.33, 0.8;
  EXPECT_TRUE(gpr_predict(m, q).means.isZero(0.0));
}

TEST(GprFit, IndependentOutputsAndDeterminism) {
  Matrix p(12, 2), y(12, 2);
  for (Index i = 0; i < 12; ++i) {
    const double m = 0.52 + 0.04 * static_cast<double>(i);
    const double a = 0.5 + std::fmod(3.7 * static_cast<double>(i), 11.0);
    p.row(i) << m, a;
    y.row(i) << std::sin(3.0 * m) + 0.1 * a, m * a / 10.0;
  }
  const Vector lo{{0.5, 0.0}}, hi{{0.96, 11.5}};
  GprOptions opts;
  opts.restarts = 3;
  opts.iterations = 60;
  opts.seed = 5;
  const GprModel a = gpr_fit(p, y, lo, hi, opts);
  const GprModel b = gpr_fit(p, y, lo, hi, opts);
  ASSERT_EQ(a.params.size(), 2u);
  EXPECT_EQ(a.params[0].to_log(), b.params[0].to_log());
  EXPECT_EQ(a.params[1].to_log(), b.params[1].to_log());
  EXPECT_EQ(a.weights, b.weights);
  // normalized inputs lie in the unit box
  EXPECT_GE(a.inputs.minCoeff(), 0.0);
  EXPECT_LE(a.inputs.maxCoeff(), 1.0 + 1e-15);
  const auto pred = gpr_predict(a, p);
  EXPECT_LT((pred.means - y).cwiseAbs().maxCoeff(), 0.05);
}

TEST(GprPredict, NormalizedOriginPredictsZero) {
  // the linear factor vanishes at the lower envelope corner
  const Matrix p = five_points();
  Matrix y(5, 1);
  y << 0.3, -0.4, 0.8, 0.1, -0.6;
  const GprModel m = fixed_model(p, y, noisy_params());
  const auto pred = gpr_predict(m, Matrix::Zero(1, 1));
  EXPECT_EQ(pred.means(0, 0), 0.0);
  EXPECT_EQ(pred.variances(0, 0), 0.0);
}

TEST(GprFit, RejectsBadInput) {
  const Matrix p = five_points();
  EXPECT_THROW(gpr_fit(p.topRows(1), p.topRows(1), Vector::Zero(1), Vector::Ones(1)), InvalidArgument);
  EXPECT_THROW(gpr_fit(p, p.topRows(4), Vector::Zero(1), Vector::Ones(1)), InvalidArgument);
  EXPECT_THROW(gpr_fit(p, p, Vector::Ones(1), Vector::Ones(1)), InvalidArgument);
  const GprModel m = gpr_fit(p, p, Vector::Zero(1), Vector::Ones(1));
  EXPECT_THROW(gpr_predict(m, Matrix::Zero(1, 2)), InvalidArgument);
}
