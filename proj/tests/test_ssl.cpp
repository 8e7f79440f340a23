#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ldreg/ssl/encoder.hpp"
#include "ldreg/ssl/ntxent.hpp"
#include "ldreg/ssl/optim.hpp"
#include "ldreg/ssl/synthetic.hpp"
#include "ldreg/ssl/train.hpp"
#include "support.hpp"

namespace {

using ldreg::Matrix;
using namespace ldreg::ssl;

double weighted_sum(const Matrix& z, const Matrix& weights) {
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += z.data()[i] * weights.data()[i];
  return s;
}

// ---- encoders ----

TEST(LinearEncoder, IdentityAndZero) {
  const Matrix x = ldreg::testing::gaussian_matrix(7, 3, 1);
  EXPECT_EQ(encoder_forward(LinearEncoder::identity(3), x), x);
  auto zero = LinearEncoder::zeros(3, 2);
  zero.bias = {1.5, -2.0};
  const Matrix z = encoder_forward(zero, x);
  for (std::size_t i = 0; i < 7; ++i) {
    EXPECT_EQ(z(i, 0), 1.5);
    EXPECT_EQ(z(i, 1), -2.0);
  }
}

TEST(MlpEncoder, MatchesScalarLoop) {
  ldreg::Rng rng(2);
  const std::vector<std::size_t> widths{4, 6, 3};
  for (auto act : {Activation::relu, Activation::tanh}) {
    auto enc = MlpEncoder::random(widths, act, rng);
    for (auto& l : enc.layers)
      for (double& b : l.bias) b = rng.gaussian();
    const Matrix x = ldreg::testing::gaussian_matrix(5, 4, 3);
    const Matrix z = encoder_forward(enc, x);
    for (std::size_t i = 0; i < 5; ++i) {
      std::vector<double> h(x.row(i).begin(), x.row(i).end());
      for (std::size_t l = 0; l < enc.layers.size(); ++l) {
        const auto& layer = enc.layers[l];
        std::vector<double> next(layer.out_dim());
        for (std::size_t o = 0; o < next.size(); ++o) {
          double acc = layer.bias[o];
          for (std::size_t d = 0; d < h.size(); ++d) acc += layer.weight(o, d) * h[d];
          if (l + 1 < enc.layers.size())
            acc = act == Activation::relu ? std::max(acc, 0.0) : std::tanh(acc);
          next[o] = acc;
        }
        h = next;
      }
      for (std::size_t o = 0; o < 3; ++o) EXPECT_NEAR(z(i, o), h[o], 1e-12);
    }
  }
}

TEST(MlpEncoder, BackwardMatchesFiniteDifferences) {
  ldreg::Rng rng(4);
  const std::vector<std::size_t> widths{3, 5, 4, 2};
  for (auto act : {Activation::tanh, Activation::relu}) {
    auto enc = MlpEncoder::random(widths, act, rng);
    for (auto& l : enc.layers)
      for (double& b : l.bias) b = 0.3 * rng.gaussian();
    const Matrix x = ldreg::testing::gaussian_matrix(6, 3, 5);
    const Matrix weights = ldreg::testing::gaussian_matrix(6, 2, 6);
    const auto grads = encoder_backward(enc, x, weights);
    auto g = grads.params;
    auto params = parameters(enc);
    const auto analytic = parameters(g);
    double worst = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p)
      for (std::size_t j = 0; j < params[p].size(); ++j) {
        const double x0 = params[p][j];
        const double h = 1e-6 * (1.0 + std::abs(x0));
        params[p][j] = x0 + h;
        const double up = weighted_sum(encoder_forward(enc, x), weights);
        params[p][j] = x0 - h;
        const double down = weighted_sum(encoder_forward(enc, x), weights);
        params[p][j] = x0;
        const double fd = (up - down) / (2.0 * h);
        worst = std::max(worst, std::abs(fd - analytic[p][j]) / std::max(1.0, std::abs(fd)));
      }
    EXPECT_LE(worst, 1e-6) << to_string(act);
    const Matrix fd_input = ldreg::testing::numeric_gradient(
        [&](const Matrix& xi) { return weighted_sum(encoder_forward(enc, xi), weights); }, x);
    EXPECT_LE(ldreg::testing::relative_error(grads.input, fd_input), 1e-6);
  }
}

TEST(MlpEncoder, BackwardLinearInUpstream) {
  ldreg::Rng rng(7);
  const std::vector<std::size_t> widths{3, 4, 2};
  auto enc = MlpEncoder::random(widths, Activation::tanh, rng);
  const Matrix x = ldreg::testing::gaussian_matrix(5, 3, 8);
  const Matrix a = ldreg::testing::gaussian_matrix(5, 2, 9);
  const Matrix b = ldreg::testing::gaussian_matrix(5, 2, 10);
  Matrix combo = a * 2.0;
  combo.add_scaled(b, -0.5);
  auto ga = encoder_backward(enc, x, a).params;
  auto gb = encoder_backward(enc, x, b).params;
  auto gc = encoder_backward(enc, x, combo).params;
  const auto pa = parameters(ga);
  const auto pb = parameters(gb);
  const auto pc = parameters(gc);
  for (std::size_t p = 0; p < pa.size(); ++p)
    for (std::size_t j = 0; j < pa[p].size(); ++j)
      EXPECT_NEAR(pc[p][j], 2.0 * pa[p][j] - 0.5 * pb[p][j], 1e-12);

  auto gz = encoder_backward(enc, x, Matrix(5, 2)).params;
  for (const auto& span : parameters(gz))
    for (double v : span) EXPECT_EQ(v, 0.0);
}

TEST(Encoder, ShapeMismatchIsUsageError) {
  EXPECT_THROW(encoder_forward(LinearEncoder::identity(3), Matrix(2, 4)), ldreg::UsageError);
  EXPECT_THROW(encoder_backward(LinearEncoder::identity(3), Matrix(2, 3), Matrix(2, 2)),
               ldreg::UsageError);
}

// ---- NT-Xent ----

TEST(NtXent, IdenticalRows) {
  Matrix e(4, 3, 1.0);
  EXPECT_NEAR(ntxent_loss(e, 0.1).loss, std::log(3.0), 1e-12);
  Matrix f(10, 2, -0.5);
  EXPECT_NEAR(ntxent_loss(f, 0.7).loss, std::log(9.0), 1e-12);
}

TEST(NtXent, OrthogonalPairsByHand) {
  // Each anchor: partner at cosine 0, one negative at -1, one at 0.
  const Matrix e{{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  const double tau = 0.5;
  const double per_anchor = -std::log(1.0 / (1.0 + std::exp(-1.0 / tau) + 1.0));
  EXPECT_NEAR(ntxent_loss(e, tau).loss, per_anchor, 1e-14);
}

TEST(NtXent, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix e = ldreg::testing::gaussian_matrix(8, 4, 200 + seed);
    for (double tau : {0.1, 0.5, 1.0}) {
      const auto r = ntxent_loss(e, tau);
      const Matrix fd = ldreg::testing::numeric_gradient(
          [&](const Matrix& p) { return ntxent_loss(p, tau).loss; }, e);
      EXPECT_LE(ldreg::testing::relative_error(r.grad, fd), 1e-5) << seed << " " << tau;
    }
  }
}

TEST(NtXent, RowRescalingInvariant) {
  const Matrix e = ldreg::testing::gaussian_matrix(12, 5, 30);
  Matrix scaled = e;
  ldreg::Rng rng(31);
  for (std::size_t i = 0; i < 12; ++i) {
    const double c = std::exp(rng.uniform(-3, 3));
    for (double& v : scaled.row(i)) v *= c;
  }
  EXPECT_NEAR(ntxent_loss(scaled, 0.2).loss, ntxent_loss(e, 0.2).loss, 1e-10);
}

TEST(NtXent, Errors) {
  EXPECT_THROW(ntxent_loss(Matrix(2, 3, 1.0), 0.1), ldreg::UsageError);
  EXPECT_THROW(ntxent_loss(Matrix(5, 3, 1.0), 0.1), ldreg::UsageError);
  EXPECT_THROW(ntxent_loss(Matrix(4, 3, 1.0), 0.0), ldreg::UsageError);
  Matrix z(4, 2, 1.0);
  z(2, 0) = 0.0;
  z(2, 1) = 0.0;
  EXPECT_THROW(ntxent_loss(z, 0.1), ldreg::NumericError);
}

// ---- optimizers ----

TEST(Optimizer, ZeroLearningRateChangesNothing) {
  for (auto kind : {OptimizerKind::sgd, OptimizerKind::adam}) {
    std::vector<double> p{1.0, -2.0, 3.0};
    std::vector<double> g{0.5, 0.5, -4.0};
    Optimizer opt({kind, 0.0});
    for (int i = 0; i < 3; ++i) opt.step({std::span<double>(p)}, {std::span<double>(g)});
    EXPECT_EQ(p, (std::vector<double>{1.0, -2.0, 3.0}));
  }
}

TEST(Optimizer, SgdStep) {
  std::vector<double> p{1.0, 2.0};
  std::vector<double> g{0.5, -1.0};
  Optimizer opt({OptimizerKind::sgd, 0.1});
  opt.step({std::span<double>(p)}, {std::span<double>(g)});
  EXPECT_DOUBLE_EQ(p[0], 0.95);
  EXPECT_DOUBLE_EQ(p[1], 2.1);
}

TEST(Optimizer, AdamFirstStepIsSignedLearningRate) {
  std::vector<double> p{0.0, 0.0, 0.0};
  std::vector<double> g{3.0, -1e-3, 0.0};
  Optimizer opt({OptimizerKind::adam, 0.01});
  opt.step({std::span<double>(p)}, {std::span<double>(g)});
  EXPECT_NEAR(p[0], -0.01, 1e-10);
  EXPECT_NEAR(p[1], 0.01, 1e-7);
  EXPECT_EQ(p[2], 0.0);
}

TEST(Optimizer, LayoutMismatchIsUsageError) {
  std::vector<double> p{0.0, 0.0};
  std::vector<double> g{1.0};
  Optimizer opt({OptimizerKind::sgd, 0.1});
  EXPECT_THROW(opt.step({std::span<double>(p)}, {std::span<double>(g)}), ldreg::UsageError);
  EXPECT_THROW(Optimizer({OptimizerKind::adam, -1.0}), ldreg::UsageError);
}

// ---- synthetic data ----

TEST(GenUniform2d, DeterministicInSquareCentred) {
  EXPECT_EQ(gen_uniform_2d(100, 5), gen_uniform_2d(100, 5));
  EXPECT_NE(gen_uniform_2d(100, 5), gen_uniform_2d(100, 6));
  const Matrix x = gen_uniform_2d(10000, 1);
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    ASSERT_GE(x(i, 0), 0.0);
    ASSERT_LT(x(i, 0), 1.0);
    ASSERT_GE(x(i, 1), 0.0);
    ASSERT_LT(x(i, 1), 1.0);
    mx += x(i, 0);
    my += x(i, 1);
  }
  EXPECT_NEAR(mx / 1e4, 0.5, 0.02);
  EXPECT_NEAR(my / 1e4, 0.5, 0.02);
}

TEST(GenUniformBall, InsideUnitBall) {
  const Matrix x = gen_uniform_ball(2000, 3, 2);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double r2 = 0.0;
    for (double v : x.row(i)) r2 += v * v;
    ASSERT_LE(r2, 1.0);
  }
  EXPECT_EQ(gen_uniform_ball(50, 4, 9), gen_uniform_ball(50, 4, 9));
}

TEST(GenSubspaceGaussian, RankEqualsIntrinsicDimension) {
  const Matrix x = gen_subspace_gaussian(500, 3, 10, 0.0, 4);
  Matrix cov(10, 10);
  for (std::size_t a = 0; a < 10; ++a)
    for (std::size_t b = 0; b < 10; ++b) {
      double acc = 0.0;
      for (std::size_t i = 0; i < 500; ++i) acc += x(i, a) * x(i, b);
      cov(a, b) = acc / 500.0;
    }
  for (std::size_t a = 0; a < 10; ++a)
    for (std::size_t b = 0; b < a; ++b) cov(a, b) = cov(b, a);
  const auto ev = ldreg::sym_eigenvalues(cov);
  EXPECT_GT(ev[2], 0.1);
  for (std::size_t i = 3; i < 10; ++i) EXPECT_LT(std::abs(ev[i]), 1e-9);
}

TEST(GenSubspaceGaussian, LocalDimension) {
  for (std::size_t d : {2UL, 4UL}) {
    const Matrix x = gen_subspace_gaussian(5000, d, 16, 0.0, 10 + d);
    const double g = ldreg::aggregate(ldreg::batch_lids(x, 64), ldreg::MeanKind::geometric);
    EXPECT_NEAR(g, static_cast<double>(d), 0.15 * static_cast<double>(d));
  }
}

TEST(GenSubspaceGaussian, DeterministicAndValidated) {
  EXPECT_EQ(gen_subspace_gaussian(40, 2, 5, 0.1, 3), gen_subspace_gaussian(40, 2, 5, 0.1, 3));
  EXPECT_THROW(gen_subspace_gaussian(40, 6, 5, 0.0, 3), ldreg::UsageError);
  EXPECT_THROW(gen_subspace_gaussian(40, 0, 5, 0.0, 3), ldreg::UsageError);
}

TEST(GenPairedViews, NoiseFreeViewsAreIdentical) {
  const Matrix base = gen_subspace_gaussian(20, 2, 6, 0.0, 1);
  const Matrix v = gen_paired_views(base, 0.0, 2);
  ASSERT_EQ(v.rows(), 40U);
  for (std::size_t i = 0; i < 20; ++i)
    for (std::size_t c = 0; c < 6; ++c) {
      EXPECT_EQ(v(2 * i, c), base(i, c));
      EXPECT_EQ(v(2 * i + 1, c), base(i, c));
    }
}

TEST(GenPairedViews, PairDistanceConcentrates) {
  const std::size_t dim = 400;
  const double sigma = 0.05;
  const Matrix base(200, dim);
  const Matrix v = gen_paired_views(base, sigma, 3);
  double mean = 0.0;
  for (std::size_t i = 0; i < 200; ++i) mean += ldreg::euclidean(v.row(2 * i), v.row(2 * i + 1));
  mean /= 200.0;
  EXPECT_NEAR(mean, sigma * std::sqrt(2.0 * dim), 0.02 * sigma * std::sqrt(2.0 * dim));
  EXPECT_EQ(gen_paired_views(base, sigma, 3), v);
}

// ---- training ----

TrainConfig quick_target(double target, std::size_t epochs) {
  auto c = TrainConfig::target_lid_defaults(target);
  c.epochs = epochs;
  return c;
}

TEST(TrainTargetLid, ZeroBetaLeavesParametersUnchanged) {
  const Matrix x = gen_uniform_2d(200, 1);
  auto cfg = quick_target(1.5, 5);
  cfg.reg.beta = 0.0;
  const auto r = train_target_lid(x, 1.5, cfg);
  EXPECT_EQ(r.encoder, detail::anisotropic_linear(2, 2, cfg.init_anisotropy));
  cfg.optimizer.kind = OptimizerKind::sgd;
  cfg.init_anisotropy = 0.0;
  const auto s = train_target_lid(x, 1.5, cfg);
  ldreg::Rng init(ldreg::derive_seed(cfg.seed, 0));
  EXPECT_EQ(s.encoder, LinearEncoder::random(2, 2, init));
}

TEST(TrainTargetLid, DeterministicTrace) {
  const Matrix x = gen_uniform_2d(300, 2);
  const auto a = train_target_lid(x, 1.4, quick_target(1.4, 20));
  const auto b = train_target_lid(x, 1.4, quick_target(1.4, 20));
  EXPECT_EQ(a.trace, b.trace);
  EXPECT_EQ(a.encoder, b.encoder);
  EXPECT_EQ(a.trace.records.size(), 20U);
}

TEST(TrainTargetLid, MovesTowardTarget) {
  const Matrix x = gen_uniform_2d(400, 3);
  const auto r = train_target_lid(x, 1.2, quick_target(1.2, 150));
  const double start = std::abs(r.trace.records.front().mlid - 1.2);
  EXPECT_LT(std::abs(r.final_mlid - 1.2), start);
  EXPECT_LT(r.trace.records.back().reg_loss, r.trace.records.front().reg_loss);
}

TEST(TrainTargetLid, LossNearlyMonotoneAtSmallLearningRate) {
  // Neighbour sets are frozen within a step but change between steps,
  // so small upticks occur; they stay far below the overall decrease.
  const Matrix x = gen_uniform_2d(1000, ldreg::derive_seed(0, 100));
  auto cfg = quick_target(1.6, 60);
  cfg.optimizer = {OptimizerKind::sgd, 1e-3};
  const auto r = train_target_lid(x, 1.6, cfg);
  const auto& rec = r.trace.records;
  const double initial = rec.front().reg_loss;
  double worst_rise = 0.0;
  for (std::size_t e = 1; e < rec.size(); ++e)
    worst_rise = std::max(worst_rise, rec[e].reg_loss - rec[e - 1].reg_loss);
  EXPECT_LE(worst_rise, 0.01 * initial);
  EXPECT_LT(rec.back().reg_loss, initial);
}

TEST(TrainTargetLid, ConfigErrors) {
  const Matrix x = gen_uniform_2d(100, 4);
  auto cfg = quick_target(1.0, 1);
  cfg.reg.kind = ldreg::RegKind::l1;
  EXPECT_THROW(train_target_lid(x, 1.0, cfg), ldreg::UsageError);
  cfg = quick_target(1.0, 1);
  cfg.init_anisotropy = -1.0;
  EXPECT_THROW(train_target_lid(x, 1.0, cfg), ldreg::UsageError);
  EXPECT_THROW(train_target_lid(gen_uniform_2d(20, 4), 1.0, quick_target(1.0, 1)), ldreg::UsageError);
}

TEST(TrainTargetLid, NumericFailureCarriesEpoch) {
  Matrix x(40, 2);
  for (std::size_t i = 0; i < 40; ++i) x(i, 0) = static_cast<double>(i % 2);
  auto cfg = quick_target(1.0, 3);
  cfg.reg.degenerate_policy = ldreg::DegeneratePolicy::error;
  try {
    train_target_lid(x, 1.0, cfg);
    FAIL() << "expected a training error";
  } catch (const ldreg::TrainingError& e) {
    EXPECT_EQ(e.epoch(), 0U);
    EXPECT_TRUE(e.index().has_value());
    EXPECT_EQ(std::string(e.what()).rfind("epoch 0: ", 0), 0U) << e.what();
  }
}

TrainConfig quick_ssl(ldreg::RegKind kind, double beta, std::size_t epochs) {
  auto c = TrainConfig::ssl_defaults();
  c.reg.kind = kind;
  c.reg.beta = beta;
  c.reg.k = 16;
  c.batch_size = 64;
  c.widths = {8, 16, 8};
  c.epochs = epochs;
  return c;
}

TEST(TrainSslToy, DeterministicTrace) {
  const Matrix base = gen_subspace_gaussian(128, 3, 8, 0.0, 5);
  const auto a = train_ssl_toy(base, quick_ssl(ldreg::RegKind::l1, 0.01, 3));
  const auto b = train_ssl_toy(base, quick_ssl(ldreg::RegKind::l1, 0.01, 3));
  EXPECT_EQ(a.trace, b.trace);
  EXPECT_EQ(a.encoder, b.encoder);
  ASSERT_EQ(a.trace.records.size(), 3U);
  EXPECT_EQ(a.final_mlid, a.trace.records.back().mlid);
}

TEST(TrainSslToy, NoRegularizerMeansZeroRegLoss) {
  const Matrix base = gen_subspace_gaussian(128, 3, 8, 0.0, 6);
  const auto r = train_ssl_toy(base, quick_ssl(ldreg::RegKind::none, 0.0, 2));
  for (const auto& rec : r.trace.records) {
    EXPECT_EQ(rec.reg_loss, 0.0);
    EXPECT_GT(rec.ssl_loss, 0.0);
    EXPECT_GT(rec.erank, 1.0);
  }
}

TEST(TrainSslToy, NtXentDecreases) {
  const Matrix base = gen_subspace_gaussian(256, 3, 8, 0.0, 7);
  const auto r = train_ssl_toy(base, quick_ssl(ldreg::RegKind::none, 0.0, 15));
  EXPECT_LT(r.trace.records.back().ssl_loss, r.trace.records.front().ssl_loss);
}

TEST(TrainSslToy, ConfigErrors) {
  const Matrix base = gen_subspace_gaussian(128, 3, 8, 0.0, 8);
  auto cfg = quick_ssl(ldreg::RegKind::l1, 0.01, 1);
  cfg.batch_size = 16;
  EXPECT_THROW(train_ssl_toy(base, cfg), ldreg::UsageError);
  cfg = quick_ssl(ldreg::RegKind::none, 0.0, 1);
  cfg.batch_size = 7;
  EXPECT_THROW(train_ssl_toy(base, cfg), ldreg::UsageError);
  cfg = quick_ssl(ldreg::RegKind::none, 0.0, 1);
  cfg.widths = {5, 8};
  EXPECT_THROW(train_ssl_toy(base, cfg), ldreg::UsageError);
  cfg = quick_ssl(ldreg::RegKind::none, 0.0, 1);
  cfg.tau = 0.0;
  EXPECT_THROW(train_ssl_toy(base, cfg), ldreg::UsageError);
}

TEST(Measure, ChunksUseTheBatchScale) {
  const Matrix z = gen_subspace_gaussian(400, 3, 6, 0.0, 9);
  const auto whole = detail::measure(z, 16, ldreg::MomMode::pseudocode, 400);
  const auto lids = ldreg::batch_lids(z, 16, ldreg::Estimator::mom_pseudocode);
  EXPECT_NEAR(whole.first, ldreg::aggregate(lids, ldreg::MeanKind::geometric), 1e-12);
  EXPECT_EQ(whole.second, ldreg::effective_rank(z));
  const auto chunked = detail::measure(z, 16, ldreg::MomMode::pseudocode, 100);
  double log_sum = 0.0;
  for (std::size_t c = 0; c < 4; ++c) {
    std::vector<std::size_t> idx(100);
    for (std::size_t i = 0; i < 100; ++i) idx[i] = 100 * c + i;
    const auto part = ldreg::batch_lids(ldreg::select_rows(z, idx), 16);
    for (double v : part.values) log_sum += std::log(v);
  }
  EXPECT_NEAR(chunked.first, std::exp(log_sum / 400.0), 1e-12);
  EXPECT_EQ(chunked.second, whole.second);
}

}  // namespace
