#pragma once

// Training loops: target-LID fitting of a linear layer on 2-D points, and a
// toy contrastive setup (MLP encoder, NT-Xent, optional LID regularizer on
// the encoder output). Both run single-threaded and are bit-reproducible
// for a fixed seed.

#include <cstddef>
#include <cstdint>
#include <algorithm>
#include <numeric>
#include <tuple>
#include <utility>
#include <string>
#include <vector>

#include "ldreg/diagnostics.hpp"
#include "ldreg/error.hpp"
#include "ldreg/lidest.hpp"
#include "ldreg/matrix.hpp"
#include "ldreg/numerics.hpp"
#include "ldreg/regularizers.hpp"
#include "ldreg/ssl/encoder.hpp"
#include "ldreg/ssl/ntxent.hpp"
#include "ldreg/ssl/optim.hpp"
#include "ldreg/ssl/synthetic.hpp"

namespace ldreg::ssl {

struct TrainConfig {
  std::size_t epochs = 200;
  /// Embedding rows per minibatch (an even number: batch/2 positive pairs).
  std::size_t batch_size = 256;
  OptimizerConfig optimizer{OptimizerKind::adam, 1e-3};
  std::uint64_t seed = 0;
  double tau = 0.1;
  RegularizerConfig reg{};
  /// Encoder widths {in, hidden..., out}.
  std::vector<std::size_t> widths{16, 64, 32};
  Activation activation = Activation::relu;
  double view_noise = 0.1;
  /// Target-LID only: when positive, the linear layer starts as
  /// diag(1, a, ..., a) instead of gaussian weights.
  double init_anisotropy = 0.0;

  /// Defaults for the 2-D target-LID experiment.
  static TrainConfig target_lid_defaults(double target) {
    TrainConfig c;
    c.epochs = 300;
    c.optimizer = {OptimizerKind::adam, 2e-3};
    c.reg.kind = RegKind::target_lid;
    c.reg.beta = 1.0;
    c.reg.k = 32;
    c.reg.target_id = target;
    c.reg.estimator_mode = MomMode::text;
    c.reg.degenerate_policy = DegeneratePolicy::clamp;
    c.reg.detach_reference = false;
    c.widths = {2, 2};
    c.init_anisotropy = 0.01;
    return c;
  }

  /// Defaults for the toy contrastive experiment. At tau = 0.1 the
  /// NT-Xent penalty for squeezing 32-wide embeddings onto a curve is
  /// several nats, far more than a unit-weight LID term can recover, so
  /// the regularizer never wins; tau = 1 keeps the two on a similar scale.
  static TrainConfig ssl_defaults() {
    TrainConfig c;
    c.tau = 1.0;
    c.reg.k = 64;
    c.reg.degenerate_policy = DegeneratePolicy::clamp;
    c.reg.detach_reference = false;
    return c;
  }
};

struct TrainRecord {
  std::size_t epoch = 0;
  double ssl_loss = 0.0;
  double reg_loss = 0.0;
  double mlid = 0.0;
  double erank = 0.0;

  friend bool operator==(const TrainRecord&, const TrainRecord&) = default;
};

struct TrainTrace {
  std::vector<TrainRecord> records;

  friend bool operator==(const TrainTrace&, const TrainTrace&) = default;
};

template <typename Encoder>
struct TrainResult {
  Encoder encoder;
  TrainTrace trace;
  /// Geometric-mean LID and effective rank of the trained representation.
  double final_mlid = 0.0;
  double final_erank = 0.0;
};

namespace detail {

template <typename Encoder>
void apply_step(Optimizer& opt, Encoder& enc, EncoderGrads<Encoder>& grads) {
  opt.step(parameters(enc), parameters(grads.params));
}

/// Axis-aligned linear layer diag(1, a, ..., a), zero bias.
inline LinearEncoder anisotropic_linear(std::size_t in, std::size_t out, double a) {
  LinearEncoder e = LinearEncoder::zeros(in, out);
  for (std::size_t i = 0; i < std::min(in, out); ++i) e.weight(i, i) = i == 0 ? 1.0 : a;
  return e;
}

/// Geometric-mean LID (clamped) and effective rank of a representation.
/// LIDs are estimated within consecutive chunks of about `chunk_rows` rows,
/// the neighbourhood scale the regularizer sees during training; the
/// effective rank is global.
inline std::pair<double, double> measure(const Matrix& z, std::size_t k, MomMode mode,
                                         std::size_t chunk_rows) {
  const std::size_t n = z.rows();
  const std::size_t chunks = chunk_rows >= n ? 1 : n / chunk_rows;
  double log_sum = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t lo = c * n / chunks;
    const std::size_t hi = (c + 1) * n / chunks;
    std::vector<std::size_t> idx(hi - lo);
    std::iota(idx.begin(), idx.end(), lo);
    const Matrix part = chunks == 1 ? z : select_rows(z, idx);
    const auto lids = batch_lids(part, k, estimator_for(mode), DegeneratePolicy::clamp);
    for (double v : lids.values) log_sum += std::log(v);
  }
  return {std::exp(log_sum / static_cast<double>(n)), effective_rank(z)};
}

}  // namespace detail

/// Full-batch gradient descent of beta * target-LID loss on a linear layer.
/// Trace record e holds the state seen by the forward pass of epoch e.
///
/// A linear image of uniform 2-D data keeps local dimension close to 2
/// unless the map is nearly singular at the neighbourhood scale, so the loss
/// is flat around a generic random init. init_anisotropy starts the layer
/// inside the band where LID responds to the weights.
inline TrainResult<LinearEncoder> train_target_lid(const Matrix& data, double target,
                                                   TrainConfig cfg) {
  if (cfg.reg.kind != RegKind::target_lid)
    throw UsageError("train_target_lid requires the target-LID regularizer");
  cfg.reg.target_id = target;
  cfg.reg.validate();
  check_batch_shape(data, cfg.reg.k);
  const std::size_t out_dim = cfg.widths.empty() ? data.cols() : cfg.widths.back();

  if (cfg.init_anisotropy < 0.0) throw UsageError("init_anisotropy must be >= 0");
  Rng init(derive_seed(cfg.seed, 0));
  TrainResult<LinearEncoder> res{
      cfg.init_anisotropy > 0.0
          ? detail::anisotropic_linear(data.cols(), out_dim, cfg.init_anisotropy)
          : LinearEncoder::random(data.cols(), out_dim, init),
      {}, 0.0, 0.0};
  Optimizer opt(cfg.optimizer);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    try {
      const Matrix z = encoder_forward(res.encoder, data);
      const auto reg = reg_evaluate(z, cfg.reg);
      TrainRecord rec{epoch, 0.0, reg.value.loss, aggregate(reg.lids, MeanKind::geometric),
                      effective_rank(z)};
      res.trace.records.push_back(rec);
      Matrix upstream = reg.value.grad;
      upstream *= cfg.reg.beta;
      auto grads = encoder_backward(res.encoder, data, upstream);
      detail::apply_step(opt, res.encoder, grads);
    } catch (const NumericError& e) {
      throw TrainingError(epoch, e);
    }
  }
  const Matrix z = encoder_forward(res.encoder, data);
  std::tie(res.final_mlid, res.final_erank) =
      detail::measure(z, cfg.reg.k, cfg.reg.estimator_mode, data.rows());
  return res;
}

/// Minibatch NT-Xent (+ beta * regularizer on the encoder output) training
/// of an MLP. Fresh paired views of `base` are drawn every epoch. Trace
/// metrics are measured on the encoded base set after each epoch.
inline TrainResult<MlpEncoder> train_ssl_toy(const Matrix& base, TrainConfig cfg) {
  cfg.reg.validate();
  const bool reg_active = cfg.reg.kind != RegKind::none;
  if (cfg.batch_size < 4 || cfg.batch_size % 2 != 0)
    throw UsageError("batch size must be an even number >= 4");
  if (reg_active && cfg.batch_size < cfg.reg.k + 2)
    throw UsageError("batch size must be at least k+2 when a regularizer is active");
  if (cfg.widths.empty() || cfg.widths.front() != base.cols())
    throw UsageError("encoder input width must match the data width");
  if (!(cfg.tau > 0.0)) throw UsageError("tau must be positive");
  if (base.rows() < cfg.reg.k + 2) throw UsageError("base set too small for k");

  Rng init(derive_seed(cfg.seed, 0));
  TrainResult<MlpEncoder> res{MlpEncoder::random(cfg.widths, cfg.activation, init), {}, 0.0, 0.0};
  Optimizer opt(cfg.optimizer);
  const std::size_t pairs_per_batch = cfg.batch_size / 2;
  const std::size_t min_pairs = reg_active ? (cfg.reg.k + 3) / 2 : 2;

  std::vector<std::size_t> order(base.rows());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    try {
      const Matrix views = gen_paired_views(base, cfg.view_noise, derive_seed(cfg.seed, 2 * epoch + 1));
      std::iota(order.begin(), order.end(), std::size_t{0});
      Rng shuffler(derive_seed(cfg.seed, 2 * epoch + 2));
      shuffler.shuffle(order);

      double ssl_sum = 0.0;
      double reg_sum = 0.0;
      std::size_t batches = 0;
      for (std::size_t start = 0; start < order.size(); start += pairs_per_batch) {
        const std::size_t count = std::min(pairs_per_batch, order.size() - start);
        if (count < min_pairs) break;
        Matrix batch(2 * count, base.cols());
        for (std::size_t p = 0; p < count; ++p)
          for (std::size_t v = 0; v < 2; ++v) {
            const auto src = views.row(2 * order[start + p] + v);
            std::copy(src.begin(), src.end(), batch.row(2 * p + v).begin());
          }
        const Matrix z = encoder_forward(res.encoder, batch);
        const LossAndGrad ssl = ntxent_loss(z, cfg.tau);
        const LossAndGrad reg = reg_loss_and_grad(z, cfg.reg);
        const LossAndGrad total = total_loss(ssl, reg, cfg.reg.beta);
        auto grads = encoder_backward(res.encoder, batch, total.grad);
        detail::apply_step(opt, res.encoder, grads);
        ssl_sum += ssl.loss;
        reg_sum += reg.loss;
        ++batches;
      }
      const Matrix z = encoder_forward(res.encoder, base);
      const auto [mlid, erank] =
          detail::measure(z, cfg.reg.k, cfg.reg.estimator_mode, cfg.batch_size);
      res.trace.records.push_back({epoch, ssl_sum / static_cast<double>(batches),
                                   reg_sum / static_cast<double>(batches), mlid, erank});
    } catch (const NumericError& e) {
      throw TrainingError(epoch, e);
    }
  }
  if (res.trace.records.empty()) {
    const auto [mlid, erank] =
        detail::measure(encoder_forward(res.encoder, base), cfg.reg.k, cfg.reg.estimator_mode,
                        cfg.batch_size);
    res.final_mlid = mlid;
    res.final_erank = erank;
  } else {
    res.final_mlid = res.trace.records.back().mlid;
    res.final_erank = res.trace.records.back().erank;
  }
  return res;
}

}  // namespace ldreg::ssl
