#pragma once

// Affine and multilayer-perceptron encoders with exact reverse-mode
// gradients. Rows of the input matrix are samples.

#include <cmath>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "ldreg/error.hpp"
#include "ldreg/matrix.hpp"
#include "ldreg/numerics.hpp"

namespace ldreg::ssl {

enum class Activation { relu, tanh };

inline std::string_view to_string(Activation a) noexcept {
  return a == Activation::relu ? "relu" : "tanh";
}

/// z = W x + b with W of shape out x in.
struct LinearEncoder {
  Matrix weight;
  std::vector<double> bias;

  std::size_t in_dim() const noexcept { return weight.cols(); }
  std::size_t out_dim() const noexcept { return weight.rows(); }

  static LinearEncoder zeros(std::size_t in, std::size_t out) {
    return {Matrix(out, in), std::vector<double>(out, 0.0)};
  }

  static LinearEncoder identity(std::size_t dim) {
    return {Matrix::identity(dim), std::vector<double>(dim, 0.0)};
  }

  /// Gaussian weights with standard deviation gain / sqrt(in), zero bias.
  static LinearEncoder random(std::size_t in, std::size_t out, Rng& rng, double gain = 1.0) {
    LinearEncoder e = zeros(in, out);
    const double scale = gain / std::sqrt(static_cast<double>(in));
    for (double& w : e.weight.data()) w = scale * rng.gaussian();
    return e;
  }

  friend bool operator==(const LinearEncoder&, const LinearEncoder&) = default;
};

struct MlpEncoder {
  std::vector<LinearEncoder> layers;
  Activation activation = Activation::relu;

  std::size_t in_dim() const { return layers.front().in_dim(); }
  std::size_t out_dim() const { return layers.back().out_dim(); }

  /// Widths {in, h1, ..., out}; He-style init for relu, Glorot-style for tanh.
  static MlpEncoder random(std::span<const std::size_t> widths, Activation act, Rng& rng) {
    if (widths.size() < 2) throw UsageError("MLP needs at least input and output widths");
    MlpEncoder m;
    m.activation = act;
    const double gain = act == Activation::relu ? std::sqrt(2.0) : 1.0;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
      if (widths[l] == 0 || widths[l + 1] == 0) throw UsageError("MLP widths must be positive");
      m.layers.push_back(LinearEncoder::random(widths[l], widths[l + 1], rng, gain));
    }
    return m;
  }

  friend bool operator==(const MlpEncoder&, const MlpEncoder&) = default;
};

inline Matrix encoder_forward(const LinearEncoder& enc, const Matrix& x) {
  if (x.cols() != enc.in_dim())
    throw UsageError("encoder input width " + std::to_string(x.cols()) + " != " +
                     std::to_string(enc.in_dim()));
  Matrix z(x.rows(), enc.out_dim());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto xi = x.row(i);
    auto zi = z.row(i);
    for (std::size_t o = 0; o < enc.out_dim(); ++o) {
      const auto wo = enc.weight.row(o);
      double acc = enc.bias[o];
      for (std::size_t d = 0; d < xi.size(); ++d) acc += wo[d] * xi[d];
      zi[o] = acc;
    }
  }
  return z;
}

namespace detail {

inline double activate(Activation a, double v) noexcept {
  return a == Activation::relu ? (v > 0.0 ? v : 0.0) : std::tanh(v);
}

/// Derivative expressed through the pre-activation.
inline double activate_grad(Activation a, double pre) noexcept {
  if (a == Activation::relu) return pre > 0.0 ? 1.0 : 0.0;
  const double t = std::tanh(pre);
  return 1.0 - t * t;
}

}  // namespace detail

/// Forward pass keeping every layer's input and pre-activation.
struct MlpTape {
  std::vector<Matrix> inputs;  // input to layer l
  std::vector<Matrix> pre;     // affine output of layer l
  Matrix output;
};

inline MlpTape mlp_forward_tape(const MlpEncoder& enc, const Matrix& x) {
  if (enc.layers.empty()) throw UsageError("MLP has no layers");
  MlpTape tape;
  Matrix h = x;
  for (std::size_t l = 0; l < enc.layers.size(); ++l) {
    tape.inputs.push_back(h);
    Matrix a = encoder_forward(enc.layers[l], h);
    tape.pre.push_back(a);
    if (l + 1 < enc.layers.size())
      for (double& v : a.data()) v = detail::activate(enc.activation, v);
    h = std::move(a);
  }
  tape.output = std::move(h);
  return tape;
}

inline Matrix encoder_forward(const MlpEncoder& enc, const Matrix& x) {
  return mlp_forward_tape(enc, x).output;
}

template <typename Params>
struct EncoderGrads {
  Params params;
  Matrix input;
};

inline EncoderGrads<LinearEncoder> encoder_backward(const LinearEncoder& enc, const Matrix& x,
                                                    const Matrix& upstream) {
  if (x.cols() != enc.in_dim() || upstream.rows() != x.rows() || upstream.cols() != enc.out_dim())
    throw UsageError("encoder_backward: shape mismatch");
  EncoderGrads<LinearEncoder> g{LinearEncoder::zeros(enc.in_dim(), enc.out_dim()),
                                Matrix(x.rows(), x.cols())};
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto xi = x.row(i);
    const auto gi = upstream.row(i);
    auto dxi = g.input.row(i);
    for (std::size_t o = 0; o < enc.out_dim(); ++o) {
      const double go = gi[o];
      if (go == 0.0) continue;
      g.params.bias[o] += go;
      auto dwo = g.params.weight.row(o);
      const auto wo = enc.weight.row(o);
      for (std::size_t d = 0; d < xi.size(); ++d) {
        dwo[d] += go * xi[d];
        dxi[d] += go * wo[d];
      }
    }
  }
  return g;
}

inline EncoderGrads<MlpEncoder> encoder_backward(const MlpEncoder& enc, const Matrix& x,
                                                 const Matrix& upstream) {
  const MlpTape tape = mlp_forward_tape(enc, x);
  if (!upstream.same_shape(tape.output)) throw UsageError("encoder_backward: shape mismatch");
  EncoderGrads<MlpEncoder> g;
  g.params.activation = enc.activation;
  g.params.layers.resize(enc.layers.size());
  Matrix delta = upstream;
  for (std::size_t l = enc.layers.size(); l-- > 0;) {
    if (l + 1 < enc.layers.size()) {
      const Matrix& pre = tape.pre[l];
      for (std::size_t i = 0; i < delta.size(); ++i)
        delta.data()[i] *= detail::activate_grad(enc.activation, pre.data()[i]);
    }
    auto lg = encoder_backward(enc.layers[l], tape.inputs[l], delta);
    g.params.layers[l] = std::move(lg.params);
    delta = std::move(lg.input);
  }
  g.input = std::move(delta);
  return g;
}

/// Flat views of every trainable array, in a fixed order.
inline std::vector<std::span<double>> parameters(LinearEncoder& e) {
  return {e.weight.data(), std::span<double>(e.bias)};
}

inline std::vector<std::span<double>> parameters(MlpEncoder& e) {
  std::vector<std::span<double>> out;
  for (auto& l : e.layers) {
    out.push_back(l.weight.data());
    out.push_back(std::span<double>(l.bias));
  }
  return out;
}

}  // namespace ldreg::ssl
