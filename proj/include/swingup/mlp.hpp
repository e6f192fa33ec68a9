// Copyright 2026 The swingup Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "swingup/rng.hpp"

namespace swingup {

/// Dense multilayer perceptron with tanh hidden activations and a linear
/// output layer. Double precision throughout; gradients are accumulated by
/// explicit reverse-mode passes rather than an autodiff framework.
struct Mlp {
  std::vector<Eigen::MatrixXd> W;  // W[l] is (n_{l+1} x n_l)
  std::vector<Eigen::VectorXd> b;

  int num_layers() const { return static_cast<int>(W.size()); }
  int in_dim() const { return static_cast<int>(W.front().cols()); }
  int out_dim() const { return static_cast<int>(W.back().rows()); }

  std::vector<int> sizes() const {
    std::vector<int> s;
    s.push_back(in_dim());
    for (const auto& w : W) s.push_back(static_cast<int>(w.rows()));
    return s;
  }

  bool finite() const {
    for (const auto& w : W)
      if (!w.allFinite()) return false;
    for (const auto& v : b)
      if (!v.allFinite()) return false;
    return true;
  }

  /// Scaled-normal init (std 1/sqrt(fan_in)); the output layer is scaled by
  /// output_gain so a policy head can start near zero.
  static Mlp create(const std::vector<int>& layer_sizes, Rng& rng,
                    double output_gain = 1.0) {
    if (layer_sizes.size() < 2)
      throw std::invalid_argument("mlp: need at least input and output sizes");
    Mlp net;
    for (size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
      const int in = layer_sizes[l];
      const int out = layer_sizes[l + 1];
      if (in <= 0 || out <= 0)
        throw std::invalid_argument("mlp: layer sizes must be positive");
      Eigen::MatrixXd w(out, in);
      const double scale = 1.0 / std::sqrt(static_cast<double>(in));
      const double gain =
          (l + 2 == layer_sizes.size()) ? output_gain * scale : scale;
      for (int r = 0; r < out; ++r)
        for (int c = 0; c < in; ++c) w(r, c) = gain * rng.normal();
      net.W.push_back(std::move(w));
      net.b.push_back(Eigen::VectorXd::Zero(out));
    }
    return net;
  }
};

/// Per-layer activations kept from a forward pass for the backward pass.
/// h[0] is the input batch; h[l] the post-tanh activation of hidden layer l.
struct MlpCache {
  std::vector<Eigen::MatrixXd> h;
  Eigen::MatrixXd out;
};

/// Forward pass over a batch (rows are samples).
inline Eigen::MatrixXd mlp_forward(const Mlp& net, const Eigen::MatrixXd& x,
                                   MlpCache* cache = nullptr) {
  if (x.cols() != net.in_dim())
    throw std::invalid_argument("mlp: input dimension mismatch");
  if (cache) {
    cache->h.clear();
    cache->h.push_back(x);
  }
  Eigen::MatrixXd h = x;
  const int layers = net.num_layers();
  for (int l = 0; l < layers; ++l) {
    Eigen::MatrixXd z =
        (h * net.W[l].transpose()).rowwise() + net.b[l].transpose();
    if (l + 1 < layers) {
      h = z.array().tanh();
      if (cache) cache->h.push_back(h);
    } else {
      h = std::move(z);
    }
  }
  if (cache) cache->out = h;
  return h;
}

struct MlpGrad {
  std::vector<Eigen::MatrixXd> dW;
  std::vector<Eigen::VectorXd> db;

  static MlpGrad zeros_like(const Mlp& net) {
    MlpGrad g;
    for (const auto& w : net.W)
      g.dW.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    for (const auto& v : net.b)
      g.db.push_back(Eigen::VectorXd::Zero(v.size()));
    return g;
  }
};

/// Reverse-mode pass: d_out is dLoss/d(output), shape (batch x out_dim).
inline MlpGrad mlp_backward(const Mlp& net, const MlpCache& cache,
                            const Eigen::MatrixXd& d_out) {
  const int layers = net.num_layers();
  MlpGrad grad;
  grad.dW.resize(layers);
  grad.db.resize(layers);
  Eigen::MatrixXd dz = d_out;  // gradient at the linear output
  for (int l = layers - 1; l >= 0; --l) {
    grad.dW[l] = dz.transpose() * cache.h[l];
    grad.db[l] = dz.colwise().sum().transpose();
    if (l > 0) {
      const Eigen::MatrixXd dh = dz * net.W[l];
      dz = dh.array() * (1.0 - cache.h[l].array().square());
    }
  }
  return grad;
}

}  // namespace swingup
