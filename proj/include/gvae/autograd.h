// Copyright 2026 The gvae Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Reverse-mode automatic differentiation over Tensor.
//
// A Var is a handle to a graph node holding a value and (after Backward) a
// gradient. Every op records its parents and a closure that propagates the
// node's gradient into them. Graphs are freed when the last Var referencing
// them goes away; leaf Vars (parameters) survive across steps and keep
// accumulating into their grad until ZeroGrad / an optimizer step clears it.
//
// Recording is per thread and can be disabled with NoGradGuard, which is how
// inference runs concurrently over shared, immutable parameters.

#ifndef GVAE_AUTOGRAD_H_
#define GVAE_AUTOGRAD_H_

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gvae/tensor.h"

namespace gvae {

struct Node {
  Tensor value;
  Tensor grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  // Returns grad, allocating zeros of value's shape on first use.
  Tensor& GradBuffer();
};

class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool has_grad() const { return !node_->grad.empty(); }
  const Tensor& grad() const { return node_->grad; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool defined() const { return node_ != nullptr; }
  void ZeroGrad() { node_->grad = Tensor(); }

  // Seeds d(self)/d(self) = 1 (self must be a single element) and
  // propagates through the recorded graph.
  void Backward() const;

  const std::shared_ptr<Node>& node() const { return node_; }

  static Var FromNode(std::shared_ptr<Node> node) {
    Var v;
    v.node_ = std::move(node);
    return v;
  }

 private:
  std::shared_ptr<Node> node_;
};

bool GradRecordingEnabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Creates the output node of an op. When recording is enabled and any
// parent requires a gradient, the parents and backward closure are kept.
Var MakeResult(Tensor value, std::vector<Var> parents,
               std::function<void(Node&)> backward);

// ---------------------------------------------------------------------------
// Elementwise and reduction ops.

Var Add(const Var& a, const Var& b);
Var Sub(const Var& a, const Var& b);
Var Mul(const Var& a, const Var& b);
Var AddScalar(const Var& a, double s);
Var MulScalar(const Var& a, double s);
Var Exp(const Var& a);
Var Log(const Var& a);
Var Tanh(const Var& a);
Var Sigmoid(const Var& a);
Var Softplus(const Var& a);
Var Relu(const Var& a);
Var Abs(const Var& a);
Var Square(const Var& a);
Var Sum(const Var& a);
Var Mean(const Var& a);
// (mean of (a - b)^2) as a single op.
Var MeanSquaredError(const Var& a, const Var& b);

// max(x, bound). The gradient passes where x > bound, and also at the bound
// when it would push x upward under descent, so floored entries can recover.
Var LowerBound(const Var& x, double bound);

// ---------------------------------------------------------------------------
// Structural ops.

// x: N,C,H,W; v: C. Output x[n,c,h,w] * v[c].
Var MulChannel(const Var& x, const Var& v);
// m: rows x cols; returns column `col` as a length-rows vector.
Var SelectColumn(const Var& m, int64_t col);
// Channel range [begin, end) of an N,C,H,W tensor.
Var SliceChannels(const Var& x, int64_t begin, int64_t end);
// N,C,H,W -> C,1,(N*H*W): each channel's samples in a row.
Var ToChannelRows(const Var& x);

// Per-channel dense layer for the factorized density:
// h: C,Kin,M; w: C,Kout,Kin; b: C,Kout -> C,Kout,M.
Var ChannelAffine(const Var& h, const Var& w, const Var& b);
// h: C,K,M; a: C,K -> h[c,k,m] * a[c,k].
Var MulChannelRows(const Var& h, const Var& a);

// ---------------------------------------------------------------------------
// Convolution and normalization.

// input N,Cin,H,W; weight Cout,Cin,k,k; bias Cout. Zero padding.
Var Conv2d(const Var& input, const Var& weight, const Var& bias, int stride,
           int padding);
// input N,Cin,H,W; weight Cin,Cout,k,k; bias Cout.
// Output extent (H-1)*stride - 2*padding + k + output_padding.
Var ConvTranspose2d(const Var& input, const Var& weight, const Var& bias,
                    int stride, int padding, int output_padding);
// Divisive normalization over channels at each spatial position:
// y_i = x_i * (beta_i + sum_j gamma_ij x_j^2)^(-1/2), or ^(+1/2) if inverse.
// beta: C (positive); gamma: C,C (non-negative).
Var Gdn(const Var& input, const Var& beta, const Var& gamma, bool inverse);

}  // namespace gvae

#endif  // GVAE_AUTOGRAD_H_
