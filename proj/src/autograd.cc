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

#include "gvae/autograd.h"

#include <Eigen/Core>
#include <cmath>
#include <unordered_set>
#include <utility>

#include "gvae/error.h"

namespace gvae {
namespace {

thread_local bool g_recording = true;

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

void CheckSameShape(const Var& a, const Var& b, const char* op) {
  GVAE_CHECK(a.shape() == b.shape(), ErrorCode::kShape,
             std::string(op) + ": " + ShapeString(a.shape()) + " vs " +
                 ShapeString(b.shape()));
}

// Elementwise op y = f(x) with dy/dx = df(x, y).
template <typename F, typename DF>
Var Unary(const Var& a, F f, DF df) {
  Tensor out(a.shape());
  const Tensor& x = a.value();
  for (int64_t i = 0; i < x.numel(); ++i) out[i] = f(x[i]);
  auto pa = a.node();
  return MakeResult(std::move(out), {a}, [pa, df](Node& self) {
    if (!pa->requires_grad) return;
    Tensor& g = pa->GradBuffer();
    const Tensor& x = pa->value;
    for (int64_t i = 0; i < x.numel(); ++i) {
      g[i] += self.grad[i] * df(x[i], self.value[i]);
    }
  });
}

void Im2Col(const double* img, int64_t channels, int64_t height, int64_t width,
            int k, int stride, int pad, int64_t out_h, int64_t out_w,
            double* cols) {
  const int64_t plane = out_h * out_w;
  for (int64_t c = 0; c < channels; ++c) {
    const double* src = img + c * height * width;
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        double* dst = cols + ((c * k + ki) * k + kj) * plane;
        for (int64_t oh = 0; oh < out_h; ++oh) {
          const int64_t ih = oh * stride - pad + ki;
          if (ih < 0 || ih >= height) {
            for (int64_t ow = 0; ow < out_w; ++ow) dst[oh * out_w + ow] = 0.0;
            continue;
          }
          for (int64_t ow = 0; ow < out_w; ++ow) {
            const int64_t iw = ow * stride - pad + kj;
            dst[oh * out_w + ow] =
                (iw >= 0 && iw < width) ? src[ih * width + iw] : 0.0;
          }
        }
      }
    }
  }
}

void Col2Im(const double* cols, int64_t channels, int64_t height,
            int64_t width, int k, int stride, int pad, int64_t out_h,
            int64_t out_w, double* img) {
  const int64_t plane = out_h * out_w;
  for (int64_t c = 0; c < channels; ++c) {
    double* dst = img + c * height * width;
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        const double* src = cols + ((c * k + ki) * k + kj) * plane;
        for (int64_t oh = 0; oh < out_h; ++oh) {
          const int64_t ih = oh * stride - pad + ki;
          if (ih < 0 || ih >= height) continue;
          for (int64_t ow = 0; ow < out_w; ++ow) {
            const int64_t iw = ow * stride - pad + kj;
            if (iw >= 0 && iw < width) dst[ih * width + iw] += src[oh * out_w + ow];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor& Node::GradBuffer() {
  if (grad.empty() && !value.empty()) grad = Tensor(value.shape());
  return grad;
}

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

void Var::Backward() const {
  GVAE_CHECK(node_ && node_->value.numel() == 1, ErrorCode::kShape,
             "Backward() needs a single-element output");
  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* p = n->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  node_->GradBuffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
}

bool GradRecordingEnabled() { return g_recording; }

NoGradGuard::NoGradGuard() : previous_(g_recording) { g_recording = false; }
NoGradGuard::~NoGradGuard() { g_recording = previous_; }

Var MakeResult(Tensor value, std::vector<Var> parents,
               std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (g_recording) {
    for (const Var& p : parents) {
      if (p.requires_grad()) {
        node->requires_grad = true;
        break;
      }
    }
  }
  if (node->requires_grad) {
    node->parents.reserve(parents.size());
    for (const Var& p : parents) node->parents.push_back(p.node());
    node->backward = std::move(backward);
  }
  return Var::FromNode(std::move(node));
}

Var Add(const Var& a, const Var& b) {
  CheckSameShape(a, b, "Add");
  Tensor out = a.value();
  AddInPlace(out, b.value());
  auto pa = a.node(), pb = b.node();
  return MakeResult(std::move(out), {a, b}, [pa, pb](Node& self) {
    if (pa->requires_grad) AddInPlace(pa->GradBuffer(), self.grad);
    if (pb->requires_grad) AddInPlace(pb->GradBuffer(), self.grad);
  });
}

Var Sub(const Var& a, const Var& b) {
  CheckSameShape(a, b, "Sub");
  Tensor out = a.value();
  for (int64_t i = 0; i < out.numel(); ++i) out[i] -= b.value()[i];
  auto pa = a.node(), pb = b.node();
  return MakeResult(std::move(out), {a, b}, [pa, pb](Node& self) {
    if (pa->requires_grad) AddInPlace(pa->GradBuffer(), self.grad);
    if (pb->requires_grad) {
      Tensor& g = pb->GradBuffer();
      for (int64_t i = 0; i < g.numel(); ++i) g[i] -= self.grad[i];
    }
  });
}

Var Mul(const Var& a, const Var& b) {
  CheckSameShape(a, b, "Mul");
  Tensor out = a.value();
  for (int64_t i = 0; i < out.numel(); ++i) out[i] *= b.value()[i];
  auto pa = a.node(), pb = b.node();
  return MakeResult(std::move(out), {a, b}, [pa, pb](Node& self) {
    if (pa->requires_grad) {
      Tensor& g = pa->GradBuffer();
      for (int64_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i] * pb->value[i];
    }
    if (pb->requires_grad) {
      Tensor& g = pb->GradBuffer();
      for (int64_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i] * pa->value[i];
    }
  });
}

Var AddScalar(const Var& a, double s) {
  return Unary(a, [s](double x) { return x + s; },
               [](double, double) { return 1.0; });
}

Var MulScalar(const Var& a, double s) {
  return Unary(a, [s](double x) { return x * s; },
               [s](double, double) { return s; });
}

Var Exp(const Var& a) {
  return Unary(a, [](double x) { return std::exp(x); },
               [](double, double y) { return y; });
}

Var Log(const Var& a) {
  for (double x : a.value().data()) {
    GVAE_CHECK(x > 0.0, ErrorCode::kDomain, "Log of non-positive value");
  }
  return Unary(a, [](double x) { return std::log(x); },
               [](double x, double) { return 1.0 / x; });
}

Var Tanh(const Var& a) {
  return Unary(a, [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Var Sigmoid(const Var& a) {
  return Unary(
      a,
      [](double x) {
        return x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                      : std::exp(x) / (1.0 + std::exp(x));
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var Softplus(const Var& a) {
  return Unary(
      a,
      [](double x) {
        return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
      },
      [](double x, double) {
        return x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                      : std::exp(x) / (1.0 + std::exp(x));
      });
}

Var Relu(const Var& a) {
  return Unary(a, [](double x) { return x > 0 ? x : 0.0; },
               [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var Abs(const Var& a) {
  return Unary(a, [](double x) { return std::fabs(x); },
               [](double x, double) {
                 return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0);
               });
}

Var Square(const Var& a) {
  return Unary(a, [](double x) { return x * x; },
               [](double x, double) { return 2.0 * x; });
}

Var Sum(const Var& a) {
  double s = 0.0;
  for (double x : a.value().data()) s += x;
  auto pa = a.node();
  return MakeResult(Tensor::Scalar(s), {a}, [pa](Node& self) {
    Tensor& g = pa->GradBuffer();
    const double up = self.grad[0];
    for (int64_t i = 0; i < g.numel(); ++i) g[i] += up;
  });
}

Var Mean(const Var& a) {
  GVAE_CHECK(a.value().numel() > 0, ErrorCode::kShape, "Mean of empty tensor");
  return MulScalar(Sum(a), 1.0 / static_cast<double>(a.value().numel()));
}

Var MeanSquaredError(const Var& a, const Var& b) {
  CheckSameShape(a, b, "MeanSquaredError");
  const int64_t n = a.value().numel();
  GVAE_CHECK(n > 0, ErrorCode::kShape, "MeanSquaredError of empty tensor");
  double s = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const double d = a.value()[i] - b.value()[i];
    s += d * d;
  }
  auto pa = a.node(), pb = b.node();
  return MakeResult(
      Tensor::Scalar(s / static_cast<double>(n)), {a, b},
      [pa, pb, n](Node& self) {
        const double scale = 2.0 * self.grad[0] / static_cast<double>(n);
        for (int64_t i = 0; i < n; ++i) {
          const double d = scale * (pa->value[i] - pb->value[i]);
          if (pa->requires_grad) pa->GradBuffer()[i] += d;
          if (pb->requires_grad) pb->GradBuffer()[i] -= d;
        }
      });
}

Var LowerBound(const Var& x, double bound) {
  Tensor out = x.value();
  for (double& v : out.data()) v = v > bound ? v : bound;
  auto px = x.node();
  return MakeResult(std::move(out), {x}, [px, bound](Node& self) {
    Tensor& g = px->GradBuffer();
    for (int64_t i = 0; i < g.numel(); ++i) {
      const double up = self.grad[i];
      if (px->value[i] > bound || up < 0.0) g[i] += up;
    }
  });
}

Var MulChannel(const Var& x, const Var& v) {
  const Shape& s = x.shape();
  GVAE_CHECK(s.size() == 4, ErrorCode::kShape,
             "MulChannel expects N,C,H,W input, got " + ShapeString(s));
  GVAE_CHECK(v.shape().size() == 1 && v.shape()[0] == s[1], ErrorCode::kShape,
             "MulChannel: gain length " + ShapeString(v.shape()) +
                 " does not match channels of " + ShapeString(s));
  const int64_t n = s[0], c = s[1], plane = s[2] * s[3];
  Tensor out = x.value();
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t ch = 0; ch < c; ++ch) {
      double* p = out.ptr() + (i * c + ch) * plane;
      const double g = v.value()[ch];
      for (int64_t k = 0; k < plane; ++k) p[k] *= g;
    }
  }
  auto px = x.node(), pv = v.node();
  return MakeResult(std::move(out), {x, v}, [px, pv, n, c, plane](Node& self) {
    for (int64_t i = 0; i < n; ++i) {
      for (int64_t ch = 0; ch < c; ++ch) {
        const int64_t off = (i * c + ch) * plane;
        const double* up = self.grad.ptr() + off;
        if (px->requires_grad) {
          double* g = px->GradBuffer().ptr() + off;
          const double gain = pv->value[ch];
          for (int64_t k = 0; k < plane; ++k) g[k] += up[k] * gain;
        }
        if (pv->requires_grad) {
          const double* xv = px->value.ptr() + off;
          double acc = 0.0;
          for (int64_t k = 0; k < plane; ++k) acc += up[k] * xv[k];
          pv->GradBuffer()[ch] += acc;
        }
      }
    }
  });
}

Var SelectColumn(const Var& m, int64_t col) {
  const Shape& s = m.shape();
  GVAE_CHECK(s.size() == 2, ErrorCode::kShape,
             "SelectColumn expects a matrix, got " + ShapeString(s));
  GVAE_CHECK(col >= 0 && col < s[1], ErrorCode::kIndex,
             "column " + std::to_string(col) + " out of range for " +
                 ShapeString(s));
  const int64_t rows = s[0], cols = s[1];
  Tensor out(Shape{rows});
  for (int64_t r = 0; r < rows; ++r) out[r] = m.value()[r * cols + col];
  auto pm = m.node();
  return MakeResult(std::move(out), {m}, [pm, rows, cols, col](Node& self) {
    Tensor& g = pm->GradBuffer();
    for (int64_t r = 0; r < rows; ++r) g[r * cols + col] += self.grad[r];
  });
}

Var SliceChannels(const Var& x, int64_t begin, int64_t end) {
  const Shape& s = x.shape();
  GVAE_CHECK(s.size() == 4 && begin >= 0 && begin < end && end <= s[1],
             ErrorCode::kShape,
             "SliceChannels [" + std::to_string(begin) + "," +
                 std::to_string(end) + ") of " + ShapeString(s));
  const int64_t n = s[0], c = s[1], plane = s[2] * s[3], oc = end - begin;
  Tensor out(Shape{n, oc, s[2], s[3]});
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t ch = 0; ch < oc; ++ch) {
      const double* src = x.value().ptr() + (i * c + begin + ch) * plane;
      std::copy(src, src + plane, out.ptr() + (i * oc + ch) * plane);
    }
  }
  auto px = x.node();
  return MakeResult(std::move(out), {x},
                    [px, n, c, oc, plane, begin](Node& self) {
                      Tensor& g = px->GradBuffer();
                      for (int64_t i = 0; i < n; ++i) {
                        for (int64_t ch = 0; ch < oc; ++ch) {
                          const double* up =
                              self.grad.ptr() + (i * oc + ch) * plane;
                          double* dst = g.ptr() + (i * c + begin + ch) * plane;
                          for (int64_t k = 0; k < plane; ++k) dst[k] += up[k];
                        }
                      }
                    });
}

Var ToChannelRows(const Var& x) {
  const Shape& s = x.shape();
  GVAE_CHECK(s.size() == 4, ErrorCode::kShape,
             "ToChannelRows expects N,C,H,W, got " + ShapeString(s));
  const int64_t n = s[0], c = s[1], plane = s[2] * s[3];
  Tensor out(Shape{c, 1, n * plane});
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t ch = 0; ch < c; ++ch) {
      const double* src = x.value().ptr() + (i * c + ch) * plane;
      std::copy(src, src + plane, out.ptr() + ch * n * plane + i * plane);
    }
  }
  auto px = x.node();
  return MakeResult(std::move(out), {x}, [px, n, c, plane](Node& self) {
    Tensor& g = px->GradBuffer();
    for (int64_t i = 0; i < n; ++i) {
      for (int64_t ch = 0; ch < c; ++ch) {
        const double* up = self.grad.ptr() + ch * n * plane + i * plane;
        double* dst = g.ptr() + (i * c + ch) * plane;
        for (int64_t k = 0; k < plane; ++k) dst[k] += up[k];
      }
    }
  });
}

Var ChannelAffine(const Var& h, const Var& w, const Var& b) {
  const Shape& hs = h.shape();
  const Shape& ws = w.shape();
  GVAE_CHECK(hs.size() == 3 && ws.size() == 3 && ws[0] == hs[0] &&
                 ws[2] == hs[1] && b.shape() == Shape({ws[0], ws[1]}),
             ErrorCode::kShape,
             "ChannelAffine h" + ShapeString(hs) + " w" + ShapeString(ws) +
                 " b" + ShapeString(b.shape()));
  const int64_t c = hs[0], kin = hs[1], m = hs[2], kout = ws[1];
  Tensor out(Shape{c, kout, m});
  for (int64_t ch = 0; ch < c; ++ch) {
    for (int64_t o = 0; o < kout; ++o) {
      double* dst = out.ptr() + (ch * kout + o) * m;
      const double bias = b.value()[ch * kout + o];
      for (int64_t j = 0; j < m; ++j) dst[j] = bias;
      for (int64_t i = 0; i < kin; ++i) {
        const double wv = w.value()[(ch * kout + o) * kin + i];
        const double* src = h.value().ptr() + (ch * kin + i) * m;
        for (int64_t j = 0; j < m; ++j) dst[j] += wv * src[j];
      }
    }
  }
  auto ph = h.node(), pw = w.node(), pb = b.node();
  return MakeResult(
      std::move(out), {h, w, b}, [ph, pw, pb, c, kin, kout, m](Node& self) {
        for (int64_t ch = 0; ch < c; ++ch) {
          for (int64_t o = 0; o < kout; ++o) {
            const double* up = self.grad.ptr() + (ch * kout + o) * m;
            if (pb->requires_grad) {
              double acc = 0.0;
              for (int64_t j = 0; j < m; ++j) acc += up[j];
              pb->GradBuffer()[ch * kout + o] += acc;
            }
            for (int64_t i = 0; i < kin; ++i) {
              const int64_t widx = (ch * kout + o) * kin + i;
              const double* src = ph->value.ptr() + (ch * kin + i) * m;
              if (pw->requires_grad) {
                double acc = 0.0;
                for (int64_t j = 0; j < m; ++j) acc += up[j] * src[j];
                pw->GradBuffer()[widx] += acc;
              }
              if (ph->requires_grad) {
                double* g = ph->GradBuffer().ptr() + (ch * kin + i) * m;
                const double wv = pw->value[widx];
                for (int64_t j = 0; j < m; ++j) g[j] += wv * up[j];
              }
            }
          }
        }
      });
}

Var MulChannelRows(const Var& h, const Var& a) {
  const Shape& hs = h.shape();
  GVAE_CHECK(hs.size() == 3 && a.shape() == Shape({hs[0], hs[1]}),
             ErrorCode::kShape,
             "MulChannelRows h" + ShapeString(hs) + " a" +
                 ShapeString(a.shape()));
  const int64_t rows = hs[0] * hs[1], m = hs[2];
  Tensor out = h.value();
  for (int64_t r = 0; r < rows; ++r) {
    for (int64_t j = 0; j < m; ++j) out[r * m + j] *= a.value()[r];
  }
  auto ph = h.node(), pa = a.node();
  return MakeResult(std::move(out), {h, a}, [ph, pa, rows, m](Node& self) {
    for (int64_t r = 0; r < rows; ++r) {
      const double* up = self.grad.ptr() + r * m;
      if (ph->requires_grad) {
        double* g = ph->GradBuffer().ptr() + r * m;
        for (int64_t j = 0; j < m; ++j) g[j] += up[j] * pa->value[r];
      }
      if (pa->requires_grad) {
        const double* src = ph->value.ptr() + r * m;
        double acc = 0.0;
        for (int64_t j = 0; j < m; ++j) acc += up[j] * src[j];
        pa->GradBuffer()[r] += acc;
      }
    }
  });
}

Var Conv2d(const Var& input, const Var& weight, const Var& bias, int stride,
           int padding) {
  const Shape& is = input.shape();
  const Shape& ws = weight.shape();
  GVAE_CHECK(is.size() == 4 && ws.size() == 4 && ws[2] == ws[3],
             ErrorCode::kShape,
             "Conv2d input" + ShapeString(is) + " weight" + ShapeString(ws));
  GVAE_CHECK(ws[1] == is[1], ErrorCode::kShape,
             "Conv2d: input has " + std::to_string(is[1]) +
                 " channels, weight" + ShapeString(ws) + " expects " +
                 std::to_string(ws[1]));
  GVAE_CHECK(bias.shape() == Shape({ws[0]}), ErrorCode::kShape,
             "Conv2d bias" + ShapeString(bias.shape()));
  GVAE_CHECK(stride >= 1 && padding >= 0, ErrorCode::kInvalidArgument,
             "Conv2d stride/padding");
  const int64_t n = is[0], cin = is[1], h = is[2], w = is[3];
  const int64_t cout = ws[0];
  const int k = static_cast<int>(ws[2]);
  const int64_t ho = (h + 2 * padding - k) / stride + 1;
  const int64_t wo = (w + 2 * padding - k) / stride + 1;
  GVAE_CHECK(h + 2 * padding >= k && w + 2 * padding >= k && ho > 0 && wo > 0,
             ErrorCode::kShape,
             "Conv2d output extent not positive for input" + ShapeString(is));
  const int64_t kk = cin * k * k, plane = ho * wo;

  auto cols = std::make_shared<std::vector<double>>(
      static_cast<size_t>(n * kk * plane));
  Tensor out(Shape{n, cout, ho, wo});
  ConstMatMap wm(weight.value().ptr(), cout, kk);
  for (int64_t i = 0; i < n; ++i) {
    double* col = cols->data() + i * kk * plane;
    Im2Col(input.value().ptr() + i * cin * h * w, cin, h, w, k, stride,
           padding, ho, wo, col);
    MatMap y(out.ptr() + i * cout * plane, cout, plane);
    y.noalias() = wm * ConstMatMap(col, kk, plane);
    for (int64_t c = 0; c < cout; ++c) y.row(c).array() += bias.value()[c];
  }
  auto pin = input.node(), pw = weight.node(), pb = bias.node();
  return MakeResult(
      std::move(out), {input, weight, bias},
      [=](Node& self) {
        ConstMatMap wm(pw->value.ptr(), cout, kk);
        std::vector<double> dcol(static_cast<size_t>(kk * plane));
        for (int64_t i = 0; i < n; ++i) {
          ConstMatMap gy(self.grad.ptr() + i * cout * plane, cout, plane);
          ConstMatMap col(cols->data() + i * kk * plane, kk, plane);
          if (pw->requires_grad) {
            MatMap gw(pw->GradBuffer().ptr(), cout, kk);
            gw.noalias() += gy * col.transpose();
          }
          if (pb->requires_grad) {
            Tensor& gb = pb->GradBuffer();
            for (int64_t c = 0; c < cout; ++c) gb[c] += gy.row(c).sum();
          }
          if (pin->requires_grad) {
            MatMap dc(dcol.data(), kk, plane);
            dc.noalias() = wm.transpose() * gy;
            Col2Im(dcol.data(), cin, h, w, k, stride, padding, ho, wo,
                   pin->GradBuffer().ptr() + i * cin * h * w);
          }
        }
      });
}

Var ConvTranspose2d(const Var& input, const Var& weight, const Var& bias,
                    int stride, int padding, int output_padding) {
  const Shape& is = input.shape();
  const Shape& ws = weight.shape();
  GVAE_CHECK(is.size() == 4 && ws.size() == 4 && ws[2] == ws[3],
             ErrorCode::kShape,
             "ConvTranspose2d input" + ShapeString(is) + " weight" +
                 ShapeString(ws));
  GVAE_CHECK(ws[0] == is[1], ErrorCode::kShape,
             "ConvTranspose2d: input has " + std::to_string(is[1]) +
                 " channels, weight" + ShapeString(ws) + " expects " +
                 std::to_string(ws[0]));
  GVAE_CHECK(bias.shape() == Shape({ws[1]}), ErrorCode::kShape,
             "ConvTranspose2d bias" + ShapeString(bias.shape()));
  GVAE_CHECK(stride >= 1 && padding >= 0 && output_padding >= 0 &&
                 output_padding < stride,
             ErrorCode::kInvalidArgument, "ConvTranspose2d stride/padding");
  const int64_t n = is[0], cin = is[1], h = is[2], w = is[3];
  const int64_t cout = ws[1];
  const int k = static_cast<int>(ws[2]);
  const int64_t ho = (h - 1) * stride - 2 * padding + k + output_padding;
  const int64_t wo = (w - 1) * stride - 2 * padding + k + output_padding;
  GVAE_CHECK(ho > 0 && wo > 0, ErrorCode::kShape,
             "ConvTranspose2d output extent not positive for input" +
                 ShapeString(is));
  const int64_t kk = cout * k * k, plane = h * w, oplane = ho * wo;

  Tensor out(Shape{n, cout, ho, wo});
  ConstMatMap wm(weight.value().ptr(), cin, kk);
  std::vector<double> col(static_cast<size_t>(kk * plane));
  for (int64_t i = 0; i < n; ++i) {
    MatMap cm(col.data(), kk, plane);
    cm.noalias() =
        wm.transpose() * ConstMatMap(input.value().ptr() + i * cin * plane,
                                     cin, plane);
    double* dst = out.ptr() + i * cout * oplane;
    Col2Im(col.data(), cout, ho, wo, k, stride, padding, h, w, dst);
    for (int64_t c = 0; c < cout; ++c) {
      for (int64_t p = 0; p < oplane; ++p) dst[c * oplane + p] += bias.value()[c];
    }
  }
  auto pin = input.node(), pw = weight.node(), pb = bias.node();
  return MakeResult(
      std::move(out), {input, weight, bias}, [=](Node& self) {
        ConstMatMap wm(pw->value.ptr(), cin, kk);
        std::vector<double> dcol(static_cast<size_t>(kk * plane));
        for (int64_t i = 0; i < n; ++i) {
          const double* gy = self.grad.ptr() + i * cout * oplane;
          if (pb->requires_grad) {
            Tensor& gb = pb->GradBuffer();
            for (int64_t c = 0; c < cout; ++c) {
              double acc = 0.0;
              for (int64_t p = 0; p < oplane; ++p) acc += gy[c * oplane + p];
              gb[c] += acc;
            }
          }
          Im2Col(gy, cout, ho, wo, k, stride, padding, h, w, dcol.data());
          ConstMatMap dc(dcol.data(), kk, plane);
          if (pin->requires_grad) {
            MatMap gx(pin->GradBuffer().ptr() + i * cin * plane, cin, plane);
            gx.noalias() += wm * dc;
          }
          if (pw->requires_grad) {
            MatMap gw(pw->GradBuffer().ptr(), cin, kk);
            gw.noalias() +=
                ConstMatMap(pin->value.ptr() + i * cin * plane, cin, plane) *
                dc.transpose();
          }
        }
      });
}

Var Gdn(const Var& input, const Var& beta, const Var& gamma, bool inverse) {
  const Shape& is = input.shape();
  GVAE_CHECK(is.size() == 4, ErrorCode::kShape,
             "Gdn expects N,C,H,W, got " + ShapeString(is));
  const int64_t n = is[0], c = is[1], plane = is[2] * is[3];
  GVAE_CHECK(beta.shape() == Shape({c}) && gamma.shape() == Shape({c, c}),
             ErrorCode::kShape,
             "Gdn beta" + ShapeString(beta.shape()) + " gamma" +
                 ShapeString(gamma.shape()) + " for " + std::to_string(c) +
                 " channels");
  const double e = inverse ? 0.5 : -0.5;
  auto norm = std::make_shared<Tensor>(is);
  Tensor out(is);
  ConstMatMap gm(gamma.value().ptr(), c, c);
  RowMatrix sq(c, plane);
  for (int64_t i = 0; i < n; ++i) {
    ConstMatMap x(input.value().ptr() + i * c * plane, c, plane);
    sq = x.array().square().matrix();
    MatMap nm(norm->ptr() + i * c * plane, c, plane);
    nm.noalias() = gm * sq;
    for (int64_t ch = 0; ch < c; ++ch) nm.row(ch).array() += beta.value()[ch];
    MatMap y(out.ptr() + i * c * plane, c, plane);
    y = x.array() * nm.array().pow(e);
  }
  auto pin = input.node(), pb = beta.node(), pg = gamma.node();
  return MakeResult(
      std::move(out), {input, beta, gamma},
      [pin, pb, pg, norm, n, c, plane, e](Node& self) {
        ConstMatMap gm(pg->value.ptr(), c, c);
        RowMatrix gnorm(c, plane);
        for (int64_t i = 0; i < n; ++i) {
          const int64_t off = i * c * plane;
          ConstMatMap x(pin->value.ptr() + off, c, plane);
          ConstMatMap nm(norm->ptr() + off, c, plane);
          ConstMatMap gy(self.grad.ptr() + off, c, plane);
          gnorm = (gy.array() * x.array() * e * nm.array().pow(e - 1.0))
                      .matrix();
          if (pb->requires_grad) {
            Tensor& gb = pb->GradBuffer();
            for (int64_t ch = 0; ch < c; ++ch) gb[ch] += gnorm.row(ch).sum();
          }
          if (pg->requires_grad) {
            MatMap gg(pg->GradBuffer().ptr(), c, c);
            gg.noalias() += gnorm * x.array().square().matrix().transpose();
          }
          if (pin->requires_grad) {
            MatMap gx(pin->GradBuffer().ptr() + off, c, plane);
            RowMatrix back = gm.transpose() * gnorm;
            gx.array() += gy.array() * nm.array().pow(e) +
                          2.0 * x.array() * back.array();
          }
        }
      });
}

}  // namespace gvae
