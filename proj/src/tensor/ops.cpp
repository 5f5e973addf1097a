// Copyright 2026 The Dynamark Authors. All Rights Reserved.
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

#include "dynamark/tensor/ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace dynamark::tensor {

namespace {

[[noreturn]] void shape_fail(std::string_view op, const std::string& expected,
                             const std::string& got) {
  throw ShapeError(std::string(op) + ": expected " + expected + ", got " + got);
}

template <typename T>
void require_rank(std::string_view op, const Tensor<T>& t, std::size_t rank,
                  std::string_view what) {
  if (!t.defined()) shape_fail(op, std::string(what) + " tensor", "<undefined>");
  if (t.rank() != rank) {
    shape_fail(op, std::string(what) + " of rank " + std::to_string(rank), to_string(t.shape()));
  }
}

template <typename T>
inline T dot(const T* a, const T* b, std::size_t n) {
  T acc = T(0);
#pragma omp simd reduction(+ : acc)
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
inline T reduce_sum(const T* a, std::size_t n) {
  T acc = T(0);
#pragma omp simd reduction(+ : acc)
  for (std::size_t i = 0; i < n; ++i) acc += a[i];
  return acc;
}

template <typename T>
inline void axpy(T alpha, const T* x, T* y, std::size_t n) {
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
std::vector<Tensor<T>> with_optional(std::initializer_list<Tensor<T>> required,
                                     const Tensor<T>& optional) {
  std::vector<Tensor<T>> out(required);
  if (optional.defined()) out.push_back(optional);
  return out;
}

// Valid output range [lo, hi) for a row shifted by `shift` within length n.
inline std::pair<std::size_t, std::size_t> shifted_range(std::ptrdiff_t shift, std::size_t n) {
  const auto sn = static_cast<std::ptrdiff_t>(n);
  const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -shift);
  const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(sn, sn - shift);
  if (hi <= lo) return {0, 0};
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

}  // namespace

// ---------------------------------------------------------------- elementwise

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) shape_fail("add", to_string(a.shape()), to_string(b.shape()));
  std::vector<T> out(a.size());
  const T* ad = a.data().data();
  const T* bd = b.data().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] + bd[i];
  return make_result<T>(a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    for (auto& p : self.parents) {
      if (!p->requires_grad) continue;
      auto& g = p->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) shape_fail("mul", to_string(a.shape()), to_string(b.shape()));
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return make_result<T>(a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      auto& g = pa.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      auto& g = pb.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa.value[i];
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * factor;
  return make_result<T>(a.shape(), std::move(out), {a}, [factor](Node<T>& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * factor;
  });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  std::vector<T> out(x.size());
  const T* xd = x.data().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xd[i] > T(0) ? xd[i] : T(0);
  return make_result<T>(x.shape(), std::move(out), {x}, [](Node<T>& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (self.value[i] > T(0)) g[i] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T total = T(0);
  for (T v : x.data()) total += v;
  return make_result<T>({}, {total}, {x}, [](Node<T>& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (auto& v : g) v += self.grad[0];
  });
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x) {
  if (!x.defined() || x.rank() == 0) shape_fail("softmax", "rank >= 1", "rank 0");
  const std::size_t n = x.shape().back();
  const std::size_t rows = n ? x.size() / n : 0;
  std::vector<T> out(x.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = x.data().data() + r * n;
    T* o = out.data() + r * n;
    T m = *std::max_element(in, in + n);
    T total = T(0);
    for (std::size_t i = 0; i < n; ++i) {
      o[i] = std::exp(in[i] - m);
      total += o[i];
    }
    for (std::size_t i = 0; i < n; ++i) o[i] /= total;
  }
  return make_result<T>(x.shape(), std::move(out), {x}, [n, rows](Node<T>& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t r = 0; r < rows; ++r) {
      const T* y = self.value.data() + r * n;
      const T* dy = self.grad.data() + r * n;
      const T d = dot(dy, y, n);
      for (std::size_t i = 0; i < n; ++i) g[r * n + i] += y[i] * (dy[i] - d);
    }
  });
}

// ---------------------------------------------------------------- dense

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  require_rank("linear", weight, 2, "weight");
  if (!x.defined() || x.rank() == 0) shape_fail("linear", "input of rank >= 1", "rank 0");
  const std::size_t in = weight.dim(1);
  const std::size_t out_dim = weight.dim(0);
  if (x.shape().back() != in) {
    shape_fail("linear", "input last dim " + std::to_string(in), to_string(x.shape()));
  }
  if (bias.defined() && bias.shape() != Shape{out_dim}) {
    shape_fail("linear", "bias " + to_string({out_dim}), to_string(bias.shape()));
  }
  const std::size_t rows = x.size() / in;
  Shape out_shape = x.shape();
  out_shape.back() = out_dim;
  std::vector<T> out(rows * out_dim);
  const T* xd = x.data().data();
  const T* wd = weight.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t o = 0; o < out_dim; ++o) {
      out[r * out_dim + o] =
          dot(xd + r * in, wd + o * in, in) + (bias.defined() ? bias.data()[o] : T(0));
    }
  }
  return make_result<T>(
      std::move(out_shape), std::move(out), with_optional({x, weight}, bias),
      [rows, in, out_dim](Node<T>& self) {
        auto& px = *self.parents[0];
        auto& pw = *self.parents[1];
        const T* dy = self.grad.data();
        if (px.requires_grad) {
          auto& gx = px.ensure_grad();
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t o = 0; o < out_dim; ++o) {
              axpy(dy[r * out_dim + o], pw.value.data() + o * in, gx.data() + r * in, in);
            }
          }
        }
        if (pw.requires_grad) {
          auto& gw = pw.ensure_grad();
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t o = 0; o < out_dim; ++o) {
              axpy(dy[r * out_dim + o], px.value.data() + r * in, gw.data() + o * in, in);
            }
          }
        }
        if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
          auto& gb = self.parents[2]->ensure_grad();
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t o = 0; o < out_dim; ++o) gb[o] += dy[r * out_dim + o];
          }
        }
      });
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (!a.defined() || !b.defined() || a.rank() < 2 || a.rank() != b.rank()) {
    shape_fail("matmul", "two tensors of equal rank >= 2",
               (a.defined() ? to_string(a.shape()) : "<undefined>") + " and " +
                   (b.defined() ? to_string(b.shape()) : "<undefined>"));
  }
  const std::size_t r = a.rank();
  const std::size_t m = a.dim(r - 2), k = a.dim(r - 1), n = b.dim(r - 1);
  Shape batch_a(a.shape().begin(), a.shape().end() - 2);
  Shape batch_b(b.shape().begin(), b.shape().end() - 2);
  if (batch_a != batch_b || b.dim(r - 2) != k) {
    shape_fail("matmul", "b of shape " + to_string(batch_a) + " x [" + std::to_string(k) + ", N]",
               to_string(b.shape()));
  }
  const std::size_t batch = numel(batch_a);
  Shape out_shape = batch_a;
  out_shape.push_back(m);
  out_shape.push_back(n);
  std::vector<T> out(batch * m * n, T(0));
  for (std::size_t bt = 0; bt < batch; ++bt) {
    const T* ad = a.data().data() + bt * m * k;
    const T* bd = b.data().data() + bt * k * n;
    T* od = out.data() + bt * m * n;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t kk = 0; kk < k; ++kk) axpy(ad[i * k + kk], bd + kk * n, od + i * n, n);
    }
  }
  return make_result<T>(std::move(out_shape), std::move(out), {a, b},
                        [batch, m, k, n](Node<T>& self) {
                          auto& pa = *self.parents[0];
                          auto& pb = *self.parents[1];
                          for (std::size_t bt = 0; bt < batch; ++bt) {
                            const T* dy = self.grad.data() + bt * m * n;
                            const T* ad = pa.value.data() + bt * m * k;
                            const T* bd = pb.value.data() + bt * k * n;
                            if (pa.requires_grad) {
                              T* ga = pa.ensure_grad().data() + bt * m * k;
                              for (std::size_t i = 0; i < m; ++i) {
                                for (std::size_t kk = 0; kk < k; ++kk) {
                                  ga[i * k + kk] += dot(dy + i * n, bd + kk * n, n);
                                }
                              }
                            }
                            if (pb.requires_grad) {
                              T* gb = pb.ensure_grad().data() + bt * k * n;
                              for (std::size_t i = 0; i < m; ++i) {
                                for (std::size_t kk = 0; kk < k; ++kk) {
                                  axpy(ad[i * k + kk], dy + i * n, gb + kk * n, n);
                                }
                              }
                            }
                          }
                        });
}

// ---------------------------------------------------------------- convolution

template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  require_rank("conv1d", x, 3, "input [B, Cin, L]");
  require_rank("conv1d", weight, 3, "weight [Cout, Cin, K]");
  const std::size_t batch = x.dim(0), cin = x.dim(1), len = x.dim(2);
  const std::size_t cout = weight.dim(0), kernel = weight.dim(2);
  if (weight.dim(1) != cin) {
    shape_fail("conv1d", "weight with Cin = " + std::to_string(cin), to_string(weight.shape()));
  }
  if (kernel % 2 == 0) shape_fail("conv1d", "odd kernel size", std::to_string(kernel));
  if (bias.defined() && bias.shape() != Shape{cout}) {
    shape_fail("conv1d", "bias " + to_string({cout}), to_string(bias.shape()));
  }
  const auto pad = static_cast<std::ptrdiff_t>(kernel / 2);
  std::vector<T> out(batch * cout * len);
  const T* xd = x.data().data();
  const T* wd = weight.data().data();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t co = 0; co < cout; ++co) {
      T* orow = out.data() + (b * cout + co) * len;
      std::fill(orow, orow + len, bias.defined() ? bias.data()[co] : T(0));
      for (std::size_t ci = 0; ci < cin; ++ci) {
        const T* xrow = xd + (b * cin + ci) * len;
        for (std::size_t k = 0; k < kernel; ++k) {
          const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(k) - pad;
          auto [lo, hi] = shifted_range(shift, len);
          axpy(wd[(co * cin + ci) * kernel + k], xrow + lo + shift, orow + lo, hi - lo);
        }
      }
    }
  }
  return make_result<T>(
      {batch, cout, len}, std::move(out), with_optional({x, weight}, bias),
      [batch, cin, cout, len, kernel, pad](Node<T>& self) {
        auto& px = *self.parents[0];
        auto& pw = *self.parents[1];
        const T* dy = self.grad.data();
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t co = 0; co < cout; ++co) {
            const T* grow = dy + (b * cout + co) * len;
            for (std::size_t ci = 0; ci < cin; ++ci) {
              for (std::size_t k = 0; k < kernel; ++k) {
                const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(k) - pad;
                auto [lo, hi] = shifted_range(shift, len);
                const std::size_t w_idx = (co * cin + ci) * kernel + k;
                if (px.requires_grad) {
                  T* gx = px.ensure_grad().data() + (b * cin + ci) * len;
                  axpy(pw.value[w_idx], grow + lo, gx + lo + shift, hi - lo);
                }
                if (pw.requires_grad) {
                  const T* xrow = px.value.data() + (b * cin + ci) * len;
                  pw.ensure_grad()[w_idx] += dot(grow + lo, xrow + lo + shift, hi - lo);
                }
              }
            }
            if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
              self.parents[2]->ensure_grad()[co] += reduce_sum(grow, len);
            }
          }
        }
      });
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  require_rank("conv2d", x, 4, "input [B, Cin, H, W]");
  require_rank("conv2d", weight, 4, "weight [Cout, Cin, KH, KW]");
  const std::size_t batch = x.dim(0), cin = x.dim(1), height = x.dim(2), width = x.dim(3);
  const std::size_t cout = weight.dim(0), kh_size = weight.dim(2), kw_size = weight.dim(3);
  if (weight.dim(1) != cin) {
    shape_fail("conv2d", "weight with Cin = " + std::to_string(cin), to_string(weight.shape()));
  }
  if (kh_size % 2 == 0 || kw_size % 2 == 0) {
    shape_fail("conv2d", "odd kernel sizes", to_string(weight.shape()));
  }
  if (bias.defined() && bias.shape() != Shape{cout}) {
    shape_fail("conv2d", "bias " + to_string({cout}), to_string(bias.shape()));
  }
  const auto ph = static_cast<std::ptrdiff_t>(kh_size / 2);
  const auto pw = static_cast<std::ptrdiff_t>(kw_size / 2);
  const auto sh = static_cast<std::ptrdiff_t>(height);
  std::vector<T> out(batch * cout * height * width);
  const T* xd = x.data().data();
  const T* wd = weight.data().data();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t co = 0; co < cout; ++co) {
      for (std::size_t h = 0; h < height; ++h) {
        T* orow = out.data() + ((b * cout + co) * height + h) * width;
        std::fill(orow, orow + width, bias.defined() ? bias.data()[co] : T(0));
        for (std::size_t ci = 0; ci < cin; ++ci) {
          for (std::size_t kh = 0; kh < kh_size; ++kh) {
            const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(h + kh) - ph;
            if (ih < 0 || ih >= sh) continue;
            const T* xrow = xd + ((b * cin + ci) * height + static_cast<std::size_t>(ih)) * width;
            const T* wrow = wd + ((co * cin + ci) * kh_size + kh) * kw_size;
            for (std::size_t kw = 0; kw < kw_size; ++kw) {
              const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(kw) - pw;
              auto [lo, hi] = shifted_range(shift, width);
              axpy(wrow[kw], xrow + lo + shift, orow + lo, hi - lo);
            }
          }
        }
      }
    }
  }
  return make_result<T>(
      {batch, cout, height, width}, std::move(out), with_optional({x, weight}, bias),
      [=](Node<T>& self) {
        auto& px = *self.parents[0];
        auto& pwt = *self.parents[1];
        const T* dy = self.grad.data();
        const T* wv = pwt.value.data();
        const T* xv = px.value.data();
        if (px.requires_grad) {
          T* gx = px.ensure_grad().data();
          for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t ci = 0; ci < cin; ++ci) {
              for (std::size_t ih = 0; ih < height; ++ih) {
                T* gxrow = gx + ((b * cin + ci) * height + ih) * width;
                for (std::size_t co = 0; co < cout; ++co) {
                  for (std::size_t kh = 0; kh < kh_size; ++kh) {
                    const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(ih) + ph -
                                             static_cast<std::ptrdiff_t>(kh);
                    if (h < 0 || h >= sh) continue;
                    const T* grow = dy + ((b * cout + co) * height + static_cast<std::size_t>(h)) *
                                             width;
                    const T* wrow = wv + ((co * cin + ci) * kh_size + kh) * kw_size;
                    for (std::size_t kw = 0; kw < kw_size; ++kw) {
                      const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(kw) - pw;
                      auto [lo, hi] = shifted_range(shift, width);
                      axpy(wrow[kw], grow + lo, gxrow + lo + shift, hi - lo);
                    }
                  }
                }
              }
            }
          }
        }
        if (pwt.requires_grad) {
          T* gw = pwt.ensure_grad().data();
          for (std::size_t co = 0; co < cout; ++co) {
            for (std::size_t ci = 0; ci < cin; ++ci) {
              for (std::size_t kh = 0; kh < kh_size; ++kh) {
                for (std::size_t kw = 0; kw < kw_size; ++kw) {
                  const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(kw) - pw;
                  auto [lo, hi] = shifted_range(shift, width);
                  T acc = T(0);
                  for (std::size_t b = 0; b < batch; ++b) {
                    for (std::size_t h = 0; h < height; ++h) {
                      const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(h + kh) - ph;
                      if (ih < 0 || ih >= sh) continue;
                      const T* grow = dy + ((b * cout + co) * height + h) * width;
                      const T* xrow =
                          xv + ((b * cin + ci) * height + static_cast<std::size_t>(ih)) * width;
                      acc += dot(grow + lo, xrow + lo + shift, hi - lo);
                    }
                  }
                  gw[((co * cin + ci) * kh_size + kh) * kw_size + kw] += acc;
                }
              }
            }
          }
        }
        if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
          auto& gb = self.parents[2]->ensure_grad();
          for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t co = 0; co < cout; ++co) {
              gb[co] += reduce_sum(dy + (b * cout + co) * height * width, height * width);
            }
          }
        }
      });
}

template <typename T>
Tensor<T> conv_transpose1d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                           std::size_t stride) {
  require_rank("conv_transpose1d", x, 3, "input [B, Cin, L]");
  require_rank("conv_transpose1d", weight, 3, "weight [Cin, Cout, K]");
  if (stride == 0) shape_fail("conv_transpose1d", "stride >= 1", "0");
  const std::size_t batch = x.dim(0), cin = x.dim(1), len = x.dim(2);
  const std::size_t cout = weight.dim(1), kernel = weight.dim(2);
  if (weight.dim(0) != cin) {
    shape_fail("conv_transpose1d", "weight with Cin = " + std::to_string(cin),
               to_string(weight.shape()));
  }
  if (bias.defined() && bias.shape() != Shape{cout}) {
    shape_fail("conv_transpose1d", "bias " + to_string({cout}), to_string(bias.shape()));
  }
  const std::size_t out_len = len == 0 ? 0 : (len - 1) * stride + kernel;
  std::vector<T> out(batch * cout * out_len);
  const T* xd = x.data().data();
  const T* wd = weight.data().data();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t co = 0; co < cout; ++co) {
      T* orow = out.data() + (b * cout + co) * out_len;
      std::fill(orow, orow + out_len, bias.defined() ? bias.data()[co] : T(0));
      for (std::size_t ci = 0; ci < cin; ++ci) {
        const T* xrow = xd + (b * cin + ci) * len;
        const T* wrow = wd + (ci * cout + co) * kernel;
        for (std::size_t l = 0; l < len; ++l) {
          for (std::size_t k = 0; k < kernel; ++k) orow[l * stride + k] += xrow[l] * wrow[k];
        }
      }
    }
  }
  return make_result<T>(
      {batch, cout, out_len}, std::move(out), with_optional({x, weight}, bias),
      [=](Node<T>& self) {
        auto& px = *self.parents[0];
        auto& pw = *self.parents[1];
        const T* dy = self.grad.data();
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t co = 0; co < cout; ++co) {
            const T* grow = dy + (b * cout + co) * out_len;
            for (std::size_t ci = 0; ci < cin; ++ci) {
              const T* xrow = px.value.data() + (b * cin + ci) * len;
              const T* wrow = pw.value.data() + (ci * cout + co) * kernel;
              if (px.requires_grad) {
                T* gx = px.ensure_grad().data() + (b * cin + ci) * len;
                for (std::size_t l = 0; l < len; ++l) {
                  gx[l] += dot(grow + l * stride, wrow, kernel);
                }
              }
              if (pw.requires_grad) {
                T* gw = pw.ensure_grad().data() + (ci * cout + co) * kernel;
                for (std::size_t l = 0; l < len; ++l) {
                  for (std::size_t k = 0; k < kernel; ++k) gw[k] += xrow[l] * grow[l * stride + k];
                }
              }
            }
            if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
              self.parents[2]->ensure_grad()[co] += reduce_sum(grow, out_len);
            }
          }
        }
      });
}

template <typename T>
Tensor<T> maxpool1d(const Tensor<T>& x, std::size_t stride) {
  if (!x.defined() || x.rank() == 0) shape_fail("maxpool1d", "rank >= 1", "rank 0");
  if (stride == 0) shape_fail("maxpool1d", "stride >= 1", "0");
  const std::size_t len = x.shape().back();
  const std::size_t out_len = len / stride;
  const std::size_t rows = len ? x.size() / len : 0;
  Shape out_shape = x.shape();
  out_shape.back() = out_len;
  std::vector<T> out(rows * out_len);
  std::vector<std::size_t> argmax(rows * out_len);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = x.data().data() + r * len;
    for (std::size_t o = 0; o < out_len; ++o) {
      std::size_t best = o * stride;
      for (std::size_t k = 1; k < stride; ++k) {
        if (in[o * stride + k] > in[best]) best = o * stride + k;
      }
      out[r * out_len + o] = in[best];
      argmax[r * out_len + o] = r * len + best;
    }
  }
  return make_result<T>(std::move(out_shape), std::move(out), {x},
                        [argmax = std::move(argmax)](Node<T>& self) {
                          auto& g = self.parents[0]->ensure_grad();
                          for (std::size_t i = 0; i < argmax.size(); ++i) {
                            g[argmax[i]] += self.grad[i];
                          }
                        });
}

// ---------------------------------------------------------------- normalization

template <typename T>
Tensor<T> batchnorm2d(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                      BatchNormState<T>& state, bool training) {
  require_rank("batchnorm2d", x, 4, "input [B, C, H, W]");
  const std::size_t batch = x.dim(0), channels = x.dim(1), plane = x.dim(2) * x.dim(3);
  const Shape cshape{channels};
  if (gamma.shape() != cshape || beta.shape() != cshape) {
    shape_fail("batchnorm2d", "gamma/beta " + to_string(cshape),
               to_string(gamma.shape()) + " / " + to_string(beta.shape()));
  }
  if (state.running_mean.size() != channels || state.running_var.size() != channels) {
    shape_fail("batchnorm2d", "running statistics for " + std::to_string(channels) + " channels",
               std::to_string(state.running_mean.size()));
  }
  const std::size_t count = batch * plane;
  std::vector<T> inv_std(channels);
  std::vector<T> xhat(x.size());
  std::vector<T> out(x.size());
  const T* xd = x.data().data();
  for (std::size_t c = 0; c < channels; ++c) {
    T mean, var;
    if (training) {
      double s = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const T* p = xd + (b * channels + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) s += p[i];
      }
      const double m = count ? s / static_cast<double>(count) : 0.0;
      double ss = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const T* p = xd + (b * channels + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) ss += (p[i] - m) * (p[i] - m);
      }
      const double v = count ? ss / static_cast<double>(count) : 0.0;
      mean = static_cast<T>(m);
      var = static_cast<T>(v);
      const double unbiased = count > 1 ? ss / static_cast<double>(count - 1) : v;
      state.running_mean[c] = (T(1) - state.momentum) * state.running_mean[c] + state.momentum * mean;
      state.running_var[c] =
          (T(1) - state.momentum) * state.running_var[c] + state.momentum * static_cast<T>(unbiased);
    } else {
      mean = state.running_mean[c];
      var = state.running_var[c];
    }
    inv_std[c] = T(1) / std::sqrt(var + state.eps);
    const T g = gamma.data()[c], bt = beta.data()[c];
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t off = (b * channels + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        xhat[off + i] = (xd[off + i] - mean) * inv_std[c];
        out[off + i] = g * xhat[off + i] + bt;
      }
    }
  }
  return make_result<T>(
      x.shape(), std::move(out), {x, gamma, beta},
      [=, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node<T>& self) {
        auto& px = *self.parents[0];
        auto& pg = *self.parents[1];
        auto& pb = *self.parents[2];
        const T* dy = self.grad.data();
        for (std::size_t c = 0; c < channels; ++c) {
          T sum_dy = T(0), sum_dy_xhat = T(0);
          for (std::size_t b = 0; b < batch; ++b) {
            const std::size_t off = (b * channels + c) * plane;
            sum_dy += reduce_sum(dy + off, plane);
            sum_dy_xhat += dot(dy + off, xhat.data() + off, plane);
          }
          if (pg.requires_grad) pg.ensure_grad()[c] += sum_dy_xhat;
          if (pb.requires_grad) pb.ensure_grad()[c] += sum_dy;
          if (!px.requires_grad) continue;
          auto& gx = px.ensure_grad();
          const T gval = pg.value[c];
          for (std::size_t b = 0; b < batch; ++b) {
            const std::size_t off = (b * channels + c) * plane;
            if (training) {
              const T n = static_cast<T>(count);
              const T k = gval * inv_std[c] / n;
              for (std::size_t i = 0; i < plane; ++i) {
                gx[off + i] += k * (n * dy[off + i] - sum_dy - xhat[off + i] * sum_dy_xhat);
              }
            } else {
              for (std::size_t i = 0; i < plane; ++i) gx[off + i] += gval * inv_std[c] * dy[off + i];
            }
          }
        }
      });
}

template <typename T>
Tensor<T> layernorm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps) {
  if (!x.defined() || x.rank() == 0) shape_fail("layernorm", "rank >= 1", "rank 0");
  const std::size_t d = x.shape().back();
  if (gamma.shape() != Shape{d} || beta.shape() != Shape{d}) {
    shape_fail("layernorm", "gamma/beta " + to_string({d}),
               to_string(gamma.shape()) + " / " + to_string(beta.shape()));
  }
  const std::size_t rows = d ? x.size() / d : 0;
  std::vector<T> xhat(x.size()), out(x.size()), inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = x.data().data() + r * d;
    T mean = reduce_sum(in, d) / static_cast<T>(d);
    T var = T(0);
    for (std::size_t i = 0; i < d; ++i) var += (in[i] - mean) * (in[i] - mean);
    var /= static_cast<T>(d);
    inv_std[r] = T(1) / std::sqrt(var + eps);
    for (std::size_t i = 0; i < d; ++i) {
      xhat[r * d + i] = (in[i] - mean) * inv_std[r];
      out[r * d + i] = gamma.data()[i] * xhat[r * d + i] + beta.data()[i];
    }
  }
  return make_result<T>(
      x.shape(), std::move(out), {x, gamma, beta},
      [rows, d, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node<T>& self) {
        auto& px = *self.parents[0];
        auto& pg = *self.parents[1];
        auto& pb = *self.parents[2];
        std::vector<T> dxhat(d);
        for (std::size_t r = 0; r < rows; ++r) {
          const T* dy = self.grad.data() + r * d;
          const T* xh = xhat.data() + r * d;
          if (pg.requires_grad) {
            auto& gg = pg.ensure_grad();
            for (std::size_t i = 0; i < d; ++i) gg[i] += dy[i] * xh[i];
          }
          if (pb.requires_grad) {
            auto& gb = pb.ensure_grad();
            for (std::size_t i = 0; i < d; ++i) gb[i] += dy[i];
          }
          if (!px.requires_grad) continue;
          for (std::size_t i = 0; i < d; ++i) dxhat[i] = dy[i] * pg.value[i];
          const T s1 = reduce_sum(dxhat.data(), d);
          const T s2 = dot(dxhat.data(), xh, d);
          T* gx = px.ensure_grad().data() + r * d;
          const T n = static_cast<T>(d);
          for (std::size_t i = 0; i < d; ++i) {
            gx[i] += inv_std[r] / n * (n * dxhat[i] - s1 - xh[i] * s2);
          }
        }
      });
}

// ---------------------------------------------------------------- attention

template <typename T>
Tensor<T> attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v) {
  require_rank("attention", q, 3, "query [B, T, D]");
  require_rank("attention", k, 3, "key [B, S, D]");
  require_rank("attention", v, 3, "value [B, S, E]");
  const std::size_t batch = q.dim(0), tq = q.dim(1), d = q.dim(2);
  const std::size_t s = k.dim(1), e = v.dim(2);
  if (k.dim(0) != batch || k.dim(2) != d) {
    shape_fail("attention", "key [" + std::to_string(batch) + ", S, " + std::to_string(d) + "]",
               to_string(k.shape()));
  }
  if (v.dim(0) != batch || v.dim(1) != s) {
    shape_fail("attention", "value [" + std::to_string(batch) + ", " + std::to_string(s) + ", E]",
               to_string(v.shape()));
  }
  if (s == 0) shape_fail("attention", "at least one key", "0");
  const T scale_factor = T(1) / std::sqrt(static_cast<T>(d));
  std::vector<T> out(batch * tq * e);
  std::vector<T> lse(batch * tq);
  std::vector<T> kt(d * s), vt(e * s), scores(s);
  for (std::size_t b = 0; b < batch; ++b) {
    const T* kd = k.data().data() + b * s * d;
    const T* vd = v.data().data() + b * s * e;
    for (std::size_t j = 0; j < s; ++j) {
      for (std::size_t c = 0; c < d; ++c) kt[c * s + j] = kd[j * d + c];
      for (std::size_t c = 0; c < e; ++c) vt[c * s + j] = vd[j * e + c];
    }
    for (std::size_t t = 0; t < tq; ++t) {
      const T* qrow = q.data().data() + (b * tq + t) * d;
      std::fill(scores.begin(), scores.end(), T(0));
      for (std::size_t c = 0; c < d; ++c) axpy(qrow[c] * scale_factor, kt.data() + c * s, scores.data(), s);
      const T m = *std::max_element(scores.begin(), scores.end());
      T total = T(0);
      for (std::size_t j = 0; j < s; ++j) {
        scores[j] = std::exp(scores[j] - m);
        total += scores[j];
      }
      T* orow = out.data() + (b * tq + t) * e;
      for (std::size_t c = 0; c < e; ++c) orow[c] = dot(scores.data(), vt.data() + c * s, s) / total;
      lse[b * tq + t] = m + std::log(total);
    }
  }
  return make_result<T>(
      {batch, tq, e}, std::move(out), {q, k, v},
      [=, lse = std::move(lse)](Node<T>& self) {
        auto& pq = *self.parents[0];
        auto& pk = *self.parents[1];
        auto& pv = *self.parents[2];
        std::vector<T> kt(d * s), vt(e * s), gkt(d * s), gvt(e * s), p(s), dp(s);
        for (std::size_t b = 0; b < batch; ++b) {
          const T* kd = pk.value.data() + b * s * d;
          const T* vd = pv.value.data() + b * s * e;
          for (std::size_t j = 0; j < s; ++j) {
            for (std::size_t c = 0; c < d; ++c) kt[c * s + j] = kd[j * d + c];
            for (std::size_t c = 0; c < e; ++c) vt[c * s + j] = vd[j * e + c];
          }
          std::fill(gkt.begin(), gkt.end(), T(0));
          std::fill(gvt.begin(), gvt.end(), T(0));
          for (std::size_t t = 0; t < tq; ++t) {
            const T* qrow = pq.value.data() + (b * tq + t) * d;
            const T* dout = self.grad.data() + (b * tq + t) * e;
            const T* orow = self.value.data() + (b * tq + t) * e;
            std::fill(p.begin(), p.end(), T(0));
            for (std::size_t c = 0; c < d; ++c) axpy(qrow[c] * scale_factor, kt.data() + c * s, p.data(), s);
            const T shift = lse[b * tq + t];
            for (std::size_t j = 0; j < s; ++j) p[j] = std::exp(p[j] - shift);
            std::fill(dp.begin(), dp.end(), T(0));
            for (std::size_t c = 0; c < e; ++c) {
              axpy(dout[c], vt.data() + c * s, dp.data(), s);
              if (pv.requires_grad) axpy(dout[c], p.data(), gvt.data() + c * s, s);
            }
            const T delta = dot(dout, orow, e);
            for (std::size_t j = 0; j < s; ++j) dp[j] = p[j] * (dp[j] - delta);
            if (pq.requires_grad) {
              T* gq = pq.ensure_grad().data() + (b * tq + t) * d;
              for (std::size_t c = 0; c < d; ++c) gq[c] += scale_factor * dot(dp.data(), kt.data() + c * s, s);
            }
            if (pk.requires_grad) {
              for (std::size_t c = 0; c < d; ++c) axpy(scale_factor * qrow[c], dp.data(), gkt.data() + c * s, s);
            }
          }
          if (pk.requires_grad) {
            T* gk = pk.ensure_grad().data() + b * s * d;
            for (std::size_t j = 0; j < s; ++j) {
              for (std::size_t c = 0; c < d; ++c) gk[j * d + c] += gkt[c * s + j];
            }
          }
          if (pv.requires_grad) {
            T* gv = pv.ensure_grad().data() + b * s * e;
            for (std::size_t j = 0; j < s; ++j) {
              for (std::size_t c = 0; c < e; ++c) gv[j * e + c] += gvt[c * s + j];
            }
          }
        }
      });
}

// ---------------------------------------------------------------- layout

template <typename T>
Tensor<T> concat(std::span<const Tensor<T>> parts, std::size_t axis) {
  if (parts.empty()) shape_fail("concat", "at least one input", "0");
  const Shape& ref = parts[0].shape();
  if (axis >= ref.size()) {
    shape_fail("concat", "axis < " + std::to_string(ref.size()), std::to_string(axis));
  }
  std::size_t total_axis = 0;
  for (const auto& p : parts) {
    Shape a = p.shape(), b = ref;
    if (a.size() != b.size()) shape_fail("concat", to_string(ref), to_string(p.shape()));
    a[axis] = b[axis] = 0;
    if (a != b) shape_fail("concat", "matching dims except axis " + std::to_string(axis), to_string(p.shape()));
    total_axis += p.shape()[axis];
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= ref[i];
  for (std::size_t i = axis + 1; i < ref.size(); ++i) inner *= ref[i];
  Shape out_shape = ref;
  out_shape[axis] = total_axis;
  std::vector<T> out(numel(out_shape));
  std::vector<std::size_t> widths;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.shape()[axis] * inner;
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(p.data().data() + o * w, w, out.data() + o * total_axis * inner + offset);
    }
    widths.push_back(w);
    offset += w;
  }
  std::vector<Tensor<T>> parents(parts.begin(), parts.end());
  return make_result<T>(std::move(out_shape), std::move(out), parents,
                        [outer, inner, total_axis, widths = std::move(widths)](Node<T>& self) {
                          std::size_t off = 0;
                          for (std::size_t i = 0; i < widths.size(); ++i) {
                            auto& p = *self.parents[i];
                            if (p.requires_grad) {
                              auto& g = p.ensure_grad();
                              for (std::size_t o = 0; o < outer; ++o) {
                                const T* src = self.grad.data() + o * total_axis * inner + off;
                                for (std::size_t k = 0; k < widths[i]; ++k) g[o * widths[i] + k] += src[k];
                              }
                            }
                            off += widths[i];
                          }
                        });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (numel(shape) != x.size()) shape_fail("reshape", std::to_string(x.size()) + " elements", to_string(shape));
  std::vector<T> out(x.data().begin(), x.data().end());
  return make_result<T>(std::move(shape), std::move(out), {x}, [](Node<T>& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

namespace {

// For each output flat index, the matching input flat index.
std::vector<std::size_t> permutation_map(const Shape& in_shape, const std::vector<std::size_t>& perm) {
  const std::size_t rank = in_shape.size();
  std::vector<std::size_t> in_strides(rank, 1);
  for (std::size_t i = rank; i-- > 1;) in_strides[i - 1] = in_strides[i] * in_shape[i];
  Shape out_shape(rank);
  std::vector<std::size_t> src_stride(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    out_shape[i] = in_shape[perm[i]];
    src_stride[i] = in_strides[perm[i]];
  }
  const std::size_t total = numel(in_shape);
  std::vector<std::size_t> map(total);
  std::vector<std::size_t> idx(rank, 0);
  std::size_t src = 0;
  for (std::size_t flat = 0; flat < total; ++flat) {
    map[flat] = src;
    for (std::size_t a = rank; a-- > 0;) {
      if (++idx[a] < out_shape[a]) {
        src += src_stride[a];
        break;
      }
      src -= src_stride[a] * (out_shape[a] - 1);
      idx[a] = 0;
    }
  }
  return map;
}

}  // namespace

template <typename T>
Tensor<T> permute(const Tensor<T>& x, const std::vector<std::size_t>& perm) {
  const std::size_t rank = x.rank();
  std::vector<std::size_t> sorted = perm;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> identity(rank);
  std::iota(identity.begin(), identity.end(), 0);
  if (perm.size() != rank || sorted != identity) {
    shape_fail("permute", "a permutation of " + std::to_string(rank) + " axes",
               to_string(Shape(perm.begin(), perm.end())));
  }
  Shape out_shape(rank);
  for (std::size_t i = 0; i < rank; ++i) out_shape[i] = x.shape()[perm[i]];
  auto map = permutation_map(x.shape(), perm);
  std::vector<T> out(x.size());
  const T* xd = x.data().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xd[map[i]];
  return make_result<T>(std::move(out_shape), std::move(out), {x}, [map = std::move(map)](Node<T>& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < map.size(); ++i) g[map[i]] += self.grad[i];
  });
}

template <typename T>
Tensor<T> slice(const Tensor<T>& x, std::size_t axis, std::size_t start, std::size_t length) {
  if (axis >= x.rank() || start + length > x.shape()[axis]) {
    shape_fail("slice", "range within axis " + std::to_string(axis) + " of " + to_string(x.shape()),
               "[" + std::to_string(start) + ", " + std::to_string(start + length) + ")");
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= x.shape()[i];
  for (std::size_t i = axis + 1; i < x.rank(); ++i) inner *= x.shape()[i];
  const std::size_t in_axis = x.shape()[axis];
  Shape out_shape = x.shape();
  out_shape[axis] = length;
  std::vector<T> out(outer * length * inner);
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(x.data().data() + (o * in_axis + start) * inner, length * inner,
                out.data() + o * length * inner);
  }
  return make_result<T>(std::move(out_shape), std::move(out), {x},
                        [=](Node<T>& self) {
                          auto& g = self.parents[0]->ensure_grad();
                          for (std::size_t o = 0; o < outer; ++o) {
                            const T* src = self.grad.data() + o * length * inner;
                            T* dst = g.data() + (o * in_axis + start) * inner;
                            for (std::size_t k = 0; k < length * inner; ++k) dst[k] += src[k];
                          }
                        });
}

template <typename T>
Tensor<T> pad_right(const Tensor<T>& x, std::size_t axis, std::size_t amount) {
  if (axis >= x.rank()) shape_fail("pad_right", "axis < " + std::to_string(x.rank()), std::to_string(axis));
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= x.shape()[i];
  for (std::size_t i = axis + 1; i < x.rank(); ++i) inner *= x.shape()[i];
  const std::size_t in_axis = x.shape()[axis];
  const std::size_t out_axis = in_axis + amount;
  Shape out_shape = x.shape();
  out_shape[axis] = out_axis;
  std::vector<T> out(outer * out_axis * inner, T(0));
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(x.data().data() + o * in_axis * inner, in_axis * inner,
                out.data() + o * out_axis * inner);
  }
  return make_result<T>(std::move(out_shape), std::move(out), {x}, [=](Node<T>& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t o = 0; o < outer; ++o) {
      const T* src = self.grad.data() + o * out_axis * inner;
      T* dst = g.data() + o * in_axis * inner;
      for (std::size_t k = 0; k < in_axis * inner; ++k) dst[k] += src[k];
    }
  });
}

// ---------------------------------------------------------------- dispatch

std::string_view layer_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv1d: return "conv1d";
    case LayerKind::kConv2d: return "conv2d";
    case LayerKind::kConvTranspose1d: return "conv_transpose1d";
    case LayerKind::kLinear: return "linear";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kSoftmax: return "softmax";
    case LayerKind::kBatchNorm2d: return "batchnorm2d";
    case LayerKind::kMaxPool1d: return "maxpool1d";
    case LayerKind::kAdd: return "add";
    case LayerKind::kConcat: return "concat";
    case LayerKind::kLayerNorm: return "layernorm";
    case LayerKind::kAttention: return "attention";
  }
  return "unknown";
}

std::span<const LayerKind> all_layer_kinds() {
  static constexpr std::array kinds = {
      LayerKind::kConv1d,      LayerKind::kConv2d,    LayerKind::kConvTranspose1d,
      LayerKind::kLinear,      LayerKind::kRelu,      LayerKind::kSoftmax,
      LayerKind::kBatchNorm2d, LayerKind::kMaxPool1d, LayerKind::kAdd,
      LayerKind::kConcat,      LayerKind::kLayerNorm, LayerKind::kAttention,
  };
  return kinds;
}

template <typename T>
Tensor<T> layer_forward(LayerKind kind, std::span<const Tensor<T>> inputs,
                        std::span<const Tensor<T>> params, const LayerOptions& options,
                        BatchNormState<T>* bn_state) {
  const auto name = layer_name(kind);
  auto need = [&](std::size_t n_in, std::size_t n_params) {
    if (inputs.size() < n_in || params.size() < n_params) {
      shape_fail(name, std::to_string(n_in) + " inputs and " + std::to_string(n_params) + " params",
                 std::to_string(inputs.size()) + " inputs and " + std::to_string(params.size()) + " params");
    }
  };
  const Tensor<T> none;
  auto param_or_none = [&](std::size_t i) { return i < params.size() ? params[i] : none; };
  switch (kind) {
    case LayerKind::kConv1d: need(1, 1); return conv1d(inputs[0], params[0], param_or_none(1));
    case LayerKind::kConv2d: need(1, 1); return conv2d(inputs[0], params[0], param_or_none(1));
    case LayerKind::kConvTranspose1d:
      need(1, 1);
      return conv_transpose1d(inputs[0], params[0], param_or_none(1), options.stride);
    case LayerKind::kLinear: need(1, 1); return linear(inputs[0], params[0], param_or_none(1));
    case LayerKind::kRelu: need(1, 0); return relu(inputs[0]);
    case LayerKind::kSoftmax: need(1, 0); return softmax(inputs[0]);
    case LayerKind::kBatchNorm2d: {
      need(1, 2);
      if (bn_state == nullptr) throw ShapeError("batchnorm2d: expected running state, got none");
      return batchnorm2d(inputs[0], params[0], params[1], *bn_state, options.training);
    }
    case LayerKind::kMaxPool1d: need(1, 0); return maxpool1d(inputs[0], options.stride);
    case LayerKind::kAdd: need(2, 0); return add(inputs[0], inputs[1]);
    case LayerKind::kConcat: need(1, 0); return concat(inputs, options.axis);
    case LayerKind::kLayerNorm: need(1, 2); return layernorm(inputs[0], params[0], params[1]);
    case LayerKind::kAttention: need(3, 0); return attention(inputs[0], inputs[1], inputs[2]);
  }
  throw ShapeError("layer_forward: unknown layer kind");
}

#define DYNAMARK_INSTANTIATE_OPS(T)                                                          \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> scale(const Tensor<T>&, T);                                             \
  template Tensor<T> relu(const Tensor<T>&);                                                 \
  template Tensor<T> sum(const Tensor<T>&);                                                  \
  template Tensor<T> softmax(const Tensor<T>&);                                              \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);           \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> conv1d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);           \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);           \
  template Tensor<T> conv_transpose1d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,  \
                                      std::size_t);                                          \
  template Tensor<T> maxpool1d(const Tensor<T>&, std::size_t);                               \
  template Tensor<T> batchnorm2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,       \
                                 BatchNormState<T>&, bool);                                  \
  template Tensor<T> layernorm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);     \
  template Tensor<T> attention(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);        \
  template Tensor<T> concat(std::span<const Tensor<T>>, std::size_t);                        \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                       \
  template Tensor<T> permute(const Tensor<T>&, const std::vector<std::size_t>&);             \
  template Tensor<T> slice(const Tensor<T>&, std::size_t, std::size_t, std::size_t);         \
  template Tensor<T> pad_right(const Tensor<T>&, std::size_t, std::size_t);                  \
  template Tensor<T> layer_forward(LayerKind, std::span<const Tensor<T>>,                    \
                                   std::span<const Tensor<T>>, const LayerOptions&,          \
                                   BatchNormState<T>*);

DYNAMARK_INSTANTIATE_OPS(float)
DYNAMARK_INSTANTIATE_OPS(double)

#undef DYNAMARK_INSTANTIATE_OPS

}  // namespace dynamark::tensor
