#include "grfcnn/tensor_ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <string>

#include "grfcnn/errors.hpp"

namespace grfcnn {
namespace {

struct Grid {
  std::size_t h, w, c;
};

Grid AsGrid(const Tensor& t) {
  if (t.rank() == 2) return {t.dim(0), t.dim(1), 1};
  if (t.rank() == 3) return {t.dim(0), t.dim(1), t.dim(2)};
  throw ShapeError("expected an h x w or h x w x c tensor, got " +
                   ShapeToString(t.shape()));
}

void RequireRank2(const Tensor& t, const char* what) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(what) + " must be rank 2, got " +
                     ShapeToString(t.shape()));
  }
}

}  // namespace

std::size_t sliding_output_length(std::size_t n, std::size_t f, std::size_t s,
                                  std::size_t p) {
  if (n == 0 || f == 0 || s == 0) {
    throw ShapeError("window size, stride and extent must all be >= 1");
  }
  if (f > n + 2 * p) {
    throw ShapeError("window of size " + std::to_string(f) +
                     " does not fit extent " + std::to_string(n) +
                     " with padding " + std::to_string(p));
  }
  return (n + 2 * p - f) / s + 1;
}

FeatureShape pool_output_shape(const ShapeSpec& spec) {
  if (spec.n_c == 0) throw ShapeError("channel count must be >= 1");
  return {sliding_output_length(spec.n_h, spec.f, spec.s, spec.p),
          sliding_output_length(spec.n_w, spec.f, spec.s, spec.p), spec.n_c};
}

Tensor convolve2d_flipped(const Tensor& input, const Tensor& kernel,
                      std::size_t padding) {
  RequireRank2(input, "convolution input");
  RequireRank2(kernel, "convolution kernel");
  const std::size_t h = input.dim(0), w = input.dim(1);
  const std::size_t kh = kernel.dim(0), kw = kernel.dim(1);
  const std::size_t out_h = sliding_output_length(h, kh, 1, padding);
  const std::size_t out_w = sliding_output_length(w, kw, 1, padding);
  const std::size_t ph = h + 2 * padding, pw = w + 2 * padding;

  Tensor out({out_h, out_w});
  for (std::size_t i = 0; i < out_h; ++i) {
    for (std::size_t j = 0; j < out_w; ++j) {
      // (i, j) indexes the valid region; shift into full-convolution indices.
      const std::size_t fi = i + kh - 1, fj = j + kw - 1;
      double acc = 0.0;
      for (std::size_t m = 0; m < ph; ++m) {
        if (m > fi || fi - m >= kh) continue;
        if (m < padding || m - padding >= h) continue;
        for (std::size_t n = 0; n < pw; ++n) {
          if (n > fj || fj - n >= kw) continue;
          if (n < padding || n - padding >= w) continue;
          acc += input(m - padding, n - padding) * kernel(fi - m, fj - n);
        }
      }
      out(i, j) = acc;
    }
  }
  return out;
}

Tensor cross_correlate2d(const Tensor& input, const Tensor& kernel,
                         std::size_t padding, std::size_t stride) {
  RequireRank2(input, "correlation input");
  RequireRank2(kernel, "correlation kernel");
  const std::size_t kh = kernel.dim(0), kw = kernel.dim(1);
  const std::size_t out_h = sliding_output_length(input.dim(0), kh, stride, padding);
  const std::size_t out_w = sliding_output_length(input.dim(1), kw, stride, padding);

  const Tensor patches = im2col(input, kh, kw, padding, stride);
  const Tensor weights = kernel.Reshaped({kh * kw, 1});
  Tensor out({out_h * out_w, 1});
  linalg::gemm_acc(patches, weights, out);
  return std::move(out).Reshaped({out_h, out_w});
}

Tensor flip180(const Tensor& kernel) {
  RequireRank2(kernel, "kernel");
  Tensor out(kernel.shape());
  const std::size_t kh = kernel.dim(0), kw = kernel.dim(1);
  for (std::size_t i = 0; i < kh; ++i)
    for (std::size_t j = 0; j < kw; ++j) out(i, j) = kernel(kh - 1 - i, kw - 1 - j);
  return out;
}

MaxPoolResult maxpool2d(const Tensor& input, std::size_t f, std::size_t s) {
  if (input.rank() != 3) {
    throw ShapeError("max pooling expects h x w x c, got " +
                     ShapeToString(input.shape()));
  }
  const std::size_t h = input.dim(0), w = input.dim(1), c = input.dim(2);
  const FeatureShape out_shape = pool_output_shape({h, w, c, f, s, 0});

  MaxPoolResult result{Tensor({out_shape.h, out_shape.w, c}), {}};
  result.argmax.resize(result.output.size());
  const auto in = input.data();
  auto out = result.output.data();
  for (std::size_t oi = 0; oi < out_shape.h; ++oi) {
    for (std::size_t oj = 0; oj < out_shape.w; ++oj) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        std::size_t best = (oi * s * w + oj * s) * c + ch;
        for (std::size_t ki = 0; ki < f; ++ki) {
          for (std::size_t kj = 0; kj < f; ++kj) {
            const std::size_t idx = ((oi * s + ki) * w + (oj * s + kj)) * c + ch;
            if (in[idx] > in[best]) best = idx;
          }
        }
        const std::size_t o = (oi * out_shape.w + oj) * c + ch;
        out[o] = in[best];
        result.argmax[o] = best;
      }
    }
  }
  return result;
}

Tensor flatten(const Tensor& input) {
  if (input.empty()) throw ShapeError("cannot flatten an empty tensor");
  return input.Reshaped({input.size()});
}

Tensor im2col(const Tensor& input, std::size_t kh, std::size_t kw,
              std::size_t padding, std::size_t stride) {
  const Grid g = AsGrid(input);
  const std::size_t out_h = sliding_output_length(g.h, kh, stride, padding);
  const std::size_t out_w = sliding_output_length(g.w, kw, stride, padding);
  const std::size_t cols = kh * kw * g.c;

  Tensor patches({out_h * out_w, cols});
  const auto in = input.data();
  auto dst = patches.data();
  for (std::size_t oi = 0; oi < out_h; ++oi) {
    for (std::size_t oj = 0; oj < out_w; ++oj) {
      double* row = dst.data() + (oi * out_w + oj) * cols;
      for (std::size_t ki = 0; ki < kh; ++ki) {
        const std::ptrdiff_t ii = static_cast<std::ptrdiff_t>(oi * stride + ki) -
                                  static_cast<std::ptrdiff_t>(padding);
        for (std::size_t kj = 0; kj < kw; ++kj) {
          const std::ptrdiff_t jj = static_cast<std::ptrdiff_t>(oj * stride + kj) -
                                    static_cast<std::ptrdiff_t>(padding);
          double* cell = row + (ki * kw + kj) * g.c;
          if (ii < 0 || jj < 0 || ii >= static_cast<std::ptrdiff_t>(g.h) ||
              jj >= static_cast<std::ptrdiff_t>(g.w)) {
            continue;  // already zero
          }
          const double* src = in.data() + (ii * g.w + jj) * g.c;
          std::copy(src, src + g.c, cell);
        }
      }
    }
  }
  return patches;
}

Tensor col2im(const Tensor& patches, const Shape& input_shape, std::size_t kh,
              std::size_t kw, std::size_t padding, std::size_t stride) {
  Tensor out(input_shape);
  const Grid g = AsGrid(out);
  const std::size_t out_h = sliding_output_length(g.h, kh, stride, padding);
  const std::size_t out_w = sliding_output_length(g.w, kw, stride, padding);
  const std::size_t cols = kh * kw * g.c;
  if (patches.rank() != 2 || patches.dim(0) != out_h * out_w ||
      patches.dim(1) != cols) {
    throw ShapeError("patch matrix " + ShapeToString(patches.shape()) +
                     " does not match input shape " + ShapeToString(input_shape));
  }

  const auto src = patches.data();
  auto dst = out.data();
  for (std::size_t oi = 0; oi < out_h; ++oi) {
    for (std::size_t oj = 0; oj < out_w; ++oj) {
      const double* row = src.data() + (oi * out_w + oj) * cols;
      for (std::size_t ki = 0; ki < kh; ++ki) {
        const std::ptrdiff_t ii = static_cast<std::ptrdiff_t>(oi * stride + ki) -
                                  static_cast<std::ptrdiff_t>(padding);
        if (ii < 0 || ii >= static_cast<std::ptrdiff_t>(g.h)) continue;
        for (std::size_t kj = 0; kj < kw; ++kj) {
          const std::ptrdiff_t jj = static_cast<std::ptrdiff_t>(oj * stride + kj) -
                                    static_cast<std::ptrdiff_t>(padding);
          if (jj < 0 || jj >= static_cast<std::ptrdiff_t>(g.w)) continue;
          const double* cell = row + (ki * kw + kj) * g.c;
          double* target = dst.data() + (ii * g.w + jj) * g.c;
          for (std::size_t ch = 0; ch < g.c; ++ch) target[ch] += cell[ch];
        }
      }
    }
  }
  return out;
}

namespace linalg {
namespace {

using RowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

ConstMap View(const Tensor& t) {
  if (t.rank() != 2) throw ShapeError("matrix operand must be rank 2");
  return ConstMap(t.data().data(), static_cast<Eigen::Index>(t.dim(0)),
                  static_cast<Eigen::Index>(t.dim(1)));
}

MutMap View(Tensor& t) {
  if (t.rank() != 2) throw ShapeError("matrix operand must be rank 2");
  return MutMap(t.data().data(), static_cast<Eigen::Index>(t.dim(0)),
                static_cast<Eigen::Index>(t.dim(1)));
}

void Expect(bool ok, const char* op) {
  if (!ok) throw ShapeError(std::string("operand shape mismatch in ") + op);
}

}  // namespace

void gemm_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  auto ma = View(a);
  auto mb = View(b);
  auto mc = View(c);
  Expect(ma.cols() == mb.rows() && mc.rows() == ma.rows() && mc.cols() == mb.cols(),
         "gemm_acc");
  mc.noalias() += ma * mb;
}

void gemm_at_b_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  auto ma = View(a);
  auto mb = View(b);
  auto mc = View(c);
  Expect(ma.rows() == mb.rows() && mc.rows() == ma.cols() && mc.cols() == mb.cols(),
         "gemm_at_b_acc");
  mc.noalias() += ma.transpose() * mb;
}

void gemm_a_bt(const Tensor& a, const Tensor& b, Tensor& c) {
  auto ma = View(a);
  auto mb = View(b);
  auto mc = View(c);
  Expect(ma.cols() == mb.cols() && mc.rows() == ma.rows() && mc.cols() == mb.rows(),
         "gemm_a_bt");
  mc.noalias() = ma * mb.transpose();
}

}  // namespace linalg
}  // namespace grfcnn
