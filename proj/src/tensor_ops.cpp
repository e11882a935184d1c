#include "bmisil/tensor_ops.hpp"

#include "bmisil/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bmisil::nn {

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != count(shape_)) fail(ErrorCode::ShapeMismatch, "tensor data/shape mismatch");
}

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const {
    if (count(shape) != data_.size()) fail(ErrorCode::ShapeMismatch, "reshape changes element count");
    return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

namespace {

// C[M,N] += A[M,K] * B[K,N], row-major, columns processed in cache-sized blocks.
void gemm_acc(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
              double* c) {
    constexpr std::size_t kBlock = 256;
    for (std::size_t j0 = 0; j0 < n; j0 += kBlock) {
        const std::size_t j1 = std::min(n, j0 + kBlock);
        for (std::size_t i = 0; i < m; ++i) {
            double* crow = c + i * n;
            const double* arow = a + i * k;
            for (std::size_t p = 0; p < k; ++p) {
                const double av = arow[p];
                if (av == 0.0) continue;
                const double* brow = b + p * n;
                for (std::size_t j = j0; j < j1; ++j) crow[j] += av * brow[j];
            }
        }
    }
}

std::vector<double> transpose(const double* a, std::size_t rows, std::size_t cols) {
    std::vector<double> t(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) t[c * rows + r] = a[r * cols + c];
    }
    return t;
}

struct ConvGeometry {
    std::size_t n, c, h, w, f, k, oh, ow;
    int stride, pad;
};

ConvGeometry conv_geometry(const Tensor& x, const Tensor& w, int stride, int pad) {
    if (x.rank() != 4 || w.rank() != 4) fail(ErrorCode::ShapeMismatch, "conv2d expects rank-4 tensors");
    if (w.dim(1) != x.dim(1)) fail(ErrorCode::ShapeMismatch, "conv2d channel mismatch");
    if (w.dim(2) != w.dim(3)) fail(ErrorCode::ShapeMismatch, "conv2d kernels must be square");
    if (stride < 1 || pad < 0) fail(ErrorCode::ShapeMismatch, "conv2d needs stride >= 1, pad >= 0");
    ConvGeometry g{x.dim(0), x.dim(1), x.dim(2), x.dim(3), w.dim(0), w.dim(2), 0, 0, stride, pad};
    const long long span_h = static_cast<long long>(g.h) + 2 * pad - static_cast<long long>(g.k);
    const long long span_w = static_cast<long long>(g.w) + 2 * pad - static_cast<long long>(g.k);
    if (span_h < 0 || span_w < 0) fail(ErrorCode::ShapeMismatch, "conv2d kernel larger than input");
    if (span_h % stride != 0 || span_w % stride != 0) {
        fail(ErrorCode::NonIntegralOutput, "conv2d output size is not integral");
    }
    g.oh = static_cast<std::size_t>(span_h / stride + 1);
    g.ow = static_cast<std::size_t>(span_w / stride + 1);
    return g;
}

// col[(ci*k + ky)*k + kx, oy*ow + ox] = x[ci, oy*s + ky - pad, ox*s + kx - pad]
void im2col(const ConvGeometry& g, const double* x, double* col) {
    const std::size_t hw = g.oh * g.ow;
    for (std::size_t ci = 0; ci < g.c; ++ci) {
        const double* plane = x + ci * g.h * g.w;
        for (std::size_t ky = 0; ky < g.k; ++ky) {
            for (std::size_t kx = 0; kx < g.k; ++kx) {
                double* row = col + ((ci * g.k + ky) * g.k + kx) * hw;
                for (std::size_t oy = 0; oy < g.oh; ++oy) {
                    const long long iy = static_cast<long long>(oy) * g.stride + ky - g.pad;
                    double* out = row + oy * g.ow;
                    if (iy < 0 || iy >= static_cast<long long>(g.h)) {
                        std::fill(out, out + g.ow, 0.0);
                        continue;
                    }
                    const double* src = plane + iy * g.w;
                    for (std::size_t ox = 0; ox < g.ow; ++ox) {
                        const long long ix = static_cast<long long>(ox) * g.stride + kx - g.pad;
                        out[ox] = (ix < 0 || ix >= static_cast<long long>(g.w)) ? 0.0 : src[ix];
                    }
                }
            }
        }
    }
}

void col2im_acc(const ConvGeometry& g, const double* col, double* x) {
    const std::size_t hw = g.oh * g.ow;
    for (std::size_t ci = 0; ci < g.c; ++ci) {
        double* plane = x + ci * g.h * g.w;
        for (std::size_t ky = 0; ky < g.k; ++ky) {
            for (std::size_t kx = 0; kx < g.k; ++kx) {
                const double* row = col + ((ci * g.k + ky) * g.k + kx) * hw;
                for (std::size_t oy = 0; oy < g.oh; ++oy) {
                    const long long iy = static_cast<long long>(oy) * g.stride + ky - g.pad;
                    if (iy < 0 || iy >= static_cast<long long>(g.h)) continue;
                    double* dst = plane + iy * g.w;
                    const double* in = row + oy * g.ow;
                    for (std::size_t ox = 0; ox < g.ow; ++ox) {
                        const long long ix = static_cast<long long>(ox) * g.stride + kx - g.pad;
                        if (ix >= 0 && ix < static_cast<long long>(g.w)) dst[ix] += in[ox];
                    }
                }
            }
        }
    }
}

}  // namespace

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
    const auto g = conv_geometry(x, w, stride, pad);
    if (b.size() != g.f) fail(ErrorCode::ShapeMismatch, "conv2d bias length mismatch");
    const std::size_t patch = g.c * g.k * g.k;
    const std::size_t hw = g.oh * g.ow;
    Tensor out({g.n, g.f, g.oh, g.ow});
    std::vector<double> col(patch * hw);
    for (std::size_t s = 0; s < g.n; ++s) {
        im2col(g, x.data().data() + s * g.c * g.h * g.w, col.data());
        double* y = out.data().data() + s * g.f * hw;
        for (std::size_t f = 0; f < g.f; ++f) std::fill(y + f * hw, y + (f + 1) * hw, b[f]);
        gemm_acc(g.f, hw, patch, w.data().data(), col.data(), y);
    }
    return out;
}

ConvGrads conv2d_backward(const Tensor& x, const Tensor& w, int stride, int pad,
                          const Tensor& grad_out, bool want_grad_x) {
    const auto g = conv_geometry(x, w, stride, pad);
    if (grad_out.shape() != std::vector<std::size_t>{g.n, g.f, g.oh, g.ow}) {
        fail(ErrorCode::ShapeMismatch, "conv2d grad_out shape mismatch");
    }
    const std::size_t patch = g.c * g.k * g.k;
    const std::size_t hw = g.oh * g.ow;
    ConvGrads gr{want_grad_x ? Tensor(x.shape()) : Tensor(), Tensor(w.shape()), Tensor({g.f})};
    std::vector<double> col(patch * hw);
    std::vector<double> dcol(patch * hw);
    const std::vector<double> wt = transpose(w.data().data(), g.f, patch);
    for (std::size_t s = 0; s < g.n; ++s) {
        const double* go = grad_out.data().data() + s * g.f * hw;
        for (std::size_t f = 0; f < g.f; ++f) {
            double acc = 0.0;
            for (std::size_t i = 0; i < hw; ++i) acc += go[f * hw + i];
            gr.grad_b[f] += acc;
        }
        im2col(g, x.data().data() + s * g.c * g.h * g.w, col.data());
        const std::vector<double> col_t = transpose(col.data(), patch, hw);
        gemm_acc(g.f, patch, hw, go, col_t.data(), gr.grad_w.data().data());
        if (!want_grad_x) continue;
        std::fill(dcol.begin(), dcol.end(), 0.0);
        gemm_acc(patch, hw, g.f, wt.data(), go, dcol.data());
        col2im_acc(g, dcol.data(), gr.grad_x.data().data() + s * g.c * g.h * g.w);
    }
    return gr;
}

PoolResult maxpool2x2_forward(const Tensor& x) {
    if (x.rank() != 4) fail(ErrorCode::ShapeMismatch, "maxpool expects rank-4 input");
    const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    if (h % 2 != 0 || w % 2 != 0) fail(ErrorCode::OddSpatialDims, "maxpool needs even H and W");
    const std::size_t oh = h / 2, ow = w / 2;
    PoolResult res{Tensor({n, c, oh, ow}), std::vector<std::size_t>(n * c * oh * ow)};
    std::size_t o = 0;
    for (std::size_t plane = 0; plane < n * c; ++plane) {
        const std::size_t base = plane * h * w;
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox, ++o) {
                const std::size_t i0 = base + (2 * oy) * w + 2 * ox;
                const std::size_t cand[4] = {i0, i0 + 1, i0 + w, i0 + w + 1};
                std::size_t best = cand[0];
                for (int q = 1; q < 4; ++q) {
                    if (x[cand[q]] > x[best]) best = cand[q];
                }
                res.pooled[o] = x[best];
                res.argmax[o] = best;
            }
        }
    }
    return res;
}

Tensor maxpool2x2_backward(const std::vector<std::size_t>& argmax,
                           const std::vector<std::size_t>& input_shape, const Tensor& grad_out) {
    if (grad_out.size() != argmax.size()) fail(ErrorCode::ShapeMismatch, "maxpool grad/index mismatch");
    Tensor gx(input_shape);
    for (std::size_t i = 0; i < argmax.size(); ++i) {
        if (argmax[i] >= gx.size()) fail(ErrorCode::ShapeMismatch, "maxpool index out of range");
        gx[argmax[i]] += grad_out[i];
    }
    return gx;
}

Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
    if (x.rank() != 2 || w.rank() != 2 || x.dim(1) != w.dim(0) || b.size() != w.dim(1)) {
        fail(ErrorCode::ShapeMismatch, "dense shape mismatch");
    }
    const std::size_t n = x.dim(0), d = x.dim(1), u = w.dim(1);
    Tensor out({n, u});
    for (std::size_t i = 0; i < n; ++i) std::copy(b.data().begin(), b.data().end(), out.data().begin() + i * u);
    gemm_acc(n, u, d, x.data().data(), w.data().data(), out.data().data());
    return out;
}

DenseGrads dense_backward(const Tensor& x, const Tensor& w, const Tensor& grad_out) {
    if (x.rank() != 2 || w.rank() != 2 || x.dim(1) != w.dim(0) || grad_out.rank() != 2 ||
        grad_out.dim(0) != x.dim(0) || grad_out.dim(1) != w.dim(1)) {
        fail(ErrorCode::ShapeMismatch, "dense backward shape mismatch");
    }
    const std::size_t n = x.dim(0), d = x.dim(1), u = w.dim(1);
    DenseGrads gr{Tensor(x.shape()), Tensor(w.shape()), Tensor({u})};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < u; ++j) gr.grad_b[j] += grad_out[i * u + j];
    }
    const auto xt = transpose(x.data().data(), n, d);
    gemm_acc(d, u, n, xt.data(), grad_out.data().data(), gr.grad_w.data().data());
    const auto wt = transpose(w.data().data(), d, u);
    gemm_acc(n, d, u, grad_out.data().data(), wt.data(), gr.grad_x.data().data());
    return gr;
}

Tensor relu_forward(const Tensor& x) {
    Tensor y = x;
    for (auto& v : y.data()) v = v > 0.0 ? v : 0.0;
    return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& grad_out) {
    if (x.size() != grad_out.size()) fail(ErrorCode::ShapeMismatch, "relu grad shape mismatch");
    Tensor g = grad_out;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!(x[i] > 0.0)) g[i] = 0.0;
    }
    return g;
}

Tensor sigmoid_forward(const Tensor& x) {
    Tensor y = x;
    for (auto& v : y.data()) v = 1.0 / (1.0 + std::exp(-v));
    return y;
}

Tensor sigmoid_backward(const Tensor& s, const Tensor& grad_out) {
    if (s.size() != grad_out.size()) fail(ErrorCode::ShapeMismatch, "sigmoid grad shape mismatch");
    Tensor g = grad_out;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= s[i] * (1.0 - s[i]);
    return g;
}

LossResult mse_loss(const Tensor& pred, const Tensor& target) {
    if (pred.shape() != target.shape()) fail(ErrorCode::ShapeMismatch, "mse shape mismatch");
    if (pred.size() == 0) fail(ErrorCode::EmptyBatch, "mse on empty batch");
    const double n = static_cast<double>(pred.size());
    LossResult r{0.0, Tensor(pred.shape())};
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        r.loss += d * d;
        r.grad[i] = 2.0 * d / n;
    }
    r.loss /= n;
    return r;
}

}  // namespace bmisil::nn
