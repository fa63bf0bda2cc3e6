#include "strawdet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "strawdet/error.hpp"

namespace strawdet {

Tensor::Tensor(int n_, int c_, int h_, int w_) : n(n_), c(c_), h(h_), w(w_) {
    require(n >= 0 && c >= 0 && h >= 0 && w >= 0,
            "tensor: negative dimension in ", shape_str());
    data.assign(size_t(size()), 0.0f);
}

Tensor Tensor::full(int n, int c, int h, int w, float value) {
    Tensor t(n, c, h, w);
    std::fill(t.data.begin(), t.data.end(), value);
    return t;
}

std::string Tensor::shape_str() const {
    return std::to_string(n) + "x" + std::to_string(c) + "x" +
           std::to_string(h) + "x" + std::to_string(w);
}

void ConvParams::validate() const {
    require(stride >= 1, "conv: stride must be >= 1, got ", stride);
    require(padding >= 0, "conv: padding must be >= 0, got ", padding);
    require(kernel >= 1, "conv: kernel must be >= 1, got ", kernel);
    require(int64_t(weights.size()) == weight_count(),
            "conv: weight array length ", weights.size(), " != out*in*k*k = ",
            weight_count());
    require(int(bias.size()) == out_channels, "conv: bias length ",
            bias.size(), " != out_channels ", out_channels);
}

void BnParams::validate() const {
    size_t ch = gamma.size();
    require(beta.size() == ch && running_mean.size() == ch &&
                running_var.size() == ch,
            "bn: per-channel array lengths differ (gamma=", gamma.size(),
            " beta=", beta.size(), " mean=", running_mean.size(),
            " var=", running_var.size(), ")");
    for (size_t i = 0; i < ch; ++i)
        require(running_var[i] >= 0.0f, "bn: negative running_var at channel ",
                i);
}

BnParams BnParams::identity(int channels, float eps) {
    BnParams bn;
    bn.gamma.assign(channels, 1.0f);
    bn.beta.assign(channels, 0.0f);
    bn.running_mean.assign(channels, 0.0f);
    bn.running_var.assign(channels, 1.0f);
    bn.epsilon = eps;
    return bn;
}

namespace {

// Scatter one batch image into the (c*k*k) x (h_out*w_out) patch matrix.
// Row order is (channel, ky, kx) so the GEMM accumulates in exactly the
// order the direct definition does.
void im2col(const Tensor& in, int batch, int k, int stride, int pad,
            int h_out, int w_out, float* col) {
    const int M = h_out * w_out;
    const float* src = in.data.data() + int64_t(batch) * in.c * in.h * in.w;
    int64_t row = 0;
    for (int c = 0; c < in.c; ++c) {
        const float* plane = src + int64_t(c) * in.h * in.w;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx, ++row) {
                float* dst = col + row * M;
                for (int oy = 0; oy < h_out; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= in.h) {
                        std::fill(dst, dst + w_out, 0.0f);
                        dst += w_out;
                        continue;
                    }
                    const float* line = plane + int64_t(iy) * in.w;
                    for (int ox = 0; ox < w_out; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        *dst++ = (ix < 0 || ix >= in.w) ? 0.0f : line[ix];
                    }
                }
            }
        }
    }
}

// Y(out x M) += W(out x K) * X(K x M), Y pre-filled with the bias.
// Fixed k-order accumulation keeps results bitwise reproducible.
void gemm_accum(int out, int K, int M, const float* W, const float* X,
                float* Y) {
    constexpr int MB = 768;
    for (int m0 = 0; m0 < M; m0 += MB) {
        const int m1 = std::min(M, m0 + MB);
        for (int o = 0; o < out; ++o) {
            float* y = Y + int64_t(o) * M;
            const float* wrow = W + int64_t(o) * K;
            for (int kk = 0; kk < K; ++kk) {
                const float wv = wrow[kk];
                const float* x = X + int64_t(kk) * M;
                for (int m = m0; m < m1; ++m) y[m] += wv * x[m];
            }
        }
    }
}

} // namespace

Tensor conv2d(const Tensor& input, const ConvParams& p) {
    p.validate();
    require(input.c == p.in_channels, "conv2d: input channels (", input.c,
            ") != params.in_channels (", p.in_channels, ")");
    const int h_out = (input.h + 2 * p.padding - p.kernel) / p.stride + 1;
    const int w_out = (input.w + 2 * p.padding - p.kernel) / p.stride + 1;
    require(input.h + 2 * p.padding >= p.kernel &&
                input.w + 2 * p.padding >= p.kernel && h_out >= 1 && w_out >= 1,
            "conv2d: kernel ", p.kernel, " with padding ", p.padding,
            " does not fit input ", input.shape_str());

    Tensor out(input.n, p.out_channels, h_out, w_out);
    const int M = h_out * w_out;
    const int K = p.in_channels * p.kernel * p.kernel;

    const bool plain_1x1 =
        p.kernel == 1 && p.stride == 1 && p.padding == 0;
    std::vector<float> col;
    if (!plain_1x1) col.resize(size_t(K) * M);

    for (int b = 0; b < input.n; ++b) {
        float* y = out.data.data() + int64_t(b) * p.out_channels * M;
        for (int o = 0; o < p.out_channels; ++o)
            std::fill(y + int64_t(o) * M, y + int64_t(o + 1) * M, p.bias[o]);

        const float* x;
        if (plain_1x1) {
            x = input.data.data() + int64_t(b) * input.c * M;
        } else {
            im2col(input, b, p.kernel, p.stride, p.padding, h_out, w_out,
                   col.data());
            x = col.data();
        }
        gemm_accum(p.out_channels, K, M, p.weights.data(), x, y);
    }
    return out;
}

Tensor maxpool2d(const Tensor& input, int k, int stride, int padding) {
    require(k >= 1, "maxpool2d: kernel must be >= 1, got ", k);
    require(stride >= 1 && padding >= 0, "maxpool2d: bad stride/padding (",
            stride, ", ", padding, ")");
    require(input.h + 2 * padding >= k && input.w + 2 * padding >= k,
            "maxpool2d: window ", k, " larger than padded input ",
            input.shape_str(), " with padding ", padding);
    const int h_out = (input.h + 2 * padding - k) / stride + 1;
    const int w_out = (input.w + 2 * padding - k) / stride + 1;

    Tensor out(input.n, input.c, h_out, w_out);
    for (int b = 0; b < input.n; ++b) {
        for (int c = 0; c < input.c; ++c) {
            for (int oy = 0; oy < h_out; ++oy) {
                const int y0 = std::max(0, oy * stride - padding);
                const int y1 = std::min(input.h, oy * stride - padding + k);
                for (int ox = 0; ox < w_out; ++ox) {
                    const int x0 = std::max(0, ox * stride - padding);
                    const int x1 = std::min(input.w, ox * stride - padding + k);
                    // padded cells are -inf, i.e. skipped
                    float m = -std::numeric_limits<float>::infinity();
                    for (int y = y0; y < y1; ++y)
                        for (int x = x0; x < x1; ++x)
                            m = std::max(m, input.at(b, c, y, x));
                    out.at(b, c, oy, ox) = m;
                }
            }
        }
    }
    return out;
}

Tensor silu(const Tensor& input) {
    Tensor out(input.n, input.c, input.h, input.w);
    for (int64_t i = 0; i < input.size(); ++i) {
        const float x = input.data[i];
        out.data[i] = x / (1.0f + std::exp(-x));
    }
    return out;
}

ConvParams fold_batchnorm(const ConvParams& conv, const BnParams& bn) {
    conv.validate();
    bn.validate();
    require(int(bn.channels()) == conv.out_channels,
            "fold_batchnorm: bn channels (", bn.channels(),
            ") != conv.out_channels (", conv.out_channels, ")");

    ConvParams folded = conv;
    const int per_out = conv.in_channels * conv.kernel * conv.kernel;
    for (int o = 0; o < conv.out_channels; ++o) {
        const float scale =
            bn.gamma[o] / std::sqrt(bn.running_var[o] + bn.epsilon);
        float* w = folded.weights.data() + int64_t(o) * per_out;
        for (int i = 0; i < per_out; ++i) w[i] *= scale;
        folded.bias[o] = (conv.bias[o] - bn.running_mean[o]) * scale + bn.beta[o];
    }
    return folded;
}

Tensor upsample_nearest2x(const Tensor& input) {
    Tensor out(input.n, input.c, input.h * 2, input.w * 2);
    for (int b = 0; b < input.n; ++b)
        for (int c = 0; c < input.c; ++c)
            for (int y = 0; y < input.h; ++y)
                for (int x = 0; x < input.w; ++x) {
                    const float v = input.at(b, c, y, x);
                    out.at(b, c, 2 * y, 2 * x) = v;
                    out.at(b, c, 2 * y, 2 * x + 1) = v;
                    out.at(b, c, 2 * y + 1, 2 * x) = v;
                    out.at(b, c, 2 * y + 1, 2 * x + 1) = v;
                }
    return out;
}

Tensor concat_channels(const std::vector<const Tensor*>& parts) {
    require(!parts.empty(), "concat_channels: no parts");
    const Tensor& first = *parts[0];
    int total_c = 0;
    for (const Tensor* p : parts) {
        require(p->n == first.n && p->h == first.h && p->w == first.w,
                "concat_channels: part shape ", p->shape_str(),
                " does not match ", first.shape_str(),
                " on batch/height/width");
        total_c += p->c;
    }
    Tensor out(first.n, total_c, first.h, first.w);
    const int64_t plane = int64_t(first.h) * first.w;
    for (int b = 0; b < first.n; ++b) {
        float* dst = out.data.data() + int64_t(b) * total_c * plane;
        for (const Tensor* p : parts) {
            const float* src = p->data.data() + int64_t(b) * p->c * plane;
            std::copy(src, src + int64_t(p->c) * plane, dst);
            dst += int64_t(p->c) * plane;
        }
    }
    return out;
}

Tensor concat_channels(const std::vector<Tensor>& parts) {
    std::vector<const Tensor*> ptrs;
    ptrs.reserve(parts.size());
    for (const Tensor& t : parts) ptrs.push_back(&t);
    return concat_channels(ptrs);
}

Tensor add(const Tensor& a, const Tensor& b) {
    require(a.same_shape(b), "add: shape ", a.shape_str(), " != ",
            b.shape_str());
    Tensor out(a.n, a.c, a.h, a.w);
    for (int64_t i = 0; i < a.size(); ++i) out.data[i] = a.data[i] + b.data[i];
    return out;
}

} // namespace strawdet
