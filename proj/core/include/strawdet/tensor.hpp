#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace strawdet {

// Rank-4 feature map, row-major (batch, channel, height, width), fp32.
// Tensors are immutable values once a kernel has produced them; kernels are
// pure functions and never alias their inputs.
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<float> data;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_);

    static Tensor full(int n, int c, int h, int w, float value);

    int64_t size() const { return int64_t(n) * c * h * w; }

    float& at(int in, int ic, int iy, int ix) {
        return data[((int64_t(in) * c + ic) * h + iy) * w + ix];
    }
    float at(int in, int ic, int iy, int ix) const {
        return data[((int64_t(in) * c + ic) * h + iy) * w + ix];
    }

    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
    std::string shape_str() const;
};

// 2-d convolution parameters. weights laid out (out, in, k, k) row-major.
struct ConvParams {
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 1;
    int stride = 1;
    int padding = 0;
    std::vector<float> weights;
    std::vector<float> bias;

    int64_t weight_count() const {
        return int64_t(out_channels) * in_channels * kernel * kernel;
    }
    void validate() const;
};

// Inference-time batch-norm statistics, one entry per output channel.
struct BnParams {
    std::vector<float> gamma;
    std::vector<float> beta;
    std::vector<float> running_mean;
    std::vector<float> running_var;
    float epsilon = 1e-5f;

    size_t channels() const { return gamma.size(); }
    void validate() const;

    static BnParams identity(int channels, float eps = 1e-5f);
};

Tensor conv2d(const Tensor& input, const ConvParams& params);
Tensor maxpool2d(const Tensor& input, int k, int stride, int padding);
Tensor silu(const Tensor& input);
ConvParams fold_batchnorm(const ConvParams& conv, const BnParams& bn);
Tensor upsample_nearest2x(const Tensor& input);
Tensor concat_channels(const std::vector<const Tensor*>& parts);
Tensor concat_channels(const std::vector<Tensor>& parts);
Tensor add(const Tensor& a, const Tensor& b);

} // namespace strawdet
