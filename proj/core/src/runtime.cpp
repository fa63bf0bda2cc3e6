#include "strawdet/runtime.hpp"

#include <optional>

#include "strawdet/error.hpp"

namespace strawdet {

namespace {

Tensor slice_channels(const Tensor& t, int c0, int c1) {
    Tensor out(t.n, c1 - c0, t.h, t.w);
    const int64_t plane = int64_t(t.h) * t.w;
    for (int b = 0; b < t.n; ++b) {
        const float* src = t.data.data() + (int64_t(b) * t.c + c0) * plane;
        float* dst = out.data.data() + int64_t(b) * out.c * plane;
        std::copy(src, src + int64_t(c1 - c0) * plane, dst);
    }
    return out;
}

ConvParams load_folded(const WeightStore& store, const std::string& prefix,
                       int stride) {
    const NamedTensor& w = store.get(prefix + ".conv.weight");
    require(w.shape.size() == 4, "weight slot '", prefix,
            ".conv.weight' is not rank 4");
    ConvParams conv;
    conv.out_channels = int(w.shape[0]);
    conv.in_channels = int(w.shape[1]);
    conv.kernel = int(w.shape[2]);
    conv.stride = stride;
    conv.padding = (conv.kernel - 1) / 2;
    conv.weights = w.data;
    conv.bias.assign(conv.out_channels, 0.0f);

    BnParams bn;
    bn.gamma = store.get(prefix + ".bn.gamma").data;
    bn.beta = store.get(prefix + ".bn.beta").data;
    bn.running_mean = store.get(prefix + ".bn.mean").data;
    bn.running_var = store.get(prefix + ".bn.var").data;
    bn.epsilon = 1e-5f;
    return fold_batchnorm(conv, bn);
}

ConvParams load_plain(const WeightStore& store, const std::string& prefix) {
    const NamedTensor& w = store.get(prefix + ".weight");
    ConvParams conv;
    conv.out_channels = int(w.shape[0]);
    conv.in_channels = int(w.shape[1]);
    conv.kernel = int(w.shape[2]);
    conv.stride = 1;
    conv.padding = 0;
    conv.weights = w.data;
    conv.bias = store.get(prefix + ".bias").data;
    return conv;
}

Tensor conv_silu(const Tensor& x, const ConvParams& p) {
    return silu(conv2d(x, p));
}

} // namespace

Runtime::Runtime(const ModelGraph& graph, const WeightStore& store)
    : graph_(graph) {
    validate_graph(graph_);
    check_weights(graph_, store);

    convs_.resize(graph_.layers.size());
    for (size_t i = 0; i < graph_.layers.size(); ++i) {
        const BlockSpec& b = graph_.layers[i];
        const std::string p = std::to_string(i);
        auto& cs = convs_[i];
        switch (b.kind) {
            case BlockKind::ConvBlock:
                cs.push_back(load_folded(store, p, b.stride));
                break;
            case BlockKind::Bottleneck:
                cs.push_back(load_folded(store, p + ".cv1", 1));
                cs.push_back(load_folded(store, p + ".cv2", 1));
                break;
            case BlockKind::C3:
            case BlockKind::C2f: {
                cs.push_back(load_folded(store, p + ".cv1", 1));
                cs.push_back(load_folded(store, p + ".cv2", 1));
                if (b.kind == BlockKind::C3)
                    cs.push_back(load_folded(store, p + ".cv3", 1));
                for (int j = 0; j < b.repeats; ++j) {
                    const std::string m = p + ".m" + std::to_string(j);
                    cs.push_back(load_folded(store, m + ".cv1", 1));
                    cs.push_back(load_folded(store, m + ".cv2", 1));
                }
                break;
            }
            case BlockKind::SPPF:
                cs.push_back(load_folded(store, p + ".cv1", 1));
                cs.push_back(load_folded(store, p + ".cv2", 1));
                break;
            case BlockKind::SPPFCSP:
                for (int j = 1; j <= 7; ++j)
                    cs.push_back(
                        load_folded(store, p + ".cv" + std::to_string(j), 1));
                break;
            case BlockKind::DetectHead:
                for (size_t j = 0; j < b.input_refs.size(); ++j)
                    cs.push_back(
                        load_plain(store, p + ".m" + std::to_string(j)));
                break;
            case BlockKind::Upsample:
            case BlockKind::Concat:
                break;
        }
    }

    last_use_.assign(graph_.layers.size(), int(graph_.layers.size()) - 1);
    for (size_t i = 0; i < graph_.layers.size(); ++i) {
        last_use_[i] = int(i);
        for (int ref : graph_.layers[i].input_refs)
            last_use_[ref] = int(i);
    }
}

HeadOutputs Runtime::forward(const Tensor& input, PyramidTrace* trace) const {
    require(input.n == 1 && input.c == 3, "forward: input must be 1x3xHxW, got ",
            input.shape_str());
    require(input.h % 32 == 0 && input.w % 32 == 0,
            "forward: input height and width must be divisible by 32, got ",
            input.shape_str());

    std::vector<std::optional<Tensor>> outs(graph_.layers.size());
    HeadOutputs heads;

    for (size_t i = 0; i < graph_.layers.size(); ++i) {
        const BlockSpec& b = graph_.layers[i];
        const auto& cs = convs_[i];
        const Tensor& x =
            b.input_refs.empty() ? input : *outs[b.input_refs[0]];

        switch (b.kind) {
            case BlockKind::ConvBlock:
                outs[i] = conv_silu(x, cs[0]);
                break;
            case BlockKind::Bottleneck: {
                Tensor y = conv_silu(conv_silu(x, cs[0]), cs[1]);
                outs[i] = b.shortcut ? add(x, y) : std::move(y);
                break;
            }
            case BlockKind::C3: {
                Tensor a = conv_silu(x, cs[0]);
                for (int j = 0; j < b.repeats; ++j) {
                    Tensor y = conv_silu(a, cs[3 + 2 * j]);
                    y = conv_silu(y, cs[4 + 2 * j]);
                    a = b.shortcut ? add(a, y) : std::move(y);
                }
                const Tensor side = conv_silu(x, cs[1]);
                outs[i] = conv_silu(concat_channels({&a, &side}), cs[2]);
                break;
            }
            case BlockKind::C2f: {
                const Tensor t = conv_silu(x, cs[0]);
                const int h = t.c / 2;
                std::vector<Tensor> ys;
                ys.push_back(slice_channels(t, 0, h));
                ys.push_back(slice_channels(t, h, 2 * h));
                for (int j = 0; j < b.repeats; ++j) {
                    Tensor y = conv_silu(ys.back(), cs[2 + 2 * j]);
                    y = conv_silu(y, cs[3 + 2 * j]);
                    ys.push_back(b.shortcut ? add(ys.back(), y)
                                            : std::move(y));
                }
                outs[i] = conv_silu(concat_channels(ys), cs[1]);
                break;
            }
            case BlockKind::SPPF: {
                const Tensor a = conv_silu(x, cs[0]);
                const Tensor p1 = maxpool2d(a, 5, 1, 2);
                const Tensor p2 = maxpool2d(p1, 5, 1, 2);
                const Tensor p3 = maxpool2d(p2, 5, 1, 2);
                if (trace) *trace = {a, p1, p2, p3};
                outs[i] = conv_silu(concat_channels({&a, &p1, &p2, &p3}),
                                    cs[1]);
                break;
            }
            case BlockKind::SPPFCSP: {
                // pooled branch: cv1 -> cv3 -> cv4 -> pools -> cv5 -> cv6
                Tensor a = conv_silu(x, cs[0]);
                a = conv_silu(a, cs[2]);
                a = conv_silu(a, cs[3]);
                const Tensor p1 = maxpool2d(a, 5, 1, 2);
                const Tensor p2 = maxpool2d(p1, 5, 1, 2);
                const Tensor p3 = maxpool2d(p2, 5, 1, 2);
                if (trace) *trace = {a, p1, p2, p3};
                Tensor pooled =
                    conv_silu(concat_channels({&a, &p1, &p2, &p3}), cs[4]);
                pooled = conv_silu(pooled, cs[5]);
                // plain branch
                const Tensor side = conv_silu(x, cs[1]);
                outs[i] = conv_silu(concat_channels({&pooled, &side}), cs[6]);
                break;
            }
            case BlockKind::Upsample:
                outs[i] = upsample_nearest2x(x);
                break;
            case BlockKind::Concat: {
                std::vector<const Tensor*> parts;
                for (int ref : b.input_refs) parts.push_back(&*outs[ref]);
                outs[i] = concat_channels(parts);
                break;
            }
            case BlockKind::DetectHead: {
                for (size_t j = 0; j < 3; ++j)
                    heads[j] = conv2d(*outs[b.input_refs[j]], cs[j]);
                outs[i] = Tensor();  // heads carry the result
                break;
            }
        }

        // drop activations that no later layer reads
        for (int ref : b.input_refs)
            if (last_use_[ref] == int(i)) outs[ref].reset();
    }
    return heads;
}

} // namespace strawdet
