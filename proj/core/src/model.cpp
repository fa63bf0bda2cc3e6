#include "strawdet/model.hpp"

#include <cstdio>

#include "strawdet/error.hpp"
#include "strawdet/weights.hpp"

namespace strawdet {

ArchId parse_arch(const std::string& name) {
    if (name == "yolov5s") return ArchId::yolov5s;
    if (name == "yolov5s-c2f") return ArchId::yolov5s_c2f;
    if (name == "yolov5s-straw") return ArchId::yolov5s_straw;
    fail("unknown arch '", name,
         "' (expected yolov5s, yolov5s-c2f, or yolov5s-straw)");
}

std::string arch_name(ArchId arch) {
    switch (arch) {
        case ArchId::yolov5s: return "yolov5s";
        case ArchId::yolov5s_c2f: return "yolov5s-c2f";
        case ArchId::yolov5s_straw: return "yolov5s-straw";
    }
    return "?";
}

std::string block_kind_name(BlockKind kind) {
    switch (kind) {
        case BlockKind::ConvBlock: return "Conv";
        case BlockKind::Bottleneck: return "Bottleneck";
        case BlockKind::C3: return "C3";
        case BlockKind::C2f: return "C2f";
        case BlockKind::SPPF: return "SPPF";
        case BlockKind::SPPFCSP: return "SPPFCSP";
        case BlockKind::Upsample: return "Upsample";
        case BlockKind::Concat: return "Concat";
        case BlockKind::DetectHead: return "Detect";
    }
    return "?";
}

int ModelGraph::head_index() const {
    for (size_t i = 0; i < layers.size(); ++i)
        if (layers[i].kind == BlockKind::DetectHead) return int(i);
    fail("graph has no DetectHead layer");
}

namespace {

BlockSpec conv(int c_in, int c_out, int k, int s, int ref) {
    BlockSpec b;
    b.kind = BlockKind::ConvBlock;
    b.c_in = c_in;
    b.c_out = c_out;
    b.kernel = k;
    b.stride = s;
    b.padding = (k - 1) / 2;  // p=2 for the k6 stem, k/2 for odd kernels
    if (ref >= 0) b.input_refs = {ref};
    return b;
}

BlockSpec csp(BlockKind kind, int c_in, int c_out, int n, bool shortcut,
              int ref) {
    BlockSpec b;
    b.kind = kind;
    b.c_in = c_in;
    b.c_out = c_out;
    b.repeats = n;
    b.shortcut = shortcut;
    b.input_refs = {ref};
    return b;
}

BlockSpec pyramid(BlockKind kind, int c, int ref) {
    BlockSpec b;
    b.kind = kind;
    b.c_in = c;
    b.c_out = c;
    b.kernel = 5;
    b.input_refs = {ref};
    return b;
}

} // namespace

ModelGraph build_model(ArchId arch, int nc) {
    require(nc >= 1, "build_model: nc must be >= 1, got ", nc);

    const bool c2f = arch != ArchId::yolov5s;
    const BlockKind feat = c2f ? BlockKind::C2f : BlockKind::C3;
    const BlockKind pyr = arch == ArchId::yolov5s_straw ? BlockKind::SPPFCSP
                                                        : BlockKind::SPPF;

    ModelGraph g;
    g.arch = arch;
    g.nc = nc;
    g.anchors = {{{{{10, 13}, {16, 30}, {33, 23}}},
                  {{{30, 61}, {62, 45}, {59, 119}}},
                  {{{116, 90}, {156, 198}, {373, 326}}}}};

    auto& L = g.layers;
    // backbone
    L.push_back(conv(3, 32, 6, 2, -1));            // 0  P1/2
    L.push_back(conv(32, 64, 3, 2, 0));            // 1  P2/4
    L.push_back(csp(feat, 64, 64, 1, true, 1));    // 2
    L.push_back(conv(64, 128, 3, 2, 2));           // 3  P3/8
    L.push_back(csp(feat, 128, 128, 2, true, 3));  // 4
    L.push_back(conv(128, 256, 3, 2, 4));          // 5  P4/16
    L.push_back(csp(feat, 256, 256, 3, true, 5));  // 6
    L.push_back(conv(256, 512, 3, 2, 6));          // 7  P5/32
    L.push_back(csp(feat, 512, 512, 1, true, 7));  // 8
    L.push_back(pyramid(pyr, 512, 8));             // 9

    // neck: FPN top-down, then PAN bottom-up; kept identical across archs
    L.push_back(conv(512, 256, 1, 1, 9));                      // 10
    L.push_back({BlockKind::Upsample, 256, 256, 1, 1, 0, 1, false, {10}}); // 11
    L.push_back({BlockKind::Concat, 512, 512, 1, 1, 0, 1, false, {11, 6}}); // 12
    L.push_back(csp(BlockKind::C3, 512, 256, 1, false, 12));   // 13
    L.push_back(conv(256, 128, 1, 1, 13));                     // 14
    L.push_back({BlockKind::Upsample, 128, 128, 1, 1, 0, 1, false, {14}}); // 15
    L.push_back({BlockKind::Concat, 256, 256, 1, 1, 0, 1, false, {15, 4}}); // 16
    L.push_back(csp(BlockKind::C3, 256, 128, 1, false, 16));   // 17 P3 out
    L.push_back(conv(128, 128, 3, 2, 17));                     // 18
    L.push_back({BlockKind::Concat, 256, 256, 1, 1, 0, 1, false, {18, 14}}); // 19
    L.push_back(csp(BlockKind::C3, 256, 256, 1, false, 19));   // 20 P4 out
    L.push_back(conv(256, 256, 3, 2, 20));                     // 21
    L.push_back({BlockKind::Concat, 512, 512, 1, 1, 0, 1, false, {21, 10}}); // 22
    L.push_back(csp(BlockKind::C3, 512, 512, 1, false, 22));   // 23 P5 out

    BlockSpec head;
    head.kind = BlockKind::DetectHead;
    head.c_out = g.head_channels();
    head.input_refs = {17, 20, 23};
    L.push_back(head);  // 24

    validate_graph(g);
    return g;
}

void validate_graph(const ModelGraph& graph) {
    require(graph.nc >= 1, "graph: nc must be >= 1");
    int detect_outputs = 0;
    for (size_t i = 0; i < graph.layers.size(); ++i) {
        const BlockSpec& b = graph.layers[i];
        for (int ref : b.input_refs)
            require(ref >= 0 && ref < int(i), "graph: layer ", i, " (",
                    block_kind_name(b.kind), ") references layer ", ref,
                    " which is not an earlier layer");
        if (i > 0)
            require(!b.input_refs.empty(), "graph: layer ", i,
                    " has no inputs");
        if (b.kind == BlockKind::Concat) {
            int sum = 0;
            for (int ref : b.input_refs) sum += graph.layers[ref].c_out;
            require(sum == b.c_out, "graph: concat at layer ", i,
                    " declares ", b.c_out, " channels but inputs sum to ",
                    sum);
        } else if (b.kind == BlockKind::DetectHead) {
            require(b.input_refs.size() == 3,
                    "graph: detect head needs exactly 3 inputs");
            require(b.c_out == graph.head_channels(),
                    "graph: detect head channels ", b.c_out, " != 3*(nc+5) = ",
                    graph.head_channels());
            detect_outputs = 3;
        } else if (!b.input_refs.empty()) {
            const int in = graph.layers[b.input_refs[0]].c_out;
            require(in == b.c_in, "graph: layer ", i, " (",
                    block_kind_name(b.kind), ") expects ", b.c_in,
                    " input channels but layer ", b.input_refs[0],
                    " produces ", in);
        }
    }
    require(detect_outputs == 3, "graph: expected exactly 3 detect outputs");
}

int64_t count_layer_params(const ModelGraph& graph, int layer) {
    int64_t total = 0;
    const std::string prefix = std::to_string(layer) + ".";
    for (const SlotInfo& s : weight_slots(graph)) {
        if (s.trainable() && s.name.rfind(prefix, 0) == 0) total += s.count();
    }
    return total;
}

int64_t count_params(const ModelGraph& graph) {
    int64_t total = 0;
    for (const SlotInfo& s : weight_slots(graph))
        if (s.trainable()) total += s.count();
    return total;
}

namespace {

// Convolution shapes of one layer as (c_out, c_in, k, spatial_divisor)
// where the conv runs at the layer's input resolution divided by
// spatial_divisor (stride-2 convs emit at half resolution).
struct ConvShape {
    int64_t c_out, c_in, k;
    int stride;
};

void block_convs(const ModelGraph& g, const BlockSpec& b,
                 std::vector<ConvShape>& out) {
    const auto add = [&](int co, int ci, int k, int s = 1) {
        out.push_back({co, ci, k, s});
    };
    switch (b.kind) {
        case BlockKind::ConvBlock:
            add(b.c_out, b.c_in, b.kernel, b.stride);
            break;
        case BlockKind::Bottleneck:
            add(b.c_out, b.c_in, 1);
            add(b.c_out, b.c_out, 3);
            break;
        case BlockKind::C3: {
            const int h = b.c_out / 2;
            add(h, b.c_in, 1);       // cv1
            add(h, b.c_in, 1);       // cv2
            add(b.c_out, 2 * h, 1);  // cv3
            for (int i = 0; i < b.repeats; ++i) {
                add(h, h, 1);
                add(h, h, 3);
            }
            break;
        }
        case BlockKind::C2f: {
            const int h = b.c_out / 2;
            add(2 * h, b.c_in, 1);                // cv1
            add(b.c_out, (2 + b.repeats) * h, 1); // cv2
            for (int i = 0; i < b.repeats; ++i) {
                add(h, h, 3);
                add(h, h, 3);
            }
            break;
        }
        case BlockKind::SPPF: {
            const int h = b.c_in / 2;
            add(h, b.c_in, 1);
            add(b.c_out, 4 * h, 1);
            break;
        }
        case BlockKind::SPPFCSP: {
            const int h = b.c_out / 2;
            add(h, b.c_in, 1);      // cv1, pooled branch entry
            add(h, b.c_in, 1);      // cv2, plain branch
            add(h, h, 3);           // cv3
            add(h, h, 1);           // cv4
            add(h, 4 * h, 1);       // cv5, after pool concat
            add(h, h, 3);           // cv6
            add(b.c_out, 2 * h, 1); // cv7, after branch concat
            break;
        }
        case BlockKind::DetectHead:
            for (int ref : b.input_refs) add(b.c_out, g.layers[ref].c_out, 1);
            break;
        case BlockKind::Upsample:
        case BlockKind::Concat:
            break;
    }
}

} // namespace

std::vector<std::array<int, 3>> layer_output_shapes(const ModelGraph& graph,
                                                    int input_hw) {
    require(input_hw % 32 == 0, "input size ", input_hw,
            " must be divisible by 32");
    std::vector<std::array<int, 3>> shapes;
    shapes.reserve(graph.layers.size());
    for (size_t i = 0; i < graph.layers.size(); ++i) {
        const BlockSpec& b = graph.layers[i];
        int hw = b.input_refs.empty() ? input_hw
                                      : shapes[b.input_refs[0]][1];
        switch (b.kind) {
            case BlockKind::ConvBlock:
                hw /= b.stride;
                break;
            case BlockKind::Upsample:
                hw *= 2;
                break;
            default:
                break;
        }
        // The detect head reports its finest scale; all three are emitted.
        shapes.push_back({b.c_out, hw, hw});
    }
    return shapes;
}

double count_flops(const ModelGraph& graph, int input_hw) {
    const auto shapes = layer_output_shapes(graph, input_hw);
    int64_t macs = 0;
    for (size_t i = 0; i < graph.layers.size(); ++i) {
        const BlockSpec& b = graph.layers[i];
        std::vector<ConvShape> convs;
        block_convs(graph, b, convs);
        if (b.kind == BlockKind::DetectHead) {
            for (size_t j = 0; j < convs.size(); ++j) {
                const int hw = shapes[b.input_refs[j]][1];
                macs += convs[j].c_out * convs[j].c_in * int64_t(hw) * hw;
            }
            continue;
        }
        const int out_hw = shapes[i][1];
        for (const ConvShape& c : convs) {
            // Inside C3/C2f/SPPF* every conv runs at the block's output
            // resolution; a strided ConvBlock also emits at out_hw.
            macs += c.c_out * c.c_in * c.k * c.k * int64_t(out_hw) * out_hw;
        }
    }
    return 2.0 * double(macs) / 1e9;
}

int conv_op_count(const ModelGraph& graph) {
    int count = 0;
    for (const BlockSpec& b : graph.layers) {
        std::vector<ConvShape> convs;
        block_convs(graph, b, convs);
        count += int(convs.size());
    }
    return count;
}

std::string describe_model(const ModelGraph& graph, int input_hw) {
    const auto shapes = layer_output_shapes(graph, input_hw);
    std::string out;
    char line[160];
    std::snprintf(line, sizeof(line), "%3s  %-10s  %-26s  %-8s  %-12s  %12s\n",
                  "idx", "kind", "params", "inputs", "out-shape", "param-count");
    out += line;
    for (size_t i = 0; i < graph.layers.size(); ++i) {
        const BlockSpec& b = graph.layers[i];
        char params[64] = "";
        switch (b.kind) {
            case BlockKind::ConvBlock:
                std::snprintf(params, sizeof(params), "%d->%d k%d s%d", b.c_in,
                              b.c_out, b.kernel, b.stride);
                break;
            case BlockKind::C3:
            case BlockKind::C2f:
                std::snprintf(params, sizeof(params), "%d->%d n=%d%s", b.c_in,
                              b.c_out, b.repeats,
                              b.shortcut ? "" : " no-shortcut");
                break;
            case BlockKind::SPPF:
            case BlockKind::SPPFCSP:
                std::snprintf(params, sizeof(params), "%d->%d k5", b.c_in,
                              b.c_out);
                break;
            case BlockKind::DetectHead:
                std::snprintf(params, sizeof(params), "nc=%d -> 3x%d",
                              graph.nc, b.c_out);
                break;
            default:
                break;
        }
        std::string inputs;
        if (b.input_refs.empty()) {
            inputs = "input";
        } else {
            for (size_t j = 0; j < b.input_refs.size(); ++j) {
                if (j) inputs += ",";
                inputs += std::to_string(b.input_refs[j]);
            }
        }
        char shape[32];
        std::snprintf(shape, sizeof(shape), "%dx%dx%d", shapes[i][0],
                      shapes[i][1], shapes[i][2]);
        std::snprintf(line, sizeof(line), "%3zu  %-10s  %-26s  %-8s  %-12s  %12lld\n",
                      i, block_kind_name(b.kind).c_str(), params,
                      inputs.c_str(), shape,
                      static_cast<long long>(count_layer_params(graph, int(i))));
        out += line;
    }
    return out;
}

} // namespace strawdet
