#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace strawdet {

enum class ArchId { yolov5s, yolov5s_c2f, yolov5s_straw };

ArchId parse_arch(const std::string& name);
std::string arch_name(ArchId arch);

enum class BlockKind {
    ConvBlock,
    Bottleneck,
    C3,
    C2f,
    SPPF,
    SPPFCSP,
    Upsample,
    Concat,
    DetectHead,
};

std::string block_kind_name(BlockKind kind);

// One layer slot of the graph. input_refs hold indices of producer layers;
// layer 0 reads the network input and has no refs.
struct BlockSpec {
    BlockKind kind = BlockKind::ConvBlock;
    int c_in = 0;
    int c_out = 0;
    int kernel = 1;
    int stride = 1;
    int padding = 0;
    int repeats = 1;        // bottleneck count for C3 / C2f
    bool shortcut = false;  // residual add inside bottlenecks
    std::vector<int> input_refs;
};

using AnchorGrid = std::array<std::array<std::pair<float, float>, 3>, 3>;

struct ModelGraph {
    ArchId arch = ArchId::yolov5s;
    int nc = 0;
    std::vector<BlockSpec> layers;
    AnchorGrid anchors{};
    std::array<int, 3> strides{8, 16, 32};

    int head_index() const;
    int head_channels() const { return 3 * (nc + 5); }
};

// Canonical 25-slot small-variant graph. The feature blocks are C3 for
// yolov5s and C2f otherwise; the pyramid block is SPPF except SPPFCSP for
// yolov5s-straw. The neck is identical across the three architectures.
ModelGraph build_model(ArchId arch, int nc);

// Rejects forward references and inconsistent channel wiring.
void validate_graph(const ModelGraph& graph);

// Trainable parameters: conv weights + conv biases + one (gamma, beta) pair
// per batch-norm channel. Running statistics are buffers, not parameters.
int64_t count_params(const ModelGraph& graph);
int64_t count_layer_params(const ModelGraph& graph, int layer);

// Per-forward-pass GFLOPs at the given square input, batch 1, counting
// 2 * multiply-accumulates over convolution layers only.
double count_flops(const ModelGraph& graph, int input_hw);

// Per-layer (channels, height, width) at the given square input.
std::vector<std::array<int, 3>> layer_output_shapes(const ModelGraph& graph,
                                                    int input_hw);

// Plain-text table: index, kind, params, inputs, out-shape, param-count.
std::string describe_model(const ModelGraph& graph, int input_hw);

int conv_op_count(const ModelGraph& graph);

} // namespace strawdet
