#pragma once

#include <array>
#include <vector>

#include "strawdet/model.hpp"
#include "strawdet/tensor.hpp"
#include "strawdet/weights.hpp"

namespace strawdet {

// Raw head maps at strides 8, 16, 32; channel count 3*(nc+5) each.
using HeadOutputs = std::array<Tensor, 3>;

// Optional capture of the pyramid block internals, for the pool-equivalence
// checks (sequential k=5 pools vs parallel k=5/9/13).
struct PyramidTrace {
    Tensor prepool;
    Tensor pool1, pool2, pool3;
};

// Immutable prepared model: batch norm folded into the convolutions once,
// then shared freely across threads. forward() allocates its own
// activations and never mutates shared state.
class Runtime {
public:
    Runtime(const ModelGraph& graph, const WeightStore& store);

    HeadOutputs forward(const Tensor& input, PyramidTrace* trace = nullptr) const;

    const ModelGraph& graph() const { return graph_; }

private:
    ModelGraph graph_;
    // Folded conv params per layer, in the canonical sub-slot order.
    std::vector<std::vector<ConvParams>> convs_;
    // Index of the last layer consuming each output, for activation reuse.
    std::vector<int> last_use_;
};

} // namespace strawdet
