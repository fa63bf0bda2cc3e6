#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "strawdet/model.hpp"

namespace strawdet {

struct NamedTensor {
    std::vector<uint32_t> shape;
    std::vector<float> data;

    int64_t count() const {
        int64_t p = 1;
        for (uint32_t d : shape) p *= d;
        return p;
    }
};

// Insertion-ordered name -> tensor map. Duplicate names are rejected.
class WeightStore {
public:
    void insert(const std::string& name, NamedTensor tensor);
    bool contains(const std::string& name) const;
    const NamedTensor& get(const std::string& name) const;
    const std::vector<std::string>& names() const { return order_; }
    size_t size() const { return order_.size(); }

private:
    std::vector<std::string> order_;
    std::unordered_map<std::string, NamedTensor> tensors_;
};

enum class SlotKind { ConvWeight, ConvBias, BnGamma, BnBeta, BnMean, BnVar };

struct SlotInfo {
    std::string name;
    std::vector<uint32_t> shape;
    SlotKind kind;
    int fan_in = 0;

    bool trainable() const {
        return kind != SlotKind::BnMean && kind != SlotKind::BnVar;
    }
    int64_t count() const {
        int64_t p = 1;
        for (uint32_t d : shape) p *= d;
        return p;
    }
};

// Every weight slot the graph demands, in the canonical fill/save order.
std::vector<SlotInfo> weight_slots(const ModelGraph& graph);

// Deterministic test weights: one SplitMix64 stream per model, slots filled
// in graph order, conv weights and biases uniform in [-b, b] with
// b = sqrt(1 / fan_in). Batch norm starts at gamma=1, beta=0, mean=0, var=1
// without consuming the stream.
WeightStore init_weights(const ModelGraph& graph, uint64_t seed);

// Checks that the store carries exactly the slots the graph demands with
// matching shapes. Errors name the offending slot.
void check_weights(const ModelGraph& graph, const WeightStore& store);

// "SDWT" container, little-endian, CRC32 trailer. See README for the layout.
void save_weights(const WeightStore& store, const std::string& path);
WeightStore load_weights(const std::string& path);

std::vector<uint8_t> encode_weights(const WeightStore& store);
WeightStore decode_weights(const std::vector<uint8_t>& bytes);

uint32_t crc32(const uint8_t* data, size_t len);

} // namespace strawdet
