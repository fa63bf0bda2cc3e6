#include "strawdet/weights.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "strawdet/error.hpp"
#include "strawdet/rng.hpp"

namespace strawdet {

void WeightStore::insert(const std::string& name, NamedTensor tensor) {
    require(!contains(name), "weight store: duplicate tensor name '", name,
            "'");
    require(int64_t(tensor.data.size()) == tensor.count(),
            "weight store: tensor '", name, "' has ", tensor.data.size(),
            " values but shape product ", tensor.count());
    order_.push_back(name);
    tensors_.emplace(name, std::move(tensor));
}

bool WeightStore::contains(const std::string& name) const {
    return tensors_.count(name) != 0;
}

const NamedTensor& WeightStore::get(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) fail("missing weight slot '", name, "'");
    return it->second;
}

namespace {

struct SlotBuilder {
    std::vector<SlotInfo>& slots;

    void conv_bn(const std::string& prefix, int c_in, int c_out, int k) {
        const int fan_in = c_in * k * k;
        slots.push_back({prefix + ".conv.weight",
                         {uint32_t(c_out), uint32_t(c_in), uint32_t(k),
                          uint32_t(k)},
                         SlotKind::ConvWeight, fan_in});
        slots.push_back({prefix + ".bn.gamma", {uint32_t(c_out)},
                         SlotKind::BnGamma, 0});
        slots.push_back({prefix + ".bn.beta", {uint32_t(c_out)},
                         SlotKind::BnBeta, 0});
        slots.push_back({prefix + ".bn.mean", {uint32_t(c_out)},
                         SlotKind::BnMean, 0});
        slots.push_back({prefix + ".bn.var", {uint32_t(c_out)},
                         SlotKind::BnVar, 0});
    }

    void plain_conv(const std::string& prefix, int c_in, int c_out, int k) {
        const int fan_in = c_in * k * k;
        slots.push_back({prefix + ".weight",
                         {uint32_t(c_out), uint32_t(c_in), uint32_t(k),
                          uint32_t(k)},
                         SlotKind::ConvWeight, fan_in});
        slots.push_back({prefix + ".bias", {uint32_t(c_out)},
                         SlotKind::ConvBias, fan_in});
    }
};

} // namespace

std::vector<SlotInfo> weight_slots(const ModelGraph& graph) {
    std::vector<SlotInfo> slots;
    SlotBuilder sb{slots};
    for (size_t i = 0; i < graph.layers.size(); ++i) {
        const BlockSpec& b = graph.layers[i];
        const std::string p = std::to_string(i);
        switch (b.kind) {
            case BlockKind::ConvBlock:
                sb.conv_bn(p, b.c_in, b.c_out, b.kernel);
                break;
            case BlockKind::Bottleneck:
                sb.conv_bn(p + ".cv1", b.c_in, b.c_out, 1);
                sb.conv_bn(p + ".cv2", b.c_out, b.c_out, 3);
                break;
            case BlockKind::C3: {
                const int h = b.c_out / 2;
                sb.conv_bn(p + ".cv1", b.c_in, h, 1);
                sb.conv_bn(p + ".cv2", b.c_in, h, 1);
                sb.conv_bn(p + ".cv3", 2 * h, b.c_out, 1);
                for (int j = 0; j < b.repeats; ++j) {
                    const std::string m = p + ".m" + std::to_string(j);
                    sb.conv_bn(m + ".cv1", h, h, 1);
                    sb.conv_bn(m + ".cv2", h, h, 3);
                }
                break;
            }
            case BlockKind::C2f: {
                const int h = b.c_out / 2;
                sb.conv_bn(p + ".cv1", b.c_in, 2 * h, 1);
                sb.conv_bn(p + ".cv2", (2 + b.repeats) * h, b.c_out, 1);
                for (int j = 0; j < b.repeats; ++j) {
                    const std::string m = p + ".m" + std::to_string(j);
                    sb.conv_bn(m + ".cv1", h, h, 3);
                    sb.conv_bn(m + ".cv2", h, h, 3);
                }
                break;
            }
            case BlockKind::SPPF: {
                const int h = b.c_in / 2;
                sb.conv_bn(p + ".cv1", b.c_in, h, 1);
                sb.conv_bn(p + ".cv2", 4 * h, b.c_out, 1);
                break;
            }
            case BlockKind::SPPFCSP: {
                const int h = b.c_out / 2;
                sb.conv_bn(p + ".cv1", b.c_in, h, 1);
                sb.conv_bn(p + ".cv2", b.c_in, h, 1);
                sb.conv_bn(p + ".cv3", h, h, 3);
                sb.conv_bn(p + ".cv4", h, h, 1);
                sb.conv_bn(p + ".cv5", 4 * h, h, 1);
                sb.conv_bn(p + ".cv6", h, h, 3);
                sb.conv_bn(p + ".cv7", 2 * h, b.c_out, 1);
                break;
            }
            case BlockKind::DetectHead:
                for (size_t j = 0; j < b.input_refs.size(); ++j)
                    sb.plain_conv(p + ".m" + std::to_string(j),
                                  graph.layers[b.input_refs[j]].c_out, b.c_out,
                                  1);
                break;
            case BlockKind::Upsample:
            case BlockKind::Concat:
                break;
        }
    }
    return slots;
}

WeightStore init_weights(const ModelGraph& graph, uint64_t seed) {
    WeightStore store;
    Rng rng(seed);
    for (const SlotInfo& s : weight_slots(graph)) {
        NamedTensor t;
        t.shape = s.shape;
        t.data.resize(size_t(s.count()));
        switch (s.kind) {
            case SlotKind::ConvWeight:
            case SlotKind::ConvBias: {
                const double b = std::sqrt(1.0 / s.fan_in);
                for (float& v : t.data)
                    v = float((2.0 * rng.uniform01() - 1.0) * b);
                break;
            }
            case SlotKind::BnGamma:
                std::fill(t.data.begin(), t.data.end(), 1.0f);
                break;
            case SlotKind::BnBeta:
            case SlotKind::BnMean:
                std::fill(t.data.begin(), t.data.end(), 0.0f);
                break;
            case SlotKind::BnVar:
                std::fill(t.data.begin(), t.data.end(), 1.0f);
                break;
        }
        store.insert(s.name, std::move(t));
    }
    return store;
}

void check_weights(const ModelGraph& graph, const WeightStore& store) {
    const auto slots = weight_slots(graph);
    for (const SlotInfo& s : slots) {
        const NamedTensor& t = store.get(s.name);  // throws when missing
        require(t.shape == s.shape, "weight slot '", s.name,
                "' has wrong shape for ", arch_name(graph.arch));
    }
    require(store.size() == slots.size(), "weight store has ", store.size(),
            " tensors but the graph demands ", slots.size());
}

// ---- SDWT container ------------------------------------------------------

uint32_t crc32(const uint8_t* data, size_t len) {
    static uint32_t table[256];
    static bool init = false;
    if (!init) {
        for (uint32_t i = 0; i < 256; ++i) {
            uint32_t c = i;
            for (int k = 0; k < 8; ++k)
                c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            table[i] = c;
        }
        init = true;
    }
    uint32_t crc = 0xFFFFFFFFu;
    for (size_t i = 0; i < len; ++i)
        crc = table[(crc ^ data[i]) & 0xFF] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

namespace {

constexpr char kMagic[4] = {'S', 'D', 'W', 'T'};
constexpr uint32_t kVersion = 1;

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(uint8_t(v & 0xFF));
    out.push_back(uint8_t(v >> 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(uint8_t((v >> (8 * i)) & 0xFF));
}

struct Reader {
    const std::vector<uint8_t>& b;
    size_t pos = 0;

    void need(size_t n) {
        require(b.size() - pos >= n,
                "weight file: unexpected end of file at byte ", pos);
    }
    uint8_t u8() {
        need(1);
        return b[pos++];
    }
    uint16_t u16() {
        need(2);
        uint16_t v = uint16_t(b[pos]) | uint16_t(b[pos + 1]) << 8;
        pos += 2;
        return v;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= uint32_t(b[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
};

} // namespace

std::vector<uint8_t> encode_weights(const WeightStore& store) {
    std::vector<uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    put_u32(out, kVersion);
    put_u32(out, uint32_t(store.size()));
    for (const std::string& name : store.names()) {
        const NamedTensor& t = store.get(name);
        require(name.size() <= 0xFFFF, "tensor name too long: ", name);
        put_u16(out, uint16_t(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        out.push_back(uint8_t(t.shape.size()));
        for (uint32_t d : t.shape) put_u32(out, d);
        for (float v : t.data) {
            uint32_t bits;
            std::memcpy(&bits, &v, 4);
            put_u32(out, bits);
        }
    }
    put_u32(out, crc32(out.data(), out.size()));
    return out;
}

WeightStore decode_weights(const std::vector<uint8_t>& bytes) {
    require(bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic, 4) == 0,
            "weight file: bad magic");
    require(bytes.size() >= 16, "weight file: unexpected end of file");
    const uint32_t stored_crc =
        uint32_t(bytes[bytes.size() - 4]) |
        uint32_t(bytes[bytes.size() - 3]) << 8 |
        uint32_t(bytes[bytes.size() - 2]) << 16 |
        uint32_t(bytes[bytes.size() - 1]) << 24;
    require(crc32(bytes.data(), bytes.size() - 4) == stored_crc,
            "weight file: CRC32 mismatch (corrupt file)");

    Reader r{bytes, 4};
    const uint32_t version = r.u32();
    require(version == kVersion, "weight file: unsupported version ", version);
    const uint32_t count = r.u32();

    WeightStore store;
    for (uint32_t i = 0; i < count; ++i) {
        const uint16_t name_len = r.u16();
        r.need(name_len);
        std::string name(bytes.begin() + r.pos, bytes.begin() + r.pos + name_len);
        r.pos += name_len;
        const uint8_t ndim = r.u8();
        NamedTensor t;
        int64_t total = 1;
        for (uint8_t d = 0; d < ndim; ++d) {
            t.shape.push_back(r.u32());
            total *= t.shape.back();
        }
        require(total >= 0 && total < (int64_t(1) << 31),
                "weight file: implausible tensor size for '", name, "'");
        t.data.resize(size_t(total));
        for (int64_t j = 0; j < total; ++j) {
            const uint32_t bits = r.u32();
            std::memcpy(&t.data[j], &bits, 4);
        }
        store.insert(name, std::move(t));  // rejects duplicates
    }
    require(r.pos == bytes.size() - 4, "weight file: ",
            bytes.size() - 4 - r.pos, " trailing bytes before CRC");
    return store;
}

void save_weights(const WeightStore& store, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), "cannot open ", path, " for writing");
    const auto bytes = encode_weights(store);
    out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    require(out.good(), "write failed for ", path);
}

WeightStore load_weights(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open weight file ", path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    try {
        return decode_weights(bytes);
    } catch (const Error& e) {
        fail(path, ": ", e.what());
    }
}

} // namespace strawdet
