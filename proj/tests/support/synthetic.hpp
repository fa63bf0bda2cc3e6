#pragma once

// Shared synthetic fixtures: ideal-logit head construction that decode()
// inverts exactly, and planted-rectangle scenes with ground-truth labels.

#include <array>
#include <cmath>
#include <vector>

#include "strawdet/dataset.hpp"
#include "strawdet/detect.hpp"
#include "strawdet/image.hpp"
#include "strawdet/rng.hpp"
#include "strawdet/tensor.hpp"

namespace synthetic {

using strawdet::AnchorSet;
using strawdet::Detection;
using strawdet::RasterImage;
using strawdet::Tensor;

inline float logit(float p) { return std::log(p / (1.0f - p)); }

// Heads where each target box owns one (scale, anchor, cell) slot carrying
// the logits that decode to it; everywhere else the objectness is driven
// hard negative. Targets are letterboxed-frame pixels.
inline std::array<Tensor, 3> make_ideal_heads(
    const std::vector<Detection>& targets, const AnchorSet& anchors, int nc,
    int input_size) {
    const int per_anchor = nc + 5;
    std::array<Tensor, 3> heads;
    for (int s = 0; s < 3; ++s) {
        const int g = input_size / anchors.strides[s];
        heads[s] = Tensor(1, 3 * per_anchor, g, g);
        for (int a = 0; a < 3; ++a)
            for (int y = 0; y < g; ++y)
                for (int x = 0; x < g; ++x)
                    heads[s].at(0, a * per_anchor + 4, y, x) = -20.0f;
    }

    for (const Detection& t : targets) {
        // best anchor by size ratio, subject to the squared-sigmoid form
        // staying invertible (w < 4 * anchor_w)
        int bs = -1, ba = -1;
        float best = 1e30f;
        for (int s = 0; s < 3; ++s)
            for (int a = 0; a < 3; ++a) {
                const float aw = anchors.whs[s][a].first;
                const float ah = anchors.whs[s][a].second;
                const float r = std::max(
                    {t.w / aw, aw / t.w, t.h / ah, ah / t.h});
                if (t.w >= 3.96f * aw || t.h >= 3.96f * ah) continue;
                if (r < best) {
                    best = r;
                    bs = s;
                    ba = a;
                }
            }
        if (bs < 0) continue;  // degenerate target, caller picked bad sizes

        const int stride = anchors.strides[bs];
        Tensor& head = heads[bs];
        const int gx = std::min(int(t.cx / stride), head.w - 1);
        const int gy = std::min(int(t.cy / stride), head.h - 1);
        const int base = ba * (nc + 5);

        const float off_x = t.cx / stride - gx;  // in [0,1)
        const float off_y = t.cy / stride - gy;
        head.at(0, base + 0, gy, gx) = logit((off_x + 0.5f) / 2.0f);
        head.at(0, base + 1, gy, gx) = logit((off_y + 0.5f) / 2.0f);
        head.at(0, base + 2, gy, gx) =
            logit(std::sqrt(t.w / anchors.whs[bs][ba].first) / 2.0f);
        head.at(0, base + 3, gy, gx) =
            logit(std::sqrt(t.h / anchors.whs[bs][ba].second) / 2.0f);
        head.at(0, base + 4, gy, gx) = 20.0f;
        head.at(0, base + 5 + t.class_id, gy, gx) = 20.0f;
    }
    return heads;
}

struct Scene {
    RasterImage image;
    std::vector<strawdet::LabelRecord> labels;
};

// Dark background with 1-3 solid class-colored rectangles, spread into
// horizontal thirds so every box owns its own head cell.
inline Scene planted_scene(strawdet::Rng& rng, int width = 480,
                           int height = 360) {
    Scene scene;
    scene.image = RasterImage(width, height, 24);
    const int boxes = 1 + int(rng.below(3));
    for (int i = 0; i < boxes; ++i) {
        const int cls = int(rng.below(3));
        const int bw = 40 + int(rng.below(51));
        const int bh = 40 + int(rng.below(51));
        const int third = width / 3;
        const int cx = i * third + third / 2 + int(rng.below(21)) - 10;
        const int cy = height / 2 + int(rng.below(81)) - 40;
        const auto color = strawdet::class_color(cls);
        for (int y = cy - bh / 2; y < cy + bh / 2; ++y)
            for (int x = cx - bw / 2; x < cx + bw / 2; ++x) {
                if (x < 0 || x >= width || y < 0 || y >= height) continue;
                uint8_t* p = scene.image.px(x, y);
                p[0] = color[0];
                p[1] = color[1];
                p[2] = color[2];
            }
        strawdet::LabelRecord rec;
        rec.class_id = cls;
        rec.cx = float(cx) / width;
        rec.cy = float(cy) / height;
        rec.w = float(bw) / width;
        rec.h = float(bh) / height;
        scene.labels.push_back(rec);
    }
    return scene;
}

} // namespace synthetic
