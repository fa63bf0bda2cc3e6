#include "strawdet/detect.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "strawdet/error.hpp"

namespace strawdet {

AnchorSet AnchorSet::defaults() {
    AnchorSet a;
    a.whs = {{{{{10, 13}, {16, 30}, {33, 23}}},
              {{{30, 61}, {62, 45}, {59, 119}}},
              {{{116, 90}, {156, 198}, {373, 326}}}}};
    return a;
}

std::pair<RasterImage, LetterboxTransform> letterbox(const RasterImage& img,
                                                     int target) {
    require(!img.empty(), "letterbox: empty image");
    require(target >= 1, "letterbox: bad target ", target);

    LetterboxTransform t;
    t.orig_w = img.width;
    t.orig_h = img.height;
    t.target = target;
    t.scale = std::min(double(target) / img.width, double(target) / img.height);
    const int new_w = int(std::lround(img.width * t.scale));
    const int new_h = int(std::lround(img.height * t.scale));
    t.pad_x = (target - new_w) / 2;
    t.pad_y = (target - new_h) / 2;

    RasterImage out(target, target, 114);
    const RasterImage resized =
        (new_w == img.width && new_h == img.height)
            ? img
            : resize_bilinear(img, new_w, new_h);
    for (int y = 0; y < new_h; ++y) {
        std::copy(resized.px(0, y), resized.px(0, y) + 3 * new_w,
                  out.px(t.pad_x, y + t.pad_y));
    }
    return {std::move(out), t};
}

Detection unletterbox(const Detection& det, const LetterboxTransform& t) {
    Detection out = det;
    out.cx = float((det.cx - t.pad_x) / t.scale);
    out.cy = float((det.cy - t.pad_y) / t.scale);
    out.w = float(det.w / t.scale);
    out.h = float(det.h / t.scale);
    return out;
}

namespace {

inline float sigmoid(float x) { return 1.0f / (1.0f + std::exp(-x)); }

} // namespace

std::vector<Detection> decode(const std::array<Tensor, 3>& heads,
                              const AnchorSet& anchors, float conf_thresh,
                              int nc) {
    const int per_anchor = nc + 5;
    std::vector<Detection> dets;
    for (int s = 0; s < 3; ++s) {
        const Tensor& t = heads[s];
        require(t.c == 3 * per_anchor, "decode: head ", s, " has ", t.c,
                " channels, expected 3*(nc+5) = ", 3 * per_anchor);
        const float stride = float(anchors.strides[s]);
        for (int a = 0; a < 3; ++a) {
            const int base = a * per_anchor;
            const float aw = anchors.whs[s][a].first;
            const float ah = anchors.whs[s][a].second;
            for (int gy = 0; gy < t.h; ++gy) {
                for (int gx = 0; gx < t.w; ++gx) {
                    const float obj = sigmoid(t.at(0, base + 4, gy, gx));
                    int best_cls = 0;
                    float best_logit = t.at(0, base + 5, gy, gx);
                    for (int c = 1; c < nc; ++c) {
                        const float l = t.at(0, base + 5 + c, gy, gx);
                        if (l > best_logit) {
                            best_logit = l;
                            best_cls = c;
                        }
                    }
                    const float score = obj * sigmoid(best_logit);
                    if (score <= conf_thresh) continue;

                    const float sx = 2.0f * sigmoid(t.at(0, base + 0, gy, gx));
                    const float sy = 2.0f * sigmoid(t.at(0, base + 1, gy, gx));
                    const float sw = 2.0f * sigmoid(t.at(0, base + 2, gy, gx));
                    const float sh = 2.0f * sigmoid(t.at(0, base + 3, gy, gx));
                    Detection d;
                    d.cx = (sx - 0.5f + gx) * stride;
                    d.cy = (sy - 0.5f + gy) * stride;
                    d.w = aw * sw * sw;
                    d.h = ah * sh * sh;
                    d.class_id = best_cls;
                    d.score = score;
                    dets.push_back(d);
                }
            }
        }
    }
    return dets;
}

Box to_box(const Detection& det) { return {det.cx, det.cy, det.w, det.h}; }

std::vector<Detection> nms(std::vector<Detection> dets, float iou_thresh) {
    std::vector<size_t> order(dets.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return dets[a].score > dets[b].score;
    });

    std::vector<Detection> kept;
    for (size_t idx : order) {
        const Detection& d = dets[idx];
        bool suppressed = false;
        for (const Detection& k : kept) {
            if (k.class_id != d.class_id) continue;
            if (iou(to_box(k), to_box(d)) >= iou_thresh) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(d);
    }
    return kept;
}

std::array<uint8_t, 3> class_color(int class_id) {
    switch (class_id) {
        case 0: return {255, 0, 0};      // immature: red
        case 1: return {255, 165, 0};    // nearly mature: orange
        case 2: return {255, 105, 180};  // mature: pink
        default: return {255, 255, 255};
    }
}

namespace {

void fill_rect(RasterImage& img, int x0, int y0, int x1, int y1,
               const std::array<uint8_t, 3>& color) {
    x0 = std::max(x0, 0);
    y0 = std::max(y0, 0);
    x1 = std::min(x1, img.width - 1);
    y1 = std::min(y1, img.height - 1);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            uint8_t* p = img.px(x, y);
            p[0] = color[0];
            p[1] = color[1];
            p[2] = color[2];
        }
}

} // namespace

RasterImage render(const RasterImage& img, const std::vector<Detection>& dets) {
    RasterImage out = img;
    for (const Detection& d : dets) {
        const auto color = class_color(d.class_id);
        const int left = int(std::lround(d.cx - d.w / 2));
        const int top = int(std::lround(d.cy - d.h / 2));
        const int right = int(std::lround(d.cx + d.w / 2));
        const int bottom = int(std::lround(d.cy + d.h / 2));
        fill_rect(out, left, top, right, top + 1, color);
        fill_rect(out, left, bottom - 1, right, bottom, color);
        fill_rect(out, left, top, left + 1, bottom, color);
        fill_rect(out, right - 1, top, right, bottom, color);
    }
    return out;
}

std::string format_detections(const std::vector<Detection>& dets) {
    std::string out;
    char line[128];
    for (const Detection& d : dets) {
        std::snprintf(line, sizeof(line), "%d %.4f %.4f %.4f %.4f %.4f\n",
                      d.class_id, d.score, d.cx, d.cy, d.w, d.h);
        out += line;
    }
    return out;
}

std::vector<Detection> parse_detections(const std::string& text) {
    std::vector<Detection> dets;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        Detection d;
        ls >> d.class_id >> d.score >> d.cx >> d.cy >> d.w >> d.h;
        require(!ls.fail(), "detections: malformed line ", line_no, ": '",
                line, "'");
        std::string extra;
        require(!(ls >> extra), "detections: trailing fields at line ",
                line_no);
        dets.push_back(d);
    }
    return dets;
}

} // namespace strawdet
