#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "strawdet/image.hpp"
#include "strawdet/metrics.hpp"
#include "strawdet/model.hpp"
#include "strawdet/tensor.hpp"

namespace strawdet {

// One decoded box in whatever frame the producing step documents:
// decode() emits the letterboxed frame, unletterbox() maps back to
// original-image pixels.
struct Detection {
    float cx = 0, cy = 0, w = 0, h = 0;
    int class_id = 0;
    float score = 0.0f;
};

struct LetterboxTransform {
    double scale = 1.0;
    int pad_x = 0, pad_y = 0;
    int orig_w = 0, orig_h = 0;
    int target = 0;
};

struct AnchorSet {
    AnchorGrid whs{};               // [scale][anchor] = (w, h) pixels
    std::array<int, 3> strides{8, 16, 32};

    // The upstream 9-anchor COCO set.
    static AnchorSet defaults();
};

// Aspect-preserving bilinear resize plus symmetric gray (114) padding to
// target x target.
std::pair<RasterImage, LetterboxTransform> letterbox(const RasterImage& img,
                                                     int target);

Detection unletterbox(const Detection& det, const LetterboxTransform& t);

// Anchor decode of the raw head maps. Per cell and anchor, with s = sigmoid:
//   bx = (2 s(tx) - 0.5 + grid_x) * stride      bw = anchor_w * (2 s(tw))^2
//   score = s(obj) * max_c s(cls_c)
// Emitted when score exceeds conf_thresh, argmax class.
std::vector<Detection> decode(const std::array<Tensor, 3>& heads,
                              const AnchorSet& anchors, float conf_thresh,
                              int nc);

// Class-aware greedy suppression by descending score; survivors of one class
// have pairwise IoU < iou_thresh. Output is score-descending.
std::vector<Detection> nms(std::vector<Detection> dets, float iou_thresh);

// Per-class box colors from the detection figures: immature red, nearly
// mature orange, mature pink.
std::array<uint8_t, 3> class_color(int class_id);

// Draws 2-px rectangle borders, clipped at image bounds. Score labels are
// carried in the detection text output, not rasterized.
RasterImage render(const RasterImage& img, const std::vector<Detection>& dets);

// One line per box: "class_id score cx cy w h", 4 decimal places.
std::string format_detections(const std::vector<Detection>& dets);
std::vector<Detection> parse_detections(const std::string& text);

Box to_box(const Detection& det);

} // namespace strawdet
