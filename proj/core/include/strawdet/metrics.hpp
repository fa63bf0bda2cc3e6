#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace strawdet {

// Axis-aligned box, center + size, any consistent unit.
struct Box {
    float cx = 0, cy = 0, w = 0, h = 0;
};

// Intersection area over union area, in [0,1].
float iou(const Box& a, const Box& b);

struct GtBox {
    int class_id = 0;
    Box box;
    bool matched = false;
};

struct ScoredBox {
    Box box;
    int class_id = 0;
    float score = 0.0f;
};

struct MatchResult {
    std::vector<bool> tp;  // one flag per detection, input order
    int fn = 0;            // ground truths left unmatched
};

// Greedy confidence-order matching for one image. A detection is TP iff its
// best-IoU unmatched same-class ground truth exceeds iou_thresh (strictly),
// which then becomes matched. dets must already be sorted by descending
// score; ties keep input order.
MatchResult match_detections(const std::vector<ScoredBox>& dets,
                             std::vector<GtBox>& gts,
                             float iou_thresh = 0.5f);

struct PrecisionRecall {
    double precision = 0.0;
    double recall = 0.0;
    bool precision_defined = true;
    bool recall_defined = true;
};

// P = TP/(TP+FP), R = TP/(TP+FN); zero denominators give 0 with the
// corresponding defined flag cleared.
PrecisionRecall precision_recall(int64_t tp, int64_t fp, int64_t fn);

struct PrPoint {
    double recall = 0.0;
    double precision = 0.0;
};

// Points from a descending-confidence sweep; recall is non-decreasing.
struct PrCurve {
    int class_id = 0;
    std::vector<PrPoint> points;
};

// Monotone precision envelope, then 101-point interpolation over recall
// [0,1]. A class without ground truth has no defined AP.
double average_precision(const PrCurve& curve);

// Arithmetic mean of the defined per-class APs. Errors when empty.
double mean_ap(const std::vector<double>& aps);

struct ClassEval {
    int class_id = 0;
    int64_t gt_count = 0;
    int64_t tp = 0, fp = 0, fn = 0;
    PrecisionRecall pr;               // operating point over all supplied dets
    std::optional<double> ap;         // absent when the class has no GT
    PrCurve curve;
};

struct EvalReport {
    std::vector<ClassEval> classes;
    double map = 0.0;
    int defined_classes = 0;
};

// Dataset-level sweep: detections pooled over images per class, sorted by
// descending score (ties: image order, then input index), matched greedily
// per image.
EvalReport evaluate(const std::vector<std::vector<ScoredBox>>& dets_per_image,
                    const std::vector<std::vector<GtBox>>& gts_per_image,
                    int nc, float iou_thresh = 0.5f);

// Aligned table (Maturity, Number, Precision, Recall, AP) plus an mAP line.
std::string report_text(const EvalReport& report, bool color);
// class,count,precision,recall,ap rows with a final mAP row.
std::string report_csv(const EvalReport& report);

} // namespace strawdet
