#include "strawdet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "strawdet/error.hpp"

namespace strawdet {

float iou(const Box& a, const Box& b) {
    const float ax0 = a.cx - a.w / 2, ax1 = a.cx + a.w / 2;
    const float ay0 = a.cy - a.h / 2, ay1 = a.cy + a.h / 2;
    const float bx0 = b.cx - b.w / 2, bx1 = b.cx + b.w / 2;
    const float by0 = b.cy - b.h / 2, by1 = b.cy + b.h / 2;
    const float ix = std::max(0.0f, std::min(ax1, bx1) - std::max(ax0, bx0));
    const float iy = std::max(0.0f, std::min(ay1, by1) - std::max(ay0, by0));
    const float inter = ix * iy;
    const float uni = a.w * a.h + b.w * b.h - inter;
    return uni > 0.0f ? inter / uni : 0.0f;
}

MatchResult match_detections(const std::vector<ScoredBox>& dets,
                             std::vector<GtBox>& gts, float iou_thresh) {
    MatchResult r;
    r.tp.assign(dets.size(), false);
    for (size_t i = 0; i < dets.size(); ++i) {
        int best = -1;
        float best_iou = 0.0f;
        for (size_t j = 0; j < gts.size(); ++j) {
            if (gts[j].matched || gts[j].class_id != dets[i].class_id)
                continue;
            const float v = iou(dets[i].box, gts[j].box);
            if (v > best_iou) {
                best_iou = v;
                best = int(j);
            }
        }
        if (best >= 0 && best_iou > iou_thresh) {
            gts[best].matched = true;
            r.tp[i] = true;
        }
    }
    for (const GtBox& g : gts)
        if (!g.matched) ++r.fn;
    return r;
}

PrecisionRecall precision_recall(int64_t tp, int64_t fp, int64_t fn) {
    require(tp >= 0 && fp >= 0 && fn >= 0, "precision_recall: negative counts");
    PrecisionRecall pr;
    if (tp + fp == 0) {
        pr.precision_defined = false;
    } else {
        pr.precision = double(tp) / double(tp + fp);
    }
    if (tp + fn == 0) {
        pr.recall_defined = false;
    } else {
        pr.recall = double(tp) / double(tp + fn);
    }
    return pr;
}

double average_precision(const PrCurve& curve) {
    // Monotone envelope: precision at each point becomes the max precision
    // at any recall >= its own. Points arrive recall-ascending.
    std::vector<PrPoint> env = curve.points;
    for (int i = int(env.size()) - 2; i >= 0; --i)
        env[i].precision = std::max(env[i].precision, env[i + 1].precision);

    double sum = 0.0;
    for (int k = 0; k <= 100; ++k) {
        const double r = k / 100.0;
        // first point with recall >= r carries the envelope value
        double p = 0.0;
        for (const PrPoint& pt : env) {
            if (pt.recall >= r - 1e-12) {
                p = pt.precision;
                break;
            }
        }
        sum += p;
    }
    return sum / 101.0;
}

double mean_ap(const std::vector<double>& aps) {
    require(!aps.empty(), "mean_ap: no defined per-class APs");
    double sum = 0.0;
    for (double ap : aps) sum += ap;
    return sum / double(aps.size());
}

EvalReport evaluate(const std::vector<std::vector<ScoredBox>>& dets_per_image,
                    const std::vector<std::vector<GtBox>>& gts_per_image,
                    int nc, float iou_thresh) {
    require(dets_per_image.size() == gts_per_image.size(),
            "evaluate: image count mismatch (", dets_per_image.size(), " vs ",
            gts_per_image.size(), ")");

    EvalReport report;
    std::vector<double> defined_aps;
    for (int cls = 0; cls < nc; ++cls) {
        ClassEval ce;
        ce.class_id = cls;
        ce.curve.class_id = cls;

        // pool this class's detections over all images, confidence-descending;
        // ties resolved by image order then input index
        struct Ref {
            float score;
            int image;
            int index;
        };
        std::vector<Ref> refs;
        for (size_t img = 0; img < dets_per_image.size(); ++img)
            for (size_t d = 0; d < dets_per_image[img].size(); ++d)
                if (dets_per_image[img][d].class_id == cls)
                    refs.push_back(
                        {dets_per_image[img][d].score, int(img), int(d)});
        std::stable_sort(refs.begin(), refs.end(),
                         [](const Ref& a, const Ref& b) {
                             return a.score > b.score;
                         });

        int64_t total_gt = 0;
        std::vector<std::vector<bool>> matched(gts_per_image.size());
        for (size_t img = 0; img < gts_per_image.size(); ++img) {
            matched[img].assign(gts_per_image[img].size(), false);
            for (const GtBox& g : gts_per_image[img])
                if (g.class_id == cls) ++total_gt;
        }
        ce.gt_count = total_gt;

        int64_t tp = 0, fp = 0;
        for (const Ref& ref : refs) {
            const ScoredBox& det = dets_per_image[ref.image][ref.index];
            const auto& gts = gts_per_image[ref.image];
            int best = -1;
            float best_iou = 0.0f;
            for (size_t j = 0; j < gts.size(); ++j) {
                if (matched[ref.image][j] || gts[j].class_id != cls) continue;
                const float v = iou(det.box, gts[j].box);
                if (v > best_iou) {
                    best_iou = v;
                    best = int(j);
                }
            }
            if (best >= 0 && best_iou > iou_thresh) {
                matched[ref.image][best] = true;
                ++tp;
            } else {
                ++fp;
            }
            if (total_gt > 0)
                ce.curve.points.push_back({double(tp) / double(total_gt),
                                           double(tp) / double(tp + fp)});
        }
        ce.tp = tp;
        ce.fp = fp;
        ce.fn = total_gt - tp;
        ce.pr = precision_recall(tp, fp, ce.fn);
        if (total_gt > 0) {
            ce.ap = average_precision(ce.curve);
            defined_aps.push_back(*ce.ap);
        }
        report.classes.push_back(std::move(ce));
    }

    report.defined_classes = int(defined_aps.size());
    require(!defined_aps.empty(),
            "evaluate: no class has ground truth; mAP undefined");
    report.map = mean_ap(defined_aps);
    return report;
}

namespace {

const char* class_label(int class_id) {
    switch (class_id) {
        case 0: return "immature";
        case 1: return "nearly mature";
        case 2: return "mature";
        default: return "class";
    }
}

} // namespace

std::string report_text(const EvalReport& report, bool color) {
    const char* bold = color ? "\033[1m" : "";
    const char* green = color ? "\033[32m" : "";
    const char* reset = color ? "\033[0m" : "";
    std::string out;
    char line[160];
    std::snprintf(line, sizeof(line), "%s%-16s %8s %10s %8s %8s%s\n", bold,
                  "Maturity", "Number", "Precision", "Recall", "AP", reset);
    out += line;
    for (const ClassEval& ce : report.classes) {
        char ap[16] = "n/a";
        if (ce.ap) std::snprintf(ap, sizeof(ap), "%.3f", *ce.ap);
        char label[24];
        if (ce.class_id < 3) {
            std::snprintf(label, sizeof(label), "%s", class_label(ce.class_id));
        } else {
            std::snprintf(label, sizeof(label), "class %d", ce.class_id);
        }
        std::snprintf(line, sizeof(line), "%-16s %8lld %10.3f %8.3f %8s\n",
                      label, static_cast<long long>(ce.gt_count),
                      ce.pr.precision, ce.pr.recall, ap);
        out += line;
    }
    std::snprintf(line, sizeof(line), "%smAP@0.5: %.4f%s (%d classes)\n",
                  green, report.map, reset, report.defined_classes);
    out += line;
    return out;
}

std::string report_csv(const EvalReport& report) {
    std::string out = "class,count,precision,recall,ap\n";
    char line[128];
    for (const ClassEval& ce : report.classes) {
        if (ce.ap) {
            std::snprintf(line, sizeof(line), "%d,%lld,%.6f,%.6f,%.6f\n",
                          ce.class_id, static_cast<long long>(ce.gt_count),
                          ce.pr.precision, ce.pr.recall, *ce.ap);
        } else {
            std::snprintf(line, sizeof(line), "%d,%lld,%.6f,%.6f,\n",
                          ce.class_id, static_cast<long long>(ce.gt_count),
                          ce.pr.precision, ce.pr.recall);
        }
        out += line;
    }
    std::snprintf(line, sizeof(line), "mAP,,,,%.6f\n", report.map);
    out += line;
    return out;
}

} // namespace strawdet
