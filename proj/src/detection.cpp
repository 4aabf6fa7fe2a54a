#include "mcsim/detection.hpp"

#include <algorithm>
#include <numeric>

#include "mcsim/errors.hpp"

namespace mcsim {

namespace {

void validate_box(const BBox& b) {
    if (!(b.x2 > b.x1) || !(b.y2 > b.y1))
        throw OutOfRangeError("detection: box corners must satisfy x2 > x1, y2 > y1");
}

} // namespace

double iou(const BBox& a, const BBox& b) {
    validate_box(a);
    validate_box(b);
    const double ix = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
    const double iy = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
    if (ix <= 0.0 || iy <= 0.0) return 0.0;
    const double inter = ix * iy;
    return inter / (a.area() + b.area() - inter);
}

DetectionMetrics detection_metrics(const DetectionEval& e) {
    for (const ScoredBox& p : e.predictions) {
        validate_box(p.box);
        if (p.confidence < 0.0 || p.confidence > 1.0)
            throw OutOfRangeError("detection: confidence outside [0, 1]");
    }
    for (const BBox& g : e.ground_truth) validate_box(g);

    DetectionMetrics m;
    const std::size_t n_pred = e.predictions.size();
    const std::size_t n_gt = e.ground_truth.size();
    m.false_negatives = static_cast<int>(n_gt);
    if (n_pred == 0) {
        m.precision = 1.0;
        m.recall = n_gt == 0 ? 1.0 : 0.0;
        m.ap = n_gt == 0 ? 1.0 : 0.0;
        return m;
    }
    if (n_gt == 0) {
        m.false_positives = static_cast<int>(n_pred);
        m.precision = 0.0;
        m.recall = 1.0;
        m.ap = 0.0;
        return m;
    }

    std::vector<std::size_t> order(n_pred);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return e.predictions[a].confidence > e.predictions[b].confidence;
    });

    // Greedy pass in confidence order: each prediction targets its best-IoU
    // ground truth; the first to reach one at/above threshold claims it.
    std::vector<bool> claimed(n_gt, false);
    std::vector<double> precision_at(n_pred), recall_at(n_pred);
    int tp = 0, fp = 0;
    for (std::size_t rank = 0; rank < n_pred; ++rank) {
        const ScoredBox& p = e.predictions[order[rank]];
        std::size_t best_g = 0;
        double best_iou = -1.0;
        for (std::size_t g = 0; g < n_gt; ++g) {
            const double v = iou(p.box, e.ground_truth[g]);
            if (v > best_iou) {
                best_iou = v;
                best_g = g;
            }
        }
        if (best_iou >= e.iou_threshold && !claimed[best_g]) {
            claimed[best_g] = true;
            ++tp;
        } else {
            ++fp;
        }
        precision_at[rank] = static_cast<double>(tp) / static_cast<double>(rank + 1);
        recall_at[rank] = static_cast<double>(tp) / static_cast<double>(n_gt);
    }

    // All-points interpolation: walk the curve backwards keeping the best
    // precision seen at or beyond each recall level.
    double ap = 0.0, best_prec = 0.0;
    for (std::size_t i = n_pred; i-- > 0;) {
        best_prec = std::max(best_prec, precision_at[i]);
        const double prev_recall = i == 0 ? 0.0 : recall_at[i - 1];
        ap += (recall_at[i] - prev_recall) * best_prec;
    }

    m.ap = ap;
    m.precision = precision_at[n_pred - 1];
    m.recall = recall_at[n_pred - 1];
    m.true_positives = tp;
    m.false_positives = fp;
    m.false_negatives = static_cast<int>(n_gt) - tp;
    return m;
}

} // namespace mcsim
