#ifndef MCSIM_DETECTION_HPP
#define MCSIM_DETECTION_HPP

#include <vector>

namespace mcsim {

/// Axis-aligned box in pixel (or any planar) coordinates, corner form.
struct BBox {
    double x1 = 0.0, y1 = 0.0;
    double x2 = 0.0, y2 = 0.0;  // must satisfy x2 > x1, y2 > y1

    double area() const { return (x2 - x1) * (y2 - y1); }
    bool operator==(const BBox&) const = default;
};

/// Intersection over union; 0 for disjoint boxes. Throws OutOfRangeError on
/// degenerate (non-positive extent) boxes.
double iou(const BBox& a, const BBox& b);

struct ScoredBox {
    BBox box;
    double confidence = 0.0;  // in [0, 1]
};

struct DetectionEval {
    std::vector<ScoredBox> predictions;
    std::vector<BBox> ground_truth;
    double iou_threshold = 0.5;
};

struct DetectionMetrics {
    double ap = 0.0;  // area under the all-points interpolated PR curve
    double precision = 0.0;
    double recall = 0.0;
    int true_positives = 0;
    int false_positives = 0;
    int false_negatives = 0;
};

/// Single-class detector scoring. Predictions are visited in descending
/// confidence (ties keep input order); each is assigned its highest-IoU
/// ground truth and counts as a true positive when that IoU meets the
/// threshold and the ground truth is still unclaimed, else as a false
/// positive. Precision and recall are taken at the final operating point.
///
/// Degenerate conventions: with no predictions precision is 1 (nothing was
/// claimed falsely); with no ground truth recall is 1 and AP is 1 or 0
/// depending on whether predictions are also absent.
/// Throws OutOfRangeError for confidences outside [0, 1] or malformed boxes.
DetectionMetrics detection_metrics(const DetectionEval& e);

} // namespace mcsim

#endif // MCSIM_DETECTION_HPP
