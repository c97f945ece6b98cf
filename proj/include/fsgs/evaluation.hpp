// Copyright Contributors to the FSGS Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fsgs/segmentation.hpp"

namespace fsgs {

// Minimum-cost rectangular assignment. With more rows than columns every
// column is used exactly once (and vice versa); unassigned rows map to -1.
struct Assignment {
    std::vector<int> row_to_col;
    double total_cost = 0;
};
Assignment hungarian_match(const std::vector<std::vector<double>>& cost);

// Dice + binary cross-entropy between a soft prediction and a binary mask.
// Probabilities are clamped to [1e-7, 1 - 1e-7] inside the BCE term.
double instance_loss(std::span<const float> pred, std::span<const float> gt);
// (dice, bce) components of the same loss.
std::pair<double, double> instance_loss_parts(std::span<const float> pred,
                                              std::span<const float> gt);

// Mean cross-entropy over non-void pixels (gt < 0 marks void).
double semantic_loss(std::span<const float> logits, std::span<const int> gt, int num_classes);

// (1 - lambda) * L1 + lambda * (1 - SSIM); SSIM uses an 11x11 Gaussian window
// (sigma 1.5, C1 = 0.01^2, C2 = 0.03^2) over valid window positions, falling
// back to one uniform full-image window when the image is smaller than the
// window.
double photometric_loss(std::span<const float> pred, std::span<const float> gt, int width,
                        int height, int channels, double lambda_ssim);

// Integer label map plus its segment table; label 0 is void.
struct MaskSet {
    int width = 0;
    int height = 0;
    std::vector<uint32_t> labels;
    struct Segment {
        uint32_t id = 0;
        int class_id = 0;
    };
    std::vector<Segment> segments;
};

// All non-void pixels as segments keyed by packed panoptic id.
MaskSet mask_set_from_panoptic(const PanopticMap& map);
// Thing segments only (instance part >= 1), for instance-level coverage.
MaskSet instance_mask_set_from_panoptic(const PanopticMap& map);

struct ClassPQ {
    double pq = 0, sq = 0, rq = 0;
    double iou_sum = 0;
    int tp = 0, fp = 0, fn = 0;
};

// Segments match iff same class and IoU > 0.5 (void excluded from the IoU
// denominator). Headline numbers aggregate TP/FP/FN across classes, so
// pq = sq * rq / 100 holds exactly; per-class values use per-class counts.
struct PanopticResult {
    double pq = 0, sq = 0, rq = 0;  // percentages
    std::map<int, ClassPQ> per_class;
};
PanopticResult panoptic_quality(const MaskSet& pred, const MaskSet& gt);

// (mIoU, mAcc) percentages over class maps; -1 marks void in gt.
struct SemanticResult {
    double miou = 0, macc = 0;
    std::map<int, double> per_class_iou;
};
SemanticResult semantic_metrics(std::span<const int> pred, std::span<const int> gt);

// mCov / mWCov percentages: (size-weighted) mean over gt segments of the best
// prediction IoU.
std::pair<double, double> coverage_metrics(const MaskSet& pred, const MaskSet& gt);

struct MetricReport {
    double pq = 0, sq = 0, rq = 0;
    double miou = 0, macc = 0;
    double mcov = 0, mwcov = 0;
    std::map<int, ClassPQ> per_class;
    std::string to_json() const;
};

// Full metric suite over panoptic label maps.
MetricReport evaluate_panoptic_maps(const std::vector<PanopticMap>& pred,
                                    const std::vector<PanopticMap>& gt);

}  // namespace fsgs
