// Copyright Contributors to the FSGS Project
// SPDX-License-Identifier: Apache-2.0

#include "fsgs/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace fsgs {

Assignment hungarian_match(const std::vector<std::vector<double>>& cost) {
    const int rows = int(cost.size());
    const int cols = rows > 0 ? int(cost[0].size()) : 0;
    Assignment result;
    result.row_to_col.assign(std::size_t(std::max(rows, 0)), -1);
    if (rows == 0 || cols == 0) return result;
    for (const auto& row : cost)
        if (int(row.size()) != cols) throw std::invalid_argument("hungarian_match: ragged matrix");

    // Pad to square with zeros; a constant pad shifts every completion by the
    // same amount, so the optimum over real pairs is unchanged.
    const int n = std::max(rows, cols);
    auto at = [&](int r, int c) -> double {
        return (r < rows && c < cols) ? cost[std::size_t(r)][std::size_t(c)] : 0.0;
    };

    // Shortest-augmenting-path potentials method, 1-indexed.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(std::size_t(n) + 1, 0), v(std::size_t(n) + 1, 0);
    std::vector<int> p(std::size_t(n) + 1, 0), way(std::size_t(n) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(std::size_t(n) + 1, inf);
        std::vector<char> used(std::size_t(n) + 1, 0);
        do {
            used[std::size_t(j0)] = 1;
            int i0 = p[std::size_t(j0)];
            int j1 = 0;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[std::size_t(j)]) continue;
                double cur = at(i0 - 1, j - 1) - u[std::size_t(i0)] - v[std::size_t(j)];
                if (cur < minv[std::size_t(j)]) {
                    minv[std::size_t(j)] = cur;
                    way[std::size_t(j)] = j0;
                }
                if (minv[std::size_t(j)] < delta) {
                    delta = minv[std::size_t(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[std::size_t(j)]) {
                    u[std::size_t(p[std::size_t(j)])] += delta;
                    v[std::size_t(j)] -= delta;
                } else {
                    minv[std::size_t(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[std::size_t(j0)] != 0);
        do {
            int j1 = way[std::size_t(j0)];
            p[std::size_t(j0)] = p[std::size_t(j1)];
            j0 = j1;
        } while (j0 != 0);
    }

    for (int j = 1; j <= n; ++j) {
        int r = p[std::size_t(j)] - 1;
        int c = j - 1;
        if (r >= 0 && r < rows && c < cols) {
            result.row_to_col[std::size_t(r)] = c;
            result.total_cost += cost[std::size_t(r)][std::size_t(c)];
        }
    }
    return result;
}

std::pair<double, double> instance_loss_parts(std::span<const float> pred,
                                              std::span<const float> gt) {
    if (pred.size() != gt.size()) throw std::invalid_argument("instance_loss: shape mismatch");
    const double clamp_lo = 1e-7;
    const double clamp_hi = 1.0 - 1e-7;
    double inter = 0, psum = 0, gsum = 0, bce = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        double p = pred[i];
        double g = gt[i];
        inter += p * g;
        psum += p;
        gsum += g;
        double pc = std::clamp(p, clamp_lo, clamp_hi);
        bce -= g * std::log(pc) + (1.0 - g) * std::log(1.0 - pc);
    }
    double dice = (psum + gsum) > 0 ? 1.0 - 2.0 * inter / (psum + gsum) : 0.0;
    bce = pred.empty() ? 0.0 : bce / double(pred.size());
    return {dice, bce};
}

double instance_loss(std::span<const float> pred, std::span<const float> gt) {
    auto [dice, bce] = instance_loss_parts(pred, gt);
    return dice + bce;
}

double semantic_loss(std::span<const float> logits, std::span<const int> gt, int num_classes) {
    if (num_classes <= 0) return 0;
    if (logits.size() != gt.size() * std::size_t(num_classes))
        throw std::invalid_argument("semantic_loss: shape mismatch");
    double total = 0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (gt[i] < 0) continue;  // void
        if (gt[i] >= num_classes) throw std::invalid_argument("semantic_loss: class id out of range");
        const float* l = logits.data() + i * std::size_t(num_classes);
        double m = l[0];
        for (int c = 1; c < num_classes; ++c) m = std::max(m, double(l[c]));
        double lse = 0;
        for (int c = 0; c < num_classes; ++c) lse += std::exp(double(l[c]) - m);
        total += m + std::log(lse) - double(l[gt[i]]);
        ++count;
    }
    return count ? total / double(count) : 0.0;
}

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimC1 = 0.01 * 0.01;
constexpr double kSsimC2 = 0.03 * 0.03;

// Mean SSIM of one channel plane via separable Gaussian windows over valid
// positions.
double ssim_plane(const std::vector<double>& x, const std::vector<double>& y, int width,
                  int height) {
    if (width < kSsimWindow || height < kSsimWindow) {
        // Single uniform window over the whole image.
        double n = double(width) * double(height);
        double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            mx += x[i];
            my += y[i];
            mxx += x[i] * x[i];
            myy += y[i] * y[i];
            mxy += x[i] * y[i];
        }
        mx /= n; my /= n; mxx /= n; myy /= n; mxy /= n;
        double vx = mxx - mx * mx, vy = myy - my * my, cxy = mxy - mx * my;
        return ((2 * mx * my + kSsimC1) * (2 * cxy + kSsimC2)) /
               ((mx * mx + my * my + kSsimC1) * (vx + vy + kSsimC2));
    }

    std::array<double, kSsimWindow> kernel;
    double ksum = 0;
    for (int i = 0; i < kSsimWindow; ++i) {
        double d = i - (kSsimWindow - 1) / 2.0;
        kernel[std::size_t(i)] = std::exp(-d * d / (2 * kSsimSigma * kSsimSigma));
        ksum += kernel[std::size_t(i)];
    }
    for (double& k : kernel) k /= ksum;

    const int out_w = width - kSsimWindow + 1;
    const int out_h = height - kSsimWindow + 1;
    auto blur = [&](const std::vector<double>& src) {
        // Horizontal pass (valid), then vertical pass (valid).
        std::vector<double> tmp(std::size_t(out_w) * std::size_t(height));
        for (int r = 0; r < height; ++r)
            for (int c = 0; c < out_w; ++c) {
                double acc = 0;
                for (int k = 0; k < kSsimWindow; ++k)
                    acc += kernel[std::size_t(k)] * src[std::size_t(r) * std::size_t(width) + std::size_t(c + k)];
                tmp[std::size_t(r) * std::size_t(out_w) + std::size_t(c)] = acc;
            }
        std::vector<double> dst(std::size_t(out_w) * std::size_t(out_h));
        for (int r = 0; r < out_h; ++r)
            for (int c = 0; c < out_w; ++c) {
                double acc = 0;
                for (int k = 0; k < kSsimWindow; ++k)
                    acc += kernel[std::size_t(k)] * tmp[std::size_t(r + k) * std::size_t(out_w) + std::size_t(c)];
                dst[std::size_t(r) * std::size_t(out_w) + std::size_t(c)] = acc;
            }
        return dst;
    };

    std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    auto mx = blur(x), my = blur(y), mxx = blur(xx), myy = blur(yy), mxy = blur(xy);

    double total = 0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
        double vx = mxx[i] - mx[i] * mx[i];
        double vy = myy[i] - my[i] * my[i];
        double cxy = mxy[i] - mx[i] * my[i];
        total += ((2 * mx[i] * my[i] + kSsimC1) * (2 * cxy + kSsimC2)) /
                 ((mx[i] * mx[i] + my[i] * my[i] + kSsimC1) * (vx + vy + kSsimC2));
    }
    return total / double(mx.size());
}

}  // namespace

double photometric_loss(std::span<const float> pred, std::span<const float> gt, int width,
                        int height, int channels, double lambda_ssim) {
    const std::size_t n = std::size_t(width) * std::size_t(height) * std::size_t(channels);
    if (pred.size() != n || gt.size() != n)
        throw std::invalid_argument("photometric_loss: shape mismatch");

    double l1 = 0;
    for (std::size_t i = 0; i < n; ++i) l1 += std::abs(double(pred[i]) - double(gt[i]));
    l1 /= double(n);

    double ssim = 0;
    std::vector<double> px(std::size_t(width) * std::size_t(height)),
        gx(std::size_t(width) * std::size_t(height));
    for (int c = 0; c < channels; ++c) {
        for (std::size_t i = 0; i < px.size(); ++i) {
            px[i] = pred[i * std::size_t(channels) + std::size_t(c)];
            gx[i] = gt[i * std::size_t(channels) + std::size_t(c)];
        }
        ssim += ssim_plane(px, gx, width, height);
    }
    ssim /= double(channels);
    return (1.0 - lambda_ssim) * l1 + lambda_ssim * (1.0 - ssim);
}

MaskSet mask_set_from_panoptic(const PanopticMap& map) {
    MaskSet set;
    set.width = map.width;
    set.height = map.height;
    set.labels = map.packed;
    std::set<uint32_t> ids(map.packed.begin(), map.packed.end());
    ids.erase(0u);
    for (uint32_t id : ids) set.segments.push_back({id, panoptic_class(id)});
    return set;
}

MaskSet instance_mask_set_from_panoptic(const PanopticMap& map) {
    MaskSet set;
    set.width = map.width;
    set.height = map.height;
    set.labels.assign(map.packed.size(), 0u);
    for (std::size_t i = 0; i < map.packed.size(); ++i)
        if (map.packed[i] != 0 && panoptic_instance(map.packed[i]) >= 1)
            set.labels[i] = map.packed[i];
    std::set<uint32_t> ids(set.labels.begin(), set.labels.end());
    ids.erase(0u);
    for (uint32_t id : ids) set.segments.push_back({id, panoptic_class(id)});
    return set;
}

namespace {

struct SegmentStats {
    std::unordered_map<uint32_t, std::size_t> pred_area;
    std::unordered_map<uint32_t, std::size_t> gt_area;
    std::unordered_map<uint64_t, std::size_t> intersection;  // pred << 32 | gt
};

SegmentStats collect_stats(const MaskSet& pred, const MaskSet& gt) {
    if (pred.width != gt.width || pred.height != gt.height || pred.labels.size() != gt.labels.size())
        throw std::invalid_argument("mask sets have different shapes");
    SegmentStats s;
    for (std::size_t i = 0; i < pred.labels.size(); ++i) {
        uint32_t p = pred.labels[i];
        uint32_t g = gt.labels[i];
        if (p != 0) ++s.pred_area[p];
        if (g != 0) ++s.gt_area[g];
        if (p != 0 && g != 0) ++s.intersection[(uint64_t(p) << 32) | g];
    }
    return s;
}

}  // namespace

PanopticResult panoptic_quality(const MaskSet& pred, const MaskSet& gt) {
    SegmentStats stats = collect_stats(pred, gt);

    std::unordered_map<uint32_t, int> pred_class, gt_class;
    for (const auto& seg : pred.segments) pred_class[seg.id] = seg.class_id;
    for (const auto& seg : gt.segments) gt_class[seg.id] = seg.class_id;

    std::map<int, ClassPQ> per_class;
    std::set<uint32_t> matched_pred, matched_gt;

    // IoU > 0.5 pairs form a matching automatically. Void pixels belong to no
    // segment, so they never enter the areas behind this union.
    for (const auto& [key, inter] : stats.intersection) {
        uint32_t p = uint32_t(key >> 32);
        uint32_t g = uint32_t(key & 0xffffffffu);
        auto pc = pred_class.find(p);
        auto gc = gt_class.find(g);
        if (pc == pred_class.end() || gc == gt_class.end() || pc->second != gc->second) continue;
        double uni = double(stats.pred_area[p] + stats.gt_area[g]) - double(inter);
        double iou = uni > 0 ? double(inter) / uni : 0.0;
        if (iou > 0.5) {
            ClassPQ& c = per_class[pc->second];
            ++c.tp;
            c.iou_sum += iou;
            matched_pred.insert(p);
            matched_gt.insert(g);
        }
    }
    for (const auto& seg : pred.segments)
        if (!matched_pred.count(seg.id)) ++per_class[seg.class_id].fp;
    for (const auto& seg : gt.segments)
        if (!matched_gt.count(seg.id)) ++per_class[seg.class_id].fn;

    PanopticResult result;
    double iou_sum = 0;
    int tp = 0, fp = 0, fn = 0;
    for (auto& [cls, c] : per_class) {
        double denom = c.tp + 0.5 * c.fp + 0.5 * c.fn;
        c.pq = denom > 0 ? 100.0 * c.iou_sum / denom : 0.0;
        c.sq = c.tp > 0 ? 100.0 * c.iou_sum / c.tp : 0.0;
        c.rq = denom > 0 ? 100.0 * c.tp / denom : 0.0;
        iou_sum += c.iou_sum;
        tp += c.tp;
        fp += c.fp;
        fn += c.fn;
    }
    double denom = tp + 0.5 * fp + 0.5 * fn;
    result.pq = denom > 0 ? 100.0 * iou_sum / denom : 0.0;
    result.sq = tp > 0 ? 100.0 * iou_sum / tp : 0.0;
    result.rq = denom > 0 ? 100.0 * tp / denom : 0.0;
    result.per_class = std::move(per_class);
    return result;
}

SemanticResult semantic_metrics(std::span<const int> pred, std::span<const int> gt) {
    if (pred.size() != gt.size()) throw std::invalid_argument("semantic_metrics: shape mismatch");
    std::map<int, std::size_t> tp, gt_count, pred_count;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (gt[i] < 0) continue;  // gt void excluded entirely
        ++gt_count[gt[i]];
        if (pred[i] >= 0) ++pred_count[pred[i]];
        if (pred[i] == gt[i]) ++tp[gt[i]];
    }

    SemanticResult result;
    std::set<int> classes;
    for (const auto& [c, _] : gt_count) classes.insert(c);
    for (const auto& [c, _] : pred_count) classes.insert(c);
    if (classes.empty()) return result;

    double iou_total = 0;
    for (int c : classes) {
        double t = tp.count(c) ? double(tp[c]) : 0;
        double denom = double(gt_count.count(c) ? gt_count[c] : 0) +
                       double(pred_count.count(c) ? pred_count[c] : 0) - t;
        double iou = denom > 0 ? t / denom : 0.0;
        result.per_class_iou[c] = 100.0 * iou;
        iou_total += iou;
    }
    result.miou = 100.0 * iou_total / double(classes.size());

    double acc_total = 0;
    std::size_t acc_classes = 0;
    for (const auto& [c, count] : gt_count) {
        double t = tp.count(c) ? double(tp[c]) : 0;
        acc_total += t / double(count);
        ++acc_classes;
    }
    result.macc = acc_classes ? 100.0 * acc_total / double(acc_classes) : 0.0;
    return result;
}

std::pair<double, double> coverage_metrics(const MaskSet& pred, const MaskSet& gt) {
    SegmentStats stats = collect_stats(pred, gt);
    if (gt.segments.empty()) return {0.0, 0.0};

    double cov_sum = 0, weighted_sum = 0, weight_total = 0;
    for (const auto& seg : gt.segments) {
        double area = double(stats.gt_area.count(seg.id) ? stats.gt_area[seg.id] : 0);
        double best = 0;
        for (const auto& [key, inter] : stats.intersection) {
            if (uint32_t(key & 0xffffffffu) != seg.id) continue;
            uint32_t p = uint32_t(key >> 32);
            double uni = double(stats.pred_area[p]) + area - double(inter);
            if (uni > 0) best = std::max(best, double(inter) / uni);
        }
        cov_sum += best;
        weighted_sum += area * best;
        weight_total += area;
    }
    double mcov = 100.0 * cov_sum / double(gt.segments.size());
    double mwcov = weight_total > 0 ? 100.0 * weighted_sum / weight_total : 0.0;
    return {mcov, mwcov};
}

std::string MetricReport::to_json() const {
    nlohmann::json j;
    j["pq"] = pq;
    j["sq"] = sq;
    j["rq"] = rq;
    j["miou"] = miou;
    j["macc"] = macc;
    j["mcov"] = mcov;
    j["mwcov"] = mwcov;
    nlohmann::json pc = nlohmann::json::object();
    for (const auto& [cls, c] : per_class) {
        nlohmann::json e;
        e["pq"] = c.pq;
        e["sq"] = c.sq;
        e["rq"] = c.rq;
        e["tp"] = c.tp;
        e["fp"] = c.fp;
        e["fn"] = c.fn;
        pc["class_" + std::to_string(cls)] = std::move(e);
    }
    j["per_class"] = std::move(pc);
    return j.dump(2);
}

MetricReport evaluate_panoptic_maps(const std::vector<PanopticMap>& pred,
                                    const std::vector<PanopticMap>& gt) {
    if (pred.size() != gt.size() || pred.empty())
        throw std::invalid_argument("evaluate_panoptic_maps: need equal, non-empty map lists");

    MetricReport report;
    // Aggregate PQ counts across frames; average pixel metrics over frames.
    std::map<int, ClassPQ> agg;
    double miou = 0, macc = 0, mcov = 0, mwcov = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        MaskSet ps = mask_set_from_panoptic(pred[i]);
        MaskSet gs = mask_set_from_panoptic(gt[i]);
        PanopticResult pr = panoptic_quality(ps, gs);
        for (const auto& [cls, c] : pr.per_class) {
            ClassPQ& a = agg[cls];
            a.tp += c.tp;
            a.fp += c.fp;
            a.fn += c.fn;
            a.iou_sum += c.iou_sum;
        }

        std::vector<int> pc(pred[i].packed.size()), gc(gt[i].packed.size());
        for (std::size_t k = 0; k < pc.size(); ++k) {
            pc[k] = pred[i].packed[k] == 0 ? -1 : panoptic_class(pred[i].packed[k]);
            gc[k] = gt[i].packed[k] == 0 ? -1 : panoptic_class(gt[i].packed[k]);
        }
        SemanticResult sr = semantic_metrics(pc, gc);
        miou += sr.miou;
        macc += sr.macc;

        auto [c1, c2] = coverage_metrics(instance_mask_set_from_panoptic(pred[i]),
                                         instance_mask_set_from_panoptic(gt[i]));
        mcov += c1;
        mwcov += c2;
    }

    double iou_sum = 0;
    int tp = 0, fp = 0, fn = 0;
    for (auto& [cls, c] : agg) {
        double denom = c.tp + 0.5 * c.fp + 0.5 * c.fn;
        c.pq = denom > 0 ? 100.0 * c.iou_sum / denom : 0.0;
        c.sq = c.tp > 0 ? 100.0 * c.iou_sum / c.tp : 0.0;
        c.rq = denom > 0 ? 100.0 * c.tp / denom : 0.0;
        iou_sum += c.iou_sum;
        tp += c.tp;
        fp += c.fp;
        fn += c.fn;
    }
    double denom = tp + 0.5 * fp + 0.5 * fn;
    report.pq = denom > 0 ? 100.0 * iou_sum / denom : 0.0;
    report.sq = tp > 0 ? 100.0 * iou_sum / tp : 0.0;
    report.rq = denom > 0 ? 100.0 * tp / denom : 0.0;
    report.per_class = std::move(agg);
    report.miou = miou / double(pred.size());
    report.macc = macc / double(pred.size());
    report.mcov = mcov / double(pred.size());
    report.mwcov = mwcov / double(pred.size());
    return report;
}

}  // namespace fsgs
