// Copyright Contributors to the FSGS Project
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fsgs/evaluation.hpp"
#include "test_support.hpp"

using namespace fsgs;
using testutil::TestRng;

namespace {

// Exhaustive assignment oracle: minimum total cost over all injective maps of
// the smaller side into the larger.
double exhaustive_min_cost(const std::vector<std::vector<double>>& cost) {
    int rows = int(cost.size());
    int cols = rows ? int(cost[0].size()) : 0;
    if (rows == 0 || cols == 0) return 0;
    if (rows <= cols) {
        std::vector<int> perm(static_cast<std::size_t>(cols));
        std::iota(perm.begin(), perm.end(), 0);
        double best = std::numeric_limits<double>::infinity();
        std::sort(perm.begin(), perm.end());
        do {
            double total = 0;
            for (int r = 0; r < rows; ++r) total += cost[static_cast<std::size_t>(r)][static_cast<std::size_t>(perm[static_cast<std::size_t>(r)])];
            best = std::min(best, total);
        } while (std::next_permutation(perm.begin(), perm.end()));
        return best;
    }
    std::vector<int> perm(static_cast<std::size_t>(rows));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double total = 0;
        for (int c = 0; c < cols; ++c) total += cost[static_cast<std::size_t>(perm[static_cast<std::size_t>(c)])][static_cast<std::size_t>(c)];
        best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

MaskSet make_mask(int w, int h, std::vector<uint32_t> labels,
                  std::vector<MaskSet::Segment> segments) {
    MaskSet m;
    m.width = w;
    m.height = h;
    m.labels = std::move(labels);
    m.segments = std::move(segments);
    return m;
}

}  // namespace

TEST_CASE("hungarian: trivial 2x2 cases") {
    auto a = hungarian_match({{0, 1}, {1, 0}});
    CHECK(a.row_to_col == std::vector<int>{0, 1});
    CHECK(a.total_cost == doctest::Approx(0));

    auto b = hungarian_match({{1, 0}, {0, 1}});
    CHECK(b.row_to_col == std::vector<int>{1, 0});
    CHECK(b.total_cost == doctest::Approx(0));
}

TEST_CASE("hungarian equals exhaustive search on random matrices") {
    TestRng rng(1001);
    for (int trial = 0; trial < 300; ++trial) {
        int rows = 1 + int(rng.uniform(0, 6));
        int cols = 1 + int(rng.uniform(0, 6));
        std::vector<std::vector<double>> cost(static_cast<std::size_t>(rows),
                                              std::vector<double>(static_cast<std::size_t>(cols)));
        for (auto& row : cost)
            for (auto& c : row) c = rng.uniform(-5, 5);
        auto got = hungarian_match(cost);
        CHECK(got.total_cost == doctest::Approx(exhaustive_min_cost(cost)).epsilon(1e-9));

        // Structural checks: min(R,C) assignments, columns used at most once.
        std::vector<char> used(static_cast<std::size_t>(cols), 0);
        int assigned = 0;
        for (int r = 0; r < rows; ++r) {
            int c = got.row_to_col[static_cast<std::size_t>(r)];
            if (c < 0) continue;
            CHECK(!used[static_cast<std::size_t>(c)]);
            used[static_cast<std::size_t>(c)] = 1;
            ++assigned;
        }
        CHECK(assigned == std::min(rows, cols));
    }
}

TEST_CASE("hungarian beats random assignments") {
    TestRng rng(1002);
    for (int trial = 0; trial < 50; ++trial) {
        int n = 5;
        std::vector<std::vector<double>> cost(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n)));
        for (auto& row : cost)
            for (auto& c : row) c = rng.uniform(0, 10);
        auto got = hungarian_match(cost);
        std::vector<int> perm(static_cast<std::size_t>(n));
        std::iota(perm.begin(), perm.end(), 0);
        for (int k = 0; k < 20; ++k) {
            for (int i = n - 1; i > 0; --i)
                std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(int(rng.uniform(0, i + 1)))]);
            double total = 0;
            for (int r = 0; r < n; ++r) total += cost[static_cast<std::size_t>(r)][static_cast<std::size_t>(perm[static_cast<std::size_t>(r)])];
            CHECK(got.total_cost <= total + 1e-9);
        }
    }
}

TEST_CASE("instance loss identities and hand cases") {
    // pred == gt binary -> 0 within clamp tolerance.
    std::vector<float> gt = {1, 0, 1, 1, 0, 0, 1, 0};
    CHECK(instance_loss(gt, gt) == doctest::Approx(0.0).epsilon(1e-6));

    // Disjoint equal-size hard masks: dice term = 1.
    std::vector<float> p = {1, 1, 0, 0};
    std::vector<float> g = {0, 0, 1, 1};
    auto [dice, bce] = instance_loss_parts(p, g);
    CHECK(dice == doctest::Approx(1.0));
    CHECK(bce > 10.0);  // saturated at the clamp

    // |P| = |G| = 4, overlap 2: dice term = 1 - 4/8 = 0.5.
    std::vector<float> p2 = {1, 1, 1, 1, 0, 0};
    std::vector<float> g2 = {1, 1, 0, 0, 1, 1};
    CHECK(instance_loss_parts(p2, g2).first == doctest::Approx(0.5));
}

TEST_CASE("instance loss matches a naive loop oracle on random inputs") {
    TestRng rng(1003);
    for (int trial = 0; trial < 100; ++trial) {
        int n = 1 + int(rng.uniform(0, 64));
        std::vector<float> pred(static_cast<std::size_t>(n)), gt(static_cast<std::size_t>(n));
        for (auto& x : pred) x = float(rng.uniform(0, 1));
        for (auto& x : gt) x = rng.uniform(0, 1) > 0.5 ? 1.0f : 0.0f;

        double inter = 0, ps = 0, gs = 0, bce = 0;
        for (int i = 0; i < n; ++i) {
            double pv = pred[static_cast<std::size_t>(i)], gv = gt[static_cast<std::size_t>(i)];
            inter += pv * gv;
            ps += pv;
            gs += gv;
            double pc = std::clamp(pv, 1e-7, 1 - 1e-7);
            bce -= gv * std::log(pc) + (1 - gv) * std::log(1 - pc);
        }
        double expect = (ps + gs > 0 ? 1 - 2 * inter / (ps + gs) : 0) + bce / n;
        CHECK(instance_loss(pred, gt) == doctest::Approx(expect).epsilon(1e-5));
    }
}

TEST_CASE("semantic loss: one-hot, uniform, and oracle agreement") {
    // One-hot-correct logits.
    std::vector<float> logits = {100, 0, 0, 0, 100, 0};
    std::vector<int> gt = {0, 1};
    CHECK(semantic_loss(logits, gt, 3) == doctest::Approx(0.0).epsilon(1e-6));

    // Uniform logits over C classes -> ln C.
    std::vector<float> uniform(12, 0.25f);
    std::vector<int> gt4 = {0, 3, 2};
    CHECK(semantic_loss(uniform, gt4, 4) == doctest::Approx(std::log(4.0)).epsilon(1e-9));

    // Void pixels excluded.
    std::vector<int> gtv = {0, -1};
    std::vector<float> l2 = {100, 0, 0, 0, 0, 0};
    CHECK(semantic_loss(l2, gtv, 3) == doctest::Approx(0.0).epsilon(1e-6));

    TestRng rng(1004);
    for (int trial = 0; trial < 100; ++trial) {
        int n = 1 + int(rng.uniform(0, 32));
        int c = 2 + int(rng.uniform(0, 5));
        std::vector<float> lg(static_cast<std::size_t>(n * c));
        std::vector<int> g(static_cast<std::size_t>(n));
        for (auto& x : lg) x = float(rng.normal() * 3);
        for (auto& x : g) x = int(rng.uniform(0, c));

        long double total = 0;
        for (int i = 0; i < n; ++i) {
            long double denom = 0;
            for (int k = 0; k < c; ++k) denom += std::exp((long double)(lg[static_cast<std::size_t>(i * c + k)]));
            total += -std::log(std::exp((long double)(lg[static_cast<std::size_t>(i * c + g[static_cast<std::size_t>(i)])])) / denom);
        }
        CHECK(semantic_loss(lg, g, c) == doctest::Approx(double(total / n)).epsilon(1e-6));
    }
}

TEST_CASE("photometric loss identities") {
    TestRng rng(1005);
    const int w = 24, h = 24;
    std::vector<float> img(static_cast<std::size_t>(w * h * 3));
    for (auto& x : img) x = float(rng.uniform(0, 1));
    CHECK(photometric_loss(img, img, w, h, 3, 0.2) == doctest::Approx(0.0).epsilon(1e-9));

    // lambda = 0: pure mean absolute difference.
    std::vector<float> shifted = img;
    for (auto& x : shifted) x = std::min(x + 0.1f, 1.0f);
    double l1 = 0;
    for (std::size_t i = 0; i < img.size(); ++i) l1 += std::abs(double(shifted[i]) - double(img[i]));
    l1 /= double(img.size());
    CHECK(photometric_loss(shifted, img, w, h, 3, 0.0) == doctest::Approx(l1).epsilon(1e-9));
}

TEST_CASE("photometric loss matches a direct-definition SSIM oracle") {
    TestRng rng(1006);
    const int w = 20, h = 18;
    std::vector<float> gt(static_cast<std::size_t>(w * h), 0.0f), pred(static_cast<std::size_t>(w * h));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            gt[static_cast<std::size_t>(y * w + x)] = float(0.5 + 0.4 * std::sin(x * 0.7) * std::cos(y * 0.5));
    for (std::size_t i = 0; i < pred.size(); ++i)
        pred[i] = std::clamp(gt[i] + 0.1f + float(0.02 * rng.normal()), 0.0f, 1.0f);

    // Direct windowed oracle: normalized 2D Gaussian, valid positions only.
    const int win = 11;
    const double sigma = 1.5;
    std::vector<double> kernel2(static_cast<std::size_t>(win * win));
    double ksum = 0;
    for (int a = 0; a < win; ++a)
        for (int b = 0; b < win; ++b) {
            double da = a - 5.0, db = b - 5.0;
            kernel2[static_cast<std::size_t>(a * win + b)] = std::exp(-(da * da + db * db) / (2 * sigma * sigma));
            ksum += kernel2[static_cast<std::size_t>(a * win + b)];
        }
    for (auto& k : kernel2) k /= ksum;

    double ssim_total = 0;
    int count = 0;
    for (int y = 0; y + win <= h; ++y) {
        for (int x = 0; x + win <= w; ++x) {
            double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
            for (int a = 0; a < win; ++a)
                for (int b = 0; b < win; ++b) {
                    double kv = kernel2[static_cast<std::size_t>(a * win + b)];
                    double pv = pred[static_cast<std::size_t>((y + a) * w + x + b)];
                    double gv = gt[static_cast<std::size_t>((y + a) * w + x + b)];
                    mx += kv * pv;
                    my += kv * gv;
                    mxx += kv * pv * pv;
                    myy += kv * gv * gv;
                    mxy += kv * pv * gv;
                }
            double vx = mxx - mx * mx, vy = myy - my * my, cxy = mxy - mx * my;
            double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
            ssim_total += ((2 * mx * my + c1) * (2 * cxy + c2)) /
                          ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++count;
        }
    }
    double mssim = ssim_total / count;
    double l1 = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) l1 += std::abs(double(pred[i]) - double(gt[i]));
    l1 /= double(pred.size());
    double lambda = 0.2;
    double expect = (1 - lambda) * l1 + lambda * (1 - mssim);
    CHECK(photometric_loss(pred, gt, w, h, 1, lambda) == doctest::Approx(expect).epsilon(1e-5));
}

TEST_CASE("panoptic quality: identity, hand case, and empty prediction") {
    // pred == gt -> 100 everywhere.
    std::vector<uint32_t> labels(64, 0);
    for (int i = 0; i < 16; ++i) labels[static_cast<std::size_t>(i)] = 1001;
    MaskSet gt = make_mask(8, 8, labels, {{1001, 0}});
    PanopticResult same = panoptic_quality(gt, gt);
    CHECK(same.pq == doctest::Approx(100.0));
    CHECK(same.sq == doctest::Approx(100.0));
    CHECK(same.rq == doctest::Approx(100.0));

    // Single 16 px GT segment, 16 px prediction with overlap 12 (union 20):
    // IoU 0.6 -> PQ 60, SQ 60, RQ 100.
    std::vector<uint32_t> pred_labels(64, 0);
    for (int i = 4; i < 20; ++i) pred_labels[static_cast<std::size_t>(i)] = 1001;
    MaskSet pred = make_mask(8, 8, pred_labels, {{1001, 0}});
    PanopticResult hand = panoptic_quality(pred, gt);
    CHECK(hand.pq == doctest::Approx(60.0));
    CHECK(hand.sq == doctest::Approx(60.0));
    CHECK(hand.rq == doctest::Approx(100.0));

    // One GT segment, zero predictions: PQ = RQ = 0, SQ reported as 0.
    MaskSet empty = make_mask(8, 8, std::vector<uint32_t>(64, 0), {});
    PanopticResult none = panoptic_quality(empty, gt);
    CHECK(none.pq == 0.0);
    CHECK(none.sq == 0.0);
    CHECK(none.rq == 0.0);
}

TEST_CASE("pq = sq * rq / 100 on random mask pairs") {
    TestRng rng(1007);
    for (int trial = 0; trial < 30; ++trial) {
        const int w = 16, h = 16;
        auto random_mask = [&](int n_segs) {
            std::vector<uint32_t> labels(static_cast<std::size_t>(w * h), 0);
            std::vector<MaskSet::Segment> segs;
            for (int s = 0; s < n_segs; ++s) {
                uint32_t id = uint32_t((s % 3 + 1) * 1000 + s + 1);
                int cx = int(rng.uniform(0, w)), cy = int(rng.uniform(0, h));
                int r = 1 + int(rng.uniform(0, 4));
                for (int y = std::max(0, cy - r); y < std::min(h, cy + r); ++y)
                    for (int x = std::max(0, cx - r); x < std::min(w, cx + r); ++x)
                        labels[static_cast<std::size_t>(y * w + x)] = id;
                segs.push_back({id, int(id / 1000) - 1});
            }
            // Rebuild the segment table from surviving labels.
            std::vector<MaskSet::Segment> kept;
            for (const auto& s : segs) {
                if (std::find(labels.begin(), labels.end(), s.id) == labels.end()) continue;
                bool dup = false;
                for (const auto& k : kept) dup = dup || k.id == s.id;
                if (!dup) kept.push_back(s);
            }
            return make_mask(w, h, labels, kept);
        };
        MaskSet a = random_mask(2 + int(rng.uniform(0, 4)));
        MaskSet b = random_mask(2 + int(rng.uniform(0, 4)));
        PanopticResult r = panoptic_quality(a, b);
        CHECK(std::abs(r.pq - r.sq * r.rq / 100.0) < 0.01);
    }
}

TEST_CASE("semantic metrics: identity, checkerboard, and counting oracle") {
    std::vector<int> ident(64);
    for (std::size_t i = 0; i < ident.size(); ++i) ident[i] = int(i % 3);
    auto same = semantic_metrics(ident, ident);
    CHECK(same.miou == doctest::Approx(100.0));
    CHECK(same.macc == doctest::Approx(100.0));

    std::vector<int> board(16), inv(16);
    for (int i = 0; i < 16; ++i) {
        board[static_cast<std::size_t>(i)] = i % 2;
        inv[static_cast<std::size_t>(i)] = 1 - i % 2;
    }
    auto flip = semantic_metrics(board, inv);
    CHECK(flip.miou == doctest::Approx(0.0));
    CHECK(flip.macc == doctest::Approx(0.0));

    TestRng rng(1008);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<int> pred(256), gt(256);
        for (auto& x : pred) x = int(rng.uniform(0, 4));
        for (auto& x : gt) x = int(rng.uniform(0, 4));
        auto got = semantic_metrics(pred, gt);

        // Confusion-matrix oracle.
        double iou_sum = 0, acc_sum = 0;
        int iou_classes = 0, acc_classes = 0;
        for (int c = 0; c < 4; ++c) {
            int tp = 0, gc = 0, pc = 0;
            for (int i = 0; i < 256; ++i) {
                if (gt[static_cast<std::size_t>(i)] == c) ++gc;
                if (pred[static_cast<std::size_t>(i)] == c) ++pc;
                if (gt[static_cast<std::size_t>(i)] == c && pred[static_cast<std::size_t>(i)] == c) ++tp;
            }
            if (gc + pc > 0) {
                iou_sum += double(tp) / double(gc + pc - tp);
                ++iou_classes;
            }
            if (gc > 0) {
                acc_sum += double(tp) / double(gc);
                ++acc_classes;
            }
        }
        CHECK(got.miou == doctest::Approx(100.0 * iou_sum / iou_classes).epsilon(1e-9));
        CHECK(got.macc == doctest::Approx(100.0 * acc_sum / acc_classes).epsilon(1e-9));
    }
}

TEST_CASE("coverage metrics: identity and weighted hand case") {
    std::vector<uint32_t> labels(64, 0);
    for (int i = 0; i < 10; ++i) labels[static_cast<std::size_t>(i)] = 1001;
    for (int i = 20; i < 50; ++i) labels[static_cast<std::size_t>(i)] = 1002;
    MaskSet gt = make_mask(8, 8, labels, {{1001, 0}, {1002, 0}});
    auto same = coverage_metrics(gt, gt);
    CHECK(same.first == doctest::Approx(100.0));
    CHECK(same.second == doctest::Approx(100.0));

    // Best IoUs 1.0 (10 px) and 0.5 (30 px): mWCov = (10*1 + 30*0.5)/40 = 62.5.
    std::vector<uint32_t> pred_labels(64, 0);
    for (int i = 0; i < 10; ++i) pred_labels[static_cast<std::size_t>(i)] = 1001;
    // Overlap 20 of the 30, plus 10 extra px outside: IoU = 20/40 = 0.5.
    for (int i = 20; i < 40; ++i) pred_labels[static_cast<std::size_t>(i)] = 1002;
    for (int i = 50; i < 60; ++i) pred_labels[static_cast<std::size_t>(i)] = 1002;
    MaskSet pred = make_mask(8, 8, pred_labels, {{1001, 0}, {1002, 0}});
    auto got = coverage_metrics(pred, gt);
    CHECK(got.first == doctest::Approx(75.0));   // (1.0 + 0.5) / 2
    CHECK(got.second == doctest::Approx(62.5));

    // Single GT with best IoU 0.6 -> mCov 60.
    std::vector<uint32_t> g1(static_cast<std::size_t>(64), 0u), p1(static_cast<std::size_t>(64), 0u);
    for (int i = 0; i < 16; ++i) g1[static_cast<std::size_t>(i)] = 1001;
    for (int i = 4; i < 20; ++i) p1[static_cast<std::size_t>(i)] = 1001;
    auto single = coverage_metrics(make_mask(8, 8, p1, {{1001, 0}}),
                                   make_mask(8, 8, g1, {{1001, 0}}));
    CHECK(single.first == doctest::Approx(60.0));
}

TEST_CASE("metrics are invariant under prediction instance relabeling") {
    TestRng rng(1009);
    const int w = 16, h = 16;
    std::vector<uint32_t> gt_labels(static_cast<std::size_t>(w * h), 0), pred_labels(static_cast<std::size_t>(w * h), 0);
    for (int i = 0; i < w * h; ++i) {
        int region = (i % w) / 6;
        if (region < 2) {
            gt_labels[static_cast<std::size_t>(i)] = uint32_t(2001 + region);
            if (rng.uniform(0, 1) < 0.9) pred_labels[static_cast<std::size_t>(i)] = uint32_t(2001 + region);
        }
    }
    MaskSet gt = make_mask(w, h, gt_labels, {{2001, 1}, {2002, 1}});
    MaskSet pred = make_mask(w, h, pred_labels, {{2001, 1}, {2002, 1}});

    // Relabel prediction ids (same class, different instance numbers).
    MaskSet relabeled = pred;
    for (auto& l : relabeled.labels)
        if (l == 2001) l = 2017;
        else if (l == 2002) l = 2004;
    relabeled.segments = {{2017, 1}, {2004, 1}};

    PanopticResult a = panoptic_quality(pred, gt);
    PanopticResult b = panoptic_quality(relabeled, gt);
    CHECK(a.pq == doctest::Approx(b.pq));
    CHECK(a.sq == doctest::Approx(b.sq));
    CHECK(a.rq == doctest::Approx(b.rq));

    auto c1 = coverage_metrics(pred, gt);
    auto c2 = coverage_metrics(relabeled, gt);
    CHECK(c1.first == doctest::Approx(c2.first));
    CHECK(c1.second == doctest::Approx(c2.second));
}
