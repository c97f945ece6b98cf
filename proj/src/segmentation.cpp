// Copyright Contributors to the FSGS Project
// SPDX-License-Identifier: Apache-2.0

#include "fsgs/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fsgs/parallel.hpp"

namespace fsgs {

AffinityRecord query_gaussian_affinity(const InstanceQuery& query, const Vec3f& surfel_center,
                                       std::span<const float> surfel_ins_feature) {
    AffinityRecord rec;
    double dotp = 0;
    for (std::size_t i = 0; i < surfel_ins_feature.size(); ++i)
        dotp += double(query.feature[i]) * double(surfel_ins_feature[i]);
    rec.similarity = 1.0 / (1.0 + std::exp(-dotp));

    Vec3d delta{double(surfel_center.x) - double(query.center.x),
                double(surfel_center.y) - double(query.center.y),
                double(surfel_center.z) - double(query.center.z)};
    Vec3d m = query.inv_covariance * delta;
    double maha2 = dot(delta, m);
    rec.proximity = std::exp(-0.5 * maha2);
    rec.attention = rec.similarity * rec.proximity;
    return rec;
}

std::vector<float> instance_label_distribution(const Scene& scene, std::size_t surfel_index) {
    const std::size_t m = scene.queries.size();
    std::vector<float> dist(m, 0.0f);
    if (m == 0) return dist;

    std::vector<double> attention(m);
    double amax = -std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < m; ++q) {
        attention[q] = query_gaussian_affinity(scene.queries[q],
                                               scene.surfels[surfel_index].center,
                                               scene.ins_feature(surfel_index))
                           .attention;
        amax = std::max(amax, attention[q]);
    }
    double sum = 0;
    for (std::size_t q = 0; q < m; ++q) {
        attention[q] = std::exp(attention[q] - amax);
        sum += attention[q];
    }
    for (std::size_t q = 0; q < m; ++q) dist[q] = float(attention[q] / sum);
    return dist;
}

std::vector<float> instance_label_matrix(const Scene& scene, int threads) {
    const std::size_t n = scene.surfels.size();
    const std::size_t m = scene.queries.size();
    std::vector<float> matrix(n * m);
    parallel_for(n, threads, [&](std::size_t i) {
        std::vector<float> row = instance_label_distribution(scene, i);
        std::copy(row.begin(), row.end(), matrix.begin() + long(i * m));
    });
    return matrix;
}

void decode_semantic_pixel(std::span<const float> blended_feature, const SemanticDecoder& decoder,
                           std::span<float> logits_out) {
    for (std::size_t c = 0; c < decoder.num_classes; ++c) {
        double acc = decoder.bias[c];
        const float* row = decoder.weights.data() + c * decoder.feature_dim;
        for (std::size_t k = 0; k < decoder.feature_dim; ++k)
            acc += double(row[k]) * double(blended_feature[k]);
        logits_out[c] = float(acc);
    }
}

PanopticMap fuse_panoptic(std::span<const float> semantic_logits,
                          std::span<const float> instance_dist, std::span<const float> alpha,
                          int width, int height, const SemanticDecoder& decoder,
                          std::size_t num_queries) {
    PanopticMap map;
    map.width = width;
    map.height = height;
    map.packed.assign(std::size_t(width) * std::size_t(height), 0u);

    const std::size_t c = decoder.num_classes;
    if (c == 0) return map;
    if (num_queries > 999)
        throw std::invalid_argument("panoptic packing supports at most 999 instances");

    for (std::size_t px = 0; px < map.packed.size(); ++px) {
        if (!(alpha[px] > kVoidAlphaThreshold)) continue;
        const float* logits = semantic_logits.data() + px * c;
        std::size_t best = 0;
        for (std::size_t k = 1; k < c; ++k)
            if (logits[k] > logits[best]) best = k;

        int instance = 0;
        if (decoder.thing_flags[best] && num_queries > 0) {
            const float* dist = instance_dist.data() + px * num_queries;
            std::size_t arg = 0;
            for (std::size_t q = 1; q < num_queries; ++q)
                if (dist[q] > dist[arg]) arg = q;
            instance = int(arg) + 1;
        }
        map.packed[px] = pack_panoptic(int(best), instance);
    }
    return map;
}

}  // namespace fsgs
