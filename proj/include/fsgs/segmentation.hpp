// Copyright Contributors to the FSGS Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fsgs/scene.hpp"

namespace fsgs {

// Query/surfel attention: feature similarity times spatial proximity.
// S = sigmoid(f_q . f_ins); D = phi(p_g) / phi(p_q), the query-density ratio,
// which reduces to exp(-0.5 * mahalanobis^2) since phi(p_q) is the density at
// the query's own center.
struct AffinityRecord {
    double similarity = 0;  // in (0, 1)
    double proximity = 0;   // in (0, 1]
    double attention = 0;   // similarity * proximity
};

AffinityRecord query_gaussian_affinity(const InstanceQuery& query, const Vec3f& surfel_center,
                                       std::span<const float> surfel_ins_feature);

// Softmax over the surfel's attention scores across all queries.
std::vector<float> instance_label_distribution(const Scene& scene, std::size_t surfel_index);

// All surfel label distributions as a row-major N x M matrix. Computed once
// per scene; queries and features are static at render time.
std::vector<float> instance_label_matrix(const Scene& scene, int threads = 1);

// logits = W * feature + bias
void decode_semantic_pixel(std::span<const float> blended_feature, const SemanticDecoder& decoder,
                           std::span<float> logits_out);

// Panoptic label image. Packed id = (class_index + 1) * 1000 + instance_id
// with instance_id >= 1 for thing classes and 0 for stuff; 0 = void. Class
// indices are shifted by one in the packing so void pixels can be 0.
struct PanopticMap {
    int width = 0;
    int height = 0;
    std::vector<uint32_t> packed;

    uint32_t at(int x, int y) const { return packed[std::size_t(y) * std::size_t(width) + std::size_t(x)]; }
};

inline uint32_t pack_panoptic(int class_index, int instance_id) {
    return uint32_t(class_index + 1) * 1000u + uint32_t(instance_id);
}
inline int panoptic_class(uint32_t packed) { return int(packed / 1000u) - 1; }
inline int panoptic_instance(uint32_t packed) { return int(packed % 1000u); }

// Per pixel with alpha > 0.5: class = argmax logits; thing classes get
// instance = argmax of the blended query distribution (1-based), stuff gets
// instance 0. Pixels at or below the alpha threshold are void (packed 0).
PanopticMap fuse_panoptic(std::span<const float> semantic_logits,
                          std::span<const float> instance_dist, std::span<const float> alpha,
                          int width, int height, const SemanticDecoder& decoder,
                          std::size_t num_queries);

inline constexpr double kVoidAlphaThreshold = 0.5;

}  // namespace fsgs
