#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "occukit/constants.hpp"
#include "occukit/geometry.hpp"
#include "occukit/image.hpp"
#include "occukit/labels.hpp"

namespace occukit {

// Back-project one view's labeled depth map into world-space points. Free and
// non-finite pixels are skipped. surface_bias pushes each sample along its
// viewing ray so it lands inside the solid it was measured on; 0 yields the
// exact surface point.
inline std::vector<LabeledPoint> depth_to_points(const CameraModel& cam, const ImageF32& depth,
                                                 const ImageU16& semantic,
                                                 const ImageU16& instance,
                                                 double surface_bias = defaults::surface_bias) {
    const int w = cam.intrinsics.width, h = cam.intrinsics.height;
    if (depth.width != w || depth.height != h || semantic.width != w || semantic.height != h ||
        instance.width != w || instance.height != h)
        throw std::invalid_argument("depth_to_points: map dimensions must match the camera");

    const Vec3 origin = cam.pose.center();
    std::vector<LabeledPoint> points;
    points.reserve(depth.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            float z = depth.at(x, y);
            if (!std::isfinite(z) || z <= 0.0f) continue;
            auto label = static_cast<SemanticLabel>(semantic.at(x, y));
            if (label == SemanticLabel::Free) continue;
            Vec3 p = backproject_pixel(cam, x, y, z);
            if (surface_bias != 0.0) p = p + surface_bias * normalized(p - origin);
            LabeledPoint lp;
            lp.position = p;
            lp.semantic_label = label;
            lp.instance_id = label == SemanticLabel::Pedestrian ? instance.at(x, y) : 0;
            points.push_back(lp);
        }
    }
    return points;
}

// Fuse per-view point clouds into a label volume: crop to the area of
// interest, then per voxel take the majority class. Equal counts resolve by
// class priority (Pedestrian > Wall > Others > Ground) so the result is
// independent of view order; pedestrian voxels take the majority instance id,
// ties to the smaller id.
inline LabelVolume fuse_and_voxelize(const std::vector<std::vector<LabeledPoint>>& views,
                                     const VoxelGridSpec& spec, const Aabb& aoi) {
    LabelVolume vol(spec);
    const std::size_t n = spec.num_voxels();

    // Per-voxel counters for the four non-Free classes, indexed by label-1.
    std::vector<std::array<uint32_t, 4>> votes(n, {0, 0, 0, 0});
    std::unordered_map<std::size_t, std::map<uint32_t, uint32_t>> instance_votes;

    for (const auto& view : views) {
        for (const auto& pt : view) {
            if (pt.semantic_label == SemanticLabel::Free) continue;
            if (!aoi.contains(pt.position)) continue;
            auto idx = world_to_voxel(spec, pt.position);
            if (!idx) continue;
            if (!aoi.contains(voxel_center(spec, *idx))) continue;
            std::size_t lin = spec.linear_index(*idx);
            votes[lin][static_cast<uint8_t>(pt.semantic_label) - 1]++;
            if (pt.semantic_label == SemanticLabel::Pedestrian && pt.instance_id > 0)
                instance_votes[lin][pt.instance_id]++;
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        const auto& v = votes[i];
        uint32_t best_count = 0;
        int best_priority = 0;
        SemanticLabel best = SemanticLabel::Free;
        for (int c = 0; c < 4; ++c) {
            if (v[c] == 0) continue;
            auto label = static_cast<SemanticLabel>(c + 1);
            int pr = label_priority(label);
            if (v[c] > best_count || (v[c] == best_count && pr > best_priority)) {
                best_count = v[c];
                best_priority = pr;
                best = label;
            }
        }
        if (best == SemanticLabel::Free) continue;
        vol.labels[i] = static_cast<uint8_t>(best);
        if (best == SemanticLabel::Pedestrian) {
            auto it = instance_votes.find(i);
            if (it != instance_votes.end()) {
                uint32_t best_id = 0, best_id_count = 0;
                for (const auto& [id, count] : it->second) {
                    if (count > best_id_count) {  // map order: equal counts keep smaller id
                        best_id = id;
                        best_id_count = count;
                    }
                }
                vol.instances[i] = best_id;
            }
        }
    }
    return vol;
}

}  // namespace occukit
