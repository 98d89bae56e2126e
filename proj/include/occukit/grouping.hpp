#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "occukit/bev.hpp"
#include "occukit/constants.hpp"
#include "occukit/labels.hpp"
#include "occukit/parallel.hpp"

namespace occukit {

// Pedestrian instance grouping: every Pedestrian voxel goes to its nearest
// detection in the ground plane, but only when that planar distance is
// strictly below r. Detections are first sorted by (x,y) so the resulting
// instance ids do not depend on the input order.
inline InstanceVolume group_instances(const LabelVolume& sem,
                                      const std::vector<Detection>& detections,
                                      double r = defaults::group_radius, unsigned threads = 0) {
    if (!(r > 0.0)) throw std::invalid_argument("group_instances: r must be positive");

    std::vector<Detection> locs = detections;
    std::sort(locs.begin(), locs.end(), [](const Detection& a, const Detection& b) {
        if (a.x != b.x) return a.x < b.x;
        if (a.y != b.y) return a.y < b.y;
        return a.score > b.score;
    });

    const VoxelGridSpec& spec = sem.spec;
    InstanceVolume out(spec);
    if (locs.empty()) return out;

    parallel_for(std::size_t(spec.dims_x), threads, [&](std::size_t x0, std::size_t x1) {
        for (std::size_t ix = x0; ix < x1; ++ix) {
            for (int iy = 0; iy < spec.dims_y; ++iy) {
                // Planar distance only; every z in the column shares it.
                Vec3 c = voxel_center(spec, int(ix), iy, 0);
                double best = std::numeric_limits<double>::infinity();
                std::size_t best_j = 0;
                for (std::size_t j = 0; j < locs.size(); ++j) {
                    double dx = c.x - locs[j].x, dy = c.y - locs[j].y;
                    double d = std::sqrt(dx * dx + dy * dy);
                    if (d < best) {  // strict: equidistant keeps the lowest index
                        best = d;
                        best_j = j;
                    }
                }
                if (!(best < r)) continue;
                for (int iz = 0; iz < spec.dims_z; ++iz) {
                    std::size_t lin = spec.linear_index(int(ix), iy, iz);
                    if (sem.labels[lin] == uint8_t(SemanticLabel::Pedestrian))
                        out.ids[lin] = uint32_t(best_j + 1);
                }
            }
        }
    });
    return out;
}

// Merge stuff classes with grouped instances. Pedestrian voxels that no
// detection claimed become Free, which removes floating fragments.
inline PanopticVolume merge_panoptic(const LabelVolume& sem, const InstanceVolume& inst) {
    if (!(sem.spec == inst.spec)) throw std::invalid_argument("merge_panoptic: spec mismatch");
    PanopticVolume out(sem.spec);
    for (std::size_t i = 0; i < sem.labels.size(); ++i) {
        auto label = static_cast<SemanticLabel>(sem.labels[i]);
        if (label == SemanticLabel::Free) continue;
        if (label == SemanticLabel::Pedestrian) {
            if (inst.ids[i] > 0) out.labels[i] = panoptic_instance_value(inst.ids[i]);
        } else {
            out.labels[i] = sem.labels[i];
        }
    }
    return out;
}

}  // namespace occukit
