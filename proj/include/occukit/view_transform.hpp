#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "occukit/geometry.hpp"
#include "occukit/image.hpp"
#include "occukit/parallel.hpp"

namespace occukit {

// Lifted multi-view feature volume. Voxels no view can see hold the zero
// vector and valid_count 0. values are voxel-major: [voxel * channels + c].
struct FeatureVolume {
    int channels = 0;
    VoxelGridSpec spec;
    std::vector<double> values;
    std::vector<uint16_t> valid_count;

    FeatureVolume() = default;
    FeatureVolume(int c, const VoxelGridSpec& s)
        : channels(c), spec(s), values(s.num_voxels() * c, 0.0), valid_count(s.num_voxels(), 0) {}

    double value_at(int ix, int iy, int iz, int c) const {
        return values[spec.linear_index(ix, iy, iz) * channels + c];
    }
};

struct LiftOptions {
    // Eq-literal averaging divides by the view count N; by default we divide
    // by the number of views that actually see the voxel.
    bool strict_eq1 = false;
    unsigned threads = 0;
};

// A voxel is inside the camera frustum when its center projects, at the
// feature-map scale, to 0 <= u < W' and 0 <= v < H' with positive depth.
inline std::vector<uint8_t> frustum_mask(const CameraModel& cam, const VoxelGridSpec& spec,
                                         int feat_width, int feat_height) {
    if (feat_width < 1 || feat_height < 1)
        throw std::invalid_argument("frustum_mask: bad feature dimensions");
    const double sx = double(feat_width) / cam.intrinsics.width;
    const double sy = double(feat_height) / cam.intrinsics.height;

    std::vector<uint8_t> mask(spec.num_voxels(), 0);
    for (int ix = 0; ix < spec.dims_x; ++ix)
        for (int iy = 0; iy < spec.dims_y; ++iy)
            for (int iz = 0; iz < spec.dims_z; ++iz) {
                Vec3 x = cam.pose.world_to_camera(voxel_center(spec, ix, iy, iz));
                if (!(x.z > 0.0)) continue;
                double u = sx * (cam.intrinsics.fx * x.x / x.z + cam.intrinsics.cx);
                double v = sy * (cam.intrinsics.fy * x.y / x.z + cam.intrinsics.cy);
                if (u >= 0.0 && u < feat_width && v >= 0.0 && v < feat_height)
                    mask[spec.linear_index(ix, iy, iz)] = 1;
            }
    return mask;
}

// Lift N per-view feature maps onto the voxel grid: project each voxel
// center into every view, bilinearly sample where the frustum mask is on,
// and average the valid samples.
inline FeatureVolume lift_features(const std::vector<CameraModel>& cams,
                                   const std::vector<FeatureMap>& maps, const VoxelGridSpec& spec,
                                   const LiftOptions& opts = {}) {
    if (cams.empty() || cams.size() != maps.size())
        throw std::invalid_argument("lift_features: need matching, non-empty cameras and maps");
    const int channels = maps[0].channels;
    for (const auto& m : maps)
        if (m.channels != channels)
            throw std::invalid_argument("lift_features: inconsistent channel counts");

    const std::size_t n_views = cams.size();
    FeatureVolume vol(channels, spec);

    parallel_for(std::size_t(spec.dims_x), opts.threads, [&](std::size_t x0, std::size_t x1) {
        std::vector<double> acc(channels);
        for (std::size_t ix = x0; ix < x1; ++ix) {
            for (int iy = 0; iy < spec.dims_y; ++iy) {
                for (int iz = 0; iz < spec.dims_z; ++iz) {
                    Vec3 center = voxel_center(spec, int(ix), iy, iz);
                    std::fill(acc.begin(), acc.end(), 0.0);
                    int valid = 0;
                    for (std::size_t view = 0; view < n_views; ++view) {
                        const auto& cam = cams[view];
                        const auto& map = maps[view];
                        Vec3 x = cam.pose.world_to_camera(center);
                        if (!(x.z > 0.0)) continue;
                        double su = double(map.width) / cam.intrinsics.width;
                        double sv = double(map.height) / cam.intrinsics.height;
                        double u = su * (cam.intrinsics.fx * x.x / x.z + cam.intrinsics.cx);
                        double v = sv * (cam.intrinsics.fy * x.y / x.z + cam.intrinsics.cy);
                        if (!(u >= 0.0 && u < map.width && v >= 0.0 && v < map.height)) continue;
                        std::vector<double> sample = bilinear_sample(map, u, v);
                        for (int c = 0; c < channels; ++c) acc[c] += sample[c];
                        ++valid;
                    }
                    std::size_t lin = spec.linear_index(int(ix), iy, iz);
                    vol.valid_count[lin] = uint16_t(valid);
                    if (valid == 0) continue;
                    double denom = opts.strict_eq1 ? double(n_views) : double(valid);
                    for (int c = 0; c < channels; ++c)
                        vol.values[lin * channels + c] = acc[c] / denom;
                }
            }
        }
    });
    return vol;
}

}  // namespace occukit
