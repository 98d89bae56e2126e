#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "occukit/constants.hpp"
#include "occukit/geometry.hpp"
#include "occukit/image.hpp"
#include "occukit/parallel.hpp"

namespace occukit {

struct RayMarchParams {
    std::size_t max_steps = defaults::max_steps;  // voxel crossings; 0 = to grid exit
    double min_hit_distance = defaults::min_hit_distance;
    double max_trace_distance = defaults::max_trace_distance;

    bool valid() const { return min_hit_distance > 0.0 && max_trace_distance > 0.0; }
};

struct RayHit {
    uint32_t label = 0;  // 0 = no hit / free space
    double t = std::numeric_limits<double>::infinity();  // meters when dir is unit length
};

// First-hit grid traversal with exact boundary stepping. Visits every voxel
// the ray crosses, in order, and reports the first non-zero label whose entry
// distance lies in [min_hit_distance, max_trace_distance]. dir must be
// normalized for metric distances.
template <typename VolumeT>
RayHit trace_ray(const VolumeT& vol, Vec3 origin, Vec3 dir, const RayMarchParams& params) {
    const VoxelGridSpec& spec = vol.spec;

    // Clip to the grid's bounding box.
    double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
    Vec3 lo = spec.min_corner(), hi = spec.max_corner();
    for (int a = 0; a < 3; ++a) {
        if (dir[a] == 0.0) {
            if (origin[a] < lo[a] || origin[a] > hi[a]) return {};
            continue;
        }
        double inv = 1.0 / dir[a];
        double ta = (lo[a] - origin[a]) * inv;
        double tb = (hi[a] - origin[a]) * inv;
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) return {};
    }
    if (t0 > params.max_trace_distance) return {};

    Vec3 entry = origin + t0 * dir;
    int idx[3], step[3], dims[3] = {spec.dims_x, spec.dims_y, spec.dims_z};
    double t_max[3], t_delta[3];
    for (int a = 0; a < 3; ++a) {
        double rel = (entry[a] - lo[a]) / spec.voxel_size;
        idx[a] = std::clamp(int(std::floor(rel)), 0, dims[a] - 1);
        if (dir[a] > 0.0) {
            step[a] = 1;
            double boundary = lo[a] + (idx[a] + 1) * spec.voxel_size;
            t_max[a] = (boundary - origin[a]) / dir[a];
            t_delta[a] = spec.voxel_size / dir[a];
        } else if (dir[a] < 0.0) {
            step[a] = -1;
            double boundary = lo[a] + idx[a] * spec.voxel_size;
            t_max[a] = (boundary - origin[a]) / dir[a];
            t_delta[a] = spec.voxel_size / -dir[a];
        } else {
            step[a] = 0;
            t_max[a] = std::numeric_limits<double>::infinity();
            t_delta[a] = std::numeric_limits<double>::infinity();
        }
    }

    double t_entry = t0;
    std::size_t crossings = 0;
    while (true) {
        if (t_entry > params.max_trace_distance) return {};
        uint32_t label = vol.value_at(idx[0], idx[1], idx[2]);
        if (label != 0 && t_entry >= params.min_hit_distance) return {label, t_entry};

        int a = (t_max[0] <= t_max[1] && t_max[0] <= t_max[2]) ? 0
                : (t_max[1] <= t_max[2] ? 1 : 2);
        t_entry = t_max[a];
        idx[a] += step[a];
        if (idx[a] < 0 || idx[a] >= dims[a]) return {};
        t_max[a] += t_delta[a];
        if (params.max_steps != 0 && ++crossings > params.max_steps) return {};
    }
}

// Render one camera view of a label volume: one ray per pixel center, pixel
// value = label of the first occupied voxel, 0 when the ray hits nothing.
template <typename VolumeT>
ImageU16 render_view(const CameraModel& cam, const VolumeT& vol, const RayMarchParams& params,
                     int out_width, int out_height, unsigned threads = 0) {
    if (out_width < 1 || out_height < 1)
        throw std::invalid_argument("render_view: output dims must be >= 1");
    if (!params.valid()) throw std::invalid_argument("render_view: bad ray-march parameters");

    CameraIntrinsics k = cam.intrinsics;
    k.fx *= double(out_width) / cam.intrinsics.width;
    k.cx *= double(out_width) / cam.intrinsics.width;
    k.fy *= double(out_height) / cam.intrinsics.height;
    k.cy *= double(out_height) / cam.intrinsics.height;

    const Vec3 origin = cam.pose.center();
    const Mat3 rt = cam.pose.rotation.transposed();

    ImageU16 img(out_width, out_height, 0);
    parallel_for(std::size_t(out_height), threads, [&](std::size_t y0, std::size_t y1) {
        for (std::size_t y = y0; y < y1; ++y) {
            for (int x = 0; x < out_width; ++x) {
                Vec3 dir_cam{(x - k.cx) / k.fx, (double(y) - k.cy) / k.fy, 1.0};
                Vec3 dir = normalized(rt * dir_cam);
                RayHit hit = trace_ray(vol, origin, dir, params);
                if (hit.label > 0xFFFF)
                    throw std::runtime_error("render_view: label exceeds 16-bit range");
                img.at(x, int(y)) = uint16_t(hit.label);
            }
        }
    });
    return img;
}

}  // namespace occukit
