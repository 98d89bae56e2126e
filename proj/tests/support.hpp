#pragma once

// Shared fixtures and brute-force reference implementations. Everything here
// must stay independent of the library code paths it is used to check.

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "occukit/fusion.hpp"
#include "occukit/geometry.hpp"
#include "occukit/labels.hpp"
#include "occukit/parallel.hpp"
#include "occukit/scenegen.hpp"
#include "occukit/view_transform.hpp"

namespace occukit::test {

inline CameraModel identity_camera(double fx = 1.0, double fy = 1.0, double cx = 0.0,
                                   double cy = 0.0, int w = 640, int h = 360) {
    CameraModel cam;
    cam.name = "test";
    cam.intrinsics = {fx, fy, cx, cy, w, h};
    return cam;
}

// Deterministic generic camera: off-axis position, non-trivial rotation.
inline CameraModel generic_camera(Vec3 eye, Vec3 target, double f = 320.0, int w = 640,
                                  int h = 360) {
    CameraModel cam;
    cam.name = "generic";
    cam.intrinsics = {f, f, (w - 1) / 2.0, (h - 1) / 2.0, w, h};
    cam.pose = look_at_pose(eye, target);
    return cam;
}

inline std::mt19937_64 rng(uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& g, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline int uniform_int(std::mt19937_64& g, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(g);
}

// Grid geometry as it survives the f32 fields of the grid file header.
inline VoxelGridSpec f32_quantized(VoxelGridSpec spec) {
    spec.voxel_size = float(spec.voxel_size);
    spec.origin = {float(spec.origin.x), float(spec.origin.y), float(spec.origin.z)};
    return spec;
}

inline VoxelGridSpec small_grid(int nx, int ny, int nz, double voxel = 0.1,
                                Vec3 origin = {0, 0, 0}) {
    VoxelGridSpec spec;
    spec.origin = origin;
    spec.voxel_size = voxel;
    spec.dims_x = nx;
    spec.dims_y = ny;
    spec.dims_z = nz;
    return spec;
}

inline FeatureMap random_map(int channels, int h, int w, uint64_t seed) {
    FeatureMap map(channels, h, w);
    auto g = rng(seed);
    for (auto& v : map.data) v = float(uniform(g, -2.0, 2.0));
    return map;
}

// Straight-line lifting reference: project every voxel center into every view
// and average the valid bilinear samples.
inline FeatureVolume reference_lift(const std::vector<CameraModel>& cams,
                                    const std::vector<FeatureMap>& maps,
                                    const VoxelGridSpec& spec, bool strict_eq1) {
    FeatureVolume vol(maps[0].channels, spec);
    for (int ix = 0; ix < spec.dims_x; ++ix)
        for (int iy = 0; iy < spec.dims_y; ++iy)
            for (int iz = 0; iz < spec.dims_z; ++iz) {
                std::size_t lin = spec.linear_index(ix, iy, iz);
                Vec3 c = voxel_center(spec, ix, iy, iz);
                std::vector<double> acc(maps[0].channels, 0.0);
                int valid = 0;
                for (std::size_t n = 0; n < cams.size(); ++n) {
                    double scale = double(maps[n].width) / cams[n].intrinsics.width;
                    auto proj = project_point(cams[n], c, scale);
                    if (!proj) continue;
                    if (!(proj->u >= 0 && proj->u < maps[n].width && proj->v >= 0 &&
                          proj->v < maps[n].height))
                        continue;
                    auto s = bilinear_sample(maps[n], proj->u, proj->v);
                    for (std::size_t k = 0; k < s.size(); ++k) acc[k] += s[k];
                    ++valid;
                }
                vol.valid_count[lin] = uint16_t(valid);
                if (valid == 0) continue;
                double denom = strict_eq1 ? double(cams.size()) : double(valid);
                for (std::size_t k = 0; k < acc.size(); ++k)
                    vol.values[lin * vol.channels + k] = acc[k] / denom;
            }
    return vol;
}

// Camera-resolution intrinsics for a render at (w, h).
inline CameraModel rescaled_camera(const CameraModel& cam, int w, int h) {
    CameraModel out = cam;
    out.intrinsics.fx *= double(w) / cam.intrinsics.width;
    out.intrinsics.cx *= double(w) / cam.intrinsics.width;
    out.intrinsics.fy *= double(h) / cam.intrinsics.height;
    out.intrinsics.cy *= double(h) / cam.intrinsics.height;
    out.intrinsics.width = w;
    out.intrinsics.height = h;
    return out;
}

// Analytic renders of every camera view, back-projected to labeled points.
inline std::vector<std::vector<LabeledPoint>> scene_views(
    const SceneConfig& cfg, const std::vector<ScenePrimitive>& prims, int w, int h,
    double bias = defaults::surface_bias, unsigned threads = 0) {
    std::vector<std::vector<LabeledPoint>> views;
    for (const auto& cam : cfg.cameras) {
        SensorRender r = render_sensors(cam, prims, w, h, threads);
        views.push_back(
            depth_to_points(rescaled_camera(cam, w, h), r.depth, r.semantic, r.instance, bias));
    }
    return views;
}

// Occupied voxels for which some camera pixel directly recorded a surface
// sample: per pixel, the analytic first hit is pushed surface_bias into the
// solid (the same rule fusion applies) and the receiving voxel is marked if
// the analytic voxelization calls it occupied. Built entirely from the
// closed-form scene oracle; no fusion code involved.
inline std::vector<uint8_t> visible_occupied_mask(const std::vector<ScenePrimitive>& prims,
                                                  const std::vector<CameraModel>& cams,
                                                  const LabelVolume& analytic, int img_w,
                                                  int img_h,
                                                  double bias = defaults::surface_bias) {
    const VoxelGridSpec& spec = analytic.spec;
    std::vector<uint8_t> visible(spec.num_voxels(), 0);
    for (const auto& cam : cams) {
        CameraIntrinsics k = cam.intrinsics;
        k.fx *= double(img_w) / cam.intrinsics.width;
        k.cx *= double(img_w) / cam.intrinsics.width;
        k.fy *= double(img_h) / cam.intrinsics.height;
        k.cy *= double(img_h) / cam.intrinsics.height;
        const Vec3 origin = cam.pose.center();
        const Mat3 rt = cam.pose.rotation.transposed();
        parallel_for(std::size_t(img_h), 0, [&](std::size_t y0, std::size_t y1) {
            for (std::size_t y = y0; y < y1; ++y)
                for (int x = 0; x < img_w; ++x) {
                    Vec3 dir = rt * Vec3{(x - k.cx) / k.fx, (double(y) - k.cy) / k.fy, 1.0};
                    auto hit = scene_first_hit(prims, origin, dir);
                    if (!hit) continue;
                    Vec3 sample = origin + hit->t * dir + bias * normalized(dir);
                    auto idx = world_to_voxel(spec, sample);
                    if (!idx) continue;
                    std::size_t lin = spec.linear_index(*idx);
                    if (analytic.labels[lin] != 0) visible[lin] = 1;
                }
        });
    }
    return visible;
}

// Random label volume with the given occupancy fraction.
inline LabelVolume random_volume(const VoxelGridSpec& spec, uint64_t seed,
                                 double occupancy = 0.2) {
    LabelVolume vol(spec);
    auto g = rng(seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_int_distribution<int> cls(1, 4);
    for (std::size_t i = 0; i < vol.labels.size(); ++i) {
        if (coin(g) < occupancy) {
            vol.labels[i] = uint8_t(cls(g));
            if (vol.labels[i] == uint8_t(SemanticLabel::Pedestrian))
                vol.instances[i] = uint32_t(1 + (g() % 3));
        }
    }
    return vol;
}

// Blob-structured random volume: solid boxes and spheres, one label each, so
// sub-step corner grazes in sampling oracles cannot flip the observed label.
inline LabelVolume blob_volume(const VoxelGridSpec& spec, uint64_t seed) {
    auto g = rng(seed);
    LabelVolume vol(spec);
    Vec3 lo = spec.min_corner(), hi = spec.max_corner();
    for (int blob = 0; blob < 7; ++blob) {
        auto label = SemanticLabel(uniform_int(g, 1, 4));
        if (blob % 2 == 0) {
            Vec3 c{uniform(g, lo.x, hi.x), uniform(g, lo.y, hi.y), uniform(g, lo.z, hi.z)};
            double r = uniform(g, 2.5, 5.0) * spec.voxel_size;
            for (int ix = 0; ix < spec.dims_x; ++ix)
                for (int iy = 0; iy < spec.dims_y; ++iy)
                    for (int iz = 0; iz < spec.dims_z; ++iz)
                        if (norm(voxel_center(spec, ix, iy, iz) - c) <= r)
                            vol.set(ix, iy, iz, label);
        } else {
            Vec3 bmin{uniform(g, lo.x, hi.x - 0.4), uniform(g, lo.y, hi.y - 0.4),
                      uniform(g, lo.z, hi.z - 0.4)};
            Vec3 size{uniform(g, 0.25, 0.8), uniform(g, 0.25, 0.8), uniform(g, 0.25, 0.8)};
            for (int ix = 0; ix < spec.dims_x; ++ix)
                for (int iy = 0; iy < spec.dims_y; ++iy)
                    for (int iz = 0; iz < spec.dims_z; ++iz) {
                        Vec3 c = voxel_center(spec, ix, iy, iz);
                        if (c.x >= bmin.x && c.x <= bmin.x + size.x && c.y >= bmin.y &&
                            c.y <= bmin.y + size.y && c.z >= bmin.z && c.z <= bmin.z + size.z)
                            vol.set(ix, iy, iz, label);
                    }
        }
    }
    return vol;
}

// Fine-step traversal reference: sample the ray at voxel_size/divisor
// increments and report the first occupied voxel seen.
inline uint32_t brute_first_label(const LabelVolume& vol, Vec3 origin, Vec3 dir,
                                  double divisor = 20.0) {
    const VoxelGridSpec& spec = vol.spec;
    Vec3 lo = spec.min_corner(), hi = spec.max_corner();
    double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        if (dir[a] == 0.0) {
            if (origin[a] < lo[a] || origin[a] > hi[a]) return 0;
            continue;
        }
        double ta = (lo[a] - origin[a]) / dir[a];
        double tb = (hi[a] - origin[a]) / dir[a];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    if (t0 > t1) return 0;
    const double step = spec.voxel_size / divisor;
    for (double t = t0 + step / 2; t < t1; t += step) {
        auto idx = world_to_voxel(spec, origin + t * dir);
        if (!idx) continue;
        uint32_t label = vol.value_at(idx->ix, idx->iy, idx->iz);
        if (label != 0) return label;
    }
    return 0;
}

// The sampling oracle cannot resolve rays that graze a voxel with a chord
// shorter than its step; validate its convergence by re-running 10x finer
// and report such rays as unresolved instead of guessing.
inline std::optional<uint32_t> brute_first_label_checked(const LabelVolume& vol, Vec3 origin,
                                                         Vec3 dir) {
    uint32_t coarse = brute_first_label(vol, origin, dir, 20.0);
    uint32_t fine = brute_first_label(vol, origin, dir, 200.0);
    if (coarse != fine) return std::nullopt;
    return coarse;
}

}  // namespace occukit::test
