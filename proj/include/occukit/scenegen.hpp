#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "occukit/geometry.hpp"
#include "occukit/image.hpp"
#include "occukit/labels.hpp"
#include "occukit/parallel.hpp"

namespace occukit {

// Analytic stand-in for a rendered pedestrian scene: labeled axis-aligned
// boxes (ground, walls, clutter) plus vertical capsules for pedestrians.
// Closed-form intersections make it an exact oracle for fusion, ray marching
// and the metric pipeline.
struct ScenePrimitive {
    enum class Kind { Box, Capsule };

    Kind kind = Kind::Box;
    SemanticLabel label = SemanticLabel::Ground;
    uint32_t instance_id = 0;  // Pedestrian capsules only

    // Box
    Vec3 box_min{0, 0, 0};
    Vec3 box_max{0, 0, 0};

    // Vertical capsule: axis (x,y), feet at base_z, total height incl. caps.
    double cap_x = 0.0;
    double cap_y = 0.0;
    double base_z = 0.0;
    double radius = 0.0;
    double height = 0.0;

    double axis_lo() const { return base_z + radius; }
    double axis_hi() const { return base_z + height - radius; }

    static ScenePrimitive box(Vec3 lo, Vec3 hi, SemanticLabel label) {
        ScenePrimitive p;
        p.kind = Kind::Box;
        p.label = label;
        p.box_min = lo;
        p.box_max = hi;
        return p;
    }

    static ScenePrimitive capsule(double x, double y, double base_z, double radius, double height,
                                  uint32_t instance_id) {
        ScenePrimitive p;
        p.kind = Kind::Capsule;
        p.label = SemanticLabel::Pedestrian;
        p.instance_id = instance_id;
        p.cap_x = x;
        p.cap_y = y;
        p.base_z = base_z;
        p.radius = radius;
        p.height = height;
        return p;
    }
};

struct SceneConfig {
    double extent_x = 20.0;  // meters
    double extent_y = 20.0;
    double height = 3.2;  // vertical extent of the voxel grid
    int pedestrian_count = 10;
    int clutter_count = 3;  // Others-class boxes
    double min_separation = 1.2;  // between pedestrian axes, meters
    uint64_t seed = 0;
    std::vector<CameraModel> cameras;
};

inline VoxelGridSpec scene_grid_spec(const SceneConfig& cfg, double voxel_size = 0.10) {
    VoxelGridSpec spec;
    spec.origin = {0, 0, 0};
    spec.voxel_size = voxel_size;
    spec.dims_x = int(std::ceil(cfg.extent_x / voxel_size));
    spec.dims_y = int(std::ceil(cfg.extent_y / voxel_size));
    spec.dims_z = int(std::ceil(cfg.height / voxel_size));
    return spec;
}

// ---------------------------------------------------------------------------
// Closed-form ray and point queries

namespace detail {

constexpr double kRayEps = 1e-9;

inline std::optional<double> ray_box(Vec3 o, Vec3 d, Vec3 lo, Vec3 hi) {
    double t0 = -std::numeric_limits<double>::infinity();
    double t1 = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        if (d[a] == 0.0) {
            if (o[a] < lo[a] || o[a] > hi[a]) return std::nullopt;
            continue;
        }
        double inv = 1.0 / d[a];
        double ta = (lo[a] - o[a]) * inv;
        double tb = (hi[a] - o[a]) * inv;
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) return std::nullopt;
    }
    if (t0 > kRayEps) return t0;
    if (t1 > kRayEps) return t1;  // origin inside: exit face
    return std::nullopt;
}

inline std::optional<double> ray_sphere(Vec3 o, Vec3 d, Vec3 c, double r) {
    Vec3 oc = o - c;
    double a = dot(d, d);
    double b = 2.0 * dot(oc, d);
    double cc = dot(oc, oc) - r * r;
    double disc = b * b - 4.0 * a * cc;
    if (disc < 0.0) return std::nullopt;
    double s = std::sqrt(disc);
    double t = (-b - s) / (2.0 * a);
    if (t > kRayEps) return t;
    t = (-b + s) / (2.0 * a);
    if (t > kRayEps) return t;
    return std::nullopt;
}

inline std::optional<double> ray_capsule(Vec3 o, Vec3 d, const ScenePrimitive& cap) {
    double best = std::numeric_limits<double>::infinity();
    // Infinite vertical cylinder, clipped to the axis segment.
    double ox = o.x - cap.cap_x, oy = o.y - cap.cap_y;
    double a = d.x * d.x + d.y * d.y;
    double za = cap.axis_lo(), zb = cap.axis_hi();
    if (a > 0.0) {
        double b = 2.0 * (ox * d.x + oy * d.y);
        double c = ox * ox + oy * oy - cap.radius * cap.radius;
        double disc = b * b - 4.0 * a * c;
        if (disc >= 0.0) {
            double s = std::sqrt(disc);
            for (double t : {(-b - s) / (2.0 * a), (-b + s) / (2.0 * a)}) {
                if (t > kRayEps && t < best) {
                    double z = o.z + t * d.z;
                    if (z >= za && z <= zb) best = t;
                }
            }
        }
    }
    for (double zc : {za, zb}) {
        if (auto t = ray_sphere(o, d, {cap.cap_x, cap.cap_y, zc}, cap.radius))
            if (*t < best) best = *t;
    }
    if (!std::isfinite(best)) return std::nullopt;
    return best;
}

inline double point_segment_distance(Vec3 p, double cx, double cy, double za, double zb) {
    double z = std::clamp(p.z, za, zb);
    double dx = p.x - cx, dy = p.y - cy, dz = p.z - z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace detail

inline std::optional<double> ray_primitive(Vec3 origin, Vec3 dir, const ScenePrimitive& p) {
    if (p.kind == ScenePrimitive::Kind::Box)
        return detail::ray_box(origin, dir, p.box_min, p.box_max);
    return detail::ray_capsule(origin, dir, p);
}

inline bool primitive_contains(const ScenePrimitive& p, Vec3 q) {
    if (p.kind == ScenePrimitive::Kind::Box) {
        return q.x >= p.box_min.x && q.x <= p.box_max.x && q.y >= p.box_min.y &&
               q.y <= p.box_max.y && q.z >= p.box_min.z && q.z <= p.box_max.z;
    }
    return detail::point_segment_distance(q, p.cap_x, p.cap_y, p.axis_lo(), p.axis_hi()) <=
           p.radius;
}

// Unsigned distance from q to the primitive's surface.
inline double primitive_surface_distance(const ScenePrimitive& p, Vec3 q) {
    if (p.kind == ScenePrimitive::Kind::Capsule) {
        return std::abs(
            detail::point_segment_distance(q, p.cap_x, p.cap_y, p.axis_lo(), p.axis_hi()) -
            p.radius);
    }
    Vec3 lo = p.box_min, hi = p.box_max;
    double out2 = 0.0;
    double min_face = std::numeric_limits<double>::infinity();
    bool inside = true;
    for (int a = 0; a < 3; ++a) {
        double below = lo[a] - q[a];
        double above = q[a] - hi[a];
        double d = std::max(below, above);
        if (d > 0.0) {
            inside = false;
            out2 += d * d;
        } else {
            min_face = std::min(min_face, -d);
        }
    }
    return inside ? min_face : std::sqrt(out2);
}

struct SceneHit {
    double t = 0.0;  // in units of |dir|
    std::size_t primitive = 0;
};

inline std::optional<SceneHit> scene_first_hit(const std::vector<ScenePrimitive>& prims,
                                               Vec3 origin, Vec3 dir) {
    std::optional<SceneHit> best;
    for (std::size_t i = 0; i < prims.size(); ++i) {
        if (auto t = ray_primitive(origin, dir, prims[i])) {
            if (!best || *t < best->t) best = SceneHit{*t, i};
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Camera rigs

// World->camera rotation with the camera looking along `forward`, image x to
// the right and image y down. World Z is up.
inline CameraPose look_at_pose(Vec3 eye, Vec3 target) {
    Vec3 fwd = normalized(target - eye);
    Vec3 up_hint = std::abs(fwd.z) > 0.999 ? Vec3{1, 0, 0} : Vec3{0, 0, 1};
    Vec3 right = normalized(cross(fwd, up_hint));
    Vec3 down = cross(fwd, right);
    CameraPose pose;
    for (int c = 0; c < 3; ++c) {
        pose.rotation(0, c) = right[c];
        pose.rotation(1, c) = down[c];
        pose.rotation(2, c) = fwd[c];
    }
    pose.translation = -1.0 * (pose.rotation * eye);
    return pose;
}

// CCTV-style rig: cameras spread around the scene at 3-8 m, plus one
// overhead view for full coverage.
inline std::vector<CameraModel> make_scene_cameras(double extent_x, double extent_y,
                                                   int num_cameras, int img_w = 640,
                                                   int img_h = 360) {
    if (num_cameras < 1) throw std::invalid_argument("make_scene_cameras: need >= 1 camera");
    std::vector<CameraModel> cams;
    CameraIntrinsics k;
    k.width = img_w;
    k.height = img_h;
    k.fx = k.fy = 0.55 * img_w;
    k.cx = (img_w - 1) / 2.0;
    k.cy = (img_h - 1) / 2.0;

    Vec3 center{extent_x / 2.0, extent_y / 2.0, 0.8};
    const double heights[] = {3.0, 5.0, 7.0, 4.0, 6.0, 8.0, 3.5};

    int perimeter = num_cameras - 1;
    for (int i = 0; i < perimeter; ++i) {
        double ang = 2.0 * M_PI * i / perimeter + 0.35;  // avoid axis-aligned views
        Vec3 eye{extent_x / 2.0 + 0.45 * extent_x * std::cos(ang),
                 extent_y / 2.0 + 0.45 * extent_y * std::sin(ang),
                 heights[i % 7]};
        CameraModel cam;
        cam.name = "cam" + std::to_string(i);
        cam.intrinsics = k;
        cam.pose = look_at_pose(eye, center);
        cams.push_back(cam);
    }

    // High enough that even the short image axis covers the scene corners.
    CameraModel overhead;
    overhead.name = "cam" + std::to_string(perimeter);
    overhead.intrinsics = k;
    double oh = std::max(6.0, 1.4 * std::max(extent_x, extent_y));
    overhead.pose = look_at_pose({extent_x / 2.0, extent_y / 2.0, oh},
                                 {extent_x / 2.0, extent_y / 2.0, 0.0});
    cams.push_back(overhead);
    return cams;
}

inline SceneConfig make_scene_config(double extent_x, double extent_y, int pedestrians,
                                     int num_cameras, uint64_t seed, int img_w = 640,
                                     int img_h = 360) {
    SceneConfig cfg;
    cfg.extent_x = extent_x;
    cfg.extent_y = extent_y;
    cfg.pedestrian_count = pedestrians;
    cfg.seed = seed;
    cfg.cameras = make_scene_cameras(extent_x, extent_y, num_cameras, img_w, img_h);
    return cfg;
}

// ---------------------------------------------------------------------------
// Scene sampling

inline constexpr double kGroundTop = 0.1;
inline constexpr double kWallThickness = 0.2;
inline constexpr double kWallHeight = 2.5;

inline std::vector<ScenePrimitive> sample_scene(const SceneConfig& cfg) {
    if (cfg.extent_x <= 0 || cfg.extent_y <= 0 || cfg.height <= 0)
        throw std::invalid_argument("sample_scene: extents must be positive");
    std::mt19937_64 rng(cfg.seed);
    auto uniform = [&rng](double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    };

    std::vector<ScenePrimitive> prims;
    const double ex = cfg.extent_x, ey = cfg.extent_y;

    prims.push_back(ScenePrimitive::box({0, 0, 0}, {ex, ey, kGroundTop}, SemanticLabel::Ground));

    // Walls run from the grid floor through the ground slab; the slab overlap
    // resolves to Wall under the shared priority order.
    const double w = kWallThickness;
    const double wz0 = 0.0, wz1 = std::min(kGroundTop + kWallHeight, cfg.height);
    prims.push_back(ScenePrimitive::box({0, 0, wz0}, {w, ey, wz1}, SemanticLabel::Wall));
    prims.push_back(ScenePrimitive::box({ex - w, 0, wz0}, {ex, ey, wz1}, SemanticLabel::Wall));
    prims.push_back(ScenePrimitive::box({w, 0, wz0}, {ex - w, w, wz1}, SemanticLabel::Wall));
    prims.push_back(ScenePrimitive::box({w, ey - w, wz0}, {ex - w, ey, wz1}, SemanticLabel::Wall));

    const double inset = w + 0.5;
    std::vector<ScenePrimitive> clutter;
    for (int i = 0; i < cfg.clutter_count; ++i) {
        double sx = uniform(0.4, 1.2), sy = uniform(0.4, 1.2), sz = uniform(0.4, 1.5);
        double x0 = uniform(inset, std::max(inset + 0.1, ex - inset - sx));
        double y0 = uniform(inset, std::max(inset + 0.1, ey - inset - sy));
        clutter.push_back(ScenePrimitive::box({x0, y0, 0.0}, {x0 + sx, y0 + sy, kGroundTop + sz},
                                              SemanticLabel::Others));
    }

    std::vector<ScenePrimitive> peds;
    const int max_attempts = 200 * std::max(1, cfg.pedestrian_count);
    int attempts = 0;
    while (int(peds.size()) < cfg.pedestrian_count) {
        if (++attempts > max_attempts)
            throw std::runtime_error(
                "sample_scene: failed to place " + std::to_string(cfg.pedestrian_count) +
                " pedestrians (min separation " + std::to_string(cfg.min_separation) + " m)");
        double r = uniform(0.15, 0.35);
        double h = uniform(1.5, 2.0);
        double margin = inset + r;
        if (ex - 2 * margin <= 0 || ey - 2 * margin <= 0)
            throw std::runtime_error("sample_scene: extents too small for pedestrians");
        double x = uniform(margin, ex - margin);
        double y = uniform(margin, ey - margin);

        bool ok = true;
        for (const auto& p : peds) {
            double dx = x - p.cap_x, dy = y - p.cap_y;
            if (std::sqrt(dx * dx + dy * dy) < cfg.min_separation) {
                ok = false;
                break;
            }
        }
        for (const auto& b : clutter) {
            if (!ok) break;
            double cx = std::clamp(x, b.box_min.x, b.box_max.x);
            double cy = std::clamp(y, b.box_min.y, b.box_max.y);
            double dx = x - cx, dy = y - cy;
            if (std::sqrt(dx * dx + dy * dy) < r + 0.15) ok = false;
        }
        if (!ok) continue;
        peds.push_back(
            ScenePrimitive::capsule(x, y, kGroundTop, r, h, uint32_t(peds.size() + 1)));
    }

    prims.insert(prims.end(), clutter.begin(), clutter.end());
    prims.insert(prims.end(), peds.begin(), peds.end());
    return prims;
}

// Ground-plane ground truth: capsule axis per pedestrian, ordered by id.
struct GroundTruthLocation {
    double x = 0.0;
    double y = 0.0;
    uint32_t instance_id = 0;
};

inline std::vector<GroundTruthLocation> gt_locations(const std::vector<ScenePrimitive>& prims) {
    std::vector<GroundTruthLocation> locs;
    for (const auto& p : prims)
        if (p.kind == ScenePrimitive::Kind::Capsule)
            locs.push_back({p.cap_x, p.cap_y, p.instance_id});
    std::sort(locs.begin(), locs.end(),
              [](const auto& a, const auto& b) { return a.instance_id < b.instance_id; });
    return locs;
}

// ---------------------------------------------------------------------------
// Exact sensor renders and voxelization

struct SensorRender {
    ImageF32 depth;      // camera-space z, +inf on background
    ImageU16 semantic;   // SemanticLabel values
    ImageU16 instance;   // pedestrian instance ids, 0 elsewhere
};

inline SensorRender render_sensors(const CameraModel& cam,
                                   const std::vector<ScenePrimitive>& prims, int width,
                                   int height, unsigned threads = 0) {
    if (width < 1 || height < 1) throw std::invalid_argument("render_sensors: bad output size");
    SensorRender out;
    out.depth = ImageF32(width, height, std::numeric_limits<float>::infinity());
    out.semantic = ImageU16(width, height, 0);
    out.instance = ImageU16(width, height, 0);

    CameraIntrinsics k = cam.intrinsics;
    k.fx *= double(width) / cam.intrinsics.width;
    k.cx *= double(width) / cam.intrinsics.width;
    k.fy *= double(height) / cam.intrinsics.height;
    k.cy *= double(height) / cam.intrinsics.height;

    const Vec3 origin = cam.pose.center();
    const Mat3 rt = cam.pose.rotation.transposed();

    parallel_for(std::size_t(height), threads, [&](std::size_t y0, std::size_t y1) {
        for (std::size_t y = y0; y < y1; ++y) {
            for (int x = 0; x < width; ++x) {
                // dir has unit camera-space z, so the hit parameter is depth.
                Vec3 dir_cam{(x - k.cx) / k.fx, (double(y) - k.cy) / k.fy, 1.0};
                Vec3 dir = rt * dir_cam;
                if (auto hit = scene_first_hit(prims, origin, dir)) {
                    const auto& p = prims[hit->primitive];
                    out.depth.at(x, int(y)) = float(hit->t);
                    out.semantic.at(x, int(y)) = uint16_t(p.label);
                    out.instance.at(x, int(y)) = uint16_t(p.instance_id);
                }
            }
        }
    });
    return out;
}

// Exact voxelization: the voxel takes the highest-priority primitive whose
// solid contains the voxel center.
inline LabelVolume voxelize_analytic(const std::vector<ScenePrimitive>& prims,
                                     const VoxelGridSpec& spec, unsigned threads = 0) {
    LabelVolume vol(spec);
    parallel_for(std::size_t(spec.dims_x), threads, [&](std::size_t x0, std::size_t x1) {
        for (std::size_t ix = x0; ix < x1; ++ix) {
            for (int iy = 0; iy < spec.dims_y; ++iy) {
                for (int iz = 0; iz < spec.dims_z; ++iz) {
                    Vec3 c = voxel_center(spec, int(ix), iy, iz);
                    int best_priority = 0;
                    SemanticLabel best = SemanticLabel::Free;
                    uint32_t inst = 0;
                    for (const auto& p : prims) {
                        int pr = label_priority(p.label);
                        if (pr <= best_priority) continue;
                        if (primitive_contains(p, c)) {
                            best_priority = pr;
                            best = p.label;
                            inst = p.instance_id;
                        }
                    }
                    if (best != SemanticLabel::Free) vol.set(int(ix), iy, iz, best, inst);
                }
            }
        }
    });
    return vol;
}

}  // namespace occukit
