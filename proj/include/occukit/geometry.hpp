#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace occukit {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline double norm(Vec2 v) { return std::sqrt(v.x * v.x + v.y * v.y); }

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, Vec3 v) { return {s * v.x, s * v.y, s * v.z}; }
inline Vec3 operator*(Vec3 v, double s) { return s * v; }
inline Vec3 operator/(Vec3 v, double s) { return {v.x / s, v.y / s, v.z / s}; }
inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec3 v) { return std::sqrt(dot(v, v)); }
inline Vec3 normalized(Vec3 v) { return v / norm(v); }

// Row-major 3x3 matrix.
struct Mat3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    double& operator()(int r, int c) { return m[r * 3 + c]; }
    double operator()(int r, int c) const { return m[r * 3 + c]; }

    static Mat3 identity() { return Mat3{}; }

    Mat3 transposed() const {
        Mat3 t;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) t(r, c) = (*this)(c, r);
        return t;
    }

    double det() const {
        return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
               m[2] * (m[3] * m[7] - m[4] * m[6]);
    }
};

inline Vec3 operator*(const Mat3& a, Vec3 v) {
    return {a.m[0] * v.x + a.m[1] * v.y + a.m[2] * v.z,
            a.m[3] * v.x + a.m[4] * v.y + a.m[5] * v.z,
            a.m[6] * v.x + a.m[7] * v.y + a.m[8] * v.z};
}

inline Mat3 operator*(const Mat3& a, const Mat3& b) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += a(i, k) * b(k, j);
            r(i, j) = s;
        }
    return r;
}

// Pinhole intrinsics in pixels. Texel centers sit at integer coordinates;
// scaling by s maps (fx,fy,cx,cy) -> s*(fx,fy,cx,cy).
struct CameraIntrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 1;
    int height = 1;

    bool valid() const { return fx > 0.0 && fy > 0.0 && width >= 1 && height >= 1; }

    CameraIntrinsics scaled(double s) const {
        CameraIntrinsics k = *this;
        k.fx *= s;
        k.fy *= s;
        k.cx *= s;
        k.cy *= s;
        return k;
    }
};

// World-to-camera rigid transform: x_cam = R * p + t.
struct CameraPose {
    Mat3 rotation;
    Vec3 translation;

    // Orthonormality and det(+1) within tol.
    bool valid(double tol = 1e-9) const {
        Mat3 should_be_i = rotation * rotation.transposed();
        double err = 0.0;
        Mat3 eye = Mat3::identity();
        for (int i = 0; i < 9; ++i) err = std::max(err, std::abs(should_be_i.m[i] - eye.m[i]));
        return err <= tol && std::abs(rotation.det() - 1.0) <= tol;
    }

    Vec3 world_to_camera(Vec3 p) const { return rotation * p + translation; }
    Vec3 camera_to_world(Vec3 x) const { return rotation.transposed() * (x - translation); }
    Vec3 center() const { return rotation.transposed() * (-1.0 * translation); }
};

struct CameraModel {
    std::string name;
    CameraIntrinsics intrinsics;
    CameraPose pose;
};

struct PixelProjection {
    double u = 0.0;
    double v = 0.0;
    double depth = 0.0;  // camera-space z, meters
};

// Project a world point through scaled intrinsics. Absent when the point is
// at or behind the camera plane.
inline std::optional<PixelProjection> project_point(const CameraModel& cam, Vec3 p,
                                                    double scale = 0.25) {
    if (!(scale > 0.0) || scale > 1.0) throw std::invalid_argument("project_point: scale must be in (0,1]");
    Vec3 x = cam.pose.world_to_camera(p);
    if (!(x.z > 0.0)) return std::nullopt;
    CameraIntrinsics k = cam.intrinsics.scaled(scale);
    return PixelProjection{k.fx * x.x / x.z + k.cx, k.fy * x.y / x.z + k.cy, x.z};
}

// Invert the pinhole map at full resolution: x = depth * K^-1 (u,v,1), then
// back to world through the inverse pose.
inline Vec3 backproject_pixel(const CameraModel& cam, double u, double v, double depth) {
    if (!(depth > 0.0)) throw std::invalid_argument("backproject_pixel: depth must be positive");
    const CameraIntrinsics& k = cam.intrinsics;
    Vec3 x{depth * (u - k.cx) / k.fx, depth * (v - k.cy) / k.fy, depth};
    return cam.pose.camera_to_world(x);
}

struct Index3 {
    int ix = 0;
    int iy = 0;
    int iz = 0;
    bool operator==(const Index3&) const = default;
};

// Axis-aligned voxel grid; origin is the minimum corner, Z is vertical.
// Cells are half-open [lo, hi) along each axis.
struct VoxelGridSpec {
    Vec3 origin{0, 0, 0};
    double voxel_size = 0.10;
    int dims_x = 1;
    int dims_y = 1;
    int dims_z = 1;

    bool valid() const { return voxel_size > 0.0 && dims_x >= 1 && dims_y >= 1 && dims_z >= 1; }

    std::size_t num_voxels() const {
        return static_cast<std::size_t>(dims_x) * dims_y * dims_z;
    }

    // Fixed linearization shared with the grid file format.
    std::size_t linear_index(int ix, int iy, int iz) const {
        return (static_cast<std::size_t>(ix) * dims_y + iy) * dims_z + iz;
    }
    std::size_t linear_index(Index3 i) const { return linear_index(i.ix, i.iy, i.iz); }

    bool in_range(Index3 i) const {
        return i.ix >= 0 && i.ix < dims_x && i.iy >= 0 && i.iy < dims_y && i.iz >= 0 &&
               i.iz < dims_z;
    }

    Vec3 min_corner() const { return origin; }
    Vec3 max_corner() const {
        return origin + voxel_size * Vec3{double(dims_x), double(dims_y), double(dims_z)};
    }

    bool operator==(const VoxelGridSpec& o) const {
        return origin.x == o.origin.x && origin.y == o.origin.y && origin.z == o.origin.z &&
               voxel_size == o.voxel_size && dims_x == o.dims_x && dims_y == o.dims_y &&
               dims_z == o.dims_z;
    }
};

inline std::optional<Index3> world_to_voxel(const VoxelGridSpec& spec, Vec3 p) {
    Vec3 rel = (p - spec.origin) / spec.voxel_size;
    Index3 i{static_cast<int>(std::floor(rel.x)), static_cast<int>(std::floor(rel.y)),
             static_cast<int>(std::floor(rel.z))};
    if (!spec.in_range(i)) return std::nullopt;
    return i;
}

inline Vec3 voxel_center(const VoxelGridSpec& spec, Index3 i) {
    if (!spec.in_range(i)) throw std::out_of_range("voxel_center: index out of range");
    return spec.origin +
           spec.voxel_size * Vec3{i.ix + 0.5, i.iy + 0.5, i.iz + 0.5};
}

inline Vec3 voxel_center(const VoxelGridSpec& spec, int ix, int iy, int iz) {
    return voxel_center(spec, Index3{ix, iy, iz});
}

// Axis-aligned box in world space (inclusive bounds).
struct Aabb {
    Vec3 min{0, 0, 0};
    Vec3 max{0, 0, 0};

    bool contains(Vec3 p) const {
        return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z &&
               p.z <= max.z;
    }
};

}  // namespace occukit
