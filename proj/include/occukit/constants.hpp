#pragma once

#include <vector>

namespace occukit::defaults {

// Grid discretization (meters).
inline constexpr double voxel_size = 0.10;

// Detection extraction.
inline constexpr double tau = 0.5;         // confidence threshold on P_occ
inline constexpr double nms_radius = 0.5;  // meters
inline constexpr double sigma = 0.3;       // Gaussian splat width, meters

// Instance grouping radius (meters).
inline constexpr double group_radius = 0.5;

// 2D detection match threshold t (meters).
inline constexpr double match_threshold = 0.5;

// Ray marching.
inline constexpr double min_hit_distance = 0.10;   // meters
inline constexpr double max_trace_distance = 50.0; // meters
inline constexpr std::size_t max_steps = 0;        // 0 = march to grid exit

// Loss composition weights.
inline constexpr double lambda_wce = 0.4;
inline constexpr double lambda_lovasz = 0.3;
inline constexpr double lambda_affinity = 0.3;
inline constexpr double lambda_2d = 0.3;  // total = (1-lambda)*L3D + lambda*L2D

// Class-weight epsilon.
inline constexpr double class_weight_epsilon = 1e-3;

// Inward displacement applied to back-projected surface samples so voxel
// votes land inside the solid they belong to (half a default voxel).
inline constexpr double surface_bias = voxel_size / 2.0;

// Mask-IoU threshold sets for instance AP.
inline std::vector<double> ap_thresholds() {
    std::vector<double> t;
    for (int i = 0; i < 10; ++i) t.push_back(0.50 + 0.05 * i);
    return t;  // {0.50, ..., 0.95}
}

inline std::vector<double> view_ap_thresholds() {
    std::vector<double> t;
    for (int i = 0; i < 10; ++i) t.push_back(0.25 + 0.05 * i);
    return t;  // {0.25, ..., 0.70}
}

}  // namespace occukit::defaults
