#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "occukit/constants.hpp"
#include "occukit/geometry.hpp"
#include "occukit/view_transform.hpp"

namespace occukit {

// Ground-plane grid sharing the volume's X/Y layout; cell (ix,iy) center is
// origin + (i+0.5)*cell_size.
struct BevSpec {
    double origin_x = 0.0;
    double origin_y = 0.0;
    double cell_size = defaults::voxel_size;
    int dims_x = 1;
    int dims_y = 1;

    static BevSpec from_grid(const VoxelGridSpec& spec) {
        return {spec.origin.x, spec.origin.y, spec.voxel_size, spec.dims_x, spec.dims_y};
    }

    std::size_t num_cells() const { return std::size_t(dims_x) * dims_y; }
    std::size_t linear_index(int ix, int iy) const { return std::size_t(ix) * dims_y + iy; }
    Vec2 cell_center(int ix, int iy) const {
        return {origin_x + (ix + 0.5) * cell_size, origin_y + (iy + 0.5) * cell_size};
    }
};

struct BevMap {
    BevSpec spec;
    std::vector<double> values;

    BevMap() = default;
    explicit BevMap(const BevSpec& s, double fill = 0.0) : spec(s), values(s.num_cells(), fill) {}

    double& at(int ix, int iy) { return values[spec.linear_index(ix, iy)]; }
    double at(int ix, int iy) const { return values[spec.linear_index(ix, iy)]; }
};

// Multi-channel BEV feature field produced by collapsing a feature volume.
struct BevField {
    int channels = 0;
    BevSpec spec;
    std::vector<double> values;  // [cell * channels + c]

    double at(int ix, int iy, int c) const {
        return values[spec.linear_index(ix, iy) * channels + c];
    }
};

// Mean over the vertical dimension of each channel.
inline BevField collapse_to_bev(const FeatureVolume& vol) {
    if (vol.spec.dims_z < 1) throw std::invalid_argument("collapse_to_bev: empty volume");
    BevField out;
    out.channels = vol.channels;
    out.spec = BevSpec::from_grid(vol.spec);
    out.values.assign(out.spec.num_cells() * vol.channels, 0.0);
    const int Z = vol.spec.dims_z;
    for (int ix = 0; ix < vol.spec.dims_x; ++ix)
        for (int iy = 0; iy < vol.spec.dims_y; ++iy) {
            std::size_t cell = out.spec.linear_index(ix, iy);
            for (int iz = 0; iz < Z; ++iz) {
                std::size_t lin = vol.spec.linear_index(ix, iy, iz);
                for (int c = 0; c < vol.channels; ++c)
                    out.values[cell * vol.channels + c] += vol.values[lin * vol.channels + c];
            }
            for (int c = 0; c < vol.channels; ++c) out.values[cell * vol.channels + c] /= Z;
        }
    return out;
}

struct Detection {
    double x = 0.0;  // world meters, cell center
    double y = 0.0;
    double score = 0.0;
};

// Gaussian heatmap target: each cell takes the max over locations of
// exp(-d^2 / (2 sigma^2)). Max, not sum, so nearby pedestrians cannot push a
// target above 1.
inline BevMap splat_gaussian(const std::vector<Vec2>& locations, const BevSpec& spec,
                             double sigma = defaults::sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("splat_gaussian: sigma must be positive");
    BevMap map(spec, 0.0);
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int ix = 0; ix < spec.dims_x; ++ix)
        for (int iy = 0; iy < spec.dims_y; ++iy) {
            Vec2 c = spec.cell_center(ix, iy);
            double best = 0.0;
            for (const auto& l : locations) {
                double dx = c.x - l.x, dy = c.y - l.y;
                best = std::max(best, std::exp(-(dx * dx + dy * dy) * inv));
            }
            map.at(ix, iy) = best;
        }
    return map;
}

struct MseLoss {
    double value = 0.0;
    std::vector<double> gradient;  // d value / d pred, same layout as the map
};

inline MseLoss mse_loss(const BevMap& pred, const BevMap& target) {
    if (pred.spec.dims_x != target.spec.dims_x || pred.spec.dims_y != target.spec.dims_y)
        throw std::invalid_argument("mse_loss: dimension mismatch");
    MseLoss out;
    const std::size_t n = pred.values.size();
    out.gradient.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double d = pred.values[i] - target.values[i];
        out.value += d * d;
        out.gradient[i] = 2.0 * d / double(n);
    }
    out.value /= double(n);
    return out;
}

// Threshold + greedy NMS peak extraction. Candidates are processed in
// (score desc, ix, iy) order; an emitted peak suppresses every candidate
// within nms_radius, so surviving detections are pairwise farther apart than
// the radius.
inline std::vector<Detection> extract_locations(const BevMap& pocc, double tau = defaults::tau,
                                                double nms_radius = defaults::nms_radius) {
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("extract_locations: tau must be in (0,1)");
    if (!(nms_radius > 0.0))
        throw std::invalid_argument("extract_locations: nms_radius must be positive");

    struct Candidate {
        double score;
        int ix, iy;
    };
    std::vector<Candidate> cands;
    for (int ix = 0; ix < pocc.spec.dims_x; ++ix)
        for (int iy = 0; iy < pocc.spec.dims_y; ++iy) {
            double s = pocc.at(ix, iy);
            if (s >= tau) cands.push_back({s, ix, iy});
        }
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.ix != b.ix) return a.ix < b.ix;
        return a.iy < b.iy;
    });

    std::vector<Detection> out;
    std::vector<bool> suppressed(cands.size(), false);
    for (std::size_t i = 0; i < cands.size(); ++i) {
        if (suppressed[i]) continue;
        Vec2 c = pocc.spec.cell_center(cands[i].ix, cands[i].iy);
        out.push_back({c.x, c.y, cands[i].score});
        for (std::size_t j = i + 1; j < cands.size(); ++j) {
            if (suppressed[j]) continue;
            Vec2 o = pocc.spec.cell_center(cands[j].ix, cands[j].iy);
            if (norm(o - c) <= nms_radius) suppressed[j] = true;
        }
    }
    return out;
}

}  // namespace occukit
