#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace occukit {

// Dense row-major raster, row 0 at the top.
template <typename T>
struct Image {
    int width = 0;
    int height = 0;
    std::vector<T> pixels;

    Image() = default;
    Image(int w, int h, T fill = T{}) : width(w), height(h), pixels(std::size_t(w) * h, fill) {}

    T& at(int x, int y) { return pixels[std::size_t(y) * width + x]; }
    T at(int x, int y) const { return pixels[std::size_t(y) * width + x]; }
    std::size_t size() const { return pixels.size(); }
};

using ImageF32 = Image<float>;
using ImageU16 = Image<uint16_t>;

// C-channel 2D feature field, channel-major (c, then rows). Texel centers at
// integer coordinates.
struct FeatureMap {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<float> data;

    FeatureMap() = default;
    FeatureMap(int c, int h, int w, float fill = 0.0f)
        : channels(c), height(h), width(w), data(std::size_t(c) * h * w, fill) {}

    float& at(int c, int y, int x) {
        return data[(std::size_t(c) * height + y) * width + x];
    }
    float at(int c, int y, int x) const {
        return data[(std::size_t(c) * height + y) * width + x];
    }
};

// Bilinear blend of the four surrounding texels; coordinates are clamped to
// the map border first, so constant maps stay exact at the edges.
inline std::vector<double> bilinear_sample(const FeatureMap& map, double u, double v) {
    if (map.channels <= 0 || map.width <= 0 || map.height <= 0)
        throw std::invalid_argument("bilinear_sample: empty feature map");
    u = std::clamp(u, 0.0, double(map.width - 1));
    v = std::clamp(v, 0.0, double(map.height - 1));
    int x0 = std::min(int(std::floor(u)), map.width - 1);
    int y0 = std::min(int(std::floor(v)), map.height - 1);
    int x1 = std::min(x0 + 1, map.width - 1);
    int y1 = std::min(y0 + 1, map.height - 1);
    double fx = u - x0;
    double fy = v - y0;

    std::vector<double> out(map.channels);
    for (int c = 0; c < map.channels; ++c) {
        double top = (1.0 - fx) * map.at(c, y0, x0) + fx * map.at(c, y0, x1);
        double bot = (1.0 - fx) * map.at(c, y1, x0) + fx * map.at(c, y1, x1);
        out[c] = (1.0 - fy) * top + fy * bot;
    }
    return out;
}

}  // namespace occukit
