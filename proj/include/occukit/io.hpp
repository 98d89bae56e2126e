#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "occukit/bev.hpp"
#include "occukit/geometry.hpp"
#include "occukit/image.hpp"
#include "occukit/labels.hpp"
#include "occukit/metrics.hpp"
#include "occukit/view_transform.hpp"

namespace occukit {

// Typed IO failure; loaders throw this instead of crashing on malformed
// input.
class io_error : public std::runtime_error {
  public:
    enum class Kind {
        MissingFile,
        BadMagic,
        BadVersion,
        BadKind,
        DimOverflow,
        BadValue,
        Truncated,
        Malformed,
        MissingPaletteEntry,
    };

    io_error(Kind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    Kind kind() const { return kind_; }

  private:
    Kind kind_;
};

namespace ioutil {

inline void put_u32le(std::string& out, uint32_t v) {
    out.push_back(char(v & 0xFF));
    out.push_back(char((v >> 8) & 0xFF));
    out.push_back(char((v >> 16) & 0xFF));
    out.push_back(char((v >> 24) & 0xFF));
}

inline void put_f32le(std::string& out, float f) {
    uint32_t v;
    std::memcpy(&v, &f, 4);
    put_u32le(out, v);
}

inline uint32_t get_u32le(const uint8_t* p) {
    return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 | uint32_t(p[3]) << 24;
}

inline float get_f32le(const uint8_t* p) {
    uint32_t v = get_u32le(p);
    float f;
    std::memcpy(&f, &v, 4);
    return f;
}

inline std::vector<uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw io_error(io_error::Kind::MissingFile, "cannot open " + path.string());
    std::vector<uint8_t> data((std::istreambuf_iterator<char>(in)),
                              std::istreambuf_iterator<char>());
    return data;
}

inline void write_file(const std::filesystem::path& path, const std::string& data) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error(io_error::Kind::MissingFile, "cannot write " + path.string());
    out.write(data.data(), std::streamsize(data.size()));
    if (!out) throw io_error(io_error::Kind::Truncated, "short write to " + path.string());
}

}  // namespace ioutil

// ---------------------------------------------------------------------------
// Binary voxel grid ("MVPO"): 44-byte little-endian header + dense payload.
// Layout: magic[4] version:u32 kind:u8 pad[3] dims:3xu32 voxel_size:f32
// origin:3xf32 reserved:u32, then X*Y*Z samples (u8 for semantic, u32 for
// instance/panoptic) with index (ix*Y + iy)*Z + iz.

enum class GridKind : uint8_t {
    Semantic = 1,
    Instance = 2,
    Panoptic = 3,
};

inline constexpr std::size_t kGridHeaderSize = 44;
inline constexpr uint32_t kGridVersion = 1;
inline constexpr std::size_t kGridMaxVoxels = std::size_t(1) << 31;

struct GridData {
    VoxelGridSpec spec;
    GridKind kind = GridKind::Semantic;
    std::vector<uint8_t> u8;    // Semantic payload
    std::vector<uint32_t> u32;  // Instance / Panoptic payload
};

namespace detail_io {

inline std::string grid_header(const VoxelGridSpec& spec, GridKind kind) {
    std::string out;
    out.reserve(kGridHeaderSize);
    out += "MVPO";
    ioutil::put_u32le(out, kGridVersion);
    out.push_back(char(kind));
    out.append(3, '\0');
    ioutil::put_u32le(out, uint32_t(spec.dims_x));
    ioutil::put_u32le(out, uint32_t(spec.dims_y));
    ioutil::put_u32le(out, uint32_t(spec.dims_z));
    ioutil::put_f32le(out, float(spec.voxel_size));
    ioutil::put_f32le(out, float(spec.origin.x));
    ioutil::put_f32le(out, float(spec.origin.y));
    ioutil::put_f32le(out, float(spec.origin.z));
    ioutil::put_u32le(out, 0);  // reserved
    return out;
}

}  // namespace detail_io

inline void save_grid(const VoxelGridSpec& spec, GridKind kind, const uint8_t* u8_data,
                      const uint32_t* u32_data, const std::filesystem::path& path) {
    std::string out = detail_io::grid_header(spec, kind);
    std::size_t n = spec.num_voxels();
    if (kind == GridKind::Semantic) {
        out.append(reinterpret_cast<const char*>(u8_data), n);
    } else {
        out.reserve(out.size() + 4 * n);
        for (std::size_t i = 0; i < n; ++i) ioutil::put_u32le(out, u32_data[i]);
    }
    ioutil::write_file(path, out);
}

inline void save_grid(const LabelVolume& vol, const std::filesystem::path& path) {
    save_grid(vol.spec, GridKind::Semantic, vol.labels.data(), nullptr, path);
}
inline void save_grid(const InstanceVolume& vol, const std::filesystem::path& path) {
    save_grid(vol.spec, GridKind::Instance, nullptr, vol.ids.data(), path);
}
inline void save_grid(const PanopticVolume& vol, const std::filesystem::path& path) {
    save_grid(vol.spec, GridKind::Panoptic, nullptr, vol.labels.data(), path);
}

inline GridData load_grid(const std::filesystem::path& path) {
    std::vector<uint8_t> data = ioutil::read_file(path);
    if (data.size() < kGridHeaderSize)
        throw io_error(io_error::Kind::Truncated,
                       path.string() + ": file shorter than the 44-byte header");
    if (std::memcmp(data.data(), "MVPO", 4) != 0)
        throw io_error(io_error::Kind::BadMagic, path.string() + ": bad magic (want MVPO)");
    uint32_t version = ioutil::get_u32le(data.data() + 4);
    if (version != kGridVersion)
        throw io_error(io_error::Kind::BadVersion,
                       path.string() + ": unsupported version " + std::to_string(version));
    uint8_t kind_raw = data[8];
    if (kind_raw < 1 || kind_raw > 3)
        throw io_error(io_error::Kind::BadKind,
                       path.string() + ": unknown payload kind " + std::to_string(kind_raw));

    GridData grid;
    grid.kind = GridKind(kind_raw);
    uint32_t dx = ioutil::get_u32le(data.data() + 12);
    uint32_t dy = ioutil::get_u32le(data.data() + 16);
    uint32_t dz = ioutil::get_u32le(data.data() + 20);
    if (dx == 0 || dy == 0 || dz == 0)
        throw io_error(io_error::Kind::BadValue, path.string() + ": zero grid dimension");
    uint64_t n = uint64_t(dx) * dy * dz;
    if (n > kGridMaxVoxels)
        throw io_error(io_error::Kind::DimOverflow,
                       path.string() + ": voxel count " + std::to_string(n) + " exceeds limit");
    float voxel_size = ioutil::get_f32le(data.data() + 24);
    if (!(voxel_size > 0.0f) || !std::isfinite(voxel_size))
        throw io_error(io_error::Kind::BadValue, path.string() + ": non-positive voxel size");
    for (int a = 0; a < 3; ++a) {
        float o = ioutil::get_f32le(data.data() + 28 + 4 * a);
        if (!std::isfinite(o))
            throw io_error(io_error::Kind::BadValue, path.string() + ": non-finite origin");
        grid.spec.origin[a] = o;
    }
    grid.spec.voxel_size = voxel_size;
    grid.spec.dims_x = int(dx);
    grid.spec.dims_y = int(dy);
    grid.spec.dims_z = int(dz);

    std::size_t sample_width = grid.kind == GridKind::Semantic ? 1 : 4;
    std::size_t expected = kGridHeaderSize + std::size_t(n) * sample_width;
    if (data.size() != expected)
        throw io_error(io_error::Kind::Truncated,
                       path.string() + ": payload size " +
                           std::to_string(data.size() - kGridHeaderSize) + ", expected " +
                           std::to_string(expected - kGridHeaderSize));

    const uint8_t* payload = data.data() + kGridHeaderSize;
    if (grid.kind == GridKind::Semantic) {
        grid.u8.assign(payload, payload + n);
        for (uint8_t v : grid.u8)
            if (v >= kNumSemanticClasses)
                throw io_error(io_error::Kind::BadValue,
                               path.string() + ": semantic label out of range");
    } else {
        grid.u32.resize(std::size_t(n));
        for (std::size_t i = 0; i < n; ++i) grid.u32[i] = ioutil::get_u32le(payload + 4 * i);
    }
    return grid;
}

inline LabelVolume load_semantic_grid(const std::filesystem::path& path) {
    GridData g = load_grid(path);
    if (g.kind != GridKind::Semantic)
        throw io_error(io_error::Kind::BadKind, path.string() + ": expected a semantic grid");
    LabelVolume vol(g.spec);
    vol.labels = std::move(g.u8);
    return vol;
}

inline InstanceVolume load_instance_grid(const std::filesystem::path& path) {
    GridData g = load_grid(path);
    if (g.kind != GridKind::Instance)
        throw io_error(io_error::Kind::BadKind, path.string() + ": expected an instance grid");
    InstanceVolume vol(g.spec);
    vol.ids = std::move(g.u32);
    return vol;
}

inline PanopticVolume load_panoptic_grid(const std::filesystem::path& path) {
    GridData g = load_grid(path);
    if (g.kind != GridKind::Panoptic)
        throw io_error(io_error::Kind::BadKind, path.string() + ": expected a panoptic grid");
    PanopticVolume vol(g.spec);
    vol.labels = std::move(g.u32);
    return vol;
}

// ---------------------------------------------------------------------------
// PFM depth maps (grayscale, little-endian, rows bottom-up per convention)

inline void save_pfm(const ImageF32& img, const std::filesystem::path& path) {
    std::string out = "Pf\n" + std::to_string(img.width) + " " + std::to_string(img.height) +
                      "\n-1.0\n";
    out.reserve(out.size() + img.size() * 4);
    for (int y = img.height - 1; y >= 0; --y)
        for (int x = 0; x < img.width; ++x) ioutil::put_f32le(out, img.at(x, y));
    ioutil::write_file(path, out);
}

inline ImageF32 load_pfm(const std::filesystem::path& path) {
    std::vector<uint8_t> data = ioutil::read_file(path);
    std::string header(data.begin(), data.begin() + std::min<std::size_t>(data.size(), 64));
    std::istringstream hs(header);
    std::string magic;
    int w = 0, h = 0;
    double scale = 0.0;
    hs >> magic >> w >> h >> scale;
    if (magic != "Pf")
        throw io_error(io_error::Kind::BadMagic, path.string() + ": not a grayscale PFM");
    if (!hs || w < 1 || h < 1)
        throw io_error(io_error::Kind::Malformed, path.string() + ": bad PFM dimensions");
    if (scale >= 0.0)
        throw io_error(io_error::Kind::BadValue,
                       path.string() + ": big-endian PFM not supported");
    std::size_t offset = std::size_t(hs.tellg()) + 1;  // single whitespace after scale
    std::size_t need = std::size_t(w) * h * 4;
    if (data.size() < offset + need)
        throw io_error(io_error::Kind::Truncated, path.string() + ": PFM payload truncated");

    ImageF32 img(w, h);
    const uint8_t* p = data.data() + offset;
    for (int y = h - 1; y >= 0; --y)
        for (int x = 0; x < w; ++x, p += 4) img.at(x, y) = ioutil::get_f32le(p);
    return img;
}

// ---------------------------------------------------------------------------
// 16-bit PGM label masks (big-endian samples per the netpbm spec)

inline void save_pgm16(const ImageU16& img, const std::filesystem::path& path) {
    std::string out =
        "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n65535\n";
    out.reserve(out.size() + img.size() * 2);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            uint16_t v = img.at(x, y);
            out.push_back(char(v >> 8));
            out.push_back(char(v & 0xFF));
        }
    ioutil::write_file(path, out);
}

inline ImageU16 load_pgm16(const std::filesystem::path& path) {
    std::vector<uint8_t> data = ioutil::read_file(path);
    std::string header(data.begin(), data.begin() + std::min<std::size_t>(data.size(), 64));
    std::istringstream hs(header);
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    hs >> magic >> w >> h >> maxval;
    if (magic != "P5")
        throw io_error(io_error::Kind::BadMagic, path.string() + ": not a binary PGM");
    if (!hs || w < 1 || h < 1)
        throw io_error(io_error::Kind::Malformed, path.string() + ": bad PGM dimensions");
    if (maxval != 65535)
        throw io_error(io_error::Kind::BadValue, path.string() + ": expected 16-bit PGM");
    std::size_t offset = std::size_t(hs.tellg()) + 1;
    std::size_t need = std::size_t(w) * h * 2;
    if (data.size() < offset + need)
        throw io_error(io_error::Kind::Truncated, path.string() + ": PGM payload truncated");

    ImageU16 img(w, h);
    const uint8_t* p = data.data() + offset;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x, p += 2) img.at(x, y) = uint16_t(p[0] << 8 | p[1]);
    return img;
}

// ---------------------------------------------------------------------------
// Color output

using Rgb = std::array<uint8_t, 3>;
using Palette = std::map<uint32_t, Rgb>;

inline Palette default_semantic_palette() {
    return {
        {uint32_t(SemanticLabel::Free), {0, 0, 0}},
        {uint32_t(SemanticLabel::Pedestrian), {220, 40, 40}},
        {uint32_t(SemanticLabel::Ground), {90, 90, 90}},
        {uint32_t(SemanticLabel::Wall), {70, 110, 180}},
        {uint32_t(SemanticLabel::Others), {230, 190, 60}},
    };
}

// Deterministic color for instance ids beyond the stuff palette.
inline Rgb instance_color(uint32_t id) {
    uint32_t h = id * 2654435761u;
    return {uint8_t(64 + (h & 0x7F)), uint8_t(64 + ((h >> 8) & 0x7F)),
            uint8_t(64 + ((h >> 16) & 0x7F))};
}

inline void save_ppm(const ImageU16& labels, const Palette& palette,
                     const std::filesystem::path& path) {
    std::string out =
        "P6\n" + std::to_string(labels.width) + " " + std::to_string(labels.height) + "\n255\n";
    for (int y = 0; y < labels.height; ++y)
        for (int x = 0; x < labels.width; ++x) {
            uint32_t v = labels.at(x, y);
            Rgb rgb;
            auto it = palette.find(v);
            if (it != palette.end()) rgb = it->second;
            else if (panoptic_is_instance(v)) rgb = instance_color(panoptic_instance_id(v));
            else
                throw io_error(io_error::Kind::MissingPaletteEntry,
                               "no palette entry for label " + std::to_string(v));
            out.push_back(char(rgb[0]));
            out.push_back(char(rgb[1]));
            out.push_back(char(rgb[2]));
        }
    ioutil::write_file(path, out);
}

// ---------------------------------------------------------------------------
// ASCII PLY voxel export: one vertex per non-Free voxel

template <typename VolumeT>
void export_ply(const VolumeT& vol, const Palette& palette, const std::filesystem::path& path) {
    const VoxelGridSpec& spec = vol.spec;
    std::vector<std::string> rows;
    char line[128];
    for (int ix = 0; ix < spec.dims_x; ++ix)
        for (int iy = 0; iy < spec.dims_y; ++iy)
            for (int iz = 0; iz < spec.dims_z; ++iz) {
                uint32_t v = vol.value_at(ix, iy, iz);
                if (v == 0) continue;
                Rgb rgb;
                auto it = palette.find(v);
                if (it != palette.end()) rgb = it->second;
                else if (panoptic_is_instance(v)) rgb = instance_color(panoptic_instance_id(v));
                else
                    throw io_error(io_error::Kind::MissingPaletteEntry,
                                   "no palette entry for label " + std::to_string(v));
                Vec3 c = voxel_center(spec, ix, iy, iz);
                std::snprintf(line, sizeof line, "%.6f %.6f %.6f %d %d %d", c.x, c.y, c.z,
                              rgb[0], rgb[1], rgb[2]);
                rows.emplace_back(line);
            }

    std::string out = "ply\nformat ascii 1.0\nelement vertex " + std::to_string(rows.size()) +
                      "\nproperty float x\nproperty float y\nproperty float z\n"
                      "property uchar red\nproperty uchar green\nproperty uchar blue\n"
                      "end_header\n";
    for (const auto& r : rows) {
        out += r;
        out += '\n';
    }
    ioutil::write_file(path, out);
}

// ---------------------------------------------------------------------------
// Camera calibration JSON: [{name,width,height,K:9,R:9,t:3}, ...] row-major

inline nlohmann::json camera_to_json(const CameraModel& cam) {
    const auto& k = cam.intrinsics;
    nlohmann::json j;
    j["name"] = cam.name;
    j["width"] = k.width;
    j["height"] = k.height;
    j["K"] = {k.fx, 0.0, k.cx, 0.0, k.fy, k.cy, 0.0, 0.0, 1.0};
    j["R"] = cam.pose.rotation.m;
    j["t"] = {cam.pose.translation.x, cam.pose.translation.y, cam.pose.translation.z};
    return j;
}

inline void save_calibration(const std::vector<CameraModel>& cams,
                             const std::filesystem::path& path) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& cam : cams) j.push_back(camera_to_json(cam));
    ioutil::write_file(path, j.dump(2) + "\n");
}

inline std::vector<CameraModel> load_calibration(const std::filesystem::path& path) {
    std::vector<uint8_t> data = ioutil::read_file(path);
    nlohmann::json j = nlohmann::json::parse(data.begin(), data.end(), nullptr, false);
    if (j.is_discarded() || !j.is_array())
        throw io_error(io_error::Kind::Malformed, path.string() + ": not a JSON camera array");

    std::vector<CameraModel> cams;
    for (const auto& e : j) {
        try {
            CameraModel cam;
            cam.name = e.at("name").get<std::string>();
            cam.intrinsics.width = e.at("width").get<int>();
            cam.intrinsics.height = e.at("height").get<int>();
            auto K = e.at("K").get<std::vector<double>>();
            auto R = e.at("R").get<std::vector<double>>();
            auto t = e.at("t").get<std::vector<double>>();
            if (K.size() != 9 || R.size() != 9 || t.size() != 3)
                throw io_error(io_error::Kind::Malformed,
                               path.string() + ": K/R/t must be 9/9/3 row-major values");
            cam.intrinsics.fx = K[0];
            cam.intrinsics.fy = K[4];
            cam.intrinsics.cx = K[2];
            cam.intrinsics.cy = K[5];
            if (!cam.intrinsics.valid())
                throw io_error(io_error::Kind::BadValue,
                               path.string() + ": camera " + cam.name + " has invalid intrinsics");
            std::copy(R.begin(), R.end(), cam.pose.rotation.m.begin());
            cam.pose.translation = {t[0], t[1], t[2]};
            if (!cam.pose.valid())
                throw io_error(io_error::Kind::BadValue,
                               path.string() + ": camera " + cam.name +
                                   " rotation is not a proper rotation (orthonormal, det +1)");
            cams.push_back(std::move(cam));
        } catch (const nlohmann::json::exception& ex) {
            throw io_error(io_error::Kind::Malformed,
                           path.string() + ": bad camera entry: " + ex.what());
        }
    }
    return cams;
}

// ---------------------------------------------------------------------------
// Detections CSV: frame,x_m,y_m,score with 6-decimal fixed point

struct DetectionRow {
    int frame = 0;
    double x = 0.0;
    double y = 0.0;
    double score = 1.0;
};

inline void save_detections_csv(const std::vector<DetectionRow>& rows,
                                const std::filesystem::path& path) {
    std::string out = "frame,x_m,y_m,score\n";
    char line[96];
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%d,%.6f,%.6f,%.6f\n", r.frame, r.x, r.y, r.score);
        out += line;
    }
    ioutil::write_file(path, out);
}

inline std::vector<DetectionRow> load_detections_csv(const std::filesystem::path& path) {
    std::vector<uint8_t> data = ioutil::read_file(path);
    std::istringstream in(std::string(data.begin(), data.end()));
    std::vector<DetectionRow> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first && line.rfind("frame", 0) == 0) {
            first = false;
            continue;
        }
        first = false;
        DetectionRow r;
        if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf", &r.frame, &r.x, &r.y, &r.score) != 4)
            throw io_error(io_error::Kind::Malformed,
                           path.string() + ": bad CSV row: " + line);
        rows.push_back(r);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Raw f32 rasters with JSON sidecars (test fixtures and stage hand-off)

inline void save_feature_map(const FeatureMap& map, const std::filesystem::path& raw_path) {
    std::string out;
    out.reserve(map.data.size() * 4);
    for (float v : map.data) ioutil::put_f32le(out, v);
    ioutil::write_file(raw_path, out);

    nlohmann::json j;
    j["kind"] = "feature_map";
    j["channels"] = map.channels;
    j["height"] = map.height;
    j["width"] = map.width;
    ioutil::write_file(raw_path.string() + ".json", j.dump(2) + "\n");
}

inline FeatureMap load_feature_map(const std::filesystem::path& raw_path) {
    std::vector<uint8_t> side = ioutil::read_file(raw_path.string() + ".json");
    nlohmann::json j = nlohmann::json::parse(side.begin(), side.end(), nullptr, false);
    if (j.is_discarded() || j.value("kind", "") != "feature_map")
        throw io_error(io_error::Kind::Malformed,
                       raw_path.string() + ".json: not a feature_map sidecar");
    FeatureMap map(j.at("channels").get<int>(), j.at("height").get<int>(),
                   j.at("width").get<int>());
    std::vector<uint8_t> data = ioutil::read_file(raw_path);
    if (data.size() != map.data.size() * 4)
        throw io_error(io_error::Kind::Truncated, raw_path.string() + ": raster size mismatch");
    for (std::size_t i = 0; i < map.data.size(); ++i)
        map.data[i] = ioutil::get_f32le(data.data() + 4 * i);
    return map;
}

inline void save_bev(const BevMap& map, const std::filesystem::path& raw_path) {
    std::string out;
    out.reserve(map.values.size() * 4);
    for (double v : map.values) ioutil::put_f32le(out, float(v));
    ioutil::write_file(raw_path, out);

    nlohmann::json j;
    j["kind"] = "bev";
    j["dims_x"] = map.spec.dims_x;
    j["dims_y"] = map.spec.dims_y;
    j["cell_size"] = map.spec.cell_size;
    j["origin"] = {map.spec.origin_x, map.spec.origin_y};
    ioutil::write_file(raw_path.string() + ".json", j.dump(2) + "\n");
}

inline BevMap load_bev(const std::filesystem::path& raw_path) {
    std::vector<uint8_t> side = ioutil::read_file(raw_path.string() + ".json");
    nlohmann::json j = nlohmann::json::parse(side.begin(), side.end(), nullptr, false);
    if (j.is_discarded() || j.value("kind", "") != "bev")
        throw io_error(io_error::Kind::Malformed, raw_path.string() + ".json: not a bev sidecar");
    BevSpec spec;
    spec.dims_x = j.at("dims_x").get<int>();
    spec.dims_y = j.at("dims_y").get<int>();
    spec.cell_size = j.at("cell_size").get<double>();
    auto origin = j.at("origin").get<std::vector<double>>();
    if (origin.size() != 2 || spec.dims_x < 1 || spec.dims_y < 1 || !(spec.cell_size > 0))
        throw io_error(io_error::Kind::BadValue, raw_path.string() + ".json: bad bev geometry");
    spec.origin_x = origin[0];
    spec.origin_y = origin[1];

    BevMap map(spec);
    std::vector<uint8_t> data = ioutil::read_file(raw_path);
    if (data.size() != map.values.size() * 4)
        throw io_error(io_error::Kind::Truncated, raw_path.string() + ": raster size mismatch");
    for (std::size_t i = 0; i < map.values.size(); ++i)
        map.values[i] = ioutil::get_f32le(data.data() + 4 * i);
    return map;
}

// Feature volume hand-off: f32 values then u16 valid counts, voxel-major.
inline void save_feature_volume(const FeatureVolume& vol, const std::filesystem::path& raw_path) {
    std::string out;
    out.reserve(vol.values.size() * 4 + vol.valid_count.size() * 2);
    for (double v : vol.values) ioutil::put_f32le(out, float(v));
    for (uint16_t v : vol.valid_count) {
        out.push_back(char(v & 0xFF));
        out.push_back(char(v >> 8));
    }
    ioutil::write_file(raw_path, out);

    nlohmann::json j;
    j["kind"] = "feature_volume";
    j["channels"] = vol.channels;
    j["dims"] = {vol.spec.dims_x, vol.spec.dims_y, vol.spec.dims_z};
    j["voxel_size"] = vol.spec.voxel_size;
    j["origin"] = {vol.spec.origin.x, vol.spec.origin.y, vol.spec.origin.z};
    ioutil::write_file(raw_path.string() + ".json", j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Metric report JSON

inline nlohmann::json detection_scores_to_json(const DetectionScores& s) {
    return {{"moda", s.moda},
            {"modp", s.modp},
            {"precision", s.precision},
            {"recall", s.recall},
            {"f1", s.f1}};
}

inline nlohmann::json semantic_iou_to_json(const SemanticIouReport& r) {
    nlohmann::json iou;
    for (const auto& [c, v] : r.iou) iou[std::string(semantic_class_name(c))] = v;
    if (r.iou_background) iou["Background"] = *r.iou_background;
    return {{"iou", iou}, {"miou", r.miou}};
}

inline nlohmann::json panoptic_to_json(const PanopticResult& r) {
    nlohmann::json per_class;
    for (const auto& [name, s] : r.per_class)
        per_class[name] = {{"pq", s.pq()}, {"sq", s.sq()}, {"rq", s.rq()},
                           {"tp", s.tp},   {"fp", s.fp},   {"fn", s.fn}};
    return {{"pq", r.pq}, {"sq", r.sq}, {"rq", r.rq}, {"per_class", per_class}};
}

inline nlohmann::json view_report_to_json(const ViewLevelReport& r) {
    nlohmann::json j;
    nlohmann::json iou;
    for (const auto& [c, v] : r.iou) iou[std::string(semantic_class_name(c))] = v;
    j["iou"] = iou;
    j["miou"] = r.miou;
    j["ap"] = r.ap;
    j["pq"] = r.pq;
    j["sq"] = r.sq;
    j["rq"] = r.rq;
    j["per_view"] = nlohmann::json::array();
    for (const auto& v : r.per_view) {
        nlohmann::json e = semantic_iou_to_json(v.semantic);
        e["ap"] = v.ap;
        e["pq"] = v.panoptic.pq;
        e["sq"] = v.panoptic.sq;
        e["rq"] = v.panoptic.rq;
        j["per_view"].push_back(e);
    }
    return j;
}

inline void save_json(const nlohmann::json& j, const std::filesystem::path& path) {
    ioutil::write_file(path, j.dump(2) + "\n");
}

inline nlohmann::json load_json(const std::filesystem::path& path) {
    std::vector<uint8_t> data = ioutil::read_file(path);
    nlohmann::json j = nlohmann::json::parse(data.begin(), data.end(), nullptr, false);
    if (j.is_discarded())
        throw io_error(io_error::Kind::Malformed, path.string() + ": invalid JSON");
    return j;
}

// ---------------------------------------------------------------------------
// Dataset layout:
// scene/calibration.json
// scene/frames/NNNN/camNN.{depth.pfm,sem.pgm,inst.pgm}
// scene/gt/NNNN.{sem,inst}.mvpo, scene/gt/NNNN.locations.csv

namespace dataset {

inline std::string frame_id(int frame) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d", frame);
    return buf;
}

inline std::string cam_id(int cam) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "cam%02d", cam);
    return buf;
}

inline std::filesystem::path calibration_path(const std::filesystem::path& root) {
    return root / "calibration.json";
}
inline std::filesystem::path frame_dir(const std::filesystem::path& root, int frame) {
    return root / "frames" / frame_id(frame);
}
inline std::filesystem::path depth_path(const std::filesystem::path& root, int frame, int cam) {
    return frame_dir(root, frame) / (cam_id(cam) + ".depth.pfm");
}
inline std::filesystem::path semantic_path(const std::filesystem::path& root, int frame,
                                           int cam) {
    return frame_dir(root, frame) / (cam_id(cam) + ".sem.pgm");
}
inline std::filesystem::path instance_path(const std::filesystem::path& root, int frame,
                                           int cam) {
    return frame_dir(root, frame) / (cam_id(cam) + ".inst.pgm");
}
inline std::filesystem::path gt_semantic_path(const std::filesystem::path& root, int frame) {
    return root / "gt" / (frame_id(frame) + ".sem.mvpo");
}
inline std::filesystem::path gt_instance_path(const std::filesystem::path& root, int frame) {
    return root / "gt" / (frame_id(frame) + ".inst.mvpo");
}
inline std::filesystem::path gt_locations_path(const std::filesystem::path& root, int frame) {
    return root / "gt" / (frame_id(frame) + ".locations.csv");
}

}  // namespace dataset

}  // namespace occukit
