#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "occukit/io.hpp"
#include "occukit/scenegen.hpp"
#include "support.hpp"

using namespace occukit;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("occukit_io_" + std::to_string(::getpid()) + "_" +
                std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

std::vector<uint8_t> slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::vector<uint8_t>& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

}  // namespace

TEST_CASE("semantic, instance and panoptic grids round-trip bit-exactly", "[io]") {
    TempDir tmp;
    VoxelGridSpec spec = occukit::test::small_grid(7, 5, 9, 0.1, {1.5, -2.25, 0.5});
    LabelVolume sem = occukit::test::random_volume(spec, 200, 0.4);

    fs::path sem_path = tmp.path / "a.sem.mvpo";
    save_grid(sem, sem_path);
    LabelVolume sem2 = load_semantic_grid(sem_path);
    CHECK(sem2.spec == occukit::test::f32_quantized(spec));
    CHECK(sem2.labels == sem.labels);

    // Bit-exactness at the file level: re-saving the loaded grid reproduces
    // the original bytes.
    fs::path resaved = tmp.path / "a2.sem.mvpo";
    save_grid(sem2, resaved);
    CHECK(slurp(sem_path) == slurp(resaved));

    InstanceVolume inst(spec);
    inst.ids = sem.instances;
    fs::path inst_path = tmp.path / "a.inst.mvpo";
    save_grid(inst, inst_path);
    CHECK(load_instance_grid(inst_path).ids == inst.ids);

    PanopticVolume pan(spec);
    for (std::size_t i = 0; i < sem.labels.size(); ++i)
        pan.labels[i] = sem.labels[i] == uint8_t(SemanticLabel::Pedestrian)
                            ? panoptic_instance_value(sem.instances[i] + 1)
                            : sem.labels[i];
    fs::path pan_path = tmp.path / "a.pan.mvpo";
    save_grid(pan, pan_path);
    CHECK(load_panoptic_grid(pan_path).labels == pan.labels);

    // Saving the same volume twice produces identical bytes.
    fs::path again = tmp.path / "b.sem.mvpo";
    save_grid(sem, again);
    CHECK(slurp(sem_path) == slurp(again));
}

TEST_CASE("grid file size is the 44-byte header plus the payload", "[io]") {
    TempDir tmp;
    VoxelGridSpec spec = occukit::test::small_grid(360, 120, 30, 0.1);
    LabelVolume vol(spec);
    fs::path p = tmp.path / "big.sem.mvpo";
    save_grid(vol, p);
    CHECK(fs::file_size(p) == 44 + 1296000);
}

TEST_CASE("grid loader raises typed diagnostics", "[io]") {
    TempDir tmp;
    VoxelGridSpec spec = occukit::test::small_grid(4, 4, 4);
    LabelVolume vol = occukit::test::random_volume(spec, 201, 0.5);
    fs::path p = tmp.path / "x.mvpo";
    save_grid(vol, p);
    std::vector<uint8_t> good = slurp(p);

    auto expect_kind = [&](std::vector<uint8_t> bytes, io_error::Kind kind) {
        fs::path q = tmp.path / "bad.mvpo";
        spit(q, bytes);
        try {
            load_grid(q);
            FAIL("expected io_error");
        } catch (const io_error& e) {
            CHECK(e.kind() == kind);
        }
    };

    SECTION("bad magic") {
        auto bytes = good;
        bytes[0] = 'X';
        expect_kind(bytes, io_error::Kind::BadMagic);
    }
    SECTION("unsupported version") {
        auto bytes = good;
        bytes[4] = 9;
        expect_kind(bytes, io_error::Kind::BadVersion);
    }
    SECTION("unknown payload kind") {
        auto bytes = good;
        bytes[8] = 7;
        expect_kind(bytes, io_error::Kind::BadKind);
    }
    SECTION("dimension overflow") {
        auto bytes = good;
        bytes[12] = bytes[13] = bytes[14] = bytes[15] = 0xFF;
        bytes[16] = 0xFF;
        expect_kind(bytes, io_error::Kind::DimOverflow);
    }
    SECTION("truncated payload") {
        auto bytes = good;
        bytes.resize(bytes.size() - 5);
        expect_kind(bytes, io_error::Kind::Truncated);
    }
    SECTION("trailing garbage") {
        auto bytes = good;
        bytes.push_back(0);
        expect_kind(bytes, io_error::Kind::Truncated);
    }
    SECTION("wrong kind for the typed loader") {
        CHECK_THROWS_AS(load_instance_grid(p), io_error);
    }
    SECTION("missing file") {
        CHECK_THROWS_AS(load_grid(tmp.path / "absent.mvpo"), io_error);
    }
}

TEST_CASE("fuzzed headers always fail with a typed error, never crash", "[io]") {
    TempDir tmp;
    VoxelGridSpec spec = occukit::test::small_grid(6, 5, 4);
    LabelVolume vol = occukit::test::random_volume(spec, 202, 0.5);
    fs::path p = tmp.path / "fuzz.mvpo";
    save_grid(vol, p);
    std::vector<uint8_t> good = slurp(p);

    auto g = occukit::test::rng(203);
    int loaded = 0, rejected = 0;
    for (int i = 0; i < 1000; ++i) {
        auto bytes = good;
        int flips = occukit::test::uniform_int(g, 1, 4);
        for (int f = 0; f < flips; ++f) {
            std::size_t pos = g() % kGridHeaderSize;
            bytes[pos] = uint8_t(g());
        }
        fs::path q = tmp.path / "fuzzed.mvpo";
        spit(q, bytes);
        try {
            load_grid(q);
            ++loaded;  // mutation happened to stay valid
        } catch (const io_error&) {
            ++rejected;
        }
    }
    CHECK(loaded + rejected == 1000);
    // Reserved bytes and float fields absorb some flips; most still corrupt.
    CHECK(rejected > 500);
}

TEST_CASE("calibration JSON validates and round-trips", "[io]") {
    TempDir tmp;

    SECTION("identity camera parses") {
        fs::path p = tmp.path / "calib.json";
        ioutil::write_file(p, R"([{"name":"cam0","width":640,"height":360,
            "K":[100,0,320,0,100,180,0,0,1],
            "R":[1,0,0,0,1,0,0,0,1],"t":[0,0,0]}])");
        auto cams = load_calibration(p);
        REQUIRE(cams.size() == 1);
        CHECK(cams[0].intrinsics.fx == 100);
        CHECK(cams[0].intrinsics.cy == 180);
    }

    SECTION("reflections are rejected") {
        fs::path p = tmp.path / "bad.json";
        ioutil::write_file(p, R"([{"name":"cam0","width":640,"height":360,
            "K":[100,0,320,0,100,180,0,0,1],
            "R":[-1,0,0,0,1,0,0,0,1],"t":[0,0,0]}])");
        CHECK_THROWS_AS(load_calibration(p), io_error);
    }

    SECTION("malformed JSON is a typed error") {
        fs::path p = tmp.path / "junk.json";
        ioutil::write_file(p, "not json at all");
        CHECK_THROWS_AS(load_calibration(p), io_error);
    }

    SECTION("a generated rig reloads within 1e-12") {
        auto cams = make_scene_cameras(18, 12, 6);
        fs::path p = tmp.path / "rig.json";
        save_calibration(cams, p);
        auto loaded = load_calibration(p);
        REQUIRE(loaded.size() == cams.size());
        for (std::size_t i = 0; i < cams.size(); ++i) {
            CHECK(loaded[i].name == cams[i].name);
            CHECK(std::abs(loaded[i].intrinsics.fx - cams[i].intrinsics.fx) <= 1e-12);
            for (int k = 0; k < 9; ++k)
                CHECK(std::abs(loaded[i].pose.rotation.m[k] - cams[i].pose.rotation.m[k]) <=
                      1e-12);
            CHECK(std::abs(loaded[i].pose.translation.x - cams[i].pose.translation.x) <= 1e-12);
        }
    }
}

TEST_CASE("PFM and PGM rasters round-trip", "[io]") {
    TempDir tmp;
    auto g = occukit::test::rng(204);

    ImageF32 depth(13, 7);
    for (auto& v : depth.pixels) v = float(occukit::test::uniform(g, 0.1, 50.0));
    depth.at(3, 2) = std::numeric_limits<float>::infinity();
    fs::path pfm = tmp.path / "d.pfm";
    save_pfm(depth, pfm);
    ImageF32 depth2 = load_pfm(pfm);
    REQUIRE(depth2.width == 13);
    REQUIRE(depth2.height == 7);
    for (std::size_t i = 0; i < depth.pixels.size(); ++i) {
        if (std::isinf(depth.pixels[i])) CHECK(std::isinf(depth2.pixels[i]));
        else CHECK(depth.pixels[i] == depth2.pixels[i]);
    }

    ImageU16 mask(9, 4);
    for (auto& v : mask.pixels) v = uint16_t(g());
    fs::path pgm = tmp.path / "m.pgm";
    save_pgm16(mask, pgm);
    ImageU16 mask2 = load_pgm16(pgm);
    CHECK(mask2.pixels == mask.pixels);

    SECTION("wrong magic and truncation are typed") {
        ioutil::write_file(tmp.path / "bad.pfm", "PF\n2 2\n-1.0\n");
        CHECK_THROWS_AS(load_pfm(tmp.path / "bad.pfm"), io_error);
        ioutil::write_file(tmp.path / "short.pgm", "P5\n4 4\n65535\n\0\0");
        CHECK_THROWS_AS(load_pgm16(tmp.path / "short.pgm"), io_error);
    }
}

TEST_CASE("detections CSV uses the pinned schema and round-trips", "[io]") {
    TempDir tmp;
    std::vector<DetectionRow> rows{{0, 1.234567, -2.0, 0.875}, {3, 0.0, 10.5, 1.0}};
    fs::path p = tmp.path / "det.csv";
    save_detections_csv(rows, p);

    std::vector<uint8_t> raw = slurp(p);
    std::string text(raw.begin(), raw.end());
    CHECK(text.rfind("frame,x_m,y_m,score\n", 0) == 0);
    CHECK(text.find("0,1.234567,-2.000000,0.875000\n") != std::string::npos);

    auto loaded = load_detections_csv(p);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].frame == 0);
    CHECK(loaded[0].x == Catch::Approx(1.234567));
    CHECK(loaded[1].frame == 3);
    CHECK(loaded[1].score == Catch::Approx(1.0));

    ioutil::write_file(tmp.path / "bad.csv", "frame,x_m,y_m,score\nnot,a,row\n");
    CHECK_THROWS_AS(load_detections_csv(tmp.path / "bad.csv"), io_error);
}

TEST_CASE("feature map and BEV rasters round-trip through their sidecars", "[io]") {
    TempDir tmp;
    auto g = occukit::test::rng(205);

    FeatureMap map(3, 5, 4);
    for (auto& v : map.data) v = float(occukit::test::uniform(g, -2, 2));
    save_feature_map(map, tmp.path / "f.f32");
    FeatureMap map2 = load_feature_map(tmp.path / "f.f32");
    CHECK(map2.channels == 3);
    CHECK(map2.data == map.data);

    BevMap bev({0.5, -1.0, 0.1, 6, 7});
    for (auto& v : bev.values) v = float(occukit::test::uniform(g, 0, 1));
    save_bev(bev, tmp.path / "b.f32");
    BevMap bev2 = load_bev(tmp.path / "b.f32");
    CHECK(bev2.spec.dims_x == 6);
    CHECK(bev2.spec.origin_y == -1.0);
    for (std::size_t i = 0; i < bev.values.size(); ++i)
        CHECK(bev2.values[i] == Catch::Approx(bev.values[i]).margin(1e-7));
}

TEST_CASE("export_ply writes one vertex per occupied voxel", "[io]") {
    TempDir tmp;
    VoxelGridSpec spec = occukit::test::small_grid(5, 5, 5);
    Palette palette = default_semantic_palette();

    SECTION("all-free volume has a zero-vertex header") {
        LabelVolume vol(spec);
        export_ply(vol, palette, tmp.path / "empty.ply");
        auto bytes = slurp(tmp.path / "empty.ply");
        std::string text(bytes.begin(), bytes.end());
        CHECK(text.find("element vertex 0\n") != std::string::npos);
    }

    SECTION("single voxel emits one vertex at its center") {
        LabelVolume vol(spec);
        vol.set(1, 2, 3, SemanticLabel::Wall);
        export_ply(vol, palette, tmp.path / "one.ply");
        auto bytes = slurp(tmp.path / "one.ply");
        std::string text(bytes.begin(), bytes.end());
        CHECK(text.find("element vertex 1\n") != std::string::npos);
        CHECK(text.find("0.150000 0.250000 0.350000") != std::string::npos);
    }

    SECTION("vertex count equals the occupied count on random volumes") {
        LabelVolume vol = occukit::test::random_volume(spec, 206, 0.3);
        std::size_t occupied = 0;
        for (uint8_t l : vol.labels)
            if (l) ++occupied;
        export_ply(vol, palette, tmp.path / "rand.ply");
        auto bytes = slurp(tmp.path / "rand.ply");
        std::string text(bytes.begin(), bytes.end());
        CHECK(text.find("element vertex " + std::to_string(occupied) + "\n") !=
              std::string::npos);
    }

    SECTION("a missing palette entry is a typed error") {
        LabelVolume vol(spec);
        vol.set(0, 0, 0, SemanticLabel::Others);
        Palette incomplete{{uint32_t(SemanticLabel::Wall), Rgb{1, 2, 3}}};
        CHECK_THROWS_AS(export_ply(vol, incomplete, tmp.path / "bad.ply"), io_error);
    }
}
