#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "occukit/fusion.hpp"
#include "occukit/scenegen.hpp"
#include "support.hpp"

using namespace occukit;
using occukit::test::scene_views;
using occukit::test::small_grid;

TEST_CASE("depth_to_points backprojects a single labeled pixel", "[fusion]") {
    CameraModel cam = occukit::test::identity_camera(1, 1, 0, 0, 1, 1);
    ImageF32 depth(1, 1, 4.0f);
    ImageU16 sem(1, 1, uint16_t(SemanticLabel::Ground));
    ImageU16 inst(1, 1, 0);

    SECTION("zero bias gives the exact surface point") {
        auto points = depth_to_points(cam, depth, sem, inst, 0.0);
        REQUIRE(points.size() == 1);
        CHECK(points[0].position.x == Catch::Approx(0.0).margin(1e-12));
        CHECK(points[0].position.y == Catch::Approx(0.0).margin(1e-12));
        CHECK(points[0].position.z == Catch::Approx(4.0));
        CHECK(points[0].semantic_label == SemanticLabel::Ground);
        CHECK(points[0].instance_id == 0);
    }
    SECTION("default bias nudges the sample along the viewing ray") {
        auto points = depth_to_points(cam, depth, sem, inst);
        REQUIRE(points.size() == 1);
        CHECK(points[0].position.z ==
              Catch::Approx(4.0 + defaults::surface_bias).margin(1e-12));
    }
}

TEST_CASE("depth_to_points skips free and non-finite pixels", "[fusion]") {
    CameraModel cam = occukit::test::identity_camera(1, 1, 0, 0, 2, 2);
    ImageF32 depth(2, 2, 1.0f);
    depth.at(1, 0) = std::numeric_limits<float>::infinity();
    depth.at(0, 1) = -2.0f;
    ImageU16 sem(2, 2, uint16_t(SemanticLabel::Wall));
    sem.at(1, 1) = uint16_t(SemanticLabel::Free);
    ImageU16 inst(2, 2, 0);

    auto points = depth_to_points(cam, depth, sem, inst);
    CHECK(points.size() == 1);  // only (0,0) survives

    ImageU16 all_free(2, 2, uint16_t(SemanticLabel::Free));
    CHECK(depth_to_points(cam, depth, all_free, inst).empty());
}

TEST_CASE("depth_to_points rejects mismatched map dimensions", "[fusion]") {
    CameraModel cam = occukit::test::identity_camera(1, 1, 0, 0, 2, 2);
    ImageF32 depth(3, 2, 1.0f);
    ImageU16 sem(2, 2, 0), inst(2, 2, 0);
    CHECK_THROWS_AS(depth_to_points(cam, depth, sem, inst), std::invalid_argument);
}

TEST_CASE("emitted points stay within half a voxel of a primitive surface", "[fusion]") {
    SceneConfig cfg = make_scene_config(10, 10, 4, 4, 51);
    auto prims = sample_scene(cfg);
    auto views = scene_views(cfg, prims, 160, 90);
    double worst = 0.0;
    std::size_t total = 0;
    for (const auto& view : views) {
        total += view.size();
        for (const auto& pt : view) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& prim : prims)
                best = std::min(best, primitive_surface_distance(prim, pt.position));
            worst = std::max(worst, best);
        }
    }
    REQUIRE(total > 10000);
    CHECK(worst <= defaults::voxel_size / 2.0 + 1e-9);
}

TEST_CASE("fuse_and_voxelize of nothing is all free", "[fusion]") {
    VoxelGridSpec spec = small_grid(4, 4, 4);
    Aabb aoi{spec.min_corner(), spec.max_corner()};
    LabelVolume vol = fuse_and_voxelize({}, spec, aoi);
    for (uint8_t l : vol.labels) CHECK(l == 0);

    LabelVolume vol2 = fuse_and_voxelize({{}, {}}, spec, aoi);
    for (uint8_t l : vol2.labels) CHECK(l == 0);
}

TEST_CASE("one ground point per bottom voxel labels exactly the bottom layer", "[fusion]") {
    VoxelGridSpec spec = small_grid(4, 4, 4);
    Aabb aoi{spec.min_corner(), spec.max_corner()};
    std::vector<LabeledPoint> view;
    for (int ix = 0; ix < 4; ++ix)
        for (int iy = 0; iy < 4; ++iy)
            view.push_back({voxel_center(spec, ix, iy, 0), SemanticLabel::Ground, 0});

    LabelVolume vol = fuse_and_voxelize({view}, spec, aoi);
    for (int ix = 0; ix < 4; ++ix)
        for (int iy = 0; iy < 4; ++iy)
            for (int iz = 0; iz < 4; ++iz) {
                auto expected = iz == 0 ? SemanticLabel::Ground : SemanticLabel::Free;
                CHECK(vol.label_at(ix, iy, iz) == expected);
            }
}

TEST_CASE("majority vote with priority tie-break is view-order independent", "[fusion]") {
    VoxelGridSpec spec = small_grid(2, 2, 2);
    Aabb aoi{spec.min_corner(), spec.max_corner()};
    Vec3 c = voxel_center(spec, 0, 0, 0);

    // Equal Ground/Pedestrian counts: priority keeps the pedestrian.
    std::vector<LabeledPoint> a{{c, SemanticLabel::Ground, 0}, {c, SemanticLabel::Ground, 0}};
    std::vector<LabeledPoint> b{{c, SemanticLabel::Pedestrian, 3},
                                {c, SemanticLabel::Pedestrian, 3}};
    LabelVolume ab = fuse_and_voxelize({a, b}, spec, aoi);
    LabelVolume ba = fuse_and_voxelize({b, a}, spec, aoi);
    CHECK(ab.labels == ba.labels);
    CHECK(ab.instances == ba.instances);
    CHECK(ab.label_at(0, 0, 0) == SemanticLabel::Pedestrian);
    CHECK(ab.instances[0] == 3);

    // Majority beats priority when counts differ.
    std::vector<LabeledPoint> c3{{c, SemanticLabel::Ground, 0},
                                 {c, SemanticLabel::Ground, 0},
                                 {c, SemanticLabel::Ground, 0}};
    CHECK(fuse_and_voxelize({c3, b}, spec, aoi).label_at(0, 0, 0) == SemanticLabel::Ground);

    // Instance ties break to the smaller id.
    std::vector<LabeledPoint> i1{{c, SemanticLabel::Pedestrian, 7}};
    std::vector<LabeledPoint> i2{{c, SemanticLabel::Pedestrian, 2}};
    CHECK(fuse_and_voxelize({i1, i2}, spec, aoi).instances[0] == 2);
    CHECK(fuse_and_voxelize({i2, i1}, spec, aoi).instances[0] == 2);
}

TEST_CASE("fused scene agrees with the analytic voxelization where cameras see", "[fusion]") {
    SceneConfig cfg = make_scene_config(10, 10, 5, 5, 99);  // 4 perimeter + overhead
    auto prims = sample_scene(cfg);
    VoxelGridSpec spec = scene_grid_spec(cfg);
    Aabb aoi{spec.min_corner(), spec.max_corner()};

    auto views = scene_views(cfg, prims, 480, 270);
    LabelVolume fused = fuse_and_voxelize(views, spec, aoi);
    LabelVolume analytic = voxelize_analytic(prims, spec);
    auto visible =
        occukit::test::visible_occupied_mask(prims, cfg.cameras, analytic, 480, 270);

    std::size_t seen = 0, agree = 0;
    for (std::size_t i = 0; i < visible.size(); ++i) {
        if (!visible[i]) continue;
        ++seen;
        if (fused.labels[i] == analytic.labels[i]) ++agree;
    }
    REQUIRE(seen > 5000);
    double agreement = double(agree) / double(seen);
    INFO("visible voxels " << seen << ", agreement " << agreement);
    CHECK(agreement >= 0.98);
}

TEST_CASE("permuting the view list does not change the fused volume", "[fusion]") {
    SceneConfig cfg = make_scene_config(8, 8, 3, 4, 13);
    auto prims = sample_scene(cfg);
    VoxelGridSpec spec = scene_grid_spec(cfg);
    Aabb aoi{spec.min_corner(), spec.max_corner()};
    auto views = scene_views(cfg, prims, 160, 90);

    LabelVolume base = fuse_and_voxelize(views, spec, aoi);
    std::vector<std::vector<LabeledPoint>> shuffled{views[2], views[0], views[3], views[1]};
    LabelVolume perm = fuse_and_voxelize(shuffled, spec, aoi);
    CHECK(base.labels == perm.labels);
    CHECK(base.instances == perm.instances);
}

TEST_CASE("adding a view never relabels a voxel to free", "[fusion]") {
    SceneConfig cfg = make_scene_config(8, 8, 3, 4, 14);
    auto prims = sample_scene(cfg);
    VoxelGridSpec spec = scene_grid_spec(cfg);
    Aabb aoi{spec.min_corner(), spec.max_corner()};
    auto views = scene_views(cfg, prims, 160, 90);

    std::vector<std::vector<LabeledPoint>> subset(views.begin(), views.begin() + 2);
    LabelVolume before = fuse_and_voxelize(subset, spec, aoi);
    LabelVolume after = fuse_and_voxelize(views, spec, aoi);
    for (std::size_t i = 0; i < before.labels.size(); ++i) {
        if (before.labels[i] != 0) CHECK(after.labels[i] != 0);
    }
}

TEST_CASE("no labeled voxel center falls outside the area of interest", "[fusion]") {
    SceneConfig cfg = make_scene_config(8, 8, 3, 4, 15);
    auto prims = sample_scene(cfg);
    VoxelGridSpec spec = scene_grid_spec(cfg);
    Aabb aoi{{1.05, 0.95, 0.0}, {6.55, 7.05, 2.0}};  // strictly inside the grid
    auto views = scene_views(cfg, prims, 160, 90);

    LabelVolume vol = fuse_and_voxelize(views, spec, aoi);
    for (int ix = 0; ix < spec.dims_x; ++ix)
        for (int iy = 0; iy < spec.dims_y; ++iy)
            for (int iz = 0; iz < spec.dims_z; ++iz) {
                if (vol.label_at(ix, iy, iz) == SemanticLabel::Free) continue;
                CHECK(aoi.contains(voxel_center(spec, ix, iy, iz)));
            }
}
