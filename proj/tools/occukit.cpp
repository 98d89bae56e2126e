// occukit command-line front-end: wires the pipeline stages (scene
// generation, fusion, lifting, detection, grouping, rendering, evaluation)
// around the file formats in occukit/io.hpp, so any stage can be replaced by
// an external model's outputs.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "occukit/bev.hpp"
#include "occukit/constants.hpp"
#include "occukit/fusion.hpp"
#include "occukit/geometry.hpp"
#include "occukit/grouping.hpp"
#include "occukit/io.hpp"
#include "occukit/labels.hpp"
#include "occukit/metrics.hpp"
#include "occukit/raymarch.hpp"
#include "occukit/scenegen.hpp"
#include "occukit/view_transform.hpp"

namespace fs = std::filesystem;
using namespace occukit;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitPrecondition = 4;

uint64_t resolve_seed(uint64_t cli_seed, bool seed_given) {
    if (seed_given) return cli_seed;
    if (const char* env = std::getenv("OCCUKIT_SEED")) return std::strtoull(env, nullptr, 10);
    return 0;
}

std::vector<Vec2> rows_for_frame(const std::vector<DetectionRow>& rows, int frame) {
    std::vector<Vec2> out;
    for (const auto& r : rows)
        if (r.frame == frame) out.push_back({r.x, r.y});
    return out;
}

std::set<int> frames_in(const std::vector<DetectionRow>& rows) {
    std::set<int> frames;
    for (const auto& r : rows) frames.insert(r.frame);
    return frames;
}

int run_gen(const fs::path& out_dir, uint64_t seed, int peds, int cams, double ex, double ey,
            double height, int img_w, int img_h, int frames, int clutter, double min_sep,
            unsigned threads) {
    SceneConfig cfg = make_scene_config(ex, ey, peds, cams, seed, img_w, img_h);
    cfg.height = height;
    cfg.clutter_count = clutter;
    cfg.min_separation = min_sep;
    VoxelGridSpec spec = scene_grid_spec(cfg);

    save_calibration(cfg.cameras, dataset::calibration_path(out_dir));
    nlohmann::json scene_json = {{"seed", seed},
                                 {"extent_x", ex},
                                 {"extent_y", ey},
                                 {"height", height},
                                 {"pedestrians", peds},
                                 {"clutter", clutter},
                                 {"min_separation", min_sep},
                                 {"frames", frames},
                                 {"voxel_size", spec.voxel_size}};
    save_json(scene_json, out_dir / "scene.json");

    for (int f = 0; f < frames; ++f) {
        SceneConfig frame_cfg = cfg;
        frame_cfg.seed = seed + uint64_t(f);
        auto prims = sample_scene(frame_cfg);

        for (std::size_t c = 0; c < cfg.cameras.size(); ++c) {
            SensorRender render = render_sensors(cfg.cameras[c], prims, img_w, img_h, threads);
            save_pfm(render.depth, dataset::depth_path(out_dir, f, int(c)));
            save_pgm16(render.semantic, dataset::semantic_path(out_dir, f, int(c)));
            save_pgm16(render.instance, dataset::instance_path(out_dir, f, int(c)));
        }

        LabelVolume gt = voxelize_analytic(prims, spec, threads);
        save_grid(gt, dataset::gt_semantic_path(out_dir, f));
        InstanceVolume inst(spec);
        inst.ids = gt.instances;
        save_grid(inst, dataset::gt_instance_path(out_dir, f));

        std::vector<DetectionRow> rows;
        for (const auto& loc : gt_locations(prims)) rows.push_back({f, loc.x, loc.y, 1.0});
        save_detections_csv(rows, dataset::gt_locations_path(out_dir, f));
    }
    std::cout << "wrote dataset to " << out_dir.string() << " (" << frames << " frame(s), "
              << cams << " cameras, grid " << spec.dims_x << "x" << spec.dims_y << "x"
              << spec.dims_z << ")\n";
    return 0;
}

int run_fuse(const fs::path& dataset_dir, int frame, const std::string& like,
             const fs::path& out_sem, const fs::path& out_inst, double bias, unsigned threads) {
    auto cams = load_calibration(dataset::calibration_path(dataset_dir));

    fs::path spec_source = like.empty() ? dataset::gt_semantic_path(dataset_dir, frame)
                                        : fs::path(like);
    VoxelGridSpec spec = load_grid(spec_source).spec;

    std::vector<std::vector<LabeledPoint>> views(cams.size());
    parallel_for(cams.size(), threads, [&](std::size_t a, std::size_t b) {
        for (std::size_t c = a; c < b; ++c) {
            ImageF32 depth = load_pfm(dataset::depth_path(dataset_dir, frame, int(c)));
            ImageU16 sem = load_pgm16(dataset::semantic_path(dataset_dir, frame, int(c)));
            ImageU16 inst = load_pgm16(dataset::instance_path(dataset_dir, frame, int(c)));
            views[c] = depth_to_points(cams[c], depth, sem, inst, bias);
        }
    });

    Aabb aoi{spec.min_corner(), spec.max_corner()};
    LabelVolume fused = fuse_and_voxelize(views, spec, aoi);
    save_grid(fused, out_sem);
    if (!out_inst.empty()) {
        InstanceVolume inst(spec);
        inst.ids = fused.instances;
        save_grid(inst, out_inst);
    }
    std::cout << "fused " << cams.size() << " views into " << out_sem.string() << "\n";
    return 0;
}

int run_lift(const fs::path& calib, const std::vector<std::string>& feature_files,
             const std::string& like, const fs::path& out, bool strict_eq1, unsigned threads) {
    auto cams = load_calibration(calib);
    if (feature_files.size() != cams.size())
        throw std::invalid_argument("lift: need one feature map per calibrated camera");
    VoxelGridSpec spec = load_grid(like).spec;

    std::vector<FeatureMap> maps;
    for (const auto& f : feature_files) maps.push_back(load_feature_map(f));

    LiftOptions opts;
    opts.strict_eq1 = strict_eq1;
    opts.threads = threads;
    FeatureVolume vol = lift_features(cams, maps, spec, opts);
    save_feature_volume(vol, out);
    std::cout << "lifted " << maps.size() << " views -> " << out.string() << "\n";
    return 0;
}

int run_detect(const std::string& heatmap, const std::string& locations, const std::string& like,
               double sigma, double tau, double nms_radius, int frame, const fs::path& out) {
    std::vector<DetectionRow> result;
    if (!heatmap.empty()) {
        BevMap map = load_bev(heatmap);
        for (const auto& d : extract_locations(map, tau, nms_radius))
            result.push_back({frame < 0 ? 0 : frame, d.x, d.y, d.score});
    } else {
        if (like.empty())
            throw std::invalid_argument("detect: --locations needs --like for the BEV geometry");
        BevSpec spec = BevSpec::from_grid(load_grid(like).spec);
        auto rows = load_detections_csv(locations);
        std::set<int> frames = frame < 0 ? frames_in(rows) : std::set<int>{frame};
        for (int f : frames) {
            std::vector<Vec2> locs = rows_for_frame(rows, f);
            BevMap target = splat_gaussian(locs, spec, sigma);
            for (const auto& d : extract_locations(target, tau, nms_radius))
                result.push_back({f, d.x, d.y, d.score});
        }
    }
    save_detections_csv(result, out);
    std::cout << "wrote " << result.size() << " detections to " << out.string() << "\n";
    return 0;
}

int run_group(const fs::path& sem_path, const fs::path& det_path, int frame, double r,
              const fs::path& out_inst, const fs::path& out_pan, unsigned threads) {
    LabelVolume sem = load_semantic_grid(sem_path);
    auto rows = load_detections_csv(det_path);
    std::vector<Detection> detections;
    for (const auto& row : rows)
        if (row.frame == frame) detections.push_back({row.x, row.y, row.score});

    InstanceVolume inst = group_instances(sem, detections, r, threads);
    if (!out_inst.empty()) save_grid(inst, out_inst);
    if (!out_pan.empty()) save_grid(merge_panoptic(sem, inst), out_pan);
    std::cout << "grouped " << detections.size() << " detections\n";
    return 0;
}

int run_render(const std::string& sem, const std::string& inst, const std::string& pan,
               const fs::path& calib, const fs::path& out_dir, int width, int height,
               const RayMarchParams& params, bool ppm, unsigned threads) {
    if (pan.empty() && sem.empty())
        throw std::invalid_argument("render: need --pan or --sem [--inst]");
    auto cams = load_calibration(calib);

    PanopticVolume pan_vol;
    LabelVolume sem_vol;
    bool use_pan = !pan.empty();
    if (use_pan) {
        pan_vol = load_panoptic_grid(pan);
    } else if (!sem.empty()) {
        sem_vol = load_semantic_grid(sem);
        if (!inst.empty()) {
            InstanceVolume iv = load_instance_grid(inst);
            pan_vol = merge_panoptic(sem_vol, iv);
            use_pan = true;
        }
    }

    fs::create_directories(out_dir);
    Palette palette = default_semantic_palette();
    for (std::size_t c = 0; c < cams.size(); ++c) {
        ImageU16 img = use_pan ? render_view(cams[c], pan_vol, params, width, height, threads)
                               : render_view(cams[c], sem_vol, params, width, height, threads);
        save_pgm16(img, out_dir / (dataset::cam_id(int(c)) + ".pgm"));
        if (ppm) save_ppm(img, palette, out_dir / (dataset::cam_id(int(c)) + ".ppm"));
    }
    std::cout << "rendered " << cams.size() << " views to " << out_dir.string() << "\n";
    return 0;
}

int run_eval2d(const fs::path& preds_path, const fs::path& gts_path, double t,
               const std::string& out) {
    auto preds = load_detections_csv(preds_path);
    auto gts = load_detections_csv(gts_path);

    std::set<int> frames = frames_in(preds);
    frames.merge(frames_in(gts));

    MatchReport total;
    total.threshold = t;
    for (int f : frames) {
        MatchReport r = match_detections(rows_for_frame(preds, f), rows_for_frame(gts, f), t);
        total.fp_count += r.fp_count;
        total.fn_count += r.fn_count;
        for (const auto& p : r.pairs) total.pairs.push_back(p);
    }
    DetectionScores scores = detection_scores(total);

    nlohmann::json j = detection_scores_to_json(scores);
    j["tp"] = total.tp_count();
    j["fp"] = total.fp_count;
    j["fn"] = total.fn_count;
    j["t"] = t;
    std::cout << j.dump(2) << "\n";
    if (!out.empty()) save_json(j, out);
    return 0;
}

int run_eval3d(const fs::path& pred_sem, const fs::path& gt_sem, const std::string& pred_inst,
               const std::string& gt_inst, const std::string& pred_pan,
               const std::string& gt_pan, const std::string& out) {
    nlohmann::json j;
    {
        LabelVolume p = load_semantic_grid(pred_sem);
        LabelVolume g = load_semantic_grid(gt_sem);
        j = semantic_iou_to_json(semantic_iou(p, g));
    }
    if (!pred_inst.empty() && !gt_inst.empty()) {
        InstanceVolume p = load_instance_grid(pred_inst);
        InstanceVolume g = load_instance_grid(gt_inst);
        j["ap"] = instance_ap(p, g, defaults::ap_thresholds());
    }
    if (!pred_pan.empty() && !gt_pan.empty()) {
        PanopticVolume p = load_panoptic_grid(pred_pan);
        PanopticVolume g = load_panoptic_grid(gt_pan);
        nlohmann::json pq = panoptic_to_json(panoptic_quality(p, g));
        j.update(pq);
    }
    std::cout << j.dump(2) << "\n";
    if (!out.empty()) save_json(j, out);
    return 0;
}

int run_evalview(const fs::path& pred_dir, const fs::path& gt_dir, double t_start, double t_end,
                 const std::string& out) {
    std::vector<ImageU16> pred_masks, gt_masks;
    for (int c = 0;; ++c) {
        fs::path p = pred_dir / (dataset::cam_id(c) + ".pgm");
        fs::path g = gt_dir / (dataset::cam_id(c) + ".pgm");
        if (!fs::exists(p) || !fs::exists(g)) break;
        pred_masks.push_back(load_pgm16(p));
        gt_masks.push_back(load_pgm16(g));
    }
    if (pred_masks.empty())
        throw std::invalid_argument("evalview: no camNN.pgm pairs found in the given dirs");

    std::vector<double> thresholds;
    for (double t = t_start; t <= t_end + 1e-9; t += 0.05) thresholds.push_back(t);

    ViewLevelReport report = view_level_report(pred_masks, gt_masks,
                                               {SemanticLabel::Free, SemanticLabel::Pedestrian,
                                                SemanticLabel::Ground},
                                               thresholds);
    nlohmann::json j = view_report_to_json(report);
    j["views"] = pred_masks.size();
    std::cout << j.dump(2) << "\n";
    if (!out.empty()) save_json(j, out);
    return 0;
}

int run_report(const std::vector<std::string>& inputs, const std::string& out) {
    nlohmann::json merged;
    merged["reports"] = nlohmann::json::array();
    std::map<std::string, std::pair<double, int>> sums;
    for (const auto& path : inputs) {
        nlohmann::json j = load_json(path);
        merged["reports"].push_back({{"file", path}, {"metrics", j}});
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!it.value().is_number()) continue;
            sums[it.key()].first += it.value().get<double>();
            sums[it.key()].second++;
        }
    }
    nlohmann::json summary;
    for (const auto& [key, acc] : sums) summary[key] = acc.first / acc.second;
    merged["summary"] = summary;
    std::cout << merged["summary"].dump(2) << "\n";
    if (!out.empty()) save_json(merged, out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"occukit: multi-view pedestrian occupancy toolkit"};
    app.require_subcommand(1);

    unsigned threads = 0;
    app.add_option("--threads", threads, "worker thread cap (0 = hardware)");

    // gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    std::string gen_out;
    uint64_t seed = 0;
    bool seed_given = false;
    int peds = 10, cams = 6, frames = 1, clutter = 3;
    double ex = 18.0, ey = 18.0, height = 3.2, min_sep = 1.2;
    int img_w = 640, img_h = 360;
    gen->add_option("--out", gen_out, "output dataset directory")->required();
    gen->add_option("--seed", seed, "rng seed (or env OCCUKIT_SEED)")
        ->each([&seed_given](const std::string&) { seed_given = true; });
    gen->add_option("--peds", peds, "pedestrian count");
    gen->add_option("--cams", cams, "camera count incl. one overhead");
    gen->add_option("--extent-x", ex, "scene extent x, meters");
    gen->add_option("--extent-y", ey, "scene extent y, meters");
    gen->add_option("--height", height, "grid height, meters");
    gen->add_option("--img-w", img_w, "sensor image width");
    gen->add_option("--img-h", img_h, "sensor image height");
    gen->add_option("--frames", frames, "number of frames");
    gen->add_option("--clutter", clutter, "clutter box count");
    gen->add_option("--min-sep", min_sep, "min pedestrian separation, meters");

    // fuse
    auto* fuse = app.add_subcommand("fuse", "fuse labeled depth maps into a label volume");
    std::string fuse_dataset, fuse_like, fuse_out_sem, fuse_out_inst;
    int fuse_frame = 0;
    double fuse_bias = defaults::surface_bias;
    fuse->add_option("--dataset", fuse_dataset, "dataset directory")->required();
    fuse->add_option("--frame", fuse_frame, "frame index");
    fuse->add_option("--like", fuse_like, "grid file supplying the voxel spec");
    fuse->add_option("--out-sem", fuse_out_sem, "output semantic grid")->required();
    fuse->add_option("--out-inst", fuse_out_inst, "output instance grid");
    fuse->add_option("--bias", fuse_bias, "inward surface bias, meters");

    // lift
    auto* lift = app.add_subcommand("lift", "lift per-view feature maps into a feature volume");
    std::string lift_calib, lift_like, lift_out;
    std::vector<std::string> lift_features;
    bool strict_eq1 = false;
    lift->add_option("--calib", lift_calib, "calibration JSON")->required();
    lift->add_option("--features", lift_features, "per-view raw f32 feature maps")->required();
    lift->add_option("--like", lift_like, "grid file supplying the voxel spec")->required();
    lift->add_option("--out", lift_out, "output feature volume")->required();
    lift->add_flag("--strict-eq1", strict_eq1, "divide by N instead of the valid view count");

    // detect
    auto* detect = app.add_subcommand("detect", "extract detections from a BEV heatmap");
    std::string det_heatmap, det_locations, det_like, det_out;
    double det_sigma = defaults::sigma, det_tau = defaults::tau,
           det_nms = defaults::nms_radius;
    int det_frame = -1;
    detect->add_option("--heatmap", det_heatmap, "BEV heatmap (raw f32 + sidecar)");
    detect->add_option("--locations", det_locations, "locations CSV to splat and re-extract");
    detect->add_option("--like", det_like, "grid file supplying the BEV geometry");
    detect->add_option("--sigma", det_sigma, "Gaussian splat sigma, meters");
    detect->add_option("--tau", det_tau, "confidence threshold");
    detect->add_option("--nms-radius", det_nms, "NMS radius, meters");
    detect->add_option("--frame", det_frame, "frame filter (-1 = all)");
    detect->add_option("--out", det_out, "output detections CSV")->required();

    // group
    auto* group = app.add_subcommand("group", "group pedestrian voxels into instances");
    std::string grp_sem, grp_det, grp_out_inst, grp_out_pan;
    int grp_frame = 0;
    double grp_r = defaults::group_radius;
    group->add_option("--sem", grp_sem, "semantic grid")->required();
    group->add_option("--det", grp_det, "detections CSV")->required();
    group->add_option("--frame", grp_frame, "frame to read from the CSV");
    group->add_option("--r", grp_r, "grouping radius, meters");
    group->add_option("--out-inst", grp_out_inst, "output instance grid");
    group->add_option("--out-pan", grp_out_pan, "output panoptic grid");

    // render
    auto* render = app.add_subcommand("render", "ray-march label volumes into per-view masks");
    std::string ren_sem, ren_inst, ren_pan, ren_calib, ren_out;
    int ren_w = 640, ren_h = 360;
    RayMarchParams ren_params;
    bool ren_ppm = false;
    render->add_option("--sem", ren_sem, "semantic grid");
    render->add_option("--inst", ren_inst, "instance grid (renders panoptic labels)");
    render->add_option("--pan", ren_pan, "panoptic grid");
    render->add_option("--calib", ren_calib, "calibration JSON")->required();
    render->add_option("--out-dir", ren_out, "output directory")->required();
    render->add_option("--width", ren_w, "render width");
    render->add_option("--height", ren_h, "render height");
    render->add_option("--min-hit", ren_params.min_hit_distance, "min hit distance, meters");
    render->add_option("--max-trace", ren_params.max_trace_distance, "max trace distance, meters");
    render->add_option("--max-steps", ren_params.max_steps, "crossing budget (0 = to grid exit)");
    render->add_flag("--ppm", ren_ppm, "also write color PPM previews");

    // eval2d
    auto* eval2d = app.add_subcommand("eval2d", "2D detection metrics (MODA/MODP/P/R/F1)");
    std::string e2_preds, e2_gts, e2_out;
    double e2_t = defaults::match_threshold;
    eval2d->add_option("--preds", e2_preds, "predicted detections CSV")->required();
    eval2d->add_option("--gts", e2_gts, "ground-truth locations CSV")->required();
    eval2d->add_option("--t", e2_t, "match distance threshold, meters");
    eval2d->add_option("--out", e2_out, "output JSON report");

    // eval3d
    auto* eval3d = app.add_subcommand("eval3d", "voxel IoU, instance AP and panoptic quality");
    std::string e3_pred_sem, e3_gt_sem, e3_pred_inst, e3_gt_inst, e3_pred_pan, e3_gt_pan, e3_out;
    eval3d->add_option("--pred-sem", e3_pred_sem, "predicted semantic grid")->required();
    eval3d->add_option("--gt-sem", e3_gt_sem, "ground-truth semantic grid")->required();
    eval3d->add_option("--pred-inst", e3_pred_inst, "predicted instance grid");
    eval3d->add_option("--gt-inst", e3_gt_inst, "ground-truth instance grid");
    eval3d->add_option("--pred-pan", e3_pred_pan, "predicted panoptic grid");
    eval3d->add_option("--gt-pan", e3_gt_pan, "ground-truth panoptic grid");
    eval3d->add_option("--out", e3_out, "output JSON report");

    // evalview
    auto* evalview = app.add_subcommand("evalview", "view-level metrics on rendered masks");
    std::string ev_pred, ev_gt, ev_out;
    double ev_t0 = 0.25, ev_t1 = 0.70;
    evalview->add_option("--pred-dir", ev_pred, "directory of predicted camNN.pgm")->required();
    evalview->add_option("--gt-dir", ev_gt, "directory of ground-truth camNN.pgm")->required();
    evalview->add_option("--t-start", ev_t0, "first mask-IoU threshold");
    evalview->add_option("--t-end", ev_t1, "last mask-IoU threshold");
    evalview->add_option("--out", ev_out, "output JSON report");

    // report
    auto* report = app.add_subcommand("report", "merge metric JSON files into one summary");
    std::vector<std::string> rep_in;
    std::string rep_out;
    report->add_option("--in", rep_in, "input metric JSON files")->required();
    report->add_option("--out", rep_out, "output merged JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*gen)
            return run_gen(gen_out, resolve_seed(seed, seed_given), peds, cams, ex, ey, height,
                           img_w, img_h, frames, clutter, min_sep, threads);
        if (*fuse)
            return run_fuse(fuse_dataset, fuse_frame, fuse_like, fuse_out_sem, fuse_out_inst,
                            fuse_bias, threads);
        if (*lift)
            return run_lift(lift_calib, lift_features, lift_like, lift_out, strict_eq1, threads);
        if (*detect)
            return run_detect(det_heatmap, det_locations, det_like, det_sigma, det_tau, det_nms,
                              det_frame, det_out);
        if (*group)
            return run_group(grp_sem, grp_det, grp_frame, grp_r, grp_out_inst, grp_out_pan,
                             threads);
        if (*render)
            return run_render(ren_sem, ren_inst, ren_pan, ren_calib, ren_out, ren_w, ren_h,
                              ren_params, ren_ppm, threads);
        if (*eval2d) return run_eval2d(e2_preds, e2_gts, e2_t, e2_out);
        if (*eval3d)
            return run_eval3d(e3_pred_sem, e3_gt_sem, e3_pred_inst, e3_gt_inst, e3_pred_pan,
                              e3_gt_pan, e3_out);
        if (*evalview) return run_evalview(ev_pred, ev_gt, ev_t0, ev_t1, ev_out);
        if (*report) return run_report(rep_in, rep_out);
    } catch (const io_error& e) {
        std::cerr << "occukit: io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "occukit: invalid argument: " << e.what() << "\n";
        return kExitPrecondition;
    } catch (const std::domain_error& e) {
        std::cerr << "occukit: invalid argument: " << e.what() << "\n";
        return kExitPrecondition;
    } catch (const std::exception& e) {
        std::cerr << "occukit: error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
