#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "occukit/constants.hpp"
#include "occukit/geometry.hpp"
#include "occukit/image.hpp"
#include "occukit/labels.hpp"

namespace occukit {

namespace detail {

constexpr double kDisallowed = 1e9;

// Min-cost assignment of rows to columns (shortest augmenting paths with
// potentials). Requires rows <= cols; returns col index per row.
inline std::vector<int> hungarian(const std::vector<std::vector<double>>& cost) {
    int n = int(cost.size());
    if (n == 0) return {};
    int m = int(cost[0].size());
    const double inf = std::numeric_limits<double>::infinity();

    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<int> p(m + 1, 0), way(m + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<bool> used(m + 1, false);
        do {
            used[j0] = true;
            int i0 = p[j0], j1 = -1;
            double delta = inf;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) continue;
                double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }

    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= m; ++j)
        if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// 2D detection metrics

struct MatchedPair {
    int pred = 0;
    int gt = 0;
    double distance = 0.0;
};

struct MatchReport {
    std::vector<MatchedPair> pairs;
    int fp_count = 0;
    int fn_count = 0;
    double threshold = defaults::match_threshold;

    int tp_count() const { return int(pairs.size()); }
};

// Optimal one-to-one matching: maximizes the number of pairs with distance
// strictly below t, then minimizes the total matched distance (disallowed
// pairs carry a prohibitive cost).
inline MatchReport match_detections(const std::vector<Vec2>& preds, const std::vector<Vec2>& gts,
                                    double t = defaults::match_threshold) {
    if (!(t > 0.0)) throw std::invalid_argument("match_detections: t must be positive");
    MatchReport report;
    report.threshold = t;

    const bool swapped = preds.size() > gts.size();
    const auto& rows = swapped ? gts : preds;
    const auto& cols = swapped ? preds : gts;
    if (rows.empty()) {
        report.fp_count = int(preds.size());
        report.fn_count = int(gts.size());
        return report;
    }

    std::vector<std::vector<double>> cost(rows.size(), std::vector<double>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) {
            double d = norm(rows[i] - cols[j]);
            cost[i][j] = d < t ? d : detail::kDisallowed;
        }

    std::vector<int> row_to_col = detail::hungarian(cost);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        int j = row_to_col[i];
        if (j < 0 || cost[i][j] >= detail::kDisallowed) continue;
        int pred = swapped ? j : int(i);
        int gt = swapped ? int(i) : j;
        report.pairs.push_back({pred, gt, cost[i][j]});
    }
    report.fp_count = int(preds.size()) - report.tp_count();
    report.fn_count = int(gts.size()) - report.tp_count();
    return report;
}

struct DetectionScores {
    double moda = 0.0;
    double modp = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// MODA = 1 - (FP+FN)/(TP+FN), MODP = mean over matches of 1 - d/t. Degenerate
// denominators: no ground truth counts as a unit denominator for MODA,
// precision/recall/F1 are 1 on fully empty frames, MODP is 0 without matches.
inline DetectionScores detection_scores(const MatchReport& report) {
    const double tp = report.tp_count();
    const double fp = report.fp_count;
    const double fn = report.fn_count;

    DetectionScores s;
    double gt_count = tp + fn;
    s.moda = 1.0 - (fp + fn) / std::max(gt_count, 1.0);
    if (tp > 0) {
        double sum = 0.0;
        for (const auto& pair : report.pairs) sum += 1.0 - pair.distance / report.threshold;
        s.modp = sum / tp;
    }
    s.precision = (tp + fp) > 0 ? tp / (tp + fp) : 1.0;
    s.recall = gt_count > 0 ? tp / gt_count : 1.0;
    s.f1 = (2 * tp + fp + fn) > 0 ? 2 * tp / (2 * tp + fp + fn) : 1.0;
    return s;
}

// ---------------------------------------------------------------------------
// Voxel-level semantic IoU

struct SemanticIouReport {
    std::map<SemanticLabel, double> iou;  // only classes present on either side
    double miou = 1.0;
    std::optional<double> iou_background;  // Ground|Wall|Others as one mask
};

template <typename VolA, typename VolB>
inline void require_same_spec(const VolA& a, const VolB& b, const char* what) {
    if (!(a.spec == b.spec)) throw std::invalid_argument(std::string(what) + ": spec mismatch");
}

inline SemanticIouReport semantic_iou(
    const LabelVolume& pred, const LabelVolume& gt,
    const std::vector<SemanticLabel>& classes = {SemanticLabel::Free, SemanticLabel::Pedestrian,
                                                 SemanticLabel::Ground, SemanticLabel::Wall,
                                                 SemanticLabel::Others}) {
    require_same_spec(pred, gt, "semantic_iou");

    std::array<std::size_t, kNumSemanticClasses> tp{}, fp{}, fn{};
    std::size_t bg_tp = 0, bg_fp = 0, bg_fn = 0;
    auto is_bg = [](uint8_t l) {
        return l == uint8_t(SemanticLabel::Ground) || l == uint8_t(SemanticLabel::Wall) ||
               l == uint8_t(SemanticLabel::Others);
    };

    for (std::size_t i = 0; i < pred.labels.size(); ++i) {
        uint8_t p = pred.labels[i], g = gt.labels[i];
        if (p == g) {
            tp[p]++;
        } else {
            fp[p]++;
            fn[g]++;
        }
        bool pb = is_bg(p), gb = is_bg(g);
        if (pb && gb) bg_tp++;
        else if (pb) bg_fp++;
        else if (gb) bg_fn++;
    }

    SemanticIouReport report;
    double sum = 0.0;
    int counted = 0;
    for (SemanticLabel c : classes) {
        auto k = uint8_t(c);
        std::size_t denom = tp[k] + fp[k] + fn[k];
        if (denom == 0) continue;  // absent on both sides: not evaluated
        double iou = double(tp[k]) / double(denom);
        report.iou[c] = iou;
        sum += iou;
        ++counted;
    }
    report.miou = counted > 0 ? sum / counted : 1.0;
    if (bg_tp + bg_fp + bg_fn > 0)
        report.iou_background = double(bg_tp) / double(bg_tp + bg_fp + bg_fn);
    return report;
}

// ---------------------------------------------------------------------------
// Instance AP over mask-IoU thresholds

namespace detail {

struct MaskOverlaps {
    std::size_t n_pred = 0;
    std::size_t n_gt = 0;
    // (pred id, gt id, IoU), all pairs with positive intersection,
    // descending IoU with deterministic tie order.
    std::vector<std::tuple<uint32_t, uint32_t, double>> pairs;
};

inline MaskOverlaps instance_overlaps(const std::vector<uint32_t>& pred,
                                      const std::vector<uint32_t>& gt) {
    std::unordered_map<uint32_t, std::size_t> pred_size, gt_size;
    std::unordered_map<uint64_t, std::size_t> inter;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        uint32_t p = pred[i], g = gt[i];
        if (p) pred_size[p]++;
        if (g) gt_size[g]++;
        if (p && g) inter[(uint64_t(p) << 32) | g]++;
    }
    MaskOverlaps out;
    out.n_pred = pred_size.size();
    out.n_gt = gt_size.size();
    for (const auto& [key, count] : inter) {
        uint32_t p = uint32_t(key >> 32), g = uint32_t(key);
        double iou = double(count) / double(pred_size[p] + gt_size[g] - count);
        out.pairs.emplace_back(p, g, iou);
    }
    std::sort(out.pairs.begin(), out.pairs.end(), [](const auto& a, const auto& b) {
        if (std::get<2>(a) != std::get<2>(b)) return std::get<2>(a) > std::get<2>(b);
        if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
        return std::get<1>(a) < std::get<1>(b);
    });
    return out;
}

// Greedy descending-IoU one-to-one matching; returns the number of pairs
// with IoU >= threshold.
inline std::size_t greedy_match_count(const MaskOverlaps& overlaps, double threshold) {
    std::unordered_map<uint32_t, bool> pred_used, gt_used;
    std::size_t matched = 0;
    for (const auto& [p, g, iou] : overlaps.pairs) {
        if (iou < threshold) break;  // sorted descending
        if (pred_used[p] || gt_used[g]) continue;
        pred_used[p] = gt_used[g] = true;
        ++matched;
    }
    return matched;
}

}  // namespace detail

// Set-based AP: mean over thresholds of TP/(TP+FP+FN) under greedy one-to-one
// mask matching. Empty prediction and ground truth score 1 by convention.
inline double instance_ap(const InstanceVolume& pred, const InstanceVolume& gt,
                          const std::vector<double>& thresholds) {
    require_same_spec(pred, gt, "instance_ap");
    if (thresholds.empty()) throw std::invalid_argument("instance_ap: empty threshold set");

    auto overlaps = detail::instance_overlaps(pred.ids, gt.ids);
    double sum = 0.0;
    for (double t : thresholds) {
        std::size_t tp = detail::greedy_match_count(overlaps, t);
        std::size_t denom = overlaps.n_pred + overlaps.n_gt - tp;  // TP+FP+FN
        sum += denom == 0 ? 1.0 : double(tp) / double(denom);
    }
    return sum / double(thresholds.size());
}

// ---------------------------------------------------------------------------
// Panoptic quality

struct PanopticClassStats {
    int tp = 0;
    int fp = 0;
    int fn = 0;
    double iou_sum = 0.0;

    double sq() const { return tp > 0 ? iou_sum / tp : 0.0; }
    double rq() const {
        double denom = tp + 0.5 * fp + 0.5 * fn;
        return denom > 0 ? tp / denom : 0.0;
    }
    double pq() const { return sq() * rq(); }
};

struct PanopticResult {
    std::map<std::string, PanopticClassStats> per_class;
    double pq = 1.0;
    double sq = 1.0;
    double rq = 1.0;
};

// Segments: one per stuff class plus one per pedestrian instance. Matches
// require IoU strictly above 0.5, which makes them unique. The aggregate
// pools TP/FP/FN across classes so PQ = SQ * RQ holds exactly at every level.
inline PanopticResult panoptic_quality(
    const PanopticVolume& pred, const PanopticVolume& gt,
    const std::vector<SemanticLabel>& stuff_classes = {SemanticLabel::Ground, SemanticLabel::Wall,
                                                       SemanticLabel::Others}) {
    require_same_spec(pred, gt, "panoptic_quality");

    std::unordered_map<uint32_t, std::size_t> pred_size, gt_size;
    std::unordered_map<uint64_t, std::size_t> inter;
    for (std::size_t i = 0; i < pred.labels.size(); ++i) {
        uint32_t p = pred.labels[i], g = gt.labels[i];
        if (p) pred_size[p]++;
        if (g) gt_size[g]++;
        if (p && g) inter[(uint64_t(p) << 32) | g]++;
    }

    auto segment_class = [&](uint32_t v) -> std::optional<SemanticLabel> {
        if (panoptic_is_instance(v)) return SemanticLabel::Pedestrian;
        auto sem = static_cast<SemanticLabel>(v);
        for (SemanticLabel s : stuff_classes)
            if (s == sem) return sem;
        return std::nullopt;  // outside the evaluated class set
    };

    std::map<SemanticLabel, PanopticClassStats> stats;
    std::unordered_map<uint32_t, bool> pred_matched, gt_matched;

    for (const auto& [key, count] : inter) {
        uint32_t p = uint32_t(key >> 32), g = uint32_t(key);
        auto pc = segment_class(p), gc = segment_class(g);
        if (!pc || !gc || *pc != *gc) continue;
        double iou = double(count) / double(pred_size[p] + gt_size[g] - count);
        if (iou > 0.5) {
            // IoU > 0.5 admits at most one partner per segment.
            assert(!pred_matched[p] && !gt_matched[g]);
            if (pred_matched[p] || gt_matched[g]) continue;
            pred_matched[p] = gt_matched[g] = true;
            stats[*pc].tp++;
            stats[*pc].iou_sum += iou;
        }
    }
    for (const auto& [v, size] : pred_size) {
        (void)size;
        auto c = segment_class(v);
        if (c && !pred_matched[v]) stats[*c].fp++;
    }
    for (const auto& [v, size] : gt_size) {
        (void)size;
        auto c = segment_class(v);
        if (c && !gt_matched[v]) stats[*c].fn++;
    }

    PanopticResult result;
    PanopticClassStats pooled;
    for (const auto& [c, s] : stats) {
        if (s.tp + s.fp + s.fn == 0) continue;  // no segments on either side
        result.per_class[std::string(semantic_class_name(c))] = s;
        pooled.tp += s.tp;
        pooled.fp += s.fp;
        pooled.fn += s.fn;
        pooled.iou_sum += s.iou_sum;
    }
    if (pooled.tp + pooled.fp + pooled.fn > 0) {
        result.sq = pooled.sq();
        result.rq = pooled.rq();
        result.pq = result.sq * result.rq;
    }
    return result;
}

// ---------------------------------------------------------------------------
// View-level evaluation on rendered panoptic masks

struct ViewMetrics {
    SemanticIouReport semantic;
    double ap = 1.0;
    PanopticResult panoptic;
};

struct ViewLevelReport {
    std::vector<ViewMetrics> per_view;
    std::map<SemanticLabel, double> iou;  // mean over views evaluating the class
    double miou = 1.0;
    double ap = 1.0;
    double pq = 1.0;
    double sq = 1.0;
    double rq = 1.0;
};

namespace detail {

inline VoxelGridSpec mask_spec(int width, int height) {
    VoxelGridSpec spec;
    spec.voxel_size = 1.0;
    spec.dims_x = width;
    spec.dims_y = height;
    spec.dims_z = 1;
    return spec;
}

}  // namespace detail

// Evaluate rendered panoptic masks view by view, then average. Classes
// default to the reduced {Free, Pedestrian, Ground} set; stuff classes for PQ
// are the non-Free, non-Pedestrian members.
inline ViewLevelReport view_level_report(
    const std::vector<ImageU16>& pred_masks, const std::vector<ImageU16>& gt_masks,
    const std::vector<SemanticLabel>& classes = {SemanticLabel::Free, SemanticLabel::Pedestrian,
                                                 SemanticLabel::Ground},
    const std::vector<double>& thresholds = defaults::view_ap_thresholds()) {
    if (pred_masks.size() != gt_masks.size() || pred_masks.empty())
        throw std::invalid_argument("view_level_report: need matching, non-empty mask lists");

    std::vector<SemanticLabel> stuff;
    for (SemanticLabel c : classes)
        if (c != SemanticLabel::Free && c != SemanticLabel::Pedestrian) stuff.push_back(c);

    ViewLevelReport report;
    std::map<SemanticLabel, std::pair<double, int>> iou_acc;
    double miou_sum = 0, ap_sum = 0, pq_sum = 0, sq_sum = 0, rq_sum = 0;

    for (std::size_t view = 0; view < pred_masks.size(); ++view) {
        const auto& pm = pred_masks[view];
        const auto& gm = gt_masks[view];
        if (pm.width != gm.width || pm.height != gm.height)
            throw std::invalid_argument("view_level_report: mask dimension mismatch");

        VoxelGridSpec spec = detail::mask_spec(pm.width, pm.height);
        PanopticVolume pred_pan(spec), gt_pan(spec);
        LabelVolume pred_sem(spec), gt_sem(spec);
        for (int x = 0; x < pm.width; ++x)
            for (int y = 0; y < pm.height; ++y) {
                std::size_t lin = spec.linear_index(x, y, 0);
                uint32_t pv = pm.at(x, y), gv = gm.at(x, y);
                pred_pan.labels[lin] = pv;
                gt_pan.labels[lin] = gv;
                pred_sem.labels[lin] = uint8_t(panoptic_semantic(pv));
                gt_sem.labels[lin] = uint8_t(panoptic_semantic(gv));
            }
        InstanceVolume pred_inst(spec), gt_inst(spec);
        for (std::size_t i = 0; i < pred_pan.labels.size(); ++i) {
            if (panoptic_is_instance(pred_pan.labels[i]))
                pred_inst.ids[i] = panoptic_instance_id(pred_pan.labels[i]);
            if (panoptic_is_instance(gt_pan.labels[i]))
                gt_inst.ids[i] = panoptic_instance_id(gt_pan.labels[i]);
        }

        ViewMetrics vm;
        vm.semantic = semantic_iou(pred_sem, gt_sem, classes);
        vm.ap = instance_ap(pred_inst, gt_inst, thresholds);
        vm.panoptic = panoptic_quality(pred_pan, gt_pan, stuff);
        for (const auto& [c, v] : vm.semantic.iou) {
            iou_acc[c].first += v;
            iou_acc[c].second++;
        }
        miou_sum += vm.semantic.miou;
        ap_sum += vm.ap;
        pq_sum += vm.panoptic.pq;
        sq_sum += vm.panoptic.sq;
        rq_sum += vm.panoptic.rq;
        report.per_view.push_back(std::move(vm));
    }

    const double n = double(report.per_view.size());
    for (const auto& [c, acc] : iou_acc) report.iou[c] = acc.first / acc.second;
    report.miou = miou_sum / n;
    report.ap = ap_sum / n;
    report.pq = pq_sum / n;
    report.sq = sq_sum / n;
    report.rq = rq_sum / n;
    return report;
}

}  // namespace occukit
