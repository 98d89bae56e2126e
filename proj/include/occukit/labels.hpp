#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "occukit/geometry.hpp"

namespace occukit {

// The five unified semantic classes. Free doubles as "empty / background" in
// rendered masks.
enum class SemanticLabel : uint8_t {
    Free = 0,
    Pedestrian = 1,
    Ground = 2,
    Wall = 3,
    Others = 4,
};

inline constexpr int kNumSemanticClasses = 5;
inline constexpr int kNumStuffClasses = 3;  // Ground, Wall, Others

inline constexpr std::array<std::string_view, kNumSemanticClasses> kSemanticClassNames{
    "Free", "Pedestrian", "Ground", "Wall", "Others"};

inline std::string_view semantic_class_name(SemanticLabel l) {
    return kSemanticClassNames[static_cast<uint8_t>(l)];
}

// Tie-break priority shared by voxelization and fusion: thin pedestrians must
// survive contact with large surfaces.
inline constexpr int label_priority(SemanticLabel l) {
    switch (l) {
        case SemanticLabel::Pedestrian: return 4;
        case SemanticLabel::Wall: return 3;
        case SemanticLabel::Others: return 2;
        case SemanticLabel::Ground: return 1;
        case SemanticLabel::Free: return 0;
    }
    return 0;
}

// One fused sample: world position plus its class, and an instance id iff the
// class is Pedestrian.
struct LabeledPoint {
    Vec3 position;
    SemanticLabel semantic_label = SemanticLabel::Free;
    uint32_t instance_id = 0;  // > 0 iff semantic_label == Pedestrian
};

// Dense semantic label grid with an instance-id channel. instances[i] is
// nonzero only where labels[i] == Pedestrian; everything defaults to Free.
struct LabelVolume {
    VoxelGridSpec spec;
    std::vector<uint8_t> labels;
    std::vector<uint32_t> instances;

    LabelVolume() = default;
    explicit LabelVolume(const VoxelGridSpec& s)
        : spec(s), labels(s.num_voxels(), 0), instances(s.num_voxels(), 0) {}

    SemanticLabel label_at(int ix, int iy, int iz) const {
        return static_cast<SemanticLabel>(labels[spec.linear_index(ix, iy, iz)]);
    }
    void set(int ix, int iy, int iz, SemanticLabel l, uint32_t instance = 0) {
        std::size_t i = spec.linear_index(ix, iy, iz);
        labels[i] = static_cast<uint8_t>(l);
        instances[i] = instance;
    }
    // raymarch accessor: 0 means empty
    uint32_t value_at(int ix, int iy, int iz) const {
        return labels[spec.linear_index(ix, iy, iz)];
    }
};

// Per-voxel pedestrian instance index, 0 = unassigned.
struct InstanceVolume {
    VoxelGridSpec spec;
    std::vector<uint32_t> ids;

    InstanceVolume() = default;
    explicit InstanceVolume(const VoxelGridSpec& s) : spec(s), ids(s.num_voxels(), 0) {}

    uint32_t id_at(int ix, int iy, int iz) const { return ids[spec.linear_index(ix, iy, iz)]; }
};

// Panoptic label encoding: 0 = Free, stuff classes keep their semantic value
// (Ground/Wall/Others = 2/3/4), pedestrian instance k maps to
// kPanopticInstanceOffset + k.
inline constexpr uint32_t kPanopticInstanceOffset = 8;

inline bool panoptic_is_instance(uint32_t v) { return v > kPanopticInstanceOffset; }
inline uint32_t panoptic_instance_id(uint32_t v) { return v - kPanopticInstanceOffset; }
inline uint32_t panoptic_instance_value(uint32_t id) { return kPanopticInstanceOffset + id; }

inline SemanticLabel panoptic_semantic(uint32_t v) {
    if (v == 0) return SemanticLabel::Free;
    if (panoptic_is_instance(v)) return SemanticLabel::Pedestrian;
    return static_cast<SemanticLabel>(v);
}

struct PanopticVolume {
    VoxelGridSpec spec;
    std::vector<uint32_t> labels;

    PanopticVolume() = default;
    explicit PanopticVolume(const VoxelGridSpec& s) : spec(s), labels(s.num_voxels(), 0) {}

    uint32_t value_at(int ix, int iy, int iz) const {
        return labels[spec.linear_index(ix, iy, iz)];
    }
};

// Collapse a panoptic volume back to its semantic view (instances become
// Pedestrian). Used by the render/eval pipeline and the grouping fixed-point
// tests.
inline LabelVolume semantic_of_panoptic(const PanopticVolume& pan) {
    LabelVolume out(pan.spec);
    for (std::size_t i = 0; i < pan.labels.size(); ++i) {
        uint32_t v = pan.labels[i];
        out.labels[i] = static_cast<uint8_t>(panoptic_semantic(v));
        if (panoptic_is_instance(v)) out.instances[i] = panoptic_instance_id(v);
    }
    return out;
}

}  // namespace occukit
