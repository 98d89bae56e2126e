#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "occukit/constants.hpp"
#include "occukit/labels.hpp"

namespace occukit {

struct ClassWeights {
    std::vector<double> weights;  // indexed by class
    double epsilon = defaults::class_weight_epsilon;
};

// w_c = 1 / ln(f_c + eps), f_c being absolute class voxel counts. Counts at
// or below 1 - eps would flip the sign of the log and are rejected.
inline ClassWeights class_weights(const std::vector<double>& frequencies,
                                  double epsilon = defaults::class_weight_epsilon) {
    ClassWeights out;
    out.epsilon = epsilon;
    out.weights.reserve(frequencies.size());
    for (double f : frequencies) {
        if (f < 0.0) throw std::domain_error("class_weights: negative frequency");
        double l = std::log(f + epsilon);
        if (!(l > 0.0))
            throw std::domain_error(
                "class_weights: frequency " + std::to_string(f) +
                " yields non-positive log(f+eps); counts must exceed 1-eps");
        out.weights.push_back(1.0 / l);
    }
    return out;
}

struct WeightedCeLoss {
    double value = 0.0;
    std::vector<double> gradient;  // d value / d logits, voxel-major [v * C + c]
};

// Weighted softmax cross-entropy, mean over voxels. logits are voxel-major
// with num_classes scores per voxel; labels index into weights.
inline WeightedCeLoss weighted_ce(const std::vector<double>& logits, int num_classes,
                                  const std::vector<uint8_t>& labels, const ClassWeights& cw) {
    if (num_classes < 2) throw std::invalid_argument("weighted_ce: need >= 2 classes");
    if (logits.size() != labels.size() * std::size_t(num_classes))
        throw std::invalid_argument("weighted_ce: logits/labels shape mismatch");
    if (cw.weights.size() < std::size_t(num_classes))
        throw std::invalid_argument("weighted_ce: missing class weights");

    const std::size_t n = labels.size();
    WeightedCeLoss out;
    out.gradient.assign(logits.size(), 0.0);
    std::vector<double> softmax(num_classes);

    for (std::size_t v = 0; v < n; ++v) {
        const double* row = logits.data() + v * num_classes;
        uint8_t y = labels[v];
        if (y >= num_classes) throw std::invalid_argument("weighted_ce: label out of range");

        double max_logit = *std::max_element(row, row + num_classes);
        double sum = 0.0;
        for (int c = 0; c < num_classes; ++c) {
            softmax[c] = std::exp(row[c] - max_logit);
            sum += softmax[c];
        }
        for (int c = 0; c < num_classes; ++c) softmax[c] /= sum;

        double w = cw.weights[y];
        out.value += w * -std::log(softmax[y]);
        double* grad = out.gradient.data() + v * num_classes;
        for (int c = 0; c < num_classes; ++c)
            grad[c] = w * (softmax[c] - (c == y ? 1.0 : 0.0)) / double(n);
    }
    out.value /= double(n);
    return out;
}

struct LossBreakdown {
    double wce = 0.0;
    double lovasz = 0.0;
    double affinity = 0.0;
    double l3d = 0.0;
    double l2d = 0.0;
    double total = 0.0;
};

// L3D = 0.4*wce + 0.3*lovasz + 0.3*affinity; total = 0.7*L3D + 0.3*L2D.
// Lovasz and affinity terms come from outside as scalars.
inline LossBreakdown compose_total(double wce, double lovasz, double affinity, double l2d) {
    for (double v : {wce, lovasz, affinity, l2d})
        if (!std::isfinite(v)) throw std::invalid_argument("compose_total: non-finite loss term");
    LossBreakdown b;
    b.wce = wce;
    b.lovasz = lovasz;
    b.affinity = affinity;
    b.l2d = l2d;
    b.l3d = defaults::lambda_wce * wce + defaults::lambda_lovasz * lovasz +
            defaults::lambda_affinity * affinity;
    b.total = (1.0 - defaults::lambda_2d) * b.l3d + defaults::lambda_2d * l2d;
    return b;
}

}  // namespace occukit
