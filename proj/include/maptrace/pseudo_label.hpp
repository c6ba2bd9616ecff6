#pragma once

// Pseudo-label generation by entropy-based uncertainty filtering. Per-pixel
// entropy is normalized to [0,1] by the entropy of the uniform distribution;
// a pixel's argmax class is accepted when its normalized entropy falls below
// the threshold epsilon, otherwise the pixel gets the ignore marker.

#include <span>
#include <vector>

#include "maptrace/raster.hpp"
#include "maptrace/score_volume.hpp"

namespace maptrace {

struct UncertaintyMap {
    int height = 0;
    int width = 0;
    std::vector<double> u;    // normalized entropy in [0,1]
    double epsilon = 0.0;     // acceptance threshold, set by the labeling step
};

// Entropy of one score vector, normalized so that u(one-hot) == 0 and
// u(uniform) == 1 exactly: the denominator is the entropy of the uniform
// distribution computed through the same accumulation, so the uniform input
// divides to exactly 1.
double normalized_entropy(std::span<const double> scores);
double normalized_entropy(std::span<const float> scores);

UncertaintyMap entropy_map(const ScoreVolume& scores);

// label[p] = argmax_c s[p,c] if u[p] < epsilon else ignore; argmax ties break
// toward the lowest class id.
LabelRaster generate_pseudo_labels(const ScoreVolume& scores, double epsilon,
                                   const ClassScheme& scheme = ClassScheme::defaults());

// Fraction of pixels carrying a real class id.
double coverage(const LabelRaster& labels);

}  // namespace maptrace
