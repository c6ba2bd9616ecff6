#include "maptrace/pseudo_label.hpp"

#include <cmath>

namespace maptrace {

namespace {

// -sum s*ln(s) with 0*ln(0) := 0, accumulated left to right in double.
template <class T>
double entropy_sum(const T* s, int n) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = (double)s[i];
        if (v > 0.0) acc -= v * std::log(v);
    }
    return acc;
}

double uniform_entropy(int n) {
    std::vector<double> u(n, 1.0 / (double)n);
    return entropy_sum(u.data(), n);
}

void check_normalized(const ScoreVolume& scores) {
    require(scores.normalized, "entropy: scores must be normalized");
}

}  // namespace

namespace {

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

}  // namespace

double normalized_entropy(std::span<const double> scores) {
    const int n = (int)scores.size();
    require(n >= 2, "entropy: need at least two classes");
    return clamp01(entropy_sum(scores.data(), n) / uniform_entropy(n));
}

double normalized_entropy(std::span<const float> scores) {
    const int n = (int)scores.size();
    require(n >= 2, "entropy: need at least two classes");
    return clamp01(entropy_sum(scores.data(), n) / uniform_entropy(n));
}

UncertaintyMap entropy_map(const ScoreVolume& scores) {
    check_normalized(scores);
    const int C = scores.channels;
    require(C >= 2, "entropy: need at least two classes");
    const double denom = uniform_entropy(C);
    const size_t plane = scores.plane_size();
    UncertaintyMap map;
    map.height = scores.height;
    map.width = scores.width;
    map.u.resize(plane);
    for (size_t p = 0; p < plane; ++p) {
        double acc = 0.0;
        for (int c = 0; c < C; ++c) {
            const double v = (double)scores.scores[(size_t)c * plane + p];
            if (v > 0.0) acc -= v * std::log(v);
        }
        map.u[p] = clamp01(acc / denom);
    }
    return map;
}

LabelRaster generate_pseudo_labels(const ScoreVolume& scores, double epsilon,
                                   const ClassScheme& scheme) {
    check_normalized(scores);
    require(epsilon > 0.0 && epsilon <= 1.0, "pseudo labels: epsilon must be in (0, 1]");
    require(scores.channels == scheme.count(), "pseudo labels: class count mismatch");
    UncertaintyMap map = entropy_map(scores);
    map.epsilon = epsilon;
    const size_t plane = scores.plane_size();
    LabelRaster out;
    out.height = scores.height;
    out.width = scores.width;
    out.scheme = scheme;
    out.labels.resize(plane);
    for (size_t p = 0; p < plane; ++p) {
        if (map.u[p] < epsilon) {
            int best = 0;
            float bv = scores.scores[p];
            for (int c = 1; c < scores.channels; ++c) {
                const float v = scores.scores[(size_t)c * plane + p];
                if (v > bv) {
                    bv = v;
                    best = c;
                }
            }
            out.labels[p] = (int8_t)best;
        } else {
            out.labels[p] = kIgnoreLabel;
        }
    }
    return out;
}

double coverage(const LabelRaster& labels) {
    if (labels.labels.empty()) return 0.0;
    size_t kept = 0;
    for (int8_t v : labels.labels)
        if (v != kIgnoreLabel) ++kept;
    return (double)kept / (double)labels.labels.size();
}

}  // namespace maptrace
