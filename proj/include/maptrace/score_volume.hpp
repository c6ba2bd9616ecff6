#pragma once

#include <cstdint>
#include <vector>

#include "maptrace/common.hpp"
#include "maptrace/tensor.hpp"

namespace maptrace {

// Per-pixel class-confidence distributions, stored as C planes of H*W.
struct ScoreVolume {
    int height = 0;
    int width = 0;
    int channels = 0;
    bool normalized = false;
    std::vector<float> scores;

    ScoreVolume() = default;
    ScoreVolume(int h, int w, int c, bool norm = false)
        : height(h), width(w), channels(c), normalized(norm),
          scores((size_t)h * w * c, 0.0f) {}

    size_t plane_size() const { return (size_t)height * width; }
    float* plane(int c) { return scores.data() + (size_t)c * plane_size(); }
    const float* plane(int c) const { return scores.data() + (size_t)c * plane_size(); }
    float& at(int c, int y, int x) { return scores[((size_t)c * height + y) * width + x]; }
    float at(int c, int y, int x) const { return scores[((size_t)c * height + y) * width + x]; }
};

// Slice a batched [N,C,H,W] score tensor into per-image volumes.
inline std::vector<ScoreVolume> to_score_volumes(const Tensor& t, bool normalized) {
    std::vector<ScoreVolume> out;
    out.reserve((size_t)t.n);
    for (int n = 0; n < t.n; ++n) {
        ScoreVolume v(t.h, t.w, t.c, normalized);
        std::copy(t.plane(n, 0), t.plane(n, 0) + v.scores.size(), v.scores.begin());
        out.push_back(std::move(v));
    }
    return out;
}

// Per-pixel argmax; ties break toward the lowest class id.
inline std::vector<int8_t> argmax_labels(const ScoreVolume& s) {
    std::vector<int8_t> out(s.plane_size());
    const size_t plane = s.plane_size();
    for (size_t p = 0; p < plane; ++p) {
        int best = 0;
        float bv = s.scores[p];
        for (int c = 1; c < s.channels; ++c) {
            const float v = s.scores[(size_t)c * plane + p];
            if (v > bv) {
                bv = v;
                best = c;
            }
        }
        out[p] = (int8_t)best;
    }
    return out;
}

}  // namespace maptrace
