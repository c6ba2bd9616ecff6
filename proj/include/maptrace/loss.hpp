#pragma once

// Masked per-pixel cross-entropy. Pixels labeled with the ignore marker (-1)
// contribute neither to the loss nor to the gradient; the loss is the mean
// over the remaining pixels.

#include <cstdint>

#include "maptrace/tensor.hpp"

namespace maptrace {

// Fused softmax + cross-entropy over logits. labels has n*h*w entries in
// {-1, 0..C-1}. When dlogits is non-null it receives dL/dlogits (already
// divided by the unmasked-pixel count). Returns 0 when every pixel is masked.
template <class T>
double masked_softmax_ce_loss(const TensorT<T>& logits, const int8_t* labels,
                              TensorT<T>* dlogits) {
    const int C = logits.c;
    const size_t plane = logits.plane_size();
    if (dlogits) {
        dlogits->resize(logits.n, logits.c, logits.h, logits.w);
        dlogits->zero();
    }
    // first pass: count unmasked pixels
    size_t m = 0;
    const size_t total = (size_t)logits.n * plane;
    for (size_t i = 0; i < total; ++i) {
        const int8_t y = labels[i];
        if (y == kIgnoreLabel) continue;
        require(y >= 0 && y < C, "masked loss: label out of range");
        ++m;
    }
    if (m == 0) return 0.0;
    double loss = 0.0;
    const double inv_m = 1.0 / (double)m;
    for (int n = 0; n < logits.n; ++n) {
        const T* base = logits.plane(n, 0);
        T* dbase = dlogits ? dlogits->plane(n, 0) : nullptr;
        const int8_t* lrow = labels + (size_t)n * plane;
        for (size_t p = 0; p < plane; ++p) {
            const int8_t y = lrow[p];
            if (y == kIgnoreLabel) continue;
            T mx = base[p];
            for (int c = 1; c < C; ++c) {
                const T v = base[(size_t)c * plane + p];
                if (v > mx) mx = v;
            }
            double sum = 0.0;
            for (int c = 0; c < C; ++c) sum += std::exp((double)(base[(size_t)c * plane + p] - mx));
            const double log_sum = std::log(sum);
            loss += (log_sum - (double)(base[(size_t)y * plane + p] - mx)) * inv_m;
            if (dbase) {
                for (int c = 0; c < C; ++c) {
                    const double s =
                        std::exp((double)(base[(size_t)c * plane + p] - mx)) / sum;
                    dbase[(size_t)c * plane + p] =
                        (T)((s - (c == y ? 1.0 : 0.0)) * inv_m);
                }
            }
        }
    }
    return loss;
}

}  // namespace maptrace
