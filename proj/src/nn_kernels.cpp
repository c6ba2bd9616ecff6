// SIMD specializations for the float training path. Reductions use a fixed
// lane order so results are bit-reproducible from run to run.

#include "maptrace/nn.hpp"

#if defined(__AVX512F__) || defined(__AVX2__)
#include <immintrin.h>
#endif

namespace maptrace::nn {

#if defined(__AVX512F__)

template <>
float vsum<float>(const float* a, size_t n) {
    __m512 acc = _mm512_setzero_ps();
    size_t i = 0;
    for (; i + 16 <= n; i += 16) acc = _mm512_add_ps(acc, _mm512_loadu_ps(a + i));
    float s = _mm512_reduce_add_ps(acc);
    for (; i < n; ++i) s += a[i];
    return s;
}

template <>
float vdot<float>(const float* a, const float* b, size_t n) {
    __m512 acc = _mm512_setzero_ps();
    size_t i = 0;
    for (; i + 16 <= n; i += 16)
        acc = _mm512_fmadd_ps(_mm512_loadu_ps(a + i), _mm512_loadu_ps(b + i), acc);
    float s = _mm512_reduce_add_ps(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

template <>
float vsumsq_centered<float>(const float* a, size_t n, float mean) {
    const __m512 mu = _mm512_set1_ps(mean);
    __m512 acc = _mm512_setzero_ps();
    size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        const __m512 d = _mm512_sub_ps(_mm512_loadu_ps(a + i), mu);
        acc = _mm512_fmadd_ps(d, d, acc);
    }
    float s = _mm512_reduce_add_ps(acc);
    for (; i < n; ++i) {
        const float d = a[i] - mean;
        s += d * d;
    }
    return s;
}

#elif defined(__AVX2__)

namespace {
inline float hadd8(__m256 v) {
    alignas(32) float t[8];
    _mm256_store_ps(t, v);
    return ((t[0] + t[1]) + (t[2] + t[3])) + ((t[4] + t[5]) + (t[6] + t[7]));
}
}  // namespace

template <>
float vsum<float>(const float* a, size_t n) {
    __m256 acc = _mm256_setzero_ps();
    size_t i = 0;
    for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(a + i));
    float s = hadd8(acc);
    for (; i < n; ++i) s += a[i];
    return s;
}

template <>
float vdot<float>(const float* a, const float* b, size_t n) {
    __m256 acc = _mm256_setzero_ps();
    size_t i = 0;
    for (; i + 8 <= n; i += 8)
        acc = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc);
    float s = hadd8(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

template <>
float vsumsq_centered<float>(const float* a, size_t n, float mean) {
    const __m256 mu = _mm256_set1_ps(mean);
    __m256 acc = _mm256_setzero_ps();
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 d = _mm256_sub_ps(_mm256_loadu_ps(a + i), mu);
        acc = _mm256_fmadd_ps(d, d, acc);
    }
    float s = hadd8(acc);
    for (; i < n; ++i) {
        const float d = a[i] - mean;
        s += d * d;
    }
    return s;
}

#else

template <>
float vsum<float>(const float* a, size_t n) {
    float s = 0.0f;
    for (size_t i = 0; i < n; ++i) s += a[i];
    return s;
}

template <>
float vdot<float>(const float* a, const float* b, size_t n) {
    float s = 0.0f;
    for (size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

template <>
float vsumsq_centered<float>(const float* a, size_t n, float mean) {
    float s = 0.0f;
    for (size_t i = 0; i < n; ++i) {
        const float d = a[i] - mean;
        s += d * d;
    }
    return s;
}

#endif

// dW[co][ci][3][3] += in (*) dout with 9 vector accumulators per (ci,co)
// pair, reduced once per strip.
template <>
void conv3x3_param_grad<float>(const float* in, int ci_count, int H, int W,
                               const float* dout, int co_count,
                               float* dweights, float* dbias) {
    const int SH = (H >= 64) ? 8 : H;
    const int WP = W + 2;
    const size_t plane = (size_t)H * W;
    // 16 floats of slack so the +2 shifted vector loads never leave the buffer
    std::vector<float> pad((size_t)(SH + 2) * WP + 16, 0.0f);

#if defined(__AVX512F__)
    for (int y0 = 0; y0 < H; y0 += SH) {
        const int sh = (H - y0) < SH ? (H - y0) : SH;
        for (int ci = 0; ci < ci_count; ++ci) {
            const float* xp = in + ci * plane;
            for (int r = -1; r <= sh; ++r) {
                float* dst = pad.data() + (size_t)(r + 1) * WP;
                const int y = y0 + r;
                dst[0] = 0.0f;
                dst[W + 1] = 0.0f;
                if (y < 0 || y >= H)
                    std::memset(dst + 1, 0, sizeof(float) * W);
                else
                    std::memcpy(dst + 1, xp + (size_t)y * W, sizeof(float) * W);
            }
            for (int co = 0; co < co_count; ++co) {
                const float* dplane = dout + co * plane;
                __m512 acc[9];
                for (auto& a : acc) a = _mm512_setzero_ps();
                for (int r = 0; r < sh; ++r) {
                    const float* p0 = pad.data() + (size_t)r * WP;
                    const float* p1 = p0 + WP;
                    const float* p2 = p1 + WP;
                    const float* drow = dplane + (size_t)(y0 + r) * W;
                    int x = 0;
                    for (; x + 16 <= W; x += 16) {
                        const __m512 d = _mm512_loadu_ps(drow + x);
                        acc[0] = _mm512_fmadd_ps(d, _mm512_loadu_ps(p0 + x), acc[0]);
                        acc[1] = _mm512_fmadd_ps(d, _mm512_loadu_ps(p0 + x + 1), acc[1]);
                        acc[2] = _mm512_fmadd_ps(d, _mm512_loadu_ps(p0 + x + 2), acc[2]);
                        acc[3] = _mm512_fmadd_ps(d, _mm512_loadu_ps(p1 + x), acc[3]);
                        acc[4] = _mm512_fmadd_ps(d, _mm512_loadu_ps(p1 + x + 1), acc[4]);
                        acc[5] = _mm512_fmadd_ps(d, _mm512_loadu_ps(p1 + x + 2), acc[5]);
                        acc[6] = _mm512_fmadd_ps(d, _mm512_loadu_ps(p2 + x), acc[6]);
                        acc[7] = _mm512_fmadd_ps(d, _mm512_loadu_ps(p2 + x + 1), acc[7]);
                        acc[8] = _mm512_fmadd_ps(d, _mm512_loadu_ps(p2 + x + 2), acc[8]);
                    }
                    if (x < W) {
                        const __mmask16 msk = (__mmask16)((1u << (W - x)) - 1u);
                        const __m512 d = _mm512_maskz_loadu_ps(msk, drow + x);
                        acc[0] = _mm512_fmadd_ps(d, _mm512_loadu_ps(p0 + x), acc[0]);
                        acc[1] = _mm512_fmadd_ps(d, _mm512_loadu_ps(p0 + x + 1), acc[1]);
                        acc[2] = _mm512_fmadd_ps(d, _mm512_loadu_ps(p0 + x + 2), acc[2]);
                        acc[3] = _mm512_fmadd_ps(d, _mm512_loadu_ps(p1 + x), acc[3]);
                        acc[4] = _mm512_fmadd_ps(d, _mm512_loadu_ps(p1 + x + 1), acc[4]);
                        acc[5] = _mm512_fmadd_ps(d, _mm512_loadu_ps(p1 + x + 2), acc[5]);
                        acc[6] = _mm512_fmadd_ps(d, _mm512_loadu_ps(p2 + x), acc[6]);
                        acc[7] = _mm512_fmadd_ps(d, _mm512_loadu_ps(p2 + x + 1), acc[7]);
                        acc[8] = _mm512_fmadd_ps(d, _mm512_loadu_ps(p2 + x + 2), acc[8]);
                    }
                }
                float* dw = dweights + ((size_t)co * ci_count + ci) * 9;
                for (int t = 0; t < 9; ++t) dw[t] += _mm512_reduce_add_ps(acc[t]);
            }
        }
    }
#else
    // strip-blocked scalar path mirroring the generic template
    for (int y0 = 0; y0 < H; y0 += SH) {
        const int sh = (H - y0) < SH ? (H - y0) : SH;
        for (int ci = 0; ci < ci_count; ++ci) {
            const float* xp = in + ci * plane;
            for (int r = -1; r <= sh; ++r) {
                float* dst = pad.data() + (size_t)(r + 1) * WP;
                const int y = y0 + r;
                dst[0] = 0.0f;
                dst[W + 1] = 0.0f;
                if (y < 0 || y >= H)
                    std::memset(dst + 1, 0, sizeof(float) * W);
                else
                    std::memcpy(dst + 1, xp + (size_t)y * W, sizeof(float) * W);
            }
            for (int co = 0; co < co_count; ++co) {
                float acc[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
                const float* dplane = dout + co * plane;
                for (int r = 0; r < sh; ++r) {
                    const float* p0 = pad.data() + (size_t)r * WP;
                    const float* p1 = p0 + WP;
                    const float* p2 = p1 + WP;
                    const float* drow = dplane + (size_t)(y0 + r) * W;
                    for (int x = 0; x < W; ++x) {
                        const float d = drow[x];
                        acc[0] += d * p0[x];
                        acc[1] += d * p0[x + 1];
                        acc[2] += d * p0[x + 2];
                        acc[3] += d * p1[x];
                        acc[4] += d * p1[x + 1];
                        acc[5] += d * p1[x + 2];
                        acc[6] += d * p2[x];
                        acc[7] += d * p2[x + 1];
                        acc[8] += d * p2[x + 2];
                    }
                }
                float* dw = dweights + ((size_t)co * ci_count + ci) * 9;
                for (int t = 0; t < 9; ++t) dw[t] += acc[t];
            }
        }
    }
#endif
    if (dbias) {
        for (int co = 0; co < co_count; ++co) dbias[co] += vsum(dout + co * plane, plane);
    }
}

}  // namespace maptrace::nn
