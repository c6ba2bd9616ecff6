#pragma once

// Layers for the segmentation backbone. Everything is templated on the
// scalar type: the training path instantiates float, the finite-difference
// gradient tests instantiate double. Convolutions are direct (strip-blocked
// with zero-padded row buffers); CHW planes keep the inner loops contiguous.

#include <cstring>
#include <vector>

#include "maptrace/common.hpp"
#include "maptrace/tensor.hpp"

namespace maptrace::nn {

// ---------------------------------------------------------------------------
// kernels
// ---------------------------------------------------------------------------

// Reductions. The float versions are SIMD specializations with a fixed lane
// order, so results are deterministic for a given build.
template <class T>
T vsum(const T* a, size_t n) {
    T s(0);
    for (size_t i = 0; i < n; ++i) s += a[i];
    return s;
}

template <class T>
T vdot(const T* a, const T* b, size_t n) {
    T s(0);
    for (size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

template <class T>
T vsumsq_centered(const T* a, size_t n, T mean) {
    T s(0);
    for (size_t i = 0; i < n; ++i) {
        const T d = a[i] - mean;
        s += d * d;
    }
    return s;
}

template <> float vsum<float>(const float* a, size_t n);
template <> float vdot<float>(const float* a, const float* b, size_t n);
template <> float vsumsq_centered<float>(const float* a, size_t n, float mean);

// out[co] = (bias ? bias[co] : 0) + sum_ci W[co][ci][3][3] (*) in[ci]
// Single image: in is Ci planes of H*W, out is Co planes of H*W.
template <class T>
void conv3x3_plane_set(const T* in, int ci_count, int H, int W,
                       const T* weights, const T* bias,
                       T* out, int co_count) {
    const int SH = (H >= 64) ? 8 : H;
    const int WP = W + 2;
    std::vector<T> pad((size_t)(SH + 2) * WP, T(0));
    const size_t plane = (size_t)H * W;
    for (int co = 0; co < co_count; ++co) {
        const T b = bias ? bias[co] : T(0);
        T* yp = out + co * plane;
        for (size_t i = 0; i < plane; ++i) yp[i] = b;
    }
    for (int y0 = 0; y0 < H; y0 += SH) {
        const int sh = (H - y0) < SH ? (H - y0) : SH;
        for (int ci = 0; ci < ci_count; ++ci) {
            const T* xp = in + ci * plane;
            for (int r = -1; r <= sh; ++r) {
                T* dst = pad.data() + (size_t)(r + 1) * WP;
                const int y = y0 + r;
                dst[0] = T(0);
                dst[W + 1] = T(0);
                if (y < 0 || y >= H)
                    std::memset((void*)(dst + 1), 0, sizeof(T) * W);
                else
                    std::memcpy((void*)(dst + 1), (const void*)(xp + (size_t)y * W), sizeof(T) * W);
            }
            for (int co = 0; co < co_count; ++co) {
                const T* w = weights + ((size_t)co * ci_count + ci) * 9;
                const T w00 = w[0], w01 = w[1], w02 = w[2];
                const T w10 = w[3], w11 = w[4], w12 = w[5];
                const T w20 = w[6], w21 = w[7], w22 = w[8];
                T* yplane = out + co * plane;
                for (int r = 0; r < sh; ++r) {
                    const T* p0 = pad.data() + (size_t)r * WP;
                    const T* p1 = p0 + WP;
                    const T* p2 = p1 + WP;
                    T* yrow = yplane + (size_t)(y0 + r) * W;
                    for (int x = 0; x < W; ++x) {
                        yrow[x] += w00 * p0[x] + w01 * p0[x + 1] + w02 * p0[x + 2] +
                                   w10 * p1[x] + w11 * p1[x + 1] + w12 * p1[x + 2] +
                                   w20 * p2[x] + w21 * p2[x + 1] + w22 * p2[x + 2];
                    }
                }
            }
        }
    }
}

// dW[co][ci][3][3] += in (*) dout, db[co] += sum(dout[co]); single image.
template <class T>
void conv3x3_param_grad(const T* in, int ci_count, int H, int W,
                        const T* dout, int co_count,
                        T* dweights, T* dbias) {
    const int SH = (H >= 64) ? 8 : H;
    const int WP = W + 2;
    std::vector<T> pad((size_t)(SH + 2) * WP, T(0));
    const size_t plane = (size_t)H * W;
    for (int y0 = 0; y0 < H; y0 += SH) {
        const int sh = (H - y0) < SH ? (H - y0) : SH;
        for (int ci = 0; ci < ci_count; ++ci) {
            const T* xp = in + ci * plane;
            for (int r = -1; r <= sh; ++r) {
                T* dst = pad.data() + (size_t)(r + 1) * WP;
                const int y = y0 + r;
                dst[0] = T(0);
                dst[W + 1] = T(0);
                if (y < 0 || y >= H)
                    std::memset((void*)(dst + 1), 0, sizeof(T) * W);
                else
                    std::memcpy((void*)(dst + 1), (const void*)(xp + (size_t)y * W), sizeof(T) * W);
            }
            for (int co = 0; co < co_count; ++co) {
                T acc[9] = {T(0), T(0), T(0), T(0), T(0), T(0), T(0), T(0), T(0)};
                const T* dplane = dout + co * plane;
                for (int r = 0; r < sh; ++r) {
                    const T* p0 = pad.data() + (size_t)r * WP;
                    const T* p1 = p0 + WP;
                    const T* p2 = p1 + WP;
                    const T* drow = dplane + (size_t)(y0 + r) * W;
                    T a0 = T(0), a1 = T(0), a2 = T(0), a3 = T(0), a4 = T(0);
                    T a5 = T(0), a6 = T(0), a7 = T(0), a8 = T(0);
                    for (int x = 0; x < W; ++x) {
                        const T d = drow[x];
                        a0 += d * p0[x];
                        a1 += d * p0[x + 1];
                        a2 += d * p0[x + 2];
                        a3 += d * p1[x];
                        a4 += d * p1[x + 1];
                        a5 += d * p1[x + 2];
                        a6 += d * p2[x];
                        a7 += d * p2[x + 1];
                        a8 += d * p2[x + 2];
                    }
                    acc[0] += a0; acc[1] += a1; acc[2] += a2;
                    acc[3] += a3; acc[4] += a4; acc[5] += a5;
                    acc[6] += a6; acc[7] += a7; acc[8] += a8;
                }
                T* dw = dweights + ((size_t)co * ci_count + ci) * 9;
                for (int t = 0; t < 9; ++t) dw[t] += acc[t];
            }
        }
    }
    if (dbias) {
        for (int co = 0; co < co_count; ++co) dbias[co] += vsum(dout + co * plane, plane);
    }
}

// Float fast path (SIMD, defined in nn_kernels.cpp).
template <>
void conv3x3_param_grad<float>(const float* in, int ci_count, int H, int W,
                               const float* dout, int co_count,
                               float* dweights, float* dbias);

// out[co] = (bias ? bias[co] : 0) + sum_ci W[co][ci] * in[ci]; 1x1 conv.
template <class T>
void conv1x1_plane_set(const T* in, int ci_count, int H, int W,
                       const T* weights, const T* bias,
                       T* out, int co_count) {
    const size_t plane = (size_t)H * W;
    for (int co = 0; co < co_count; ++co) {
        const T b = bias ? bias[co] : T(0);
        T* yp = out + co * plane;
        for (size_t i = 0; i < plane; ++i) yp[i] = b;
        const T* wrow = weights + (size_t)co * ci_count;
        for (int ci = 0; ci < ci_count; ++ci) {
            const T w = wrow[ci];
            const T* xp = in + ci * plane;
            for (size_t i = 0; i < plane; ++i) yp[i] += w * xp[i];
        }
    }
}

template <class T>
void conv1x1_param_grad(const T* in, int ci_count, int H, int W,
                        const T* dout, int co_count,
                        T* dweights, T* dbias) {
    const size_t plane = (size_t)H * W;
    for (int co = 0; co < co_count; ++co) {
        const T* dplane = dout + co * plane;
        T* dwrow = dweights + (size_t)co * ci_count;
        for (int ci = 0; ci < ci_count; ++ci) dwrow[ci] += vdot(dplane, in + ci * plane, plane);
        if (dbias) dbias[co] += vsum(dplane, plane);
    }
}

// ---------------------------------------------------------------------------
// layers
// ---------------------------------------------------------------------------

template <class T>
struct Conv3x3 {
    int ci = 0, co = 0;
    TensorT<T> w, b, dw, db;

    void init_shapes(int ci_, int co_) {
        ci = ci_; co = co_;
        w.resize(co, ci, 3, 3);
        b.resize(co, 1, 1, 1);
        dw.resize(co, ci, 3, 3);
        db.resize(co, 1, 1, 1);
    }

    void init_kaiming(Rng& rng) {
        const double std = std::sqrt(2.0 / (ci * 9.0));
        for (auto& v : w.data) v = (T)(rng.normal() * std);
        b.zero();
    }

    void forward(const TensorT<T>& x, TensorT<T>& y) const {
        y.resize(x.n, co, x.h, x.w);
        for (int n = 0; n < x.n; ++n)
            conv3x3_plane_set(x.plane(n, 0), ci, x.h, x.w, w.data.data(), b.data.data(),
                              y.plane(n, 0), co);
    }

    // dx = dL/dx (overwritten), param grads accumulated.
    void backward(const TensorT<T>& x, const TensorT<T>& dy, TensorT<T>& dx) {
        for (int n = 0; n < x.n; ++n)
            conv3x3_param_grad(x.plane(n, 0), ci, x.h, x.w, dy.plane(n, 0), co,
                               dw.data.data(), db.data.data());
        // input gradient = correlation with the transposed, spatially flipped kernel
        TensorT<T> wt(ci, co, 3, 3);
        for (int o = 0; o < co; ++o)
            for (int i = 0; i < ci; ++i)
                for (int t = 0; t < 9; ++t)
                    wt.data[((size_t)i * co + o) * 9 + t] = w.data[((size_t)o * ci + i) * 9 + (8 - t)];
        dx.resize(x.n, ci, x.h, x.w);
        for (int n = 0; n < x.n; ++n)
            conv3x3_plane_set(dy.plane(n, 0), co, x.h, x.w, wt.data.data(), (const T*)nullptr,
                              dx.plane(n, 0), ci);
    }
};

template <class T>
struct Conv1x1 {
    int ci = 0, co = 0;
    TensorT<T> w, b, dw, db;

    void init_shapes(int ci_, int co_) {
        ci = ci_; co = co_;
        w.resize(co, ci, 1, 1);
        b.resize(co, 1, 1, 1);
        dw.resize(co, ci, 1, 1);
        db.resize(co, 1, 1, 1);
    }

    void init_kaiming(Rng& rng) {
        const double std = std::sqrt(2.0 / (double)ci);
        for (auto& v : w.data) v = (T)(rng.normal() * std);
        b.zero();
    }

    void forward(const TensorT<T>& x, TensorT<T>& y) const {
        y.resize(x.n, co, x.h, x.w);
        for (int n = 0; n < x.n; ++n)
            conv1x1_plane_set(x.plane(n, 0), ci, x.h, x.w, w.data.data(), b.data.data(),
                              y.plane(n, 0), co);
    }

    void backward(const TensorT<T>& x, const TensorT<T>& dy, TensorT<T>& dx) {
        for (int n = 0; n < x.n; ++n)
            conv1x1_param_grad(x.plane(n, 0), ci, x.h, x.w, dy.plane(n, 0), co,
                               dw.data.data(), db.data.data());
        TensorT<T> wt(ci, co, 1, 1);
        for (int o = 0; o < co; ++o)
            for (int i = 0; i < ci; ++i) wt.data[(size_t)i * co + o] = w.data[(size_t)o * ci + i];
        dx.resize(x.n, ci, x.h, x.w);
        for (int n = 0; n < x.n; ++n)
            conv1x1_plane_set(dy.plane(n, 0), co, x.h, x.w, wt.data.data(), (const T*)nullptr,
                              dx.plane(n, 0), ci);
    }
};

// 2x2 stride-2 transposed convolution. Weight layout [ci][co][2][2]; every
// output pixel is produced by exactly one input pixel and one (dy,dx) tap.
template <class T>
struct ConvTranspose2x2 {
    int ci = 0, co = 0;
    TensorT<T> w, b, dw, db;

    void init_shapes(int ci_, int co_) {
        ci = ci_; co = co_;
        w.resize(ci, co, 2, 2);
        b.resize(co, 1, 1, 1);
        dw.resize(ci, co, 2, 2);
        db.resize(co, 1, 1, 1);
    }

    void init_kaiming(Rng& rng) {
        const double std = std::sqrt(2.0 / (ci * 4.0));
        for (auto& v : w.data) v = (T)(rng.normal() * std);
        b.zero();
    }

    void forward(const TensorT<T>& x, TensorT<T>& y) const {
        const int H = x.h, W = x.w;
        y.resize(x.n, co, 2 * H, 2 * W);
        std::vector<T> tmp((size_t)co * H * W);
        for (int n = 0; n < x.n; ++n) {
            for (int dy = 0; dy < 2; ++dy) {
                for (int dx = 0; dx < 2; ++dx) {
                    std::fill(tmp.begin(), tmp.end(), T(0));
                    for (int i = 0; i < ci; ++i) {
                        const T* xp = x.plane(n, i);
                        for (int o = 0; o < co; ++o) {
                            const T wv = w.data[(((size_t)i * co + o) * 2 + dy) * 2 + dx];
                            T* tp = tmp.data() + (size_t)o * H * W;
                            axpy((size_t)H * W, wv, xp, tp);
                        }
                    }
                    for (int o = 0; o < co; ++o) {
                        const T bv = b.data[o];
                        const T* tp = tmp.data() + (size_t)o * H * W;
                        T* yp = y.plane(n, o);
                        for (int yy = 0; yy < H; ++yy) {
                            T* yrow = yp + (size_t)(2 * yy + dy) * (2 * W) + dx;
                            const T* trow = tp + (size_t)yy * W;
                            for (int xx = 0; xx < W; ++xx) yrow[2 * xx] = trow[xx] + bv;
                        }
                    }
                }
            }
        }
    }

    void backward(const TensorT<T>& x, const TensorT<T>& dy, TensorT<T>& dx) {
        const int H = x.h, W = x.w;
        dx.resize(x.n, ci, H, W);
        dx.zero();
        std::vector<T> sub((size_t)co * H * W);
        for (int n = 0; n < x.n; ++n) {
            for (int dyy = 0; dyy < 2; ++dyy) {
                for (int dxx = 0; dxx < 2; ++dxx) {
                    // gather the (dyy,dxx) sub-lattice of dy
                    for (int o = 0; o < co; ++o) {
                        const T* dp = dy.plane(n, o);
                        T* sp = sub.data() + (size_t)o * H * W;
                        for (int yy = 0; yy < H; ++yy) {
                            const T* drow = dp + (size_t)(2 * yy + dyy) * (2 * W) + dxx;
                            T* srow = sp + (size_t)yy * W;
                            for (int xx = 0; xx < W; ++xx) srow[xx] = drow[2 * xx];
                        }
                    }
                    for (int i = 0; i < ci; ++i) {
                        const T* xp = x.plane(n, i);
                        T* dxp = dx.plane(n, i);
                        for (int o = 0; o < co; ++o) {
                            const T* sp = sub.data() + (size_t)o * H * W;
                            const size_t widx = (((size_t)i * co + o) * 2 + dyy) * 2 + dxx;
                            axpy((size_t)H * W, w.data[widx], sp, dxp);
                            dw.data[widx] += vdot(xp, sp, (size_t)H * W);
                        }
                    }
                }
            }
            for (int o = 0; o < co; ++o)
                db.data[o] += vsum(dy.plane(n, o), (size_t)4 * H * W);
        }
    }
};

template <class T>
struct BatchNorm2d {
    int c = 0;
    T momentum = T(0.1);
    T eps = T(1e-5);
    TensorT<T> gamma, beta, dgamma, dbeta;
    TensorT<T> running_mean, running_var;
    std::vector<T> saved_mean, saved_invstd;  // batch stats from the last training forward

    void init_shapes(int c_) {
        c = c_;
        gamma.resize(c, 1, 1, 1);
        beta.resize(c, 1, 1, 1);
        dgamma.resize(c, 1, 1, 1);
        dbeta.resize(c, 1, 1, 1);
        running_mean.resize(c, 1, 1, 1);
        running_var.resize(c, 1, 1, 1);
        gamma.fill(T(1));
        running_var.fill(T(1));
    }

    void forward(const TensorT<T>& x, TensorT<T>& y, bool train) {
        y.resize(x.n, x.c, x.h, x.w);
        const size_t plane = x.plane_size();
        const size_t m = (size_t)x.n * plane;
        if (train) {
            saved_mean.assign(c, T(0));
            saved_invstd.assign(c, T(0));
            for (int ch = 0; ch < c; ++ch) {
                T sum(0);
                for (int n = 0; n < x.n; ++n) sum += vsum(x.plane(n, ch), plane);
                const T mean = sum / (T)m;
                T var_sum(0);
                for (int n = 0; n < x.n; ++n)
                    var_sum += vsumsq_centered(x.plane(n, ch), plane, mean);
                const T var = var_sum / (T)m;  // biased, used for normalization
                const T invstd = T(1) / std::sqrt(var + eps);
                saved_mean[ch] = mean;
                saved_invstd[ch] = invstd;
                const T unbiased = m > 1 ? var_sum / (T)(m - 1) : var;
                running_mean.data[ch] = (T(1) - momentum) * running_mean.data[ch] + momentum * mean;
                running_var.data[ch] = (T(1) - momentum) * running_var.data[ch] + momentum * unbiased;
                const T g = gamma.data[ch] * invstd;
                const T off = beta.data[ch] - g * mean;
                for (int n = 0; n < x.n; ++n) {
                    const T* xp = x.plane(n, ch);
                    T* yp = y.plane(n, ch);
                    for (size_t i = 0; i < plane; ++i) yp[i] = g * xp[i] + off;
                }
            }
        } else {
            for (int ch = 0; ch < c; ++ch) {
                const T invstd = T(1) / std::sqrt(running_var.data[ch] + eps);
                const T g = gamma.data[ch] * invstd;
                const T off = beta.data[ch] - g * running_mean.data[ch];
                for (int n = 0; n < x.n; ++n) {
                    const T* xp = x.plane(n, ch);
                    T* yp = y.plane(n, ch);
                    for (size_t i = 0; i < plane; ++i) yp[i] = g * xp[i] + off;
                }
            }
        }
    }

    // Full backward through the batch statistics; x is the forward input.
    void backward(const TensorT<T>& x, const TensorT<T>& dy, TensorT<T>& dx) {
        dx.resize(x.n, x.c, x.h, x.w);
        const size_t plane = x.plane_size();
        const T m = (T)((size_t)x.n * plane);
        for (int ch = 0; ch < c; ++ch) {
            const T mean = saved_mean[ch];
            const T invstd = saved_invstd[ch];
            T sum_dy(0), sum_dy_xhat(0);
            for (int n = 0; n < x.n; ++n) {
                const T* xp = x.plane(n, ch);
                const T* dp = dy.plane(n, ch);
                const T s0 = vsum(dp, plane);
                const T s1 = vdot(dp, xp, plane) - mean * s0;
                sum_dy += s0;
                sum_dy_xhat += s1 * invstd;
            }
            dbeta.data[ch] += sum_dy;
            dgamma.data[ch] += sum_dy_xhat;
            const T g = gamma.data[ch];
            const T k1 = g * invstd;
            const T k2 = sum_dy / m;
            const T k3 = sum_dy_xhat / m;
            for (int n = 0; n < x.n; ++n) {
                const T* xp = x.plane(n, ch);
                const T* dp = dy.plane(n, ch);
                T* dxp = dx.plane(n, ch);
                for (size_t i = 0; i < plane; ++i) {
                    const T xhat = (xp[i] - mean) * invstd;
                    dxp[i] = k1 * (dp[i] - k2 - xhat * k3);
                }
            }
        }
    }
};

template <class T>
inline void relu_forward(const TensorT<T>& x, TensorT<T>& y) {
    y.resize(x.n, x.c, x.h, x.w);
    for (size_t i = 0; i < x.size(); ++i) y.data[i] = x.data[i] > T(0) ? x.data[i] : T(0);
}

// Mask from the forward output (y > 0 iff pre-activation > 0).
template <class T>
inline void relu_backward(const TensorT<T>& y, TensorT<T>& dy) {
    for (size_t i = 0; i < y.size(); ++i)
        if (!(y.data[i] > T(0))) dy.data[i] = T(0);
}

template <class T>
struct MaxPool2x2 {
    std::vector<uint8_t> idx;  // winner position (0..3) per output cell

    void forward(const TensorT<T>& x, TensorT<T>& y) {
        require(x.h % 2 == 0 && x.w % 2 == 0, "maxpool2x2: input dims must be even");
        const int ho = x.h / 2, wo = x.w / 2;
        y.resize(x.n, x.c, ho, wo);
        idx.assign((size_t)x.n * x.c * ho * wo, 0);
        size_t o = 0;
        for (int n = 0; n < x.n; ++n) {
            for (int ch = 0; ch < x.c; ++ch) {
                const T* xp = x.plane(n, ch);
                T* yp = y.plane(n, ch);
                for (int yy = 0; yy < ho; ++yy) {
                    const T* r0 = xp + (size_t)(2 * yy) * x.w;
                    const T* r1 = r0 + x.w;
                    for (int xx = 0; xx < wo; ++xx, ++o) {
                        const T v0 = r0[2 * xx], v1 = r0[2 * xx + 1];
                        const T v2 = r1[2 * xx], v3 = r1[2 * xx + 1];
                        T best = v0;
                        uint8_t bi = 0;
                        if (v1 > best) { best = v1; bi = 1; }
                        if (v2 > best) { best = v2; bi = 2; }
                        if (v3 > best) { best = v3; bi = 3; }
                        yp[(size_t)yy * wo + xx] = best;
                        idx[o] = bi;
                    }
                }
            }
        }
    }

    void backward(const TensorT<T>& dy, TensorT<T>& dx, int in_h, int in_w) {
        dx.resize(dy.n, dy.c, in_h, in_w);
        dx.zero();
        size_t o = 0;
        for (int n = 0; n < dy.n; ++n) {
            for (int ch = 0; ch < dy.c; ++ch) {
                const T* dp = dy.plane(n, ch);
                T* dxp = dx.plane(n, ch);
                for (int yy = 0; yy < dy.h; ++yy) {
                    for (int xx = 0; xx < dy.w; ++xx, ++o) {
                        const uint8_t bi = idx[o];
                        const int sy = 2 * yy + (bi >> 1);
                        const int sx = 2 * xx + (bi & 1);
                        dxp[(size_t)sy * in_w + sx] += dp[(size_t)yy * dy.w + xx];
                    }
                }
            }
        }
    }
};

// Channel concatenation of two tensors with identical spatial dims.
template <class T>
inline void concat_channels(const TensorT<T>& a, const TensorT<T>& b, TensorT<T>& y) {
    require(a.n == b.n && a.h == b.h && a.w == b.w, "concat: shape mismatch");
    y.resize(a.n, a.c + b.c, a.h, a.w);
    const size_t pa = a.plane_size();
    for (int n = 0; n < a.n; ++n) {
        std::memcpy((void*)y.plane(n, 0), (const void*)a.plane(n, 0), sizeof(T) * pa * a.c);
        std::memcpy((void*)y.plane(n, a.c), (const void*)b.plane(n, 0), sizeof(T) * pa * b.c);
    }
}

template <class T>
inline void split_channels(const TensorT<T>& dy, int ca, TensorT<T>& da, TensorT<T>& db) {
    da.resize(dy.n, ca, dy.h, dy.w);
    db.resize(dy.n, dy.c - ca, dy.h, dy.w);
    const size_t p = dy.plane_size();
    for (int n = 0; n < dy.n; ++n) {
        std::memcpy((void*)da.plane(n, 0), (const void*)dy.plane(n, 0), sizeof(T) * p * ca);
        std::memcpy((void*)db.plane(n, 0), (const void*)dy.plane(n, ca), sizeof(T) * p * (dy.c - ca));
    }
}

}  // namespace maptrace::nn
