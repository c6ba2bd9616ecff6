#pragma once

#include <array>
#include <cstring>
#include <vector>

#include "maptrace/common.hpp"

namespace maptrace {

// Dense NCHW tensor. Templated on the scalar so the network can be
// instantiated in double precision for finite-difference checks; the
// training path uses float.
template <class T>
struct TensorT {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> data;

    TensorT() = default;
    TensorT(int n_, int c_, int h_, int w_) : n(n_), c(c_), h(h_), w(w_), data((size_t)n_ * c_ * h_ * w_, T(0)) {}

    static TensorT zeros(int n, int c, int h, int w) { return TensorT(n, c, h, w); }

    size_t size() const { return data.size(); }
    size_t plane_size() const { return (size_t)h * w; }
    bool same_shape(const TensorT& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }

    T* plane(int in, int ic) { return data.data() + ((size_t)in * c + ic) * plane_size(); }
    const T* plane(int in, int ic) const { return data.data() + ((size_t)in * c + ic) * plane_size(); }

    T& at(int in, int ic, int iy, int ix) { return data[(((size_t)in * c + ic) * h + iy) * w + ix]; }
    T at(int in, int ic, int iy, int ix) const { return data[(((size_t)in * c + ic) * h + iy) * w + ix]; }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }
    void zero() { fill(T(0)); }

    void resize(int n_, int c_, int h_, int w_) {
        n = n_; c = c_; h = h_; w = w_;
        data.assign((size_t)n_ * c_ * h_ * w_, T(0));
    }
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

// y += a * x
template <class T>
inline void axpy(size_t n, T a, const T* x, T* y) {
    for (size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

}  // namespace maptrace
