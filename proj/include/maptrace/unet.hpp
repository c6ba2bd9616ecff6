#pragma once

// UNet backbone: four down-sampling blocks (conv, conv, maxpool), a
// bottleneck, four up-sampling blocks (transposed conv, conv, conv) with
// skip concatenation, and a final 1x1 projection to class scores. Each
// convolution is followed by batch normalization and ReLU; the head is raw
// logits. Widths double per level starting from base_width.

#include <filesystem>
#include <string>
#include <vector>

#include "maptrace/nn.hpp"

namespace maptrace {

struct UNetConfig {
    int in_channels = 3;
    int num_classes = 6;
    int base_width = 64;
    int depth = 4;  // fixed by the architecture

    void validate() const {
        require(depth == 4, "unet: depth must be 4");
        require(in_channels >= 1, "unet: in_channels must be positive");
        require(num_classes >= 2, "unet: num_classes must be at least 2");
        require(base_width >= 1, "unet: base_width must be positive");
    }
};

template <class T>
struct ParamRef {
    std::string name;
    TensorT<T>* value;
    TensorT<T>* grad;
};

template <class T>
struct StateRef {
    std::string name;
    TensorT<T>* value;
};

namespace detail {

template <class T>
struct ConvUnit {
    nn::Conv3x3<T> conv;
    nn::BatchNorm2d<T> bn;
    TensorT<T> conv_out, relu_out;

    void init_shapes(int ci, int co) {
        conv.init_shapes(ci, co);
        bn.init_shapes(co);
    }

    void forward(const TensorT<T>& x, bool train) {
        conv.forward(x, conv_out);
        bn.forward(conv_out, relu_out, train);
        for (auto& v : relu_out.data)
            if (v < T(0)) v = T(0);
    }

    // dy is the gradient w.r.t. relu_out and is consumed in place.
    void backward(const TensorT<T>& x, TensorT<T>& dy, TensorT<T>& dx) {
        nn::relu_backward(relu_out, dy);
        TensorT<T> dconv;
        bn.backward(conv_out, dy, dconv);
        conv.backward(x, dconv, dx);
    }
};

template <class T>
struct TconvUnit {
    nn::ConvTranspose2x2<T> tconv;
    nn::BatchNorm2d<T> bn;
    TensorT<T> tconv_out, relu_out;

    void init_shapes(int ci, int co) {
        tconv.init_shapes(ci, co);
        bn.init_shapes(co);
    }

    void forward(const TensorT<T>& x, bool train) {
        tconv.forward(x, tconv_out);
        bn.forward(tconv_out, relu_out, train);
        for (auto& v : relu_out.data)
            if (v < T(0)) v = T(0);
    }

    void backward(const TensorT<T>& x, TensorT<T>& dy, TensorT<T>& dx) {
        nn::relu_backward(relu_out, dy);
        TensorT<T> dpre;
        bn.backward(tconv_out, dy, dpre);
        tconv.backward(x, dpre, dx);
    }
};

}  // namespace detail

template <class T>
class UNet {
public:
    explicit UNet(const UNetConfig& cfg) : cfg_(cfg) {
        cfg_.validate();
        const int w = cfg_.base_width;
        int ci = cfg_.in_channels;
        for (int k = 0; k < 4; ++k) {
            const int co = w << k;
            enc_a_[k].init_shapes(ci, co);
            enc_b_[k].init_shapes(co, co);
            ci = co;
        }
        bott_a_.init_shapes(w * 8, w * 16);
        bott_b_.init_shapes(w * 16, w * 16);
        for (int k = 3; k >= 0; --k) {
            const int co = w << k;
            dec_up_[k].init_shapes(co * 2, co);
            dec_a_[k].init_shapes(co * 2, co);  // concat doubles the width
            dec_b_[k].init_shapes(co, co);
        }
        head_.init_shapes(w, cfg_.num_classes);
    }

    static UNet build(const UNetConfig& cfg, uint64_t init_seed) {
        UNet net(cfg);
        net.init_params(init_seed);
        return net;
    }

    const UNetConfig& config() const { return cfg_; }

    void init_params(uint64_t seed) {
        Rng rng(derive_seed(seed, {tag("unet_init")}));
        for (int k = 0; k < 4; ++k) {
            enc_a_[k].conv.init_kaiming(rng);
            enc_b_[k].conv.init_kaiming(rng);
        }
        bott_a_.conv.init_kaiming(rng);
        bott_b_.conv.init_kaiming(rng);
        for (int k = 3; k >= 0; --k) {
            dec_up_[k].tconv.init_kaiming(rng);
            dec_a_[k].conv.init_kaiming(rng);
            dec_b_[k].conv.init_kaiming(rng);
        }
        head_.init_kaiming(rng);
    }

    // Forward to per-pixel class logits. With train=true, batch statistics
    // drive the normalization layers and intermediates are kept for backward.
    const TensorT<T>& forward_logits(const TensorT<T>& x, bool train) {
        require(x.c == cfg_.in_channels, "unet: wrong channel count");
        require(x.h % 16 == 0 && x.w % 16 == 0,
                "unet: spatial dims must be divisible by 16");
        input_ = x;
        const TensorT<T>* cur = &input_;
        for (int k = 0; k < 4; ++k) {
            enc_a_[k].forward(*cur, train);
            enc_b_[k].forward(enc_a_[k].relu_out, train);
            pool_[k].forward(enc_b_[k].relu_out, pool_out_[k]);
            cur = &pool_out_[k];
        }
        bott_a_.forward(*cur, train);
        bott_b_.forward(bott_a_.relu_out, train);
        const TensorT<T>* deep = &bott_b_.relu_out;
        for (int k = 3; k >= 0; --k) {
            dec_up_[k].forward(*deep, train);
            nn::concat_channels(dec_up_[k].relu_out, enc_b_[k].relu_out, concat_out_[k]);
            dec_a_[k].forward(concat_out_[k], train);
            dec_b_[k].forward(dec_a_[k].relu_out, train);
            deep = &dec_b_[k].relu_out;
        }
        head_.forward(*deep, logits_);
        return logits_;
    }

    const TensorT<T>& logits() const { return logits_; }

    // Per-pixel softmax over the class dimension (evaluation mode).
    TensorT<T> forward_scores(const TensorT<T>& x) {
        forward_logits(x, false);
        return softmax_scores(logits_);
    }

    static TensorT<T> softmax_scores(const TensorT<T>& logits) {
        TensorT<T> s(logits.n, logits.c, logits.h, logits.w);
        const size_t plane = logits.plane_size();
        const int C = logits.c;
        for (int n = 0; n < logits.n; ++n) {
            const T* base = logits.plane(n, 0);
            T* out = s.plane(n, 0);
            for (size_t p = 0; p < plane; ++p) {
                T mx = base[p];
                for (int c = 1; c < C; ++c) {
                    const T v = base[c * plane + p];
                    if (v > mx) mx = v;
                }
                T sum(0);
                for (int c = 0; c < C; ++c) {
                    const T e = std::exp(base[c * plane + p] - mx);
                    out[c * plane + p] = e;
                    sum += e;
                }
                const T inv = T(1) / sum;
                for (int c = 0; c < C; ++c) out[c * plane + p] *= inv;
            }
        }
        return s;
    }

    // Backpropagate from dL/dlogits; parameter gradients accumulate.
    void backward(const TensorT<T>& dlogits) {
        TensorT<T> d, tmp;
        head_.backward(dec_b_[0].relu_out, dlogits, d);
        for (int k = 0; k <= 3; ++k) {
            dec_b_[k].backward(dec_a_[k].relu_out, d, tmp);
            TensorT<T> dcat;
            dec_a_[k].backward(concat_out_[k], tmp, dcat);
            TensorT<T> dup;
            nn::split_channels(dcat, dec_up_[k].relu_out.c, dup, dskip_[k]);
            const TensorT<T>& up_in = (k == 3) ? bott_b_.relu_out : dec_b_[k + 1].relu_out;
            dec_up_[k].backward(up_in, dup, d);
        }
        bott_b_.backward(bott_a_.relu_out, d, tmp);
        bott_a_.backward(pool_out_[3], tmp, d);
        for (int k = 3; k >= 0; --k) {
            TensorT<T> denc;
            pool_[k].backward(d, denc, enc_b_[k].relu_out.h, enc_b_[k].relu_out.w);
            for (size_t i = 0; i < denc.size(); ++i) denc.data[i] += dskip_[k].data[i];
            enc_b_[k].backward(enc_a_[k].relu_out, denc, tmp);
            const TensorT<T>& in = (k == 0) ? input_ : pool_out_[k - 1];
            enc_a_[k].backward(in, tmp, d);
        }
    }

    void zero_grad() {
        for (auto& p : parameters()) p.grad->zero();
    }

    std::vector<ParamRef<T>> parameters() {
        std::vector<ParamRef<T>> out;
        auto add_conv_unit = [&out](const std::string& base, auto& unit) {
            out.push_back({base + ".w", &unit.conv.w, &unit.conv.dw});
            out.push_back({base + ".b", &unit.conv.b, &unit.conv.db});
            out.push_back({base + ".bn.gamma", &unit.bn.gamma, &unit.bn.dgamma});
            out.push_back({base + ".bn.beta", &unit.bn.beta, &unit.bn.dbeta});
        };
        for (int k = 0; k < 4; ++k) {
            add_conv_unit("enc" + std::to_string(k + 1) + ".a", enc_a_[k]);
            add_conv_unit("enc" + std::to_string(k + 1) + ".b", enc_b_[k]);
        }
        add_conv_unit("bott.a", bott_a_);
        add_conv_unit("bott.b", bott_b_);
        for (int k = 3; k >= 0; --k) {
            const std::string base = "dec" + std::to_string(k + 1);
            out.push_back({base + ".up.w", &dec_up_[k].tconv.w, &dec_up_[k].tconv.dw});
            out.push_back({base + ".up.b", &dec_up_[k].tconv.b, &dec_up_[k].tconv.db});
            out.push_back({base + ".up.bn.gamma", &dec_up_[k].bn.gamma, &dec_up_[k].bn.dgamma});
            out.push_back({base + ".up.bn.beta", &dec_up_[k].bn.beta, &dec_up_[k].bn.dbeta});
            add_conv_unit(base + ".a", dec_a_[k]);
            add_conv_unit(base + ".b", dec_b_[k]);
        }
        out.push_back({"head.w", &head_.w, &head_.dw});
        out.push_back({"head.b", &head_.b, &head_.db});
        return out;
    }

    // Non-trainable state persisted in checkpoints (BN running statistics).
    std::vector<StateRef<T>> state() {
        std::vector<StateRef<T>> out;
        auto add_bn = [&out](const std::string& base, nn::BatchNorm2d<T>& bn) {
            out.push_back({base + ".running_mean", &bn.running_mean});
            out.push_back({base + ".running_var", &bn.running_var});
        };
        for (int k = 0; k < 4; ++k) {
            add_bn("enc" + std::to_string(k + 1) + ".a.bn", enc_a_[k].bn);
            add_bn("enc" + std::to_string(k + 1) + ".b.bn", enc_b_[k].bn);
        }
        add_bn("bott.a.bn", bott_a_.bn);
        add_bn("bott.b.bn", bott_b_.bn);
        for (int k = 3; k >= 0; --k) {
            const std::string base = "dec" + std::to_string(k + 1);
            add_bn(base + ".up.bn", dec_up_[k].bn);
            add_bn(base + ".a.bn", dec_a_[k].bn);
            add_bn(base + ".b.bn", dec_b_[k].bn);
        }
        return out;
    }

    // Number of skip connections wired into the decoder.
    int skip_connection_count() const { return 4; }

private:
    UNetConfig cfg_;
    detail::ConvUnit<T> enc_a_[4], enc_b_[4];
    nn::MaxPool2x2<T> pool_[4];
    detail::ConvUnit<T> bott_a_, bott_b_;
    detail::TconvUnit<T> dec_up_[4];
    detail::ConvUnit<T> dec_a_[4], dec_b_[4];
    nn::Conv1x1<T> head_;

    TensorT<T> input_, pool_out_[4], concat_out_[4], logits_, dskip_[4];
};

using UNetF = UNet<float>;

// Checkpoint persistence (float models). A self-describing binary archive:
// JSON header with the config and tensor directory, then raw float32 data.
void save_checkpoint(UNet<float>& net, const std::filesystem::path& path);
UNet<float> load_checkpoint(const std::filesystem::path& path);

}  // namespace maptrace
