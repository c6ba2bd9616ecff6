// Times one training step (forward + loss + backward) and one inference
// forward at the tile sizes the pipeline uses.
#include <chrono>
#include <cstdio>

#include "maptrace/loss.hpp"
#include "maptrace/unet.hpp"

using namespace maptrace;

int main() {
    UNetConfig cfg;
    cfg.base_width = 16;
    auto net = UNet<float>::build(cfg, 1);

    Rng rng(2);
    Tensor x(1, 3, 384, 384);
    for (auto& v : x.data) v = rng.next_float();
    std::vector<int8_t> labels((size_t)384 * 384);
    for (auto& l : labels) l = (int8_t)rng.next_below(6);

    auto step = [&]() {
        net.zero_grad();
        net.forward_logits(x, true);
        Tensor dlogits;
        masked_softmax_ce_loss(net.logits(), labels.data(), &dlogits);
        net.backward(dlogits);
    };
    step();  // warm
    auto t0 = std::chrono::steady_clock::now();
    const int reps = 5;
    for (int i = 0; i < reps; ++i) step();
    auto t1 = std::chrono::steady_clock::now();
    std::printf("train step (bw16, 384^2, batch1): %.3f s\n",
                std::chrono::duration<double>(t1 - t0).count() / reps);

    Tensor xe(1, 3, 512, 512);
    for (auto& v : xe.data) v = rng.next_float();
    net.forward_scores(xe);
    t0 = std::chrono::steady_clock::now();
    net.forward_scores(xe);
    t1 = std::chrono::steady_clock::now();
    std::printf("eval forward (bw16, 512^2):       %.3f s\n",
                std::chrono::duration<double>(t1 - t0).count());
    return 0;
}
