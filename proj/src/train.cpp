#include "maptrace/train.hpp"

#include <cmath>
#include <fstream>
#include <iostream>

namespace maptrace {

double lr_at(const TrainConfig& config, int epoch) {
    require(epoch >= 0 && epoch < config.epochs, "lr_at: epoch out of range");
    int drops = 0;
    for (int d : config.lr_drop_epochs)
        if (d <= epoch) ++drops;
    return config.initial_lr * std::pow(config.lr_drop_factor, drops);
}

double masked_cross_entropy(const std::vector<ScoreVolume>& scores,
                            const std::vector<LabelRaster>& labels) {
    require(scores.size() == labels.size(), "masked loss: batch size mismatch");
    double sum = 0.0;
    size_t count = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
        const ScoreVolume& s = scores[i];
        const LabelRaster& l = labels[i];
        require(s.height == l.height && s.width == l.width, "masked loss: shape mismatch");
        const size_t plane = s.plane_size();
        for (size_t p = 0; p < plane; ++p) {
            const int8_t y = l.labels[p];
            if (y == kIgnoreLabel) continue;
            require(y >= 0 && y < s.channels, "masked loss: label out of range");
            const double v = std::max((double)s.scores[(size_t)y * plane + p], 1e-30);
            sum -= std::log(v);
            ++count;
        }
    }
    if (count == 0) {
        std::cerr << "warning: masked_cross_entropy over fully masked batch, returning 0\n";
        return 0.0;
    }
    return sum / (double)count;
}

void Adam::init(const std::vector<ParamRef<float>>& params) {
    t = 0;
    m.clear();
    v.clear();
    for (const auto& p : params) {
        m.emplace_back(p.value->size(), 0.0f);
        v.emplace_back(p.value->size(), 0.0f);
    }
}

void Adam::step(const std::vector<ParamRef<float>>& params, double lr, double weight_decay) {
    require(m.size() == params.size(), "adam: not initialized for this parameter set");
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, t);
    const double bc2 = 1.0 - std::pow(beta2, t);
    for (size_t i = 0; i < params.size(); ++i) {
        float* p = params[i].value->data.data();
        const float* g = params[i].grad->data.data();
        float* mi = m[i].data();
        float* vi = v[i].data();
        const size_t n = params[i].value->size();
        for (size_t j = 0; j < n; ++j) {
            const double grad = (double)g[j] + weight_decay * (double)p[j];
            const double mj = beta1 * (double)mi[j] + (1.0 - beta1) * grad;
            const double vj = beta2 * (double)vi[j] + (1.0 - beta2) * grad * grad;
            mi[j] = (float)mj;
            vi[j] = (float)vj;
            p[j] = (float)((double)p[j] - lr * (mj / bc1) / (std::sqrt(vj / bc2) + eps));
        }
    }
}

namespace {

struct TileSample {
    std::vector<uint8_t> image;
    std::vector<int8_t> labels;
};

std::vector<TileSample> build_tiles(const std::vector<TrainSample>& samples,
                                    const TrainConfig& config) {
    std::vector<TileSample> tiles;
    for (const auto& s : samples) {
        require(s.sheet && s.labels, "train: sample missing sheet or labels");
        require(s.sheet->height == s.labels->height && s.sheet->width == s.labels->width,
                "train: sheet/label shape mismatch");
        const TileGrid grid =
            make_tile_grid(s.sheet->height, s.sheet->width, config.tile_size, config.overlap);
        for (auto& t : extract_tiles(*s.sheet, s.labels, grid))
            tiles.push_back({std::move(t.image), std::move(*t.labels)});
    }
    require(!tiles.empty(), "train: empty training set");
    return tiles;
}

}  // namespace

std::vector<TrainLogRow> train_phase(UNet<float>& net, const std::vector<TrainSample>& samples,
                                     const TrainConfig& config, int trace_step,
                                     uint64_t run_seed) {
    require(config.tile_size % 16 == 0, "train: tile size must be divisible by 16");
    const std::vector<TileSample> tiles = build_tiles(samples, config);
    const char* phase_name =
        config.phase == TrainConfig::Phase::pretrain ? "pretrain" : "finetune";

    Adam opt;
    opt.init(net.parameters());
    const auto params = net.parameters();

    std::vector<TrainLogRow> log;
    std::vector<size_t> order(tiles.size());
    const int ts = config.tile_size;
    const size_t plane = (size_t)ts * ts;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = lr_at(config, epoch);
        Rng rng(derive_seed(run_seed, {tag(phase_name), (uint64_t)trace_step, (uint64_t)epoch}));
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng.shuffle(order.data(), order.size());

        double loss_sum = 0.0;
        size_t tile_count = 0;
        for (size_t start = 0; start < order.size(); start += config.batch_size) {
            const int bs = (int)std::min((size_t)config.batch_size, order.size() - start);
            Tensor x(bs, 3, ts, ts);
            std::vector<int8_t> labels((size_t)bs * plane);
            for (int b = 0; b < bs; ++b) {
                std::vector<uint8_t> img = tiles[order[start + b]].image;
                std::vector<int8_t> lab = tiles[order[start + b]].labels;
                augment_pair(img, &lab, ts, rng);
                for (int c = 0; c < 3; ++c) {
                    float* dst = x.plane(b, c);
                    for (size_t p = 0; p < plane; ++p)
                        dst[p] = (float)img[p * 3 + c] * (1.0f / 255.0f);
                }
                std::copy(lab.begin(), lab.end(), labels.begin() + (size_t)b * plane);
            }
            net.zero_grad();
            net.forward_logits(x, true);
            Tensor dlogits;
            const double loss = masked_softmax_ce_loss(net.logits(), labels.data(), &dlogits);
            net.backward(dlogits);
            opt.step(params, lr, config.weight_decay);
            loss_sum += loss * bs;
            tile_count += bs;
        }
        log.push_back({phase_name, trace_step, epoch, lr, loss_sum / (double)tile_count});
    }
    return log;
}

std::vector<TrainLogRow> pretrain(UNet<float>& net, const std::vector<TrainSample>& anchor_pairs,
                                  const TrainConfig& config, uint64_t run_seed) {
    TrainConfig cfg = config;
    cfg.phase = TrainConfig::Phase::pretrain;
    return train_phase(net, anchor_pairs, cfg, 0, run_seed);
}

std::vector<TrainLogRow> finetune_step(UNet<float>& net,
                                       const std::vector<TrainSample>& training_set,
                                       const TrainConfig& config, int trace_step,
                                       uint64_t run_seed) {
    TrainConfig cfg = config;
    cfg.phase = TrainConfig::Phase::finetune;
    return train_phase(net, training_set, cfg, trace_step, run_seed);
}

void append_log_csv(const std::filesystem::path& run_dir,
                    const std::vector<TrainLogRow>& rows) {
    const std::filesystem::path path = run_dir / "log.csv";
    const bool fresh = !std::filesystem::exists(path);
    std::ofstream out(path, std::ios::app);
    require(out.good(), "log: cannot open " + path.string());
    if (fresh) out << "phase,trace_step,epoch,lr,mean_loss\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%d,%d,%.3e,%.9f\n", r.phase.c_str(), r.trace_step,
                      r.epoch, r.lr, r.mean_loss);
        out << buf;
    }
    require(out.good(), "log: write failed for " + path.string());
}

}  // namespace maptrace
