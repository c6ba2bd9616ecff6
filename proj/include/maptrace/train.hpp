#pragma once

// Training engine: masked cross-entropy over tile batches, Adam with the
// step learning-rate schedules, deterministic shuffling/augmentation streams
// derived per (seed, phase, step, epoch) so interrupted runs can resume at
// step granularity.

#include <string>
#include <vector>

#include "maptrace/loss.hpp"
#include "maptrace/raster.hpp"
#include "maptrace/unet.hpp"

namespace maptrace {

struct TrainConfig {
    enum class Phase { pretrain, finetune };
    Phase phase = Phase::pretrain;
    int epochs = 20;
    double initial_lr = 1e-4;
    std::vector<int> lr_drop_epochs = {10, 15};
    double lr_drop_factor = 0.1;
    double weight_decay = 0.01;
    int batch_size = 8;
    int tile_size = 384;
    int overlap = 128;

    static TrainConfig pretrain_defaults() { return TrainConfig{}; }

    static TrainConfig finetune_defaults() {
        TrainConfig c;
        c.phase = Phase::finetune;
        c.epochs = 5;
        c.initial_lr = 1e-5;
        c.lr_drop_epochs = {3};
        return c;
    }
};

// initial_lr * factor^(number of drop epochs <= epoch)
double lr_at(const TrainConfig& config, int epoch);

// Mean of -log s_y over pixels with a real label. Returns 0 (with a warning
// on stderr) when every pixel carries the ignore marker.
double masked_cross_entropy(const std::vector<ScoreVolume>& scores,
                            const std::vector<LabelRaster>& labels);

struct Adam {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int t = 0;
    std::vector<std::vector<float>> m, v;

    void init(const std::vector<ParamRef<float>>& params);
    // Coupled L2: weight decay is added to the gradient before the moments.
    void step(const std::vector<ParamRef<float>>& params, double lr, double weight_decay);
};

struct TrainSample {
    const MapSheet* sheet = nullptr;
    const LabelRaster* labels = nullptr;
};

struct TrainLogRow {
    std::string phase;
    int trace_step = 0;
    int epoch = 0;
    double lr = 0.0;
    double mean_loss = 0.0;
};

// One training phase over all tiles of all samples (one epoch = one shuffled
// pass). trace_step tags the log rows and seeds the per-epoch rng streams.
std::vector<TrainLogRow> train_phase(UNet<float>& net, const std::vector<TrainSample>& samples,
                                     const TrainConfig& config, int trace_step,
                                     uint64_t run_seed);

std::vector<TrainLogRow> pretrain(UNet<float>& net, const std::vector<TrainSample>& anchor_pairs,
                                  const TrainConfig& config, uint64_t run_seed);

std::vector<TrainLogRow> finetune_step(UNet<float>& net,
                                       const std::vector<TrainSample>& training_set,
                                       const TrainConfig& config, int trace_step,
                                       uint64_t run_seed);

// Appends rows to {run_dir}/log.csv, writing the header if the file is new.
void append_log_csv(const std::filesystem::path& run_dir,
                    const std::vector<TrainLogRow>& rows);

}  // namespace maptrace
