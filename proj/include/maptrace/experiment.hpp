#pragma once

// Experiment driver: wires dataset manifests, pre-training, the age-tracing
// fine-tuning loop (or the pooled-label baseline), per-year evaluation and
// report emission. Runs journal every completed phase to
// {run_dir}/trace.json and persist every pseudo-label raster, so an
// interrupted run resumes from the last completed tracing step with
// bit-identical results.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "maptrace/metrics.hpp"
#include "maptrace/trace_scheduler.hpp"
#include "maptrace/train.hpp"

namespace maptrace {

enum class Variant { pre, all, trace };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct ExperimentSpec {
    Variant variant = Variant::trace;
    TraceMode direction = TraceMode::bi;
    double epsilon = 0.8;
    std::filesystem::path manifest_path;
    std::filesystem::path eval_manifest_path;  // empty: evaluate on manifest_path
    std::vector<int> eval_years;               // empty: every labeled eval year
    std::filesystem::path output_dir;
    uint64_t seed = 0;
    int base_width = 64;
    TrainConfig pretrain_config = TrainConfig::pretrain_defaults();
    TrainConfig finetune_config = TrainConfig::finetune_defaults();
    int eval_tile_size = 1024;
    int eval_batch = 2;
    std::string run_id;                   // empty: derived from the fields above
    std::filesystem::path pretrain_from;  // optional checkpoint to reuse for step 0

    std::string derived_run_id() const;
    void validate() const;
};

ExperimentSpec spec_from_json_file(const std::filesystem::path& path);
std::string spec_to_json(const ExperimentSpec& spec);

struct YearMetrics {
    int year = 0;
    MetricReport report;
};

struct ExperimentResult {
    std::string run_id;
    std::filesystem::path run_dir;
    std::vector<YearMetrics> per_year;
};

ExperimentResult run_experiment(const ExperimentSpec& spec);

// Tiled sliding-window inference; overlaps from edge clamping are averaged.
ScoreVolume predict_scores(UNet<float>& net, const MapSheet& sheet, int eval_tile_size,
                           int eval_batch);

// Evaluates a model on every labeled (year, patch) of the manifest, merging
// patch confusion matrices per year; UK is excluded from mIoU.
std::vector<YearMetrics> evaluate_model(UNet<float>& net, const Manifest& eval_manifest,
                                        const std::vector<int>& years_filter,
                                        int eval_tile_size, int eval_batch);

void write_reports(const std::filesystem::path& dir, const std::string& model_name,
                   const std::vector<YearMetrics>& per_year, const ClassScheme& scheme);

struct SweepRow {
    double epsilon = 0.0;
    int year = 0;
    double miou = 0.0;
    double oa = 0.0;
    double mean_coverage = 0.0;  // pseudo-label coverage of that year's train maps
};

// One full trace run per epsilon (the epsilon-independent pre-training is
// reused across runs); writes sweep.csv and one plot per evaluation year
// under base.output_dir.
std::vector<SweepRow> sweep_epsilon(const ExperimentSpec& base,
                                    const std::vector<double>& epsilons);

struct LabelComparison {
    int height = 0;
    int width = 0;
    std::vector<std::optional<double>> iou;            // per class
    std::vector<std::vector<uint8_t>> class_overlays;  // per class RGB (a-only/b-only/both)
};

LabelComparison compare_labels(const LabelRaster& a, const LabelRaster& b);

}  // namespace maptrace
