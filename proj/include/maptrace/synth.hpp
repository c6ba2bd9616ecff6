#pragma once

// Procedural generator for sequential map datasets with controllable
// cartographic style drift and land-use change. Styles interpolate linearly
// between a base palette and a rotated target palette (class c drifts toward
// the base color of the next class), so a fixed-style model degrades with
// temporal distance while adjacent years stay similar. Rendering noise and
// stipple textures are seeded per patch, not per year: with zero drift and
// zero land-use change, every year renders identically.

#include <array>
#include <filesystem>
#include <vector>

#include "maptrace/raster.hpp"

namespace maptrace {

struct SynthConfig {
    int num_years = 7;
    int start_year = 1900;
    int year_gap = 10;
    int raster_size = 512;
    int num_patches = 4;
    uint64_t seed = 0;
    double style_drift_rate = 0.15;     // palette-rotation fraction per year step
    double landuse_change_rate = 0.03;  // max fraction of pixels re-labeled per step
    std::vector<double> class_mix = {0.24, 0.30, 0.18, 0.08, 0.10, 0.10};  // WL..UK
    double noise_sigma = 14.0;          // rendering noise, 8-bit units
    bool era_break = false;             // abrupt sepia shift in the later half
    std::string anchor_pos = "middle";  // "middle" or "last" year carries the label

    void validate() const;
    int anchor_year() const;
};

struct SynthMeta {
    std::vector<int> years;
    int anchor_label_year = 0;
    // palette[year_index][class] = rgb
    std::vector<std::vector<std::array<double, 3>>> palette;
    // churn[patch][t] = exact fraction of pixels whose label changed t -> t+1
    std::vector<std::vector<double>> churn;
};

struct SynthResult {
    std::vector<std::string> patch_ids;
    // indexed [patch][year_index]
    std::vector<std::vector<MapSheet>> sheets;
    std::vector<std::vector<LabelRaster>> labels;
    SynthMeta meta;
};

SynthResult generate_sequence(const SynthConfig& config);

// Writes PNGs plus manifest.json (every label listed), manifest_train.json
// (labels only at the anchor year, eval patch excluded) and
// manifest_eval.json (the held-out patch with labels for all years), and
// synth_meta.json. Returns the full manifest.
Manifest write_synth_dataset(const SynthResult& result, const SynthConfig& config,
                             const std::filesystem::path& out_dir,
                             const std::string& eval_patch);

// Splits an all-labels manifest into (train, eval): disjoint patch sets, the
// eval patch keeps labels for every year, train patches keep only the label
// at their anchor year.
std::pair<Manifest, Manifest> holdout_split(const Manifest& full, const std::string& eval_patch);

SynthMeta read_synth_meta(const std::filesystem::path& path);
void write_synth_meta(const SynthMeta& meta, const std::filesystem::path& path);

}  // namespace maptrace
