#pragma once

// Year-stamped map sheets, label rasters, manifests, tiling with overlap and
// stitching, and geometric augmentation. All functions here are pure over
// immutable inputs; augmentation takes its rng stream explicitly so parallel
// pipelines stay reproducible.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "maptrace/common.hpp"
#include "maptrace/score_volume.hpp"

namespace maptrace {

struct ClassScheme {
    std::vector<std::string> names;

    int count() const { return (int)names.size(); }

    int id_of(const std::string& name) const {
        for (int i = 0; i < count(); ++i)
            if (names[i] == name) return i;
        return -1;
    }

    // Woodland, Grassland, Settlement, Flowing Water, Standing Water, Unknown.
    static const ClassScheme& defaults() {
        static const ClassScheme s{{"WL", "GL", "SM", "FW", "SW", "UK"}};
        return s;
    }
};

struct MapSheet {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> rgb;  // H*W*3 interleaved
    int year = 0;
    std::string patch_id;
    double pixel_size = 1.0;  // meters per pixel, metadata only
};

struct LabelRaster {
    int height = 0;
    int width = 0;
    std::vector<int8_t> labels;  // values in {-1, 0..C-1}
    ClassScheme scheme = ClassScheme::defaults();
    int year = 0;
    std::string patch_id;
};

struct ManifestEntry {
    std::string patch_id;
    int year = 0;
    std::filesystem::path image_path;                 // resolved
    std::optional<std::filesystem::path> label_path;  // resolved
};

struct Manifest {
    std::vector<ManifestEntry> entries;  // sorted by (patch_id, year)
    std::map<std::string, int> anchor_label_year;  // per patch
    ClassScheme scheme = ClassScheme::defaults();
    std::filesystem::path base_dir;

    std::vector<std::string> patches() const;
    std::vector<int> entry_indices(const std::string& patch) const;
    int anchor_year(const std::string& patch) const;
};

struct TileGrid {
    int tile_size = 0;
    int overlap = 0;
    int height = 0;
    int width = 0;
    std::vector<std::pair<int, int>> origins;  // (row, col), row-major
};

struct TilePair {
    int row0 = 0;
    int col0 = 0;
    std::vector<uint8_t> image;          // tile_size^2 * 3, interleaved
    std::optional<std::vector<int8_t>> labels;  // tile_size^2
};

// Manifest file: JSON object with "entries" (list of {patch_id, year, image,
// label|null}; paths relative to the manifest) and "anchor_label_year"
// (an int applying to every patch, or a {patch_id: year} object).
Manifest load_manifest(const std::filesystem::path& path,
                       const ClassScheme& scheme = ClassScheme::defaults());
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

MapSheet load_map_sheet(const Manifest& manifest, int entry_index);
LabelRaster load_label_raster(const Manifest& manifest, int entry_index);

// Label PNG encoding: class id = pixel value, 255 encodes the ignore marker.
LabelRaster read_label_png(const std::filesystem::path& path, const ClassScheme& scheme);
void write_label_png(const std::filesystem::path& path, const LabelRaster& labels);

TileGrid make_tile_grid(int height, int width, int tile_size, int overlap);

std::vector<TilePair> extract_tiles(const MapSheet& sheet, const LabelRaster* labels,
                                    const TileGrid& grid);

// Overlapping regions are resolved by averaging scores (accumulated in
// double, so an identity extract->stitch round-trip is bitwise exact).
ScoreVolume stitch_scores(const std::vector<ScoreVolume>& tiles, const TileGrid& grid);

// Label mosaics take the last tile in origin order on overlaps.
std::vector<int8_t> stitch_labels(const std::vector<std::vector<int8_t>>& tiles,
                                  const TileGrid& grid);

// Applies one random transform drawn from {horizontal flip} x {vertical
// flip} x {k*90 degree rotation} identically to both tiles.
void augment_pair(std::vector<uint8_t>& rgb, std::vector<int8_t>* labels, int tile_size,
                  Rng& rng);

// Deterministic variant used by tests: explicit draw values.
void apply_transform(std::vector<uint8_t>& rgb, std::vector<int8_t>* labels, int tile_size,
                     bool hflip, bool vflip, int rot_quarter_turns);

}  // namespace maptrace
