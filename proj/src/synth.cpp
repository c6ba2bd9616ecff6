#include "maptrace/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "maptrace/image_io.hpp"

namespace maptrace {

namespace {

constexpr int kNumClasses = 6;
constexpr int kBorder = 3;  // UK map margin, never re-labeled

// The five substantive classes sit at equally spaced hues; style drift
// rotates the whole ring (a full class position per 1/drift years), so any
// fixed-style model sees the color-to-class mapping slide toward its
// neighbor while the classes of any single year stay equally separable.
// UK renders as near-static paper beige. Stipple densities are fixed per
// class; the drift is purely chromatic.
constexpr std::array<double, 5> kBaseHue = {159, 87, 15, 231, 303};  // WL GL SM FW SW
constexpr std::array<double, 5> kBaseSat = {0.48, 0.34, 0.52, 0.46, 0.55};
constexpr std::array<double, 5> kBaseVal = {0.55, 0.82, 0.70, 0.76, 0.52};
constexpr std::array<double, 6> kBaseStipple = {0.35, 0.08, 0.15, 0.00, 0.05, 0.02};
constexpr double kHueStepPerClass = 72.0;  // hue distance between neighbors

uint64_t pixel_hash(uint64_t base, uint64_t a, uint64_t b, uint64_t c) {
    uint64_t s = base ^ (a * 0x9e3779b97f4a7c15ULL) ^ (b * 0xc2b2ae3d27d4eb4fULL) ^
                 (c * 0x165667b19e3779f9ULL);
    return splitmix64(s);
}

double hash_unit(uint64_t h) { return (double)(h >> 11) * 0x1.0p-53; }

std::array<double, 3> hsv_to_rgb(double h, double s, double v) {
    h = std::fmod(std::fmod(h, 360.0) + 360.0, 360.0) / 60.0;
    const int i = (int)h;
    const double f = h - i;
    const double p = v * (1.0 - s);
    const double q = v * (1.0 - s * f);
    const double t = v * (1.0 - s * (1.0 - f));
    double r, g, b;
    switch (i % 6) {
        case 0: r = v; g = t; b = p; break;
        case 1: r = q; g = v; b = p; break;
        case 2: r = p; g = v; b = t; break;
        case 3: r = p; g = q; b = v; break;
        case 4: r = t; g = p; b = v; break;
        default: r = v; g = p; b = q; break;
    }
    return {r * 255.0, g * 255.0, b * 255.0};
}

struct StyleParams {
    std::array<std::array<double, 3>, 6> color;
    std::array<double, 6> stipple;
};

struct PaletteSet {
    std::array<double, 5> hue, sat, val;  // per-seed jittered ring
    std::array<double, 3> uk;
};

PaletteSet make_palettes(uint64_t seed) {
    PaletteSet p;
    Rng rng(derive_seed(seed, {tag("palette")}));
    const double ring_offset = rng.next_double() * 20.0 - 10.0;
    for (int c = 0; c < 5; ++c) {
        p.hue[c] = kBaseHue[c] + ring_offset + (rng.next_double() * 8.0 - 4.0);
        p.sat[c] = std::clamp(kBaseSat[c] + (rng.next_double() * 0.06 - 0.03), 0.1, 0.9);
        p.val[c] = std::clamp(kBaseVal[c] + (rng.next_double() * 0.06 - 0.03), 0.2, 0.95);
    }
    p.uk = {230.0 + rng.next_int(-6, 6), 224.0 + rng.next_int(-6, 6),
            205.0 + rng.next_int(-6, 6)};
    return p;
}

StyleParams style_at(const PaletteSet& palettes, const SynthConfig& cfg, int t) {
    const double angle = kHueStepPerClass * cfg.style_drift_rate * t;
    StyleParams s;
    for (int c = 0; c < 5; ++c) {
        s.color[c] = hsv_to_rgb(palettes.hue[c] + angle, palettes.sat[c], palettes.val[c]);
        s.stipple[c] = kBaseStipple[c];
    }
    // paper tone ages very slightly with the sequence
    const double fade = std::min(1.0, cfg.style_drift_rate * t) * 10.0;
    s.color[5] = {palettes.uk[0] - fade, palettes.uk[1] - fade, palettes.uk[2] - fade * 1.5};
    s.stipple[5] = kBaseStipple[5];
    if (cfg.era_break && t >= cfg.num_years / 2) {
        for (int c = 0; c < kNumClasses; ++c) {
            s.color[c][0] += 24;
            s.color[c][1] += 12;
            s.color[c][2] -= 18;
        }
    }
    return s;
}

std::vector<int8_t> base_labels(const SynthConfig& cfg, int patch_idx) {
    const int S = cfg.raster_size;
    Rng rng(derive_seed(cfg.seed, {tag("labels"), (uint64_t)patch_idx}));

    // Voronoi landscape over the non-river classes.
    const int n_sites = std::max(24, S * S / 8192);
    struct Site { int y, x, cls; };
    std::vector<Site> sites;
    // sampling weights: WL, GL, SM, SW, UK (FW comes from carved rivers)
    const int site_classes[5] = {0, 1, 2, 4, 5};
    std::array<double, 5> w;
    double wsum = 0.0;
    for (int i = 0; i < 5; ++i) {
        w[i] = cfg.class_mix[site_classes[i]];
        wsum += w[i];
    }
    for (int i = 0; i < n_sites; ++i) {
        double u = rng.next_double() * wsum;
        int cls = site_classes[4];
        for (int k = 0; k < 5; ++k) {
            if (u < w[k]) {
                cls = site_classes[k];
                break;
            }
            u -= w[k];
        }
        sites.push_back({rng.next_int(0, S - 1), rng.next_int(0, S - 1), cls});
    }
    std::vector<int8_t> labels((size_t)S * S);
    for (int y = 0; y < S; ++y)
        for (int x = 0; x < S; ++x) {
            int64_t best = INT64_MAX;
            int cls = 5;
            for (const auto& s : sites) {
                const int64_t dy = y - s.y, dx = x - s.x;
                const int64_t d = dy * dy + dx * dx;
                if (d < best) {
                    best = d;
                    cls = s.cls;
                }
            }
            labels[(size_t)y * S + x] = (int8_t)cls;
        }

    // carve 1-2 meandering rivers (FW)
    const int n_rivers = 1 + rng.next_int(0, 1);
    for (int r = 0; r < n_rivers; ++r) {
        const bool vertical = rng.next_bool();
        double pos = rng.next_int(S / 5, 4 * S / 5);
        double drift = 0.0;
        const int width = rng.next_int(4, 8);
        for (int along = 0; along < S; ++along) {
            drift += (rng.next_double() - 0.5) * 1.2;
            drift = std::clamp(drift, -3.0, 3.0);
            pos = std::clamp(pos + drift * 0.35, (double)width, (double)(S - 1 - width));
            const int center = (int)pos;
            for (int off = -width; off <= width; ++off) {
                const int y = vertical ? along : center + off;
                const int x = vertical ? center + off : along;
                if (y >= 0 && y < S && x >= 0 && x < S) labels[(size_t)y * S + x] = 3;
            }
        }
    }

    // UK margin frame (map border)
    for (int y = 0; y < S; ++y)
        for (int x = 0; x < S; ++x)
            if (y < kBorder || x < kBorder || y >= S - kBorder || x >= S - kBorder)
                labels[(size_t)y * S + x] = 5;
    return labels;
}

// Evolves labels by region-growing blob perturbations; returns the exact net
// changed-pixel fraction relative to `prev`.
double evolve_labels(const SynthConfig& cfg, int patch_idx, int t,
                     const std::vector<int8_t>& prev, std::vector<int8_t>& cur) {
    const int S = cfg.raster_size;
    cur = prev;
    const size_t total = (size_t)S * S;
    const size_t budget = (size_t)(cfg.landuse_change_rate * (double)total);
    if (budget == 0) return 0.0;
    Rng rng(derive_seed(cfg.seed, {tag("evolve"), (uint64_t)patch_idx, (uint64_t)t}));

    // proposal classes: everything except FW (river courses stay put)
    const int blob_classes[5] = {0, 1, 2, 4, 5};
    size_t diff = 0;
    int stale = 0;
    std::vector<std::pair<size_t, int8_t>> undo;
    while (diff < (size_t)(0.9 * (double)budget) && stale < 300) {
        const int cy = rng.next_int(kBorder, S - 1 - kBorder);
        const int cx = rng.next_int(kBorder, S - 1 - kBorder);
        const int radius = rng.next_int(6, std::max(8, S / 16));
        const int8_t cls = (int8_t)blob_classes[rng.next_below(5)];
        undo.clear();
        int64_t delta = 0;
        const int y0 = std::max(kBorder, cy - radius), y1 = std::min(S - 1 - kBorder, cy + radius);
        const int x0 = std::max(kBorder, cx - radius), x1 = std::min(S - 1 - kBorder, cx + radius);
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const int dy = y - cy, dx = x - cx;
                if (dy * dy + dx * dx > radius * radius) continue;
                const size_t i = (size_t)y * S + x;
                if (cur[i] == cls) continue;
                delta += (cls != prev[i]) - (cur[i] != prev[i]);
                undo.emplace_back(i, cur[i]);
                cur[i] = cls;
            }
        if (delta <= 0 || diff + (size_t)std::max<int64_t>(delta, 0) > budget) {
            for (auto& [i, v] : undo) cur[i] = v;
            ++stale;
        } else {
            diff += (size_t)delta;
            stale = 0;
        }
    }
    return (double)diff / (double)total;
}

MapSheet render(const SynthConfig& cfg, int patch_idx, const std::string& patch_id, int year,
                const std::vector<int8_t>& labels, const StyleParams& style) {
    const int S = cfg.raster_size;
    MapSheet sheet;
    sheet.height = sheet.width = S;
    sheet.year = year;
    sheet.patch_id = patch_id;
    sheet.rgb.resize((size_t)S * S * 3);
    const uint64_t noise_base = derive_seed(cfg.seed, {tag("noise"), (uint64_t)patch_idx});
    const uint64_t stipple_base = derive_seed(cfg.seed, {tag("stipple"), (uint64_t)patch_idx});
    // triangular noise (sum of two uniforms) scaled to the requested sigma
    const double noise_scale = cfg.noise_sigma * 2.449489742783178;
    for (int y = 0; y < S; ++y) {
        for (int x = 0; x < S; ++x) {
            const size_t i = (size_t)y * S + x;
            const int cls = labels[i];
            const bool dot =
                hash_unit(pixel_hash(stipple_base, (uint64_t)(y >> 2), (uint64_t)(x >> 2), 7)) <
                style.stipple[cls];
            for (int ch = 0; ch < 3; ++ch) {
                const double u1 =
                    hash_unit(pixel_hash(noise_base, (uint64_t)y, (uint64_t)x, (uint64_t)ch));
                const double u2 = hash_unit(
                    pixel_hash(noise_base, (uint64_t)y, (uint64_t)x, (uint64_t)(ch + 3)));
                double v = style.color[cls][ch] + (u1 + u2 - 1.0) * noise_scale;
                if (dot) v -= 60.0;
                sheet.rgb[i * 3 + ch] = (uint8_t)std::clamp((int)std::lround(v), 0, 255);
            }
        }
    }
    return sheet;
}

}  // namespace

void SynthConfig::validate() const {
    require(num_years >= 1, "synth: num_years must be positive");
    require(year_gap >= 1, "synth: year_gap must be positive");
    require(raster_size >= 32, "synth: raster_size too small");
    require(num_patches >= 1 && num_patches <= 100, "synth: num_patches must be in [1,100]");
    require((int)class_mix.size() == kNumClasses, "synth: class_mix must have 6 entries");
    double sum = 0.0;
    for (double v : class_mix) {
        require(v >= 0.0, "synth: class_mix entries must be non-negative");
        sum += v;
    }
    require(std::abs(sum - 1.0) <= 1e-6, "synth: class_mix must sum to 1");
    require(style_drift_rate >= 0.0 && style_drift_rate <= 1.0,
            "synth: style_drift_rate must be in [0,1]");
    require(landuse_change_rate >= 0.0 && landuse_change_rate <= 1.0,
            "synth: landuse_change_rate must be in [0,1]");
    require(anchor_pos == "middle" || anchor_pos == "last",
            "synth: anchor_pos must be 'middle' or 'last'");
}

int SynthConfig::anchor_year() const {
    const int idx = anchor_pos == "last" ? num_years - 1 : num_years / 2;
    return start_year + idx * year_gap;
}

SynthResult generate_sequence(const SynthConfig& config) {
    config.validate();
    SynthResult result;
    result.meta.anchor_label_year = config.anchor_year();
    for (int t = 0; t < config.num_years; ++t)
        result.meta.years.push_back(config.start_year + t * config.year_gap);

    const PaletteSet palettes = make_palettes(config.seed);
    std::vector<StyleParams> styles;
    for (int t = 0; t < config.num_years; ++t) {
        styles.push_back(style_at(palettes, config, t));
        std::vector<std::array<double, 3>> row;
        for (int c = 0; c < kNumClasses; ++c) row.push_back(styles[t].color[c]);
        result.meta.palette.push_back(std::move(row));
    }

    for (int p = 0; p < config.num_patches; ++p) {
        char buf[8];
        std::snprintf(buf, sizeof(buf), "p%02d", p);
        const std::string patch_id = buf;
        result.patch_ids.push_back(patch_id);

        std::vector<std::vector<int8_t>> year_labels(config.num_years);
        year_labels[0] = base_labels(config, p);
        std::vector<double> churn;
        for (int t = 1; t < config.num_years; ++t)
            churn.push_back(evolve_labels(config, p, t, year_labels[t - 1], year_labels[t]));
        result.meta.churn.push_back(std::move(churn));

        std::vector<MapSheet> sheets;
        std::vector<LabelRaster> labels;
        for (int t = 0; t < config.num_years; ++t) {
            const int year = result.meta.years[t];
            sheets.push_back(render(config, p, patch_id, year, year_labels[t], styles[t]));
            LabelRaster lr;
            lr.height = lr.width = config.raster_size;
            lr.labels = std::move(year_labels[t]);
            lr.year = year;
            lr.patch_id = patch_id;
            labels.push_back(std::move(lr));
        }
        result.sheets.push_back(std::move(sheets));
        result.labels.push_back(std::move(labels));
    }
    return result;
}

Manifest write_synth_dataset(const SynthResult& result, const SynthConfig& config,
                             const std::filesystem::path& out_dir,
                             const std::string& eval_patch) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir / "images");
    fs::create_directories(out_dir / "labels");

    Manifest full;
    full.base_dir = out_dir;
    for (size_t p = 0; p < result.patch_ids.size(); ++p) {
        for (size_t t = 0; t < result.sheets[p].size(); ++t) {
            const MapSheet& sheet = result.sheets[p][t];
            const LabelRaster& labels = result.labels[p][t];
            const std::string stem =
                result.patch_ids[p] + "_" + std::to_string(sheet.year) + ".png";
            write_png_rgb8(out_dir / "images" / stem, sheet.width, sheet.height,
                           sheet.rgb.data());
            write_label_png(out_dir / "labels" / stem, labels);
            ManifestEntry e;
            e.patch_id = result.patch_ids[p];
            e.year = sheet.year;
            e.image_path = out_dir / "images" / stem;
            e.label_path = out_dir / "labels" / stem;
            full.entries.push_back(std::move(e));
        }
        full.anchor_label_year[result.patch_ids[p]] = result.meta.anchor_label_year;
    }
    std::sort(full.entries.begin(), full.entries.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) {
                  return std::tie(a.patch_id, a.year) < std::tie(b.patch_id, b.year);
              });

    save_manifest(full, out_dir / "manifest.json");
    write_synth_meta(result.meta, out_dir / "synth_meta.json");
    if (!eval_patch.empty()) {
        auto [train, eval] = holdout_split(full, eval_patch);
        save_manifest(train, out_dir / "manifest_train.json");
        save_manifest(eval, out_dir / "manifest_eval.json");
    }
    return full;
}

std::pair<Manifest, Manifest> holdout_split(const Manifest& full, const std::string& eval_patch) {
    const auto patches = full.patches();
    require(patches.size() >= 2, "holdout: need at least two patches");
    require(std::find(patches.begin(), patches.end(), eval_patch) != patches.end(),
            "holdout: unknown patch id " + eval_patch);
    Manifest train, eval;
    train.base_dir = full.base_dir;
    train.scheme = full.scheme;
    eval.base_dir = full.base_dir;
    eval.scheme = full.scheme;
    for (const auto& e : full.entries) {
        if (e.patch_id == eval_patch) {
            eval.entries.push_back(e);  // evaluation keeps labels for all years
        } else {
            ManifestEntry te = e;
            if (te.year != full.anchor_year(te.patch_id)) te.label_path.reset();
            train.entries.push_back(std::move(te));
        }
    }
    for (const auto& [patch, year] : full.anchor_label_year) {
        if (patch == eval_patch)
            eval.anchor_label_year[patch] = year;
        else
            train.anchor_label_year[patch] = year;
    }
    return {train, eval};
}

void write_synth_meta(const SynthMeta& meta, const std::filesystem::path& path) {
    using nlohmann::json;
    json doc;
    doc["years"] = meta.years;
    doc["anchor_label_year"] = meta.anchor_label_year;
    doc["palette"] = meta.palette;
    doc["churn"] = meta.churn;
    std::ofstream out(path, std::ios::trunc);
    require(out.good(), "synth meta: cannot open " + path.string());
    out << doc.dump(2) << "\n";
}

SynthMeta read_synth_meta(const std::filesystem::path& path) {
    using nlohmann::json;
    std::ifstream in(path);
    require(in.good(), "synth meta: cannot open " + path.string());
    const json doc = json::parse(in);
    SynthMeta meta;
    meta.years = doc["years"].get<std::vector<int>>();
    meta.anchor_label_year = doc["anchor_label_year"].get<int>();
    meta.palette = doc["palette"].get<std::vector<std::vector<std::array<double, 3>>>>();
    meta.churn = doc["churn"].get<std::vector<std::vector<double>>>();
    return meta;
}

}  // namespace maptrace
