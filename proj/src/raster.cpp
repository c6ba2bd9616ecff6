#include "maptrace/raster.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "maptrace/image_io.hpp"

namespace maptrace {

namespace {

constexpr uint8_t kIgnorePixel = 255;

}  // namespace

std::vector<std::string> Manifest::patches() const {
    std::vector<std::string> out;
    for (const auto& e : entries)
        if (out.empty() || out.back() != e.patch_id) out.push_back(e.patch_id);
    return out;
}

std::vector<int> Manifest::entry_indices(const std::string& patch) const {
    std::vector<int> out;
    for (int i = 0; i < (int)entries.size(); ++i)
        if (entries[i].patch_id == patch) out.push_back(i);
    return out;
}

int Manifest::anchor_year(const std::string& patch) const {
    auto it = anchor_label_year.find(patch);
    require(it != anchor_label_year.end(), "manifest: no anchor year for patch " + patch);
    return it->second;
}

Manifest load_manifest(const std::filesystem::path& path, const ClassScheme& scheme) {
    using nlohmann::json;
    std::ifstream in(path);
    require(in.good(), "manifest: cannot open " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        fail("manifest: parse error in " + path.string() + ": " + e.what());
    }
    require(doc.is_object() && doc.contains("entries"),
            "manifest: expected an object with an 'entries' list");

    Manifest m;
    m.scheme = scheme;
    m.base_dir = path.parent_path();

    if (doc.contains("classes")) {
        for (const auto& c : doc["classes"]) {
            const std::string name = c.get<std::string>();
            require(scheme.id_of(name) >= 0, "manifest: unknown class name " + name);
        }
        require((int)doc["classes"].size() == scheme.count(),
                "manifest: class list does not match the scheme");
    }

    for (const auto& e : doc["entries"]) {
        ManifestEntry entry;
        entry.patch_id = e.at("patch_id").get<std::string>();
        entry.year = e.at("year").get<int>();
        entry.image_path = m.base_dir / e.at("image").get<std::string>();
        if (e.contains("label") && !e["label"].is_null())
            entry.label_path = m.base_dir / e["label"].get<std::string>();
        m.entries.push_back(std::move(entry));
    }
    require(!m.entries.empty(), "manifest: no entries");

    // years must already appear in strictly increasing order per patch
    std::map<std::string, int> last_year;
    for (const auto& e : m.entries) {
        auto it = last_year.find(e.patch_id);
        if (it != last_year.end())
            require(e.year > it->second,
                    "manifest: years not strictly increasing for patch " + e.patch_id);
        last_year[e.patch_id] = e.year;
    }

    std::stable_sort(m.entries.begin(), m.entries.end(),
                     [](const ManifestEntry& a, const ManifestEntry& b) {
                         return std::tie(a.patch_id, a.year) < std::tie(b.patch_id, b.year);
                     });
    for (size_t i = 1; i < m.entries.size(); ++i)
        require(!(m.entries[i].patch_id == m.entries[i - 1].patch_id &&
                  m.entries[i].year == m.entries[i - 1].year),
                "manifest: duplicate (patch_id, year) " + m.entries[i].patch_id + "/" +
                    std::to_string(m.entries[i].year));

    bool any_label = false;
    for (const auto& e : m.entries) {
        const PngHeader h = read_png_header(e.image_path);
        if (e.label_path) {
            any_label = true;
            const PngHeader lh = read_png_header(*e.label_path);
            require(lh.width == h.width && lh.height == h.height,
                    "manifest: label shape mismatch with image for " + e.patch_id + "/" +
                        std::to_string(e.year));
            require(lh.channels == 1, "manifest: label rasters must be single-channel: " +
                                          e.label_path->string());
        }
    }
    require(any_label, "manifest: at least one entry must carry a label");

    if (doc.contains("anchor_label_year")) {
        const auto& a = doc["anchor_label_year"];
        if (a.is_number_integer()) {
            for (const auto& p : m.patches()) m.anchor_label_year[p] = a.get<int>();
        } else if (a.is_object()) {
            for (auto it = a.begin(); it != a.end(); ++it)
                m.anchor_label_year[it.key()] = it.value().get<int>();
        } else {
            fail("manifest: anchor_label_year must be an int or an object");
        }
    } else {
        // default: the earliest labeled year per patch
        for (const auto& e : m.entries)
            if (e.label_path && !m.anchor_label_year.count(e.patch_id))
                m.anchor_label_year[e.patch_id] = e.year;
    }
    return m;
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path) {
    using nlohmann::json;
    json doc;
    doc["entries"] = json::array();
    const auto rel = [&](const std::filesystem::path& p) {
        return std::filesystem::relative(p, path.parent_path()).generic_string();
    };
    for (const auto& e : manifest.entries) {
        json je = {{"patch_id", e.patch_id}, {"year", e.year}, {"image", rel(e.image_path)}};
        je["label"] = e.label_path ? json(rel(*e.label_path)) : json(nullptr);
        doc["entries"].push_back(std::move(je));
    }
    json anchors;
    for (const auto& [patch, year] : manifest.anchor_label_year) anchors[patch] = year;
    doc["anchor_label_year"] = std::move(anchors);
    doc["classes"] = manifest.scheme.names;
    std::ofstream out(path, std::ios::trunc);
    require(out.good(), "manifest: cannot open " + path.string() + " for writing");
    out << doc.dump(2) << "\n";
    require(out.good(), "manifest: write failed for " + path.string());
}

MapSheet load_map_sheet(const Manifest& manifest, int entry_index) {
    const ManifestEntry& e = manifest.entries.at(entry_index);
    PngImage img = read_png(e.image_path);
    require(img.channels == 3, "map sheet must be RGB: " + e.image_path.string());
    MapSheet sheet;
    sheet.height = img.height;
    sheet.width = img.width;
    sheet.rgb = std::move(img.data);
    sheet.year = e.year;
    sheet.patch_id = e.patch_id;
    return sheet;
}

LabelRaster read_label_png(const std::filesystem::path& path, const ClassScheme& scheme) {
    PngImage img = read_png(path);
    require(img.channels == 1, "label raster must be single-channel: " + path.string());
    LabelRaster out;
    out.height = img.height;
    out.width = img.width;
    out.scheme = scheme;
    out.labels.resize(img.data.size());
    const int c = scheme.count();
    for (size_t i = 0; i < img.data.size(); ++i) {
        const uint8_t v = img.data[i];
        if (v == kIgnorePixel) {
            out.labels[i] = -1;
        } else {
            require(v < c, "label raster " + path.string() + " contains out-of-range id " +
                               std::to_string((int)v));
            out.labels[i] = (int8_t)v;
        }
    }
    return out;
}

LabelRaster load_label_raster(const Manifest& manifest, int entry_index) {
    const ManifestEntry& e = manifest.entries.at(entry_index);
    require(e.label_path.has_value(), "manifest entry " + e.patch_id + "/" +
                                          std::to_string(e.year) + " has no label");
    LabelRaster out = read_label_png(*e.label_path, manifest.scheme);
    out.year = e.year;
    out.patch_id = e.patch_id;
    return out;
}

void write_label_png(const std::filesystem::path& path, const LabelRaster& labels) {
    std::vector<uint8_t> bytes(labels.labels.size());
    for (size_t i = 0; i < bytes.size(); ++i) {
        const int8_t v = labels.labels[i];
        bytes[i] = (v < 0) ? kIgnorePixel : (uint8_t)v;
    }
    write_png_gray8(path, labels.width, labels.height, bytes.data());
}

TileGrid make_tile_grid(int height, int width, int tile_size, int overlap) {
    require(height > 0 && width > 0, "tile grid: non-positive raster dimensions");
    require(tile_size > 0, "tile grid: non-positive tile size");
    require(overlap >= 0 && overlap < tile_size, "tile grid: overlap must be in [0, tile_size)");
    require(tile_size <= height && tile_size <= width,
            "tile grid: tile size exceeds raster extent");
    const int stride = tile_size - overlap;
    auto axis_origins = [&](int extent) {
        std::vector<int> out;
        int o = 0;
        while (true) {
            if (o + tile_size >= extent) {
                const int last = extent - tile_size;
                if (out.empty() || out.back() != last) out.push_back(last);
                break;
            }
            out.push_back(o);
            o += stride;
        }
        return out;
    };
    TileGrid grid;
    grid.tile_size = tile_size;
    grid.overlap = overlap;
    grid.height = height;
    grid.width = width;
    const std::vector<int> rows = axis_origins(height);
    const std::vector<int> cols = axis_origins(width);
    for (int r : rows)
        for (int c : cols) grid.origins.emplace_back(r, c);
    return grid;
}

std::vector<TilePair> extract_tiles(const MapSheet& sheet, const LabelRaster* labels,
                                    const TileGrid& grid) {
    require(grid.height == sheet.height && grid.width == sheet.width,
            "extract: grid was built for different raster dimensions");
    if (labels)
        require(labels->height == sheet.height && labels->width == sheet.width,
                "extract: label raster shape mismatch");
    const int ts = grid.tile_size;
    std::vector<TilePair> out;
    out.reserve(grid.origins.size());
    for (const auto& [r0, c0] : grid.origins) {
        TilePair tile;
        tile.row0 = r0;
        tile.col0 = c0;
        tile.image.resize((size_t)ts * ts * 3);
        for (int y = 0; y < ts; ++y) {
            const uint8_t* src = sheet.rgb.data() + ((size_t)(r0 + y) * sheet.width + c0) * 3;
            std::memcpy(tile.image.data() + (size_t)y * ts * 3, src, (size_t)ts * 3);
        }
        if (labels) {
            std::vector<int8_t> lt((size_t)ts * ts);
            for (int y = 0; y < ts; ++y) {
                const int8_t* src =
                    labels->labels.data() + (size_t)(r0 + y) * labels->width + c0;
                std::memcpy(lt.data() + (size_t)y * ts, src, (size_t)ts);
            }
            tile.labels = std::move(lt);
        }
        out.push_back(std::move(tile));
    }
    return out;
}

ScoreVolume stitch_scores(const std::vector<ScoreVolume>& tiles, const TileGrid& grid) {
    require(tiles.size() == grid.origins.size(), "stitch: tile count != origin count");
    require(!tiles.empty(), "stitch: no tiles");
    const int C = tiles.front().channels;
    const int ts = grid.tile_size;
    bool normalized = true;
    for (const auto& t : tiles) {
        require(t.height == ts && t.width == ts && t.channels == C,
                "stitch: tile shape mismatch");
        normalized = normalized && t.normalized;
    }
    std::vector<double> acc((size_t)C * grid.height * grid.width, 0.0);
    std::vector<uint16_t> cover((size_t)grid.height * grid.width, 0);
    for (size_t i = 0; i < tiles.size(); ++i) {
        const auto& [r0, c0] = grid.origins[i];
        const ScoreVolume& t = tiles[i];
        for (int c = 0; c < C; ++c) {
            const float* src = t.plane(c);
            double* dst = acc.data() + (size_t)c * grid.height * grid.width;
            for (int y = 0; y < ts; ++y) {
                double* drow = dst + (size_t)(r0 + y) * grid.width + c0;
                const float* srow = src + (size_t)y * ts;
                for (int x = 0; x < ts; ++x) drow[x] += srow[x];
            }
        }
        for (int y = 0; y < ts; ++y) {
            uint16_t* crow = cover.data() + (size_t)(r0 + y) * grid.width + c0;
            for (int x = 0; x < ts; ++x) crow[x] += 1;
        }
    }
    ScoreVolume out(grid.height, grid.width, C, normalized);
    const size_t plane = out.plane_size();
    for (int c = 0; c < C; ++c) {
        float* dst = out.plane(c);
        const double* src = acc.data() + (size_t)c * plane;
        for (size_t p = 0; p < plane; ++p) dst[p] = (float)(src[p] / (double)cover[p]);
    }
    return out;
}

std::vector<int8_t> stitch_labels(const std::vector<std::vector<int8_t>>& tiles,
                                  const TileGrid& grid) {
    require(tiles.size() == grid.origins.size(), "stitch: tile count != origin count");
    const int ts = grid.tile_size;
    std::vector<int8_t> out((size_t)grid.height * grid.width, kIgnoreLabel);
    for (size_t i = 0; i < tiles.size(); ++i) {
        const auto& [r0, c0] = grid.origins[i];
        require((int)tiles[i].size() == ts * ts, "stitch: label tile size mismatch");
        for (int y = 0; y < ts; ++y)
            std::memcpy(out.data() + (size_t)(r0 + y) * grid.width + c0,
                        tiles[i].data() + (size_t)y * ts, (size_t)ts);
    }
    return out;
}

namespace {

template <class T>
void flip_rows(T* data, int size, int ch) {
    const size_t rowbytes = (size_t)size * ch * sizeof(T);
    std::vector<T> tmp((size_t)size * ch);
    for (int y = 0; y < size / 2; ++y) {
        T* a = data + (size_t)y * size * ch;
        T* b = data + (size_t)(size - 1 - y) * size * ch;
        std::memcpy(tmp.data(), a, rowbytes);
        std::memcpy(a, b, rowbytes);
        std::memcpy(b, tmp.data(), rowbytes);
    }
}

template <class T>
void flip_cols(T* data, int size, int ch) {
    for (int y = 0; y < size; ++y) {
        T* row = data + (size_t)y * size * ch;
        for (int x = 0; x < size / 2; ++x)
            for (int c = 0; c < ch; ++c)
                std::swap(row[(size_t)x * ch + c], row[(size_t)(size - 1 - x) * ch + c]);
    }
}

// Quarter-turn clockwise: out(y, x) = in(size-1-x, y).
template <class T>
void rot90(T* data, int size, int ch) {
    std::vector<T> src(data, data + (size_t)size * size * ch);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            for (int c = 0; c < ch; ++c)
                data[((size_t)y * size + x) * ch + c] =
                    src[((size_t)(size - 1 - x) * size + y) * ch + c];
}

}  // namespace

void apply_transform(std::vector<uint8_t>& rgb, std::vector<int8_t>* labels, int tile_size,
                     bool hflip, bool vflip, int rot_quarter_turns) {
    require((int)rgb.size() == tile_size * tile_size * 3, "augment: bad image tile size");
    if (labels)
        require((int)labels->size() == tile_size * tile_size, "augment: bad label tile size");
    if (hflip) {
        flip_cols(rgb.data(), tile_size, 3);
        if (labels) flip_cols(labels->data(), tile_size, 1);
    }
    if (vflip) {
        flip_rows(rgb.data(), tile_size, 3);
        if (labels) flip_rows(labels->data(), tile_size, 1);
    }
    for (int k = 0; k < (rot_quarter_turns & 3); ++k) {
        rot90(rgb.data(), tile_size, 3);
        if (labels) rot90(labels->data(), tile_size, 1);
    }
}

void augment_pair(std::vector<uint8_t>& rgb, std::vector<int8_t>* labels, int tile_size,
                  Rng& rng) {
    const bool hflip = rng.next_bool();
    const bool vflip = rng.next_bool();
    const int k = (int)rng.next_below(4);
    apply_transform(rgb, labels, tile_size, hflip, vflip, k);
}

}  // namespace maptrace
