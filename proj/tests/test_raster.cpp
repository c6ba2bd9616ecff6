#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "maptrace/image_io.hpp"
#include "maptrace/raster.hpp"

using namespace maptrace;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("maptrace_raster_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

MapSheet random_sheet(int h, int w, uint64_t seed) {
    MapSheet s;
    s.height = h;
    s.width = w;
    s.rgb.resize((size_t)h * w * 3);
    Rng rng(seed);
    for (auto& v : s.rgb) v = (uint8_t)rng.next_below(256);
    return s;
}

LabelRaster random_labels(int h, int w, uint64_t seed) {
    LabelRaster l;
    l.height = h;
    l.width = w;
    l.labels.resize((size_t)h * w);
    Rng rng(seed);
    for (auto& v : l.labels) v = (int8_t)((int)rng.next_below(7) - 1);
    return l;
}

void write_manifest_files(const fs::path& dir, const std::string& manifest_json,
                          const std::vector<std::pair<std::string, std::pair<int, int>>>& images,
                          const std::vector<std::pair<std::string, std::pair<int, int>>>& labels) {
    for (const auto& [name, hw] : images) {
        std::vector<uint8_t> px((size_t)hw.first * hw.second * 3, 128);
        write_png_rgb8(dir / name, hw.second, hw.first, px.data());
    }
    for (const auto& [name, hw] : labels) {
        std::vector<uint8_t> px((size_t)hw.first * hw.second, 0);
        write_png_gray8(dir / name, hw.second, hw.first, px.data());
    }
    std::ofstream f(dir / "manifest.json");
    f << manifest_json;
}

}  // namespace

TEST_CASE("png round-trip for rgb and gray") {
    TempDir tmp;
    MapSheet s = random_sheet(37, 53, 5);
    write_png_rgb8(tmp.path / "img.png", s.width, s.height, s.rgb.data());
    PngImage img = read_png(tmp.path / "img.png");
    CHECK(img.width == 53);
    CHECK(img.height == 37);
    CHECK(img.channels == 3);
    CHECK(img.data == s.rgb);

    LabelRaster l = random_labels(37, 53, 6);
    write_label_png(tmp.path / "lab.png", l);
    LabelRaster back = read_label_png(tmp.path / "lab.png", ClassScheme::defaults());
    CHECK(back.labels == l.labels);

    PngHeader h = read_png_header(tmp.path / "img.png");
    CHECK(h.width == 53);
    CHECK(h.height == 37);
    CHECK(h.channels == 3);
}

TEST_CASE("tile grid matches the training geometry") {
    // 1024x1024 raster, 384 tiles, 128 overlap: origins {0,256,512,640} per axis
    TileGrid g = make_tile_grid(1024, 1024, 384, 128);
    std::vector<int> rows;
    for (const auto& [r, c] : g.origins)
        if (c == 0) rows.push_back(r);
    CHECK(rows == std::vector<int>{0, 256, 512, 640});
    CHECK(g.origins.size() == 16);

    // exact fit -> single origin
    TileGrid g2 = make_tile_grid(384, 384, 384, 128);
    CHECK(g2.origins == std::vector<std::pair<int, int>>{{0, 0}});

    // test-time tiling: 1024 tile over a 1024 raster
    TileGrid g3 = make_tile_grid(1024, 1024, 1024, 0);
    CHECK(g3.origins == std::vector<std::pair<int, int>>{{0, 0}});
}

TEST_CASE("tile grid rejects invalid parameters") {
    CHECK_THROWS_AS(make_tile_grid(512, 512, 128, 128), Error);
    CHECK_THROWS_AS(make_tile_grid(512, 512, 128, 200), Error);
    CHECK_THROWS_AS(make_tile_grid(0, 512, 128, 0), Error);
    CHECK_THROWS_AS(make_tile_grid(100, 100, 128, 0), Error);
}

TEST_CASE("tiling covers every pixel; overlap covers stride boundaries twice") {
    for (auto [h, w, ts, ov] : {std::tuple{1024, 1024, 384, 128},
                                std::tuple{512, 512, 384, 128},
                                std::tuple{200, 300, 64, 16},
                                std::tuple{97, 61, 32, 7}}) {
        TileGrid g = make_tile_grid(h, w, ts, ov);
        std::vector<int> cover((size_t)h * w, 0);
        for (const auto& [r0, c0] : g.origins)
            for (int y = 0; y < ts; ++y)
                for (int x = 0; x < ts; ++x) ++cover[(size_t)(r0 + y) * w + c0 + x];
        int min_cover = cover[0];
        for (int v : cover) min_cover = std::min(min_cover, v);
        CHECK(min_cover >= 1);
    }
    // interior stride-boundary pixels sit in at least two tiles when overlap > 0
    TileGrid g = make_tile_grid(1024, 1024, 384, 128);
    std::vector<int> cover(1024, 0);
    for (const auto& [r0, c0] : g.origins)
        if (c0 == 0)
            for (int y = 0; y < 384; ++y) ++cover[r0 + y];
    CHECK(cover[256] >= 2);  // first stride boundary
    CHECK(cover[640] >= 2);
}

TEST_CASE("extract produces aligned tiles; clamped origin covers the tail") {
    MapSheet sheet = random_sheet(1024, 1024, 11);
    LabelRaster labels = random_labels(1024, 1024, 13);
    TileGrid g = make_tile_grid(1024, 1024, 384, 128);
    auto tiles = extract_tiles(sheet, &labels, g);
    REQUIRE(tiles.size() == 16);
    // last tile covers rows 640..1023
    const TilePair& last = tiles.back();
    CHECK(last.row0 == 640);
    CHECK(last.col0 == 640);
    for (int y = 0; y < 384; ++y)
        for (int x = 0; x < 384; ++x) {
            const size_t src = ((size_t)(640 + y) * 1024 + 640 + x);
            REQUIRE(last.image[((size_t)y * 384 + x) * 3] == sheet.rgb[src * 3]);
            REQUIRE((*last.labels)[(size_t)y * 384 + x] == labels.labels[src]);
        }
    // without labels the label slot stays empty
    auto bare = extract_tiles(sheet, nullptr, g);
    CHECK(!bare.front().labels.has_value());
}

TEST_CASE("extract then stitch is the identity on score volumes") {
    const int H = 200, W = 152, C = 3;
    ScoreVolume full(H, W, C, true);
    Rng rng(17);
    for (auto& v : full.scores) v = rng.next_float();
    TileGrid g = make_tile_grid(H, W, 64, 24);
    std::vector<ScoreVolume> tiles;
    for (const auto& [r0, c0] : g.origins) {
        ScoreVolume t(64, 64, C, true);
        for (int c = 0; c < C; ++c)
            for (int y = 0; y < 64; ++y)
                for (int x = 0; x < 64; ++x) t.at(c, y, x) = full.at(c, r0 + y, c0 + x);
        tiles.push_back(std::move(t));
    }
    ScoreVolume stitched = stitch_scores(tiles, g);
    CHECK(stitched.scores == full.scores);  // bitwise
}

TEST_CASE("stitch averages overlapping scores") {
    // two tiles over a 1x2-tile strip sharing a column band; 2 classes
    TileGrid g = make_tile_grid(4, 6, 4, 2);
    REQUIRE(g.origins == std::vector<std::pair<int, int>>{{0, 0}, {0, 2}});
    ScoreVolume a(4, 4, 2, true), b(4, 4, 2, true);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) {
            a.at(0, y, x) = 0.8f;
            a.at(1, y, x) = 0.2f;
            b.at(0, y, x) = 0.4f;
            b.at(1, y, x) = 0.6f;
        }
    ScoreVolume s = stitch_scores({a, b}, g);
    // overlap columns 2..3: mean of (0.8,0.4) and (0.2,0.6)
    // exact double mean of the float inputs, then rounded to float
    CHECK(s.at(0, 1, 2) == (float)((0.8f + 0.4f) / 2.0));
    CHECK(s.at(1, 1, 2) == (float)((0.2f + 0.6f) / 2.0));
    CHECK(s.at(0, 1, 0) == 0.8f);
    CHECK(s.at(1, 1, 5) == 0.6f);
    auto am = argmax_labels(s);
    CHECK(am[(size_t)1 * 6 + 2] == 0);
}

TEST_CASE("stitch rejects mismatched tile counts") {
    TileGrid g = make_tile_grid(4, 6, 4, 2);
    ScoreVolume a(4, 4, 2, true);
    CHECK_THROWS_AS(stitch_scores({a}, g), Error);
}

TEST_CASE("augmentation applies the same transform to image and labels") {
    const int ts = 8;
    Rng content(3);
    std::vector<uint8_t> rgb((size_t)ts * ts * 3);
    std::vector<int8_t> lab((size_t)ts * ts);
    for (auto& v : rgb) v = (uint8_t)content.next_below(256);
    for (size_t i = 0; i < lab.size(); ++i) lab[i] = (int8_t)(i % 6);

    // pair a pixel's red channel with its label through every transform
    for (int hf = 0; hf <= 1; ++hf)
        for (int vf = 0; vf <= 1; ++vf)
            for (int k = 0; k < 4; ++k) {
                auto r = rgb;
                auto l = lab;
                apply_transform(r, &l, ts, hf, vf, k);
                // alignment: find where original pixel (2,3) went by matching rgb
                // values, then check the label moved with it
                std::multiset<std::pair<int, int8_t>> pre, post;
                for (int i = 0; i < ts * ts; ++i) {
                    pre.insert({rgb[(size_t)i * 3], lab[i]});
                    post.insert({r[(size_t)i * 3], l[i]});
                }
                CHECK(pre == post);  // (pixel, label) pairs preserved as a multiset
            }
}

TEST_CASE("identity draw leaves the pair unchanged; flips are involutions") {
    const int ts = 16;
    Rng content(5);
    std::vector<uint8_t> rgb((size_t)ts * ts * 3);
    std::vector<int8_t> lab((size_t)ts * ts);
    for (auto& v : rgb) v = (uint8_t)content.next_below(256);
    for (auto& v : lab) v = (int8_t)content.next_below(6);

    auto r = rgb;
    auto l = lab;
    apply_transform(r, &l, ts, false, false, 0);
    CHECK(r == rgb);
    CHECK(l == lab);

    apply_transform(r, &l, ts, true, false, 0);
    apply_transform(r, &l, ts, true, false, 0);
    CHECK(r == rgb);
    CHECK(l == lab);

    // label histogram is invariant under any rotation
    auto r2 = rgb;
    auto l2 = lab;
    apply_transform(r2, &l2, ts, false, false, 3);
    auto sorted_pre = lab;
    auto sorted_post = l2;
    std::sort(sorted_pre.begin(), sorted_pre.end());
    std::sort(sorted_post.begin(), sorted_post.end());
    CHECK(sorted_pre == sorted_post);
}

TEST_CASE("manifest loads, validates and sorts") {
    TempDir tmp;
    write_manifest_files(tmp.path,
                         R"({
  "entries": [
    {"patch_id": "3922", "year": 1898, "image": "a.png", "label": "la.png"},
    {"patch_id": "3922", "year": 1974, "image": "b.png", "label": "lb.png"},
    {"patch_id": "3922", "year": 1982, "image": "c.png", "label": "lc.png"},
    {"patch_id": "3922", "year": 1996, "image": "d.png", "label": "ld.png"},
    {"patch_id": "3821", "year": 1974, "image": "e.png", "label": null}
  ],
  "anchor_label_year": {"3922": 1974, "3821": 1974}
})",
                         {{"a.png", {16, 16}}, {"b.png", {16, 16}}, {"c.png", {16, 16}},
                          {"d.png", {16, 16}}, {"e.png", {16, 16}}},
                         {{"la.png", {16, 16}}, {"lb.png", {16, 16}}, {"lc.png", {16, 16}},
                          {"ld.png", {16, 16}}});
    Manifest m = load_manifest(tmp.path / "manifest.json");
    REQUIRE(m.entries.size() == 5);
    // sorted by (patch_id, year): 3821 first
    CHECK(m.entries[0].patch_id == "3821");
    int labeled = 0;
    for (const auto& e : m.entries)
        if (e.patch_id == "3922" && e.label_path) ++labeled;
    CHECK(labeled == 4);
    CHECK(m.anchor_year("3922") == 1974);
    CHECK(m.patches() == std::vector<std::string>{"3821", "3922"});
}

TEST_CASE("single-entry manifest loads") {
    TempDir tmp;
    write_manifest_files(tmp.path,
                         R"({"entries": [{"patch_id": "p", "year": 1900, "image": "a.png",
                              "label": "la.png"}], "anchor_label_year": 1900})",
                         {{"a.png", {8, 8}}}, {{"la.png", {8, 8}}});
    Manifest m = load_manifest(tmp.path / "manifest.json");
    CHECK(m.entries.size() == 1);
    CHECK(m.anchor_year("p") == 1900);
}

TEST_CASE("manifest rejects non-increasing years") {
    TempDir tmp;
    write_manifest_files(tmp.path,
                         R"({"entries": [
                              {"patch_id": "p", "year": 1975, "image": "a.png", "label": "la.png"},
                              {"patch_id": "p", "year": 1974, "image": "b.png", "label": null}],
                             "anchor_label_year": 1975})",
                         {{"a.png", {8, 8}}, {"b.png", {8, 8}}}, {{"la.png", {8, 8}}});
    CHECK_THROWS_WITH_AS(load_manifest(tmp.path / "manifest.json"),
                         doctest::Contains("years not strictly increasing"), Error);
}

TEST_CASE("manifest rejects shape mismatch, missing files and unknown classes") {
    TempDir tmp;
    write_manifest_files(tmp.path,
                         R"({"entries": [{"patch_id": "p", "year": 1900, "image": "a.png",
                              "label": "la.png"}], "anchor_label_year": 1900})",
                         {{"a.png", {8, 8}}}, {{"la.png", {8, 10}}});
    CHECK_THROWS_WITH_AS(load_manifest(tmp.path / "manifest.json"),
                         doctest::Contains("shape mismatch"), Error);

    std::ofstream(tmp.path / "missing.json")
        << R"({"entries": [{"patch_id": "p", "year": 1900, "image": "zzz.png",
             "label": null}], "anchor_label_year": 1900})";
    CHECK_THROWS_AS(load_manifest(tmp.path / "missing.json"), Error);

    write_manifest_files(tmp.path / "",
                         R"({"classes": ["WL", "XX", "SM", "FW", "SW", "UK"],
                             "entries": [{"patch_id": "p", "year": 1900, "image": "a.png",
                              "label": "lb.png"}], "anchor_label_year": 1900})",
                         {}, {{"lb.png", {8, 8}}});
    CHECK_THROWS_WITH_AS(load_manifest(tmp.path / "manifest.json"),
                         doctest::Contains("unknown class name"), Error);
}

TEST_CASE("manifest round-trips through save") {
    TempDir tmp;
    write_manifest_files(tmp.path,
                         R"({"entries": [{"patch_id": "p", "year": 1900, "image": "a.png",
                              "label": "la.png"},
                             {"patch_id": "p", "year": 1950, "image": "a.png", "label": null}],
                             "anchor_label_year": 1900})",
                         {{"a.png", {8, 8}}}, {{"la.png", {8, 8}}});
    Manifest m = load_manifest(tmp.path / "manifest.json");
    save_manifest(m, tmp.path / "copy.json");
    Manifest m2 = load_manifest(tmp.path / "copy.json");
    REQUIRE(m2.entries.size() == m.entries.size());
    for (size_t i = 0; i < m.entries.size(); ++i) {
        CHECK(m2.entries[i].patch_id == m.entries[i].patch_id);
        CHECK(m2.entries[i].year == m.entries[i].year);
        CHECK(m2.entries[i].label_path.has_value() == m.entries[i].label_path.has_value());
    }
}

TEST_CASE("non-overlapping grid stitches to a plain mosaic") {
    const int H = 128, W = 128, C = 2;
    ScoreVolume full(H, W, C, true);
    Rng rng(23);
    for (auto& v : full.scores) v = rng.next_float();
    TileGrid g = make_tile_grid(H, W, 64, 0);
    REQUIRE(g.origins.size() == 4);
    std::vector<ScoreVolume> tiles;
    for (const auto& [r0, c0] : g.origins) {
        ScoreVolume t(64, 64, C, true);
        for (int c = 0; c < C; ++c)
            for (int y = 0; y < 64; ++y)
                for (int x = 0; x < 64; ++x) t.at(c, y, x) = full.at(c, r0 + y, c0 + x);
        tiles.push_back(std::move(t));
    }
    CHECK(stitch_scores(tiles, g).scores == full.scores);

    // label mosaic path
    std::vector<std::vector<int8_t>> ltiles;
    std::vector<int8_t> lfull((size_t)H * W);
    for (auto& v : lfull) v = (int8_t)rng.next_below(6);
    for (const auto& [r0, c0] : g.origins) {
        std::vector<int8_t> t((size_t)64 * 64);
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x) t[(size_t)y * 64 + x] = lfull[(size_t)(r0 + y) * W + c0 + x];
        ltiles.push_back(std::move(t));
    }
    CHECK(stitch_labels(ltiles, g) == lfull);
}
