#pragma once

// Minimal PNG reader/writer (8-bit gray and RGB, non-interlaced) over zlib.
// Map sheets are RGB; label rasters are single-channel gray with 255
// encoding the ignore marker.

#include <cstdint>
#include <filesystem>
#include <vector>

namespace maptrace {

struct PngImage {
    int width = 0;
    int height = 0;
    int channels = 0;  // 1 (gray) or 3 (rgb), interleaved rows
    std::vector<uint8_t> data;
};

struct PngHeader {
    int width = 0;
    int height = 0;
    int channels = 0;
};

PngImage read_png(const std::filesystem::path& path);
// Parses only the IHDR chunk; used for cheap shape validation.
PngHeader read_png_header(const std::filesystem::path& path);

void write_png_gray8(const std::filesystem::path& path, int width, int height,
                     const uint8_t* data);
void write_png_rgb8(const std::filesystem::path& path, int width, int height,
                    const uint8_t* data);

}  // namespace maptrace
