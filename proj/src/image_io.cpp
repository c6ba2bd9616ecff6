#include "maptrace/image_io.hpp"

#include <cstring>
#include <fstream>

#include <zlib.h>

#include "maptrace/common.hpp"

namespace maptrace {

namespace {

constexpr uint8_t kSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

uint32_t be32(const uint8_t* p) {
    return ((uint32_t)p[0] << 24) | ((uint32_t)p[1] << 16) | ((uint32_t)p[2] << 8) | p[3];
}

void put_be32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back((uint8_t)(v >> 24));
    out.push_back((uint8_t)(v >> 16));
    out.push_back((uint8_t)(v >> 8));
    out.push_back((uint8_t)v);
}

void append_chunk(std::vector<uint8_t>& out, const char type[4],
                  const uint8_t* data, size_t len) {
    put_be32(out, (uint32_t)len);
    const size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    if (len) out.insert(out.end(), data, data + len);
    uint32_t crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, out.data() + start, (uInt)(4 + len));
    put_be32(out, crc);
}

std::vector<uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "png: cannot open " + path.string());
    in.seekg(0, std::ios::end);
    const std::streamoff len = in.tellg();
    in.seekg(0);
    std::vector<uint8_t> buf((size_t)len);
    in.read(reinterpret_cast<char*>(buf.data()), len);
    require(in.good(), "png: read failed for " + path.string());
    return buf;
}

int channels_of_color_type(int color_type, const std::filesystem::path& path) {
    switch (color_type) {
        case 0: return 1;  // gray
        case 2: return 3;  // rgb
        case 4: return 2;  // gray + alpha
        case 6: return 4;  // rgba
        default: fail("png: unsupported color type in " + path.string());
    }
}

int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

void write_png(const std::filesystem::path& path, int width, int height,
               int channels, const uint8_t* data) {
    require(width > 0 && height > 0, "png: non-positive dimensions");
    const size_t rowbytes = (size_t)width * channels;
    std::vector<uint8_t> raw((rowbytes + 1) * height);
    for (int y = 0; y < height; ++y) {
        raw[(rowbytes + 1) * y] = 0;  // filter: none
        std::memcpy(raw.data() + (rowbytes + 1) * y + 1, data + rowbytes * y, rowbytes);
    }
    uLongf bound = compressBound((uLong)raw.size());
    std::vector<uint8_t> compressed(bound);
    require(compress2(compressed.data(), &bound, raw.data(), (uLong)raw.size(), 6) == Z_OK,
            "png: deflate failed");
    compressed.resize(bound);

    std::vector<uint8_t> out(kSignature, kSignature + 8);
    uint8_t ihdr[13];
    ihdr[0] = (uint8_t)((uint32_t)width >> 24);
    ihdr[1] = (uint8_t)((uint32_t)width >> 16);
    ihdr[2] = (uint8_t)((uint32_t)width >> 8);
    ihdr[3] = (uint8_t)width;
    ihdr[4] = (uint8_t)((uint32_t)height >> 24);
    ihdr[5] = (uint8_t)((uint32_t)height >> 16);
    ihdr[6] = (uint8_t)((uint32_t)height >> 8);
    ihdr[7] = (uint8_t)height;
    ihdr[8] = 8;                                    // bit depth
    ihdr[9] = (uint8_t)(channels == 1 ? 0 : 2);     // color type
    ihdr[10] = 0;
    ihdr[11] = 0;
    ihdr[12] = 0;
    append_chunk(out, "IHDR", ihdr, 13);
    append_chunk(out, "IDAT", compressed.data(), compressed.size());
    append_chunk(out, "IEND", nullptr, 0);

    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        require(f.good(), "png: cannot open " + tmp.string() + " for writing");
        f.write(reinterpret_cast<const char*>(out.data()), (std::streamsize)out.size());
        require(f.good(), "png: write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace

PngHeader read_png_header(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "png: cannot open " + path.string());
    uint8_t head[33];
    in.read(reinterpret_cast<char*>(head), sizeof(head));
    require(in.good(), "png: truncated file " + path.string());
    require(std::memcmp(head, kSignature, 8) == 0, "png: bad signature in " + path.string());
    require(std::memcmp(head + 12, "IHDR", 4) == 0, "png: missing IHDR in " + path.string());
    PngHeader h;
    h.width = (int)be32(head + 16);
    h.height = (int)be32(head + 20);
    require(head[24] == 8, "png: only 8-bit depth supported: " + path.string());
    h.channels = channels_of_color_type(head[25], path) >= 3 ? 3 : 1;
    return h;
}

PngImage read_png(const std::filesystem::path& path) {
    const std::vector<uint8_t> buf = read_file(path);
    require(buf.size() > 8 && std::memcmp(buf.data(), kSignature, 8) == 0,
            "png: bad signature in " + path.string());

    int width = 0, height = 0, src_channels = 0;
    std::vector<uint8_t> idat;
    size_t pos = 8;
    bool seen_end = false;
    while (pos + 8 <= buf.size() && !seen_end) {
        const uint32_t len = be32(buf.data() + pos);
        require(pos + 12 + len <= buf.size(), "png: truncated chunk in " + path.string());
        const char* type = reinterpret_cast<const char*>(buf.data() + pos + 4);
        const uint8_t* data = buf.data() + pos + 8;
        if (std::memcmp(type, "IHDR", 4) == 0) {
            require(len == 13, "png: bad IHDR in " + path.string());
            width = (int)be32(data);
            height = (int)be32(data + 4);
            require(data[8] == 8, "png: only 8-bit depth supported: " + path.string());
            src_channels = channels_of_color_type(data[9], path);
            require(data[12] == 0, "png: interlaced files not supported: " + path.string());
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            seen_end = true;
        }
        pos += 12 + len;
    }
    require(width > 0 && height > 0 && !idat.empty(), "png: missing image data in " + path.string());

    const size_t rowbytes = (size_t)width * src_channels;
    std::vector<uint8_t> raw((rowbytes + 1) * height);
    uLongf raw_len = (uLongf)raw.size();
    require(uncompress(raw.data(), &raw_len, idat.data(), (uLong)idat.size()) == Z_OK &&
                raw_len == raw.size(),
            "png: inflate failed for " + path.string());

    // de-filter in place
    std::vector<uint8_t> prev(rowbytes, 0);
    std::vector<uint8_t> row(rowbytes);
    PngImage img;
    img.width = width;
    img.height = height;
    img.channels = src_channels >= 3 ? 3 : 1;
    img.data.resize((size_t)width * height * img.channels);
    const int bpp = src_channels;
    for (int y = 0; y < height; ++y) {
        const uint8_t filter = raw[(rowbytes + 1) * y];
        const uint8_t* src = raw.data() + (rowbytes + 1) * y + 1;
        switch (filter) {
            case 0:
                std::memcpy(row.data(), src, rowbytes);
                break;
            case 1:
                for (size_t i = 0; i < rowbytes; ++i)
                    row[i] = (uint8_t)(src[i] + (i >= (size_t)bpp ? row[i - bpp] : 0));
                break;
            case 2:
                for (size_t i = 0; i < rowbytes; ++i) row[i] = (uint8_t)(src[i] + prev[i]);
                break;
            case 3:
                for (size_t i = 0; i < rowbytes; ++i) {
                    const int a = i >= (size_t)bpp ? row[i - bpp] : 0;
                    row[i] = (uint8_t)(src[i] + ((a + prev[i]) >> 1));
                }
                break;
            case 4:
                for (size_t i = 0; i < rowbytes; ++i) {
                    const int a = i >= (size_t)bpp ? row[i - bpp] : 0;
                    const int c = i >= (size_t)bpp ? prev[i - bpp] : 0;
                    row[i] = (uint8_t)(src[i] + paeth(a, prev[i], c));
                }
                break;
            default:
                fail("png: unknown filter type in " + path.string());
        }
        // drop any alpha channel
        uint8_t* dst = img.data.data() + (size_t)y * width * img.channels;
        if (src_channels == img.channels) {
            std::memcpy(dst, row.data(), rowbytes);
        } else {
            for (int x = 0; x < width; ++x)
                for (int ch = 0; ch < img.channels; ++ch)
                    dst[(size_t)x * img.channels + ch] = row[(size_t)x * src_channels + ch];
        }
        std::swap(prev, row);
    }
    return img;
}

void write_png_gray8(const std::filesystem::path& path, int width, int height,
                     const uint8_t* data) {
    write_png(path, width, height, 1, data);
}

void write_png_rgb8(const std::filesystem::path& path, int width, int height,
                    const uint8_t* data) {
    write_png(path, width, height, 3, data);
}

}  // namespace maptrace
