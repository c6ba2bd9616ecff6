#include "maptrace/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>

#include "maptrace/common.hpp"
#include "maptrace/image_io.hpp"

namespace maptrace {

namespace {

// 5x7 glyphs, one bit per pixel, row-major from the top.
const std::map<char, std::array<uint8_t, 7>>& font() {
    static const std::map<char, std::array<uint8_t, 7>> f = {
        {'0', {0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e}},
        {'1', {0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e}},
        {'2', {0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f}},
        {'3', {0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e}},
        {'4', {0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02}},
        {'5', {0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e}},
        {'6', {0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e}},
        {'7', {0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
        {'8', {0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e}},
        {'9', {0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c}},
        {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0c, 0x0c}},
        {'-', {0x00, 0x00, 0x00, 0x1f, 0x00, 0x00, 0x00}},
        {':', {0x00, 0x0c, 0x0c, 0x00, 0x0c, 0x0c, 0x00}},
        {'=', {0x00, 0x00, 0x1f, 0x00, 0x1f, 0x00, 0x00}},
        {'%', {0x19, 0x19, 0x02, 0x04, 0x08, 0x13, 0x13}},
        {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
        {'A', {0x0e, 0x11, 0x11, 0x1f, 0x11, 0x11, 0x11}},
        {'B', {0x1e, 0x11, 0x11, 0x1e, 0x11, 0x11, 0x1e}},
        {'C', {0x0e, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0e}},
        {'D', {0x1e, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1e}},
        {'E', {0x1f, 0x10, 0x10, 0x1e, 0x10, 0x10, 0x1f}},
        {'F', {0x1f, 0x10, 0x10, 0x1e, 0x10, 0x10, 0x10}},
        {'G', {0x0e, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0f}},
        {'H', {0x11, 0x11, 0x11, 0x1f, 0x11, 0x11, 0x11}},
        {'I', {0x0e, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0e}},
        {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0c}},
        {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
        {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1f}},
        {'M', {0x11, 0x1b, 0x15, 0x15, 0x11, 0x11, 0x11}},
        {'N', {0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11}},
        {'O', {0x0e, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0e}},
        {'P', {0x1e, 0x11, 0x11, 0x1e, 0x10, 0x10, 0x10}},
        {'Q', {0x0e, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0d}},
        {'R', {0x1e, 0x11, 0x11, 0x1e, 0x14, 0x12, 0x11}},
        {'S', {0x0f, 0x10, 0x10, 0x0e, 0x01, 0x01, 0x1e}},
        {'T', {0x1f, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
        {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0e}},
        {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0a, 0x04}},
        {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x1b, 0x11}},
        {'X', {0x11, 0x11, 0x0a, 0x04, 0x0a, 0x11, 0x11}},
        {'Y', {0x11, 0x11, 0x0a, 0x04, 0x04, 0x04, 0x04}},
        {'Z', {0x1f, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1f}},
    };
    return f;
}

struct Canvas {
    int w, h;
    std::vector<uint8_t> rgb;

    Canvas(int w_, int h_) : w(w_), h(h_), rgb((size_t)w_ * h_ * 3, 255) {}

    void set(int x, int y, std::array<uint8_t, 3> c) {
        if (x < 0 || y < 0 || x >= w || y >= h) return;
        uint8_t* p = rgb.data() + ((size_t)y * w + x) * 3;
        p[0] = c[0];
        p[1] = c[1];
        p[2] = c[2];
    }

    void line(int x0, int y0, int x1, int y1, std::array<uint8_t, 3> c, bool dashed) {
        const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
        const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
        int err = dx + dy;
        int step = 0;
        while (true) {
            if (!dashed || (step / 4) % 2 == 0) {
                set(x0, y0, c);
                set(x0 + 1, y0, c);  // 2px stroke
            }
            if (x0 == x1 && y0 == y1) break;
            const int e2 = 2 * err;
            if (e2 >= dy) {
                err += dy;
                x0 += sx;
            }
            if (e2 <= dx) {
                err += dx;
                y0 += sy;
            }
            ++step;
        }
    }

    void text(int x, int y, const std::string& s, std::array<uint8_t, 3> c) {
        const auto& f = font();
        for (char raw : s) {
            const char ch = (char)std::toupper((unsigned char)raw);
            auto it = f.find(ch);
            if (it != f.end()) {
                for (int ry = 0; ry < 7; ++ry)
                    for (int rx = 0; rx < 5; ++rx)
                        if (it->second[ry] & (1 << (4 - rx))) set(x + rx, y + ry, c);
            }
            x += 6;
        }
    }
};

std::string fmt_num(double v) {
    char buf[32];
    if (std::abs(v - std::round(v)) < 1e-9)
        std::snprintf(buf, sizeof(buf), "%.0f", v);
    else
        std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace

void render_line_plot(const std::filesystem::path& path, const std::string& title,
                      const std::vector<PlotSeries>& series, double ymin, double ymax,
                      int width, int height) {
    require(!series.empty(), "plot: no series");
    require(ymax > ymin, "plot: bad y range");
    double xmin = 1e300, xmax = -1e300;
    for (const auto& s : series)
        for (double x : s.x) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
        }
    if (!(xmax > xmin)) {
        xmin -= 0.5;
        xmax += 0.5;
    }

    Canvas cv(width, height);
    const int ml = 56, mr = 170, mt = 34, mb = 40;
    const int pw = width - ml - mr, ph = height - mt - mb;
    const std::array<uint8_t, 3> black = {0, 0, 0};
    const std::array<uint8_t, 3> gray = {200, 200, 200};

    auto px = [&](double x) { return ml + (int)std::lround((x - xmin) / (xmax - xmin) * pw); };
    auto py = [&](double y) {
        return mt + ph - (int)std::lround((y - ymin) / (ymax - ymin) * ph);
    };

    // gridlines + y ticks
    for (int i = 0; i <= 5; ++i) {
        const double y = ymin + (ymax - ymin) * i / 5.0;
        cv.line(ml, py(y), ml + pw, py(y), gray, false);
        cv.text(6, py(y) - 3, fmt_num(y), black);
    }
    // x ticks at the union of sample positions (assumed shared)
    for (double x : series.front().x) {
        cv.line(px(x), mt + ph, px(x), mt + ph + 4, black, false);
        cv.text(px(x) - 8, mt + ph + 8, fmt_num(x), black);
    }
    // frame
    cv.line(ml, mt, ml, mt + ph, black, false);
    cv.line(ml, mt + ph, ml + pw, mt + ph, black, false);
    cv.text(ml, 10, title, black);

    int legend_y = mt + 6;
    for (const auto& s : series) {
        require(s.x.size() == s.y.size(), "plot: series length mismatch");
        for (size_t i = 0; i + 1 < s.x.size(); ++i)
            cv.line(px(s.x[i]), py(std::clamp(s.y[i], ymin, ymax)), px(s.x[i + 1]),
                    py(std::clamp(s.y[i + 1], ymin, ymax)), s.color, s.dashed);
        cv.line(ml + pw + 8, legend_y + 3, ml + pw + 28, legend_y + 3, s.color, s.dashed);
        cv.text(ml + pw + 34, legend_y, s.label, black);
        legend_y += 14;
    }
    write_png_rgb8(path, cv.w, cv.h, cv.rgb.data());
}

}  // namespace maptrace
