#include "nloch/plot.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

#include "nloch/errors.hpp"

namespace nloch {

namespace {

using Rgb = std::array<unsigned char, 3>;

struct Image {
    int w, h;
    std::vector<unsigned char> px;

    Image(int w_, int h_) : w(w_), h(h_), px(static_cast<std::size_t>(w_) * h_ * 3, 255) {}

    void put(int x, int y, const Rgb& c) {
        if (x < 0 || y < 0 || x >= w || y >= h) return;
        auto* p = &px[(static_cast<std::size_t>(y) * w + x) * 3];
        p[0] = c[0];
        p[1] = c[1];
        p[2] = c[2];
    }

    void line(int x0, int y0, int x1, int y1, const Rgb& c) {
        const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
        const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
        int err = dx + dy;
        for (;;) {
            put(x0, y0, c);
            put(x0 + 1, y0, c);
            put(x0, y0 + 1, c);
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
        }
    }

    void box(int cx, int cy, int r, const Rgb& c) {
        for (int y = cy - r; y <= cy + r; ++y)
            for (int x = cx - r; x <= cx + r; ++x) put(x, y, c);
    }
};

void save(const std::filesystem::path& path, const Image& img) {
    FILE* fp = std::fopen(path.string().c_str(), "wb");
    if (!fp) throw Error("cannot write " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw Error("libpng failed writing " + path.string());
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, img.w, img.h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.h; ++y)
        png_write_row(png, const_cast<png_bytep>(&img.px[static_cast<std::size_t>(y) * img.w * 3]));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

// Piecewise linear approximation of viridis.
Rgb colormap(double t) {
    static const double stops[5][3] = {
        {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
    t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0) * 4.0;
    const int k = std::min(3, static_cast<int>(t));
    const double u = t - k;
    Rgb c;
    for (int i = 0; i < 3; ++i) c[i] = static_cast<unsigned char>(std::lround(stops[k][i] * (1 - u) + stops[k + 1][i] * u));
    return c;
}

const Rgb palette[6] = {{31, 119, 180}, {214, 39, 40}, {44, 160, 44}, {148, 103, 189}, {255, 127, 14}, {23, 190, 207}};

} // namespace

void write_heatmap_png(const std::filesystem::path& path, const Field& f, double lo, double hi) {
    if (f.empty()) throw Error("heatmap: empty field");
    const Grid2D& g = f.grid();
    if (lo >= hi) {
        lo = f.min();
        hi = f.max();
        if (hi <= lo) hi = lo + 1.0;
    }
    const int s = std::max(1, 384 / std::max(g.nx, g.ny));
    Image img(g.nx * s, g.ny * s);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const Rgb c = colormap((f.at(i, j) - lo) / (hi - lo));
            for (int y = 0; y < s; ++y)
                for (int x = 0; x < s; ++x) img.put(i * s + x, (g.ny - 1 - j) * s + y, c);
        }
    save(path, img);
}

void write_loglog_png(const std::filesystem::path& path, const std::vector<PlotSeries>& series, int width,
                      int height) {
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& s : series)
        for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
            if (!(s.x[k] > 0 && s.y[k] > 0) || !std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
            xmin = std::min(xmin, std::log10(s.x[k]));
            xmax = std::max(xmax, std::log10(s.x[k]));
            ymin = std::min(ymin, std::log10(s.y[k]));
            ymax = std::max(ymax, std::log10(s.y[k]));
        }
    Image img(width, height);
    const int m = 40;
    const Rgb axis{0, 0, 0}, grid{220, 220, 220};
    if (!std::isfinite(xmin)) {
        xmin = ymin = 0;
        xmax = ymax = 1;
    }
    xmin = std::floor(xmin);
    xmax = std::max(std::ceil(xmax), xmin + 1);
    ymin = std::floor(ymin);
    ymax = std::max(std::ceil(ymax), ymin + 1);
    auto X = [&](double lx) { return m + static_cast<int>(std::lround((lx - xmin) / (xmax - xmin) * (width - 2 * m))); };
    auto Y = [&](double ly) {
        return height - m - static_cast<int>(std::lround((ly - ymin) / (ymax - ymin) * (height - 2 * m)));
    };
    for (double d = xmin; d <= xmax + 1e-9; d += 1) img.line(X(d), Y(ymin), X(d), Y(ymax), grid);
    for (double d = ymin; d <= ymax + 1e-9; d += 1) img.line(X(xmin), Y(d), X(xmax), Y(d), grid);
    img.line(X(xmin), Y(ymin), X(xmax), Y(ymin), axis);
    img.line(X(xmin), Y(ymin), X(xmin), Y(ymax), axis);
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const Rgb c = palette[si % 6];
        int px = 0, py = 0;
        bool have = false;
        for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
            if (!(s.x[k] > 0 && s.y[k] > 0) || !std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) {
                have = false;
                continue;
            }
            const int x = X(std::log10(s.x[k])), y = Y(std::log10(s.y[k]));
            if (have) img.line(px, py, x, y, c);
            img.box(x, y, 3, c);
            px = x;
            py = y;
            have = true;
        }
    }
    save(path, img);
}

} // namespace nloch
