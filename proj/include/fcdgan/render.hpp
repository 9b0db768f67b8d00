// Copyright 2026 The fcdgan Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Visual diagnostics: error-colored change maps, probability overlays, and
// loss-curve plots. Color conventions (documented, fixed):
//   error map   TP = white (255,255,255), FP = red (255,0,0),
//               FN = blue (0,0,255), TN = black (0,0,0), invalid = gray (128,128,128)
//   density     piecewise-linear colormap, anchors at
//               0 -> (0,0,255), 1/3 -> (0,255,255), 2/3 -> (255,255,0), 1 -> (255,0,0)
// Plots are simple line charts rendered into an RGB buffer.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "fcdgan/raster_io.hpp"
#include "fcdgan/tensor.hpp"

namespace fcdgan::eval {

using RgbImage = io::Raster;  // (3,H,W), u8 semantics

inline RgbImage make_rgb(int h, int w, std::array<float, 3> fill = {255, 255, 255}) {
    RgbImage img;
    img.source_type = io::PixelType::kU8;
    img.data = Tensor<float>({3, h, w});
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) img.data.at3(c, i, j) = fill[c];
    return img;
}

/// TP white, FP red, FN blue, TN black, invalid gray.
template <typename T>
RgbImage render_error_map(const Tensor<T>& binary_map, const Tensor<T>& reference,
                          const Tensor<T>* valid = nullptr) {
    require_shape(binary_map.shape == reference.shape, "render_error_map: shape mismatch");
    if (valid) require_shape(valid->shape == binary_map.shape, "render_error_map: valid mask shape mismatch");
    const int H = binary_map.dim(binary_map.rank() - 2), W = binary_map.dim(binary_map.rank() - 1);
    RgbImage img = make_rgb(H, W);
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) {
            const std::int64_t idx = static_cast<std::int64_t>(i) * W + j;
            std::array<float, 3> color;
            if (valid && (*valid)[idx] == T(0)) {
                color = {128, 128, 128};
            } else {
                const bool m = binary_map[idx] != T(0);
                const bool r = reference[idx] != T(0);
                if (m && r)
                    color = {255, 255, 255};
                else if (m && !r)
                    color = {255, 0, 0};
                else if (!m && r)
                    color = {0, 0, 255};
                else
                    color = {0, 0, 0};
            }
            for (int c = 0; c < 3; ++c) img.data.at3(c, i, j) = color[c];
        }
    return img;
}

/// Colormap anchors for the probability overlay.
inline std::array<float, 3> density_color(double p) {
    p = std::clamp(p, 0.0, 1.0);
    static const std::array<std::array<float, 3>, 4> anchors = {
        std::array<float, 3>{0, 0, 255}, {0, 255, 255}, {255, 255, 0}, {255, 0, 0}};
    const double scaled = p * 3.0;
    const int seg = std::min(2, static_cast<int>(scaled));
    const double t = scaled - seg;
    std::array<float, 3> c;
    for (int k = 0; k < 3; ++k)
        c[k] = static_cast<float>((1.0 - t) * anchors[seg][k] + t * anchors[seg + 1][k]);
    return c;
}

/// Probability map alpha-blended over a grayscale rendering of the base
/// image (robust 2-98 percentile scaling).
template <typename T>
RgbImage render_density(const Tensor<T>& prob, const Tensor<T>& base_image, double alpha = 0.5) {
    require_shape(prob.rank() >= 2, "render_density: bad probability map");
    const int H = prob.dim(prob.rank() - 2), W = prob.dim(prob.rank() - 1);
    require_shape(base_image.rank() == 3 && base_image.dim(1) == H && base_image.dim(2) == W,
                  "render_density: base image shape mismatch");

    // grayscale base: band mean, percentile-scaled
    const int C = base_image.dim(0);
    Tensor<float> gray({H, W});
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) {
            double acc = 0;
            for (int c = 0; c < C; ++c) acc += base_image.at3(c, i, j);
            gray.at2(i, j) = static_cast<float>(acc / C);
        }
    std::vector<float> sorted(gray.data.begin(), gray.data.end());
    std::sort(sorted.begin(), sorted.end());
    const float lo = sorted[static_cast<std::size_t>(0.02 * (sorted.size() - 1))];
    const float hi = sorted[static_cast<std::size_t>(0.98 * (sorted.size() - 1))];
    const float span = std::max(hi - lo, 1e-6f);

    RgbImage img = make_rgb(H, W);
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) {
            const float g = std::clamp((gray.at2(i, j) - lo) / span, 0.0f, 1.0f) * 255.0f;
            const auto c = density_color(static_cast<double>(prob[static_cast<std::int64_t>(i) * W + j]));
            for (int k = 0; k < 3; ++k)
                img.data.at3(k, i, j) =
                    static_cast<float>((1.0 - alpha) * g + alpha * c[static_cast<std::size_t>(k)]);
        }
    return img;
}

// ---------------------------------------------------------------------------
// Loss-curve plots
// ---------------------------------------------------------------------------

struct LossSeries {
    std::string term;
    std::vector<double> values;  // one per epoch
};

inline void draw_line(RgbImage& img, int x0, int y0, int x1, int y1, std::array<float, 3> color) {
    const int H = img.height(), W = img.width();
    const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
        if (y0 >= 0 && y0 < H && x0 >= 0 && x0 < W)
            for (int c = 0; c < 3; ++c) img.data.at3(c, y0, x0) = color[c];
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

/// One line chart per loss term; multiple runs overlay in distinct colors and
/// stage boundaries appear as vertical gray lines. Axes autoscale to the data.
inline RgbImage plot_loss_curves(const std::vector<std::vector<double>>& runs,
                                 const std::vector<int>& stage_boundaries = {}, int width = 640,
                                 int height = 400) {
    if (runs.empty() || runs.front().empty()) throw std::invalid_argument("plot_loss_curves: empty series");
    RgbImage img = make_rgb(height, width);
    const int ml = 48, mr = 12, mt = 12, mb = 28;  // margins
    const int pw = width - ml - mr, ph = height - mt - mb;

    std::size_t max_len = 0;
    double vmin = 1e300, vmax = -1e300;
    for (const auto& r : runs) {
        max_len = std::max(max_len, r.size());
        for (double v : r) {
            vmin = std::min(vmin, v);
            vmax = std::max(vmax, v);
        }
    }
    if (vmax <= vmin) {
        vmax = vmin + 1.0;
        vmin -= 1.0;
    }
    const double pad = 0.05 * (vmax - vmin);
    vmin -= pad;
    vmax += pad;

    auto x_of = [&](std::size_t e) {
        return ml + static_cast<int>(max_len <= 1 ? 0 : std::lround(static_cast<double>(e) * pw / (max_len - 1)));
    };
    auto y_of = [&](double v) { return mt + static_cast<int>(std::lround((vmax - v) / (vmax - vmin) * ph)); };

    // frame
    draw_line(img, ml, mt, ml, mt + ph, {0, 0, 0});
    draw_line(img, ml, mt + ph, ml + pw, mt + ph, {0, 0, 0});
    for (int b : stage_boundaries)
        if (b >= 0 && static_cast<std::size_t>(b) < max_len)
            draw_line(img, x_of(static_cast<std::size_t>(b)), mt, x_of(static_cast<std::size_t>(b)), mt + ph,
                      {180, 180, 180});

    static const std::array<std::array<float, 3>, 6> palette = {
        std::array<float, 3>{31, 119, 180}, {255, 127, 14}, {44, 160, 44},
        {214, 39, 40},                      {148, 103, 189}, {140, 86, 75}};
    for (std::size_t r = 0; r < runs.size(); ++r) {
        const auto color = palette[r % palette.size()];
        const auto& series = runs[r];
        if (series.size() == 1) {
            const int x = x_of(0), y = y_of(series[0]);
            draw_line(img, x - 2, y, x + 2, y, color);
            draw_line(img, x, y - 2, x, y + 2, color);
            continue;
        }
        for (std::size_t e = 1; e < series.size(); ++e)
            draw_line(img, x_of(e - 1), y_of(series[e - 1]), x_of(e), y_of(series[e]), color);
    }
    return img;
}

}  // namespace fcdgan::eval
