// Copyright 2026 The fcdgan Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Overlap tiling for fully convolutional inference on large rasters: tiles of
// input_size = core_size + 2*context are cut so that their core regions cover
// the raster; only core outputs are kept when stitching, which suppresses
// edge artifacts. Border context comes from reflect padding. When an extent
// is not divisible by core_size the last core cell is shifted flush to the
// edge and stitching lets later writes win.

#include <utility>
#include <vector>

#include "fcdgan/tensor.hpp"

namespace fcdgan::data {

struct TileGrid {
    int input_size = 220;
    int core_size = 200;
    int context = 10;

    void validate() const {
        if (core_size < 1 || context < 0) throw std::invalid_argument("TileGrid: core_size >= 1, context >= 0");
        if (input_size != core_size + 2 * context)
            throw std::invalid_argument("TileGrid: input_size must equal core_size + 2*context");
    }
};

/// Core rectangle in raster coordinates.
struct TilePlacement {
    int row0 = 0;
    int col0 = 0;
    int rows = 0;
    int cols = 0;
};

inline std::vector<int> core_origins(int extent, int core) {
    if (extent < core) throw ShapeError("tile: raster extent smaller than core size");
    std::vector<int> origins;
    const int n = (extent + core - 1) / core;
    for (int i = 0; i < n; ++i) {
        int r = i * core;
        if (r + core > extent) r = extent - core;  // shifted final cell
        origins.push_back(r);
    }
    return origins;
}

namespace detail {
inline int reflect_index(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * n - 2 - i;
    }
    return i;
}
}  // namespace detail

/// Cut one raster (C,H,W) into input_size tiles, one per core cell.
template <typename T>
std::vector<std::pair<Tensor<T>, TilePlacement>> tile(const Tensor<T>& raster, const TileGrid& grid) {
    grid.validate();
    require_shape(raster.rank() == 3, "tile: raster must be (C,H,W)");
    const int C = raster.dim(0), H = raster.dim(1), W = raster.dim(2);
    const auto rows = core_origins(H, grid.core_size);
    const auto cols = core_origins(W, grid.core_size);
    std::vector<std::pair<Tensor<T>, TilePlacement>> out;
    out.reserve(rows.size() * cols.size());
    for (int r0 : rows)
        for (int c0 : cols) {
            Tensor<T> t({C, grid.input_size, grid.input_size});
            for (int c = 0; c < C; ++c)
                for (int i = 0; i < grid.input_size; ++i) {
                    const int sr = detail::reflect_index(r0 - grid.context + i, H);
                    for (int j = 0; j < grid.input_size; ++j)
                        t.at3(c, i, j) = raster.at3(c, sr, detail::reflect_index(c0 - grid.context + j, W));
                }
            out.push_back({std::move(t), TilePlacement{r0, c0, grid.core_size, grid.core_size}});
        }
    return out;
}

/// Core region of a tile-sized map (the center core_size^2 block).
template <typename T>
Tensor<T> core_of(const Tensor<T>& tile_map, const TileGrid& grid) {
    require_shape(tile_map.rank() == 3 && tile_map.dim(1) == grid.input_size && tile_map.dim(2) == grid.input_size,
                  "core_of: map does not match the tile geometry");
    const int C = tile_map.dim(0);
    Tensor<T> out({C, grid.core_size, grid.core_size});
    for (int c = 0; c < C; ++c)
        for (int i = 0; i < grid.core_size; ++i)
            for (int j = 0; j < grid.core_size; ++j)
                out.at3(c, i, j) = tile_map.at3(c, grid.context + i, grid.context + j);
    return out;
}

/// Reassemble core maps into an (C,H,W) raster. Placements must cover every
/// pixel; overlapping cores (shifted final cells) resolve to the later write.
template <typename T>
Tensor<T> stitch(const std::vector<std::pair<Tensor<T>, TilePlacement>>& cores, int H, int W) {
    if (cores.empty()) throw ShapeError("stitch: no tiles");
    const int C = cores.front().first.dim(0);
    Tensor<T> out({C, H, W});
    std::vector<std::uint8_t> covered(static_cast<std::size_t>(H) * W, 0);
    for (const auto& [map, place] : cores) {
        require_shape(map.rank() == 3 && map.dim(0) == C && map.dim(1) == place.rows && map.dim(2) == place.cols,
                      "stitch: core map does not match its placement");
        require_shape(place.row0 >= 0 && place.col0 >= 0 && place.row0 + place.rows <= H &&
                          place.col0 + place.cols <= W,
                      "stitch: placement outside raster");
        for (int c = 0; c < C; ++c)
            for (int i = 0; i < place.rows; ++i)
                for (int j = 0; j < place.cols; ++j)
                    out.at3(c, place.row0 + i, place.col0 + j) = map.at3(c, i, j);
        for (int i = 0; i < place.rows; ++i)
            for (int j = 0; j < place.cols; ++j)
                covered[static_cast<std::size_t>(place.row0 + i) * W + place.col0 + j] = 1;
    }
    for (std::size_t i = 0; i < covered.size(); ++i)
        if (!covered[i]) throw ShapeError("stitch: uncovered pixel at flat index " + std::to_string(i));
    return out;
}

}  // namespace fcdgan::data
