// Copyright 2026 The fcdgan Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Supervision derivation: slicing a large labelled pair into weakly labelled
// tiles, turning pixel references into region references (connected-component
// bounding boxes with expansion), simulating unchanged pairs by content
// replacement, and the minority-oversampling schedule.

#include <deque>
#include <utility>
#include <vector>

#include "fcdgan/rng.hpp"
#include "fcdgan/tensor.hpp"

namespace fcdgan::data {

template <typename T>
void require_binary(const Tensor<T>& m, const char* what) {
    for (const auto& v : m.data)
        if (v != T(0) && v != T(1)) throw std::invalid_argument(std::string(what) + ": mask must be binary {0,1}");
}

// ---------------------------------------------------------------------------
// WSCD slicing: non-overlapping slice_size tiles, labelled changed iff any
// reference pixel inside is set. Partial edge tiles are dropped.
// ---------------------------------------------------------------------------

template <typename T>
struct WscdSlice {
    Tensor<T> x, y;    // (C,s,s)
    Tensor<T> ref;     // (1,s,s), kept for evaluation only
    int label = 0;     // 1 = changed
    int row0 = 0, col0 = 0;
};

template <typename T>
std::vector<WscdSlice<T>> make_wscd_dataset(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& pixel_ref,
                                            int slice_size) {
    require_shape(x.rank() == 3 && x.shape == y.shape, "make_wscd_dataset: X/Y shape mismatch");
    require_shape(pixel_ref.rank() == 3 && pixel_ref.dim(0) == 1 && pixel_ref.dim(1) == x.dim(1) &&
                      pixel_ref.dim(2) == x.dim(2),
                  "make_wscd_dataset: reference not aligned with the pair");
    require_binary(pixel_ref, "make_wscd_dataset");
    if (slice_size < 1) throw std::invalid_argument("make_wscd_dataset: slice_size must be >= 1");

    const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
    std::vector<WscdSlice<T>> out;
    for (int r0 = 0; r0 + slice_size <= H; r0 += slice_size)
        for (int c0 = 0; c0 + slice_size <= W; c0 += slice_size) {
            WscdSlice<T> s;
            s.row0 = r0;
            s.col0 = c0;
            s.x = Tensor<T>({C, slice_size, slice_size});
            s.y = Tensor<T>({C, slice_size, slice_size});
            s.ref = Tensor<T>({1, slice_size, slice_size});
            for (int c = 0; c < C; ++c)
                for (int i = 0; i < slice_size; ++i)
                    for (int j = 0; j < slice_size; ++j) {
                        s.x.at3(c, i, j) = x.at3(c, r0 + i, c0 + j);
                        s.y.at3(c, i, j) = y.at3(c, r0 + i, c0 + j);
                    }
            s.label = 0;
            for (int i = 0; i < slice_size; ++i)
                for (int j = 0; j < slice_size; ++j) {
                    const T v = pixel_ref.at3(0, r0 + i, c0 + j);
                    s.ref.at3(0, i, j) = v;
                    if (v != T(0)) s.label = 1;
                }
            out.push_back(std::move(s));
        }
    return out;
}

// ---------------------------------------------------------------------------
// Region references: 8-connected components of the pixel reference, one
// bounding box per component, expanded symmetrically and clipped. The union
// is a guaranteed superset of the reference.
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> make_region_reference(const Tensor<T>& pixel_ref, int expansion = 10) {
    require_shape(pixel_ref.rank() == 3 && pixel_ref.dim(0) == 1, "make_region_reference: ref must be (1,H,W)");
    require_binary(pixel_ref, "make_region_reference");
    if (expansion < 0) throw std::invalid_argument("make_region_reference: expansion must be >= 0");
    const int H = pixel_ref.dim(1), W = pixel_ref.dim(2);
    Tensor<T> region({1, H, W});
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(H) * W, 0);
    std::deque<std::pair<int, int>> queue;
    for (int sr = 0; sr < H; ++sr)
        for (int sc = 0; sc < W; ++sc) {
            if (pixel_ref.at3(0, sr, sc) == T(0) || seen[static_cast<std::size_t>(sr) * W + sc]) continue;
            int rmin = sr, rmax = sr, cmin = sc, cmax = sc;
            seen[static_cast<std::size_t>(sr) * W + sc] = 1;
            queue.push_back({sr, sc});
            while (!queue.empty()) {
                auto [r, c] = queue.front();
                queue.pop_front();
                rmin = std::min(rmin, r);
                rmax = std::max(rmax, r);
                cmin = std::min(cmin, c);
                cmax = std::max(cmax, c);
                for (int dr = -1; dr <= 1; ++dr)
                    for (int dc = -1; dc <= 1; ++dc) {
                        const int nr = r + dr, nc = c + dc;
                        if (nr < 0 || nr >= H || nc < 0 || nc >= W) continue;
                        auto& flag = seen[static_cast<std::size_t>(nr) * W + nc];
                        if (flag || pixel_ref.at3(0, nr, nc) == T(0)) continue;
                        flag = 1;
                        queue.push_back({nr, nc});
                    }
            }
            rmin = std::max(0, rmin - expansion);
            cmin = std::max(0, cmin - expansion);
            rmax = std::min(H - 1, rmax + expansion);
            cmax = std::min(W - 1, cmax + expansion);
            for (int r = rmin; r <= rmax; ++r)
                for (int c = cmin; c <= cmax; ++c) region.at3(0, r, c) = T(1);
        }
    return region;
}

// ---------------------------------------------------------------------------
// Simulated unchanged pair for regional supervision: Yhat = Y*(1-R) + X*R.
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> simulate_unchanged(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& region) {
    require_shape(x.rank() == 3 && x.shape == y.shape, "simulate_unchanged: X/Y shape mismatch");
    require_shape(region.rank() == 3 && region.dim(0) == 1 && region.dim(1) == x.dim(1) &&
                      region.dim(2) == x.dim(2),
                  "simulate_unchanged: region shape mismatch");
    require_binary(region, "simulate_unchanged");
    Tensor<T> out = y;
    const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j)
            if (region.at3(0, i, j) == T(1))
                for (int c = 0; c < C; ++c) out.at3(c, i, j) = x.at3(c, i, j);
    return out;
}

// ---------------------------------------------------------------------------
// Oversampling schedule: per epoch every unchanged id appears exactly once;
// the changed list is tiled with independent shuffles until it is at least as
// long, truncated, and paired positionally.
// ---------------------------------------------------------------------------

inline std::vector<std::pair<int, int>> oversample_changed(const std::vector<int>& changed_ids,
                                                           const std::vector<int>& unchanged_ids,
                                                           std::uint64_t seed, int epoch = 0) {
    if (changed_ids.empty() || unchanged_ids.empty())
        throw std::invalid_argument("oversample_changed: both id lists must be non-empty");
    Rng rng = Rng::substream(seed, "oversample", static_cast<std::uint64_t>(epoch));
    std::vector<int> unchanged = unchanged_ids;
    rng.shuffle(unchanged);
    std::vector<int> changed;
    changed.reserve(unchanged.size() + changed_ids.size());
    while (changed.size() < unchanged.size()) {
        std::vector<int> copy = changed_ids;
        rng.shuffle(copy);
        changed.insert(changed.end(), copy.begin(), copy.end());
    }
    changed.resize(unchanged.size());
    std::vector<std::pair<int, int>> schedule(unchanged.size());
    for (std::size_t i = 0; i < unchanged.size(); ++i) schedule[i] = {changed[i], unchanged[i]};
    return schedule;
}

}  // namespace fcdgan::data
