// Copyright 2026 The fcdgan Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Synthetic benchmark generator. A pair is built from a smoothed-noise base
// raster X; the unchanged relation is a shared per-band affine map plus
// Gaussian noise, and changed pairs receive 1..max_rects axis-aligned
// rectangles whose Y content is an independent smoothed field (uninferable
// from X). Ground truth is known by construction, which is what makes the
// desk-scale acceptance experiments scoreable.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "fcdgan/dataset.hpp"
#include "fcdgan/rng.hpp"
#include "fcdgan/tensor.hpp"

namespace fcdgan::data {

struct SynthOptions {
    int size = 64;
    int bands = 4;
    double noise_sigma = 0.02;
    double frac_min = 0.02;  // requested rectangle coverage range
    double frac_max = 0.10;
    int max_rects = 3;
    int smooth_radius = 4;
    int region_expansion = 4;

    void validate() const {
        if (size < 32) throw std::invalid_argument("gen_synthetic_case: size must be >= 32");
        if (bands < 3) throw std::invalid_argument("gen_synthetic_case: bands must be >= 3");
        if (frac_min <= 0 || frac_max < frac_min || frac_max >= 0.5)
            throw std::invalid_argument("gen_synthetic_case: bad coverage fraction range");
        if (max_rects < 1) throw std::invalid_argument("gen_synthetic_case: max_rects must be >= 1");
    }
};

template <typename T>
struct SyntheticPair {
    Tensor<T> x, y;        // (bands, S, S), raw (unnormalized)
    Tensor<T> ref;         // (1, S, S) ground-truth change mask
    Tensor<T> region;      // (1, S, S) derived region reference
    int label = 0;         // 1 = changed
    double requested_fraction = 0.0;
};

template <typename T>
struct SyntheticCase {
    std::vector<SyntheticPair<T>> pairs;  // changed pairs first, then unchanged
    int n_changed = 0;
    int n_unchanged = 0;
    SynthOptions options;
};

namespace detail {

// Smoothed standard-normal field: white noise, two box-blur passes,
// restandardized to zero mean / unit variance.
template <typename T>
Tensor<T> smooth_field(Rng& rng, int h, int w, int radius) {
    Tensor<T> f({1, h, w});
    for (auto& v : f.data) v = static_cast<T>(rng.normal());
    Tensor<T> tmp = f;
    for (int pass = 0; pass < 2; ++pass) {
        // rows
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) {
                double acc = 0;
                int cnt = 0;
                for (int d = -radius; d <= radius; ++d) {
                    const int jj = j + d;
                    if (jj >= 0 && jj < w) {
                        acc += f.at3(0, i, jj);
                        ++cnt;
                    }
                }
                tmp.at3(0, i, j) = static_cast<T>(acc / cnt);
            }
        // cols
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) {
                double acc = 0;
                int cnt = 0;
                for (int d = -radius; d <= radius; ++d) {
                    const int ii = i + d;
                    if (ii >= 0 && ii < h) {
                        acc += tmp.at3(0, ii, j);
                        ++cnt;
                    }
                }
                f.at3(0, i, j) = static_cast<T>(acc / cnt);
            }
    }
    double s = 0, s2 = 0;
    for (auto v : f.data) {
        s += v;
        s2 += static_cast<double>(v) * v;
    }
    const double m = s / f.numel();
    const double sd = std::sqrt(std::max(1e-12, s2 / f.numel() - m * m));
    for (auto& v : f.data) v = static_cast<T>((v - m) / sd);
    return f;
}

struct Rect {
    int r0, c0, h, w;
    bool overlaps(const Rect& o) const {
        return r0 < o.r0 + o.h && o.r0 < r0 + h && c0 < o.c0 + o.w && o.c0 < c0 + w;
    }
};

}  // namespace detail

/// Deterministic synthetic dataset: identical seeds give bitwise-identical
/// cases. Changed pairs get 1..max_rects rectangles totalling a requested
/// fraction of the pixels; unchanged pairs get none.
template <typename T>
SyntheticCase<T> gen_synthetic_case(std::uint64_t seed, int n_changed, int n_unchanged,
                                    const SynthOptions& opt = {}) {
    opt.validate();
    SyntheticCase<T> out;
    out.options = opt;
    out.n_changed = n_changed;
    out.n_unchanged = n_unchanged;
    const int S = opt.size, B = opt.bands;

    // one shared unchanged relation for the whole case
    Rng rel = Rng::substream(seed, "synth.relation");
    std::vector<double> gain(B), offset(B);
    for (int b = 0; b < B; ++b) {
        gain[b] = rel.uniform(0.75, 1.25);
        offset[b] = rel.uniform(-0.25, 0.25);
    }

    const int total = n_changed + n_unchanged;
    for (int p = 0; p < total; ++p) {
        const bool changed = p < n_changed;
        Rng rng = Rng::substream(seed, "synth.pair", static_cast<std::uint64_t>(p));
        SyntheticPair<T> pair;
        pair.label = changed ? 1 : 0;
        pair.x = Tensor<T>({B, S, S});
        pair.y = Tensor<T>({B, S, S});
        pair.ref = Tensor<T>({1, S, S});

        for (int b = 0; b < B; ++b) {
            Tensor<T> base = detail::smooth_field<T>(rng, S, S, opt.smooth_radius);
            for (int i = 0; i < S; ++i)
                for (int j = 0; j < S; ++j) {
                    const double xv = base.at3(0, i, j);
                    pair.x.at3(b, i, j) = static_cast<T>(xv);
                    pair.y.at3(b, i, j) =
                        static_cast<T>(gain[b] * xv + offset[b] + opt.noise_sigma * rng.normal());
                }
        }

        if (changed) {
            const double want = rng.uniform(opt.frac_min, opt.frac_max);
            pair.requested_fraction = want;
            const int k = 1 + rng.uniform_int(opt.max_rects);
            std::vector<detail::Rect> rects;
            const double area_each = want * S * S / k;
            for (int r = 0; r < k; ++r) {
                for (int attempt = 0; attempt < 200; ++attempt) {
                    const double aspect = rng.uniform(0.5, 2.0);
                    int h = std::clamp(static_cast<int>(std::lround(std::sqrt(area_each * aspect))), 3, S / 2);
                    int w = std::clamp(static_cast<int>(std::lround(area_each / h)), 3, S / 2);
                    detail::Rect cand{rng.uniform_int(S - h), rng.uniform_int(S - w), h, w};
                    bool ok = true;
                    for (const auto& o : rects)
                        if (cand.overlaps(o)) {
                            ok = false;
                            break;
                        }
                    if (ok) {
                        rects.push_back(cand);
                        break;
                    }
                }
            }
            for (const auto& r : rects) {
                // independent content: smoothed field with its own gain/shift,
                // clearly violating the shared affine relation
                for (int b = 0; b < B; ++b) {
                    Tensor<T> field = detail::smooth_field<T>(rng, r.h, r.w, std::max(1, opt.smooth_radius / 2));
                    const double g2 = rng.uniform(0.8, 1.4);
                    const double shift = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.8, 1.6);
                    for (int i = 0; i < r.h; ++i)
                        for (int j = 0; j < r.w; ++j)
                            pair.y.at3(b, r.r0 + i, r.c0 + j) =
                                static_cast<T>(g2 * field.at3(0, i, j) + shift +
                                               opt.noise_sigma * rng.normal());
                }
                for (int i = 0; i < r.h; ++i)
                    for (int j = 0; j < r.w; ++j) pair.ref.at3(0, r.r0 + i, r.c0 + j) = T(1);
            }
        }
        pair.region = make_region_reference(pair.ref, opt.region_expansion);
        out.pairs.push_back(std::move(pair));
    }
    return out;
}

/// The 8 dihedral transforms (identity, rotations, flips) of a (C,H,W)
/// raster; used to expand tiny training sets.
template <typename T>
Tensor<T> dihedral(const Tensor<T>& t, int which) {
    require_shape(t.rank() == 3, "dihedral: raster must be (C,H,W)");
    const int C = t.dim(0), H = t.dim(1), W = t.dim(2);
    const bool swap = (which & 4) != 0;  // transpose
    Tensor<T> out(swap ? std::vector<int>{C, W, H} : std::vector<int>{C, H, W});
    for (int c = 0; c < C; ++c)
        for (int i = 0; i < H; ++i)
            for (int j = 0; j < W; ++j) {
                const int ii = (which & 1) ? H - 1 - i : i;
                const int jj = (which & 2) ? W - 1 - j : j;
                if (swap)
                    out.at3(c, jj, ii) = t.at3(c, i, j);
                else
                    out.at3(c, ii, jj) = t.at3(c, i, j);
            }
    return out;
}

}  // namespace fcdgan::data
