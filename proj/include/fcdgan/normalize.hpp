// Copyright 2026 The fcdgan Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <vector>

#include "fcdgan/tensor.hpp"

namespace fcdgan::data {

enum class NormScope { kPerImage, kGlobal };

inline const char* to_string(NormScope s) { return s == NormScope::kPerImage ? "per_image" : "global"; }

struct BandStats {
    std::vector<double> mean;
    std::vector<double> stddev;

    int bands() const { return static_cast<int>(mean.size()); }
};

constexpr double kStdFloor = 1e-6;

/// Per-band mean / population standard deviation of one (C,H,W) raster.
template <typename T>
BandStats compute_stats(const Tensor<T>& raster) {
    require_shape(raster.rank() == 3, "compute_stats: raster must be (C,H,W)");
    const int C = raster.dim(0);
    const std::int64_t plane = static_cast<std::int64_t>(raster.dim(1)) * raster.dim(2);
    BandStats st;
    st.mean.resize(C);
    st.stddev.resize(C);
    for (int c = 0; c < C; ++c) {
        const T* p = raster.ptr() + c * plane;
        double s = 0, s2 = 0;
        for (std::int64_t i = 0; i < plane; ++i) {
            s += p[i];
            s2 += static_cast<double>(p[i]) * p[i];
        }
        const double m = s / static_cast<double>(plane);
        st.mean[c] = m;
        st.stddev[c] = std::sqrt(std::max(0.0, s2 / static_cast<double>(plane) - m * m));
    }
    return st;
}

/// Pooled per-band stats over a training set (the "global" scope).
template <typename T>
BandStats compute_stats_over(const std::vector<const Tensor<T>*>& rasters) {
    if (rasters.empty()) throw std::invalid_argument("compute_stats_over: empty set");
    const int C = rasters.front()->dim(0);
    std::vector<double> s(C, 0), s2(C, 0);
    std::int64_t n = 0;
    for (const auto* r : rasters) {
        require_shape(r->rank() == 3 && r->dim(0) == C, "compute_stats_over: band mismatch");
        const std::int64_t plane = static_cast<std::int64_t>(r->dim(1)) * r->dim(2);
        for (int c = 0; c < C; ++c) {
            const T* p = r->ptr() + c * plane;
            for (std::int64_t i = 0; i < plane; ++i) {
                s[c] += p[i];
                s2[c] += static_cast<double>(p[i]) * p[i];
            }
        }
        n += plane;
    }
    BandStats st;
    st.mean.resize(C);
    st.stddev.resize(C);
    for (int c = 0; c < C; ++c) {
        const double m = s[c] / static_cast<double>(n);
        st.mean[c] = m;
        st.stddev[c] = std::sqrt(std::max(0.0, s2[c] / static_cast<double>(n) - m * m));
    }
    return st;
}

/// Zero-mean unit-variance per band: (x - mean) / max(std, floor).
/// `constant_band_warning` reports a floored (near-constant) band.
template <typename T>
Tensor<T> normalize(const Tensor<T>& raster, const BandStats& stats, bool* constant_band_warning = nullptr) {
    require_shape(raster.rank() == 3, "normalize: raster must be (C,H,W)");
    require_shape(raster.dim(0) == stats.bands(), "normalize: stats band count mismatch");
    const int C = raster.dim(0);
    const std::int64_t plane = static_cast<std::int64_t>(raster.dim(1)) * raster.dim(2);
    Tensor<T> out = raster;
    if (constant_band_warning) *constant_band_warning = false;
    for (int c = 0; c < C; ++c) {
        double sd = stats.stddev[c];
        if (sd < kStdFloor) {
            sd = kStdFloor;
            if (constant_band_warning) *constant_band_warning = true;
        }
        const T inv = static_cast<T>(1.0 / sd);
        const T m = static_cast<T>(stats.mean[c]);
        T* p = out.ptr() + c * plane;
        for (std::int64_t i = 0; i < plane; ++i) p[i] = (p[i] - m) * inv;
    }
    return out;
}

}  // namespace fcdgan::data
