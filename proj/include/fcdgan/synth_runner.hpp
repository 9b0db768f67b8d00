// Copyright 2026 The fcdgan Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// End-to-end synthetic experiment: generate a case with known ground truth,
// train the configured regime, predict, and score. The CLI `synth --run`
// command and the acceptance suite share this code path.

#include "fcdgan/metrics.hpp"
#include "fcdgan/synthetic.hpp"
#include "fcdgan/train.hpp"

namespace fcdgan::train {

struct SynthRunResult {
    TrainReport report;
    eval::MetricsReport metrics_at_threshold;   // pooled over evaluated pairs
    double best_f1 = 0;                         // best sweep F1 (pooled counts)
    double best_threshold = 0;
    double outside_region_fraction = 0;         // probability mass outside R, changed pairs
    double disc_changed_mean_last10 = 0;        // mean of phase2.disc_changed over the last 10 epochs
    double disc_score_gap = 0;                  // |d(masked changed) - d(masked unchanged)|, last epoch
    int evaluated_pairs = 0;
};

template <typename T>
struct SynthPrediction {
    Tensor<T> prob;    // (1,H,W)
    Tensor<T> binary;  // at the configured threshold
    Tensor<T> ref;     // ground truth
    Tensor<T> region;  // region reference (may be empty)
};

namespace detail {

inline double tail_mean(const std::vector<double>& v, std::size_t n) {
    if (v.empty()) return 0.0;
    const std::size_t k = std::min(v.size(), n);
    double s = 0;
    for (std::size_t i = v.size() - k; i < v.size(); ++i) s += v[i];
    return s / static_cast<double>(k);
}

}  // namespace detail

/// Builds the regime's training set from a synthetic case, trains, and scores
/// the changed pairs. `predictions_out` (optional) receives one entry per
/// evaluated pair.
template <typename T>
SynthRunResult run_synthetic_experiment(const RunConfig& rc, Models<T>& models,
                                        std::vector<SynthPrediction<T>>* predictions_out = nullptr,
                                        const std::string& out_dir = {}) {
    const TrainConfig& cfg = rc.train;
    auto synth = data::gen_synthetic_case<T>(cfg.seed, rc.synth_changed, rc.synth_unchanged, rc.synth);

    PairSet<T> pairs;
    for (auto& p : synth.pairs) {
        PairSample<T> s;
        s.x = std::move(p.x);
        s.y = std::move(p.y);
        s.ref = std::move(p.ref);
        s.region = std::move(p.region);
        s.label = p.label;
        pairs.push_back(std::move(s));
    }
    normalize_pairs(pairs, cfg.norm_scope);

    SynthRunResult result;
    switch (cfg.regime) {
        case Regime::kUscd: {
            // tiles from the single (or first) pair; labels are not consumed
            PairSet<T> tiles;
            const auto tx = data::tile(pairs.front().x, cfg.grid);
            const auto ty = data::tile(pairs.front().y, cfg.grid);
            for (std::size_t i = 0; i < tx.size(); ++i) {
                PairSample<T> s;
                s.x = tx[i].first;
                s.y = ty[i].first;
                tiles.push_back(std::move(s));
            }
            result.report = train_uscd(tiles, cfg, models, out_dir);
            break;
        }
        case Regime::kWscd: {
            PairSet<T> changed, unchanged;
            for (auto& p : pairs) (p.label == 1 ? changed : unchanged).push_back(p);
            result.report = train_wscd(changed, unchanged, cfg, models, out_dir);
            result.disc_changed_mean_last10 =
                detail::tail_mean(result.report.series.at("phase2.disc_changed"), 10);
            const auto& sc = result.report.series.at("phase2.disc_score_changed");
            const auto& su = result.report.series.at("phase2.disc_score_unchanged");
            result.disc_score_gap = std::abs(sc.back() - su.back());
            break;
        }
        case Regime::kRscd: {
            result.report = train_rscd(pairs, cfg, models, out_dir);
            result.disc_changed_mean_last10 =
                detail::tail_mean(result.report.series.at("phase2.disc_changed"), 10);
            const auto& sc = result.report.series.at("phase2.disc_score_changed");
            const auto& su = result.report.series.at("phase2.disc_score_unchanged");
            result.disc_score_gap = std::abs(sc.back() - su.back());
            break;
        }
        case Regime::kFscd: {
            result.report = train_fscd(pairs, cfg, models, out_dir);
            break;
        }
    }

    // score the changed pairs (pooled confusion counts per threshold)
    const auto thresholds = eval::default_thresholds();
    std::vector<eval::ConfusionCounts> sweep_counts(thresholds.size());
    eval::ConfusionCounts at_threshold;
    double mass_total = 0, mass_outside = 0;
    for (const auto& p : pairs) {
        if (p.label != 1) continue;
        auto [prob, binary] = predict(*models.seg, p.x, p.y, cfg.grid, cfg.threshold);
        Tensor<T> ref = p.ref;
        ref.shape = {1, p.ref.dim(1), p.ref.dim(2)};
        at_threshold += eval::confusion(binary, ref);
        Tensor<T> bin(prob.shape);
        for (std::size_t ti = 0; ti < thresholds.size(); ++ti) {
            for (std::int64_t i = 0; i < prob.numel(); ++i)
                bin[i] = prob[i] >= static_cast<T>(thresholds[ti]) ? T(1) : T(0);
            sweep_counts[ti] += eval::confusion(bin, ref);
        }
        if (!p.region.empty()) {
            for (std::int64_t i = 0; i < prob.numel(); ++i) {
                mass_total += prob[i];
                if (p.region[i] == T(0)) mass_outside += prob[i];
            }
        }
        ++result.evaluated_pairs;
        if (predictions_out)
            predictions_out->push_back(SynthPrediction<T>{prob, binary, ref, p.region});
    }
    if (result.evaluated_pairs > 0) {
        result.metrics_at_threshold = eval::metrics_from_counts(at_threshold, cfg.threshold);
        for (std::size_t ti = 0; ti < thresholds.size(); ++ti) {
            if (sweep_counts[ti].total() == 0) continue;
            const auto rep = eval::metrics_from_counts(sweep_counts[ti], thresholds[ti]);
            if (rep.f1 > result.best_f1) {
                result.best_f1 = rep.f1;
                result.best_threshold = thresholds[ti];
            }
        }
    }
    result.outside_region_fraction = mass_total > 0 ? mass_outside / mass_total : 0.0;
    return result;
}

}  // namespace fcdgan::train
