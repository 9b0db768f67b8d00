// Copyright 2026 The fcdgan Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Binary change-detection metrics (change = positive class): overall
// accuracy, Cohen's kappa, precision, recall, F1, change-class IoU and the
// two-class mean IoU, plus threshold sweeps over a probability map.
// Degenerate denominators yield 0 with a flag rather than NaN so batch
// evaluation over empty-change tiles never crashes.

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "fcdgan/tensor.hpp"

namespace fcdgan::eval {

struct ConfusionCounts {
    std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;

    std::int64_t total() const { return tp + fp + fn + tn; }

    ConfusionCounts& operator+=(const ConfusionCounts& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        tn += o.tn;
        return *this;
    }
};

struct MetricsReport {
    double threshold = 0.5;
    ConfusionCounts counts;
    double oa = 0, kc = 0, precision = 0, recall = 0, f1 = 0, miou = 0, ciou = 0;
    bool degenerate = false;  // a denominator was empty; affected metrics are 0
};

/// Pixel counts of a binary map against a binary reference. `valid` (optional,
/// binary) excludes unlabeled pixels from the tally.
template <typename T>
ConfusionCounts confusion(const Tensor<T>& map, const Tensor<T>& reference, const Tensor<T>* valid = nullptr) {
    require_shape(map.shape == reference.shape, "confusion: shape mismatch");
    if (valid) require_shape(valid->shape == map.shape, "confusion: valid mask shape mismatch");
    ConfusionCounts c;
    for (std::int64_t i = 0; i < map.numel(); ++i) {
        const T m = map[i], r = reference[i];
        if ((m != T(0) && m != T(1)) || (r != T(0) && r != T(1)))
            throw std::invalid_argument("confusion: inputs must be binary {0,1}");
        if (valid) {
            const T v = (*valid)[i];
            if (v != T(0) && v != T(1)) throw std::invalid_argument("confusion: valid mask must be binary");
            if (v == T(0)) continue;
        }
        if (m == T(1))
            (r == T(1) ? c.tp : c.fp)++;
        else
            (r == T(1) ? c.fn : c.tn)++;
    }
    return c;
}

inline MetricsReport metrics_from_counts(const ConfusionCounts& c, double threshold = 0.5) {
    if (c.total() <= 0) throw std::invalid_argument("metrics_from_counts: no evaluated pixels");
    MetricsReport r;
    r.threshold = threshold;
    r.counts = c;
    const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
    const double fn = static_cast<double>(c.fn), tn = static_cast<double>(c.tn);
    const double n = tp + fp + fn + tn;

    auto ratio = [&r](double num, double den) {
        if (den <= 0) {
            r.degenerate = true;
            return 0.0;
        }
        return num / den;
    };

    r.oa = (tp + tn) / n;
    r.precision = ratio(tp, tp + fp);
    r.recall = ratio(tp, tp + fn);
    r.f1 = ratio(2 * r.precision * r.recall, r.precision + r.recall);
    const double pe = ((tp + fp) * (tp + fn) + (fn + tn) * (fp + tn)) / (n * n);
    r.kc = ratio(r.oa - pe, 1.0 - pe);
    r.ciou = ratio(tp, tp + fp + fn);
    r.miou = 0.5 * (r.ciou + ratio(tn, tn + fp + fn));
    return r;
}

/// Binarize prob >= t for each threshold (strictly increasing, in (0,1)).
template <typename T>
std::vector<MetricsReport> threshold_sweep(const Tensor<T>& prob, const Tensor<T>& reference,
                                           const std::vector<double>& thresholds,
                                           const Tensor<T>* valid = nullptr) {
    if (thresholds.empty()) throw std::invalid_argument("threshold_sweep: empty threshold list");
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (thresholds[i] <= 0.0 || thresholds[i] >= 1.0)
            throw std::invalid_argument("threshold_sweep: thresholds must lie in (0,1)");
        if (i && thresholds[i] <= thresholds[i - 1])
            throw std::invalid_argument("threshold_sweep: thresholds must be strictly increasing");
    }
    require_shape(prob.shape == reference.shape, "threshold_sweep: shape mismatch");
    std::vector<MetricsReport> out;
    out.reserve(thresholds.size());
    Tensor<T> bin(prob.shape);
    for (double t : thresholds) {
        for (std::int64_t i = 0; i < prob.numel(); ++i) bin[i] = prob[i] >= static_cast<T>(t) ? T(1) : T(0);
        out.push_back(metrics_from_counts(confusion(bin, reference, valid), t));
    }
    return out;
}

inline std::vector<double> default_thresholds() {
    std::vector<double> t;
    for (int i = 1; i <= 19; ++i) t.push_back(0.05 * i);
    return t;
}

/// Text form: Table-style key set plus the raw counts.
inline std::string to_text(const MetricsReport& r) {
    std::ostringstream os;
    os.precision(6);
    os << std::fixed;
    os << "threshold\t" << r.threshold << "\n";
    os << "OA\t" << r.oa << "\nKC\t" << r.kc << "\nPre\t" << r.precision << "\nRec\t" << r.recall << "\nF1\t"
       << r.f1 << "\nmIOU\t" << r.miou << "\ncIOU\t" << r.ciou << "\n";
    os << "tp\t" << r.counts.tp << "\nfp\t" << r.counts.fp << "\nfn\t" << r.counts.fn << "\ntn\t" << r.counts.tn
       << "\n";
    os << "degenerate\t" << (r.degenerate ? 1 : 0) << "\n";
    return os.str();
}

}  // namespace fcdgan::eval
