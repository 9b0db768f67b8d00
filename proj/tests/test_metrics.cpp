// Copyright 2026 The fcdgan Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "fcdgan/metrics.hpp"
#include "fcdgan/rng.hpp"

using namespace fcdgan;
using namespace fcdgan::eval;

TEST_CASE("confusion counts on crafted maps", "[metrics]") {
    Tensor<float> map({1, 4, 4}), ref({1, 4, 4});
    // hand-built 4x4: 3 tp, 2 fp, 1 fn, 10 tn
    map.at3(0, 0, 0) = map.at3(0, 0, 1) = map.at3(0, 1, 1) = 1;  // tp
    ref.at3(0, 0, 0) = ref.at3(0, 0, 1) = ref.at3(0, 1, 1) = 1;
    map.at3(0, 2, 2) = map.at3(0, 2, 3) = 1;  // fp
    ref.at3(0, 3, 3) = 1;                     // fn
    auto c = confusion(map, ref);
    REQUIRE(c.tp == 3);
    REQUIRE(c.fp == 2);
    REQUIRE(c.fn == 1);
    REQUIRE(c.tn == 10);
    REQUIRE(c.total() == 16);

    SECTION("map == reference has no errors") {
        auto c2 = confusion(ref, ref);
        REQUIRE(c2.fp == 0);
        REQUIRE(c2.fn == 0);
    }
    SECTION("inverted map has no agreements") {
        Tensor<float> inv({1, 4, 4});
        for (std::int64_t i = 0; i < inv.numel(); ++i) inv[i] = 1.0f - ref[i];
        auto c2 = confusion(inv, ref);
        REQUIRE(c2.tp == 0);
        REQUIRE(c2.tn == 0);
    }
    SECTION("valid mask excludes pixels") {
        Tensor<float> valid({1, 4, 4}, 1.0f);
        valid.at3(0, 2, 2) = 0.0f;  // drop one fp
        auto c2 = confusion(map, ref, &valid);
        REQUIRE(c2.fp == 1);
        REQUIRE(c2.total() == 15);
    }
    SECTION("non-binary inputs rejected") {
        Tensor<float> soft({1, 4, 4}, 0.5f);
        REQUIRE_THROWS_AS(confusion(soft, ref), std::invalid_argument);
    }
}

TEST_CASE("metrics_from_counts reproduces hand-verified values", "[metrics]") {
    // worked example: tp=50 fp=10 fn=20 tn=920 (N=1000)
    //   OA = 970/1000, Pre = 50/60, Rec = 50/70, F1 = 2PR/(P+R) = 10/13
    //   pe = (60*70 + 940*930)/1e6 = 0.8784, KC = (0.97-0.8784)/0.1216
    //   cIOU = 50/80, mIOU = (0.625 + 920/950)/2
    auto r = metrics_from_counts({50, 10, 20, 920});
    REQUIRE_THAT(r.oa, Catch::Matchers::WithinAbs(0.97, 1e-9));
    REQUIRE_THAT(r.precision, Catch::Matchers::WithinAbs(50.0 / 60.0, 1e-9));
    REQUIRE_THAT(r.recall, Catch::Matchers::WithinAbs(50.0 / 70.0, 1e-9));
    REQUIRE_THAT(r.f1, Catch::Matchers::WithinAbs(10.0 / 13.0, 1e-9));
    REQUIRE_THAT(r.kc, Catch::Matchers::WithinAbs((0.97 - 0.8784) / (1.0 - 0.8784), 1e-9));
    REQUIRE_THAT(r.ciou, Catch::Matchers::WithinAbs(0.625, 1e-9));
    REQUIRE_THAT(r.miou, Catch::Matchers::WithinAbs(0.5 * (0.625 + 920.0 / 950.0), 1e-9));
    REQUIRE_FALSE(r.degenerate);
}

TEST_CASE("metrics: perfect and degenerate conventions", "[metrics]") {
    auto perfect = metrics_from_counts({40, 0, 0, 60});
    REQUIRE(perfect.oa == 1.0);
    REQUIRE(perfect.precision == 1.0);
    REQUIRE(perfect.recall == 1.0);
    REQUIRE(perfect.f1 == 1.0);
    REQUIRE(perfect.kc == 1.0);
    REQUIRE(perfect.ciou == 1.0);
    REQUIRE(perfect.miou == 1.0);

    // all-negative prediction on all-negative truth
    auto empty = metrics_from_counts({0, 0, 0, 100});
    REQUIRE(empty.oa == 1.0);
    REQUIRE(empty.precision == 0.0);
    REQUIRE(empty.recall == 0.0);
    REQUIRE(empty.f1 == 0.0);
    REQUIRE(empty.ciou == 0.0);
    REQUIRE(empty.kc == 0.0);
    REQUIRE(empty.degenerate);

    REQUIRE_THROWS_AS(metrics_from_counts({0, 0, 0, 0}), std::invalid_argument);
}

TEST_CASE("metrics match a brute-force per-pixel evaluator on 1000 random maps", "[metrics][oracle]") {
    Rng rng(9);
    for (int trial = 0; trial < 1000; ++trial) {
        const int h = 3 + rng.uniform_int(6), w = 3 + rng.uniform_int(6);
        Tensor<float> map({1, h, w}), ref({1, h, w});
        const double p_map = rng.uniform(), p_ref = rng.uniform();
        for (auto& v : map.data) v = rng.uniform() < p_map ? 1.0f : 0.0f;
        for (auto& v : ref.data) v = rng.uniform() < p_ref ? 1.0f : 0.0f;

        // independent tally and formula evaluation
        std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
        for (std::int64_t i = 0; i < map.numel(); ++i) {
            if (map[i] == 1.0f && ref[i] == 1.0f) ++tp;
            if (map[i] == 1.0f && ref[i] == 0.0f) ++fp;
            if (map[i] == 0.0f && ref[i] == 1.0f) ++fn;
            if (map[i] == 0.0f && ref[i] == 0.0f) ++tn;
        }
        auto c = confusion(map, ref);
        REQUIRE(c.tp == tp);
        REQUIRE(c.fp == fp);
        REQUIRE(c.fn == fn);
        REQUIRE(c.tn == tn);

        auto r = metrics_from_counts(c);
        const double n = static_cast<double>(tp + fp + fn + tn);
        REQUIRE(r.oa == (tp + tn) / n);
        if (tp + fp > 0) REQUIRE(r.precision == tp / static_cast<double>(tp + fp));
        if (tp + fn > 0) REQUIRE(r.recall == tp / static_cast<double>(tp + fn));
        if (tp + fp + fn > 0) REQUIRE(r.ciou == tp / static_cast<double>(tp + fp + fn));

        // algebraic identity: F1 = 2*cIOU / (1 + cIOU)
        REQUIRE_THAT(r.f1, Catch::Matchers::WithinAbs(2.0 * r.ciou / (1.0 + r.ciou), 1e-12));
    }
}

TEST_CASE("threshold sweep: monotone counts and constant curves", "[metrics]") {
    Rng rng(11);
    Tensor<float> prob({1, 16, 16}), ref({1, 16, 16});
    for (auto& v : prob.data) v = static_cast<float>(rng.uniform());
    for (auto& v : ref.data) v = rng.uniform() < 0.3 ? 1.0f : 0.0f;

    auto grid = default_thresholds();
    REQUIRE(grid.size() == 19);
    REQUIRE_THAT(grid.front(), Catch::Matchers::WithinAbs(0.05, 1e-12));
    REQUIRE_THAT(grid.back(), Catch::Matchers::WithinAbs(0.95, 1e-12));

    auto sweep = threshold_sweep(prob, ref, grid);
    REQUIRE(sweep.size() == grid.size());
    for (std::size_t i = 1; i < sweep.size(); ++i) {
        REQUIRE(sweep[i].counts.tp <= sweep[i - 1].counts.tp);
        REQUIRE(sweep[i].counts.fp <= sweep[i - 1].counts.fp);
    }

    SECTION("already-binary probability map gives a constant curve") {
        Tensor<float> bin({1, 16, 16});
        for (auto& v : bin.data) v = rng.uniform() < 0.5 ? 1.0f : 0.0f;
        auto s = threshold_sweep(bin, ref, grid);
        for (const auto& rep : s) {
            REQUIRE(rep.counts.tp == s.front().counts.tp);
            REQUIRE(rep.counts.fp == s.front().counts.fp);
        }
    }

    SECTION("invalid threshold lists rejected") {
        REQUIRE_THROWS_AS(threshold_sweep(prob, ref, {}), std::invalid_argument);
        REQUIRE_THROWS_AS(threshold_sweep(prob, ref, {0.5, 0.5}), std::invalid_argument);
        REQUIRE_THROWS_AS(threshold_sweep(prob, ref, {0.0, 0.5}), std::invalid_argument);
    }
}

TEST_CASE("metrics text form carries the table key set", "[metrics]") {
    auto r = metrics_from_counts({50, 10, 20, 920}, 0.5);
    const auto text = to_text(r);
    for (const char* key : {"OA", "KC", "Pre", "Rec", "F1", "mIOU", "cIOU", "tp", "fp", "fn", "tn"})
        REQUIRE(text.find(key) != std::string::npos);
}
