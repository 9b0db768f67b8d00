// Copyright 2026 The fcdgan Authors
// SPDX-License-Identifier: Apache-2.0
//
// Loss oracles: every loss is compared against an independent scalar
// double-loop reference, trivial identities are asserted exactly, and the
// adversarial objectives are checked for gradient isolation.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fcdgan/losses.hpp"

using namespace fcdgan;
using losses::LossWeights;

namespace {

template <typename T>
Tensor<T> random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor<T> t(std::move(shape));
    for (auto& v : t.data) v = static_cast<T>(rng.uniform(lo, hi));
    return t;
}

// ---- independent double-loop references (kept deliberately naive) ----------

double ref_generation_loss(const Tensor<double>& gen, const Tensor<double>& y, const Tensor<double>& mask) {
    const int C = gen.dim(0), H = gen.dim(1), W = gen.dim(2);
    double num = 0, den = 0;
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) {
            double err = 0;
            for (int c = 0; c < C; ++c) err += std::abs(gen.at3(c, i, j) - y.at3(c, i, j));
            err /= C;
            const double w = 1.0 - mask.at3(0, i, j);
            num += w * err;
            den += w;
        }
    return num / (den + 1e-8);
}

double ref_sparsity(const Tensor<double>& mask) {
    double s = 0;
    for (auto v : mask.data) s += std::abs(v);
    return s / static_cast<double>(mask.numel());
}

double ref_suppression(const Tensor<double>& mask, const Tensor<double>* support) {
    double s = 0;
    for (std::int64_t i = 0; i < mask.numel(); ++i) {
        const double v = support ? mask[i] * (*support)[i] : mask[i];
        s += v * v;
    }
    return s / static_cast<double>(mask.numel());
}

double ref_bce(const Tensor<double>& prob, const Tensor<double>& ref) {
    double s = 0;
    for (std::int64_t i = 0; i < prob.numel(); ++i) {
        double p = std::min(std::max(prob[i], losses::kBceClamp), 1.0 - losses::kBceClamp);
        s += -(ref[i] * std::log(p) + (1.0 - ref[i]) * std::log(1.0 - p));
    }
    return s / static_cast<double>(prob.numel());
}

}  // namespace

TEST_CASE("generation_loss: trivial identities", "[losses]") {
    Rng rng(1);
    auto y = random_tensor<double>({4, 8, 8}, rng);
    Tensor<double> zero_mask({1, 8, 8});
    REQUIRE(losses::generation_loss_value<double>(y, y, zero_mask, 0.0) == 0.0);

    auto gen = random_tensor<double>({4, 8, 8}, rng);
    Tensor<double> ones_mask({1, 8, 8}, 1.0);
    REQUIRE(losses::generation_loss_value<double>(gen, y, ones_mask, 0.0) == 0.0);
}

TEST_CASE("generation_loss matches the double-loop reference on 100 instances", "[losses][oracle]") {
    Rng rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        auto gen = random_tensor<double>({4, 8, 8}, rng, -2, 2);
        auto y = random_tensor<double>({4, 8, 8}, rng, -2, 2);
        auto mask = random_tensor<double>({1, 8, 8}, rng, 0, 1);
        const double got = losses::generation_loss_value<double>(gen, y, mask, 0.0);
        const double want = ref_generation_loss(gen, y, mask);
        REQUIRE_THAT(got, Catch::Matchers::WithinRel(want, 1e-5));
    }
}

TEST_CASE("generation_loss is invariant to consistent pixel permutation", "[losses][property]") {
    Rng rng(3);
    auto gen = random_tensor<double>({3, 6, 6}, rng);
    auto y = random_tensor<double>({3, 6, 6}, rng);
    auto mask = random_tensor<double>({1, 6, 6}, rng, 0, 1);
    const double base = losses::generation_loss_value<double>(gen, y, mask, 0.0);

    std::vector<int> perm(36);
    for (int i = 0; i < 36; ++i) perm[i] = i;
    rng.shuffle(perm);
    Tensor<double> gen_p = gen, y_p = y, mask_p = mask;
    for (int p = 0; p < 36; ++p) {
        const int q = perm[p];
        for (int c = 0; c < 3; ++c) {
            gen_p.data[c * 36 + p] = gen.data[c * 36 + q];
            y_p.data[c * 36 + p] = y.data[c * 36 + q];
        }
        mask_p.data[p] = mask.data[q];
    }
    const double permuted = losses::generation_loss_value<double>(gen_p, y_p, mask_p, 0.0);
    REQUIRE_THAT(permuted, Catch::Matchers::WithinRel(base, 1e-12));
}

TEST_CASE("generation_loss content term responds to masked content", "[losses]") {
    nets::ContentExtractor<double> phi(nets::ContentConfig{8, 4});
    Rng rng(4);
    auto gen = random_tensor<double>({4, 16, 16}, rng);
    auto y = random_tensor<double>({4, 16, 16}, rng);
    Tensor<double> zero_mask({1, 16, 16});
    const double with_content = losses::generation_loss_value<double>(gen, y, zero_mask, 0.5, &phi);
    const double without = losses::generation_loss_value<double>(gen, y, zero_mask, 0.0);
    REQUIRE(with_content > without);
    // identical inputs: content term exactly zero
    REQUIRE(losses::generation_loss_value<double>(y, y, zero_mask, 0.5, &phi) == 0.0);
}

TEST_CASE("sparsity_l1: trivial values and oracle", "[losses]") {
    Tensor<double> zero({1, 8, 8});
    REQUIRE(losses::sparsity_l1_value(zero) == 0.0);
    Tensor<double> ones({1, 8, 8}, 1.0);
    REQUIRE(losses::sparsity_l1_value(ones) == 1.0);
    Tensor<double> half({1, 8, 8});
    for (int i = 0; i < 32; ++i) half[i] = 1.0;
    REQUIRE(losses::sparsity_l1_value(half) == 0.5);

    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        auto m = random_tensor<double>({1, 8, 8}, rng, 0, 1);
        REQUIRE_THAT(losses::sparsity_l1_value(m), Catch::Matchers::WithinRel(ref_sparsity(m), 1e-5));
    }
}

TEST_CASE("suppression_l2: trivial values, half-support case, oracle", "[losses]") {
    Tensor<double> zero({1, 8, 8});
    REQUIRE(losses::suppression_l2_value<double>(zero) == 0.0);
    Tensor<double> ones({1, 8, 8}, 1.0);
    REQUIRE(losses::suppression_l2_value<double>(ones, &ones) == 1.0);

    // mask 0.5 everywhere, support half the image -> mean (0.5*support)^2 = 0.125
    Tensor<double> half_mask({1, 8, 8}, 0.5);
    Tensor<double> support({1, 8, 8});
    for (int i = 0; i < 32; ++i) support[i] = 1.0;
    REQUIRE_THAT(losses::suppression_l2_value<double>(half_mask, &support),
                 Catch::Matchers::WithinRel(0.125, 1e-12));

    Rng rng(6);
    for (int trial = 0; trial < 100; ++trial) {
        auto m = random_tensor<double>({1, 8, 8}, rng, 0, 1);
        auto s = random_tensor<double>({1, 8, 8}, rng, 0, 1);
        for (auto& v : s.data) v = v > 0.5 ? 1.0 : 0.0;
        REQUIRE_THAT(losses::suppression_l2_value<double>(m, &s),
                     Catch::Matchers::WithinRel(ref_suppression(m, &s), 1e-5));
        REQUIRE_THAT(losses::suppression_l2_value<double>(m),
                     Catch::Matchers::WithinRel(ref_suppression(m, nullptr), 1e-5));
    }
}

TEST_CASE("masked_pair: identity, zeroing, single pixel", "[losses]") {
    Rng rng(7);
    auto x = random_tensor<double>({3, 5, 5}, rng);
    auto y = random_tensor<double>({3, 5, 5}, rng);
    Tensor<double> zero({1, 5, 5});
    auto [x0, y0] = losses::masked_pair_value(x, y, zero);
    REQUIRE(x0.data == x.data);
    REQUIRE(y0.data == y.data);

    Tensor<double> ones({1, 5, 5}, 1.0);
    auto [x1, y1] = losses::masked_pair_value(x, y, ones);
    for (auto v : x1.data) REQUIRE(v == 0.0);
    for (auto v : y1.data) REQUIRE(v == 0.0);

    Tensor<double> single({1, 5, 5});
    single.at3(0, 2, 3) = 1.0;
    auto [xs, ys] = losses::masked_pair_value(x, y, single);
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j) {
                const bool hit = (i == 2 && j == 3);
                REQUIRE(xs.at4(0, c, i, j) == (hit ? 0.0 : x.at3(c, i, j)));
                REQUIRE(ys.at4(0, c, i, j) == (hit ? 0.0 : y.at3(c, i, j)));
            }
}

TEST_CASE("fscd_loss: trivial values and oracle", "[losses]") {
    Tensor<double> ref({1, 8, 8});
    for (int i = 0; i < 20; ++i) ref[i] = 1.0;
    REQUIRE(losses::fscd_loss_value(ref, ref) < 1e-6);  // clamp-induced floor

    Tensor<double> half({1, 8, 8}, 0.5);
    Tensor<double> any_ref({1, 8, 8});
    for (int i = 0; i < 30; ++i) any_ref[i] = 1.0;
    REQUIRE_THAT(losses::fscd_loss_value(half, any_ref), Catch::Matchers::WithinRel(std::log(2.0), 1e-9));

    Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        auto prob = random_tensor<double>({1, 16, 16}, rng, 0.001, 0.999);
        Tensor<double> r({1, 16, 16});
        for (auto& v : r.data) v = rng.uniform() > 0.5 ? 1.0 : 0.0;
        REQUIRE_THAT(losses::fscd_loss_value(prob, r), Catch::Matchers::WithinRel(ref_bce(prob, r), 1e-6));
    }

    Tensor<double> bad({1, 8, 8}, 0.5);
    REQUIRE_THROWS_AS(losses::fscd_loss_value(half, bad), std::invalid_argument);
}

TEST_CASE("every loss stays finite on extreme finite inputs", "[losses][property]") {
    Rng rng(9);
    for (double scale : {1e-20, 1.0, 1e12}) {
        auto gen = random_tensor<double>({3, 8, 8}, rng, -scale, scale);
        auto y = random_tensor<double>({3, 8, 8}, rng, -scale, scale);
        Tensor<double> mask({1, 8, 8}, 1.0);  // fully masked: the epsilon guard case
        REQUIRE(std::isfinite(losses::generation_loss_value<double>(gen, y, mask, 0.0)));
        auto m = random_tensor<double>({1, 8, 8}, rng, 0, 1);
        REQUIRE(std::isfinite(losses::generation_loss_value<double>(gen, y, m, 0.0)));
        REQUIRE(std::isfinite(losses::sparsity_l1_value(m)));
        REQUIRE(std::isfinite(losses::suppression_l2_value<double>(m)));
    }
}

TEST_CASE("uscd objective: perfect generator and sparsity gradient", "[losses]") {
    Rng rng(10);
    auto y = random_tensor<double>({4, 8, 8}, rng);
    auto mask_t = random_tensor<double>({1, 8, 8}, rng, 0, 1);

    // lambda = 0, gen == Y, mu = 0 -> 0 regardless of mask
    {
        ag::Graph<double> g;
        LossWeights<double> w;
        auto ids = losses::uscd_objective_from(g, g.constant(nets::Segmentor<double>::as_nchw(y)),
                                               g.constant(nets::Segmentor<double>::as_nchw(y)),
                                               g.constant(losses::detail::as_mask_nchw(mask_t)), w);
        REQUIRE(g.scalar(ids.total) == 0.0);
    }

    // with gen == Y and all-zero mask, the objective gradient w.r.t. the mask
    // is exactly +lambda/N per pixel (the sparsity term), verified both
    // analytically and by central differences
    {
        const double lambda = 1000.0;
        Tensor<double> zero_mask({1, 8, 8});
        LossWeights<double> w;
        w.lambda_l1 = lambda;

        ag::Graph<double> g;
        auto mask_id = g.input(losses::detail::as_mask_nchw(zero_mask), true);
        auto ids = losses::uscd_objective_from(g, g.constant(nets::Segmentor<double>::as_nchw(y)),
                                               g.constant(nets::Segmentor<double>::as_nchw(y)), mask_id, w);
        g.backward(ids.total);
        const double expected = lambda / 64.0;
        for (auto v : g.grad(mask_id).data) REQUIRE_THAT(v, Catch::Matchers::WithinRel(expected, 1e-9));

        // finite-difference oracle on one element
        auto eval = [&](double delta) {
            Tensor<double> m = zero_mask;
            m[10] += delta;
            ag::Graph<double> g2;
            auto ids2 = losses::uscd_objective_from(g2, g2.constant(nets::Segmentor<double>::as_nchw(y)),
                                                    g2.constant(nets::Segmentor<double>::as_nchw(y)),
                                                    g2.input(losses::detail::as_mask_nchw(m), false), w);
            return g2.scalar(ids2.total);
        };
        const double fd = (eval(1e-6) - eval(-1e-6)) / 2e-6;
        REQUIRE_THAT(fd, Catch::Matchers::WithinRel(expected, 1e-4));
    }
}

TEST_CASE("wscd discriminator objective: constant and fully-masked cases", "[losses]") {
    Rng rng(11);
    const int S = 16;
    auto xc = nets::Segmentor<double>::as_nchw(random_tensor<double>({4, S, S}, rng));
    auto yc = nets::Segmentor<double>::as_nchw(random_tensor<double>({4, S, S}, rng));
    auto xu = nets::Segmentor<double>::as_nchw(random_tensor<double>({4, S, S}, rng));
    auto yu = nets::Segmentor<double>::as_nchw(random_tensor<double>({4, S, S}, rng));

    // constant discriminator (all-zero weights -> sigmoid(0) = 0.5) gives 1.0
    nets::Discriminator<double> d_const(nets::DiscriminatorConfig{4, 4}, 1);
    for (auto& p : d_const.params().items) p->value.fill(0.0);
    {
        ag::Graph<double> g;
        auto mask = g.constant(Tensor<double>({1, 1, S, S}, 0.3));
        auto ids = losses::wscd_discriminator_objective_from(g, g.constant(xc), g.constant(yc), g.constant(xu),
                                                             g.constant(yu), mask, d_const);
        REQUIRE_THAT(g.scalar(ids.total), Catch::Matchers::WithinAbs(1.0, 1e-12));
    }

    // all-ones mask zeroes both pairs; the two terms cancel exactly
    nets::Discriminator<double> d(nets::DiscriminatorConfig{4, 4}, 2);
    {
        ag::Graph<double> g;
        auto mask = g.constant(Tensor<double>({1, 1, S, S}, 1.0));
        auto ids = losses::wscd_discriminator_objective_from(g, g.constant(xc), g.constant(yc), g.constant(xu),
                                                             g.constant(yu), mask, d);
        REQUIRE(g.scalar(ids.total) == 1.0);
    }
}

TEST_CASE("gradient isolation between segmentor and discriminator objectives", "[losses]") {
    Rng rng(12);
    const int S = 16;
    nets::Segmentor<double> seg(nets::SegmentorConfig{4, 2, 1}, 3);
    nets::Discriminator<double> disc(nets::DiscriminatorConfig{4, 4}, 4);
    auto xc = nets::Segmentor<double>::as_nchw(random_tensor<double>({4, S, S}, rng));
    auto yc = nets::Segmentor<double>::as_nchw(random_tensor<double>({4, S, S}, rng));
    auto xu = nets::Segmentor<double>::as_nchw(random_tensor<double>({4, S, S}, rng));
    auto yu = nets::Segmentor<double>::as_nchw(random_tensor<double>({4, S, S}, rng));
    LossWeights<double> w;
    w.lambda_l1 = 0.5;
    w.lambda_l2 = 1.5;

    SECTION("segmentor objective: no gradient to the discriminator") {
        for (auto& p : seg.params().items) p->zero_grad();
        for (auto& p : disc.params().items) p->zero_grad();
        ag::Graph<double> g;
        auto ids = losses::wscd_segmentor_objective(g, g.constant(xc), g.constant(yc), g.constant(xu),
                                                    g.constant(yu), seg, disc, -1, w);
        g.backward(ids.total);
        double seg_grad = 0;
        for (const auto& p : seg.params().items)
            for (auto v : p->grad.data) seg_grad += std::abs(v);
        REQUIRE(seg_grad > 0.0);
        for (const auto& p : disc.params().items)
            for (auto v : p->grad.data) REQUIRE(v == 0.0);
    }

    SECTION("discriminator objective: no gradient to the segmentor") {
        for (auto& p : seg.params().items) p->zero_grad();
        for (auto& p : disc.params().items) p->zero_grad();
        ag::Graph<double> g;
        auto ids = losses::wscd_discriminator_objective(g, g.constant(xc), g.constant(yc), g.constant(xu),
                                                        g.constant(yu), seg, disc);
        g.backward(ids.total);
        double disc_grad = 0;
        for (const auto& p : disc.params().items)
            for (auto v : p->grad.data) disc_grad += std::abs(v);
        REQUIRE(disc_grad > 0.0);
        for (const auto& p : seg.params().items)
            for (auto v : p->grad.data) REQUIRE(v == 0.0);
    }
}

TEST_CASE("rscd objective structure: region terms behave per the formulas", "[losses]") {
    Rng rng(13);
    const int S = 16;
    nets::Segmentor<double> seg(nets::SegmentorConfig{4, 2, 1}, 5);
    nets::Discriminator<double> disc(nets::DiscriminatorConfig{4, 4}, 6);
    auto x = nets::Segmentor<double>::as_nchw(random_tensor<double>({4, S, S}, rng));
    auto y = nets::Segmentor<double>::as_nchw(random_tensor<double>({4, S, S}, rng));

    LossWeights<double> w;
    w.lambda_l1 = 1.0;
    w.lambda_l2 = 1.0;

    // a mask supported entirely outside R: sparsity term 0, suppression > 0
    Tensor<double> region({1, 1, S, S});
    for (int i = 0; i < S / 2; ++i)
        for (int j = 0; j < S; ++j) region.at4(0, 0, i, j) = 1.0;
    Tensor<double> outside_mask({1, 1, S, S});
    for (int i = S / 2; i < S; ++i)
        for (int j = 0; j < S; ++j) outside_mask.at4(0, 0, i, j) = 0.7;

    ag::Graph<double> g;
    auto mask = g.constant(outside_mask);
    auto reg = g.constant(region);
    auto l1 = losses::sparsity_l1(g, g.mul(mask, reg));
    auto l2 = losses::suppression_l2(g, mask, g.one_minus(reg));
    REQUIRE(g.scalar(l1) == 0.0);
    REQUIRE(g.scalar(l2) > 0.0);

    // R = all ones: suppression term vanishes (1-R = 0)
    ag::Graph<double> g2;
    auto ones = g2.constant(Tensor<double>({1, 1, S, S}, 1.0));
    auto anymask = g2.constant(Tensor<double>({1, 1, S, S}, 0.5));
    REQUIRE(g2.scalar(losses::suppression_l2(g2, anymask, g2.one_minus(ones))) == 0.0);

    // full objective pair evaluates and isolates gradients
    auto y_sim = x;  // R = 1 everywhere makes the simulated pair equal X
    for (auto& p : seg.params().items) p->zero_grad();
    for (auto& p : disc.params().items) p->zero_grad();
    ag::Graph<double> g3;
    auto ids = losses::rscd_objectives(g3, g3.constant(x), g3.constant(y), g3.constant(y_sim),
                                       g3.constant(Tensor<double>({1, 1, S, S}, 1.0)), seg, disc, -1, w);
    g3.backward(ids.seg.total);
    for (const auto& p : disc.params().items)
        for (auto v : p->grad.data) REQUIRE(v == 0.0);
    g3.backward(ids.disc.total);
    double disc_grad = 0;
    for (const auto& p : disc.params().items)
        for (auto v : p->grad.data) disc_grad += std::abs(v);
    REQUIRE(disc_grad > 0.0);
}

TEST_CASE("analytic gradients match central differences (mask and gen paths)", "[losses][gradcheck]") {
    Rng rng(14);
    auto gen = random_tensor<double>({4, 8, 8}, rng);
    auto y = random_tensor<double>({4, 8, 8}, rng);
    auto mask = random_tensor<double>({1, 8, 8}, rng, 0.1, 0.9);
    LossWeights<double> w;
    w.lambda_l1 = 0.7;

    auto eval = [&](const Tensor<double>& g_t, const Tensor<double>& m_t) {
        ag::Graph<double> g;
        auto ids = losses::uscd_objective_from(g, g.constant(nets::Segmentor<double>::as_nchw(g_t)),
                                               g.constant(nets::Segmentor<double>::as_nchw(y)),
                                               g.constant(losses::detail::as_mask_nchw(m_t)), w);
        return g.scalar(ids.total);
    };

    ag::Graph<double> g;
    auto gen_id = g.input(nets::Segmentor<double>::as_nchw(gen), true);
    auto mask_id = g.input(losses::detail::as_mask_nchw(mask), true);
    auto ids = losses::uscd_objective_from(g, gen_id, g.constant(nets::Segmentor<double>::as_nchw(y)), mask_id, w);
    g.backward(ids.total);

    const double eps = 1e-6;
    for (std::int64_t i = 0; i < mask.numel(); i += 7) {
        Tensor<double> mp = mask, mm = mask;
        mp[i] += eps;
        mm[i] -= eps;
        const double fd = (eval(gen, mp) - eval(gen, mm)) / (2 * eps);
        REQUIRE_THAT(g.grad(mask_id)[i], Catch::Matchers::WithinRel(fd, 1e-3));
    }
    for (std::int64_t i = 0; i < gen.numel(); i += 37) {
        Tensor<double> gp = gen, gm = gen;
        gp[i] += eps;
        gm[i] -= eps;
        const double fd = (eval(gp, mask) - eval(gm, mask)) / (2 * eps);
        REQUIRE_THAT(g.grad(gen_id)[i], Catch::Matchers::WithinRel(fd, 1e-3));
    }
}
