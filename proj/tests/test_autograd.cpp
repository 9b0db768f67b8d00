// Copyright 2026 The fcdgan Authors
// SPDX-License-Identifier: Apache-2.0
//
// Finite-difference checks for every autograd op, plus forward checks of the
// conv kernel against a direct convolution loop.

#include <catch2/catch_amalgamated.hpp>

#include <functional>
#include <vector>

#include "fcdgan/autograd.hpp"
#include "fcdgan/rng.hpp"

using fcdgan::Rng;
using fcdgan::Tensor;
using Graph = fcdgan::ag::Graph<double>;
using Id = Graph::Id;

namespace {

Tensor<double> random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor<double> t(std::move(shape));
    for (auto& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

// Central-difference gradient check of a scalar-valued graph builder.
void gradcheck(std::vector<Tensor<double>*> inputs,
               const std::function<Id(Graph&, const std::vector<Id>&)>& build, double tol = 1e-6,
               double eps = 1e-5) {
    auto eval = [&](void) {
        Graph g;
        std::vector<Id> ids;
        for (auto* t : inputs) ids.push_back(g.input(*t, false));
        return g.scalar(build(g, ids));
    };

    Graph g;
    std::vector<Id> ids;
    for (auto* t : inputs) ids.push_back(g.input(*t, true));
    Id root = build(g, ids);
    g.backward(root);
    std::vector<Tensor<double>> analytic;
    for (auto id : ids) analytic.push_back(g.grad(id));

    for (std::size_t k = 0; k < inputs.size(); ++k) {
        Tensor<double>& t = *inputs[k];
        for (std::int64_t i = 0; i < t.numel(); ++i) {
            const double orig = t[i];
            t[i] = orig + eps;
            const double fp = eval();
            t[i] = orig - eps;
            const double fm = eval();
            t[i] = orig;
            const double numeric = (fp - fm) / (2 * eps);
            const double a = analytic[k][i];
            INFO("input " << k << " element " << i << " analytic=" << a << " numeric=" << numeric);
            REQUIRE(std::abs(a - numeric) <= tol * (1.0 + std::abs(numeric)));
        }
    }
}

}  // namespace

TEST_CASE("elementwise ops: forward and gradients", "[autograd]") {
    Rng rng(42);
    auto a = random_tensor({2, 3, 4, 4}, rng, 0.2, 1.5);  // positive: safe for log/abs
    auto b = random_tensor({2, 3, 4, 4}, rng, 0.3, 1.2);

    gradcheck({&a, &b}, [](Graph& g, const std::vector<Id>& in) {
        return g.mean_all(g.mul(g.add(in[0], in[1]), g.sub(in[0], in[1])));
    });
    gradcheck({&a}, [](Graph& g, const std::vector<Id>& in) {
        return g.mean_all(g.square(g.add_scalar(g.scale(in[0], 0.7), -0.3)));
    });
    gradcheck({&a}, [](Graph& g, const std::vector<Id>& in) { return g.sum_all(g.one_minus(in[0])); });
    gradcheck({&a}, [](Graph& g, const std::vector<Id>& in) { return g.mean_all(g.log_(in[0])); });
    gradcheck({&a}, [](Graph& g, const std::vector<Id>& in) { return g.mean_all(g.sigmoid(g.scale(in[0], 2.0))); });
    gradcheck({&a}, [](Graph& g, const std::vector<Id>& in) {
        return g.mean_all(g.abs_(g.add_scalar(in[0], -0.8)));
    });
    gradcheck({&a}, [](Graph& g, const std::vector<Id>& in) {
        return g.mean_all(g.relu(g.add_scalar(in[0], -0.8)));
    });
    gradcheck({&a}, [](Graph& g, const std::vector<Id>& in) {
        return g.mean_all(g.leaky_relu(g.add_scalar(in[0], -0.8), 0.2));
    });
    // clamp interior only: keep values inside (0.05, 2.0)
    gradcheck({&a}, [](Graph& g, const std::vector<Id>& in) { return g.mean_all(g.clamp(in[0], 0.05, 2.0)); });
    gradcheck({&a, &b},
              [](Graph& g, const std::vector<Id>& in) { return g.mean_all(g.div_elem(in[0], in[1])); });
}

TEST_CASE("shape and broadcast ops: gradients", "[autograd]") {
    Rng rng(7);
    auto x = random_tensor({2, 3, 4, 4}, rng);
    auto y = random_tensor({2, 2, 4, 4}, rng);
    auto m = random_tensor({2, 1, 4, 4}, rng, 0.1, 0.9);

    gradcheck({&x, &y}, [](Graph& g, const std::vector<Id>& in) {
        return g.mean_all(g.square(g.concat_c(in[0], in[1])));
    });
    gradcheck({&x}, [](Graph& g, const std::vector<Id>& in) {
        return g.mean_all(g.square(g.select_channel(in[0], 1)));
    });
    gradcheck({&m}, [](Graph& g, const std::vector<Id>& in) {
        return g.mean_all(g.square(g.broadcast_c(in[0], 3)));
    });
    gradcheck({&x, &m}, [](Graph& g, const std::vector<Id>& in) {
        return g.mean_all(g.square(g.mul_maskc(in[0], in[1])));
    });
    gradcheck({&x}, [](Graph& g, const std::vector<Id>& in) { return g.mean_all(g.square(g.mean_c(in[0]))); });
    gradcheck({&x}, [](Graph& g, const std::vector<Id>& in) {
        return g.mean_all(g.square(g.pad_reflect(in[0], 2, 1, 3, 2)));
    });
    gradcheck({&x}, [](Graph& g, const std::vector<Id>& in) {
        return g.mean_all(g.square(g.crop(in[0], 1, 0, 2, 3)));
    });
    gradcheck({&x}, [](Graph& g, const std::vector<Id>& in) {
        Id s = g.sum_per_sample(in[0]);
        return g.mean_all(g.square(s));
    });
}

TEST_CASE("conv2d forward matches a direct convolution loop", "[autograd]") {
    Rng rng(11);
    for (int stride : {1, 2}) {
        const int N = 2, Cin = 3, H = 7, W = 6, Cout = 4, k = 3, pad = 1;
        auto x = random_tensor({N, Cin, H, W}, rng);
        auto w = random_tensor({Cout, Cin, k, k}, rng);
        auto b = random_tensor({Cout}, rng);

        Graph g;
        Id out = g.conv2d(g.input(x), g.input(w), g.input(b), stride, pad);
        const auto& o = g.val(out);

        const int Ho = (H + 2 * pad - k) / stride + 1;
        const int Wo = (W + 2 * pad - k) / stride + 1;
        REQUIRE(o.shape == std::vector<int>{N, Cout, Ho, Wo});
        for (int n = 0; n < N; ++n)
            for (int c = 0; c < Cout; ++c)
                for (int i = 0; i < Ho; ++i)
                    for (int j = 0; j < Wo; ++j) {
                        double acc = b[c];
                        for (int ci = 0; ci < Cin; ++ci)
                            for (int ki = 0; ki < k; ++ki)
                                for (int kj = 0; kj < k; ++kj) {
                                    const int ih = i * stride - pad + ki;
                                    const int iw = j * stride - pad + kj;
                                    if (ih >= 0 && ih < H && iw >= 0 && iw < W)
                                        acc += x.at4(n, ci, ih, iw) * w.at4(c, ci, ki, kj);
                                }
                        REQUIRE_THAT(o.at4(n, c, i, j), Catch::Matchers::WithinAbs(acc, 1e-12));
                    }
    }
}

TEST_CASE("conv2d gradients (stride 1 and 2)", "[autograd]") {
    Rng rng(13);
    for (int stride : {1, 2}) {
        auto x = random_tensor({2, 2, 5, 5}, rng);
        auto w = random_tensor({3, 2, 3, 3}, rng);
        auto b = random_tensor({3}, rng);
        gradcheck({&x, &w, &b}, [stride](Graph& g, const std::vector<Id>& in) {
            return g.mean_all(g.square(g.conv2d(in[0], in[1], in[2], stride, 1)));
        });
    }
}

TEST_CASE("pool / upsample / pooling heads: gradients", "[autograd]") {
    Rng rng(17);
    auto x = random_tensor({2, 3, 6, 6}, rng);
    gradcheck({&x}, [](Graph& g, const std::vector<Id>& in) { return g.mean_all(g.square(g.maxpool2(in[0]))); });
    gradcheck({&x}, [](Graph& g, const std::vector<Id>& in) { return g.mean_all(g.square(g.upsample2(in[0]))); });
    gradcheck({&x}, [](Graph& g, const std::vector<Id>& in) {
        return g.mean_all(g.square(g.global_avg_pool(in[0])));
    });

    auto v = random_tensor({3, 5}, rng);
    auto lw = random_tensor({2, 5}, rng);
    auto lb = random_tensor({2}, rng);
    gradcheck({&v, &lw, &lb}, [](Graph& g, const std::vector<Id>& in) {
        return g.mean_all(g.square(g.linear(in[0], in[1], in[2])));
    });
}

TEST_CASE("instance_norm: forward statistics and gradients", "[autograd]") {
    Rng rng(19);
    auto x = random_tensor({2, 3, 4, 5}, rng);
    auto gamma = random_tensor({3}, rng, 0.5, 1.5);
    auto beta = random_tensor({3}, rng, -0.5, 0.5);

    {
        Graph g;
        Id out = g.instance_norm(g.input(x), g.input(gamma), g.input(beta));
        // per (n,c): mean beta, std |gamma|
        for (int n = 0; n < 2; ++n)
            for (int c = 0; c < 3; ++c) {
                double mean = 0, var = 0;
                for (int i = 0; i < 4; ++i)
                    for (int j = 0; j < 5; ++j) mean += g.val(out).at4(n, c, i, j);
                mean /= 20;
                for (int i = 0; i < 4; ++i)
                    for (int j = 0; j < 5; ++j) {
                        const double d = g.val(out).at4(n, c, i, j) - mean;
                        var += d * d;
                    }
                var /= 20;
                REQUIRE_THAT(mean, Catch::Matchers::WithinAbs(beta[c], 1e-10));
                REQUIRE_THAT(std::sqrt(var), Catch::Matchers::WithinRel(std::abs(gamma[c]), 1e-4));
            }
    }
    gradcheck({&x, &gamma, &beta}, [](Graph& g, const std::vector<Id>& in) {
        return g.mean_all(g.square(g.instance_norm(in[0], in[1], in[2])));
    }, 1e-5);
}

TEST_CASE("upsample2 doubles dims with the expected interpolation", "[autograd]") {
    Tensor<double> x({1, 1, 2, 2});
    x.data = {0.0, 1.0, 2.0, 3.0};
    Graph g;
    const auto& o = g.val(g.upsample2(g.input(x)));
    REQUIRE(o.shape == std::vector<int>{1, 1, 4, 4});
    // corners replicate, interior interpolates at quarter offsets
    REQUIRE_THAT(o.at4(0, 0, 0, 0), Catch::Matchers::WithinAbs(0.0, 1e-12));
    REQUIRE_THAT(o.at4(0, 0, 3, 3), Catch::Matchers::WithinAbs(3.0, 1e-12));
    REQUIRE_THAT(o.at4(0, 0, 0, 1), Catch::Matchers::WithinAbs(0.25, 1e-12));
    REQUIRE_THAT(o.at4(0, 0, 1, 0), Catch::Matchers::WithinAbs(0.5, 1e-12));
}

TEST_CASE("detach blocks gradient flow", "[autograd]") {
    Rng rng(23);
    auto x = random_tensor({2, 2}, rng);
    Graph g;
    Id in = g.input(x, true);
    Id root = g.mean_all(g.mul(g.detach(in), in));
    g.backward(root);
    // gradient is detached_value / numel, not 2*x/numel
    for (std::int64_t i = 0; i < x.numel(); ++i)
        REQUIRE_THAT(g.grad(in)[i], Catch::Matchers::WithinAbs(x[i] / 4.0, 1e-12));
}

TEST_CASE("shared parameter leaf accumulates both uses", "[autograd]") {
    auto p = fcdgan::ag::make_param<double>("w", {2});
    p->value.data = {1.5, -0.5};
    Graph g;
    Id w1 = g.param(p);
    Id w2 = g.param(p);
    REQUIRE(w1 == w2);  // same node: Siamese weight sharing
    Id root = g.sum_all(g.add(g.square(w1), g.scale(w2, 3.0)));
    g.backward(root);
    REQUIRE_THAT(p->grad[0], Catch::Matchers::WithinAbs(2 * 1.5 + 3.0, 1e-12));
    REQUIRE_THAT(p->grad[1], Catch::Matchers::WithinAbs(2 * -0.5 + 3.0, 1e-12));
}

TEST_CASE("frozen parameters receive no gradient", "[autograd]") {
    auto p = fcdgan::ag::make_param<double>("w", {2});
    p->value.data = {1.0, 2.0};
    p->frozen = true;
    Graph g;
    Id w = g.param(p);
    Id x = g.input(Tensor<double>({2}, 1.0), true);
    Id root = g.sum_all(g.mul(w, x));
    g.backward(root);
    REQUIRE(p->grad[0] == 0.0);
    REQUIRE(p->grad[1] == 0.0);
    REQUIRE(g.grad(x)[0] == 1.0);  // gradient still flows **through** frozen values
}
