// Copyright 2026 The fcdgan Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fcdgan/autograd.hpp"
#include "fcdgan/rng.hpp"

namespace fcdgan::nn {

template <typename T>
using Id = typename ag::Graph<T>::Id;

/// Registry of a module's parameters in declaration order. The order is the
/// contract for initialization, checkpointing and optimizers.
template <typename T>
struct ParamList {
    std::vector<ag::Param<T>> items;

    ag::Param<T> add(std::string name, std::vector<int> shape) {
        items.push_back(ag::make_param<T>(std::move(name), std::move(shape)));
        return items.back();
    }

    void freeze(bool on = true) {
        for (auto& p : items) p->frozen = on;
    }

    ag::Param<T> find(const std::string& name) const {
        for (const auto& p : items)
            if (p->name == name) return p;
        throw std::invalid_argument("ParamList: no parameter named '" + name + "'");
    }

    std::int64_t count() const {
        std::int64_t n = 0;
        for (const auto& p : items) n += p->value.numel();
        return n;
    }
};

/// He-normal initialization of every parameter, driven by one substream so a
/// given (seed, module) always produces identical weights. Biases start at 0;
/// 4-D weights use fan_in = Cin*k*k, 2-D use the input width.
template <typename T>
void init_he_normal(ParamList<T>& params, Rng rng, double head_scale = 1.0) {
    for (auto& p : params.items) {
        auto& v = p->value;
        if (v.rank() <= 1) {
            // norm scales start at 1, every other vector parameter at 0
            v.fill(p->name.size() >= 6 && p->name.rfind(".gamma") == p->name.size() - 6 ? T(1) : T(0));
            continue;
        }
        std::int64_t fan_in = 1;
        for (int d = 1; d < v.rank(); ++d) fan_in *= v.dim(d);
        double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
        if (p->name.find("head") != std::string::npos) std_dev *= head_scale;
        for (auto& x : v.data) x = static_cast<T>(rng.normal(0.0, std_dev));
    }
}

template <typename T>
struct Conv2d {
    ag::Param<T> w, b;
    int stride = 1;
    int pad = 0;

    Conv2d() = default;
    Conv2d(ParamList<T>& reg, const std::string& name, int in_c, int out_c, int k, int stride_ = 1)
        : w(reg.add(name + ".w", {out_c, in_c, k, k})), b(reg.add(name + ".b", {out_c})), stride(stride_),
          pad(k / 2) {}

    Id<T> operator()(ag::Graph<T>& g, Id<T> x) const { return g.conv2d(x, g.param(w), g.param(b), stride, pad); }
};

template <typename T>
struct Linear {
    ag::Param<T> w, b;

    Linear() = default;
    Linear(ParamList<T>& reg, const std::string& name, int in_c, int out_c)
        : w(reg.add(name + ".w", {out_c, in_c})), b(reg.add(name + ".b", {out_c})) {}

    Id<T> operator()(ag::Graph<T>& g, Id<T> x) const { return g.linear(x, g.param(w), g.param(b)); }
};

/// conv [+ instance norm] + relu, repeated `convs` times; the basic
/// encoder/decoder block. Per-sample normalization keeps activation levels
/// centered, which the masked-ratio objectives need to avoid saturating.
template <typename T>
struct ConvBlock {
    std::vector<Conv2d<T>> convs;
    std::vector<ag::Param<T>> gamma, beta;
    bool normed = false;

    ConvBlock() = default;
    ConvBlock(ParamList<T>& reg, const std::string& name, int in_c, int out_c, int n_convs, bool norm = false)
        : normed(norm) {
        for (int i = 0; i < n_convs; ++i) {
            convs.emplace_back(reg, name + ".conv" + std::to_string(i), i == 0 ? in_c : out_c, out_c, 3);
            if (norm) {
                gamma.push_back(reg.add(name + ".norm" + std::to_string(i) + ".gamma", {out_c}));
                beta.push_back(reg.add(name + ".norm" + std::to_string(i) + ".beta", {out_c}));
                gamma.back()->value.fill(T(1));
            }
        }
    }

    Id<T> operator()(ag::Graph<T>& g, Id<T> x) const {
        for (std::size_t i = 0; i < convs.size(); ++i) {
            x = convs[i](g, x);
            if (normed) x = g.instance_norm(x, g.param(gamma[i]), g.param(beta[i]));
            x = g.relu(x);
        }
        return x;
    }
};

}  // namespace fcdgan::nn
