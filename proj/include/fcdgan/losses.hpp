// Copyright 2026 The fcdgan Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// The training objectives. Everything is a pure function from graph nodes to
// a scalar node; trainers decide which parameters are frozen while the graph
// is built. Soft masks are used throughout (no binarization before the
// threshold step at inference).

#include <utility>

#include "fcdgan/networks.hpp"

namespace fcdgan::losses {

using nn::Id;

template <typename T>
struct LossWeights {
    T lambda_l1 = T(0);   // sparsity weight (lambda / lambda1)
    T lambda_l2 = T(0);   // suppression weight (lambda2)
    T lambda_gen = T(0);  // generation-loss weight (lambda3)
    T mu_content = T(0);  // content-loss weight (mu)

    void validate() const {
        if (lambda_l1 < T(0) || lambda_l2 < T(0) || lambda_gen < T(0) || mu_content < T(0))
            throw std::invalid_argument("LossWeights: weights must be nonnegative");
    }
};

constexpr double kMaskDenomEps = 1e-8;  // empty-region guard for the reconstruction mean
constexpr double kBceClamp = 1e-7;

namespace detail {

template <typename T>
Tensor<T> as_nchw(const Tensor<T>& t) {
    return nets::Segmentor<T>::as_nchw(t);
}

// Accepts (H,W), (1,H,W) or (N,1,H,W) masks.
template <typename T>
Tensor<T> as_mask_nchw(const Tensor<T>& m) {
    Tensor<T> out = m;
    if (m.rank() == 2)
        out.shape = {1, 1, m.dim(0), m.dim(1)};
    else if (m.rank() == 3) {
        require_shape(m.dim(0) == 1, "mask must be single-channel");
        out.shape = {1, 1, m.dim(1), m.dim(2)};
    } else {
        require_shape(m.rank() == 4 && m.dim(1) == 1, "mask must be (N,1,H,W)");
    }
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Loss terms
// ---------------------------------------------------------------------------

/// Mean absolute value of the mask (the sparsity constraint). Masks are
/// nonnegative, so this is the plain mean; the gradient is 1/N per pixel
/// including at exactly 0.
template <typename T>
Id<T> sparsity_l1(ag::Graph<T>& g, Id<T> mask) {
    return g.mean_all(mask);
}

/// Mean of squared mask values, multiplicatively restricted to `support`
/// (whole image when support < 0). The mean always runs over all pixels.
template <typename T>
Id<T> suppression_l2(ag::Graph<T>& g, Id<T> mask, Id<T> support = -1) {
    Id<T> v = mask;
    if (support >= 0) {
        require_shape(g.val(mask).same_shape(g.val(support)), "suppression_l2: support shape mismatch");
        v = g.mul(mask, support);
    }
    return g.mean_all(g.square(v));
}

/// (X*(1-mask), Y*(1-mask)), mask broadcast across bands.
template <typename T>
std::pair<Id<T>, Id<T>> masked_pair(ag::Graph<T>& g, Id<T> x, Id<T> y, Id<T> mask) {
    require_shape(g.val(x).same_shape(g.val(y)), "masked_pair: X/Y shape mismatch");
    Id<T> w = g.one_minus(mask);
    return {g.mul_maskc(x, w), g.mul_maskc(y, w)};
}

template <typename T>
struct GenLossIds {
    Id<T> total = -1;
    Id<T> reconstruction = -1;
    Id<T> content = -1;  // -1 when mu == 0
};

/// Masked reconstruction error plus optional content term:
///   sum((1-m) * mean_band |gen - Y|) / (sum(1-m) + eps)
///     + mu * mean_band MSE(phi(band(gen*(1-m))), phi(band(Y*(1-m))))
/// Each band is replicated to 3 channels for the extractor; per-band MSEs are
/// averaged. With a batch, the ratio is computed per sample and averaged.
template <typename T>
GenLossIds<T> generation_loss(ag::Graph<T>& g, Id<T> gen, Id<T> y, Id<T> mask, T mu,
                              const nets::ContentExtractor<T>* phi = nullptr) {
    const auto sg = g.val(gen).shape;  // by value: node creation grows the tape
    const auto sy = g.val(y).shape;
    const auto sm = g.val(mask).shape;
    require_shape(sg.size() == 4 && sg == sy, "generation_loss: gen/Y shape mismatch");
    require_shape(sm.size() == 4 && sm[1] == 1 && sm[0] == sg[0] && sm[2] == sg[2] && sm[3] == sg[3],
                  "generation_loss: mask shape mismatch");
    if (mu > T(0) && phi == nullptr)
        throw std::invalid_argument("generation_loss: mu > 0 requires a content extractor");

    GenLossIds<T> out;
    Id<T> w = g.one_minus(mask);
    Id<T> err = g.mean_c(g.abs_(g.sub(gen, y)));
    Id<T> num = g.sum_per_sample(g.mul(err, w));
    Id<T> den = g.add_scalar(g.sum_per_sample(w), static_cast<T>(kMaskDenomEps));
    out.reconstruction = g.mean_all(g.div_elem(num, den));
    out.total = out.reconstruction;

    if (mu > T(0)) {
        const int bands = sg[1];
        Id<T> mg = g.mul_maskc(gen, w);
        Id<T> my = g.mul_maskc(y, w);
        Id<T> acc = -1;
        for (int b = 0; b < bands; ++b) {
            Id<T> fg = phi->forward(g, g.broadcast_c(g.select_channel(mg, b), 3));
            Id<T> fy = phi->forward(g, g.broadcast_c(g.select_channel(my, b), 3));
            Id<T> mse = g.mean_all(g.square(g.sub(fg, fy)));
            acc = acc < 0 ? mse : g.add(acc, mse);
        }
        out.content = g.scale(acc, T(1) / static_cast<T>(bands));
        out.total = g.add(out.reconstruction, g.scale(out.content, mu));
    }
    return out;
}

/// Mean binary cross-entropy against a {0,1} reference, clamp-guarded.
template <typename T>
Id<T> fscd_loss(ag::Graph<T>& g, Id<T> prob, Id<T> ref) {
    require_shape(g.val(prob).same_shape(g.val(ref)), "fscd_loss: shape mismatch");
    for (const auto& v : g.val(ref).data)
        if (v != T(0) && v != T(1))
            throw std::invalid_argument("fscd_loss: reference must contain only 0/1 values");
    Id<T> p = g.clamp(prob, static_cast<T>(kBceClamp), T(1) - static_cast<T>(kBceClamp));
    Id<T> pos = g.mul(ref, g.log_(p));
    Id<T> neg = g.mul(g.one_minus(ref), g.log_(g.one_minus(p)));
    return g.scale(g.mean_all(g.add(pos, neg)), T(-1));
}

// ---------------------------------------------------------------------------
// Objectives
// ---------------------------------------------------------------------------

template <typename T>
struct UscdIds {
    Id<T> total = -1;
    GenLossIds<T> gen;
    Id<T> sparsity = -1;
    Id<T> mask = -1;
};

/// Unsupervised objective on precomputed nodes:
///   generation_loss(gen_out, Y, mask, mu) + lambda_l1 * l1(mask)
template <typename T>
UscdIds<T> uscd_objective_from(ag::Graph<T>& g, Id<T> gen_out, Id<T> y, Id<T> mask, const LossWeights<T>& w,
                               const nets::ContentExtractor<T>* phi = nullptr) {
    UscdIds<T> out;
    out.mask = mask;
    out.gen = generation_loss(g, gen_out, y, mask, w.mu_content, phi);
    out.sparsity = sparsity_l1(g, mask);
    out.total = g.add(out.gen.total, g.scale(out.sparsity, w.lambda_l1));
    return out;
}

/// Full unsupervised objective: runs segmentor and generator forward.
template <typename T>
UscdIds<T> uscd_objective(ag::Graph<T>& g, Id<T> x, Id<T> y, const nets::Segmentor<T>& seg,
                          const nets::Generator<T>& gen, const LossWeights<T>& w,
                          const nets::ContentExtractor<T>* phi = nullptr) {
    Id<T> mask = seg.forward(g, x, y);
    return uscd_objective_from(g, gen.forward(g, x), y, mask, w, phi);
}

/// RAII freeze for "this objective must not push gradient into that network".
template <typename T>
class FreezeGuard {
  public:
    explicit FreezeGuard(nn::ParamList<T>& params) : params_(params) {
        was_.reserve(params.items.size());
        for (auto& p : params.items) {
            was_.push_back(p->frozen);
            p->frozen = true;
        }
    }
    ~FreezeGuard() {
        for (std::size_t i = 0; i < was_.size(); ++i) params_.items[i]->frozen = was_[i];
    }
    FreezeGuard(const FreezeGuard&) = delete;
    FreezeGuard& operator=(const FreezeGuard&) = delete;

  private:
    nn::ParamList<T>& params_;
    std::vector<bool> was_;
};

template <typename T>
struct WscdSegIds {
    Id<T> total = -1;
    Id<T> disc_changed = -1;  // L_d^c as seen by the segmentor
    Id<T> sparsity = -1;
    Id<T> suppression = -1;
    GenLossIds<T> gen;  // unused when lambda_gen == 0
    Id<T> mask = -1;
};

/// Weakly supervised segmentor objective:
///   d(masked changed pair) + l1 * sparsity(mask)
///   + l2 * suppression(s(Xu,Yu)) + l3 * generation_loss(gen_out_c, Yc, mask)
/// The discriminator is frozen while this graph is built, so no gradient
/// reaches its parameters. `gen_out_c` is the (frozen) generator prediction
/// for the changed pair; pass -1 when lambda_gen == 0.
template <typename T>
WscdSegIds<T> wscd_segmentor_objective(ag::Graph<T>& g, Id<T> xc, Id<T> yc, Id<T> xu, Id<T> yu,
                                       const nets::Segmentor<T>& seg, nets::Discriminator<T>& disc,
                                       Id<T> gen_out_c, const LossWeights<T>& w,
                                       const nets::ContentExtractor<T>* phi = nullptr) {
    WscdSegIds<T> out;
    out.mask = seg.forward(g, xc, yc);
    {
        FreezeGuard<T> guard(disc.params());
        auto [xm, ym] = masked_pair(g, xc, yc, out.mask);
        out.disc_changed = g.mean_all(disc.forward(g, xm, ym));
    }
    out.sparsity = sparsity_l1(g, out.mask);
    out.suppression = suppression_l2(g, seg.forward(g, xu, yu));
    out.total = g.add(out.disc_changed,
                      g.add(g.scale(out.sparsity, w.lambda_l1), g.scale(out.suppression, w.lambda_l2)));
    if (w.lambda_gen > T(0)) {
        require_shape(gen_out_c >= 0, "wscd_segmentor_objective: lambda_gen > 0 needs a generator output");
        out.gen = generation_loss(g, gen_out_c, yc, out.mask, w.mu_content, phi);
        out.total = g.add(out.total, g.scale(out.gen.total, w.lambda_gen));
    }
    return out;
}

template <typename T>
struct WscdDiscIds {
    Id<T> total = -1;
    Id<T> disc_changed = -1;    // L_d^c
    Id<T> disc_unchanged = -1;  // L_d^u
};

/// Discriminator objective 1 - L_d^c + L_d^u. The changed-pair mask is applied
/// to BOTH pairs (an unchanged pair stays unchanged under any mask) and is
/// treated as a constant: no gradient flows to the segmentor.
template <typename T>
WscdDiscIds<T> wscd_discriminator_objective_from(ag::Graph<T>& g, Id<T> xc, Id<T> yc, Id<T> xu, Id<T> yu,
                                                 Id<T> mask_const, const nets::Discriminator<T>& disc) {
    WscdDiscIds<T> out;
    Id<T> mask = g.detach(mask_const);
    auto [xmc, ymc] = masked_pair(g, xc, yc, mask);
    auto [xmu, ymu] = masked_pair(g, xu, yu, mask);
    out.disc_changed = g.mean_all(disc.forward(g, xmc, ymc));
    out.disc_unchanged = g.mean_all(disc.forward(g, xmu, ymu));
    out.total = g.add_scalar(g.sub(out.disc_unchanged, out.disc_changed), T(1));
    return out;
}

/// Convenience overload that evaluates the segmentor itself (constant mask).
template <typename T>
WscdDiscIds<T> wscd_discriminator_objective(ag::Graph<T>& g, Id<T> xc, Id<T> yc, Id<T> xu, Id<T> yu,
                                            nets::Segmentor<T>& seg, const nets::Discriminator<T>& disc) {
    Id<T> mask;
    {
        FreezeGuard<T> guard(seg.params());
        mask = seg.forward(g, xc, yc);
    }
    return wscd_discriminator_objective_from(g, xc, yc, xu, yu, mask, disc);
}

template <typename T>
struct RscdIds {
    WscdSegIds<T> seg;
    WscdDiscIds<T> disc;
};

/// Regional supervised objectives. Segmentor side:
///   d(masked pair) + l1 * sparsity(s*R) + l2 * suppression(s, 1-R) + l3 * L_g
/// Discriminator side: 1 - L_d^c + L_d^u where the "real unchanged" sample is
/// the simulated pair (X, Yhat), Yhat = Y*(1-R) + X*R, under the same mask.
template <typename T>
RscdIds<T> rscd_objectives(ag::Graph<T>& g, Id<T> x, Id<T> y, Id<T> y_sim, Id<T> region,
                           const nets::Segmentor<T>& seg, nets::Discriminator<T>& disc, Id<T> gen_out,
                           const LossWeights<T>& w, const nets::ContentExtractor<T>* phi = nullptr) {
    const auto& sr = g.val(region).shape;
    const auto& sx = g.val(x).shape;
    require_shape(sr.size() == 4 && sr[1] == 1 && sr[0] == sx[0] && sr[2] == sx[2] && sr[3] == sx[3],
                  "rscd_objectives: region shape mismatch");
    RscdIds<T> out;
    out.seg.mask = seg.forward(g, x, y);
    {
        FreezeGuard<T> guard(disc.params());
        auto [xm, ym] = masked_pair(g, x, y, out.seg.mask);
        out.seg.disc_changed = g.mean_all(disc.forward(g, xm, ym));
    }
    out.seg.sparsity = sparsity_l1(g, g.mul(out.seg.mask, region));
    out.seg.suppression = suppression_l2(g, out.seg.mask, g.one_minus(region));
    out.seg.total = g.add(out.seg.disc_changed, g.add(g.scale(out.seg.sparsity, w.lambda_l1),
                                                      g.scale(out.seg.suppression, w.lambda_l2)));
    if (w.lambda_gen > T(0)) {
        require_shape(gen_out >= 0, "rscd_objectives: lambda_gen > 0 needs a generator output");
        out.seg.gen = generation_loss(g, gen_out, y, out.seg.mask, w.mu_content, phi);
        out.seg.total = g.add(out.seg.total, g.scale(out.seg.gen.total, w.lambda_gen));
    }
    out.disc = wscd_discriminator_objective_from(g, x, y, x, y_sim, out.seg.mask, disc);
    return out;
}

// ---------------------------------------------------------------------------
// Plain-tensor conveniences (single instance, used heavily by the test
// oracles; these share the exact graph code path used in training).
// ---------------------------------------------------------------------------

template <typename T>
T generation_loss_value(const Tensor<T>& gen, const Tensor<T>& y, const Tensor<T>& mask, T mu,
                        const nets::ContentExtractor<T>* phi = nullptr) {
    ag::Graph<T> g;
    auto ids = generation_loss(g, g.constant(detail::as_nchw(gen)), g.constant(detail::as_nchw(y)),
                               g.constant(detail::as_mask_nchw(mask)), mu, phi);
    return g.scalar(ids.total);
}

template <typename T>
T sparsity_l1_value(const Tensor<T>& mask) {
    ag::Graph<T> g;
    return g.scalar(sparsity_l1(g, g.constant(detail::as_mask_nchw(mask))));
}

template <typename T>
T suppression_l2_value(const Tensor<T>& mask, const Tensor<T>* support = nullptr) {
    ag::Graph<T> g;
    Id<T> m = g.constant(detail::as_mask_nchw(mask));
    Id<T> s = support ? g.constant(detail::as_mask_nchw(*support)) : -1;
    return g.scalar(suppression_l2(g, m, s));
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> masked_pair_value(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& mask) {
    ag::Graph<T> g;
    auto [a, b] = masked_pair(g, g.constant(detail::as_nchw(x)), g.constant(detail::as_nchw(y)),
                              g.constant(detail::as_mask_nchw(mask)));
    return {g.val(a), g.val(b)};
}

template <typename T>
T fscd_loss_value(const Tensor<T>& prob, const Tensor<T>& ref) {
    ag::Graph<T> g;
    return g.scalar(fscd_loss(g, g.constant(detail::as_mask_nchw(prob)), g.constant(detail::as_mask_nchw(ref))));
}

}  // namespace fcdgan::losses
