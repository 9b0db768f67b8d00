// Copyright 2026 The fcdgan Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// The three trainable modules (segmentor / generator / discriminator) and the
// frozen content feature extractor. Architectures are deliberately small and
// fully determined by their config structs; the config string feeds the
// checkpoint architecture hash.

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "fcdgan/nn.hpp"

namespace fcdgan::nets {

using nn::Conv2d;
using nn::ConvBlock;
using nn::Id;
using nn::Linear;
using nn::ParamList;

// ---------------------------------------------------------------------------
// Segmentor: Siamese U-net. Shared-weight two-branch encoder, per-level
// concatenate fusion, bilinear-upsampling decoder, sigmoid head.
// ---------------------------------------------------------------------------

struct SegmentorConfig {
    int bands = 4;
    int base_width = 32;  // level widths: w, 2w, 4w, 8w (+ bottleneck 8w)
    int block_convs = 2;

    std::string arch_string() const {
        std::ostringstream os;
        os << "segmentor:v1:bands=" << bands << ":base=" << base_width << ":convs=" << block_convs;
        return os.str();
    }
};

template <typename T>
class Segmentor {
  public:
    static constexpr int kDownsampleFactor = 16;  // four pooling stages

    Segmentor(const SegmentorConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
        const int w = cfg.base_width;
        enc_[0] = ConvBlock<T>(params_, "enc0", cfg.bands, w, cfg.block_convs, true);
        enc_[1] = ConvBlock<T>(params_, "enc1", w, 2 * w, cfg.block_convs, true);
        enc_[2] = ConvBlock<T>(params_, "enc2", 2 * w, 4 * w, cfg.block_convs, true);
        enc_[3] = ConvBlock<T>(params_, "enc3", 4 * w, 8 * w, cfg.block_convs, true);
        bottom_ = ConvBlock<T>(params_, "bottom", 16 * w, 8 * w, cfg.block_convs, true);
        dec_[3] = ConvBlock<T>(params_, "dec3", 8 * w + 16 * w, 4 * w, cfg.block_convs, true);
        dec_[2] = ConvBlock<T>(params_, "dec2", 4 * w + 8 * w, 2 * w, cfg.block_convs, true);
        dec_[1] = ConvBlock<T>(params_, "dec1", 2 * w + 4 * w, w, cfg.block_convs, true);
        dec_[0] = ConvBlock<T>(params_, "dec0", w + 2 * w, w, cfg.block_convs, true);
        head_ = Conv2d<T>(params_, "head", w, 1, 1);
        nn::init_he_normal(params_, Rng::substream(seed, "init.segmentor"), 0.2);
    }

    const SegmentorConfig& config() const { return cfg_; }
    ParamList<T>& params() { return params_; }
    const ParamList<T>& params() const { return params_; }
    std::string arch_string() const { return cfg_.arch_string(); }

    /// Change probability map s(X,Y) in [0,1]^{N x 1 x H x W}. Inputs with
    /// spatial dims not divisible by 16 are reflect-padded and the output is
    /// cropped back.
    Id<T> forward(ag::Graph<T>& g, Id<T> x, Id<T> y) const {
        const auto& sx = g.val(x).shape;
        const auto& sy = g.val(y).shape;
        require_shape(sx.size() == 4 && sy.size() == 4, "segmentor: inputs must be NCHW");
        require_shape(sx == sy, "segmentor: X shape " + shape_str(sx) + " != Y shape " + shape_str(sy));
        require_shape(sx[1] == cfg_.bands, "segmentor: expected " + std::to_string(cfg_.bands) + " bands, got " +
                                               std::to_string(sx[1]));
        const int H = sx[2], W = sx[3];
        const int padH = (kDownsampleFactor - H % kDownsampleFactor) % kDownsampleFactor;
        const int padW = (kDownsampleFactor - W % kDownsampleFactor) % kDownsampleFactor;
        if (padH || padW) {
            x = g.pad_reflect(x, 0, padH, 0, padW);
            y = g.pad_reflect(y, 0, padH, 0, padW);
        }

        // Siamese encoder (same parameters on both branches)
        Id<T> ex[4], ey[4];
        Id<T> cx = x, cy = y;
        for (int l = 0; l < 4; ++l) {
            if (l > 0) {
                cx = g.maxpool2(cx);
                cy = g.maxpool2(cy);
            }
            cx = enc_[l](g, cx);
            cy = enc_[l](g, cy);
            ex[l] = cx;
            ey[l] = cy;
        }
        Id<T> skips[4];
        for (int l = 0; l < 4; ++l) skips[l] = g.concat_c(ex[l], ey[l]);

        Id<T> d = bottom_(g, g.maxpool2(skips[3]));
        for (int l = 3; l >= 0; --l) d = dec_[l](g, g.concat_c(g.upsample2(d), skips[l]));
        Id<T> out = g.sigmoid(head_(g, d));
        if (padH || padW) out = g.crop(out, 0, 0, H, W);
        return out;
    }

    /// Convenience single-pair forward on plain tensors, (C,H,W) or (1,C,H,W).
    Tensor<T> forward_value(const Tensor<T>& x, const Tensor<T>& y) const {
        ag::Graph<T> g;
        Id<T> out = forward(g, g.constant(as_nchw(x)), g.constant(as_nchw(y)));
        return g.val(out);
    }

    static Tensor<T> as_nchw(const Tensor<T>& t) {
        if (t.rank() == 4) return t;
        require_shape(t.rank() == 3, "expected (C,H,W) raster");
        Tensor<T> out = t;
        out.shape = {1, t.dim(0), t.dim(1), t.dim(2)};
        return out;
    }

  private:
    SegmentorConfig cfg_;
    ParamList<T> params_;
    ConvBlock<T> enc_[4], dec_[4], bottom_;
    Conv2d<T> head_;
};

// ---------------------------------------------------------------------------
// Generator: residual image-to-image network, no activation on the last layer.
// ---------------------------------------------------------------------------

struct GeneratorConfig {
    int bands = 4;
    int width = 64;
    int blocks = 8;

    std::string arch_string() const {
        std::ostringstream os;
        os << "generator:v1:bands=" << bands << ":width=" << width << ":blocks=" << blocks;
        return os.str();
    }
};

template <typename T>
class Generator {
  public:
    Generator(const GeneratorConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
        head_ = Conv2d<T>(params_, "stem", cfg.bands, cfg.width, 3);
        for (int i = 0; i < cfg.blocks; ++i) {
            res_a_.emplace_back(params_, "res" + std::to_string(i) + ".a", cfg.width, cfg.width, 3);
            res_b_.emplace_back(params_, "res" + std::to_string(i) + ".b", cfg.width, cfg.width, 3);
        }
        post_ = Conv2d<T>(params_, "post", cfg.width, cfg.width, 3);
        tail_ = Conv2d<T>(params_, "tail", cfg.width, cfg.bands, 3);
        nn::init_he_normal(params_, Rng::substream(seed, "init.generator"));
    }

    const GeneratorConfig& config() const { return cfg_; }
    ParamList<T>& params() { return params_; }
    const ParamList<T>& params() const { return params_; }
    std::string arch_string() const { return cfg_.arch_string(); }

    Id<T> forward(ag::Graph<T>& g, Id<T> x) const {
        const auto& s = g.val(x).shape;
        require_shape(s.size() == 4, "generator: input must be NCHW");
        require_shape(s[1] == cfg_.bands, "generator: expected " + std::to_string(cfg_.bands) + " bands, got " +
                                              std::to_string(s[1]));
        Id<T> h = g.relu(head_(g, x));
        Id<T> cur = h;
        for (std::size_t i = 0; i < res_a_.size(); ++i) {
            Id<T> t = g.relu(res_a_[i](g, cur));
            t = res_b_[i](g, t);
            cur = g.add(cur, t);
        }
        cur = g.add(post_(g, cur), h);  // long skip around the residual body
        return tail_(g, cur);           // unbounded output
    }

    Tensor<T> forward_value(const Tensor<T>& x) const {
        ag::Graph<T> g;
        Id<T> out = forward(g, g.constant(Segmentor<T>::as_nchw(x)));
        return g.val(out);
    }

  private:
    GeneratorConfig cfg_;
    ParamList<T> params_;
    Conv2d<T> head_, post_, tail_;
    std::vector<Conv2d<T>> res_a_, res_b_;
};

// ---------------------------------------------------------------------------
// Discriminator: Siamese shallow encoder, fused, scalar score in (0,1).
// Four conv stages total (two Siamese, two after fusion).
// ---------------------------------------------------------------------------

struct DiscriminatorConfig {
    int bands = 4;
    int base_width = 32;  // stage widths: w, 2w, 4w, 4w

    std::string arch_string() const {
        std::ostringstream os;
        os << "discriminator:v1:bands=" << bands << ":base=" << base_width;
        return os.str();
    }
};

template <typename T>
class Discriminator {
  public:
    Discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
        const int w = cfg.base_width;
        s1_ = Conv2d<T>(params_, "s1", cfg.bands, w, 3, 2);
        s2_ = Conv2d<T>(params_, "s2", w, 2 * w, 3, 2);
        f1_ = Conv2d<T>(params_, "f1", 4 * w, 4 * w, 3, 2);
        f2_ = Conv2d<T>(params_, "f2", 4 * w, 4 * w, 3, 2);
        head_ = Linear<T>(params_, "head", 4 * w, 1);
        nn::init_he_normal(params_, Rng::substream(seed, "init.discriminator"), 0.2);
    }

    const DiscriminatorConfig& config() const { return cfg_; }
    ParamList<T>& params() { return params_; }
    const ParamList<T>& params() const { return params_; }
    std::string arch_string() const { return cfg_.arch_string(); }

    /// Scalar score per pair, (N,1), strictly inside (0,1).
    Id<T> forward(ag::Graph<T>& g, Id<T> xm, Id<T> ym) const {
        const auto& sx = g.val(xm).shape;
        const auto& sy = g.val(ym).shape;
        require_shape(sx.size() == 4 && sx == sy,
                      "discriminator: X shape " + shape_str(sx) + " != Y shape " + shape_str(sy));
        require_shape(sx[1] == cfg_.bands, "discriminator: expected " + std::to_string(cfg_.bands) +
                                               " bands, got " + std::to_string(sx[1]));
        const T slope = T(0.2);
        auto branch = [&](Id<T> v) {
            v = g.leaky_relu(s1_(g, v), slope);
            return g.leaky_relu(s2_(g, v), slope);
        };
        Id<T> fused = g.concat_c(branch(xm), branch(ym));
        fused = g.leaky_relu(f1_(g, fused), slope);
        fused = g.leaky_relu(f2_(g, fused), slope);
        return g.sigmoid(head_(g, g.global_avg_pool(fused)));
    }

    Tensor<T> forward_value(const Tensor<T>& xm, const Tensor<T>& ym) const {
        ag::Graph<T> g;
        Id<T> out = forward(g, g.constant(Segmentor<T>::as_nchw(xm)), g.constant(Segmentor<T>::as_nchw(ym)));
        return g.val(out);
    }

  private:
    DiscriminatorConfig cfg_;
    ParamList<T> params_;
    Conv2d<T> s1_, s2_, f1_, f2_;
    Linear<T> head_;
};

// ---------------------------------------------------------------------------
// ContentFeatureExtractor: frozen VGG16-features-shaped stack. Submodule
// indexing follows the common 0..30 convention (conv/relu/pool interleaving),
// so layer=29 cuts after the last 3x3 conv of the fifth stage. Weights are
// deterministic (fixed init stream) and never updated; they can be replaced
// from a checkpoint blob when real pretrained weights are available.
// ---------------------------------------------------------------------------

struct ContentConfig {
    int layer = 29;       // number of submodules applied, 1..31
    int base_width = 64;  // 64 reproduces the VGG16 channel plan
    std::uint64_t weight_seed = 0x5eedc0ffee0157ull;

    std::string arch_string() const {
        std::ostringstream os;
        os << "content:v1:layer=" << layer << ":base=" << base_width << ":seed=" << weight_seed;
        return os.str();
    }
};

template <typename T>
class ContentExtractor {
  public:
    enum class Sub { kConv, kRelu, kPool };

    explicit ContentExtractor(const ContentConfig& cfg) : cfg_(cfg) {
        require_shape(cfg.layer >= 1 && cfg.layer <= 31, "content extractor: layer must be in [1,31]");
        const int m = cfg.base_width;
        // conv channel plan per VGG16: 64,64 | 128,128 | 256,256,256 | 512,512,512 | 512,512,512
        const int widths[13][2] = {{3, m},         {m, m},         {m, 2 * m},     {2 * m, 2 * m}, {2 * m, 4 * m},
                                   {4 * m, 4 * m}, {4 * m, 4 * m}, {4 * m, 8 * m}, {8 * m, 8 * m}, {8 * m, 8 * m},
                                   {8 * m, 8 * m}, {8 * m, 8 * m}, {8 * m, 8 * m}};
        const int convs_per_stage[5] = {2, 2, 3, 3, 3};
        int conv_idx = 0, sub = 0;
        for (int stage = 0; stage < 5 && sub < cfg.layer; ++stage) {
            for (int c = 0; c < convs_per_stage[stage] && sub < cfg.layer; ++c) {
                subs_.push_back(Sub::kConv);
                convs_.emplace_back(params_, "vgg.conv" + std::to_string(conv_idx), widths[conv_idx][0],
                                    widths[conv_idx][1], 3);
                ++conv_idx;
                ++sub;
                if (sub >= cfg.layer) break;
                subs_.push_back(Sub::kRelu);
                ++sub;
            }
            if (sub < cfg.layer && stage < 5) {
                subs_.push_back(Sub::kPool);
                ++sub;
            }
        }
        nn::init_he_normal(params_, Rng(cfg.weight_seed));
        params_.freeze();
    }

    const ContentConfig& config() const { return cfg_; }
    ParamList<T>& params() { return params_; }
    const ParamList<T>& params() const { return params_; }
    std::string arch_string() const { return cfg_.arch_string(); }

    int pool_count() const {
        int n = 0;
        for (auto s : subs_)
            if (s == Sub::kPool) ++n;
        return n;
    }

    /// Feature map of a 3-channel raster at the configured cut point.
    /// Gradient flows through to the input; the weights receive none.
    Id<T> forward(ag::Graph<T>& g, Id<T> x) const {
        const auto& s = g.val(x).shape;
        require_shape(s.size() == 4, "content extractor: input must be NCHW");
        require_shape(s[1] == 3, "content extractor: exactly 3 channels required, got " + std::to_string(s[1]));
        const int factor = 1 << pool_count();
        const int padH = (factor - s[2] % factor) % factor;
        const int padW = (factor - s[3] % factor) % factor;
        require_shape(s[2] + padH >= factor && s[3] + padW >= factor,
                      "content extractor: input too small for configured layer");
        if (padH || padW) x = g.pad_reflect(x, 0, padH, 0, padW);
        std::size_t ci = 0;
        for (auto sub : subs_) {
            switch (sub) {
                case Sub::kConv: x = convs_[ci++](g, x); break;
                case Sub::kRelu: x = g.relu(x); break;
                case Sub::kPool: x = g.maxpool2(x); break;
            }
        }
        return x;
    }

    Tensor<T> forward_value(const Tensor<T>& x) const {
        ag::Graph<T> g;
        Id<T> out = forward(g, g.constant(Segmentor<T>::as_nchw(x)));
        return g.val(out);
    }

  private:
    ContentConfig cfg_;
    ParamList<T> params_;
    std::vector<Sub> subs_;
    std::vector<Conv2d<T>> convs_;
};

}  // namespace fcdgan::nets
