// Copyright 2026 The fcdgan Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Run configuration: a flat key = value text file with strict key checking
// (typos are errors, never silently ignored) plus dataset presets that carry
// the published per-dataset hyperparameter sets (wh, hy, bcd, oscd) and
// desk-scale synthetic presets (synth-uscd, synth-wscd, synth-rscd,
// synth-fscd) sized for CPU runs.

#include <cstdint>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fcdgan/manifest.hpp"
#include "fcdgan/synthetic.hpp"
#include "fcdgan/tiling.hpp"

namespace fcdgan {

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class Regime { kUscd, kWscd, kRscd, kFscd };

inline const char* to_string(Regime r) {
    switch (r) {
        case Regime::kUscd: return "uscd";
        case Regime::kWscd: return "wscd";
        case Regime::kRscd: return "rscd";
        case Regime::kFscd: return "fscd";
    }
    return "?";
}

inline Regime parse_regime(const std::string& s) {
    if (s == "uscd") return Regime::kUscd;
    if (s == "wscd") return Regime::kWscd;
    if (s == "rscd") return Regime::kRscd;
    if (s == "fscd") return Regime::kFscd;
    throw ConfigError("unknown regime '" + s + "' (uscd|wscd|rscd|fscd)");
}

struct TrainConfig {
    Regime regime = Regime::kUscd;

    // objective weights
    double lambda_l1 = 0.75;   // sparsity
    double lambda_l2 = 1.5;    // suppression
    double lambda_gen = 0.2;   // generation-loss weight in the adversarial objectives
    double mu_content = 0.2;   // content-loss weight

    // schedule
    int epochs_gen = 50;          // generator pretraining (uscd stage 1 / wscd-rscd phase 1)
    int epochs_seg = 50;          // uscd stage 2; total epochs for fscd
    int epochs_joint = 150;       // uscd stage 3
    int epochs_adversarial = 50;  // wscd/rscd phase 2
    int batch_size = 10;
    int batch_size_gen = 50;
    int warmup_epochs = 5;

    // learning rates; adversarial training needs lr_discriminator < lr_segmentor
    double lr_segmentor = 1e-4;
    double lr_generator = 1e-4;
    double lr_discriminator = 5e-6;
    double weight_decay = 0.001;  // fscd L2 regularization

    double threshold = 0.5;
    double mask_prior = 0.5;  // segmentor head bias at mask-training start (logit of this prior)
    std::uint64_t seed = 0;
    bool uscd_alternate = false;    // stage 3: per-step alternation instead of joint updates
    bool augment_dihedral = false;  // expand training tiles with the 8 dihedral transforms

    // architecture
    int seg_base_width = 32;
    int seg_block_convs = 2;
    int gen_width = 64;
    int gen_blocks = 8;
    int disc_base_width = 32;
    int content_layer = 29;
    int content_base_width = 64;
    std::uint64_t content_seed = 0x5eedc0ffee0157ull;
    std::string content_weights;  // optional checkpoint stem with extractor weights

    data::TileGrid grid{220, 200, 10};
    data::NormScope norm_scope = data::NormScope::kPerImage;

    void validate() const {
        if (epochs_gen < 0 || epochs_seg < 0 || epochs_joint < 0 || epochs_adversarial < 0)
            throw ConfigError("epoch counts must be >= 0");
        if (batch_size < 1 || batch_size_gen < 1) throw ConfigError("batch sizes must be >= 1");
        if (lr_segmentor <= 0 || lr_generator <= 0) throw ConfigError("segmentor/generator learning rates must be > 0");
        if (lr_discriminator < 0) throw ConfigError("discriminator learning rate must be >= 0");
        if ((regime == Regime::kWscd || regime == Regime::kRscd) && !(lr_discriminator < lr_segmentor))
            throw ConfigError("adversarial regimes need lr_discriminator < lr_segmentor");
        if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("threshold must lie in (0,1)");
        if (!(mask_prior > 0.0 && mask_prior < 1.0)) throw ConfigError("mask_prior must lie in (0,1)");
        if (lambda_l1 < 0 || lambda_l2 < 0 || lambda_gen < 0 || mu_content < 0)
            throw ConfigError("loss weights must be >= 0");
        if (warmup_epochs < 0) throw ConfigError("warmup_epochs must be >= 0");
        if (seg_base_width < 1 || gen_width < 1 || gen_blocks < 1 || disc_base_width < 1 || seg_block_convs < 1)
            throw ConfigError("network widths/depths must be >= 1");
        grid.validate();
    }
};

struct RunConfig {
    TrainConfig train;
    std::string preset;
    std::string manifest;
    std::string out_dir = "out";

    // synthetic benchmark parameters (cmd synth and the synth presets)
    data::SynthOptions synth;
    int synth_changed = 60;
    int synth_unchanged = 200;
};

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

inline void apply_preset(RunConfig& rc, const std::string& name) {
    TrainConfig& t = rc.train;
    auto adversarial_base = [&] {
        t.lr_segmentor = 5e-5;
        t.lr_discriminator = 5e-6;
        t.lr_generator = 1e-4;
        t.epochs_gen = 50;
        t.epochs_adversarial = 50;
        t.batch_size_gen = 50;
        t.batch_size = 20;
        t.norm_scope = data::NormScope::kGlobal;
    };
    auto synth_base = [&] {
        t.seg_base_width = 8;
        t.seg_block_convs = 1;
        t.gen_width = 16;
        t.gen_blocks = 3;
        t.disc_base_width = 8;
        t.grid = data::TileGrid{72, 64, 4};
        t.warmup_epochs = 3;
        t.mask_prior = 0.1;
        t.mu_content = 0.0;
        rc.synth = data::SynthOptions{};
    };

    if (name == "wh" || name == "hy") {
        t.regime = Regime::kUscd;
        t.lambda_l1 = name == "wh" ? 0.75 : 0.65;
        t.mu_content = name == "wh" ? 0.2 : 0.65;
        t.epochs_gen = 50;
        t.epochs_seg = 50;
        t.epochs_joint = 150;
        t.batch_size = 10;
        t.lr_segmentor = 1e-4;
        t.lr_generator = 1e-4;
        t.norm_scope = data::NormScope::kPerImage;
        t.threshold = 0.5;
    } else if (name == "bcd") {
        t.regime = Regime::kWscd;
        adversarial_base();
        t.lambda_l1 = 1.6;
        t.lambda_l2 = 1.5;
        t.lambda_gen = 0.2;
        t.mu_content = 0.5;
    } else if (name == "oscd") {
        t.regime = Regime::kRscd;
        adversarial_base();
        t.lambda_l1 = 0.02;
        t.lambda_l2 = 2.0;
        t.lambda_gen = 0.5;
        t.mu_content = 0.1;
    } else if (name == "synth-uscd") {
        t.regime = Regime::kUscd;
        synth_base();
        t.lambda_l1 = 0.5;
        t.epochs_gen = 20;
        t.epochs_seg = 20;
        t.epochs_joint = 40;
        t.batch_size = 2;
        t.lr_segmentor = 5e-3;
        t.lr_generator = 1e-2;
        t.warmup_epochs = 2;
        t.gen_width = 16;
        t.gen_blocks = 2;
        t.grid = data::TileGrid{40, 32, 4};
        t.augment_dihedral = true;
        t.norm_scope = data::NormScope::kPerImage;
        rc.synth_changed = 1;
        rc.synth_unchanged = 0;
    } else if (name == "synth-wscd") {
        t.regime = Regime::kWscd;
        synth_base();
        t.lambda_l1 = 0.5;
        t.lambda_l2 = 1.5;
        t.lambda_gen = 1.0;
        t.epochs_gen = 20;
        t.epochs_adversarial = 30;
        t.batch_size_gen = 10;
        t.batch_size = 20;
        t.lr_segmentor = 2e-3;
        t.lr_discriminator = 2e-4;
        t.lr_generator = 5e-3;
        t.norm_scope = data::NormScope::kGlobal;
        rc.synth_changed = 60;
        rc.synth_unchanged = 200;
    } else if (name == "synth-rscd") {
        t.regime = Regime::kRscd;
        synth_base();
        t.lambda_l1 = 0.02;
        t.lambda_l2 = 2.0;
        t.lambda_gen = 0.5;
        t.epochs_gen = 15;
        t.epochs_adversarial = 25;
        t.batch_size_gen = 20;
        t.batch_size = 20;
        t.lr_segmentor = 5e-4;
        t.lr_discriminator = 5e-5;
        t.lr_generator = 2e-3;
        t.norm_scope = data::NormScope::kGlobal;
        rc.synth_changed = 60;
        rc.synth_unchanged = 60;
    } else if (name == "synth-fscd") {
        t.regime = Regime::kFscd;
        synth_base();
        t.epochs_seg = 30;
        t.batch_size = 20;
        t.lr_segmentor = 1e-3;
        t.weight_decay = 0.001;
        t.norm_scope = data::NormScope::kGlobal;
        rc.synth_changed = 60;
        rc.synth_unchanged = 60;
    } else {
        throw ConfigError("unknown preset '" + name + "' (wh|hy|bcd|oscd|synth-uscd|synth-wscd|synth-rscd|synth-fscd)");
    }
    rc.preset = name;
}

// ---------------------------------------------------------------------------
// Key table: single source of truth for parsing, --help, and snapshots
// ---------------------------------------------------------------------------

struct ConfigKey {
    std::string name;
    std::string description;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

namespace detail {

inline double to_double(const std::string& k, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("key '" + k + "': expected a number, got '" + v + "'");
    }
}

inline int to_int(const std::string& k, const std::string& v) {
    try {
        std::size_t pos = 0;
        const int i = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        throw ConfigError("key '" + k + "': expected an integer, got '" + v + "'");
    }
}

inline std::uint64_t to_u64(const std::string& k, const std::string& v) {
    try {
        std::size_t pos = 0;
        const std::uint64_t u = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return u;
    } catch (const std::exception&) {
        throw ConfigError("key '" + k + "': expected an unsigned integer, got '" + v + "'");
    }
}

inline bool to_bool(const std::string& k, const std::string& v) {
    if (v == "1" || v == "true" || v == "on") return true;
    if (v == "0" || v == "false" || v == "off") return false;
    throw ConfigError("key '" + k + "': expected a boolean (0/1/true/false), got '" + v + "'");
}

}  // namespace detail

inline const std::vector<ConfigKey>& config_keys() {
    using detail::to_bool;
    using detail::to_double;
    using detail::to_int;
    using detail::to_u64;
    static const std::vector<ConfigKey> keys = [] {
        std::vector<ConfigKey> k;
        auto add = [&k](std::string name, std::string desc, auto set, auto get) {
            k.push_back({std::move(name), std::move(desc), set, get});
        };
        add("preset", "dataset preset filling the published settings: wh|hy|bcd|oscd|synth-uscd|synth-wscd|synth-rscd|synth-fscd",
            [](RunConfig& c, const std::string& v) { apply_preset(c, v); },
            [](const RunConfig& c) { return c.preset; });
        add("regime", "training regime: uscd|wscd|rscd|fscd",
            [](RunConfig& c, const std::string& v) { c.train.regime = parse_regime(v); },
            [](const RunConfig& c) { return std::string(to_string(c.train.regime)); });
        add("manifest", "path to the dataset manifest",
            [](RunConfig& c, const std::string& v) { c.manifest = v; },
            [](const RunConfig& c) { return c.manifest; });
        add("out_dir", "output directory for checkpoints/reports (FCDGAN_OUT_ROOT prefixes relative paths)",
            [](RunConfig& c, const std::string& v) { c.out_dir = v; },
            [](const RunConfig& c) { return c.out_dir; });
        add("seed", "master seed; all randomness derives from named substreams of it",
            [](RunConfig& c, const std::string& v) { c.train.seed = to_u64("seed", v); },
            [](const RunConfig& c) { return std::to_string(c.train.seed); });
        add("mask_prior", "change prior at mask-training start; the segmentor head bias is set to its logit",
            [](RunConfig& c, const std::string& v) { c.train.mask_prior = to_double("mask_prior", v); },
            [](const RunConfig& c) { return std::to_string(c.train.mask_prior); });
        add("threshold", "probability threshold for binary maps (default 0.5)",
            [](RunConfig& c, const std::string& v) { c.train.threshold = to_double("threshold", v); },
            [](const RunConfig& c) { return std::to_string(c.train.threshold); });
        add("lambda_l1", "sparsity weight; presets: wh=0.75 hy=0.65 bcd=1.6 oscd=0.02",
            [](RunConfig& c, const std::string& v) { c.train.lambda_l1 = to_double("lambda_l1", v); },
            [](const RunConfig& c) { return std::to_string(c.train.lambda_l1); });
        add("lambda_l2", "suppression weight on unchanged/outside-region masks; presets: bcd=1.5 oscd=2",
            [](RunConfig& c, const std::string& v) { c.train.lambda_l2 = to_double("lambda_l2", v); },
            [](const RunConfig& c) { return std::to_string(c.train.lambda_l2); });
        add("lambda_gen", "generation-loss weight inside the adversarial objectives; presets: bcd=0.2 oscd=0.5",
            [](RunConfig& c, const std::string& v) { c.train.lambda_gen = to_double("lambda_gen", v); },
            [](const RunConfig& c) { return std::to_string(c.train.lambda_gen); });
        add("mu_content", "content-loss weight; presets: wh=0.2 hy=0.65 bcd=0.5 oscd=0.1",
            [](RunConfig& c, const std::string& v) { c.train.mu_content = to_double("mu_content", v); },
            [](const RunConfig& c) { return std::to_string(c.train.mu_content); });
        add("epochs_gen", "generator pretraining epochs (stage 1 / phase 1); presets use 50",
            [](RunConfig& c, const std::string& v) { c.train.epochs_gen = to_int("epochs_gen", v); },
            [](const RunConfig& c) { return std::to_string(c.train.epochs_gen); });
        add("epochs_seg", "segmentor-only epochs (uscd stage 2; fscd total); presets use 50",
            [](RunConfig& c, const std::string& v) { c.train.epochs_seg = to_int("epochs_seg", v); },
            [](const RunConfig& c) { return std::to_string(c.train.epochs_seg); });
        add("epochs_joint", "joint generator+segmentor epochs (uscd stage 3); presets use 150",
            [](RunConfig& c, const std::string& v) { c.train.epochs_joint = to_int("epochs_joint", v); },
            [](const RunConfig& c) { return std::to_string(c.train.epochs_joint); });
        add("epochs_adversarial", "adversarial epochs (wscd/rscd phase 2); presets use 50",
            [](RunConfig& c, const std::string& v) { c.train.epochs_adversarial = to_int("epochs_adversarial", v); },
            [](const RunConfig& c) { return std::to_string(c.train.epochs_adversarial); });
        add("batch_size", "batch size (uscd training and adversarial phases); presets: wh/hy=10 bcd/oscd=20",
            [](RunConfig& c, const std::string& v) { c.train.batch_size = to_int("batch_size", v); },
            [](const RunConfig& c) { return std::to_string(c.train.batch_size); });
        add("batch_size_gen", "generator pretraining batch size; presets: bcd/oscd=50",
            [](RunConfig& c, const std::string& v) { c.train.batch_size_gen = to_int("batch_size_gen", v); },
            [](const RunConfig& c) { return std::to_string(c.train.batch_size_gen); });
        add("warmup_epochs", "linear learning-rate warm-up length (from 10% of the base rate)",
            [](RunConfig& c, const std::string& v) { c.train.warmup_epochs = to_int("warmup_epochs", v); },
            [](const RunConfig& c) { return std::to_string(c.train.warmup_epochs); });
        add("lr_segmentor", "segmentor learning rate (Adam in uscd/fscd, RMSProp in wscd/rscd)",
            [](RunConfig& c, const std::string& v) { c.train.lr_segmentor = to_double("lr_segmentor", v); },
            [](const RunConfig& c) { return std::to_string(c.train.lr_segmentor); });
        add("lr_generator", "generator learning rate (Adam)",
            [](RunConfig& c, const std::string& v) { c.train.lr_generator = to_double("lr_generator", v); },
            [](const RunConfig& c) { return std::to_string(c.train.lr_generator); });
        add("lr_discriminator", "discriminator learning rate (RMSProp); must stay below lr_segmentor",
            [](RunConfig& c, const std::string& v) { c.train.lr_discriminator = to_double("lr_discriminator", v); },
            [](const RunConfig& c) { return std::to_string(c.train.lr_discriminator); });
        add("weight_decay", "fscd L2 regularization strength (0.001 default)",
            [](RunConfig& c, const std::string& v) { c.train.weight_decay = to_double("weight_decay", v); },
            [](const RunConfig& c) { return std::to_string(c.train.weight_decay); });
        add("tile_input", "tile size fed to the networks (core + 2*context); default 220",
            [](RunConfig& c, const std::string& v) { c.train.grid.input_size = to_int("tile_input", v); },
            [](const RunConfig& c) { return std::to_string(c.train.grid.input_size); });
        add("tile_core", "core size kept when stitching predictions; default 200",
            [](RunConfig& c, const std::string& v) { c.train.grid.core_size = to_int("tile_core", v); },
            [](const RunConfig& c) { return std::to_string(c.train.grid.core_size); });
        add("tile_context", "overlap context on each side; default 10",
            [](RunConfig& c, const std::string& v) { c.train.grid.context = to_int("tile_context", v); },
            [](const RunConfig& c) { return std::to_string(c.train.grid.context); });
        add("normalization", "per_image (uscd default) or global (wscd/rscd presets)",
            [](RunConfig& c, const std::string& v) {
                if (v == "per_image")
                    c.train.norm_scope = data::NormScope::kPerImage;
                else if (v == "global")
                    c.train.norm_scope = data::NormScope::kGlobal;
                else
                    throw ConfigError("normalization must be per_image or global");
            },
            [](const RunConfig& c) { return std::string(to_string(c.train.norm_scope)); });
        add("augment", "none or dihedral (8 transforms; synth-uscd preset turns this on)",
            [](RunConfig& c, const std::string& v) {
                if (v == "none")
                    c.train.augment_dihedral = false;
                else if (v == "dihedral")
                    c.train.augment_dihedral = true;
                else
                    throw ConfigError("augment must be none or dihedral");
            },
            [](const RunConfig& c) { return std::string(c.train.augment_dihedral ? "dihedral" : "none"); });
        add("uscd_alternate", "stage 3 per-step alternation instead of joint updates (0/1)",
            [](RunConfig& c, const std::string& v) { c.train.uscd_alternate = to_bool("uscd_alternate", v); },
            [](const RunConfig& c) { return std::string(c.train.uscd_alternate ? "1" : "0"); });
        add("seg_base_width", "segmentor encoder base width (levels w,2w,4w,8w); default 32",
            [](RunConfig& c, const std::string& v) { c.train.seg_base_width = to_int("seg_base_width", v); },
            [](const RunConfig& c) { return std::to_string(c.train.seg_base_width); });
        add("seg_block_convs", "convs per segmentor block; default 2",
            [](RunConfig& c, const std::string& v) { c.train.seg_block_convs = to_int("seg_block_convs", v); },
            [](const RunConfig& c) { return std::to_string(c.train.seg_block_convs); });
        add("gen_width", "generator residual width; default 64",
            [](RunConfig& c, const std::string& v) { c.train.gen_width = to_int("gen_width", v); },
            [](const RunConfig& c) { return std::to_string(c.train.gen_width); });
        add("gen_blocks", "generator residual block count; default 8",
            [](RunConfig& c, const std::string& v) { c.train.gen_blocks = to_int("gen_blocks", v); },
            [](const RunConfig& c) { return std::to_string(c.train.gen_blocks); });
        add("disc_base_width", "discriminator base width (stages w,2w,4w,4w); default 32",
            [](RunConfig& c, const std::string& v) { c.train.disc_base_width = to_int("disc_base_width", v); },
            [](const RunConfig& c) { return std::to_string(c.train.disc_base_width); });
        add("content_layer", "content extractor cut point (submodule count, 1..31); default 29",
            [](RunConfig& c, const std::string& v) { c.train.content_layer = to_int("content_layer", v); },
            [](const RunConfig& c) { return std::to_string(c.train.content_layer); });
        add("content_base_width", "content extractor base width (64 reproduces the published channel plan)",
            [](RunConfig& c, const std::string& v) { c.train.content_base_width = to_int("content_base_width", v); },
            [](const RunConfig& c) { return std::to_string(c.train.content_base_width); });
        add("content_seed", "fixed init stream of the frozen extractor",
            [](RunConfig& c, const std::string& v) { c.train.content_seed = to_u64("content_seed", v); },
            [](const RunConfig& c) { return std::to_string(c.train.content_seed); });
        add("content_weights", "optional checkpoint stem replacing the extractor weights",
            [](RunConfig& c, const std::string& v) { c.train.content_weights = v; },
            [](const RunConfig& c) { return c.train.content_weights; });
        add("synth_size", "synthetic raster size; default 64",
            [](RunConfig& c, const std::string& v) { c.synth.size = to_int("synth_size", v); },
            [](const RunConfig& c) { return std::to_string(c.synth.size); });
        add("synth_bands", "synthetic band count; default 4",
            [](RunConfig& c, const std::string& v) { c.synth.bands = to_int("synth_bands", v); },
            [](const RunConfig& c) { return std::to_string(c.synth.bands); });
        add("synth_noise_sigma", "unchanged-relation noise sigma; default 0.02",
            [](RunConfig& c, const std::string& v) { c.synth.noise_sigma = to_double("synth_noise_sigma", v); },
            [](const RunConfig& c) { return std::to_string(c.synth.noise_sigma); });
        add("synth_frac_min", "minimum planted coverage fraction; default 0.02",
            [](RunConfig& c, const std::string& v) { c.synth.frac_min = to_double("synth_frac_min", v); },
            [](const RunConfig& c) { return std::to_string(c.synth.frac_min); });
        add("synth_frac_max", "maximum planted coverage fraction; default 0.10",
            [](RunConfig& c, const std::string& v) { c.synth.frac_max = to_double("synth_frac_max", v); },
            [](const RunConfig& c) { return std::to_string(c.synth.frac_max); });
        add("synth_expansion", "region-reference expansion for synthetic rscd; default 4",
            [](RunConfig& c, const std::string& v) { c.synth.region_expansion = to_int("synth_expansion", v); },
            [](const RunConfig& c) { return std::to_string(c.synth.region_expansion); });
        add("synth_changed", "number of changed synthetic pairs",
            [](RunConfig& c, const std::string& v) { c.synth_changed = to_int("synth_changed", v); },
            [](const RunConfig& c) { return std::to_string(c.synth_changed); });
        add("synth_unchanged", "number of unchanged synthetic pairs",
            [](RunConfig& c, const std::string& v) { c.synth_unchanged = to_int("synth_unchanged", v); },
            [](const RunConfig& c) { return std::to_string(c.synth_unchanged); });
        return k;
    }();
    return keys;
}

inline const ConfigKey* find_key(const std::string& name) {
    for (const auto& k : config_keys())
        if (k.name == name) return &k;
    return nullptr;
}

/// Parses `key = value` lines ('#' comments). Unknown keys are rejected.
/// A `preset` line expands immediately, so later keys override preset values.
inline RunConfig parse_run_config_text(const std::string& text, const std::string& origin = "<config>") {
    RunConfig rc;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            if (a == std::string::npos) return std::string();
            const auto b = s.find_last_not_of(" \t\r");
            return s.substr(a, b - a + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const ConfigKey* spec = find_key(key);
        if (!spec) throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
        spec->set(rc, value);
    }
    return rc;
}

inline RunConfig parse_run_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_run_config_text(ss.str(), path);
}

/// Full key=value snapshot (run manifests, reports).
inline std::vector<std::pair<std::string, std::string>> config_snapshot(const RunConfig& rc) {
    std::vector<std::pair<std::string, std::string>> kv;
    for (const auto& k : config_keys()) kv.push_back({k.name, k.get(rc)});
    return kv;
}

}  // namespace fcdgan
