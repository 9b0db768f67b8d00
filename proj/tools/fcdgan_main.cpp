// Copyright 2026 The fcdgan Authors
// SPDX-License-Identifier: Apache-2.0
//
// fcdgan command-line interface.
//   make-dataset  derive supervision (wscd slicing, region references, uscd pairs)
//   train         run a training regime from a config file
//   predict       tile/stitch change probabilities from a checkpoint
//   evaluate      confusion metrics of a binary map against a reference
//   sweep         F1 (and friends) across a threshold grid
//   render        error maps, probability overlays, loss-curve plots
//   synth         generate a synthetic benchmark case; optionally train+score
//
// Exit codes: 0 success, 1 validation error, 2 runtime failure.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "fcdgan/config.hpp"
#include "fcdgan/raster_io.hpp"
#include "fcdgan/render.hpp"
#include "fcdgan/synth_runner.hpp"

namespace fs = std::filesystem;
using namespace fcdgan;

namespace {

// FCDGAN_OUT_ROOT prefixes relative output paths.
std::string resolve_out(const std::string& path) {
    const char* root = std::getenv("FCDGAN_OUT_ROOT");
    if (root && *root && fs::path(path).is_relative()) return (fs::path(root) / path).string();
    return path;
}

void guard_overwrite(const std::string& path, bool force) {
    if (!force && fs::exists(path))
        throw ConfigError("output '" + path + "' already exists; pass --force to overwrite");
}

train::PairSample<float> load_sample(const data::DatasetManifest& m, const data::ManifestSample& s) {
    train::PairSample<float> p;
    auto rx = io::read_raster(m.resolve(s.x));
    auto ry = io::read_raster(m.resolve(s.y));
    if (rx.data.shape != ry.data.shape)
        throw ConfigError("sample rasters disagree in shape: " + s.x + " vs " + s.y);
    if (rx.bands() != m.bands)
        throw ConfigError(s.x + ": band count " + std::to_string(rx.bands()) + " does not match manifest bands " +
                          std::to_string(m.bands));
    p.x = std::move(rx.data);
    p.y = std::move(ry.data);
    if (!s.ref.empty()) p.ref = io::read_mask(m.resolve(s.ref));
    if (!s.region.empty()) p.region = io::read_mask(m.resolve(s.region));
    p.label = s.label;
    return p;
}

train::PairSet<float> load_pairset(const data::DatasetManifest& m) {
    train::PairSet<float> out;
    for (const auto& s : m.samples) out.push_back(load_sample(m, s));
    if (out.empty()) throw ConfigError("manifest lists no samples");
    return out;
}

nets::SegmentorConfig parse_segmentor_arch(const std::string& arch) {
    // segmentor:v1:bands=B:base=W:convs=C
    nets::SegmentorConfig cfg;
    if (arch.rfind("segmentor:v1:", 0) != 0)
        throw ckpt::CheckpointError("checkpoint is not a segmentor archive: '" + arch + "'");
    std::istringstream is(arch.substr(13));
    std::string tok;
    while (std::getline(is, tok, ':')) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = tok.substr(0, eq);
        const int value = std::stoi(tok.substr(eq + 1));
        if (key == "bands")
            cfg.bands = value;
        else if (key == "base")
            cfg.base_width = value;
        else if (key == "convs")
            cfg.block_convs = value;
    }
    return cfg;
}

void write_rgb_png(const std::string& path, const eval::RgbImage& img) { io::write_png(path, img); }

void write_run_manifest(const std::string& path, const RunConfig& rc, const train::TrainReport& report) {
    nlohmann::json j;
    for (const auto& [k, v] : config_snapshot(rc)) j["config"][k] = v;
    j["seed"] = report.seed;
    j["total_epochs"] = report.total_epochs;
    j["wall_seconds"] = report.wall_seconds;
    j["checkpoints"] = report.checkpoints;
    j["stage_boundaries"] = report.stage_boundaries;
    for (const auto& [stage, steps] : report.steps_per_epoch) j["steps_per_epoch"][stage] = steps;
    std::ofstream f(path, std::ios::trunc);
    f << j.dump(2) << "\n";
}

std::string help_footer_config_keys() {
    std::ostringstream os;
    os << "Config file keys (key = value per line, '#' comments, unknown keys rejected):\n";
    for (const auto& k : config_keys()) os << "  " << k.name << "\n      " << k.description << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------

int cmd_make_dataset(const std::string& mode, const std::string& x_path, const std::string& y_path,
                     const std::string& ref_path, const std::string& out, int slice, int expansion, bool force) {
    const std::string out_dir = resolve_out(out);
    guard_overwrite(out_dir, force);
    fs::create_directories(out_dir);

    auto rx = io::read_raster(x_path);
    auto ry = io::read_raster(y_path);
    if (rx.data.shape != ry.data.shape) throw ConfigError("input rasters disagree in shape");

    data::DatasetManifest m;
    m.bands = rx.bands();

    auto write_pair_tile = [&](const Tensor<float>& t, const std::string& name) {
        io::Raster r;
        r.source_type = rx.source_type;
        r.data = t;
        io::write_raster((fs::path(out_dir) / name).string(), r);
    };

    if (mode == "wscd-slice") {
        if (ref_path.empty()) throw ConfigError("wscd-slice needs --ref");
        auto ref = io::read_mask(ref_path);
        auto slices = data::make_wscd_dataset(rx.data, ry.data, ref, slice);
        m.scope = data::NormScope::kGlobal;
        int changed = 0;
        for (std::size_t i = 0; i < slices.size(); ++i) {
            const auto tag = std::to_string(i);
            write_pair_tile(slices[i].x, "x_" + tag + ".tif");
            write_pair_tile(slices[i].y, "y_" + tag + ".tif");
            io::write_mask((fs::path(out_dir) / ("ref_" + tag + ".tif")).string(), slices[i].ref);
            data::ManifestSample s;
            s.x = "x_" + tag + ".tif";
            s.y = "y_" + tag + ".tif";
            s.ref = "ref_" + tag + ".tif";  // evaluation only
            s.label = slices[i].label;
            changed += slices[i].label;
            m.samples.push_back(s);
        }
        data::write_manifest((fs::path(out_dir) / "manifest.txt").string(), m);
        std::cout << "wrote " << slices.size() << " slices (" << changed << " changed, "
                  << slices.size() - changed << " unchanged) to " << out_dir << "\n";
    } else if (mode == "rscd-regions") {
        if (ref_path.empty()) throw ConfigError("rscd-regions needs --ref");
        auto ref = io::read_mask(ref_path);
        auto region = data::make_region_reference(ref, expansion);
        m.scope = data::NormScope::kGlobal;
        write_pair_tile(rx.data, "x_0.tif");
        write_pair_tile(ry.data, "y_0.tif");
        io::write_mask((fs::path(out_dir) / "ref_0.tif").string(), ref);
        io::write_mask((fs::path(out_dir) / "region_0.tif").string(), region);
        data::ManifestSample s;
        s.x = "x_0.tif";
        s.y = "y_0.tif";
        s.ref = "ref_0.tif";
        s.region = "region_0.tif";
        s.label = 1;
        m.samples.push_back(s);
        data::write_manifest((fs::path(out_dir) / "manifest.txt").string(), m);
        std::int64_t area = 0;
        for (auto v : region.data) area += v != 0.0f;
        std::cout << "wrote region reference (expansion " << expansion << ", " << area << " px) to " << out_dir
                  << "\n";
    } else if (mode == "uscd-tiles") {
        m.scope = data::NormScope::kPerImage;
        write_pair_tile(rx.data, "x_0.tif");
        write_pair_tile(ry.data, "y_0.tif");
        data::ManifestSample s;
        s.x = "x_0.tif";
        s.y = "y_0.tif";
        if (!ref_path.empty()) {
            auto ref = io::read_mask(ref_path);
            io::write_mask((fs::path(out_dir) / "ref_0.tif").string(), ref);
            s.ref = "ref_0.tif";
        }
        m.samples.push_back(s);
        data::write_manifest((fs::path(out_dir) / "manifest.txt").string(), m);
        std::cout << "wrote unsupervised pair manifest to " << out_dir << " (tiling happens at train time)\n";
    } else {
        throw ConfigError("unknown mode '" + mode + "' (wscd-slice|rscd-regions|uscd-tiles)");
    }
    return 0;
}

int cmd_train(const std::string& config_path, int epochs_override, bool force) {
    RunConfig rc = parse_run_config(config_path);
    if (epochs_override >= 0) {
        rc.train.epochs_gen = epochs_override;
        rc.train.epochs_seg = epochs_override;
        rc.train.epochs_joint = epochs_override;
        rc.train.epochs_adversarial = epochs_override;
    }
    rc.train.validate();  // fail before any compute
    if (rc.manifest.empty()) throw ConfigError("config must set 'manifest'");
    const std::string out_dir = resolve_out(rc.out_dir);
    guard_overwrite(out_dir, force);
    fs::create_directories(out_dir);

    auto manifest = data::read_manifest(rc.manifest);
    auto pairs = load_pairset(manifest);
    const auto stats = train::normalize_pairs(pairs, rc.train.norm_scope);
    if (rc.train.norm_scope == data::NormScope::kGlobal)
        data::write_stats((fs::path(out_dir) / "stats.txt").string(), stats);

    const int bands = manifest.bands;
    const bool with_disc = rc.train.regime == Regime::kWscd || rc.train.regime == Regime::kRscd;
    auto models = train::Models<float>::build(rc.train, bands, with_disc, rc.train.mu_content > 0);

    train::TrainReport report;
    switch (rc.train.regime) {
        case Regime::kUscd: {
            train::PairSet<float> tiles;
            for (const auto& p : pairs) {
                const auto tx = data::tile(p.x, rc.train.grid);
                const auto ty = data::tile(p.y, rc.train.grid);
                for (std::size_t i = 0; i < tx.size(); ++i) {
                    train::PairSample<float> s;
                    s.x = tx[i].first;
                    s.y = ty[i].first;
                    tiles.push_back(std::move(s));
                }
            }
            report = train::train_uscd(tiles, rc.train, models, out_dir);
            break;
        }
        case Regime::kWscd: {
            if (!manifest.all_have_labels())
                throw ConfigError("wscd needs a pair label on every manifest sample");
            train::PairSet<float> changed, unchanged;
            for (auto& p : pairs) (p.label == 1 ? changed : unchanged).push_back(std::move(p));
            report = train::train_wscd(changed, unchanged, rc.train, models, out_dir);
            break;
        }
        case Regime::kRscd: {
            if (!manifest.all_have_regions())
                throw ConfigError("rscd needs a region reference on every manifest sample");
            report = train::train_rscd(pairs, rc.train, models, out_dir);
            break;
        }
        case Regime::kFscd: {
            if (!manifest.all_have_refs())
                throw ConfigError("fscd needs a pixel reference on every manifest sample");
            report = train::train_fscd(pairs, rc.train, models, out_dir);
            break;
        }
    }
    train::write_loss_table((fs::path(out_dir) / "loss_table.tsv").string(), report);
    write_run_manifest((fs::path(out_dir) / "run.json").string(), rc, report);
    std::cout << "trained " << to_string(rc.train.regime) << " for " << report.total_epochs << " epochs in "
              << report.wall_seconds << " s; artifacts in " << out_dir << "\n";
    return 0;
}

int cmd_predict(const std::string& checkpoint, const std::string& x_path, const std::string& y_path,
                const std::string& out, double threshold, const std::string& normalization,
                const std::string& stats_path, int tile_input, int tile_core, int tile_context, bool force) {
    const std::string out_dir = resolve_out(out);
    guard_overwrite(out_dir, force);
    fs::create_directories(out_dir);

    const auto sidecar = ckpt::read_sidecar(checkpoint);
    auto seg_cfg = parse_segmentor_arch(sidecar.value("arch", ""));
    nets::Segmentor<float> seg(seg_cfg, 0);
    ckpt::load_checkpoint(checkpoint, seg.params(), seg.arch_string());

    auto rx = io::read_raster(x_path);
    auto ry = io::read_raster(y_path);
    if (rx.data.shape != ry.data.shape) throw ConfigError("input rasters disagree in shape");
    Tensor<float> x = rx.data, y = ry.data;
    if (normalization == "per_image") {
        x = data::normalize(x, data::compute_stats(x));
        y = data::normalize(y, data::compute_stats(y));
    } else if (normalization == "global") {
        if (stats_path.empty()) throw ConfigError("global normalization needs --stats");
        const auto st = data::read_stats(stats_path);
        x = data::normalize(x, st.x);
        y = data::normalize(y, st.y);
    } else {
        throw ConfigError("--normalization must be per_image or global");
    }

    data::TileGrid grid{tile_input, tile_core, tile_context};
    auto [prob, binary] = train::predict(seg, x, y, grid, threshold);

    io::Raster prob_raster;
    prob_raster.source_type = io::PixelType::kF32;
    prob_raster.data = prob;
    prob_raster.geo_tags = rx.geo_tags;  // carry georeferencing through
    io::write_raster((fs::path(out_dir) / "probability.tif").string(), prob_raster);

    io::Raster mask_raster;
    mask_raster.source_type = io::PixelType::kU8;
    mask_raster.data = binary;
    for (auto& v : mask_raster.data.data) v = v != 0.0f ? 255.0f : 0.0f;
    mask_raster.geo_tags = rx.geo_tags;
    io::write_raster((fs::path(out_dir) / "mask.tif").string(), mask_raster);

    std::cout << "wrote probability.tif and mask.tif (threshold " << threshold << ") to " << out_dir << "\n";
    return 0;
}

int cmd_evaluate(const std::string& map_path, const std::string& ref_path, const std::string& valid_path,
                 double threshold, const std::string& out) {
    auto map = io::read_mask(map_path);
    auto ref = io::read_mask(ref_path);
    Tensor<float> valid;
    if (!valid_path.empty()) valid = io::read_mask(valid_path);
    const auto counts = eval::confusion(map, ref, valid.empty() ? nullptr : &valid);
    const auto report = eval::metrics_from_counts(counts, threshold);
    const auto text = eval::to_text(report);
    if (out.empty()) {
        std::cout << text;
    } else {
        std::ofstream f(resolve_out(out), std::ios::trunc);
        f << text;
        std::cout << "wrote metrics to " << resolve_out(out) << "\n";
    }
    return 0;
}

int cmd_sweep(const std::string& prob_path, const std::string& ref_path, const std::string& valid_path,
              const std::string& out, bool force) {
    auto prob_raster = io::read_raster(prob_path);
    if (prob_raster.bands() != 1) throw ConfigError("probability raster must be single-band");
    auto ref = io::read_mask(ref_path);
    Tensor<float> valid;
    if (!valid_path.empty()) valid = io::read_mask(valid_path);
    const auto reports = eval::threshold_sweep(prob_raster.data, ref, eval::default_thresholds(),
                                               valid.empty() ? nullptr : &valid);
    const std::string out_path = resolve_out(out);
    guard_overwrite(out_path, force);
    std::ofstream f(out_path, std::ios::trunc);
    f << "threshold\tOA\tKC\tPre\tRec\tF1\tmIOU\tcIOU\ttp\tfp\tfn\ttn\n";
    f.precision(6);
    f << std::fixed;
    for (const auto& r : reports)
        f << r.threshold << "\t" << r.oa << "\t" << r.kc << "\t" << r.precision << "\t" << r.recall << "\t" << r.f1
          << "\t" << r.miou << "\t" << r.ciou << "\t" << r.counts.tp << "\t" << r.counts.fp << "\t" << r.counts.fn
          << "\t" << r.counts.tn << "\n";
    std::cout << "wrote " << reports.size() << " sweep rows to " << out_path << "\n";
    return 0;
}

int cmd_render(const std::string& mode, const std::string& map_path, const std::string& prob_path,
               const std::string& ref_path, const std::string& base_path, const std::string& valid_path,
               const std::vector<std::string>& loss_tables, const std::string& boundaries, double alpha,
               const std::string& out, bool force) {
    const std::string out_path = resolve_out(out);
    if (mode == "error") {
        guard_overwrite(out_path, force);
        auto map = io::read_mask(map_path);
        auto ref = io::read_mask(ref_path);
        Tensor<float> valid;
        if (!valid_path.empty()) valid = io::read_mask(valid_path);
        write_rgb_png(out_path, eval::render_error_map(map, ref, valid.empty() ? nullptr : &valid));
    } else if (mode == "density") {
        guard_overwrite(out_path, force);
        auto prob = io::read_raster(prob_path);
        auto base = io::read_raster(base_path);
        write_rgb_png(out_path, eval::render_density(prob.data, base.data, alpha));
    } else if (mode == "losses") {
        if (loss_tables.empty()) throw ConfigError("render losses needs at least one --loss-table");
        fs::create_directories(out_path);
        // term -> one series per table (multi-run overlay)
        std::map<std::string, std::vector<std::vector<double>>> by_term;
        for (const auto& table : loss_tables) {
            std::ifstream f(table);
            if (!f) throw io::IoError("cannot open loss table " + table);
            std::map<std::string, std::map<int, double>> rows;
            std::string line;
            while (std::getline(f, line)) {
                if (line.empty() || line[0] == '#') continue;
                std::istringstream is(line);
                int epoch;
                std::string term;
                double value;
                if (is >> epoch >> term >> value) rows[term][epoch] = value;
            }
            for (auto& [term, m] : rows) {
                std::vector<double> series;
                for (auto& [e, v] : m) series.push_back(v);
                by_term[term].push_back(std::move(series));
            }
        }
        std::vector<int> bounds;
        if (!boundaries.empty()) {
            std::istringstream is(boundaries);
            std::string tok;
            while (std::getline(is, tok, ',')) bounds.push_back(std::stoi(tok));
        }
        for (const auto& [term, runs] : by_term) {
            std::string name = term;
            for (auto& c : name)
                if (c == '/' || c == '.') c = '_';
            write_rgb_png((fs::path(out_path) / (name + ".png")).string(), eval::plot_loss_curves(runs, bounds));
        }
        std::cout << "wrote " << by_term.size() << " loss plots to " << out_path << "\n";
        return 0;
    } else {
        throw ConfigError("unknown render mode '" + mode + "' (error|density|losses)");
    }
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int cmd_synth(const std::string& regime, std::uint64_t seed, const std::string& out, bool run,
              const std::string& config_path, bool force) {
    RunConfig rc;
    if (!config_path.empty())
        rc = parse_run_config(config_path);
    else
        apply_preset(rc, "synth-" + regime);
    if (to_string(rc.train.regime) != regime)
        throw ConfigError("config regime does not match --regime " + regime);
    rc.train.seed = seed;
    rc.train.validate();

    const std::string out_dir = resolve_out(out);
    guard_overwrite(out_dir, force);
    fs::create_directories(out_dir);
    fs::create_directories(fs::path(out_dir) / "pairs");
    fs::create_directories(fs::path(out_dir) / "eval");

    // write the dataset with exactly the supervision the regime needs; ground
    // truth goes under eval/ for scoring only
    auto synth = data::gen_synthetic_case<float>(seed, rc.synth_changed, rc.synth_unchanged, rc.synth);
    data::DatasetManifest m;
    m.bands = rc.synth.bands;
    m.scope = rc.train.norm_scope;
    for (std::size_t i = 0; i < synth.pairs.size(); ++i) {
        const auto& p = synth.pairs[i];
        const auto tag = std::to_string(i);
        io::Raster r;
        r.source_type = io::PixelType::kF32;
        r.data = p.x;
        io::write_raster((fs::path(out_dir) / "pairs" / ("x_" + tag + ".tif")).string(), r);
        r.data = p.y;
        io::write_raster((fs::path(out_dir) / "pairs" / ("y_" + tag + ".tif")).string(), r);
        io::write_mask((fs::path(out_dir) / "eval" / ("ref_" + tag + ".tif")).string(), p.ref);
        data::ManifestSample s;
        s.x = "pairs/x_" + tag + ".tif";
        s.y = "pairs/y_" + tag + ".tif";
        if (rc.train.regime == Regime::kWscd) s.label = p.label;
        if (rc.train.regime == Regime::kRscd) {
            io::write_mask((fs::path(out_dir) / "pairs" / ("region_" + tag + ".tif")).string(), p.region);
            s.region = "pairs/region_" + tag + ".tif";
        }
        if (rc.train.regime == Regime::kFscd) s.ref = "eval/ref_" + tag + ".tif";
        m.samples.push_back(s);
    }
    data::write_manifest((fs::path(out_dir) / "manifest.txt").string(), m);
    std::cout << "synthetic case: " << rc.synth_changed << " changed + " << rc.synth_unchanged
              << " unchanged pairs (" << rc.synth.size << "x" << rc.synth.size << ", " << rc.synth.bands
              << " bands) in " << out_dir << "\n";
    if (!run) return 0;

    const bool with_disc = rc.train.regime == Regime::kWscd || rc.train.regime == Regime::kRscd;
    auto models = train::Models<float>::build(rc.train, rc.synth.bands, with_disc, rc.train.mu_content > 0);
    std::vector<train::SynthPrediction<float>> predictions;
    const std::string run_dir = (fs::path(out_dir) / "run").string();
    auto result = train::run_synthetic_experiment(rc, models, &predictions, run_dir);
    train::write_loss_table((fs::path(run_dir) / "loss_table.tsv").string(), result.report);
    write_run_manifest((fs::path(run_dir) / "run.json").string(), rc, result.report);

    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const auto tag = std::to_string(i);
        io::Raster r;
        r.source_type = io::PixelType::kF32;
        r.data = predictions[i].prob;
        io::write_raster((fs::path(run_dir) / ("probability_" + tag + ".tif")).string(), r);
        io::write_mask((fs::path(run_dir) / ("mask_" + tag + ".tif")).string(), predictions[i].binary);
        write_rgb_png((fs::path(run_dir) / ("errors_" + tag + ".png")).string(),
                      eval::render_error_map(predictions[i].binary, predictions[i].ref));
    }
    std::ofstream mf((fs::path(run_dir) / "metrics.txt").string(), std::ios::trunc);
    mf << eval::to_text(result.metrics_at_threshold);

    std::cout << "F1 @ threshold " << rc.train.threshold << " = " << result.metrics_at_threshold.f1
              << " (best sweep F1 = " << result.best_f1 << " @ " << result.best_threshold << ")\n";
    if (with_disc)
        std::cout << "segmentor-side discrimination loss, last-10-epoch mean = " << result.disc_changed_mean_last10
                  << "\n";
    if (rc.train.regime == Regime::kRscd)
        std::cout << "probability mass outside the region reference = " << result.outside_region_fraction << "\n";
    std::cout << "wall time " << result.report.wall_seconds << " s; artifacts in " << run_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fcdgan: adversarial change detection (unsupervised, weakly, regional, fully supervised)"};
    app.require_subcommand(1);

    // make-dataset
    std::string md_mode, md_x, md_y, md_ref, md_out;
    int md_slice = 200, md_expansion = 10;
    bool md_force = false;
    auto* md = app.add_subcommand("make-dataset", "derive training supervision from rasters");
    md->add_option("--mode", md_mode, "wscd-slice | rscd-regions | uscd-tiles")->required();
    md->add_option("--x", md_x, "time-1 raster")->required();
    md->add_option("--y", md_y, "time-2 raster")->required();
    md->add_option("--ref", md_ref, "pixel reference mask ({0,255})");
    md->add_option("--out", md_out, "output dataset directory")->required();
    md->add_option("--slice", md_slice, "slice size for wscd-slice (default 200)");
    md->add_option("--expansion", md_expansion, "region box expansion in pixels (default 10)");
    md->add_flag("--force", md_force, "overwrite existing outputs");

    // train
    std::string tr_config;
    int tr_epochs_override = -1;
    bool tr_force = false;
    auto* tr = app.add_subcommand("train", "train a regime from a config file");
    tr->add_option("--config", tr_config, "run config file")->required();
    tr->add_option("--epochs-override", tr_epochs_override, "set every stage's epoch count (smoke tests)");
    tr->add_flag("--force", tr_force, "overwrite an existing output directory");
    tr->footer(help_footer_config_keys());

    // predict
    std::string pr_ckpt, pr_x, pr_y, pr_out, pr_norm = "per_image", pr_stats;
    double pr_threshold = 0.5;
    int pr_ti = 220, pr_tc = 200, pr_tx = 10;
    bool pr_force = false;
    auto* pr = app.add_subcommand("predict", "probability + binary map from a segmentor checkpoint");
    pr->add_option("--checkpoint", pr_ckpt, "checkpoint stem (expects .bin/.json)")->required();
    pr->add_option("--x", pr_x, "time-1 raster")->required();
    pr->add_option("--y", pr_y, "time-2 raster")->required();
    pr->add_option("--out", pr_out, "output directory")->required();
    pr->add_option("--threshold", pr_threshold, "binarization threshold (default 0.5)");
    pr->add_option("--normalization", pr_norm, "per_image | global (default per_image)");
    pr->add_option("--stats", pr_stats, "stats file for global normalization");
    pr->add_option("--tile-input", pr_ti, "tile size (default 220)");
    pr->add_option("--tile-core", pr_tc, "core size (default 200)");
    pr->add_option("--tile-context", pr_tx, "context (default 10)");
    pr->add_flag("--force", pr_force, "overwrite existing outputs");

    // evaluate
    std::string ev_map, ev_ref, ev_valid, ev_out;
    double ev_threshold = 0.5;
    auto* ev = app.add_subcommand("evaluate", "confusion metrics of a binary map");
    ev->add_option("--map", ev_map, "binary change map ({0,255})")->required();
    ev->add_option("--ref", ev_ref, "pixel reference ({0,255})")->required();
    ev->add_option("--valid", ev_valid, "validity mask excluding unlabeled pixels");
    ev->add_option("--threshold", ev_threshold, "threshold recorded in the report");
    ev->add_option("--out", ev_out, "write the report here instead of stdout");

    // sweep
    std::string sw_prob, sw_ref, sw_valid, sw_out;
    bool sw_force = false;
    auto* sw = app.add_subcommand("sweep", "metrics across the 0.05..0.95 threshold grid");
    sw->add_option("--prob", sw_prob, "probability raster (float32)")->required();
    sw->add_option("--ref", sw_ref, "pixel reference")->required();
    sw->add_option("--valid", sw_valid, "validity mask");
    sw->add_option("--out", sw_out, "output TSV")->required();
    sw->add_flag("--force", sw_force, "overwrite existing outputs");

    // render
    std::string rd_mode, rd_map, rd_prob, rd_ref, rd_base, rd_valid, rd_out, rd_bounds;
    std::vector<std::string> rd_tables;
    double rd_alpha = 0.5;
    bool rd_force = false;
    auto* rd = app.add_subcommand("render", "error maps, density overlays, loss plots");
    rd->add_option("--mode", rd_mode, "error | density | losses")->required();
    rd->add_option("--map", rd_map, "binary map (error mode)");
    rd->add_option("--prob", rd_prob, "probability raster (density mode)");
    rd->add_option("--ref", rd_ref, "pixel reference (error mode)");
    rd->add_option("--base", rd_base, "base image (density mode)");
    rd->add_option("--valid", rd_valid, "validity mask (error mode)");
    rd->add_option("--loss-table", rd_tables, "loss table(s); repeat for multi-run overlays");
    rd->add_option("--boundaries", rd_bounds, "comma-separated stage boundary epochs");
    rd->add_option("--alpha", rd_alpha, "overlay opacity (default 0.5)");
    rd->add_option("--out", rd_out, "output file (error/density) or directory (losses)")->required();
    rd->add_flag("--force", rd_force, "overwrite existing outputs");

    // synth
    std::string sy_regime, sy_out, sy_config;
    std::uint64_t sy_seed = 0;
    bool sy_run = false, sy_force = false;
    auto* sy = app.add_subcommand("synth", "generate a synthetic benchmark; --run trains and scores it");
    sy->add_option("--regime", sy_regime, "uscd | wscd | rscd | fscd")->required();
    sy->add_option("--seed", sy_seed, "master seed")->required();
    sy->add_option("--out", sy_out, "output directory")->required();
    sy->add_option("--config", sy_config, "config overriding the synth preset");
    sy->add_flag("--run", sy_run, "train, predict and print the final F1");
    sy->add_flag("--force", sy_force, "overwrite existing outputs");

    CLI11_PARSE(app, argc, argv);

    try {
        if (md->parsed())
            return cmd_make_dataset(md_mode, md_x, md_y, md_ref, md_out, md_slice, md_expansion, md_force);
        if (tr->parsed()) return cmd_train(tr_config, tr_epochs_override, tr_force);
        if (pr->parsed())
            return cmd_predict(pr_ckpt, pr_x, pr_y, pr_out, pr_threshold, pr_norm, pr_stats, pr_ti, pr_tc, pr_tx,
                               pr_force);
        if (ev->parsed()) return cmd_evaluate(ev_map, ev_ref, ev_valid, ev_threshold, ev_out);
        if (sw->parsed()) return cmd_sweep(sw_prob, sw_ref, sw_valid, sw_out, sw_force);
        if (rd->parsed())
            return cmd_render(rd_mode, rd_map, rd_prob, rd_ref, rd_base, rd_valid, rd_tables, rd_bounds, rd_alpha,
                              rd_out, rd_force);
        if (sy->parsed()) return cmd_synth(sy_regime, sy_seed, sy_out, sy_run, sy_config, sy_force);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ShapeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const data::ManifestError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {  // TrainAbort, IoError, CheckpointError
        std::cerr << "runtime failure: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
