// Copyright 2026 The fcdgan Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// The four training regimes.
//   uscd: stage 1 generator on whole tiles, stage 2 segmentor with a frozen
//         generator, stage 3 joint updates on the combined objective (Adam,
//         linear warm-up).
//   wscd: phase 1 generator on labelled-unchanged pairs (Adam), then frozen;
//         phase 2 alternating segmentor/discriminator updates (RMSProp) with
//         the changed-pair mask applied to both pairs and minority
//         oversampling.
//   rscd: phase 1 generator with region-masked reconstruction; phase 2
//         adversarial with the simulated unchanged pair as the real sample.
//   fscd: segmentor alone, BCE + L2 regularization (Adam).
// A non-finite loss aborts the run naming the offending term. All shuffles
// and inits derive from the config seed, so fixed-seed reruns reproduce the
// loss series.

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fcdgan/checkpoint.hpp"
#include "fcdgan/config.hpp"
#include "fcdgan/dataset.hpp"
#include "fcdgan/losses.hpp"
#include "fcdgan/normalize.hpp"
#include "fcdgan/optim.hpp"
#include "fcdgan/synthetic.hpp"
#include "fcdgan/tiling.hpp"

namespace fcdgan::train {

/// Runtime failure (non-finite loss, broken invariant mid-run). CLI maps this
/// to exit code 2.
class TrainAbort : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

template <typename T>
struct PairSample {
    Tensor<T> x, y;     // (C,H,W)
    Tensor<T> ref;      // (1,H,W) pixel reference, may be empty
    Tensor<T> region;   // (1,H,W) region reference, may be empty
    int label = -1;     // 1 changed, 0 unchanged, -1 unknown
};

template <typename T>
using PairSet = std::vector<PairSample<T>>;

struct TrainReport {
    std::map<std::string, std::vector<double>> series;  // per-epoch means
    std::map<std::string, int> series_start;            // global epoch of each series' first entry
    std::vector<int> stage_boundaries;                  // global epoch where a later stage begins
    std::map<std::string, int> steps_per_epoch;         // per stage
    std::vector<std::string> checkpoints;               // stems written
    double wall_seconds = 0;
    std::uint64_t seed = 0;
    int total_epochs = 0;
};

/// Delimited loss table: epoch <TAB> term <TAB> value.
inline void write_loss_table(const std::string& path, const TrainReport& report) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw TrainAbort("cannot write loss table " + path);
    f << "# epoch\tterm\tvalue\n";
    f.precision(10);
    for (const auto& [term, values] : report.series) {
        const int start = report.series_start.count(term) ? report.series_start.at(term) : 0;
        for (std::size_t i = 0; i < values.size(); ++i)
            f << start + static_cast<int>(i) << "\t" << term << "\t" << values[i] << "\n";
    }
}

namespace detail {

template <typename T>
Tensor<T> stack(const std::vector<const Tensor<T>*>& items) {
    require_shape(!items.empty(), "stack: empty batch");
    const auto& s0 = items.front()->shape;
    require_shape(s0.size() == 3, "stack: items must be (C,H,W)");
    Tensor<T> out({static_cast<int>(items.size()), s0[0], s0[1], s0[2]});
    const std::int64_t per = items.front()->numel();
    for (std::size_t n = 0; n < items.size(); ++n) {
        require_shape(items[n]->shape == s0, "stack: inconsistent shapes in batch");
        std::copy(items[n]->data.begin(), items[n]->data.end(), out.data.begin() + n * per);
    }
    return out;
}

inline void check_finite(double v, const std::string& term, int epoch, int step) {
    if (!std::isfinite(v))
        throw TrainAbort("non-finite value in term '" + term + "' at epoch " + std::to_string(epoch) + " step " +
                         std::to_string(step) + "; run aborted");
}

/// Accumulates per-step scalars into per-epoch means.
class EpochLogger {
  public:
    void add(const std::string& term, double v) {
        auto& [sum, n] = acc_[term];
        sum += v;
        ++n;
    }
    void commit(TrainReport& report, int global_epoch) {
        for (auto& [term, sn] : acc_) {
            auto& series = report.series[term];
            if (series.empty()) report.series_start[term] = global_epoch;
            series.push_back(sn.first / std::max(1, sn.second));
        }
        acc_.clear();
    }

  private:
    std::map<std::string, std::pair<double, int>> acc_;
};

inline std::vector<std::vector<int>> make_batches(std::vector<int> order, int batch_size) {
    std::vector<std::vector<int>> batches;
    for (std::size_t i = 0; i < order.size(); i += batch_size) {
        const std::size_t end = std::min(order.size(), i + batch_size);
        batches.emplace_back(order.begin() + i, order.begin() + end);
    }
    return batches;
}

template <typename T>
std::vector<int> shuffled_indices(std::size_t n, std::uint64_t seed, const char* stage, int epoch) {
    std::vector<int> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
    Rng rng = Rng::substream(seed, std::string("shuffle.") + stage, static_cast<std::uint64_t>(epoch));
    rng.shuffle(idx);
    return idx;
}

/// Change-prior initialization of the mask head: starting mask training at a
/// low prior avoids burning the early steps on the collapse from 0.5 and the
/// optimizer-state damage it causes.
template <typename T>
void apply_mask_prior(nets::Segmentor<T>& seg, double prior) {
    if (prior == 0.5) return;
    const double logit = std::log(prior / (1.0 - prior));
    seg.params().find("head.b")->value.fill(static_cast<T>(logit));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Model bundle
// ---------------------------------------------------------------------------

template <typename T>
struct Models {
    std::unique_ptr<nets::Segmentor<T>> seg;
    std::unique_ptr<nets::Generator<T>> gen;
    std::unique_ptr<nets::Discriminator<T>> disc;
    std::unique_ptr<nets::ContentExtractor<T>> content;

    static Models build(const TrainConfig& cfg, int bands, bool with_disc, bool with_content) {
        Models m;
        m.seg = std::make_unique<nets::Segmentor<T>>(
            nets::SegmentorConfig{bands, cfg.seg_base_width, cfg.seg_block_convs}, cfg.seed);
        m.gen = std::make_unique<nets::Generator<T>>(nets::GeneratorConfig{bands, cfg.gen_width, cfg.gen_blocks},
                                                     cfg.seed);
        if (with_disc)
            m.disc = std::make_unique<nets::Discriminator<T>>(nets::DiscriminatorConfig{bands, cfg.disc_base_width},
                                                              cfg.seed);
        if (with_content) {
            m.content = std::make_unique<nets::ContentExtractor<T>>(
                nets::ContentConfig{cfg.content_layer, cfg.content_base_width, cfg.content_seed});
            if (!cfg.content_weights.empty())
                ckpt::load_checkpoint(cfg.content_weights, m.content->params(), m.content->arch_string());
        }
        return m;
    }
};

namespace detail {

template <typename T>
void save_net(TrainReport& report, const std::string& out_dir, const std::string& name,
              const nn::ParamList<T>& params, const std::string& arch, const TrainConfig& cfg, int bands,
              int epoch) {
    if (out_dir.empty()) return;
    std::filesystem::create_directories(out_dir);
    const std::string stem = (std::filesystem::path(out_dir) / name).string();
    ckpt::save_checkpoint(stem, params, arch, ckpt::CheckpointInfo{to_string(cfg.regime), bands, cfg.seed, epoch});
    report.checkpoints.push_back(stem);
}

/// Generator predictions for a fixed (frozen) generator, precomputed per pair.
template <typename T>
std::vector<Tensor<T>> cache_generator_outputs(const nets::Generator<T>& gen, const PairSet<T>& pairs,
                                               int batch_size) {
    std::vector<Tensor<T>> cache(pairs.size());
    std::vector<int> order(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) order[i] = static_cast<int>(i);
    for (const auto& batch : make_batches(order, batch_size)) {
        std::vector<const Tensor<T>*> xs;
        for (int id : batch) xs.push_back(&pairs[id].x);
        ag::Graph<T> g;
        const Tensor<T>& out = g.val(gen.forward(g, g.constant(stack(xs))));
        const std::int64_t per = out.numel() / static_cast<std::int64_t>(batch.size());
        for (std::size_t n = 0; n < batch.size(); ++n) {
            Tensor<T> one({out.dim(1), out.dim(2), out.dim(3)});
            std::copy(out.data.begin() + n * per, out.data.begin() + (n + 1) * per, one.data.begin());
            cache[batch[n]] = std::move(one);
        }
    }
    return cache;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Normalization of a pair set (the trainers expect normalized inputs)
// ---------------------------------------------------------------------------

template <typename T>
data::GlobalStats normalize_pairs(PairSet<T>& pairs, data::NormScope scope) {
    data::GlobalStats st;
    if (scope == data::NormScope::kPerImage) {
        for (auto& p : pairs) {
            p.x = data::normalize(p.x, data::compute_stats(p.x));
            p.y = data::normalize(p.y, data::compute_stats(p.y));
        }
        return st;
    }
    std::vector<const Tensor<T>*> xs, ys;
    for (const auto& p : pairs) {
        xs.push_back(&p.x);
        ys.push_back(&p.y);
    }
    st.x = data::compute_stats_over(xs);
    st.y = data::compute_stats_over(ys);
    for (auto& p : pairs) {
        p.x = data::normalize(p.x, st.x);
        p.y = data::normalize(p.y, st.y);
    }
    return st;
}

/// Dihedral expansion of a tile set (ref/region transform along).
template <typename T>
PairSet<T> augment_dihedral(const PairSet<T>& pairs) {
    PairSet<T> out;
    out.reserve(pairs.size() * 8);
    for (const auto& p : pairs)
        for (int k = 0; k < 8; ++k) {
            PairSample<T> q;
            q.x = data::dihedral(p.x, k);
            q.y = data::dihedral(p.y, k);
            if (!p.ref.empty()) q.ref = data::dihedral(p.ref, k);
            if (!p.region.empty()) q.region = data::dihedral(p.region, k);
            q.label = p.label;
            out.push_back(std::move(q));
        }
    return out;
}

// ---------------------------------------------------------------------------
// Prediction: tile, forward, stitch cores, threshold
// ---------------------------------------------------------------------------

template <typename T>
std::pair<Tensor<T>, Tensor<T>> predict(const nets::Segmentor<T>& seg, const Tensor<T>& x, const Tensor<T>& y,
                                        const data::TileGrid& grid, double threshold, int batch_size = 8) {
    require_shape(x.rank() == 3 && x.shape == y.shape, "predict: X/Y shape mismatch");
    require_shape(x.dim(0) == seg.config().bands,
                  "predict: checkpoint expects " + std::to_string(seg.config().bands) + " bands, pair has " +
                      std::to_string(x.dim(0)));
    const int H = x.dim(1), W = x.dim(2);
    auto tiles_x = data::tile(x, grid);
    auto tiles_y = data::tile(y, grid);

    std::vector<std::pair<Tensor<T>, data::TilePlacement>> cores;
    for (std::size_t i = 0; i < tiles_x.size(); i += batch_size) {
        const std::size_t end = std::min(tiles_x.size(), i + batch_size);
        std::vector<const Tensor<T>*> xs, ys;
        for (std::size_t j = i; j < end; ++j) {
            xs.push_back(&tiles_x[j].first);
            ys.push_back(&tiles_y[j].first);
        }
        ag::Graph<T> g;
        const Tensor<T>& out =
            g.val(seg.forward(g, g.constant(detail::stack(xs)), g.constant(detail::stack(ys))));
        for (std::size_t j = i; j < end; ++j) {
            Tensor<T> one({1, grid.input_size, grid.input_size});
            const std::int64_t per = one.numel();
            std::copy(out.data.begin() + (j - i) * per, out.data.begin() + (j - i + 1) * per, one.data.begin());
            cores.push_back({data::core_of(one, grid), tiles_x[j].second});
        }
    }
    Tensor<T> prob = data::stitch(cores, H, W);
    Tensor<T> binary = prob;
    for (auto& v : binary.data) v = v >= static_cast<T>(threshold) ? T(1) : T(0);
    return {std::move(prob), std::move(binary)};
}

// ---------------------------------------------------------------------------
// USCD
// ---------------------------------------------------------------------------

template <typename T>
TrainReport train_uscd(const PairSet<T>& dataset_in, const TrainConfig& cfg, Models<T>& m,
                       const std::string& out_dir = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    cfg.validate();
    if (dataset_in.empty()) throw ConfigError("train_uscd: empty dataset");
    PairSet<T> dataset = cfg.augment_dihedral ? augment_dihedral(dataset_in) : dataset_in;
    const int bands = dataset.front().x.dim(0);

    losses::LossWeights<T> w{static_cast<T>(cfg.lambda_l1), T(0), T(0), static_cast<T>(cfg.mu_content)};
    const nets::ContentExtractor<T>* phi = m.content.get();

    TrainReport report;
    report.seed = cfg.seed;
    optim::Adam<T> opt_g(m.gen->params().items, static_cast<T>(cfg.lr_generator));
    optim::Adam<T> opt_s(m.seg->params().items, static_cast<T>(cfg.lr_segmentor));
    detail::EpochLogger log;
    int global_epoch = 0;

    auto batch_tensors = [&](const std::vector<int>& batch) {
        std::vector<const Tensor<T>*> xs, ys;
        for (int id : batch) {
            xs.push_back(&dataset[id].x);
            ys.push_back(&dataset[id].y);
        }
        return std::pair(detail::stack(xs), detail::stack(ys));
    };

    // stage 1: generator alone on whole tiles (mask = 0)
    report.steps_per_epoch["stage1"] = static_cast<int>((dataset.size() + cfg.batch_size - 1) / cfg.batch_size);
    for (int epoch = 0; epoch < cfg.epochs_gen; ++epoch, ++global_epoch) {
        opt_g.set_lr(static_cast<T>(optim::warmup_schedule(cfg.lr_generator, epoch, cfg.warmup_epochs)));
        const auto batches =
            detail::make_batches(detail::shuffled_indices<T>(dataset.size(), cfg.seed, "stage1", epoch), cfg.batch_size);
        int step = 0;
        for (const auto& batch : batches) {
            auto [xb, yb] = batch_tensors(batch);
            ag::Graph<T> g;
            auto gen_out = m.gen->forward(g, g.constant(std::move(xb)));
            auto mask = g.constant(Tensor<T>({static_cast<int>(batch.size()), 1, yb.dim(2), yb.dim(3)}));
            auto gl = losses::generation_loss(g, gen_out, g.constant(std::move(yb)), mask,
                                              static_cast<T>(cfg.mu_content), phi);
            const double v = g.scalar(gl.total);
            detail::check_finite(v, "stage1.generation", epoch, step);
            log.add("stage1.generation", v);
            opt_g.zero_grad();
            g.backward(gl.total);
            opt_g.step();
            ++step;
        }
        log.commit(report, global_epoch);
    }
    detail::save_net(report, out_dir, "generator_stage1", m.gen->params(), m.gen->arch_string(), cfg, bands,
                     global_epoch);

    // stage 2: segmentor with the generator frozen (its predictions are constants)
    detail::apply_mask_prior(*m.seg, cfg.mask_prior);
    m.gen->params().freeze(true);
    const auto gen_cache = detail::cache_generator_outputs(*m.gen, dataset, cfg.batch_size);
    report.stage_boundaries.push_back(global_epoch);
    report.steps_per_epoch["stage2"] = static_cast<int>((dataset.size() + cfg.batch_size - 1) / cfg.batch_size);
    for (int epoch = 0; epoch < cfg.epochs_seg; ++epoch, ++global_epoch) {
        opt_s.set_lr(static_cast<T>(optim::warmup_schedule(cfg.lr_segmentor, epoch, cfg.warmup_epochs)));
        const auto batches =
            detail::make_batches(detail::shuffled_indices<T>(dataset.size(), cfg.seed, "stage2", epoch), cfg.batch_size);
        int step = 0;
        for (const auto& batch : batches) {
            auto [xb, yb] = batch_tensors(batch);
            std::vector<const Tensor<T>*> gs;
            for (int id : batch) gs.push_back(&gen_cache[id]);
            ag::Graph<T> g;
            auto x_id = g.constant(std::move(xb));
            auto y_id = g.constant(std::move(yb));
            auto mask = m.seg->forward(g, x_id, y_id);
            auto ids = losses::uscd_objective_from(g, g.constant(detail::stack(gs)), y_id, mask, w, phi);
            const double v = g.scalar(ids.total);
            detail::check_finite(v, "stage2.total", epoch, step);
            log.add("stage2.total", v);
            log.add("stage2.generation", g.scalar(ids.gen.total));
            log.add("stage2.sparsity", g.scalar(ids.sparsity));
            opt_s.zero_grad();
            g.backward(ids.total);
            opt_s.step();
            ++step;
        }
        log.commit(report, global_epoch);
    }
    m.gen->params().freeze(false);
    detail::save_net(report, out_dir, "segmentor_stage2", m.seg->params(), m.seg->arch_string(), cfg, bands,
                     global_epoch);

    // stage 3: generator and segmentor together
    report.stage_boundaries.push_back(global_epoch);
    report.steps_per_epoch["stage3"] = static_cast<int>((dataset.size() + cfg.batch_size - 1) / cfg.batch_size);
    for (int epoch = 0; epoch < cfg.epochs_joint; ++epoch, ++global_epoch) {
        opt_s.set_lr(static_cast<T>(optim::warmup_schedule(cfg.lr_segmentor, epoch, cfg.warmup_epochs)));
        opt_g.set_lr(static_cast<T>(optim::warmup_schedule(cfg.lr_generator, epoch, cfg.warmup_epochs)));
        const auto batches =
            detail::make_batches(detail::shuffled_indices<T>(dataset.size(), cfg.seed, "stage3", epoch), cfg.batch_size);
        int step = 0;
        for (const auto& batch : batches) {
            const bool update_seg = !cfg.uscd_alternate || step % 2 == 0;
            const bool update_gen = !cfg.uscd_alternate || step % 2 == 1;
            auto [xb, yb] = batch_tensors(batch);
            ag::Graph<T> g;
            std::optional<losses::FreezeGuard<T>> freeze_s, freeze_g;
            if (!update_seg) freeze_s.emplace(m.seg->params());
            if (!update_gen) freeze_g.emplace(m.gen->params());
            auto x_id = g.constant(std::move(xb));
            auto y_id = g.constant(std::move(yb));
            auto ids = losses::uscd_objective(g, x_id, y_id, *m.seg, *m.gen, w, phi);
            const double v = g.scalar(ids.total);
            detail::check_finite(v, "stage3.total", epoch, step);
            log.add("stage3.total", v);
            log.add("stage3.generation", g.scalar(ids.gen.total));
            log.add("stage3.sparsity", g.scalar(ids.sparsity));
            if (update_seg) opt_s.zero_grad();
            if (update_gen) opt_g.zero_grad();
            g.backward(ids.total);
            if (update_seg) opt_s.step();
            if (update_gen) opt_g.step();
            ++step;
        }
        log.commit(report, global_epoch);
    }
    detail::save_net(report, out_dir, "segmentor", m.seg->params(), m.seg->arch_string(), cfg, bands, global_epoch);
    detail::save_net(report, out_dir, "generator", m.gen->params(), m.gen->arch_string(), cfg, bands, global_epoch);

    report.total_epochs = global_epoch;
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

// ---------------------------------------------------------------------------
// WSCD
// ---------------------------------------------------------------------------

template <typename T>
TrainReport train_wscd(const PairSet<T>& changed, const PairSet<T>& unchanged, const TrainConfig& cfg,
                       Models<T>& m, const std::string& out_dir = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    cfg.validate();
    if (changed.empty() || unchanged.empty())
        throw ConfigError("train_wscd: both changed and unchanged pair sets must be non-empty");
    const int bands = changed.front().x.dim(0);
    losses::LossWeights<T> w{static_cast<T>(cfg.lambda_l1), static_cast<T>(cfg.lambda_l2),
                             static_cast<T>(cfg.lambda_gen), static_cast<T>(cfg.mu_content)};
    const nets::ContentExtractor<T>* phi = m.content.get();

    TrainReport report;
    report.seed = cfg.seed;
    detail::EpochLogger log;
    int global_epoch = 0;

    // phase 1: generator on the real unchanged pairs (Adam), then frozen
    {
        optim::Adam<T> opt_g(m.gen->params().items, static_cast<T>(cfg.lr_generator));
        report.steps_per_epoch["phase1"] =
            static_cast<int>((unchanged.size() + cfg.batch_size_gen - 1) / cfg.batch_size_gen);
        for (int epoch = 0; epoch < cfg.epochs_gen; ++epoch, ++global_epoch) {
            opt_g.set_lr(static_cast<T>(optim::warmup_schedule(cfg.lr_generator, epoch, cfg.warmup_epochs)));
            const auto batches = detail::make_batches(
                detail::shuffled_indices<T>(unchanged.size(), cfg.seed, "wscd.gen", epoch), cfg.batch_size_gen);
            int step = 0;
            for (const auto& batch : batches) {
                std::vector<const Tensor<T>*> xs, ys;
                for (int id : batch) {
                    xs.push_back(&unchanged[id].x);
                    ys.push_back(&unchanged[id].y);
                }
                ag::Graph<T> g;
                auto yb = detail::stack(ys);
                auto mask = g.constant(Tensor<T>({static_cast<int>(batch.size()), 1, yb.dim(2), yb.dim(3)}));
                auto gl = losses::generation_loss(g, m.gen->forward(g, g.constant(detail::stack(xs))),
                                                  g.constant(std::move(yb)), mask, static_cast<T>(cfg.mu_content),
                                                  phi);
                const double v = g.scalar(gl.total);
                detail::check_finite(v, "phase1.generation", epoch, step);
                log.add("phase1.generation", v);
                opt_g.zero_grad();
                g.backward(gl.total);
                opt_g.step();
                ++step;
            }
            log.commit(report, global_epoch);
        }
    }
    m.gen->params().freeze(true);  // frozen for the whole adversarial phase
    detail::save_net(report, out_dir, "generator", m.gen->params(), m.gen->arch_string(), cfg, bands, global_epoch);

    const std::vector<Tensor<T>> gen_cache =
        cfg.lambda_gen > 0 ? detail::cache_generator_outputs(*m.gen, changed, cfg.batch_size) : std::vector<Tensor<T>>{};

    // phase 2: adversarial segmentor/discriminator updates (RMSProp)
    detail::apply_mask_prior(*m.seg, cfg.mask_prior);
    report.stage_boundaries.push_back(global_epoch);
    optim::RMSProp<T> opt_s(m.seg->params().items, static_cast<T>(cfg.lr_segmentor));
    optim::RMSProp<T> opt_d(m.disc->params().items, static_cast<T>(cfg.lr_discriminator));
    report.steps_per_epoch["phase2"] =
        static_cast<int>((unchanged.size() + cfg.batch_size - 1) / cfg.batch_size);
    std::vector<int> changed_ids(changed.size()), unchanged_ids(unchanged.size());
    for (std::size_t i = 0; i < changed.size(); ++i) changed_ids[i] = static_cast<int>(i);
    for (std::size_t i = 0; i < unchanged.size(); ++i) unchanged_ids[i] = static_cast<int>(i);

    for (int epoch = 0; epoch < cfg.epochs_adversarial; ++epoch, ++global_epoch) {
        opt_s.set_lr(static_cast<T>(optim::warmup_schedule(cfg.lr_segmentor, epoch, cfg.warmup_epochs)));
        opt_d.set_lr(static_cast<T>(optim::warmup_schedule(cfg.lr_discriminator, epoch, cfg.warmup_epochs)));
        const auto schedule = data::oversample_changed(changed_ids, unchanged_ids, cfg.seed, epoch);
        int step = 0;
        for (std::size_t off = 0; off < schedule.size(); off += cfg.batch_size, ++step) {
            const std::size_t end = std::min(schedule.size(), off + cfg.batch_size);
            std::vector<const Tensor<T>*> xc, yc, xu, yu, gc;
            for (std::size_t i = off; i < end; ++i) {
                xc.push_back(&changed[schedule[i].first].x);
                yc.push_back(&changed[schedule[i].first].y);
                xu.push_back(&unchanged[schedule[i].second].x);
                yu.push_back(&unchanged[schedule[i].second].y);
                if (cfg.lambda_gen > 0) gc.push_back(&gen_cache[schedule[i].first]);
            }

            // segmentor step (discriminator frozen inside the objective)
            Tensor<T> mask_values;
            {
                ag::Graph<T> g;
                auto ids = losses::wscd_segmentor_objective(
                    g, g.constant(detail::stack(xc)), g.constant(detail::stack(yc)),
                    g.constant(detail::stack(xu)), g.constant(detail::stack(yu)), *m.seg, *m.disc,
                    cfg.lambda_gen > 0 ? g.constant(detail::stack(gc)) : -1, w, phi);
                const double v = g.scalar(ids.total);
                detail::check_finite(v, "phase2.seg_total", epoch, step);
                log.add("phase2.seg_total", v);
                log.add("phase2.disc_changed", g.scalar(ids.disc_changed));
                log.add("phase2.sparsity", g.scalar(ids.sparsity));
                log.add("phase2.suppression", g.scalar(ids.suppression));
                if (cfg.lambda_gen > 0) log.add("phase2.generation", g.scalar(ids.gen.total));
                opt_s.zero_grad();
                g.backward(ids.total);
                opt_s.step();
                mask_values = g.val(ids.mask);
            }

            // discriminator step (pre-update mask, treated as constant)
            {
                ag::Graph<T> g;
                auto ids = losses::wscd_discriminator_objective_from(
                    g, g.constant(detail::stack(xc)), g.constant(detail::stack(yc)),
                    g.constant(detail::stack(xu)), g.constant(detail::stack(yu)), g.constant(mask_values),
                    *m.disc);
                const double v = g.scalar(ids.total);
                detail::check_finite(v, "phase2.disc_objective", epoch, step);
                log.add("phase2.disc_objective", v);
                log.add("phase2.disc_score_changed", g.scalar(ids.disc_changed));
                log.add("phase2.disc_score_unchanged", g.scalar(ids.disc_unchanged));
                opt_d.zero_grad();
                g.backward(ids.total);
                opt_d.step();
            }
        }
        log.commit(report, global_epoch);
    }
    m.gen->params().freeze(false);
    detail::save_net(report, out_dir, "segmentor", m.seg->params(), m.seg->arch_string(), cfg, bands, global_epoch);
    detail::save_net(report, out_dir, "discriminator", m.disc->params(), m.disc->arch_string(), cfg, bands,
                     global_epoch);

    report.total_epochs = global_epoch;
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

// ---------------------------------------------------------------------------
// RSCD
// ---------------------------------------------------------------------------

template <typename T>
TrainReport train_rscd(const PairSet<T>& pairs, const TrainConfig& cfg, Models<T>& m,
                       const std::string& out_dir = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    cfg.validate();
    if (pairs.empty()) throw ConfigError("train_rscd: empty dataset");
    for (const auto& p : pairs)
        if (p.region.empty()) throw ConfigError("train_rscd: every training pair needs a region reference");
    const int bands = pairs.front().x.dim(0);
    losses::LossWeights<T> w{static_cast<T>(cfg.lambda_l1), static_cast<T>(cfg.lambda_l2),
                             static_cast<T>(cfg.lambda_gen), static_cast<T>(cfg.mu_content)};
    const nets::ContentExtractor<T>* phi = m.content.get();

    TrainReport report;
    report.seed = cfg.seed;
    detail::EpochLogger log;
    int global_epoch = 0;

    // phase 1: generator with the region reference as the mask
    {
        optim::Adam<T> opt_g(m.gen->params().items, static_cast<T>(cfg.lr_generator));
        report.steps_per_epoch["phase1"] =
            static_cast<int>((pairs.size() + cfg.batch_size_gen - 1) / cfg.batch_size_gen);
        for (int epoch = 0; epoch < cfg.epochs_gen; ++epoch, ++global_epoch) {
            opt_g.set_lr(static_cast<T>(optim::warmup_schedule(cfg.lr_generator, epoch, cfg.warmup_epochs)));
            const auto batches = detail::make_batches(
                detail::shuffled_indices<T>(pairs.size(), cfg.seed, "rscd.gen", epoch), cfg.batch_size_gen);
            int step = 0;
            for (const auto& batch : batches) {
                std::vector<const Tensor<T>*> xs, ys, rs;
                for (int id : batch) {
                    xs.push_back(&pairs[id].x);
                    ys.push_back(&pairs[id].y);
                    rs.push_back(&pairs[id].region);
                }
                ag::Graph<T> g;
                auto gl = losses::generation_loss(g, m.gen->forward(g, g.constant(detail::stack(xs))),
                                                  g.constant(detail::stack(ys)), g.constant(detail::stack(rs)),
                                                  static_cast<T>(cfg.mu_content), phi);
                const double v = g.scalar(gl.total);
                detail::check_finite(v, "phase1.generation", epoch, step);
                log.add("phase1.generation", v);
                opt_g.zero_grad();
                g.backward(gl.total);
                opt_g.step();
                ++step;
            }
            log.commit(report, global_epoch);
        }
    }
    m.gen->params().freeze(true);
    detail::save_net(report, out_dir, "generator", m.gen->params(), m.gen->arch_string(), cfg, bands, global_epoch);

    // precompute the simulated unchanged pairs and (optionally) generator outputs
    std::vector<Tensor<T>> simulated(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i)
        simulated[i] = data::simulate_unchanged(pairs[i].x, pairs[i].y, pairs[i].region);
    const std::vector<Tensor<T>> gen_cache =
        cfg.lambda_gen > 0 ? detail::cache_generator_outputs(*m.gen, pairs, cfg.batch_size) : std::vector<Tensor<T>>{};

    // phase 2: adversarial against the simulated unchanged pairs
    detail::apply_mask_prior(*m.seg, cfg.mask_prior);
    report.stage_boundaries.push_back(global_epoch);
    optim::RMSProp<T> opt_s(m.seg->params().items, static_cast<T>(cfg.lr_segmentor));
    optim::RMSProp<T> opt_d(m.disc->params().items, static_cast<T>(cfg.lr_discriminator));
    report.steps_per_epoch["phase2"] = static_cast<int>((pairs.size() + cfg.batch_size - 1) / cfg.batch_size);
    for (int epoch = 0; epoch < cfg.epochs_adversarial; ++epoch, ++global_epoch) {
        opt_s.set_lr(static_cast<T>(optim::warmup_schedule(cfg.lr_segmentor, epoch, cfg.warmup_epochs)));
        opt_d.set_lr(static_cast<T>(optim::warmup_schedule(cfg.lr_discriminator, epoch, cfg.warmup_epochs)));
        const auto batches = detail::make_batches(
            detail::shuffled_indices<T>(pairs.size(), cfg.seed, "rscd.adv", epoch), cfg.batch_size);
        int step = 0;
        for (const auto& batch : batches) {
            std::vector<const Tensor<T>*> xs, ys, sims, regions, gc;
            for (int id : batch) {
                xs.push_back(&pairs[id].x);
                ys.push_back(&pairs[id].y);
                sims.push_back(&simulated[id]);
                regions.push_back(&pairs[id].region);
                if (cfg.lambda_gen > 0) gc.push_back(&gen_cache[id]);
            }
            ag::Graph<T> g;
            auto ids = losses::rscd_objectives(g, g.constant(detail::stack(xs)), g.constant(detail::stack(ys)),
                                               g.constant(detail::stack(sims)), g.constant(detail::stack(regions)),
                                               *m.seg, *m.disc,
                                               cfg.lambda_gen > 0 ? g.constant(detail::stack(gc)) : -1, w, phi);
            const double v = g.scalar(ids.seg.total);
            detail::check_finite(v, "phase2.seg_total", epoch, step);
            detail::check_finite(g.scalar(ids.disc.total), "phase2.disc_objective", epoch, step);
            log.add("phase2.seg_total", v);
            log.add("phase2.disc_changed", g.scalar(ids.seg.disc_changed));
            log.add("phase2.sparsity", g.scalar(ids.seg.sparsity));
            log.add("phase2.suppression", g.scalar(ids.seg.suppression));
            if (cfg.lambda_gen > 0) log.add("phase2.generation", g.scalar(ids.seg.gen.total));
            log.add("phase2.disc_objective", g.scalar(ids.disc.total));
            log.add("phase2.disc_score_changed", g.scalar(ids.disc.disc_changed));
            log.add("phase2.disc_score_unchanged", g.scalar(ids.disc.disc_unchanged));

            opt_s.zero_grad();
            g.backward(ids.seg.total);
            opt_s.step();
            opt_d.zero_grad();
            g.backward(ids.disc.total);
            opt_d.step();
            ++step;
        }
        log.commit(report, global_epoch);
    }
    m.gen->params().freeze(false);
    detail::save_net(report, out_dir, "segmentor", m.seg->params(), m.seg->arch_string(), cfg, bands, global_epoch);
    detail::save_net(report, out_dir, "discriminator", m.disc->params(), m.disc->arch_string(), cfg, bands,
                     global_epoch);

    report.total_epochs = global_epoch;
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

// ---------------------------------------------------------------------------
// FSCD
// ---------------------------------------------------------------------------

template <typename T>
TrainReport train_fscd(const PairSet<T>& pairs, const TrainConfig& cfg, Models<T>& m,
                       const std::string& out_dir = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    cfg.validate();
    if (pairs.empty()) throw ConfigError("train_fscd: empty dataset");
    for (const auto& p : pairs)
        if (p.ref.empty()) throw ConfigError("train_fscd: every training pair needs a pixel reference");
    const int bands = pairs.front().x.dim(0);

    TrainReport report;
    report.seed = cfg.seed;
    detail::EpochLogger log;
    optim::Adam<T> opt_s(m.seg->params().items, static_cast<T>(cfg.lr_segmentor), T(0.9), T(0.999), T(1e-8),
                         static_cast<T>(cfg.weight_decay));
    report.steps_per_epoch["fscd"] = static_cast<int>((pairs.size() + cfg.batch_size - 1) / cfg.batch_size);
    int global_epoch = 0;
    for (int epoch = 0; epoch < cfg.epochs_seg; ++epoch, ++global_epoch) {
        opt_s.set_lr(static_cast<T>(optim::warmup_schedule(cfg.lr_segmentor, epoch, cfg.warmup_epochs)));
        const auto batches = detail::make_batches(
            detail::shuffled_indices<T>(pairs.size(), cfg.seed, "fscd", epoch), cfg.batch_size);
        int step = 0;
        for (const auto& batch : batches) {
            std::vector<const Tensor<T>*> xs, ys, rs;
            for (int id : batch) {
                xs.push_back(&pairs[id].x);
                ys.push_back(&pairs[id].y);
                rs.push_back(&pairs[id].ref);
            }
            ag::Graph<T> g;
            auto prob = m.seg->forward(g, g.constant(detail::stack(xs)), g.constant(detail::stack(ys)));
            auto loss = losses::fscd_loss(g, prob, g.constant(detail::stack(rs)));
            const double v = g.scalar(loss);
            detail::check_finite(v, "fscd.bce", epoch, step);
            log.add("fscd.bce", v);
            opt_s.zero_grad();
            g.backward(loss);
            opt_s.step();
            ++step;
        }
        log.commit(report, global_epoch);
    }
    detail::save_net(report, out_dir, "segmentor", m.seg->params(), m.seg->arch_string(), cfg, bands, global_epoch);

    report.total_epochs = global_epoch;
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

}  // namespace fcdgan::train
