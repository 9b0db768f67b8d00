// temporary diagnostic for the synthetic uscd dynamics; not installed
#include <iostream>

#include "fcdgan/synth_runner.hpp"

using namespace fcdgan;

int main(int argc, char** argv) {
    RunConfig rc;
    apply_preset(rc, "synth-uscd");
    for (int i = 1; i + 1 < argc; i += 2) {
        const auto* key = find_key(argv[i]);
        if (!key) {
            std::cerr << "unknown key " << argv[i] << "\n";
            return 1;
        }
        key->set(rc, argv[i + 1]);
    }
    const auto& cfg = rc.train;

    auto synth = data::gen_synthetic_case<float>(cfg.seed, 1, 0, rc.synth);
    train::PairSet<float> pairs;
    {
        train::PairSample<float> s;
        s.x = synth.pairs[0].x;
        s.y = synth.pairs[0].y;
        s.ref = synth.pairs[0].ref;
        s.label = 1;
        pairs.push_back(std::move(s));
    }
    train::normalize_pairs(pairs, cfg.norm_scope);
    const auto& p = pairs[0];

    auto models = train::Models<float>::build(cfg, rc.synth.bands, false, false);

    // error contrast of the generator on the full pair
    auto report_contrast = [&](const char* tag) {
        auto gen_out = models.gen->forward_value(p.x);
        double ein = 0, eout = 0;
        std::int64_t nin = 0, nout = 0;
        const int S = p.x.dim(1), B = p.x.dim(0);
        for (int i = 0; i < S; ++i)
            for (int j = 0; j < S; ++j) {
                double e = 0;
                for (int b = 0; b < B; ++b) e += std::abs(gen_out.at4(0, b, i, j) - p.y.at3(b, i, j));
                e /= B;
                if (p.ref.at3(0, i, j) != 0) {
                    ein += e;
                    ++nin;
                } else {
                    eout += e;
                    ++nout;
                }
            }
        std::cout << tag << ": err inside rects = " << ein / nin << " (" << nin << " px), outside = "
                  << eout / nout << "\n";
    };

    auto report_mask = [&](const char* tag) {
        auto [prob, bin] = train::predict(*models.seg, p.x, p.y, cfg.grid, cfg.threshold);
        double min = 0, mout = 0, pmax = 0;
        std::int64_t nin = 0, nout = 0;
        const int S = p.x.dim(1);
        for (int i = 0; i < S; ++i)
            for (int j = 0; j < S; ++j) {
                const double v = prob.at3(0, i, j);
                pmax = std::max(pmax, v);
                if (p.ref.at3(0, i, j) != 0) {
                    min += v;
                    ++nin;
                } else {
                    mout += v;
                    ++nout;
                }
            }
        Tensor<float> ref = p.ref;
        ref.shape = {1, S, S};
        const auto m = eval::metrics_from_counts(eval::confusion(bin, ref), cfg.threshold);
        std::cout << tag << ": mask inside = " << min / nin << ", outside = " << mout / nout
                  << ", max = " << pmax << ", F1@0.5 = " << m.f1 << "\n";
    };

    report_contrast("init");

    // run the standard stages but instrument between them
    train::PairSet<float> tiles;
    const auto tx = data::tile(p.x, cfg.grid);
    const auto ty = data::tile(p.y, cfg.grid);
    for (std::size_t i = 0; i < tx.size(); ++i) {
        train::PairSample<float> s;
        s.x = tx[i].first;
        s.y = ty[i].first;
        tiles.push_back(std::move(s));
    }

    auto cfg1 = cfg;
    cfg1.epochs_seg = 0;
    cfg1.epochs_joint = 0;
    train::train_uscd(tiles, cfg1, models);
    report_contrast("after stage 1");
    report_mask("after stage 1");

    auto cfg2 = cfg;
    cfg2.epochs_gen = 0;
    cfg2.epochs_joint = 0;
    auto r2 = train::train_uscd(tiles, cfg2, models);
    std::cout << "stage2 sparsity: ";
    for (auto v : r2.series.at("stage2.sparsity")) std::cout << v << " ";
    std::cout << "\n";
    report_mask("after stage 2");

    auto cfg3 = cfg;
    cfg3.epochs_gen = 0;
    cfg3.epochs_seg = 0;
    train::train_uscd(tiles, cfg3, models);
    report_contrast("after stage 3");
    report_mask("after stage 3");
    return 0;
}
