#include "dalbt/active_loop.hpp"
#include "dalbt/losses.hpp"
#include "dalbt/network.hpp"
#include "dalbt/rng.hpp"
#include "dalbt/sampling.hpp"
#include "dalbt/weibull_openset.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

namespace {

using namespace dalbt;

Matrix random_matrix(int rows, int cols, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(rows, cols);
    for (double& v : m.a) v = rng.uniform() * 2.0 - 1.0;
    return m;
}

void BM_cross_correlation(benchmark::State& state) {
    int b = static_cast<int>(state.range(0));
    int d = static_cast<int>(state.range(1));
    Matrix z1 = random_matrix(b, d, 1), z2 = random_matrix(b, d, 2);
    for (auto _ : state) {
        Matrix c = cross_correlation(z1, z2);
        benchmark::DoNotOptimize(c.a.data());
    }
}
BENCHMARK(BM_cross_correlation)->Args({64, 128})->Args({256, 128})->Args({64, 512});

void BM_cross_correlation_backward(benchmark::State& state) {
    int b = static_cast<int>(state.range(0));
    int d = static_cast<int>(state.range(1));
    Matrix z1 = random_matrix(b, d, 1), z2 = random_matrix(b, d, 2);
    Matrix c = cross_correlation(z1, z2);
    Matrix dc = barlow_twins_grad_wrt_c(c, 0.005);
    for (auto _ : state) {
        EmbeddingGrads g = cross_correlation_backward(z1, z2, dc);
        benchmark::DoNotOptimize(g.dz1.a.data());
    }
}
BENCHMARK(BM_cross_correlation_backward)->Args({64, 128})->Args({256, 128});

void BM_weibull_fit(benchmark::State& state) {
    int n = static_cast<int>(state.range(0));
    Rng rng(7);
    std::vector<double> d;
    d.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double u = rng.uniform();
        d.push_back(1.5 * std::pow(-std::log(1.0 - u), 1.0 / 2.0)); // Weibull(2, 1.5)
    }
    WeibullFitConfig cfg;
    cfg.eta = n; // fit on the whole sample
    for (auto _ : state) {
        WeibullModel m = fit_weibull(d, cfg);
        benchmark::DoNotOptimize(m.kappa);
    }
}
BENCHMARK(BM_weibull_fit)->Arg(1000)->Arg(10000);

void BM_outlier_score(benchmark::State& state) {
    int classes = static_cast<int>(state.range(0));
    int dim = 64;
    OpenSetModel model;
    Rng rng(11);
    for (int c = 0; c < classes; ++c) {
        ClassModel cm;
        cm.class_id = c;
        cm.mean.assign(static_cast<std::size_t>(dim), 0.0);
        for (double& v : cm.mean) v = rng.uniform();
        cm.weibull = {0.1, 1.2, 2.0};
        cm.support = 100;
        model.classes.push_back(std::move(cm));
    }
    std::vector<double> z(static_cast<std::size_t>(dim));
    for (double& v : z) v = rng.uniform();
    for (auto _ : state) {
        double s = outlier_score(model, z);
        benchmark::DoNotOptimize(s);
    }
}
BENCHMARK(BM_outlier_score)->Arg(10)->Arg(100);

void BM_select_top_b(benchmark::State& state) {
    int n = static_cast<int>(state.range(0));
    int b = static_cast<int>(state.range(1));
    Rng rng(3);
    std::vector<int> ids(static_cast<std::size_t>(n));
    std::vector<double> scores(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        ids[static_cast<std::size_t>(i)] = i;
        scores[static_cast<std::size_t>(i)] = rng.uniform();
    }
    for (auto _ : state) {
        AcquisitionResult r = select_weibull_max(ids, scores, b);
        benchmark::DoNotOptimize(r.selected_ids.data());
    }
}
BENCHMARK(BM_select_top_b)->Args({100000, 100})->Args({100000, 1000});

void BM_conv_encode(benchmark::State& state) {
    int batch = static_cast<int>(state.range(0));
    ArchSpec arch;
    arch.input_h = 28;
    arch.input_w = 28;
    arch.input_c = 1;
    arch.num_classes = 10;
    arch.latent_dim = 32;
    arch.conv_channels = {4, 8};
    arch.projector_hidden = {64};
    arch.projector_dim = 32;
    Network net(arch, 5);

    Rng rng(9);
    std::vector<Image> imgs;
    std::vector<const Image*> ptrs;
    for (int i = 0; i < batch; ++i) {
        Image im(28, 28, 1);
        for (double& v : im.v) v = rng.uniform();
        imgs.push_back(std::move(im));
    }
    for (const Image& im : imgs) ptrs.push_back(&im);

    for (auto _ : state) {
        Matrix z = net.encode(ptrs);
        benchmark::DoNotOptimize(z.a.data());
    }
}
BENCHMARK(BM_conv_encode)->Arg(16)->Arg(64);

} // namespace

BENCHMARK_MAIN();
