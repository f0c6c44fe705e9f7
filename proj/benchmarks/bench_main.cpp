/*
 * Copyright 2026 The lowfield-iqt Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <benchmark/benchmark.h>

#include <random>

#include "iqt/decimation.hpp"
#include "iqt/metrics.hpp"
#include "iqt/nn_ops.hpp"
#include "iqt/phantom.hpp"
#include "iqt/rng.hpp"

namespace {

iqt::nn::Tensor5 random_tensor(const iqt::nn::Shape5& s, std::uint64_t seed) {
    iqt::Rng rng(seed);
    std::normal_distribution<double> normal;
    iqt::nn::Tensor5 t(s);
    for (double& v : t.data()) v = normal(rng);
    return t;
}

iqt::Volume3D phantom_image(int n) {
    iqt::PhantomConfig cfg;
    cfg.dims = {n, n, n};
    cfg.seed = 7;
    return iqt::generate_phantom(cfg).image;
}

void BM_Conv3dForward(benchmark::State& state) {
    const int n = int(state.range(0)), c = int(state.range(1));
    const auto x = random_tensor({2, c, n, n, n}, 1);
    const auto w = random_tensor({c, c, 3, 3, 3}, 2);
    const auto b = random_tensor({1, c, 1, 1, 1}, 3);
    for (auto _ : state) benchmark::DoNotOptimize(iqt::nn::conv3d_forward(x, w, b));
    state.SetItemsProcessed(state.iterations() * int64_t(x.size()));
}
BENCHMARK(BM_Conv3dForward)->Args({16, 8})->Args({32, 8})->Args({16, 32})->Unit(benchmark::kMillisecond);

void BM_Conv3dBackward(benchmark::State& state) {
    const int n = int(state.range(0)), c = int(state.range(1));
    const auto x = random_tensor({2, c, n, n, n}, 1);
    const auto w = random_tensor({c, c, 3, 3, 3}, 2);
    const auto g = random_tensor({2, c, n, n, n}, 4);
    iqt::nn::Tensor5 gx(x.shape()), gw(w.shape()), gb({1, c, 1, 1, 1});
    for (auto _ : state) iqt::nn::conv3d_backward(x, w, g, &gx, &gw, &gb);
}
BENCHMARK(BM_Conv3dBackward)->Args({16, 8})->Args({16, 32})->Unit(benchmark::kMillisecond);

void BM_DownsampleZ(benchmark::State& state) {
    const auto v = phantom_image(int(state.range(0)));
    const int k = 4;
    const double sigma = iqt::slice_profile_sigma(k, v.grid().sz, {});
    const auto kernel = iqt::slab_kernel(sigma, v.grid().sz, 3.0, k);
    for (auto _ : state) benchmark::DoNotOptimize(iqt::downsample_z(v, k, kernel));
    state.SetItemsProcessed(state.iterations() * int64_t(v.data().size()));
}
BENCHMARK(BM_DownsampleZ)->Arg(64)->Arg(96)->Unit(benchmark::kMillisecond);

void BM_Mssim(benchmark::State& state) {
    const auto a = phantom_image(int(state.range(0)));
    auto b = a;
    iqt::Rng rng(9);
    std::normal_distribution<double> noise(0.0, 0.01);
    for (float& v : b.data()) v += float(noise(rng));
    for (auto _ : state) benchmark::DoNotOptimize(iqt::mssim(a, b));
    state.SetItemsProcessed(state.iterations() * int64_t(a.data().size()));
}
BENCHMARK(BM_Mssim)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
