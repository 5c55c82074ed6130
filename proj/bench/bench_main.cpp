// Copyright 2026 The qksearch Authors.

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Timing comparison between the in-place bit kernels and the dense serial
// reference backend, and between worker counts for the parallel stages.
// Usage: qks_bench [workers], default 4.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <thread>
#include <vector>

#include "qks/common.hpp"
#include "qks/kernel.hpp"
#include "qks/pipeline.hpp"
#include "qks/predictor.hpp"
#include "qks/qsim.hpp"
#include "qks/qsim_reference.hpp"
#include "qks/rng.hpp"

using namespace qks;

namespace {

constexpr double kTau = 6.283185307179586;

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

struct Timed {
    double seconds = 0.0;
    int repeats = 0;
};

/// Runs fn repeatedly for at least ~0.2 s and reports the mean.
template <typename F>
Timed measure(F&& fn) {
    fn();  // warm up
    Timed t;
    const auto t0 = std::chrono::steady_clock::now();
    do {
        fn();
        ++t.repeats;
        t.seconds = seconds_since(t0);
    } while (t.seconds < 0.2);
    t.seconds /= t.repeats;
    return t;
}

void report(const char* name, const Timed& a, const char* label_a,
            const Timed& b, const char* label_b) {
    std::printf("%-34s %10.3f ms (%s) %10.3f ms (%s)   ratio %6.2fx\n", name,
                a.seconds * 1e3, label_a, b.seconds * 1e3, label_b,
                b.seconds / a.seconds);
}

TabularDataset angle_dataset(int count, int dim, uint64_t seed) {
    Rng rng(seed);
    TabularDataset d;
    d.features.resize(count, dim);
    for (int r = 0; r < count; ++r)
        for (int c = 0; c < dim; ++c) d.features(r, c) = rng.uniform(0.0, kTau);
    d.labels.resize(count);
    for (int r = 0; r < count; ++r) d.labels[r] = r % 2;
    d.num_classes = 2;
    return d;
}

}  // namespace

int main(int argc, char** argv) {
    const int k = argc > 1 ? std::atoi(argv[1]) : 4;
    std::printf("qks_bench: bit kernels vs dense reference, 1 vs %d workers\n",
                k);
    std::printf("hardware threads available: %u\n\n",
                std::thread::hardware_concurrency());

    // single-state simulation, growing qubit count
    for (int n : {6, 8, 10}) {
        Rng rng(40 + n);
        const CircuitLayout layout =
            sample_layout(n, 2, n, canonical_strategy(n, n), rng);
        std::vector<double> x(n);
        for (auto& v : x) v = rng.uniform(0.0, kTau);

        set_workers(1);
        const Timed fast = measure([&] { run_layout(layout, x, {}); });
        const Timed dense =
            measure([&] { reference::run_layout_dense(layout, x, {}); });
        char name[64];
        std::snprintf(name, sizeof(name), "run_layout n=%d", n);
        report(name, fast, "bit kernel", dense, "dense reference");
    }
    std::printf("\n");

    // Gram assembly, serial vs parallel workers
    {
        const TabularDataset data = angle_dataset(72, 6, 11);
        Rng rng(12);
        const CircuitLayout layout =
            sample_layout(6, 2, 6, canonical_strategy(6, 6), rng);

        set_workers(1);
        const Timed serial =
            measure([&] { gram(layout, {}, data.features, nullptr); });
        set_workers(k);
        const Timed parallel =
            measure([&] { gram(layout, {}, data.features, nullptr); });
        report("gram 72x72, n=6", parallel, "parallel", serial, "1 worker");
    }

    // predictor gradient pass, serial vs parallel workers
    {
        Rng rng(13);
        PredictorModel model = init_model(24, 2024);
        std::vector<PredictorSample> batch(64);
        for (auto& s : batch) {
            s.image.resize(model.input_dim);
            for (auto& b : s.image) b = rng.uniform_below(2) ? 1.0 : 0.0;
            s.target = rng.uniform(-1.0, 1.0);
        }
        std::vector<double> grad(model.param_count());

        set_workers(1);
        const Timed serial =
            measure([&] { batch_loss_and_gradient(model, batch, grad); });
        set_workers(k);
        const Timed parallel =
            measure([&] { batch_loss_and_gradient(model, batch, grad); });
        report("mlp gradient, batch 64, L=24", parallel, "parallel", serial,
               "1 worker");
    }

    set_workers(1);
    return 0;
}
