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

#include "qks/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qks/errors.hpp"
#include "qks/rng.hpp"

namespace qks {

namespace {

using ordered_json = nlohmann::ordered_json;

// Hidden activations for one input. z holds pre-activations so the
// backward pass can gate on them.
void hidden_forward(const PredictorModel& m, std::span<const double> x,
                    double* z) {
    const double* w1 = m.params.data() + m.w1_offset();
    const double* b1 = m.params.data() + m.b1_offset();
    for (int j = 0; j < m.hidden; ++j) {
        const double* row = w1 + static_cast<size_t>(j) * m.input_dim;
        double acc = b1[j];
        for (int i = 0; i < m.input_dim; ++i) acc += row[i] * x[i];
        z[j] = acc;
    }
}

double output_from_hidden(const PredictorModel& m, const double* z) {
    const double* w2 = m.params.data() + m.w2_offset();
    double y = m.params[m.b2_offset()];
    for (int j = 0; j < m.hidden; ++j)
        y += w2[j] * (z[j] > 0.0 ? z[j] : 0.0);
    return y;
}

}  // namespace

double PredictorModel::forward(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != input_dim)
        throw DimensionError("predictor input has " + std::to_string(x.size()) +
                             " entries, model expects " +
                             std::to_string(input_dim));
    std::vector<double> z(hidden);
    hidden_forward(*this, x, z.data());
    return output_from_hidden(*this, z.data());
}

double PredictorModel::forward(const CircuitImage& image) const {
    std::vector<double> x(image.bits.begin(), image.bits.end());
    return forward(x);
}

PredictorModel make_predictor(int input_dim, int hidden, uint64_t seed) {
    if (input_dim <= 0 || hidden <= 0)
        throw ArgumentError("predictor dimensions must be positive");
    PredictorModel m;
    m.input_dim = input_dim;
    m.hidden = hidden;
    m.init_seed = seed;
    m.params.resize(m.param_count());
    m.adam_m.assign(m.param_count(), 0.0);
    m.adam_v.assign(m.param_count(), 0.0);
    Rng rng(derive_seed(seed, {0x70726564}));  // "pred"
    const double in_bound = 1.0 / std::sqrt(static_cast<double>(input_dim));
    const double hid_bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    size_t k = 0;
    for (; k < m.w2_offset(); ++k)
        m.params[k] = rng.uniform(-in_bound, in_bound);
    for (; k < m.param_count(); ++k)
        m.params[k] = rng.uniform(-hid_bound, hid_bound);
    return m;
}

PredictorModel init_model(int l_max, uint64_t seed) {
    if (l_max <= 0) throw ArgumentError("l_max must be positive");
    return make_predictor(10 * l_max, 128, seed);
}

double smooth_l1(double err) {
    const double a = std::abs(err);
    return a < 1.0 ? 0.5 * err * err : a - 0.5;
}

double batch_loss_and_gradient(const PredictorModel& model,
                               std::span<const PredictorSample> batch,
                               std::span<double> grad) {
    if (batch.empty()) throw ArgumentError("empty training batch");
    if (grad.size() != model.param_count())
        throw DimensionError("gradient buffer size mismatch");
    const size_t bsz = batch.size();
    const int hid = model.hidden;
    const int in = model.input_dim;

    // Forward all samples, keeping pre-activations for the backward pass.
    std::vector<double> z(bsz * hid);
    std::vector<double> dout(bsz);
    double loss = 0.0;
    for (size_t s = 0; s < bsz; ++s) {
        const auto& smp = batch[s];
        if (static_cast<int>(smp.image.size()) != in)
            throw DimensionError("sample image size " +
                                 std::to_string(smp.image.size()) +
                                 " does not match model input " +
                                 std::to_string(in));
        hidden_forward(model, smp.image, z.data() + s * hid);
        const double pred = output_from_hidden(model, z.data() + s * hid);
        const double err = pred - smp.target;
        loss += smooth_l1(err);
        // d smooth_l1 / d err, averaged over the batch
        dout[s] = std::clamp(err, -1.0, 1.0) / static_cast<double>(bsz);
    }
    loss /= static_cast<double>(bsz);

    std::fill(grad.begin(), grad.end(), 0.0);
    double* gw1 = grad.data() + model.w1_offset();
    double* gb1 = grad.data() + model.b1_offset();
    double* gw2 = grad.data() + model.w2_offset();
    double* gb2 = grad.data() + model.b2_offset();
    const double* w2 = model.params.data() + model.w2_offset();

    // Each hidden unit owns a disjoint slice of w1/b1/w2, and samples are
    // accumulated in index order inside it, so the reduction is
    // deterministic for any thread count.
#pragma omp parallel for schedule(static)
    for (int j = 0; j < hid; ++j) {
        double* grow = gw1 + static_cast<size_t>(j) * in;
        double gb = 0.0, gw = 0.0;
        for (size_t s = 0; s < bsz; ++s) {
            const double zj = z[s * hid + j];
            if (zj > 0.0) gw += dout[s] * zj;
            const double dz = zj > 0.0 ? dout[s] * w2[j] : 0.0;
            if (dz != 0.0) {
                gb += dz;
                const auto& x = batch[s].image;
                for (int i = 0; i < in; ++i) grow[i] += dz * x[i];
            }
        }
        gb1[j] = gb;
        gw2[j] = gw;
    }
    for (size_t s = 0; s < bsz; ++s) *gb2 += dout[s];
    return loss;
}

std::vector<double> train_predictor(PredictorModel& model,
                                    std::span<const PredictorSample> samples,
                                    const TrainOptions& options) {
    if (samples.empty()) throw ArgumentError("no training samples");
    if (options.epochs < 0) throw ArgumentError("negative epoch count");
    if (options.batch_size <= 0) throw ArgumentError("batch size must be positive");
    const size_t count = samples.size();
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    std::vector<size_t> order(count);
    std::iota(order.begin(), order.end(), size_t{0});
    std::vector<double> grad(model.param_count());
    std::vector<PredictorSample> batch;

    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        Rng rng(derive_seed(options.seed,
                            {0x73687566, static_cast<uint64_t>(epoch)}));
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (size_t start = 0; start < count;
             start += static_cast<size_t>(options.batch_size)) {
            const size_t stop =
                std::min(count, start + static_cast<size_t>(options.batch_size));
            batch.assign(stop - start, {});
            for (size_t s = start; s < stop; ++s)
                batch[s - start] = samples[order[s]];
            const double loss = batch_loss_and_gradient(model, batch, grad);
            epoch_loss += loss * static_cast<double>(stop - start);

            model.adam_step += 1;
            const double c1 = 1.0 - std::pow(beta1, model.adam_step);
            const double c2 = 1.0 - std::pow(beta2, model.adam_step);
            const size_t np = model.param_count();
#pragma omp parallel for schedule(static) if (np >= 4096)
            for (long k = 0; k < static_cast<long>(np); ++k) {
                const double g = grad[k];
                model.adam_m[k] = beta1 * model.adam_m[k] + (1.0 - beta1) * g;
                model.adam_v[k] = beta2 * model.adam_v[k] + (1.0 - beta2) * g * g;
                model.params[k] -= options.learning_rate *
                                   (model.adam_m[k] / c1) /
                                   (std::sqrt(model.adam_v[k] / c2) + eps);
            }
        }
        epoch_loss /= static_cast<double>(count);
        if (!std::isfinite(epoch_loss))
            throw NumericError("predictor training diverged at epoch " +
                               std::to_string(epoch));
        model.loss_curve.push_back(epoch_loss);
    }
    return model.loss_curve;
}

std::vector<double> score_layouts(const PredictorModel& model,
                                  std::span<const CircuitLayout> layouts,
                                  int max_width) {
    // Encode serially so width and dimension errors propagate cleanly.
    std::vector<std::vector<double>> inputs(layouts.size());
    for (size_t idx = 0; idx < layouts.size(); ++idx) {
        const CircuitImage image = encode_image(layouts[idx], max_width);
        if (static_cast<int>(image.bits.size()) != model.input_dim)
            throw DimensionError(
                "image for " + std::to_string(layouts[idx].num_qubits) +
                " qubits at width " +
                std::to_string(max_width) + " has " +
                std::to_string(image.bits.size()) + " bits, model expects " +
                std::to_string(model.input_dim));
        inputs[idx].assign(image.bits.begin(), image.bits.end());
    }
    std::vector<double> scores(layouts.size());
#pragma omp parallel for schedule(static)
    for (long idx = 0; idx < static_cast<long>(layouts.size()); ++idx)
        scores[idx] = model.forward(inputs[idx]) / kKtaTargetScale;
    return scores;
}

namespace {
constexpr char kCheckpointMagic[] = "QKSPRED1";
}

void save_predictor(const PredictorModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write predictor checkpoint " + path);
    ordered_json header;
    header["input_dim"] = model.input_dim;
    header["hidden"] = model.hidden;
    header["seed"] = model.init_seed;
    header["adam_step"] = model.adam_step;
    header["loss_curve"] = model.loss_curve;
    out << kCheckpointMagic << '\n' << header.dump() << '\n';
    out.write(reinterpret_cast<const char*>(model.params.data()),
              static_cast<std::streamsize>(model.params.size() * sizeof(double)));
    if (!out) throw Error("short write on predictor checkpoint " + path);
}

PredictorModel load_predictor(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open predictor checkpoint " + path);
    std::string magic, header_line;
    if (!std::getline(in, magic) || magic != kCheckpointMagic)
        throw ParseError("not a predictor checkpoint: " + path);
    if (!std::getline(in, header_line))
        throw ParseError("predictor checkpoint missing header: " + path);
    ordered_json header;
    try {
        header = ordered_json::parse(header_line);
    } catch (const std::exception& e) {
        throw ParseError("bad predictor checkpoint header: " +
                         std::string(e.what()));
    }
    PredictorModel m;
    try {
        m.input_dim = header.at("input_dim").get<int>();
        m.hidden = header.at("hidden").get<int>();
        m.init_seed = header.at("seed").get<uint64_t>();
        m.adam_step = header.at("adam_step").get<long>();
        m.loss_curve = header.at("loss_curve").get<std::vector<double>>();
    } catch (const std::exception& e) {
        throw ParseError("bad predictor checkpoint header: " +
                         std::string(e.what()));
    }
    if (m.input_dim <= 0 || m.hidden <= 0)
        throw ParseError("predictor checkpoint has non-positive dimensions");
    m.params.resize(m.param_count());
    m.adam_m.assign(m.param_count(), 0.0);
    m.adam_v.assign(m.param_count(), 0.0);
    in.read(reinterpret_cast<char*>(m.params.data()),
            static_cast<std::streamsize>(m.params.size() * sizeof(double)));
    if (static_cast<size_t>(in.gcount()) != m.params.size() * sizeof(double))
        throw ParseError("predictor checkpoint truncated: " + path);
    return m;
}

}  // namespace qks
