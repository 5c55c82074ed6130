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

#include "qks/kernel.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

namespace qks {

using json = nlohmann::ordered_json;

namespace {

std::span<const double> row_span(const Matrix& m, Eigen::Index i) {
    return {m.data() + static_cast<size_t>(i) * m.cols(),
            static_cast<size_t>(m.cols())};
}

GramMatrix gram_pure(const CircuitLayout& layout, std::span<const double> theta,
                     const Matrix& x, const Matrix* y) {
    const Eigen::Index nx = x.rows();
    std::vector<StateVector> sx;
    sx.reserve(nx);
    for (Eigen::Index i = 0; i < nx; ++i) sx.emplace_back(zero_state(1));
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < nx; ++i) {
        sx[i] = run_layout(layout, row_span(x, i), theta);
    }

    GramMatrix out;
    if (!y) {
        out.square_training = true;
        out.entries.resize(nx, nx);
#pragma omp parallel for schedule(dynamic)
        for (Eigen::Index i = 0; i < nx; ++i) {
            for (Eigen::Index j = i; j < nx; ++j) {
                const double f = state_fidelity(sx[i], sx[j]);
                out.entries(i, j) = f;
                out.entries(j, i) = f;
            }
        }
        return out;
    }

    const Eigen::Index ny = y->rows();
    std::vector<StateVector> sy;
    sy.reserve(ny);
    for (Eigen::Index j = 0; j < ny; ++j) sy.emplace_back(zero_state(1));
#pragma omp parallel for schedule(static)
    for (Eigen::Index j = 0; j < ny; ++j) {
        sy[j] = run_layout(layout, row_span(*y, j), theta);
    }
    out.entries.resize(nx, ny);
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < nx; ++i) {
        for (Eigen::Index j = 0; j < ny; ++j) {
            out.entries(i, j) = state_fidelity(sx[i], sy[j]);
        }
    }
    return out;
}

GramMatrix gram_noisy(const CircuitLayout& layout, std::span<const double> theta,
                      const Matrix& x, const Matrix* y, const NoiseSpec& noise) {
    const Eigen::Index nx = x.rows();
    std::vector<DensityMatrix> rx;
    rx.reserve(nx);
    for (Eigen::Index i = 0; i < nx; ++i) rx.emplace_back(DensityMatrix(1));
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < nx; ++i) {
        rx[i] = run_layout_noisy(layout, row_span(x, i), theta, noise);
    }

    GramMatrix out;
    if (!y) {
        out.square_training = true;
        out.entries.resize(nx, nx);
#pragma omp parallel for schedule(dynamic)
        for (Eigen::Index i = 0; i < nx; ++i) {
            for (Eigen::Index j = i; j < nx; ++j) {
                const double f = dm_overlap(rx[i], rx[j]);
                out.entries(i, j) = f;
                out.entries(j, i) = f;
            }
        }
        return out;
    }

    const Eigen::Index ny = y->rows();
    std::vector<DensityMatrix> ry;
    ry.reserve(ny);
    for (Eigen::Index j = 0; j < ny; ++j) ry.emplace_back(DensityMatrix(1));
#pragma omp parallel for schedule(static)
    for (Eigen::Index j = 0; j < ny; ++j) {
        ry[j] = run_layout_noisy(layout, row_span(*y, j), theta, noise);
    }
    out.entries.resize(nx, ny);
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < nx; ++i) {
        for (Eigen::Index j = 0; j < ny; ++j) {
            out.entries(i, j) = dm_overlap(rx[i], ry[j]);
        }
    }
    return out;
}

}  // namespace

GramMatrix gram(const CircuitLayout& layout, std::span<const double> theta,
                const Matrix& x, const Matrix* y,
                const std::optional<NoiseSpec>& noise) {
    if (x.rows() == 0 || (y && y->rows() == 0)) {
        throw ArgumentError("gram needs at least one row per side");
    }
    if (noise && noise->enabled()) {
        return gram_noisy(layout, theta, x, y, *noise);
    }
    return gram_pure(layout, theta, x, y);
}

GramMatrix rbf_gram(const Matrix& x, const Matrix& y, double gamma) {
    if (gamma <= 0.0) throw ArgumentError("rbf gamma must be positive");
    if (x.cols() != y.cols()) {
        throw DimensionError("rbf operands have different feature counts");
    }
    GramMatrix out;
    out.square_training = (&x == &y);
    out.entries.resize(x.rows(), y.rows());
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < y.rows(); ++j) {
            const double d2 = (x.row(i) - y.row(j)).squaredNorm();
            out.entries(i, j) = std::exp(-gamma * d2);
        }
    }
    return out;
}

double kta(const GramMatrix& q, std::span<const int> labels, int num_classes) {
    const Eigen::Index n = q.entries.rows();
    if (q.entries.cols() != n) throw DimensionError("alignment needs a square Gram");
    if (static_cast<Eigen::Index>(labels.size()) != n) {
        throw DimensionError("label count does not match Gram size");
    }
    if (num_classes < 2) throw ArgumentError("alignment needs at least 2 classes");
    for (int lbl : labels) {
        if (lbl < 0 || lbl >= num_classes) {
            throw ArgumentError("label " + std::to_string(lbl) +
                                " outside [0, " + std::to_string(num_classes) + ")");
        }
    }
    const double off = -1.0 / (num_classes - 1);
    double num = 0.0;
    double frob2 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double qij = q.entries(i, j);
            num += (labels[i] == labels[j] ? 1.0 : off) * qij;
            frob2 += qij * qij;
        }
    }
    if (frob2 <= 0.0) throw NumericError("alignment of an all-zero Gram");
    return num / (static_cast<double>(n) * std::sqrt(frob2));
}

double kernel_variance(const GramMatrix& q) {
    const Eigen::Index n = q.entries.rows();
    if (q.entries.cols() != n) {
        throw DimensionError("kernel variance needs a square Gram");
    }
    if (n < 2) throw ArgumentError("kernel variance needs at least two rows");
    const double count = static_cast<double>(n) * (n - 1);
    double mean = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i != j) mean += q.entries(i, j);
        }
    }
    mean /= count;
    double var = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i != j) {
                const double d = q.entries(i, j) - mean;
                var += d * d;
            }
        }
    }
    return var / count;
}

KernelMachine fit(const GramMatrix& q, std::span<const int> labels,
                  int num_classes, double lambda) {
    if (!q.square_training) {
        throw ArgumentError("fit needs a square training Gram");
    }
    const Eigen::Index n = q.entries.rows();
    if (static_cast<Eigen::Index>(labels.size()) != n) {
        throw DimensionError("label count does not match Gram size");
    }
    if (num_classes < 2) throw ArgumentError("fit needs at least 2 classes");
    if (lambda <= 0.0) throw RangeError("ridge lambda must be positive");

    // A fidelity Gram is positive semidefinite by construction; a violation
    // beyond tolerance means the kernel evaluation itself is broken.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q.entries,
                                                       Eigen::EigenvaluesOnly);
    const double min_eig = eig.eigenvalues().minCoeff();
    if (min_eig < kPsdTolerance) {
        throw NumericError("training Gram is not positive semidefinite: "
                           "min eigenvalue " + format_double(min_eig) +
                           " at n=" + std::to_string(n));
    }

    KernelMachine machine;
    machine.lambda = lambda;
    machine.num_classes = num_classes;
    machine.alpha.resize(n, num_classes);
    const Eigen::MatrixXd reg =
        q.entries + lambda * Eigen::MatrixXd::Identity(n, n);
    const Eigen::LDLT<Eigen::MatrixXd> solver(reg);
    if (solver.info() != Eigen::Success) {
        throw NumericError("ridge system factorization failed");
    }
    for (int c = 0; c < num_classes; ++c) {
        Eigen::VectorXd t(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            t(i) = labels[i] == c ? 1.0 : -1.0;
        }
        const Eigen::VectorXd a = solver.solve(t);
        const double residual = (reg * a - t).norm();
        if (residual > kFitResidualTolerance * std::max(1.0, t.norm())) {
            throw NumericError("ridge solve residual " + format_double(residual) +
                               " exceeds tolerance for class " + std::to_string(c));
        }
        machine.alpha.col(c) = a;
    }
    return machine;
}

std::vector<int> predict(const KernelMachine& machine, const GramMatrix& q_cross) {
    if (q_cross.entries.cols() != machine.alpha.rows()) {
        throw DimensionError("cross Gram columns do not match training size");
    }
    const Matrix scores = q_cross.entries * machine.alpha;
    std::vector<int> out(scores.rows());
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        int best = 0;
        for (int c = 1; c < machine.num_classes; ++c) {
            if (scores(i, c) > scores(i, best)) best = c;
        }
        out[i] = best;
    }
    return out;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size() || predicted.empty()) {
        throw DimensionError("accuracy needs equal non-empty label lists");
    }
    size_t hits = 0;
    for (size_t i = 0; i < predicted.size(); ++i) {
        if (predicted[i] == truth[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw DimensionError("correlation needs two equal series of length >= 2");
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) {
        throw NumericError("correlation undefined for a zero-variance series");
    }
    return sxy / std::sqrt(sxx * syy);
}

std::string theta_hash(std::span<const double> theta) {
    if (theta.empty()) return "empty";
    return hex64(fnv1a64(theta.data(), theta.size() * sizeof(double)));
}

void save_gram(const std::string& prefix, const GramMatrix& q,
               const GramMeta& meta) {
    std::ofstream bin(prefix + ".bin", std::ios::binary);
    if (!bin) throw ParseError("cannot write '" + prefix + ".bin'");
    bin.write(reinterpret_cast<const char*>(q.entries.data()),
              static_cast<std::streamsize>(sizeof(double) * q.entries.size()));

    json j;
    j["rows"] = q.rows();
    j["cols"] = q.cols();
    j["layout_hash"] = meta.layout_hash;
    j["theta_hash"] = meta.theta_hash;
    j["noise_p1"] = meta.noise_p1;
    j["noise_p2"] = meta.noise_p2;
    j["square_training"] = q.square_training;
    std::ofstream side(prefix + ".json");
    if (!side) throw ParseError("cannot write '" + prefix + ".json'");
    side << j.dump() << "\n";
}

LoadedGram load_gram(const std::string& prefix) {
    std::ifstream side(prefix + ".json");
    if (!side) throw ParseError("cannot open '" + prefix + ".json'");
    json j;
    try {
        side >> j;
        LoadedGram out;
        out.meta.rows = j.at("rows").get<int>();
        out.meta.cols = j.at("cols").get<int>();
        out.meta.layout_hash = j.at("layout_hash").get<std::string>();
        out.meta.theta_hash = j.at("theta_hash").get<std::string>();
        out.meta.noise_p1 = j.at("noise_p1").get<double>();
        out.meta.noise_p2 = j.at("noise_p2").get<double>();
        out.meta.square_training = j.at("square_training").get<bool>();

        std::ifstream bin(prefix + ".bin", std::ios::binary);
        if (!bin) throw ParseError("cannot open '" + prefix + ".bin'");
        out.gram.entries.resize(out.meta.rows, out.meta.cols);
        out.gram.square_training = out.meta.square_training;
        bin.read(reinterpret_cast<char*>(out.gram.entries.data()),
                 static_cast<std::streamsize>(sizeof(double) *
                                              out.gram.entries.size()));
        if (bin.gcount() !=
            static_cast<std::streamsize>(sizeof(double) * out.gram.entries.size())) {
            throw ParseError("'" + prefix + ".bin' is truncated");
        }
        return out;
    } catch (const json::exception& e) {
        throw ParseError(std::string("gram sidecar: ") + e.what());
    }
}

}  // namespace qks
