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

#include "qks/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qks/rng.hpp"

namespace qks {

using json = nlohmann::ordered_json;

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        // Trim surrounding whitespace.
        const auto a = cell.find_first_not_of(" \t\r");
        const auto b = cell.find_last_not_of(" \t\r");
        cells.push_back(a == std::string::npos ? "" : cell.substr(a, b - a + 1));
    }
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

bool parse_number(const std::string& s, double& out) {
    if (s.empty()) return false;
    size_t used = 0;
    try {
        out = std::stod(s, &used);
    } catch (...) {
        return false;
    }
    return used == s.size();
}

}  // namespace

TabularDataset load_csv(const std::string& path, const std::string& label_column) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");

    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        rows.push_back(split_line(line));
    }
    if (rows.empty()) throw ParseError("'" + path + "' holds no rows");

    // A first row with any non-numeric cell is a header.
    bool has_header = false;
    for (const std::string& cell : rows[0]) {
        double v;
        if (!parse_number(cell, v)) has_header = true;
    }

    int label_idx = -1;
    const bool numeric_column = !label_column.empty() &&
                                label_column.find_first_not_of("0123456789") ==
                                    std::string::npos;
    if (numeric_column) {
        label_idx = std::stoi(label_column);
    } else if (has_header) {
        for (size_t i = 0; i < rows[0].size(); ++i) {
            if (rows[0][i] == label_column) label_idx = static_cast<int>(i);
        }
        if (label_idx < 0) {
            throw ParseError("label column '" + label_column + "' not in header");
        }
    } else {
        throw ParseError("label column '" + label_column +
                         "' needs a header row");
    }

    const size_t first_data = has_header ? 1 : 0;
    if (first_data >= rows.size()) {
        throw ParseError("'" + path + "' has a header but no data rows");
    }
    const size_t width = rows[first_data].size();
    if (label_idx < 0 || static_cast<size_t>(label_idx) >= width) {
        throw ParseError("label column index " + std::to_string(label_idx) +
                         " outside row width " + std::to_string(width));
    }

    const size_t n = rows.size() - first_data;
    const size_t d = width - 1;
    if (d == 0) throw ParseError("'" + path + "' has no feature columns");
    TabularDataset out;
    out.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    out.labels.resize(n);

    for (size_t r = 0; r < n; ++r) {
        const auto& cells = rows[first_data + r];
        const size_t file_row = first_data + r + 1;  // 1-based, as in editors
        if (cells.size() != width) {
            throw ParseError("row " + std::to_string(file_row) + " has " +
                             std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(width));
        }
        size_t col = 0;
        for (size_t c = 0; c < width; ++c) {
            double v;
            if (!parse_number(cells[c], v)) {
                throw ParseError("row " + std::to_string(file_row) +
                                 ": non-numeric cell '" + cells[c] + "'");
            }
            if (std::isnan(v)) {
                throw ParseError("row " + std::to_string(file_row) +
                                 " contains NaN");
            }
            if (c == static_cast<size_t>(label_idx)) {
                if (v != std::floor(v) || v < 0) {
                    throw ParseError("row " + std::to_string(file_row) +
                                     ": label must be a non-negative integer");
                }
                out.labels[r] = static_cast<int>(v);
            } else {
                out.features(static_cast<Eigen::Index>(r),
                             static_cast<Eigen::Index>(col++)) = v;
            }
        }
    }
    out.num_classes =
        1 + *std::max_element(out.labels.begin(), out.labels.end());
    return out;
}

void save_csv(const TabularDataset& data, const std::string& path,
              const std::string& label_name) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    for (int c = 0; c < data.dim(); ++c) out << "f" << c << ",";
    out << label_name << "\n";
    for (int r = 0; r < data.n(); ++r) {
        for (int c = 0; c < data.dim(); ++c) {
            out << format_double(data.features(r, c)) << ",";
        }
        out << data.labels[r] << "\n";
    }
}

std::vector<int> equal_frequency_bins(std::span<const double> values, int bins) {
    const size_t n = values.size();
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    // Upper edge of bin e sits at the value quantile (e+1)/bins; ties share
    // the bin of their value, so duplicate-heavy columns collapse bins.
    std::vector<double> edges(bins);
    for (int e = 0; e < bins; ++e) {
        long pos = static_cast<long>((n * static_cast<size_t>(e + 1)) / bins) - 1;
        pos = std::clamp(pos, 0L, static_cast<long>(n) - 1);
        edges[e] = sorted[pos];
    }
    edges[bins - 1] = sorted[n - 1];
    std::vector<int> out(n);
    for (size_t i = 0; i < n; ++i) {
        const auto it = std::lower_bound(edges.begin(), edges.end(), values[i]);
        out[i] = static_cast<int>(it - edges.begin());
    }
    return out;
}

double mutual_information(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size() || a.empty()) {
        throw DimensionError("mutual information needs equal non-empty inputs");
    }
    const int ka = 1 + *std::max_element(a.begin(), a.end());
    const int kb = 1 + *std::max_element(b.begin(), b.end());
    std::vector<double> joint(static_cast<size_t>(ka) * kb, 0.0);
    std::vector<double> ma(ka, 0.0), mb(kb, 0.0);
    const double inv = 1.0 / static_cast<double>(a.size());
    for (size_t i = 0; i < a.size(); ++i) {
        joint[static_cast<size_t>(a[i]) * kb + b[i]] += inv;
        ma[a[i]] += inv;
        mb[b[i]] += inv;
    }
    double mi = 0.0;
    for (int i = 0; i < ka; ++i) {
        for (int j = 0; j < kb; ++j) {
            const double p = joint[static_cast<size_t>(i) * kb + j];
            if (p > 0.0) mi += p * std::log(p / (ma[i] * mb[j]));
        }
    }
    return mi;
}

namespace {

void record_output_range(FeatureSelector& sel, const Matrix& outputs) {
    sel.out_min = outputs.colwise().minCoeff();
    sel.out_max = outputs.colwise().maxCoeff();
}

Matrix transform_raw(const FeatureSelector& sel, const Matrix& features) {
    if (sel.method == FeatureSelector::Method::Mrmr) {
        Matrix out(features.rows(), static_cast<Eigen::Index>(sel.indices.size()));
        for (size_t j = 0; j < sel.indices.size(); ++j) {
            const int src = sel.indices[j];
            if (src < 0 || src >= features.cols()) {
                throw DimensionError("selector column " + std::to_string(src) +
                                     " outside input width");
            }
            out.col(static_cast<Eigen::Index>(j)) = features.col(src);
        }
        return out;
    }
    if (features.cols() != sel.projection.rows()) {
        throw DimensionError("selector expects " +
                             std::to_string(sel.projection.rows()) +
                             " input features");
    }
    return (features.rowwise() - sel.mean.transpose()) * sel.projection;
}

}  // namespace

FeatureSelector mrmr_select(const TabularDataset& train, int p, int bins) {
    const int d = train.dim();
    if (p < 1 || p > d) {
        throw RangeError("mrmr target dimension " + std::to_string(p) +
                         " outside [1, " + std::to_string(d) + "]");
    }
    if (bins < 2) throw RangeError("mrmr needs at least two bins");
    const int n = train.n();
    if (n < 2) throw ArgumentError("mrmr needs at least two rows");

    std::vector<std::vector<int>> binned(d);
#pragma omp parallel for schedule(static)
    for (int j = 0; j < d; ++j) {
        std::vector<double> col(n);
        for (int i = 0; i < n; ++i) col[i] = train.features(i, j);
        binned[j] = equal_frequency_bins(col, bins);
    }

    std::vector<double> relevance(d);
#pragma omp parallel for schedule(static)
    for (int j = 0; j < d; ++j) {
        relevance[j] = mutual_information(binned[j], train.labels);
    }

    std::vector<bool> taken(d, false);
    std::vector<int> picked;
    std::vector<double> redundancy_sum(d, 0.0);
    for (int step = 0; step < p; ++step) {
        int best = -1;
        double best_score = 0.0;
        for (int j = 0; j < d; ++j) {
            if (taken[j]) continue;
            const double score =
                picked.empty()
                    ? relevance[j]
                    : relevance[j] - redundancy_sum[j] /
                                         static_cast<double>(picked.size());
            // Strict comparison keeps ties at the lowest index.
            if (best < 0 || score > best_score) {
                best = j;
                best_score = score;
            }
        }
        taken[best] = true;
        picked.push_back(best);
#pragma omp parallel for schedule(static)
        for (int j = 0; j < d; ++j) {
            if (!taken[j]) {
                redundancy_sum[j] += mutual_information(binned[j], binned[best]);
            }
        }
    }

    FeatureSelector sel;
    sel.method = FeatureSelector::Method::Mrmr;
    sel.indices = picked;
    record_output_range(sel, transform_raw(sel, train.features));
    return sel;
}

FeatureSelector pca_reduce(const TabularDataset& train, int p) {
    const int d = train.dim();
    if (p < 1 || p > d) {
        throw RangeError("pca target dimension " + std::to_string(p) +
                         " outside [1, " + std::to_string(d) + "]");
    }
    if (train.n() < 2) throw ArgumentError("pca needs at least two rows");

    FeatureSelector sel;
    sel.method = FeatureSelector::Method::Pca;
    sel.mean = train.features.colwise().mean();
    const Matrix centered = train.features.rowwise() - sel.mean.transpose();
    const Eigen::MatrixXd cov =
        (centered.transpose() * centered) / static_cast<double>(train.n() - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) {
        throw NumericError("pca eigendecomposition failed");
    }
    // Eigen returns ascending eigenvalues; take the top p in descending
    // order and orient each component so its largest loading is positive.
    sel.projection.resize(d, p);
    for (int k = 0; k < p; ++k) {
        Eigen::VectorXd v = solver.eigenvectors().col(d - 1 - k);
        Eigen::Index imax;
        v.cwiseAbs().maxCoeff(&imax);
        if (v(imax) < 0) v = -v;
        sel.projection.col(k) = v;
    }
    record_output_range(sel, transform_raw(sel, train.features));
    return sel;
}

TabularDataset apply_selector(const FeatureSelector& sel,
                              const TabularDataset& data) {
    Matrix out = transform_raw(sel, data.features);
    const double hi = 2.0 * std::numbers::pi * (1.0 - kAngleMargin);
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
        const double lo = sel.out_min(c);
        const double span = sel.out_max(c) - lo;
        for (Eigen::Index r = 0; r < out.rows(); ++r) {
            double v = span > 0.0 ? (out(r, c) - lo) / span * hi : 0.0;
            out(r, c) = std::clamp(v, 0.0, hi);
        }
    }
    TabularDataset result;
    result.features = std::move(out);
    result.labels = data.labels;
    result.num_classes = data.num_classes;
    return result;
}

std::string FeatureSelector::to_json() const {
    json j;
    j["method"] = method == Method::Mrmr ? "mrmr" : "pca";
    if (method == Method::Mrmr) {
        j["indices"] = indices;
    } else {
        j["mean"] = std::vector<double>(mean.data(), mean.data() + mean.size());
        j["projection"] = json::array();
        for (Eigen::Index r = 0; r < projection.rows(); ++r) {
            std::vector<double> row(projection.cols());
            for (Eigen::Index c = 0; c < projection.cols(); ++c) {
                row[c] = projection(r, c);
            }
            j["projection"].push_back(row);
        }
    }
    j["out_min"] = std::vector<double>(out_min.data(), out_min.data() + out_min.size());
    j["out_max"] = std::vector<double>(out_max.data(), out_max.data() + out_max.size());
    return j.dump();
}

FeatureSelector FeatureSelector::from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        FeatureSelector sel;
        const auto method = j.at("method").get<std::string>();
        if (method == "mrmr") {
            sel.method = Method::Mrmr;
            sel.indices = j.at("indices").get<std::vector<int>>();
        } else if (method == "pca") {
            sel.method = Method::Pca;
            const auto mean = j.at("mean").get<std::vector<double>>();
            sel.mean = Eigen::Map<const Vector>(mean.data(),
                                                static_cast<Eigen::Index>(mean.size()));
            const auto& proj = j.at("projection");
            const auto rows = proj.size();
            if (rows == 0) throw ParseError("selector JSON: empty projection");
            const auto cols = proj.at(0).size();
            sel.projection.resize(static_cast<Eigen::Index>(rows),
                                  static_cast<Eigen::Index>(cols));
            for (size_t r = 0; r < rows; ++r) {
                const auto row = proj.at(r).get<std::vector<double>>();
                if (row.size() != cols) {
                    throw ParseError("selector JSON: ragged projection");
                }
                for (size_t c = 0; c < cols; ++c) {
                    sel.projection(static_cast<Eigen::Index>(r),
                                   static_cast<Eigen::Index>(c)) = row[c];
                }
            }
        } else {
            throw ParseError("selector JSON: unknown method '" + method + "'");
        }
        const auto lo = j.at("out_min").get<std::vector<double>>();
        const auto hi = j.at("out_max").get<std::vector<double>>();
        sel.out_min = Eigen::Map<const Vector>(lo.data(),
                                               static_cast<Eigen::Index>(lo.size()));
        sel.out_max = Eigen::Map<const Vector>(hi.data(),
                                               static_cast<Eigen::Index>(hi.size()));
        return sel;
    } catch (const json::exception& e) {
        throw ParseError(std::string("selector JSON: ") + e.what());
    }
}

SplitResult stratified_split(const TabularDataset& data, double fraction,
                             uint64_t seed) {
    if (fraction <= 0.0 || fraction >= 1.0) {
        throw RangeError("split fraction must lie in (0, 1)");
    }
    std::vector<std::vector<int>> by_class(data.num_classes);
    for (int i = 0; i < data.n(); ++i) by_class[data.labels[i]].push_back(i);

    SplitResult result;
    std::vector<char> in_train(data.n(), 0);
    Rng rng(seed);
    for (int c = 0; c < data.num_classes; ++c) {
        auto& members = by_class[c];
        if (members.empty()) continue;
        if (members.size() < 2) {
            result.warnings.push_back("class " + std::to_string(c) +
                                      " has a single member; kept in train");
            in_train[members[0]] = 1;
            continue;
        }
        rng.shuffle(members);
        const auto count = static_cast<long>(members.size());
        long take = std::lround(fraction * static_cast<double>(count));
        take = std::clamp(take, 1L, count - 1);
        for (long i = 0; i < take; ++i) in_train[members[i]] = 1;
    }

    auto build = [&](bool train) {
        TabularDataset part;
        std::vector<int> rows;
        for (int i = 0; i < data.n(); ++i) {
            if ((in_train[i] != 0) == train) rows.push_back(i);
        }
        part.features.resize(static_cast<Eigen::Index>(rows.size()), data.dim());
        part.labels.resize(rows.size());
        for (size_t i = 0; i < rows.size(); ++i) {
            part.features.row(static_cast<Eigen::Index>(i)) =
                data.features.row(rows[i]);
            part.labels[i] = data.labels[rows[i]];
        }
        part.num_classes = data.num_classes;
        return part;
    };
    result.train = build(true);
    result.test = build(false);
    return result;
}

}  // namespace qks
