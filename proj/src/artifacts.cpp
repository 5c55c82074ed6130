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

#include "qks/artifacts.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qks/errors.hpp"

namespace qks {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ArgumentError("cannot open " + path + " for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw ArgumentError("short write to " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArgumentError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string file_hash_hex(const std::string& path) {
    return hex64(fnv1a64(read_text_file(path)));
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    // artifact CSVs never quote; fields have no embedded commas
    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
        size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

std::vector<std::string> read_csv_rows(const std::string& path,
                                       const std::string& header) {
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line) || line != header)
        throw ParseError(path + ": expected header '" + header + "'");
    std::vector<std::string> rows;
    while (std::getline(in, line))
        if (!line.empty()) rows.push_back(line);
    return rows;
}

double parse_field_double(const std::string& field, const std::string& where) {
    try {
        size_t used = 0;
        double v = std::stod(field, &used);
        if (used != field.size()) throw ParseError("");
        return v;
    } catch (const std::exception&) {
        throw ParseError(where + ": bad numeric field '" + field + "'");
    }
}

Stage stage_from_name(const std::string& name) {
    if (name == "training_pool") return Stage::TrainingPool;
    if (name == "candidate") return Stage::Candidate;
    if (name == "finetuned") return Stage::Finetuned;
    throw ParseError("unknown stage name '" + name + "'");
}

ordered_json parse_json_file(const std::string& path) {
    try {
        return ordered_json::parse(read_text_file(path));
    } catch (const ArgumentError&) {
        throw;
    } catch (const std::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

}  // namespace

void save_config(const SearchConfig& config, const RunPaths& paths) {
    write_text_file(paths.config(), config.to_json() + "\n");
}

SearchConfig load_config(const RunPaths& paths) {
    return SearchConfig::from_json(read_text_file(paths.config()));
}

void save_pool(const PoolResult& pool, int num_qubits, const RunPaths& paths) {
    fs::create_directories(paths.pool_layouts_dir());
    std::set<std::string> written;
    for (const auto& layout : pool.layouts) {
        std::string h = layout_hash(layout);
        if (written.insert(h).second)
            write_text_file(paths.layout_file(h), layout_to_json(layout) + "\n");
    }
    std::ostringstream csv;
    csv << "index,layout_hash,target,image_bits\n";
    for (size_t i = 0; i < pool.samples.size(); ++i) {
        const auto& s = pool.samples[i];
        csv << i << "," << s.layout_hash << "," << format_double(s.target) << ",";
        for (double bit : s.image) csv << (bit != 0.0 ? '1' : '0');
        csv << "\n";
    }
    write_text_file(paths.labels_csv(), csv.str());

    ordered_json meta;
    meta["count"] = pool.layouts.size();
    meta["dropped"] = pool.dropped;
    meta["max_width"] = pool.max_width;
    meta["num_qubits"] = num_qubits;
    meta["notes"] = pool.notes;
    write_text_file(paths.pool_meta(), meta.dump() + "\n");
}

PoolResult load_pool(const RunPaths& paths) {
    ordered_json meta = parse_json_file(paths.pool_meta());
    PoolResult pool;
    try {
        pool.dropped = meta.at("dropped").get<int>();
        pool.max_width = meta.at("max_width").get<int>();
        pool.notes = meta.at("notes").get<std::vector<std::string>>();
    } catch (const std::exception& e) {
        throw ParseError(paths.pool_meta() + ": " + e.what());
    }

    std::map<std::string, CircuitLayout> by_hash;
    auto rows = read_csv_rows(paths.labels_csv(),
                              "index,layout_hash,target,image_bits");
    for (const auto& row : rows) {
        auto fields = split_csv_line(row);
        if (fields.size() != 4)
            throw ParseError(paths.labels_csv() + ": expected 4 fields, got " +
                             std::to_string(fields.size()));
        const std::string& h = fields[1];
        auto it = by_hash.find(h);
        if (it == by_hash.end()) {
            CircuitLayout layout =
                layout_from_json(read_text_file(paths.layout_file(h)));
            it = by_hash.emplace(h, std::move(layout)).first;
        }
        pool.layouts.push_back(it->second);

        PredictorSample sample;
        sample.layout_hash = h;
        sample.target = parse_field_double(fields[2], paths.labels_csv());
        sample.image.reserve(fields[3].size());
        for (char c : fields[3]) {
            if (c != '0' && c != '1')
                throw ParseError(paths.labels_csv() + ": bad image bit '" +
                                 std::string(1, c) + "'");
            sample.image.push_back(c == '1' ? 1.0 : 0.0);
        }
        pool.kta_values.push_back(sample.target / kKtaTargetScale);
        pool.samples.push_back(std::move(sample));
    }
    return pool;
}

void save_candidates(const std::vector<RankedCandidate>& ranked,
                     const std::vector<double>& kta_true,
                     const RunPaths& paths) {
    if (ranked.size() != kta_true.size())
        throw DimensionError("candidate count " + std::to_string(ranked.size()) +
                             " vs true-KTA count " +
                             std::to_string(kta_true.size()));
    fs::create_directories(paths.candidates_dir());
    std::ostringstream csv;
    csv << "rank,layout_hash,predicted_kta,kta_train\n";
    for (size_t i = 0; i < ranked.size(); ++i) {
        const auto& c = ranked[i];
        write_text_file(paths.candidate_file(c.hash),
                        layout_to_json(c.layout) + "\n");
        csv << i << "," << c.hash << "," << format_double(c.predicted_kta) << ","
            << format_double(kta_true[i]) << "\n";
    }
    write_text_file(paths.candidates_csv(), csv.str());
}

std::vector<CandidateRecord> load_candidates(const RunPaths& paths) {
    auto rows = read_csv_rows(paths.candidates_csv(),
                              "rank,layout_hash,predicted_kta,kta_train");
    std::vector<CandidateRecord> records;
    records.reserve(rows.size());
    for (const auto& row : rows) {
        auto fields = split_csv_line(row);
        if (fields.size() != 4)
            throw ParseError(paths.candidates_csv() + ": expected 4 fields, got " +
                             std::to_string(fields.size()));
        CandidateRecord rec;
        rec.hash = fields[1];
        rec.layout =
            layout_from_json(read_text_file(paths.candidate_file(rec.hash)));
        rec.predicted_kta =
            parse_field_double(fields[2], paths.candidates_csv());
        rec.kta_train = parse_field_double(fields[3], paths.candidates_csv());
        rec.stage = Stage::Candidate;
        records.push_back(std::move(rec));
    }
    return records;
}

void save_finetune(const std::vector<FinetuneTrace>& traces,
                   const std::vector<RankedCandidate>& ranked,
                   const RunPaths& paths) {
    fs::create_directories(paths.finetune_dir());
    for (const auto& t : traces) {
        ordered_json j;
        j["candidate"] = t.candidate;
        j["trial"] = t.trial;
        j["candidate_hash"] =
            t.candidate >= 0 && t.candidate < static_cast<int>(ranked.size())
                ? ranked[t.candidate].hash
                : "";
        j["m"] = t.m;
        j["positions"] = t.positions;
        j["theta_init"] = t.theta_init;
        j["theta_best"] = t.theta_best;
        j["kta_curve"] = t.kta_curve;
        j["kta_best"] = t.kta_best;
        j["skipped"] = t.skipped;
        write_text_file(paths.trace_file(t.candidate, t.trial), j.dump() + "\n");
    }
}

std::vector<FinetuneTrace> load_finetune(const RunPaths& paths) {
    std::vector<FinetuneTrace> traces;
    if (!fs::is_directory(paths.finetune_dir())) return traces;
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(paths.finetune_dir()))
        if (entry.is_regular_file() &&
            entry.path().filename() != "records.json")
            files.push_back(entry.path().string());
    for (const auto& file : files) {
        ordered_json j = parse_json_file(file);
        FinetuneTrace t;
        try {
            t.candidate = j.at("candidate").get<int>();
            t.trial = j.at("trial").get<int>();
            t.m = j.at("m").get<int>();
            t.positions = j.at("positions").get<std::vector<int>>();
            t.theta_init = j.at("theta_init").get<std::vector<double>>();
            t.theta_best = j.at("theta_best").get<std::vector<double>>();
            t.kta_curve = j.at("kta_curve").get<std::vector<double>>();
            t.kta_best = j.at("kta_best").get<double>();
            t.skipped = j.at("skipped").get<bool>();
        } catch (const std::exception& e) {
            throw ParseError(file + ": " + e.what());
        }
        traces.push_back(std::move(t));
    }
    // directory iteration order is unspecified
    std::sort(traces.begin(), traces.end(),
              [](const FinetuneTrace& a, const FinetuneTrace& b) {
                  return a.candidate != b.candidate ? a.candidate < b.candidate
                                                    : a.trial < b.trial;
              });
    return traces;
}

void save_report(const std::vector<CandidateRecord>& records, size_t chosen,
                 const RunPaths& paths) {
    std::ostringstream csv;
    csv << "stage,layout_hash,predicted_kta,kta_train,train_accuracy,"
           "test_accuracy,chosen\n";
    for (size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        csv << stage_name(r.stage) << "," << r.hash << ",";
        if (r.predicted_kta) csv << format_double(*r.predicted_kta);
        csv << "," << format_double(r.kta_train) << ","
            << format_double(r.train_accuracy) << ","
            << format_double(r.test_accuracy) << "," << (i == chosen ? 1 : 0)
            << "\n";
    }
    write_text_file(paths.report_csv(), csv.str());
}

namespace {

ordered_json record_to_json(const CandidateRecord& record) {
    ordered_json j;
    j["layout_hash"] = record.hash;
    j["stage"] = stage_name(record.stage);
    j["theta"] = record.theta;
    j["kta_train"] = record.kta_train;
    if (record.predicted_kta) j["predicted_kta"] = *record.predicted_kta;
    j["train_accuracy"] = record.train_accuracy;
    j["test_accuracy"] = record.test_accuracy;
    j["layout"] = ordered_json::parse(layout_to_json(record.layout));
    return j;
}

CandidateRecord record_from_json(const ordered_json& j,
                                 const std::string& where) {
    CandidateRecord rec;
    try {
        rec.hash = j.at("layout_hash").get<std::string>();
        rec.stage = stage_from_name(j.at("stage").get<std::string>());
        rec.theta = j.at("theta").get<std::vector<double>>();
        rec.kta_train = j.at("kta_train").get<double>();
        if (j.contains("predicted_kta"))
            rec.predicted_kta = j.at("predicted_kta").get<double>();
        rec.train_accuracy = j.at("train_accuracy").get<double>();
        rec.test_accuracy = j.at("test_accuracy").get<double>();
        rec.layout = layout_from_json(j.at("layout").dump());
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception& e) {
        throw ParseError(where + ": " + e.what());
    }
    return rec;
}

}  // namespace

void save_chosen(const CandidateRecord& record, const RunPaths& paths) {
    write_text_file(paths.chosen_json(), record_to_json(record).dump() + "\n");
}

CandidateRecord load_chosen(const RunPaths& paths) {
    return record_from_json(parse_json_file(paths.chosen_json()),
                            paths.chosen_json());
}

void save_finetuned_records(const std::vector<CandidateRecord>& records,
                            const RunPaths& paths) {
    fs::create_directories(paths.finetune_dir());
    ordered_json j = ordered_json::array();
    for (const auto& rec : records) j.push_back(record_to_json(rec));
    write_text_file(paths.finetune_dir() + "/records.json", j.dump() + "\n");
}

std::vector<CandidateRecord> load_finetuned_records(const RunPaths& paths) {
    const std::string path = paths.finetune_dir() + "/records.json";
    ordered_json j = parse_json_file(path);
    if (!j.is_array()) throw ParseError(path + ": expected a JSON array");
    std::vector<CandidateRecord> records;
    records.reserve(j.size());
    for (const auto& item : j) records.push_back(record_from_json(item, path));
    return records;
}

namespace {

std::string run_hash_of(const std::string& tool_version, uint64_t seed,
                        int max_width, const std::string& config_json,
                        const std::vector<ManifestEntry>& artifacts) {
    std::ostringstream acc;
    acc << "qksearch\n"
        << tool_version << "\n"
        << seed << "\n"
        << max_width << "\n"
        << config_json << "\n";
    for (const auto& a : artifacts) acc << a.path << "=" << a.fnv64 << "\n";
    return hex64(fnv1a64(acc.str()));
}

std::vector<ManifestEntry> scan_artifacts(const RunPaths& paths) {
    std::vector<ManifestEntry> artifacts;
    for (const auto& entry : fs::recursive_directory_iterator(paths.root)) {
        if (!entry.is_regular_file()) continue;
        std::string rel =
            fs::relative(entry.path(), fs::path(paths.root)).generic_string();
        if (rel == "manifest.json") continue;
        artifacts.push_back({rel, file_hash_hex(entry.path().string())});
    }
    std::sort(artifacts.begin(), artifacts.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) {
                  return a.path < b.path;
              });
    return artifacts;
}

}  // namespace

RunManifest write_manifest(const SearchConfig& config, int max_width,
                           const std::vector<StageTiming>& timings,
                           const RunPaths& paths) {
    RunManifest m;
    m.tool_version = kToolVersion;
    m.seed = config.seed;
    m.max_width = max_width;
    m.config_json = config.to_json();
    m.stages = timings;
    m.artifacts = scan_artifacts(paths);
    m.run_hash =
        run_hash_of(m.tool_version, m.seed, m.max_width, m.config_json, m.artifacts);

    ordered_json j;
    j["tool_version"] = m.tool_version;
    j["seed"] = m.seed;
    j["max_width"] = m.max_width;
    j["config"] = ordered_json::parse(m.config_json);
    j["stages"] = ordered_json::array();
    for (const auto& s : m.stages)
        j["stages"].push_back({{"name", s.name}, {"seconds", s.seconds}});
    j["artifacts"] = ordered_json::array();
    for (const auto& a : m.artifacts)
        j["artifacts"].push_back({{"path", a.path}, {"fnv64", a.fnv64}});
    j["run_hash"] = m.run_hash;
    write_text_file(paths.manifest(), j.dump(2) + "\n");
    return m;
}

RunManifest load_manifest(const RunPaths& paths) {
    ordered_json j = parse_json_file(paths.manifest());
    RunManifest m;
    try {
        m.tool_version = j.at("tool_version").get<std::string>();
        m.seed = j.at("seed").get<uint64_t>();
        m.max_width = j.at("max_width").get<int>();
        m.config_json = j.at("config").dump();
        for (const auto& s : j.at("stages"))
            m.stages.push_back({s.at("name").get<std::string>(),
                                s.at("seconds").get<double>()});
        for (const auto& a : j.at("artifacts"))
            m.artifacts.push_back({a.at("path").get<std::string>(),
                                   a.at("fnv64").get<std::string>()});
        m.run_hash = j.at("run_hash").get<std::string>();
    } catch (const std::exception& e) {
        throw ParseError(paths.manifest() + ": " + e.what());
    }
    return m;
}

void verify_manifest(const RunPaths& paths) {
    RunManifest m = load_manifest(paths);
    for (const auto& a : m.artifacts) {
        std::string full = paths.root + "/" + a.path;
        if (!fs::is_regular_file(full))
            throw ParseError("manifest artifact missing: " + a.path);
        std::string actual = file_hash_hex(full);
        if (actual != a.fnv64)
            throw ParseError("hash mismatch for " + a.path + ": manifest " +
                             a.fnv64 + ", file " + actual);
    }
    std::string expected = run_hash_of(m.tool_version, m.seed, m.max_width,
                                       m.config_json, m.artifacts);
    if (expected != m.run_hash)
        throw ParseError("manifest run_hash mismatch: recorded " + m.run_hash +
                         ", recomputed " + expected);
}

RunManifest persist_search(const SearchConfig& config,
                           const SearchResult& result,
                           const std::string& out_dir) {
    RunPaths paths(out_dir);
    fs::create_directories(paths.root);
    save_config(config, paths);

    // dropped layouts leave their file behind too; only labels.csv decides
    // pool membership
    fs::create_directories(paths.pool_layouts_dir());
    std::set<std::string> written;
    for (const auto& layout : sample_pool(config)) {
        std::string h = layout_hash(layout);
        if (written.insert(h).second)
            write_text_file(paths.layout_file(h), layout_to_json(layout) + "\n");
    }
    save_pool(result.pool, config.n, paths);
    save_predictor(result.predictor, paths.predictor_ckpt());

    std::vector<double> kta_true;
    std::vector<CandidateRecord> finetuned;
    for (const auto& r : result.records) {
        if (r.stage == Stage::Candidate) kta_true.push_back(r.kta_train);
        if (r.stage == Stage::Finetuned) finetuned.push_back(r);
    }
    save_candidates(result.ranked, kta_true, paths);

    save_finetune(result.traces, result.ranked, paths);
    save_finetuned_records(finetuned, paths);
    save_report(result.records, result.chosen, paths);
    if (result.chosen < result.records.size())
        save_chosen(result.records[result.chosen], paths);
    return write_manifest(config, result.pool.max_width, result.timings, paths);
}

}  // namespace qks
