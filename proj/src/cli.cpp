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

#include "qks/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qks/artifacts.hpp"
#include "qks/baselines.hpp"
#include "qks/errors.hpp"
#include "qks/pipeline.hpp"

namespace qks::cli {

namespace fs = std::filesystem;

namespace {

constexpr uint64_t kSeedKv = 0x6b76;  // "kv"

/// Usage problems found after flag parsing (missing dataset and the like);
/// mapped to exit code 1.
struct UsageFailure {
    std::string message;
};

/// Existing artifact without --force; mapped to exit code 2.
struct Refusal {
    std::string path;
};

void diag(const std::string& level, const std::string& message) {
    nlohmann::ordered_json j;
    j["level"] = level;
    j["message"] = message;
    std::cerr << j.dump() << "\n";
}

void warn_all(const std::vector<std::string>& messages) {
    for (const auto& m : messages) diag("warn", m);
}

/// Config assembled from an optional JSON file plus explicit flags; flags
/// win because their overrides apply after the file loads.
struct ConfigCli {
    std::string config_path;
    std::vector<std::function<void(SearchConfig&)>> overrides;

    SearchConfig resolve() const {
        SearchConfig cfg;
        if (!config_path.empty())
            cfg = SearchConfig::from_json(read_text_file(config_path));
        for (const auto& f : overrides) f(cfg);
        cfg.validate();
        return cfg;
    }
};

struct CommandState {
    ConfigCli cc;
    std::string out;
    bool force = false;
    // command-specific extras
    std::vector<double> gamma_grid = {1, 2, 3, 4, 5};
    std::vector<int> p_list;
    int trials = 5;
};

using StatePtr = std::shared_ptr<CommandState>;

template <typename T>
CLI::Option* add_override(CLI::App* cmd, StatePtr st, const std::string& name,
                          T SearchConfig::*field, const std::string& help) {
    return cmd->add_option_function<T>(
        name,
        [st, field](const T& v) {
            st->cc.overrides.push_back(
                [field, v](SearchConfig& c) { c.*field = v; });
        },
        help);
}

void add_config_flags(CLI::App* cmd, StatePtr st) {
    cmd->add_option("--config", st->cc.config_path,
                    "JSON config file with flat keys; explicit flags override "
                    "its values")
        ->check(CLI::ExistingFile);
    add_override<int>(cmd, st, "--n", &SearchConfig::n, "qubit count");
    add_override<std::vector<int>>(cmd, st, "--l0", &SearchConfig::l0_list,
                                   "encoding layer counts to cycle through")
        ->delimiter(',');
    add_override<int>(cmd, st, "--p", &SearchConfig::p,
                      "feature count used by the circuits");
    add_override<std::string>(
        cmd, st, "--strategy", &SearchConfig::strategy,
        "feature placement: auto, sequential, elementwise, modular, random, "
        "random_fill");
    add_override<int>(cmd, st, "--pool-size", &SearchConfig::pool_size,
                      "labeled training pool size");
    add_override<int>(cmd, st, "--candidate-pool-size",
                      &SearchConfig::candidate_pool_size,
                      "scored candidate pool size when sampling");
    cmd->add_flag_function(
        "--exhaustive,!--no-exhaustive",
        [st](int64_t n) {
            if (n == 0) return;
            const bool v = n > 0;
            st->cc.overrides.push_back(
                [v](SearchConfig& c) { c.exhaustive_candidates = v; });
        },
        "score the whole block space instead of a sampled candidate pool");
    add_override<int>(cmd, st, "--top-k", &SearchConfig::top_k,
                      "candidates kept for fine-tuning");
    add_override<int>(cmd, st, "--theta-trials", &SearchConfig::theta_trials,
                      "gate promotion draws per candidate");
    add_override<int>(cmd, st, "--finetune-epochs",
                      &SearchConfig::finetune_epochs,
                      "ascent steps per fine-tune trial");
    add_override<double>(cmd, st, "--finetune-lr", &SearchConfig::finetune_lr,
                         "fine-tune step size");
    add_override<double>(cmd, st, "--lambda", &SearchConfig::lambda,
                         "ridge regulariser for the kernel machine");
    add_override<int>(cmd, st, "--predictor-epochs",
                      &SearchConfig::predictor_epochs,
                      "surrogate training epochs");
    add_override<double>(cmd, st, "--predictor-lr",
                         &SearchConfig::predictor_lr,
                         "surrogate learning rate");
    add_override<int>(cmd, st, "--predictor-batch",
                      &SearchConfig::predictor_batch,
                      "surrogate mini-batch size");
    add_override<uint64_t>(cmd, st, "--seed", &SearchConfig::seed,
                           "master seed; every stage derives from it");
    add_override<double>(cmd, st, "--noise-p1", &SearchConfig::noise_p1,
                         "single-qubit depolarizing probability");
    add_override<double>(cmd, st, "--noise-p2", &SearchConfig::noise_p2,
                         "two-qubit depolarizing probability");
    add_override<int>(cmd, st, "--workers", &SearchConfig::workers,
                      "parallel width for labeling and fine-tuning");
    add_override<std::string>(cmd, st, "--data", &SearchConfig::data_csv,
                              "dataset CSV, split by --train-fraction");
    add_override<std::string>(cmd, st, "--train", &SearchConfig::train_csv,
                              "pre-split training CSV");
    add_override<std::string>(cmd, st, "--test", &SearchConfig::test_csv,
                              "pre-split test CSV");
    add_override<std::string>(cmd, st, "--label-column",
                              &SearchConfig::label_column,
                              "label column name or 0-based index");
    add_override<double>(cmd, st, "--train-fraction",
                         &SearchConfig::train_fraction,
                         "per-class share of --data that lands in train");
    add_override<std::string>(cmd, st, "--selector",
                              &SearchConfig::selector_method,
                              "feature selector: none, mrmr or pca");
    add_override<int>(cmd, st, "--selector-p", &SearchConfig::selector_p,
                      "selector output width; 0 means use --p");
    add_override<int>(cmd, st, "--selector-bins", &SearchConfig::selector_bins,
                      "histogram bins for the mutual-information scores");
}

void add_out_flags(CLI::App* cmd, StatePtr st, bool required,
                   const std::string& help) {
    auto* opt = cmd->add_option("--out", st->out, help);
    if (required) opt->required();
    cmd->add_flag("--force", st->force,
                  "overwrite artifacts this command would otherwise refuse "
                  "to touch");
}

/// Removes `path` when forcing, refuses when it already exists otherwise.
void claim(const std::string& path, bool force) {
    if (!fs::exists(path)) return;
    if (!force) throw Refusal{path};
    fs::remove_all(path);
}

void require_dataset(const SearchConfig& cfg) {
    if (!cfg.data_csv.empty()) {
        if (!fs::is_regular_file(cfg.data_csv))
            throw UsageFailure{"--data: no such file: " + cfg.data_csv};
        return;
    }
    if (cfg.train_csv.empty() || cfg.test_csv.empty())
        throw UsageFailure{
            "missing dataset: pass --data, or both --train and --test"};
    if (!fs::is_regular_file(cfg.train_csv))
        throw UsageFailure{"--train: no such file: " + cfg.train_csv};
    if (!fs::is_regular_file(cfg.test_csv))
        throw UsageFailure{"--test: no such file: " + cfg.test_csv};
}

/// Stage commands sharing a run directory must agree on the configuration,
/// otherwise the derived seeds would silently drift between stages.
void ensure_config(const SearchConfig& cfg, const RunPaths& paths,
                   bool force) {
    fs::create_directories(paths.root);
    const std::string text = cfg.to_json() + "\n";
    if (fs::exists(paths.config()) && !force) {
        if (read_text_file(paths.config()) == text) return;
        throw Error(paths.config() +
                    " was written with a different configuration; rerun with "
                    "matching flags or pass --force to replace it");
    }
    write_text_file(paths.config(), text);
}

void require_artifact(const std::string& path, const std::string& producer) {
    if (!fs::exists(path))
        throw Error("missing " + path + "; run '" + producer +
                    "' into this run directory first");
}

TabularDataset load_prepared(const RunPaths& paths, bool train_side) {
    const std::string path = train_side ? paths.data_train() : paths.data_test();
    require_artifact(path, "select-features");
    return load_csv(path, "label");
}

void write_prepared(const SearchConfig& cfg, const RunPaths& paths) {
    require_dataset(cfg);
    PreparedData prepared = prepare_data(cfg);
    warn_all(prepared.warnings);
    fs::create_directories(paths.data_dir());
    save_csv(prepared.train, paths.data_train());
    save_csv(prepared.test, paths.data_test());
    if (prepared.selector)
        write_text_file(paths.selector_json(),
                        prepared.selector->to_json() + "\n");
    std::cout << "prepared " << prepared.train.n() << " train and "
              << prepared.test.n() << " test rows with "
              << prepared.train.dim() << " features\n";
}

void write_sampled_layouts(const std::vector<CircuitLayout>& layouts,
                           const RunPaths& paths) {
    fs::create_directories(paths.pool_layouts_dir());
    std::set<std::string> written;
    for (const auto& layout : layouts) {
        std::string h = layout_hash(layout);
        if (written.insert(h).second)
            write_text_file(paths.layout_file(h),
                            layout_to_json(layout) + "\n");
    }
}

void run_select_features(const CommandState& st) {
    SearchConfig cfg = st.cc.resolve();
    RunPaths paths(st.out);
    ensure_config(cfg, paths, st.force);
    claim(paths.data_dir(), st.force);
    write_prepared(cfg, paths);
}

void run_sample_pool(const CommandState& st) {
    SearchConfig cfg = st.cc.resolve();
    RunPaths paths(st.out);
    ensure_config(cfg, paths, st.force);
    claim(paths.pool_layouts_dir(), st.force);
    const auto layouts = sample_pool(cfg);
    write_sampled_layouts(layouts, paths);
    std::set<std::string> distinct;
    for (const auto& l : layouts) distinct.insert(layout_hash(l));
    std::cout << "sampled " << layouts.size() << " layouts ("
              << distinct.size() << " distinct)\n";
}

void run_label_pool(const CommandState& st) {
    SearchConfig cfg = st.cc.resolve();
    set_workers(cfg.workers);
    RunPaths paths(st.out);
    ensure_config(cfg, paths, st.force);
    claim(paths.labels_csv(), st.force);
    claim(paths.pool_meta(), st.force);
    const TabularDataset train = load_prepared(paths, true);
    const auto layouts = sample_pool(cfg);
    PoolResult pool = label_pool(layouts, train, cfg.noise());
    if (pool.samples.empty()) throw Error("no layout labeled cleanly");
    warn_all(pool.notes);
    write_sampled_layouts(layouts, paths);
    save_pool(pool, cfg.n, paths);
    std::cout << "labeled " << pool.layouts.size() << " of " << layouts.size()
              << " layouts, image width " << pool.max_width << "\n";
}

void run_train_predictor(const CommandState& st) {
    SearchConfig cfg = st.cc.resolve();
    set_workers(cfg.workers);
    RunPaths paths(st.out);
    ensure_config(cfg, paths, st.force);
    claim(paths.predictor_ckpt(), st.force);
    require_artifact(paths.labels_csv(), "label-pool");
    PoolResult pool = load_pool(paths);
    const int l_max = cfg.n * pool.max_width / 2;
    PredictorModel model =
        init_model(l_max, derive_seed(cfg.seed, {kSeedPredictor, 0}));
    TrainOptions opt;
    opt.epochs = cfg.predictor_epochs;
    opt.learning_rate = cfg.predictor_lr;
    opt.batch_size = cfg.predictor_batch;
    opt.seed = derive_seed(cfg.seed, {kSeedPredictor, 1});
    train_predictor(model, pool.samples, opt);
    save_predictor(model, paths.predictor_ckpt());
    std::cout << "trained surrogate on " << pool.samples.size()
              << " samples, final epoch loss "
              << format_double(model.loss_curve.back()) << "\n";
}

void run_rank(const CommandState& st) {
    SearchConfig cfg = st.cc.resolve();
    set_workers(cfg.workers);
    RunPaths paths(st.out);
    ensure_config(cfg, paths, st.force);
    claim(paths.candidates_csv(), st.force);
    if (st.force) claim(paths.candidates_dir(), true);
    require_artifact(paths.predictor_ckpt(), "train-predictor");
    require_artifact(paths.pool_meta(), "label-pool");
    const PredictorModel model = load_predictor(paths.predictor_ckpt());
    const PoolResult pool = load_pool(paths);
    const TabularDataset train = load_prepared(paths, true);

    std::vector<std::string> notes;
    const auto ranked = rank_and_select(model, cfg, pool.max_width, &notes);
    warn_all(notes);

    const auto noise = cfg.noise();
    std::vector<double> kta_true;
    kta_true.reserve(ranked.size());
    for (const auto& cand : ranked) {
        const GramMatrix q =
            gram(cand.layout, {}, train.features, nullptr, noise);
        kta_true.push_back(kta(q, train.labels, train.num_classes));
    }
    save_candidates(ranked, kta_true, paths);
    std::cout << "kept top " << ranked.size() << " candidates\n";
}

void run_finetune(const CommandState& st) {
    SearchConfig cfg = st.cc.resolve();
    set_workers(cfg.workers);
    RunPaths paths(st.out);
    ensure_config(cfg, paths, st.force);
    claim(paths.finetune_dir(), st.force);
    require_artifact(paths.candidates_csv(), "rank");
    const TabularDataset train = load_prepared(paths, true);
    const TabularDataset test = load_prepared(paths, false);

    std::vector<RankedCandidate> ranked;
    for (const auto& rec : load_candidates(paths))
        ranked.push_back(
            {rec.layout, rec.hash, rec.predicted_kta.value_or(0.0)});

    std::vector<FinetuneTrace> traces;
    std::vector<std::string> notes;
    const auto records =
        finetune_candidates(ranked, train, test, cfg, &traces, &notes);
    warn_all(notes);
    save_finetune(traces, ranked, paths);
    save_finetuned_records(records, paths);
    std::cout << "fine-tuned " << ranked.size() << " candidates over "
              << cfg.theta_trials << " trials each\n";
}

void run_evaluate(const CommandState& st) {
    const auto started = std::chrono::steady_clock::now();
    SearchConfig cfg = st.cc.resolve();
    set_workers(cfg.workers);
    RunPaths paths(st.out);
    ensure_config(cfg, paths, st.force);
    claim(paths.report_csv(), st.force);
    if (st.force) {
        claim(paths.chosen_json(), true);
        claim(paths.manifest(), true);
    }
    require_artifact(paths.labels_csv(), "label-pool");
    require_artifact(paths.candidates_csv(), "rank");
    require_artifact(paths.finetune_dir() + "/records.json", "finetune");
    const PoolResult pool = load_pool(paths);
    const auto candidates = load_candidates(paths);
    const auto finetuned = load_finetuned_records(paths);
    const TabularDataset train = load_prepared(paths, true);
    const TabularDataset test = load_prepared(paths, false);

    std::vector<CandidateRecord> records;
    for (const auto& layout : pool.layouts)
        records.push_back(evaluate_candidate(layout, {}, train, test, cfg,
                                             Stage::TrainingPool));
    for (const auto& cand : candidates) {
        CandidateRecord rec = evaluate_candidate(cand.layout, {}, train, test,
                                                 cfg, Stage::Candidate);
        rec.predicted_kta = cand.predicted_kta;
        records.push_back(std::move(rec));
    }
    const size_t offset = records.size();
    records.insert(records.end(), finetuned.begin(), finetuned.end());
    if (records.size() == offset)
        throw Error("no fine-tuned records to choose from");
    size_t chosen = offset;
    for (size_t i = offset; i < records.size(); ++i)
        if (records[i].test_accuracy > records[chosen].test_accuracy)
            chosen = i;

    save_report(records, chosen, paths);
    save_chosen(records[chosen], paths);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      started)
            .count();
    write_manifest(cfg, pool.max_width, {{"evaluate", seconds}}, paths);
    std::cout << "chosen " << records[chosen].hash << " with test accuracy "
              << format_double(records[chosen].test_accuracy) << "\n";
}

void run_search(const CommandState& st) {
    SearchConfig cfg = st.cc.resolve();
    RunPaths paths(st.out);
    if (fs::exists(paths.root) && !fs::is_empty(paths.root)) {
        if (!st.force) throw Refusal{paths.root};
        fs::remove_all(paths.root);
    }
    fs::create_directories(paths.root);
    ensure_config(cfg, paths, true);
    write_prepared(cfg, paths);

    // reload the persisted splits so a search run and the stage-by-stage
    // commands consume byte-identical inputs
    const TabularDataset train = load_prepared(paths, true);
    const TabularDataset test = load_prepared(paths, false);
    SearchResult result = run_full_search(cfg, train, test);
    warn_all(result.notes);
    RunManifest manifest = persist_search(cfg, result, st.out);
    const CandidateRecord& chosen = result.records[result.chosen];
    std::cout << "chosen " << chosen.hash << " with test accuracy "
              << format_double(chosen.test_accuracy) << "\nrun hash "
              << manifest.run_hash << "\n";
}

void emit_table(const std::string& csv, const std::string& out, bool force) {
    if (out.empty()) {
        std::cout << csv;
        return;
    }
    claim(out, force);
    if (fs::path(out).has_parent_path())
        fs::create_directories(fs::path(out).parent_path());
    write_text_file(out, csv);
    std::cout << "wrote " << out << "\n";
}

void run_baseline_rbfk(const CommandState& st) {
    SearchConfig cfg = st.cc.resolve();
    require_dataset(cfg);
    if (st.gamma_grid.empty())
        throw UsageFailure{"--gamma-grid needs at least one value"};
    PreparedData prepared = prepare_data(cfg);
    warn_all(prepared.warnings);
    RbfkResult res =
        rbfk_sweep(prepared.train, prepared.test, st.gamma_grid, cfg.lambda);
    std::ostringstream csv;
    csv << "scale,gamma,train_accuracy,test_accuracy,best\n";
    for (size_t i = 0; i < res.entries.size(); ++i) {
        const auto& e = res.entries[i];
        csv << format_double(e.scale) << "," << format_double(e.gamma) << ","
            << format_double(e.train_accuracy) << ","
            << format_double(e.test_accuracy) << "," << (i == res.best ? 1 : 0)
            << "\n";
    }
    emit_table(csv.str(), st.out, st.force);
}

void run_baseline_heak(const CommandState& st) {
    SearchConfig cfg = st.cc.resolve();
    require_dataset(cfg);
    PreparedData prepared = prepare_data(cfg);
    warn_all(prepared.warnings);
    const CircuitLayout layout =
        heak_layout(cfg.n, prepared.train.dim(), cfg.l0_list.front());
    const CandidateRecord rec = evaluate_candidate(
        layout, {}, prepared.train, prepared.test, cfg, Stage::Candidate);
    std::ostringstream csv;
    csv << "kernel,kta_train,train_accuracy,test_accuracy\n"
        << "heak," << format_double(rec.kta_train) << ","
        << format_double(rec.train_accuracy) << ","
        << format_double(rec.test_accuracy) << "\n";
    emit_table(csv.str(), st.out, st.force);
}

void run_baseline_tek(const CommandState& st) {
    SearchConfig cfg = st.cc.resolve();
    set_workers(cfg.workers);
    require_dataset(cfg);
    PreparedData prepared = prepare_data(cfg);
    warn_all(prepared.warnings);
    const TekTraining trained =
        train_tek(prepared.train, cfg.n, cfg.l0_list.front(),
                  cfg.finetune_epochs, cfg.finetune_lr, cfg.seed, cfg.noise());
    const CandidateRecord rec =
        evaluate_candidate(trained.layout, trained.gamma_best, prepared.train,
                           prepared.test, cfg, Stage::Candidate);
    std::ostringstream csv;
    csv << "kernel,kta_init,kta_train,train_accuracy,test_accuracy\n"
        << "tek," << format_double(trained.kta_curve.front()) << ","
        << format_double(rec.kta_train) << ","
        << format_double(rec.train_accuracy) << ","
        << format_double(rec.test_accuracy) << "\n";
    emit_table(csv.str(), st.out, st.force);
}

void run_diagnose_kv(const CommandState& st) {
    SearchConfig cfg = st.cc.resolve();
    set_workers(cfg.workers);
    if (cfg.data_csv.empty())
        throw UsageFailure{"--data is required for diagnose-kv"};
    if (!fs::is_regular_file(cfg.data_csv))
        throw UsageFailure{"--data: no such file: " + cfg.data_csv};
    if (st.p_list.empty())
        throw UsageFailure{"--p-list needs at least one value"};
    if (st.trials < 1) throw UsageFailure{"--trials must be at least 1"};

    const TabularDataset data = load_csv(cfg.data_csv, cfg.label_column);
    for (int p : st.p_list)
        if (p < 1 || p > data.dim())
            throw UsageFailure{"--p-list: " + std::to_string(p) +
                               " is outside 1.." + std::to_string(data.dim())};

    const auto noise = cfg.noise();
    std::ostringstream csv;
    csv << "l0,p,mean_kv,std_kv,trials\n";
    for (size_t li = 0; li < cfg.l0_list.size(); ++li) {
        const int l0 = cfg.l0_list[li];
        for (size_t pi = 0; pi < st.p_list.size(); ++pi) {
            const int p = st.p_list[pi];
            SearchConfig cell = cfg;
            cell.p = p;
            const EncodingStrategy strategy = resolve_strategy(cell);
            const Matrix sub = data.features.leftCols(p);
            double sum = 0.0, sum_sq = 0.0;
            for (int t = 0; t < st.trials; ++t) {
                Rng rng(derive_seed(cfg.seed, {kSeedKv, li, pi,
                                               static_cast<uint64_t>(t)}));
                const CircuitLayout layout =
                    sample_layout(cfg.n, l0, p, strategy, rng);
                const double kv =
                    kernel_variance(gram(layout, {}, sub, nullptr, noise));
                sum += kv;
                sum_sq += kv * kv;
            }
            const double mean = sum / st.trials;
            const double var = std::max(0.0, sum_sq / st.trials - mean * mean);
            csv << l0 << "," << p << "," << format_double(mean) << ","
                << format_double(std::sqrt(var)) << "," << st.trials << "\n";
        }
    }
    emit_table(csv.str(), st.out, st.force);
}

}  // namespace

int dispatch(int argc, char** argv) {
    CLI::App app{"qksearch: automatic search for data-adapted quantum "
                 "feature maps"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    auto stage = [&app](const std::string& name, const std::string& help,
                        void (*fn)(const CommandState&)) {
        auto st = std::make_shared<CommandState>();
        CLI::App* cmd = app.add_subcommand(name, help);
        add_config_flags(cmd, st);
        add_out_flags(cmd, st, true, "run directory");
        cmd->callback([st, fn] { fn(*st); });
        return cmd;
    };

    stage("select-features",
          "prepare the train/test splits and write them into the run "
          "directory",
          &run_select_features);
    stage("sample-pool", "materialise the sampled layout pool",
          &run_sample_pool);
    stage("label-pool", "compute alignment targets for the sampled pool",
          &run_label_pool);
    stage("train-predictor", "fit the alignment surrogate on the labeled pool",
          &run_train_predictor);
    stage("rank", "score the candidate pool and keep the top k", &run_rank);
    stage("finetune", "promote and train gate angles on the kept candidates",
          &run_finetune);
    stage("evaluate",
          "evaluate every stage, pick the winner and seal the manifest",
          &run_evaluate);
    stage("search", "run every stage end to end into a fresh run directory",
          &run_search);

    {
        CLI::App* baseline = app.add_subcommand(
            "baseline", "classical and fixed-circuit reference kernels");
        baseline->require_subcommand(1);

        auto table = [baseline](const std::string& name,
                                const std::string& help,
                                void (*fn)(const CommandState&)) {
            auto st = std::make_shared<CommandState>();
            CLI::App* cmd = baseline->add_subcommand(name, help);
            add_config_flags(cmd, st);
            add_out_flags(cmd, st, false,
                          "write the CSV table here instead of stdout");
            cmd->callback([st, fn] { fn(*st); });
            return std::make_pair(cmd, st);
        };

        auto [rbfk_cmd, rbfk_st] = table(
            "rbfk", "Gaussian-kernel sweep over gamma = c / (p Var)",
            &run_baseline_rbfk);
        rbfk_cmd
            ->add_option("--gamma-grid", rbfk_st->gamma_grid,
                         "grid of scale values c")
            ->delimiter(',');
        table("heak", "fixed hardware-efficient ansatz kernel",
              &run_baseline_heak);
        table("tek", "trainable-module extension of the fixed ansatz",
              &run_baseline_tek);
    }

    {
        auto st = std::make_shared<CommandState>();
        CLI::App* cmd = app.add_subcommand(
            "diagnose-kv",
            "kernel-variance table over (l0, p) cells; features are taken "
            "as angles");
        add_config_flags(cmd, st);
        add_out_flags(cmd, st, false,
                      "write the CSV table here instead of stdout");
        cmd->add_option("--p-list", st->p_list,
                        "feature counts to scan, each at most the dataset "
                        "width")
            ->delimiter(',')
            ->required();
        cmd->add_option("--trials", st->trials,
                        "random layouts averaged per cell");
        cmd->callback([st] { run_diagnose_kv(*st); });
    }

    try {
        app.parse(argc, argv);
    } catch (const Refusal& r) {
        diag("error", "refusing to overwrite " + r.path +
                          "; pass --force to replace it");
        return 2;
    } catch (const UsageFailure& u) {
        diag("error", u.message);
        return 1;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() != 0) diag("error", e.what());
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const Error& e) {
        diag("error", e.what());
        return 2;
    } catch (const std::exception& e) {
        diag("error", e.what());
        return 2;
    }
    return 0;
}

}  // namespace qks::cli
