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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "qks/artifacts.hpp"
#include "qks/cli.hpp"
#include "qks/data.hpp"
#include "qks/rng.hpp"

using namespace qks;
namespace fs = std::filesystem;

namespace {

constexpr double kTau = 6.283185307179586;

struct CliResult {
    int code = 0;
    std::string out;
    std::string err;
};

/// Drives dispatch() in-process with captured streams.
CliResult run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "qksearch");
    std::vector<char*> argv;
    argv.reserve(args.size());
    for (auto& a : args) argv.push_back(a.data());

    std::ostringstream out, err;
    auto* old_out = std::cout.rdbuf(out.rdbuf());
    auto* old_err = std::cerr.rdbuf(err.rdbuf());
    CliResult r;
    r.code = cli::dispatch(static_cast<int>(argv.size()), argv.data());
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string scratch_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("qks_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

/// Small two-class angle dataset on disk.
std::string write_dataset(const std::string& path, int count = 24,
                          int dim = 2, uint64_t seed = 99) {
    Rng rng(seed);
    TabularDataset d;
    d.features.resize(count, dim);
    for (int r = 0; r < count; ++r)
        for (int c = 0; c < dim; ++c) d.features(r, c) = rng.uniform(0.0, kTau);
    d.labels.resize(count);
    for (int r = 0; r < count; ++r) d.labels[r] = r % 2;
    d.num_classes = 2;
    save_csv(d, path);
    return path;
}

std::vector<std::string> with_cmd(const std::string& cmd,
                                  std::vector<std::string> flags) {
    flags.insert(flags.begin(), cmd);
    return flags;
}

std::vector<std::string> tiny_flags(const std::string& data,
                                    const std::string& out) {
    return {"--data",          data, "--n", "2", "--p", "2", "--l0", "1",
            "--pool-size",     "8",  "--exhaustive", "--top-k", "3",
            "--theta-trials",  "2",  "--finetune-epochs", "4",
            "--predictor-epochs", "40", "--seed", "20260823", "--out", out};
}

std::map<std::string, std::string> artifact_hashes(const std::string& dir) {
    std::map<std::string, std::string> m;
    for (const auto& a : load_manifest(RunPaths(dir)).artifacts)
        m[a.path] = a.fnv64;
    return m;
}

}  // namespace

TEST_CASE("usage errors exit 1") {
    CHECK(run_cli({}).code == 1);
    CHECK(run_cli({"rank", "--out", "/tmp/x", "--bogus"}).code == 1);
    CliResult missing = run_cli({"search", "--out", scratch_dir("u1")});
    CHECK(missing.code == 1);
    CHECK(missing.err.find("--data") != std::string::npos);
    CliResult absent = run_cli(
        {"search", "--data", "/nope/absent.csv", "--out", scratch_dir("u2")});
    CHECK(absent.code == 1);
    CHECK(absent.err.find("absent.csv") != std::string::npos);
    CHECK(run_cli({"--version"}).code == 0);
}

TEST_CASE("search populates a verifiable run directory") {
    std::string work = scratch_dir("search");
    std::string data = write_dataset(work + "/blob.csv");
    std::string out = work + "/run";
    CliResult r = run_cli(with_cmd("search", tiny_flags(data, out)));
    REQUIRE(r.code == 0);
    CHECK(r.out.find("chosen ") != std::string::npos);

    RunPaths paths(out);
    CHECK_NOTHROW(verify_manifest(paths));
    CHECK(fs::is_regular_file(paths.report_csv()));
    CHECK(fs::is_regular_file(paths.chosen_json()));
    CHECK(fs::is_regular_file(paths.predictor_ckpt()));
    fs::remove_all(work);
}

TEST_CASE("existing run directory is refused without force") {
    std::string work = scratch_dir("force");
    std::string data = write_dataset(work + "/blob.csv");
    std::string out = work + "/run";
    REQUIRE(run_cli(with_cmd("search", tiny_flags(data, out))).code == 0);

    CliResult again = run_cli(with_cmd("search", tiny_flags(data, out)));
    CHECK(again.code == 2);
    CHECK(again.err.find("refusing to overwrite") != std::string::npos);
    CHECK(again.err.find("\"level\":\"error\"") != std::string::npos);

    auto forced = with_cmd("search", tiny_flags(data, out));
    forced.push_back("--force");
    CHECK(run_cli(forced).code == 0);
    fs::remove_all(work);
}

TEST_CASE("stage commands compose into the same artifacts as search") {
    std::string work = scratch_dir("compose");
    std::string data = write_dataset(work + "/blob.csv");
    std::string direct = work + "/direct";
    REQUIRE(run_cli(with_cmd("search", tiny_flags(data, direct))).code == 0);

    std::string staged = work + "/staged";
    for (const char* cmd :
         {"select-features", "sample-pool", "label-pool", "train-predictor",
          "rank", "finetune", "evaluate"}) {
        auto args = tiny_flags(data, staged);
        args.insert(args.begin(), cmd);
        CliResult r = run_cli(args);
        INFO(cmd << ": " << r.err);
        REQUIRE(r.code == 0);
    }

    RunManifest a = load_manifest(RunPaths(direct));
    RunManifest b = load_manifest(RunPaths(staged));
    CHECK(a.run_hash == b.run_hash);
    CHECK(artifact_hashes(direct) == artifact_hashes(staged));
    CHECK_NOTHROW(verify_manifest(RunPaths(staged)));
    fs::remove_all(work);
}

TEST_CASE("two identical search runs are byte identical where it counts") {
    std::string work = scratch_dir("determinism");
    std::string data = write_dataset(work + "/blob.csv");
    std::string r1 = work + "/r1";
    std::string r2 = work + "/r2";
    REQUIRE(run_cli(with_cmd("search", tiny_flags(data, r1))).code == 0);
    REQUIRE(run_cli(with_cmd("search", tiny_flags(data, r2))).code == 0);
    CHECK(read_text_file(RunPaths(r1).report_csv()) ==
          read_text_file(RunPaths(r2).report_csv()));
    CHECK(load_chosen(RunPaths(r1)).hash == load_chosen(RunPaths(r2)).hash);
    CHECK(load_manifest(RunPaths(r1)).run_hash ==
          load_manifest(RunPaths(r2)).run_hash);
    fs::remove_all(work);
}

TEST_CASE("stages demand their inputs and a consistent config") {
    std::string work = scratch_dir("ordering");
    std::string data = write_dataset(work + "/blob.csv");
    std::string out = work + "/run";

    auto args = tiny_flags(data, out);
    args.insert(args.begin(), "train-predictor");
    CliResult premature = run_cli(args);
    CHECK(premature.code == 2);
    CHECK(premature.err.find("label-pool") != std::string::npos);

    // same directory, different seed: the config guard trips
    auto other = tiny_flags(data, out);
    other.insert(other.begin(), "select-features");
    for (size_t i = 0; i < other.size(); ++i)
        if (other[i] == "--seed") other[i + 1] = "1";
    CliResult mismatch = run_cli(other);
    CHECK(mismatch.code == 2);
    CHECK(mismatch.err.find("different configuration") != std::string::npos);
    fs::remove_all(work);
}

TEST_CASE("baseline tables carry the expected headers") {
    std::string work = scratch_dir("baseline");
    std::string data = write_dataset(work + "/blob.csv");

    CliResult rbfk = run_cli({"baseline", "rbfk", "--data", data,
                              "--gamma-grid", "1,2,3", "--seed", "3"});
    REQUIRE(rbfk.code == 0);
    CHECK(rbfk.out.rfind("scale,gamma,train_accuracy,test_accuracy,best\n",
                         0) == 0);
    CHECK(std::count(rbfk.out.begin(), rbfk.out.end(), '\n') == 4);

    std::string table = work + "/rbfk.csv";
    CliResult to_file =
        run_cli({"baseline", "rbfk", "--data", data, "--out", table});
    REQUIRE(to_file.code == 0);
    CHECK(read_text_file(table).rfind("scale,", 0) == 0);
    CHECK(run_cli({"baseline", "rbfk", "--data", data, "--out", table}).code ==
          2);

    CliResult heak =
        run_cli({"baseline", "heak", "--data", data, "--n", "2", "--seed", "3"});
    REQUIRE(heak.code == 0);
    CHECK(heak.out.rfind("kernel,kta_train,train_accuracy,test_accuracy\n"
                         "heak,",
                         0) == 0);

    CliResult tek = run_cli({"baseline", "tek", "--data", data, "--n", "2",
                             "--finetune-epochs", "2", "--seed", "3"});
    REQUIRE(tek.code == 0);
    CHECK(tek.out.rfind("kernel,kta_init,kta_train,train_accuracy,"
                        "test_accuracy\ntek,",
                        0) == 0);
    fs::remove_all(work);
}

TEST_CASE("diagnose-kv writes one row per cell and zeroes on constant data") {
    std::string work = scratch_dir("kv");
    std::string data = write_dataset(work + "/blob.csv", 12, 4);

    CliResult r = run_cli({"diagnose-kv", "--data", data, "--n", "2", "--l0",
                           "1,2", "--p-list", "2,4", "--trials", "2", "--seed",
                           "5"});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("l0,p,mean_kv,std_kv,trials\n", 0) == 0);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 5);

    CHECK(run_cli({"diagnose-kv", "--data", data, "--n", "2", "--l0", "1",
                   "--p-list", "9"})
              .code == 1);

    // identical rows make every off-diagonal entry 1, so KV collapses to 0
    std::string flat = work + "/flat.csv";
    {
        TabularDataset d;
        d.features = Matrix::Constant(6, 2, 1.25);
        d.labels.assign(6, 0);
        d.labels[1] = 1;
        d.num_classes = 2;
        save_csv(d, flat);
    }
    CliResult zero = run_cli({"diagnose-kv", "--data", flat, "--n", "2",
                              "--l0", "1", "--p-list", "2", "--trials", "3"});
    REQUIRE(zero.code == 0);
    std::istringstream lines(zero.out);
    std::string header, row;
    std::getline(lines, header);
    std::getline(lines, row);
    int l0 = 0, p = 0, trials = 0;
    double mean_kv = -1.0, std_kv = -1.0;
    REQUIRE(std::sscanf(row.c_str(), "%d,%d,%lf,%lf,%d", &l0, &p, &mean_kv,
                        &std_kv, &trials) == 5);
    CHECK(l0 == 1);
    CHECK(p == 2);
    CHECK(std::abs(mean_kv) < 1e-12);
    CHECK(std::abs(std_kv) < 1e-12);
    fs::remove_all(work);
}
