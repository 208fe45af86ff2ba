#include "commands.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using stepwise::cli::kOk;
using stepwise::cli::kSemanticFailure;
using stepwise::cli::kUsageError;

namespace {

const fs::path kFixtures = STEPWISE_FIXTURES;

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result cli(std::vector<std::string> args) {
    args.insert(args.begin(), "stepwise");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);
    std::ostringstream out, err;
    int code = stepwise::cli::run(static_cast<int>(args.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string fixture(const std::string& name) { return (kFixtures / name).string(); }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

} // namespace

TEST_CASE("validate: documented examples") {
    auto ok = cli({"validate", fixture("traces_valid.jsonl")});
    CHECK(ok.code == kOk);
    CHECK(ok.out.find("3/3 valid") != std::string::npos);

    auto staged = cli({"validate", fixture("traces_backtrack.jsonl"), "--stage", "1"});
    CHECK(staged.code == kSemanticFailure);
    CHECK(staged.out.find("ACTION_NOT_IN_STAGE_SET") != std::string::npos);
    CHECK(staged.out.find("0/1 valid") != std::string::npos);

    auto missing = cli({"validate", fixture("nope.jsonl")});
    CHECK(missing.code == kUsageError);
    CHECK_FALSE(missing.err.empty());
}

TEST_CASE("validate: bad input and usage") {
    TempDir dir("stepwise_cli_validate");
    write(dir.path / "bad.jsonl", R"({"question":"q","states":[]})" "\n");
    CHECK(cli({"validate", (dir.path / "bad.jsonl").string()}).code == kUsageError);
    CHECK(cli({"validate", fixture("traces_valid.jsonl"), "--stage", "3"}).code == kUsageError);
    CHECK(cli({}).code == kUsageError);
    CHECK(cli({"frobnicate"}).code == kUsageError);
    CHECK(cli({"--help"}).code == kOk);
}

TEST_CASE("build: documented examples") {
    TempDir dir("stepwise_cli_build");
    auto a = cli({"build", "--problems", fixture("problems.jsonl"), "--mock", fixture("mock.jsonl"), "--out",
                  (dir.path / "a").string()});
    REQUIRE(a.code == kOk);
    CHECK(a.out.find("right 7, pairs 2, failed 1") != std::string::npos);
    CHECK(a.out.find("failed p10") != std::string::npos);
    auto manifest = nlohmann::json::parse(slurp(dir.path / "a" / "manifest.json"));
    CHECK(manifest.at("right_count") == 7);
    CHECK(manifest.at("pair_count") == 2);
    CHECK(manifest.at("failed_count") == 1);

    auto b = cli({"build", "--problems", fixture("problems.jsonl"), "--mock", fixture("mock.jsonl"), "--out",
                  (dir.path / "b").string()});
    REQUIRE(b.code == kOk);
    for (const char* f : {"sft.jsonl", "dpo.jsonl", "manifest.json"}) {
        CHECK(slurp(dir.path / "a" / f) == slurp(dir.path / "b" / f));
    }

    ::unsetenv("STEPWISE_API_KEY");
    auto live = cli({"build", "--problems", fixture("problems.jsonl"), "--out", (dir.path / "c").string(),
                     "--endpoint", "http://127.0.0.1:9", "--model", "m"});
    CHECK(live.code == kUsageError);
    CHECK(live.err.find("STEPWISE_API_KEY") != std::string::npos);
    CHECK(live.err.find("--mock") != std::string::npos);
    CHECK_FALSE(fs::exists(dir.path / "c"));
}

TEST_CASE("build: configuration") {
    TempDir dir("stepwise_cli_config");
    write(dir.path / "with_secret.json", R"({"credential": "abc"})");
    auto secret = cli({"--config", (dir.path / "with_secret.json").string(), "build", "--problems",
                       fixture("problems.jsonl"), "--mock", fixture("mock.jsonl"), "--out", (dir.path / "o").string()});
    CHECK(secret.code == kUsageError);
    CHECK(secret.err.find("environment") != std::string::npos);

    write(dir.path / "unknown.json", R"({"colour": "red"})");
    CHECK(cli({"--config", (dir.path / "unknown.json").string(), "validate", fixture("traces_valid.jsonl")}).code ==
          kUsageError);

    write(dir.path / "custom.json", R"({"credential_env": "MY_GEN_KEY", "dpo_beta": 0.25, "parallelism": 2})");
    ::unsetenv("MY_GEN_KEY");
    auto live = cli({"--config", (dir.path / "custom.json").string(), "build", "--problems", fixture("problems.jsonl"),
                     "--out", (dir.path / "o").string(), "--endpoint", "http://127.0.0.1:9", "--model", "m"});
    CHECK(live.code == kUsageError);
    CHECK(live.err.find("MY_GEN_KEY") != std::string::npos);

    auto mock = cli({"--config", (dir.path / "custom.json").string(), "build", "--problems", fixture("problems.jsonl"),
                     "--mock", fixture("mock.jsonl"), "--out", (dir.path / "o").string()});
    REQUIRE(mock.code == kOk);
    auto manifest = nlohmann::json::parse(slurp(dir.path / "o" / "manifest.json"));
    CHECK(manifest.at("hyperparameters").at("dpo_beta") == 0.25);

    CHECK(cli({"build", "--problems", fixture("problems.jsonl"), "--mock", fixture("mock.jsonl"), "--endpoint",
               "http://x", "--out", (dir.path / "p").string()})
              .code == kUsageError);
}

TEST_CASE("losses-check") {
    auto r = cli({"losses-check"});
    CHECK(r.code == kOk);
    CHECK(r.out.find("ln 2") != std::string::npos);
    CHECK(r.out.find("gradient") != std::string::npos);
    CHECK(r.out.find("FAIL") == std::string::npos);
}

TEST_CASE("score: documented examples") {
    auto one = cli({"score", "--predictions", fixture("pred_80.jsonl"), "--gold", fixture("gold_100.jsonl"), "-n", "1"});
    CHECK(one.code == kOk);
    CHECK(one.out.find("accuracy 80.00%") != std::string::npos);
    CHECK(one.out.find("80.52 [ref]") != std::string::npos);

    auto eight = cli({"score", "--predictions", fixture("pred_8.jsonl"), "--gold", fixture("gold_8.jsonl"), "-n", "8"});
    CHECK(eight.code == kOk);
    CHECK(eight.out.find("accuracy 60.00%") != std::string::npos);

    auto too_many = cli({"score", "--predictions", fixture("pred_80.jsonl"), "--gold", fixture("gold_100.jsonl"), "-n", "2"});
    CHECK(too_many.code == kSemanticFailure);

    CHECK(cli({"score", "--predictions", fixture("pred_80.jsonl"), "--gold", fixture("gold_100.jsonl"), "-n", "0"}).code ==
          kUsageError);
}

TEST_CASE("score: named run and report file") {
    TempDir dir("stepwise_cli_score");
    auto report = dir.path / "report.txt";
    auto r = cli({"score", "--predictions", fixture("pred_80.jsonl"), "--gold", fixture("gold_100.jsonl"), "--run",
                  "GSM8K/Mistral-7B", "--report", report.string()});
    CHECK(r.code == kOk);
    std::string text = slurp(report);
    std::istringstream lines(text);
    bool found = false;
    for (std::string l; std::getline(lines, l);) {
        if (l.find("Mistral-7B") != std::string::npos && l.rfind("GSM8K", 0) == 0) {
            found = l.find("80.52 [ref]") != std::string::npos && l.find("80.00") != std::string::npos;
        }
    }
    CHECK(found);
}
