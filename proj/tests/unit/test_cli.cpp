#include "helpers.hpp"

#include "pmussl/dataset.hpp"
#include "pmussl/experiment.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace pmussl;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Outcome {
    int code;
    std::string out;
};

Outcome cli(const std::string& args, const fs::path& dir) {
    const auto log = dir / "cli.log";
    const std::string cmd = std::string(PMUSSL_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int raw = std::system(cmd.c_str());
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_json(const fs::path& p, const json& j) {
    std::ofstream(p) << j.dump(2);
    return p;
}

json small_config() {
    return json::parse(R"({
      "generator": {"m": 4, "seed": 3, "t_s": 5},
      "counts": {"LL": 20, "GL": 20, "LT": 20, "BF": 20},
      "extraction": {"p": 2, "m_prime": 2},
      "plan": {"n_K": 2, "n_Q": 1, "n_L": 24, "delta_U": 1000, "n_R": 1,
               "B_min": 0.2, "B_max": 0.8, "master_seed": 1,
               "grids": {"GB": {"n_trees": [10]}, "SVMR": {"C": [1]}, "SVML": {"C": [1]},
                         "tsvm": {"C": [1]}, "label_spreading": {"alpha": [0.2]}}}
    })");
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit with code 2") {
    const auto dir = testing::scratch_dir("cli_usage");
    CHECK(cli("", dir).code == 2);
    CHECK(cli("generate --out x", dir).code == 2);  // --config missing
    CHECK(cli("frobnicate", dir).code == 2);
    CHECK(cli("--help", dir).code == 0);
}

TEST_CASE("generate with the default counts") {
    const auto dir = testing::scratch_dir("cli_default");
    auto cfg = json::parse(slurp(fs::path(PMUSSL_CONFIG_DIR) / "default.json"));
    // full counts, tiny streams
    cfg["generator"]["m"] = 1;
    cfg["generator"]["t_s"] = 0.2;
    const auto r = cli("generate --config " + write_json(dir / "c.json", cfg).string() + " --out " + (dir / "ev").string(), dir);
    REQUIRE(r.code == 0);
    CHECK(r.out.find("wrote 1827 events") != std::string::npos);
    CHECK(r.out.find("BF: 327") != std::string::npos);
    CHECK(r.out.find("LL: 500") != std::string::npos);
    const auto m = json::parse(slurp(dir / "ev" / "manifest.json"));
    CHECK(m["events"].size() == 1827);
    CHECK(fs::exists(dir / "ev" / "generate.config.json"));
}

TEST_CASE("generate honours overridden counts and reports missing keys") {
    const auto dir = testing::scratch_dir("cli_counts");
    auto cfg = small_config();
    cfg["counts"] = {{"LL", 40}, {"GL", 40}, {"LT", 40}, {"BF", 40}};
    cfg["generator"]["t_s"] = 0.5;
    auto r = cli("generate --config " + write_json(dir / "c.json", cfg).string() + " --out " + (dir / "ev").string(), dir);
    REQUIRE(r.code == 0);
    CHECK(json::parse(slurp(dir / "ev" / "manifest.json"))["events"].size() == 160);

    cfg["generator"].erase("m");
    r = cli("generate --config " + write_json(dir / "bad.json", cfg).string() + " --out " + (dir / "ev2").string(), dir);
    CHECK(r.code == 2);
    CHECK(r.out.find("generator.m") != std::string::npos);

    r = cli("generate --config " + (dir / "absent.json").string() + " --out " + (dir / "ev3").string(), dir);
    CHECK(r.code == 1);
}

TEST_CASE("generate, extract, run, report") {
    const auto dir = testing::scratch_dir("cli_pipeline");
    const auto cfgp = write_json(dir / "c.json", small_config()).string();
    const std::string ev = (dir / "ev").string();
    REQUIRE(cli("generate --config " + cfgp + " --out " + ev, dir).code == 0);

    SUBCASE("extraction is deterministic and thread-count independent") {
        REQUIRE(cli("extract --config " + cfgp + " --out " + (dir / "f1").string() + " --events " + ev + "/manifest.json", dir).code == 0);
        REQUIRE(cli("extract --config " + cfgp + " --out " + (dir / "f2").string() + " --events " + ev + "/manifest.json --jobs 3", dir).code == 0);
        const auto a = slurp(dir / "f1" / "features.csv");
        CHECK(a == slurp(dir / "f2" / "features.csv"));
        const auto ds = read_features(dir / "f1" / "features.csv");
        CHECK(ds.size() == 80);
        CHECK(ds.dim() == 2 * 2 * 3 * 3);
        CHECK(fs::exists(dir / "f1" / "reconstruction_error.csv"));
        CHECK(fs::exists(dir / "f1" / "extract.config.json"));
    }

    SUBCASE("the reference extraction layout has 396 columns") {
        auto cfg = small_config();
        cfg["generator"]["m"] = 10;
        cfg["counts"] = {{"LT", 2}};
        cfg["extraction"] = {{"p", 6}, {"m_prime", 10}};
        const auto c2 = write_json(dir / "c396.json", cfg).string();
        REQUIRE(cli("generate --config " + c2 + " --out " + (dir / "ev396").string(), dir).code == 0);
        REQUIRE(cli("extract --config " + c2 + " --out " + (dir / "f396").string() + " --events " + (dir / "ev396").string() + "/manifest.json", dir).code == 0);
        CHECK(read_features(dir / "f396" / "features.csv").dim() == 396);
    }

    SUBCASE("too few PMUs exits 2 naming the event") {
        auto cfg = small_config();
        cfg["extraction"]["m_prime"] = 5;
        const auto c2 = write_json(dir / "c5.json", cfg).string();
        const auto r = cli("extract --config " + c2 + " --out " + (dir / "fx").string() + " --events " + ev + "/manifest.json", dir);
        CHECK(r.code == 2);
        const auto first = json::parse(slurp(dir / "ev" / "manifest.json"))["events"][0]["event_id"].get<std::string>();
        CHECK(r.out.find(first) != std::string::npos);
    }

    SUBCASE("run covers the planned grid, resumes and reports") {
        REQUIRE(cli("extract --config " + cfgp + " --out " + (dir / "f").string() + " --events " + ev + "/manifest.json", dir).code == 0);
        const std::string feats = (dir / "f" / "features.csv").string();
        const std::string out = (dir / "run").string();
        // 15 combinations, n_K = 2, n_Q = 1, s in {0, 1}, n_R = 1
        auto r = cli("run --config " + cfgp + " --out " + out + " --features " + feats + " --dry-run", dir);
        REQUIRE(r.code == 0);
        CHECK(r.out.find("cells=60") != std::string::npos);
        CHECK_FALSE(fs::exists(dir / "run" / "results.csv"));

        r = cli("run --config " + cfgp + " --out " + out + " --features " + feats, dir);
        REQUIRE(r.code == 0);
        CHECK(r.out.find("computed 60 new cells") != std::string::npos);
        const auto first = slurp(dir / "run" / "results.csv");
        CHECK(read_results(dir / "run" / "results.csv").size() == 60);
        CHECK(fs::exists(dir / "run" / "run.config.json"));

        r = cli("run --config " + cfgp + " --out " + out + " --features " + feats, dir);
        REQUIRE(r.code == 0);
        CHECK(r.out.find("computed 0 new cells") != std::string::npos);
        CHECK(slurp(dir / "run" / "results.csv") == first);

        r = cli("run --config " + cfgp + " --out " + (dir / "run_j").string() + " --features " + feats + " --jobs 2", dir);
        REQUIRE(r.code == 0);
        CHECK(slurp(dir / "run_j" / "results.csv") == first);

        r = cli("report --out " + (dir / "rep").string() + " --results " + out + "/results.csv", dir);
        REQUIRE(r.code == 0);
        CHECK(r.out.find("best: ") != std::string::npos);
        const auto agg = slurp(dir / "rep" / "aggregate.csv");
        CHECK(agg.rfind("engine,classifier,s,n_U_s,mean_auc,p5_auc,p95_auc,n_cells\n", 0) == 0);

        r = cli("run --config " + cfgp + " --out " + out + " --features " + feats + " --seed 77 --dry-run", dir);
        CHECK(r.code == 0);
    }
}

TEST_CASE("report names the dominant combination and handles edge cases") {
    const auto dir = testing::scratch_dir("cli_report");
    std::vector<ResultRecord> rows;
    auto add = [&](const char* e, const char* c, int s, double auc) {
        ResultRecord r;
        r.key = {e, c, 0, 0, s, static_cast<int>(rows.size())};
        r.auc = auc;
        rows.push_back(r);
    };
    add("label_spreading", "kNN", 0, 0.8);
    add("label_spreading", "kNN", 2, 0.97);
    add("self_training", "SVML", 0, 0.8);
    add("self_training", "SVML", 2, 0.9);
    add("tsvm", "GB", 2, std::nan(""));
    add("tsvm", "GB", 2, 0.5);
    write_results(rows, dir / "r.csv");
    auto r = cli("report --out " + (dir / "o").string() + " --results " + (dir / "r.csv").string(), dir);
    REQUIRE(r.code == 0);
    CHECK(r.out.find("best: label_spreading/kNN") != std::string::npos);
    const auto agg = slurp(dir / "o" / "aggregate.csv");
    CHECK(agg.find("tsvm,GB,2,0,0.5,0.5,0.5,1\n") != std::string::npos);

    write_results(std::span(rows).first(1), dir / "one.csv");
    r = cli("report --out " + (dir / "o1").string() + " --results " + (dir / "one.csv").string(), dir);
    CHECK(r.code == 0);

    std::ofstream(dir / "junk.csv") << "a,b\n";
    r = cli("report --out " + (dir / "o2").string() + " --results " + (dir / "junk.csv").string(), dir);
    CHECK(r.code == 1);
}

}
