#include "helpers.hpp"

#include "pmussl/config.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>

using namespace pmussl;

namespace {

std::string message_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

constexpr const char* kPlan = R"("plan": {"n_K": 5, "n_L": 24, "delta_U": 50, "n_R": 5,
                                         "B_min": 0.2, "B_max": 0.8, "master_seed": 3})";

}  // namespace

TEST_SUITE("config") {

TEST_CASE("bundled default config describes the reference dataset") {
    const auto cfg = load_config(std::string(PMUSSL_CONFIG_DIR) + "/default.json");
    CHECK(cfg.counts.at(EventClass::LL) == 500);
    CHECK(cfg.counts.at(EventClass::GL) == 500);
    CHECK(cfg.counts.at(EventClass::LT) == 500);
    CHECK(cfg.counts.at(EventClass::BF) == 327);
    CHECK(cfg.generator.sample_count() == 300);
    CHECK(cfg.extraction.modes == 6);
    CHECK(cfg.extraction.retained_pmus == 10);
    CHECK(cfg.plan.n_K == 10);
    CHECK(cfg.plan.n_L == 24);
    CHECK(cfg.plan.delta_U == 100);
    CHECK(cfg.plan.n_R == 20);
    CHECK(cfg.plan.B_min == 0.2);
    CHECK(cfg.plan.B_max == 0.8);
    CHECK_NOTHROW(load_config(std::string(PMUSSL_CONFIG_DIR) + "/small.json"));
}

TEST_CASE("sections are optional but required keys are named") {
    CHECK_NOTHROW(parse_config("{}"));
    CHECK_THROWS_AS(parse_config("{}").require("plan"), ConfigError);
    CHECK(message_of(R"({"generator": {"seed": 1}})").find("'generator.m'") != std::string::npos);
    CHECK(message_of(R"({"plan": {"n_K": 5}})").find("'plan.n_L'") != std::string::npos);
}

TEST_CASE("unknown keys and bad types are rejected") {
    CHECK(message_of(R"({"generatr": {}})").find("generatr") != std::string::npos);
    CHECK(message_of(R"({"generator": {"m": 4, "seed": 1, "sed": 2}})").find("generator.sed") != std::string::npos);
    CHECK_THROWS_AS(parse_config(R"({"generator": {"m": "four", "seed": 1}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"counts": {"XX": 3}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"counts": {"LL": 0}})"), ConfigError);
    CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
}

TEST_CASE("null values select documented defaults") {
    const auto cfg = parse_config(R"({"generator": {"m": 4, "seed": 1, "snr_db": null},
                                      "extraction": {"L": null}})");
    CHECK(std::isinf(cfg.generator.snr_db));
    CHECK_FALSE(cfg.extraction.pencil.has_value());
    CHECK(cfg.extraction.pencil_for(300) == 150);
}

TEST_CASE("plan section") {
    const auto cfg = parse_config(std::string("{") + kPlan + "}");
    CHECK(cfg.has_plan);
    CHECK(cfg.plan.n_Q == 20);
    CHECK(cfg.plan.resolved_combinations().size() == 15);

    const auto narrowed = parse_config(R"({"plan": {"n_K": 5, "n_L": 24, "delta_U": 50, "n_R": 5, "B_min": 0.2,
        "B_max": 0.8, "master_seed": 3, "combinations": [["label_spreading", "kNN"]], "steps": [0, -1],
        "grids": {"kNN": {"k": [3]}, "label_spreading": {"alpha": [0.3]}}}})");
    CHECK(narrowed.plan.resolved_combinations().size() == 1);
    CHECK(narrowed.plan.steps == std::vector<int>{0, -1});
    CHECK(narrowed.plan.grids.at("kNN").at("k") == std::vector<double>{3});

    CHECK_THROWS_AS(parse_config(R"({"plan": {"n_K": 5, "n_L": 24, "delta_U": 50, "n_R": 5, "B_min": 0.3,
        "B_max": 0.8, "master_seed": 3}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"plan": {"n_K": 5, "n_L": 24, "delta_U": 50, "n_R": 5, "B_min": 0.2,
        "B_max": 0.8, "master_seed": 3, "grids": {"kNN": {"depth": [3]}}}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"plan": {"n_K": 5, "n_L": 24, "delta_U": 50, "n_R": 5, "B_min": 0.2,
        "B_max": 0.8, "master_seed": 3, "engines": ["em"]}})"), ConfigError);
}

TEST_CASE("signature overrides replace one class") {
    const auto cfg = parse_config(R"({"signatures": {"BF": {"modes": [
        {"freq_hz": [1, 2], "sigma": [-1, -0.5], "phase": null}]}}})");
    REQUIRE(cfg.signatures.at(EventClass::BF).modes.size() == 1);
    CHECK(std::isnan(cfg.signatures.at(EventClass::BF).modes[0].phase));
    CHECK(cfg.signatures.at(EventClass::LL).modes.size() == default_signatures().at(EventClass::LL).modes.size());
    CHECK_THROWS_AS(parse_config(R"({"signatures": {"BF": {"modes": [{"freq_hz": [1, 2], "sigma": [-1, 0.5]}]}}})"),
                    ConfigError);
}

TEST_CASE("resolved echo parses back to the same configuration") {
    const auto cfg = load_config(std::string(PMUSSL_CONFIG_DIR) + "/small.json");
    const auto text = resolved_config_json(cfg);
    const auto again = parse_config(text);
    CHECK(resolved_config_json(again) == text);
    const auto j = nlohmann::json::parse(text);
    CHECK(j["extraction"]["p"] == 6);
    CHECK(j["plan"]["n_Q"] == 10);
    CHECK(j["generator"].contains("fluctuation"));  // defaults are spelled out
}

}
