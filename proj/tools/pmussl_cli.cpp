// pmussl: generate -> extract -> run -> report.
// Exit codes: 0 ok, 1 runtime or IO failure, 2 configuration error.

#include "pmussl/config.hpp"
#include "pmussl/dataset.hpp"
#include "pmussl/experiment.hpp"
#include "pmussl/modal_features.hpp"
#include "pmussl/synth_events.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>

namespace fs = std::filesystem;
using namespace pmussl;

namespace {

struct Common {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
};

void echo_config(const PipelineConfig& cfg, const fs::path& out, const char* name) {
    std::ofstream os(out / name);
    if (!os) throw IoError("cannot write " + (out / name).string());
    os << resolved_config_json(cfg);
}

void ensure_dir(const fs::path& p) {
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw IoError("cannot create directory '" + p.string() + "': " + ec.message());
}

int cmd_generate(const Common& c) {
    auto cfg = load_config(c.config);
    cfg.require("generator");
    cfg.require("counts");
    if (c.seed) cfg.generator.seed = *c.seed;
    const fs::path out(c.out);
    ensure_dir(out);
    const auto events = generate_dataset(cfg.counts, cfg.generator, cfg.signatures, cfg.generator.seed);
    const auto manifest = write_events(events, out);
    echo_config(cfg, out, "generate.config.json");
    std::map<std::string, int> per_class;
    for (const auto& e : events) ++per_class[std::string(class_name(*e.label))];
    std::cout << "wrote " << events.size() << " events to " << manifest.string() << '\n';
    for (auto cls : kAllClasses)
        if (auto it = per_class.find(std::string(class_name(cls))); it != per_class.end())
            std::cout << "  " << it->first << ": " << it->second << '\n';
    return 0;
}

int cmd_extract(const Common& c, const std::string& manifest) {
    auto cfg = load_config(c.config);
    cfg.require("extraction");
    const fs::path out(c.out);
    ensure_dir(out);
    const auto events = read_events(manifest);
    std::vector<EventFeatures> details;
    const auto ds = extract_dataset(events, cfg.extraction, &details, c.jobs);
    write_features(ds, out / "features.csv");

    std::ofstream os(out / "reconstruction_error.csv");
    if (!os) throw IoError("cannot write reconstruction_error.csv");
    os << "event_id";
    for (auto ch : kAllChannels) os << ",mean_" << channel_name(ch) << ",max_" << channel_name(ch);
    for (auto ch : kAllChannels) os << ",modes_" << channel_name(ch);
    os << '\n';
    for (std::size_t i = 0; i < details.size(); ++i) {
        os << events[i].event_id;
        for (std::size_t ch = 0; ch < 3; ++ch)
            os << ',' << format_double(details[i].mean_recon_error[ch]) << ','
               << format_double(details[i].max_recon_error[ch]);
        for (std::size_t ch = 0; ch < 3; ++ch) os << ',' << details[i].modesets[ch].mode_count();
        os << '\n';
    }
    echo_config(cfg, out, "extract.config.json");
    std::cout << "wrote " << ds.size() << " feature rows (d = " << ds.dim() << ") to "
              << (out / "features.csv").string() << '\n';
    return 0;
}

int cmd_run(const Common& c, const std::string& features, bool timing, bool dry_run) {
    auto cfg = load_config(c.config);
    cfg.require("plan");
    if (c.seed) cfg.plan.master_seed = *c.seed;
    const auto data = read_features(features);
    const auto sz = protocol_sizes(data.size(), cfg.plan.n_K, cfg.plan.n_L, cfg.plan.delta_U);
    const auto combos = cfg.plan.resolved_combinations();
    std::cout << "n_D=" << sz.n_D << " n_T=" << sz.n_T << " n_V=" << sz.n_V << " n_L=" << sz.n_L
              << " n_U=" << sz.n_U << " n_S=" << sz.n_S << '\n'
              << "combinations=" << combos.size()
              << " cells=" << planned_cell_count(cfg.plan, data.size()) << '\n';
    if (dry_run) return 0;

    const fs::path out(c.out);
    ensure_dir(out);
    echo_config(cfg, out, "run.config.json");
    const fs::path results = out / "results.csv";
    std::vector<ResultRecord> existing;
    RunOptions opt;
    opt.jobs = c.jobs;
    opt.timing = timing;
    if (fs::exists(results)) {
        existing = read_results(results);
        for (const auto& r : existing) opt.skip.insert(r.key);
        std::cout << "resuming: " << existing.size() << " cells already present\n";
    }
    opt.on_task_done = [&](const std::vector<ResultRecord>& rows) { append_results(rows, results); };
    auto fresh = run_plan(data, cfg.plan, opt);

    std::size_t failed = 0;
    for (const auto& r : fresh)
        if (r.failed()) {
            if (failed < 5)
                std::cerr << "cell " << r.key.engine << '/' << r.key.classifier << " k=" << r.key.k
                          << " q=" << r.key.q << " s=" << r.key.s << " r=" << r.key.r
                          << " failed: " << r.error << '\n';
            ++failed;
        }
    std::vector<ResultRecord> merged = std::move(existing);
    merged.insert(merged.end(), fresh.begin(), fresh.end());
    std::sort(merged.begin(), merged.end(), [](const auto& a, const auto& b) { return a.key < b.key; });
    if (!fresh.empty() || !fs::exists(results)) write_results(merged, results);
    std::cout << "computed " << fresh.size() << " new cells (" << failed << " failed); "
              << merged.size() << " total in " << results.string() << '\n';
    return 0;
}

int cmd_report(const Common& c, const std::string& results_path) {
    const auto results = read_results(results_path);
    if (results.empty()) throw Error("report: results file has no rows");
    const fs::path out(c.out);
    ensure_dir(out);
    const auto rows = aggregate(results);
    write_aggregate(rows, out / "aggregate.csv");
    if (rows.empty()) throw Error("report: every cell failed");

    struct Ends {
        const AggregateRow* first = nullptr;
        const AggregateRow* last = nullptr;
        std::size_t failed = 0;
    };
    std::map<std::pair<std::string, std::string>, Ends> by_combo;
    for (const auto& a : rows) {
        auto& e = by_combo[{a.engine, a.classifier}];
        if (!e.first || a.s < e.first->s) e.first = &a;
        if (!e.last || a.s > e.last->s) e.last = &a;
    }
    for (const auto& r : results)
        if (r.failed()) ++by_combo[{r.key.engine, r.key.classifier}].failed;

    std::printf("%-16s %-6s %8s %8s %8s %8s %7s\n", "engine", "F2", "s_first", "p5", "s_last", "p5", "failed");
    const std::pair<std::string, std::string>* best = nullptr;
    const AggregateRow* best_row = nullptr;
    for (const auto& [key, e] : by_combo) {
        if (!e.first) continue;
        std::printf("%-16s %-6s %8d %8.4f %8d %8.4f %7zu\n", key.first.c_str(), key.second.c_str(), e.first->s,
                    e.first->p5_auc, e.last->s, e.last->p5_auc, e.failed);
        if (!best_row || e.last->p5_auc > best_row->p5_auc ||
            (e.last->p5_auc == best_row->p5_auc && e.last->mean_auc > best_row->mean_auc)) {
            best = &key;
            best_row = e.last;
        }
    }
    if (best)
        std::printf("best: %s/%s (final-step p5 AUC %.4f, mean %.4f)\n", best->first.c_str(), best->second.c_str(),
                    best_row->p5_auc, best_row->mean_auc);
    std::cout << "wrote " << (out / "aggregate.csv").string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semi-supervised PMU event identification pipeline"};
    app.require_subcommand(1);
    Common c;
    std::string manifest, features, results;
    bool timing = false, dry_run = false;

    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* opt = sub->add_option("--config", c.config, "JSON configuration file");
        if (config_required) opt->required();
        sub->add_option("--out", c.out, "Output directory")->required();
        sub->add_option("--seed", c.seed, "Override the master seed");
        sub->add_option("--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber);
    };
    auto* gen = app.add_subcommand("generate", "Generate synthetic events");
    add_common(gen, true);
    auto* ext = app.add_subcommand("extract", "Extract modal features from events");
    add_common(ext, true);
    ext->add_option("--events", manifest, "Events manifest.json")->required();
    auto* run = app.add_subcommand("run", "Run the fold/split/step protocol");
    add_common(run, true);
    run->add_option("--features", features, "Features CSV")->required();
    run->add_flag("--timing", timing, "Record per-cell wall time (results no longer byte-stable)");
    run->add_flag("--dry-run", dry_run, "Print protocol sizes and cell count only");
    auto* rep = app.add_subcommand("report", "Aggregate results into percentiles");
    add_common(rep, false);
    rep->add_option("--results", results, "Results CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*gen) return cmd_generate(c);
        if (*ext) return cmd_extract(c, manifest);
        if (*run) return cmd_run(c, features, timing, dry_run);
        if (*rep) return cmd_report(c, results);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
