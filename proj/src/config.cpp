#include "pmussl/config.hpp"

#include "csv.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace pmussl {

using json = nlohmann::json;

namespace {

// Reads keys off one JSON object and rejects whatever is left unread.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + " must be a JSON object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& at(const std::string& key) {
        seen_.insert(key);
        if (!j_.contains(key)) throw ConfigError("missing config key '" + name(key) + "'");
        return j_.at(key);
    }

    double number(const std::string& key) {
        const auto& v = at(key);
        if (!v.is_number()) throw ConfigError(name(key) + " must be a number");
        return v.get<double>();
    }
    double number(const std::string& key, double fallback) { return has(key) ? number(key) : mark(key, fallback); }

    long integer(const std::string& key) {
        const auto& v = at(key);
        if (!v.is_number_integer()) throw ConfigError(name(key) + " must be an integer");
        return v.get<long>();
    }
    long integer(const std::string& key, long fallback) { return has(key) ? integer(key) : mark(key, fallback); }

    std::uint64_t seed(const std::string& key) {
        const auto& v = at(key);
        if (v.is_number_unsigned()) return v.get<std::uint64_t>();
        if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
        throw ConfigError(name(key) + " must be a non-negative integer");
    }

    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return mark(key, fallback);
        const auto& v = at(key);
        if (!v.is_boolean()) throw ConfigError(name(key) + " must be true or false");
        return v.get<bool>();
    }

    std::vector<double> numbers(const std::string& key, std::size_t expect = 0) {
        const auto& v = at(key);
        if (!v.is_array()) throw ConfigError(name(key) + " must be an array of numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) throw ConfigError(name(key) + " must be an array of numbers");
            out.push_back(e.get<double>());
        }
        if (expect && out.size() != expect)
            throw ConfigError(name(key) + " must hold " + std::to_string(expect) + " numbers");
        return out;
    }

    std::vector<std::string> strings(const std::string& key) {
        const auto& v = at(key);
        if (!v.is_array()) throw ConfigError(name(key) + " must be an array of strings");
        std::vector<std::string> out;
        for (const auto& e : v) {
            if (!e.is_string()) throw ConfigError(name(key) + " must be an array of strings");
            out.push_back(e.get<std::string>());
        }
        return out;
    }

    Section sub(const std::string& key) { return Section(at(key), name(key)); }

    void finish() const {
        for (const auto& [key, _] : j_.items())
            if (!seen_.contains(key)) throw ConfigError("unknown config key '" + name(key) + "'");
    }

    std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    const json& raw() const { return j_; }

private:
    template <class T>
    T mark(const std::string& key, T v) {
        seen_.insert(key);
        return v;
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void parse_generator(Section s, GeneratorConfig& g) {
    g.pmu_count = static_cast<int>(s.integer("m"));
    g.seed = s.seed("seed");
    g.sample_rate_hz = s.number("sample_rate_hz", g.sample_rate_hz);
    g.eventful_seconds = s.number("t_s", g.eventful_seconds);
    if (s.has("load_scale")) {
        const auto r = s.numbers("load_scale", 2);
        g.load_scale_lo = r[0];
        g.load_scale_hi = r[1];
    }
    g.fluctuation = s.number("fluctuation", g.fluctuation);
    if (s.has("snr_db") && s.raw().at("snr_db").is_null()) {
        s.at("snr_db");
        g.snr_db = std::numeric_limits<double>::infinity();
    } else {
        g.snr_db = s.number("snr_db", g.snr_db);
    }
    g.clear_seconds = s.number("t_clr", g.clear_seconds);
    s.finish();
    g.validate();
}

std::map<EventClass, int> parse_counts(Section s) {
    std::map<EventClass, int> out;
    for (const auto& [key, _] : s.raw().items()) {
        EventClass c;
        try {
            c = class_from_name(key);
        } catch (const Error&) {
            throw ConfigError("unknown config key '" + s.name(key) + "' (expected LL, GL, LT, BF)");
        }
        const long n = s.integer(key);
        if (n < 1) throw ConfigError(s.name(key) + " must be >= 1");
        out[c] = static_cast<int>(n);
    }
    if (out.empty()) throw ConfigError("counts must list at least one class");
    s.finish();
    return out;
}

ModeSpec parse_mode(Section s) {
    ModeSpec m;
    const auto f = s.numbers("freq_hz", 2);
    const auto sg = s.numbers("sigma", 2);
    m.freq_lo_hz = f[0];
    m.freq_hi_hz = f[1];
    m.sigma_lo = sg[0];
    m.sigma_hi = sg[1];
    if (s.has("channel_scale")) {
        const auto c = s.numbers("channel_scale", 3);
        std::copy(c.begin(), c.end(), m.channel_scale.begin());
    }
    if (s.has("phase") && s.raw().at("phase").is_null()) {
        s.at("phase");
        m.phase = std::numeric_limits<double>::quiet_NaN();
    } else {
        m.phase = s.number("phase", m.phase);
    }
    m.phase_spread = s.number("phase_spread", m.phase_spread);
    s.finish();
    return m;
}

void parse_signatures(Section s, SignatureMap& sigs) {
    for (const auto& [key, _] : s.raw().items()) {
        EventClass c;
        try {
            c = class_from_name(key);
        } catch (const Error&) {
            throw ConfigError("unknown config key '" + s.name(key) + "' (expected LL, GL, LT, BF)");
        }
        Section cs = s.sub(key);
        ClassSignature sig;
        const auto& modes = cs.at("modes");
        if (!modes.is_array()) throw ConfigError(cs.name("modes") + " must be an array");
        for (std::size_t i = 0; i < modes.size(); ++i)
            sig.modes.push_back(parse_mode(Section(modes[i], cs.name("modes") + "[" + std::to_string(i) + "]")));
        if (cs.has("channel_step")) {
            const auto v = cs.numbers("channel_step", 3);
            std::copy(v.begin(), v.end(), sig.channel_step.begin());
        }
        sig.step_jitter = cs.number("step_jitter", sig.step_jitter);
        sig.fault_dip = cs.number("fault_dip", sig.fault_dip);
        sig.spatial_decay = cs.number("spatial_decay", sig.spatial_decay);
        cs.finish();
        sig.validate();
        sigs[c] = std::move(sig);
    }
    s.finish();
}

void parse_extraction(Section s, ExtractionConfig& e) {
    e.modes = static_cast<int>(s.integer("p", e.modes));
    e.retained_pmus = static_cast<int>(s.integer("m_prime", e.retained_pmus));
    if (s.has("L") && !s.raw().at("L").is_null()) e.pencil = static_cast<int>(s.integer("L"));
    else if (s.has("L")) s.at("L");
    e.detrend = s.boolean("detrend", e.detrend);
    e.rank_tol = s.number("rank_tol", e.rank_tol);
    s.finish();
    if (e.modes < 1) throw ConfigError("extraction.p must be >= 1");
    if (e.retained_pmus < 1) throw ConfigError("extraction.m_prime must be >= 1");
    if (e.pencil && *e.pencil < e.modes) throw ConfigError("extraction.L must be >= p");
}

void parse_plan(Section s, ExperimentPlan& p) {
    auto int_key = [&](const char* key) {
        const long v = s.integer(key);
        if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
            throw ConfigError(s.name(key) + " out of range");
        return static_cast<int>(v);
    };
    p.n_K = int_key("n_K");
    p.n_Q = static_cast<int>(s.integer("n_Q", p.n_Q));
    p.n_L = int_key("n_L");
    p.delta_U = int_key("delta_U");
    p.n_R = int_key("n_R");
    p.B_min = s.number("B_min");
    p.B_max = s.number("B_max");
    p.master_seed = s.seed("master_seed");
    if (s.has("engines")) {
        p.engines.clear();
        for (const auto& n : s.strings("engines")) p.engines.push_back(engine_from_name(n));
    }
    if (s.has("classifiers")) {
        p.classifiers.clear();
        for (const auto& n : s.strings("classifiers")) p.classifiers.push_back(kind_from_name(n));
    }
    if (s.has("combinations")) {
        const auto& arr = s.at("combinations");
        if (!arr.is_array()) throw ConfigError("plan.combinations must be an array of [engine, classifier]");
        for (const auto& e : arr) {
            if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string())
                throw ConfigError("plan.combinations entries must be [engine, classifier]");
            p.combinations.push_back({engine_from_name(e[0].get<std::string>()), kind_from_name(e[1].get<std::string>())});
        }
    }
    if (s.has("grids")) {
        Section gs = s.sub("grids");
        for (const auto& [name, _] : gs.raw().items()) {
            Section one = gs.sub(name);
            ParamGrid grid;
            for (const auto& [param, __] : one.raw().items()) grid[param] = one.numbers(param);
            one.finish();
            p.grids[name] = std::move(grid);
        }
        gs.finish();
    }
    if (s.has("steps")) {
        for (double v : s.numbers("steps")) {
            if (v != std::floor(v)) throw ConfigError("plan.steps must hold integers");
            p.steps.push_back(static_cast<int>(v));
        }
    }
    p.cv_folds = static_cast<int>(s.integer("cv_folds", p.cv_folds));
    p.self_training_batch = static_cast<int>(s.integer("self_training_batch", p.self_training_batch));
    p.max_tries = static_cast<int>(s.integer("max_tries", p.max_tries));
    p.ls_tol = s.number("ls_tol", p.ls_tol);
    p.ls_max_iter = static_cast<int>(s.integer("ls_max_iter", p.ls_max_iter));
    p.tsvm_balance = s.boolean("tsvm_balance", p.tsvm_balance);
    s.finish();
    p.validate();
    // grid keys must name real hyperparameters
    for (const auto& [name, grid] : p.grids) {
        for (auto k : kAllClassifierKinds)
            if (kind_name(k) == name)
                for (const auto& hp : expand_grid(grid)) ClassifierSpec{k, hp}.validate();
        static const std::map<std::string, std::set<std::string>> engine_keys{
            {"label_spreading", {"alpha", "sigma_scale"}}, {"tsvm", {"C", "C_u_ratio"}}, {"self_training", {}}};
        if (auto it = engine_keys.find(name); it != engine_keys.end())
            for (const auto& [param, values] : grid)
                if (!it->second.contains(param))
                    throw ConfigError("plan.grids." + name + ": unknown hyperparameter '" + param + "'");
    }
}

json mode_json(const ModeSpec& m) {
    json j;
    j["freq_hz"] = {m.freq_lo_hz, m.freq_hi_hz};
    j["sigma"] = {m.sigma_lo, m.sigma_hi};
    j["channel_scale"] = m.channel_scale;
    j["phase"] = std::isnan(m.phase) ? json(nullptr) : json(m.phase);
    j["phase_spread"] = m.phase_spread;
    return j;
}

}  // namespace

void PipelineConfig::require(std::string_view section) const {
    const bool ok = section == "generator"    ? has_generator
                    : section == "counts"     ? has_counts
                    : section == "extraction" ? has_extraction
                    : section == "plan"       ? has_plan
                                              : false;
    if (!ok) throw ConfigError("missing config key '" + std::string(section) + "'");
}

PipelineConfig parse_config(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    PipelineConfig cfg;
    Section root(j, "");
    if (root.has("generator")) {
        parse_generator(root.sub("generator"), cfg.generator);
        cfg.has_generator = true;
    }
    if (root.has("counts")) {
        cfg.counts = parse_counts(root.sub("counts"));
        cfg.has_counts = true;
    }
    if (root.has("signatures")) parse_signatures(root.sub("signatures"), cfg.signatures);
    if (root.has("extraction")) {
        parse_extraction(root.sub("extraction"), cfg.extraction);
        cfg.has_extraction = true;
    }
    if (root.has("plan")) {
        parse_plan(root.sub("plan"), cfg.plan);
        cfg.has_plan = true;
    }
    root.finish();
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("config file '" + path.string() + "' not found");
    auto in = detail::open_in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string resolved_config_json(const PipelineConfig& cfg) {
    json j = json::object();
    if (cfg.has_generator) {
        const auto& g = cfg.generator;
        j["generator"] = {{"m", g.pmu_count},
                          {"seed", g.seed},
                          {"sample_rate_hz", g.sample_rate_hz},
                          {"t_s", g.eventful_seconds},
                          {"load_scale", {g.load_scale_lo, g.load_scale_hi}},
                          {"fluctuation", g.fluctuation},
                          {"snr_db", std::isinf(g.snr_db) ? json(nullptr) : json(g.snr_db)},
                          {"t_clr", g.clear_seconds}};
        json sigs = json::object();
        for (const auto& [c, s] : cfg.signatures) {
            json modes = json::array();
            for (const auto& m : s.modes) modes.push_back(mode_json(m));
            sigs[std::string(class_name(c))] = {{"modes", modes},
                                                {"channel_step", s.channel_step},
                                                {"step_jitter", s.step_jitter},
                                                {"fault_dip", s.fault_dip},
                                                {"spatial_decay", s.spatial_decay}};
        }
        j["signatures"] = sigs;
    }
    if (cfg.has_counts) {
        json c = json::object();
        for (const auto& [cls, n] : cfg.counts) c[std::string(class_name(cls))] = n;
        j["counts"] = c;
    }
    if (cfg.has_extraction) {
        const auto& e = cfg.extraction;
        j["extraction"] = {{"p", e.modes},
                           {"m_prime", e.retained_pmus},
                           {"L", e.pencil ? json(*e.pencil) : json(nullptr)},
                           {"detrend", e.detrend},
                           {"rank_tol", e.rank_tol}};
    }
    if (cfg.has_plan) {
        const auto& p = cfg.plan;
        json engines = json::array(), classifiers = json::array(), combos = json::array(), grids = json::object();
        for (auto e : p.engines) engines.push_back(std::string(engine_name(e)));
        for (auto c : p.classifiers) classifiers.push_back(std::string(kind_name(c)));
        for (const auto& cb : p.resolved_combinations())
            combos.push_back({std::string(engine_name(cb.engine)), std::string(kind_name(cb.classifier))});
        for (const auto& [name, grid] : p.grids) grids[name] = grid;
        j["plan"] = {{"n_K", p.n_K},
                     {"n_Q", p.n_Q},
                     {"n_L", p.n_L},
                     {"delta_U", p.delta_U},
                     {"n_R", p.n_R},
                     {"B_min", p.B_min},
                     {"B_max", p.B_max},
                     {"master_seed", p.master_seed},
                     {"engines", engines},
                     {"classifiers", classifiers},
                     {"combinations", combos},
                     {"grids", grids},
                     {"steps", p.steps},
                     {"cv_folds", p.cv_folds},
                     {"self_training_batch", p.self_training_batch},
                     {"max_tries", p.max_tries},
                     {"ls_tol", p.ls_tol},
                     {"ls_max_iter", p.ls_max_iter},
                     {"tsvm_balance", p.tsvm_balance}};
    }
    return j.dump(2) + "\n";
}

}  // namespace pmussl
