#include "pmussl/synth_events.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace pmussl {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Nominal pre-event operating point per channel.
constexpr double kNominalVm = 1.0;
constexpr double kNominalF = 60.0;

double uniform(std::mt19937_64& rng, double lo, double hi) {
    if (hi <= lo) return lo;
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

struct PmuLayout {
    std::vector<double> x, y, vm0, va0;
};

// PMU placement is a property of the grid, not of the event: it depends on
// the generator seed only.
PmuLayout make_layout(const GeneratorConfig& cfg) {
    std::mt19937_64 rng(derive_seed(cfg.seed, {0x1a7u, static_cast<std::uint64_t>(cfg.pmu_count)}));
    PmuLayout L;
    for (int i = 0; i < cfg.pmu_count; ++i) {
        L.x.push_back(uniform(rng, 0.0, 1.0));
        L.y.push_back(uniform(rng, 0.0, 1.0));
        L.vm0.push_back(kNominalVm + uniform(rng, -0.03, 0.03));
        L.va0.push_back(uniform(rng, -0.5, 0.5));
    }
    return L;
}

}  // namespace

void ClassSignature::validate() const {
    if (modes.empty()) throw ConfigError("class signature needs at least one mode");
    for (const auto& m : modes) {
        if (!(m.freq_lo_hz >= 0.0) || m.freq_lo_hz > m.freq_hi_hz)
            throw ConfigError("mode frequency range must satisfy 0 <= f_lo <= f_hi");
        if (m.sigma_lo > m.sigma_hi) throw ConfigError("mode damping range must satisfy lo <= hi");
        if (!(m.sigma_hi < 0.0)) throw ConfigError("mode damping sigma_hi must be < 0 (stable)");
        for (double s : m.channel_scale)
            if (!(s >= 0.0)) throw ConfigError("mode channel_scale must be >= 0");
    }
    if (!(spatial_decay >= 0.0)) throw ConfigError("spatial_decay must be >= 0");
    if (!(fault_dip >= 0.0)) throw ConfigError("fault_dip must be >= 0");
}

SignatureMap default_signatures() {
    SignatureMap sigs;
    const double pi = std::numbers::pi;

    // generation loss: system-wide frequency sag with slow recovery and a
    // common low-frequency swing
    ClassSignature gl;
    gl.modes = {
        ModeSpec{0.0, 0.0, -0.45, -0.2, {0.004, 0.03, 0.06}, pi, 0.0},
        ModeSpec{0.2, 0.8, -0.3, -0.1, {0.002, 0.02, 0.02}, 0.0, 0.4},
    };
    gl.channel_step = {-0.003, -0.02, -0.02};
    gl.spatial_decay = 0.5;
    sigs[EventClass::GL] = gl;

    // load loss: mirrored rise
    ClassSignature ll = gl;
    ll.modes[0].phase = 0.0;
    ll.modes[1].phase = pi;
    ll.channel_step = {0.003, 0.02, 0.02};
    sigs[EventClass::LL] = ll;

    // line trip: localized angle step and inter-area swing
    ClassSignature lt;
    lt.modes = {
        ModeSpec{0.5, 1.5, -0.4, -0.1, {0.003, 0.06, 0.01}, 0.0, 0.5},
        ModeSpec{0.0, 0.0, -1.2, -0.6, {0.001, 0.04, 0.002}, 0.0, 0.0},
    };
    lt.channel_step = {-0.002, 0.05, 0.0};
    lt.spatial_decay = 4.0;
    sigs[EventClass::LT] = lt;

    // bus fault: deep voltage dip until clearing, fast-damped local modes
    ClassSignature bf;
    bf.modes = {
        ModeSpec{1.0, 3.0, -2.5, -0.8, {0.05, 0.03, 0.02}, 0.0, 0.6},
        ModeSpec{1.0, 3.0, -2.5, -0.8, {0.03, 0.02, 0.01}, pi / 2, 0.6},
    };
    bf.channel_step = {-0.005, 0.005, 0.0};
    bf.fault_dip = 0.4;
    bf.spatial_decay = 2.0;
    sigs[EventClass::BF] = bf;
    return sigs;
}

int GeneratorConfig::sample_count() const {
    return static_cast<int>(std::lround(eventful_seconds * sample_rate_hz));
}

void GeneratorConfig::validate() const {
    if (pmu_count < 1) throw ConfigError("generator.m must be >= 1");
    if (!(sample_rate_hz > 0.0)) throw ConfigError("generator.sample_rate_hz must be > 0");
    if (!(eventful_seconds > 0.0) || sample_count() < 2)
        throw ConfigError("generator.t_s must give at least 2 samples");
    if (load_scale_lo > load_scale_hi || !(load_scale_lo > 0.0))
        throw ConfigError("generator load_scale range invalid");
    if (!(fluctuation >= 0.0) || fluctuation >= 1.0)
        throw ConfigError("generator.fluctuation must be in [0, 1)");
    if (!(snr_db > 0.0)) throw ConfigError("generator.snr_db must be > 0");
    if (!(clear_seconds >= 0.0)) throw ConfigError("generator.t_clr must be >= 0");
}

Vector synthesize_stream(std::span<const TrueMode> modes,
                         std::span<const std::complex<double>> residues, double Ts, Index N) {
    if (modes.size() != residues.size()) throw ShapeError("synthesize_stream: size mismatch");
    Vector y = Vector::Zero(N);
    for (std::size_t k = 0; k < modes.size(); ++k) {
        const std::complex<double> lambda(modes[k].sigma, modes[k].omega);
        for (Index n = 0; n < N; ++n)
            y[n] += std::real(residues[k] * std::exp(lambda * (Ts * static_cast<double>(n))));
    }
    return y;
}

EventRecord generate_event(EventClass cls, const GeneratorConfig& cfg, const ClassSignature& sig,
                           std::uint64_t seed, std::string event_id) {
    cfg.validate();
    sig.validate();

    const PmuLayout layout = make_layout(cfg);
    const int m = cfg.pmu_count;
    const Index N = cfg.sample_count();
    const double Ts = cfg.sample_period();

    std::mt19937_64 rng(seed);
    const double ex = uniform(rng, 0.0, 1.0);
    const double ey = uniform(rng, 0.0, 1.0);
    const double load = uniform(rng, cfg.load_scale_lo, cfg.load_scale_hi);

    std::vector<double> atten(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        const double dist = std::hypot(layout.x[static_cast<std::size_t>(i)] - ex,
                                       layout.y[static_cast<std::size_t>(i)] - ey);
        const double fl = uniform(rng, -cfg.fluctuation, cfg.fluctuation);
        atten[static_cast<std::size_t>(i)] = load * (1.0 + fl) * std::exp(-sig.spatial_decay * dist);
    }

    std::vector<TrueMode> modes;
    std::vector<double> base_phase;
    for (const auto& ms : sig.modes) {
        const double f = uniform(rng, ms.freq_lo_hz, ms.freq_hi_hz);
        const double s = uniform(rng, ms.sigma_lo, ms.sigma_hi);
        modes.push_back({s, kTwoPi * f});
        base_phase.push_back(std::isnan(ms.phase) ? uniform(rng, -std::numbers::pi, std::numbers::pi)
                                                  : ms.phase);
    }
    std::array<double, 3> step{};
    for (int c = 0; c < kChannelCount; ++c)
        step[static_cast<std::size_t>(c)] =
            sig.channel_step[static_cast<std::size_t>(c)] *
            (1.0 + uniform(rng, -sig.step_jitter, sig.step_jitter));

    const Index n_clear = std::min<Index>(N, std::lround(cfg.clear_seconds * cfg.sample_rate_hz));
    const bool noisy = std::isfinite(cfg.snr_db);
    std::normal_distribution<double> gauss(0.0, 1.0);

    EventRecord rec;
    rec.event_id = event_id.empty() ? std::string(class_name(cls)) + "-" + std::to_string(seed)
                                    : std::move(event_id);
    rec.label = cls;
    rec.sample_rate_hz = cfg.sample_rate_hz;
    rec.data.resize(kChannelCount * m, N);

    std::vector<std::complex<double>> residues(modes.size());
    for (int c = 0; c < kChannelCount; ++c) {
        const auto cu = static_cast<std::size_t>(c);
        for (int i = 0; i < m; ++i) {
            const auto iu = static_cast<std::size_t>(i);
            for (std::size_t k = 0; k < modes.size(); ++k) {
                const auto& ms = sig.modes[k];
                const double jitter = modes[k].omega > 0.0 ? uniform(rng, -ms.phase_spread, ms.phase_spread) : 0.0;
                residues[k] = std::polar(ms.channel_scale[cu] * atten[iu], base_phase[k] + jitter);
            }
            Vector dyn = synthesize_stream(modes, residues, Ts, N);
            dyn.array() += step[cu] * atten[iu];
            if (c == static_cast<int>(Channel::Vm) && sig.fault_dip > 0.0)
                dyn.head(n_clear).array() -= sig.fault_dip * atten[iu];

            double nominal = 0.0;
            switch (static_cast<Channel>(c)) {
                case Channel::Vm: nominal = layout.vm0[iu]; break;
                case Channel::Va: nominal = layout.va0[iu]; break;
                case Channel::F: nominal = kNominalF; break;
            }
            const Index row = c * m + i;
            if (noisy) {
                const double rms = std::sqrt(dyn.squaredNorm() / static_cast<double>(N));
                const double sd = rms / std::pow(10.0, cfg.snr_db / 20.0);
                for (Index n = 0; n < N; ++n) rec.data(row, n) = nominal + dyn[n] + sd * gauss(rng);
            } else {
                rec.data.row(row) = (dyn.array() + nominal).transpose();
            }
        }
    }

    rec.meta["class"] = std::string(class_name(cls));
    rec.meta["seed"] = std::to_string(seed);
    rec.meta["load_scale"] = format_double(load);
    rec.meta["epicenter_x"] = format_double(ex);
    rec.meta["epicenter_y"] = format_double(ey);
    for (std::size_t k = 0; k < modes.size(); ++k) {
        rec.meta["mode" + std::to_string(k + 1) + "_sigma"] = format_double(modes[k].sigma);
        rec.meta["mode" + std::to_string(k + 1) + "_omega"] = format_double(modes[k].omega);
    }
    return rec;
}

std::vector<EventRecord> generate_dataset(const std::map<EventClass, int>& counts,
                                          const GeneratorConfig& cfg,
                                          const SignatureMap& signatures,
                                          std::uint64_t master_seed) {
    if (counts.empty()) throw ConfigError("generate_dataset: counts empty");
    std::vector<EventRecord> out;
    for (const auto& [cls, n] : counts) {
        if (n <= 0) throw ConfigError("generate_dataset: counts must be positive");
        auto it = signatures.find(cls);
        if (it == signatures.end())
            throw ConfigError("no signature for class " + std::string(class_name(cls)));
        for (int i = 0; i < n; ++i) {
            const auto seed = derive_seed(master_seed, {static_cast<std::uint64_t>(class_code(cls)),
                                                        static_cast<std::uint64_t>(i)});
            char id[32];
            std::snprintf(id, sizeof id, "%s-%05d", std::string(class_name(cls)).c_str(), i);
            out.push_back(generate_event(cls, cfg, it->second, seed, id));
        }
    }
    std::mt19937_64 rng(derive_seed(master_seed, {0x5f0ffu}));
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

}  // namespace pmussl
