#pragma once

#include "pmussl/dataset.hpp"

#include <array>
#include <complex>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace pmussl {

/// Parameter ranges for one damped mode. freq range [0, 0] gives a purely
/// real (non-oscillatory) exponential.
struct ModeSpec {
    double freq_lo_hz = 0.5;
    double freq_hi_hz = 1.0;
    double sigma_lo = -0.5;  // 1/s
    double sigma_hi = -0.1;  // 1/s, must be < 0
    /// Residue magnitude scale per channel (V_m, V_a, F).
    std::array<double, 3> channel_scale{0.01, 0.01, 0.01};
    /// Residue phase at the epicenter; NaN draws a uniform phase per event.
    double phase = 0.0;
    /// Half-width of the uniform per-PMU phase jitter (rad).
    double phase_spread = 0.3;
};

/// Class-conditional description of a synthetic event.
struct ClassSignature {
    std::vector<ModeSpec> modes;  // p_true = modes.size()
    /// Post-event offset step per channel, attenuated like the residues.
    std::array<double, 3> channel_step{0.0, 0.0, 0.0};
    /// Relative jitter on the step amplitude (uniform +/-).
    double step_jitter = 0.2;
    /// V_m depression held until t_clr (bus faults); 0 disables.
    double fault_dip = 0.0;
    /// Residue attenuation rate with distance from the epicenter.
    double spatial_decay = 1.0;

    void validate() const;
};

using SignatureMap = std::map<EventClass, ClassSignature>;

/// Qualitative channel behaviours per class (frequency sag / rise, angle
/// step with localized inter-area mode, deep voltage dip).
SignatureMap default_signatures();

struct GeneratorConfig {
    int pmu_count = 16;             // m
    double sample_rate_hz = 30.0;
    double eventful_seconds = 10.0;  // t_s
    double load_scale_lo = 0.95;
    double load_scale_hi = 1.05;
    double fluctuation = 0.02;  // zero-mean uniform +/- per PMU
    /// Per-stream SNR of the dynamic part; +inf disables noise.
    double snr_db = 45.0;
    double clear_seconds = 0.1;  // t_clr
    std::uint64_t seed = 1;

    int sample_count() const;  // N = round(t_s * rate)
    double sample_period() const { return 1.0 / sample_rate_hz; }
    void validate() const;
};

/// Realized modal parameters of a generated stream set (ground truth).
struct TrueMode {
    double sigma;
    double omega;  // rad/s, >= 0
};

EventRecord generate_event(EventClass cls, const GeneratorConfig& cfg, const ClassSignature& sig,
                           std::uint64_t seed, std::string event_id = {});

/// Per-event seeds derive from (master_seed, class, index); output order is
/// class-blocked then shuffled with master_seed.
std::vector<EventRecord> generate_dataset(const std::map<EventClass, int>& counts,
                                          const GeneratorConfig& cfg,
                                          const SignatureMap& signatures,
                                          std::uint64_t master_seed);

/// Evaluates sum_k Re(R_k * Z_k^n), Z_k = exp((sigma_k + j omega_k) Ts),
/// for n = 0..N-1. Used by the generator and by reconstruction checks.
Vector synthesize_stream(std::span<const TrueMode> modes,
                         std::span<const std::complex<double>> residues, double Ts, Index N);

}  // namespace pmussl
