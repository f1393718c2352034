#pragma once

#include "pmussl/dataset.hpp"

#include <array>
#include <complex>
#include <optional>
#include <vector>

namespace pmussl {

/// Channel-common modes estimated from one m x N channel matrix.
///
/// Complex-conjugate pole pairs occupy a single slot with omega >= 0; the
/// stored residue R is such that each stream is sum_k Re(R_k Z_k^n), i.e. a
/// pair's residue is twice the residue of its upper pole. Slots are ordered by
/// descending mean |R| across PMUs.
struct ModeSet {
    Channel channel = Channel::Vm;
    std::vector<double> sigma;   // damping factor, 1/s
    std::vector<double> omega;   // angular frequency, rad/s
    Matrix magnitude;            // m x p, |R_{k,i}|
    Matrix angle;                // m x p, theta_{k,i} in (-pi, pi]
    int configured_modes = 0;    // p requested
    int pencil_rank = 0;         // number of complex poles actually fitted

    int mode_count() const noexcept { return static_cast<int>(sigma.size()); }
    Index pmu_count() const noexcept { return magnitude.rows(); }
    std::complex<double> residue(Index pmu, int k) const {
        return std::polar(magnitude(pmu, k), angle(pmu, k));
    }
};

struct ExtractionConfig {
    int modes = 6;             // p
    int retained_pmus = 10;    // m'
    std::optional<int> pencil;  // L; defaults to floor(N / 2)
    bool detrend = true;
    /// Singular values below rank_tol * s_max are treated as zero.
    double rank_tol = 1e-9;

    int pencil_for(Index N) const { return pencil ? *pencil : static_cast<int>(N / 2); }
    void validate(Index pmu_count, Index sample_count) const;
};

/// Vertical stack of per-PMU Hankel blocks: H_i[a, b] = y_i(a + b),
/// shape (m (N - L)) x (L + 1).
Matrix build_block_hankel(const Matrix& Y, int L);

/// Matrix-pencil estimate of channel-common modes. The pencil order is the
/// configured p reduced to the numerical rank of the block Hankel matrix.
ModeSet estimate_modes(const Matrix& Y, const ExtractionConfig& cfg, double Ts,
                       Channel channel = Channel::Vm);

/// Per-PMU relative l2 error ||y_i - yhat_i|| / ||y_i|| of the modal
/// synthesis. `Y` should be the matrix the modes were fitted to (after any
/// detrending).
Vector reconstruction_error(const Matrix& Y, const ModeSet& modes, double Ts);

/// Mean-subtracts each row when cfg.detrend is set.
Matrix prepare_channel(const Matrix& Y, const ExtractionConfig& cfg);

/// Feature vector [F^{V_m}, F^{V_a}, F^{F}], each channel laid out as
/// [omega_1..p, sigma_1..p, then per retained PMU |R|_1..p, theta_1..p].
/// PMUs are retained by descending |R| of mode 1 (ties: lower index).
/// Slots beyond a channel's effective mode count are zero.
struct AssembledFeatures {
    Vector values;
    std::array<bool, 3> zero_filled{};  // per channel
};
AssembledFeatures assemble_features(const std::array<ModeSet, 3>& modesets, int modes,
                                    int retained_pmus);

/// PMU indices ranked for retention (descending |R| of mode 1).
std::vector<Index> rank_pmus(const ModeSet& ms);

struct EventFeatures {
    Vector values;
    std::array<ModeSet, 3> modesets;
    std::array<double, 3> mean_recon_error{};
    std::array<double, 3> max_recon_error{};
    std::array<bool, 3> zero_filled{};
};

/// Full per-event extraction over the three channels.
EventFeatures extract_event_features(const EventRecord& ev, const ExtractionConfig& cfg);

/// Extracts all events into a labeled dataset (labels from the records,
/// unlabeled records get -1). Throws ConfigError naming the event if m < m'.
FeatureDataset extract_dataset(std::span<const EventRecord> events, const ExtractionConfig& cfg,
                               std::vector<EventFeatures>* details = nullptr, int jobs = 1);

}  // namespace pmussl
