#pragma once

#include "pmussl/experiment.hpp"
#include "pmussl/modal_features.hpp"
#include "pmussl/synth_events.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace pmussl {

/// JSON configuration with optional top-level sections:
///   generator  { m*, seed*, sample_rate_hz, t_s, load_scale: [lo, hi],
///                fluctuation, snr_db (null = noiseless), t_clr }
///   counts     { LL, GL, LT, BF }
///   signatures { <class>: { modes: [...], channel_step, step_jitter,
///                fault_dip, spatial_decay } }   (replaces the default per class)
///   extraction { p, m_prime, L (null = N/2), detrend, rank_tol }
///   plan       { n_K*, n_Q, n_L*, delta_U*, n_R*, B_min*, B_max*, master_seed*,
///                engines, classifiers, combinations, grids, steps, cv_folds,
///                self_training_batch, max_tries, ls_tol, ls_max_iter,
///                tsvm_balance }
/// Starred keys are required when their section is present. Unknown keys are
/// rejected with ConfigError.
struct PipelineConfig {
    bool has_generator = false;
    bool has_counts = false;
    bool has_extraction = false;
    bool has_plan = false;

    GeneratorConfig generator;
    std::map<EventClass, int> counts;
    SignatureMap signatures = default_signatures();
    ExtractionConfig extraction;
    ExperimentPlan plan;

    /// Throws ConfigError naming the section when it is absent.
    void require(std::string_view section) const;
};

PipelineConfig parse_config(std::string_view json_text);
PipelineConfig load_config(const std::filesystem::path& path);

/// Fully resolved configuration (defaults applied) as pretty JSON.
std::string resolved_config_json(const PipelineConfig& cfg);

}  // namespace pmussl
