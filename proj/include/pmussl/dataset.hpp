#pragma once

#include "pmussl/common.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pmussl {

enum class EventClass : int { LL = 1, GL = 2, LT = 3, BF = 4 };

inline constexpr std::array<EventClass, 4> kAllClasses{EventClass::LL, EventClass::GL,
                                                       EventClass::LT, EventClass::BF};
inline constexpr int kClassCount = 4;

constexpr int class_code(EventClass c) noexcept { return static_cast<int>(c); }
std::string_view class_name(EventClass c) noexcept;
EventClass class_from_code(int code);
EventClass class_from_name(std::string_view name);

enum class Channel : int { Vm = 0, Va = 1, F = 2 };

inline constexpr std::array<Channel, 3> kAllChannels{Channel::Vm, Channel::Va, Channel::F};
inline constexpr int kChannelCount = 3;

std::string_view channel_name(Channel c) noexcept;  // "V_m", "V_a", "F"
Channel channel_from_name(std::string_view name);

/// One simulated event. `data` holds |C|*m rows: the m V_m rows, then V_a,
/// then F; each row is one PMU stream of N samples.
struct EventRecord {
    std::string event_id;
    std::optional<EventClass> label;
    double sample_rate_hz = 30.0;
    Matrix data;
    std::map<std::string, std::string> meta;

    Index pmu_count() const noexcept { return data.rows() / kChannelCount; }
    Index sample_count() const noexcept { return data.cols(); }

    /// m x N block for one channel.
    auto channel_block(Channel c) const {
        const Index m = pmu_count();
        return data.middleRows(static_cast<Index>(c) * m, m);
    }

    /// Throws ShapeError / Error when an invariant is violated.
    void validate() const;

    bool operator==(const EventRecord&) const;
};

/// Writes one long-format CSV per event plus `manifest.json` into `dir`.
/// Returns the manifest path.
std::filesystem::path write_events(std::span<const EventRecord> records,
                                   const std::filesystem::path& dir);

std::vector<EventRecord> read_events(const std::filesystem::path& manifest);

/// Feature matrix with one row per event.
struct FeatureDataset {
    Matrix X;
    Labels Y;
    std::vector<std::string> feature_names;
    std::vector<std::string> event_ids;
    // extraction parameters the layout was built with
    int modes_per_channel = 0;
    int retained_pmus = 0;

    Index size() const noexcept { return X.rows(); }
    Index dim() const noexcept { return X.cols(); }

    void validate() const;
    bool operator==(const FeatureDataset&) const;
};

/// Feature dimension d = 2 p |C| (m' + 1).
constexpr int feature_dimension(int modes, int retained_pmus) noexcept {
    return 2 * modes * kChannelCount * (retained_pmus + 1);
}

/// Column names in assembly order for (p, m').
std::vector<std::string> feature_names(int modes, int retained_pmus);

void write_features(const FeatureDataset& ds, const std::filesystem::path& path);
FeatureDataset read_features(const std::filesystem::path& path);

/// Formats with 17 significant digits (exact double round trip).
std::string format_double(double v);
/// Strict full-string parse; throws IoError on junk.
double parse_double(std::string_view s);

}  // namespace pmussl
