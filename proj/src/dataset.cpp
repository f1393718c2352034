#include "pmussl/dataset.hpp"

#include "csv.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <system_error>

namespace pmussl {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view class_name(EventClass c) noexcept {
    switch (c) {
        case EventClass::LL: return "LL";
        case EventClass::GL: return "GL";
        case EventClass::LT: return "LT";
        case EventClass::BF: return "BF";
    }
    return "?";
}

EventClass class_from_code(int code) {
    if (code < 1 || code > kClassCount)
        throw Error("invalid event class code " + std::to_string(code));
    return static_cast<EventClass>(code);
}

EventClass class_from_name(std::string_view name) {
    for (auto c : kAllClasses)
        if (class_name(c) == name) return c;
    throw Error("unknown event class '" + std::string(name) + "'");
}

std::string_view channel_name(Channel c) noexcept {
    switch (c) {
        case Channel::Vm: return "V_m";
        case Channel::Va: return "V_a";
        case Channel::F: return "F";
    }
    return "?";
}

Channel channel_from_name(std::string_view name) {
    for (auto c : kAllChannels)
        if (channel_name(c) == name) return c;
    throw Error("unknown channel '" + std::string(name) + "'");
}

std::string format_double(double v) {
    char buf[40];
    int n = std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf, static_cast<std::size_t>(n));
}

double parse_double(std::string_view s) {
    double v = 0.0;
    if (s == "nan" || s == "NaN") return std::nan("");
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw IoError("non-numeric value '" + std::string(s) + "'");
    return v;
}

namespace {

int parse_int(std::string_view s) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw IoError("non-integer value '" + std::string(s) + "'");
    return v;
}

}  // namespace

// ---------------------------------------------------------------- events

void EventRecord::validate() const {
    if (event_id.empty()) throw Error("event has empty event_id");
    if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz))
        throw Error("event '" + event_id + "': sample_rate_hz must be > 0");
    if (data.rows() == 0 || data.rows() % kChannelCount != 0)
        throw ShapeError("event '" + event_id + "': row count " + std::to_string(data.rows()) +
                         " not divisible by " + std::to_string(kChannelCount));
    if (data.cols() == 0) throw ShapeError("event '" + event_id + "': no samples");
    if (!data.allFinite()) throw Error("event '" + event_id + "': non-finite sample value");
}

bool EventRecord::operator==(const EventRecord& o) const {
    return event_id == o.event_id && label == o.label && sample_rate_hz == o.sample_rate_hz &&
           data.rows() == o.data.rows() && data.cols() == o.data.cols() && data == o.data &&
           meta == o.meta;
}

fs::path write_events(std::span<const EventRecord> records, const fs::path& dir) {
    if (records.empty()) throw Error("write_events: no records");
    std::set<std::string> ids;
    for (const auto& r : records) {
        r.validate();
        if (!detail::safe_token(r.event_id))
            throw Error("event_id '" + r.event_id + "' contains characters unsafe for filenames");
        if (!ids.insert(r.event_id).second) throw Error("duplicate event_id '" + r.event_id + "'");
    }

    std::error_code ec;
    fs::create_directories(dir / "events", ec);
    if (ec) throw IoError("cannot create '" + (dir / "events").string() + "': " + ec.message());

    json entries = json::array();
    for (const auto& r : records) {
        const std::string rel = "events/" + r.event_id + ".csv";
        auto out = detail::open_out(dir / rel);
        out << "channel,pmu_index,sample_index,value\n";
        const Index m = r.pmu_count();
        for (auto c : kAllChannels) {
            auto block = r.channel_block(c);
            for (Index i = 0; i < m; ++i)
                for (Index n = 0; n < r.sample_count(); ++n)
                    out << channel_name(c) << ',' << i << ',' << n << ','
                        << format_double(block(i, n)) << '\n';
        }
        if (!out) throw IoError("write failed for '" + (dir / rel).string() + "'");

        json e;
        e["event_id"] = r.event_id;
        e["file"] = rel;
        e["class"] = r.label ? json(std::string(class_name(*r.label))) : json(nullptr);
        e["sample_rate_hz"] = r.sample_rate_hz;
        e["m"] = r.pmu_count();
        e["N"] = r.sample_count();
        e["meta"] = r.meta;
        entries.push_back(std::move(e));
    }

    json manifest;
    manifest["format"] = "pmussl-events/1";
    manifest["events"] = std::move(entries);
    const fs::path mpath = dir / "manifest.json";
    auto out = detail::open_out(mpath);
    out << manifest.dump(1) << '\n';
    if (!out) throw IoError("write failed for '" + mpath.string() + "'");
    return mpath;
}

std::vector<EventRecord> read_events(const fs::path& manifest_path) {
    json manifest;
    {
        auto in = detail::open_in(manifest_path);
        try {
            in >> manifest;
        } catch (const json::exception& e) {
            throw IoError("malformed manifest '" + manifest_path.string() + "': " + e.what());
        }
    }
    if (!manifest.contains("events") || !manifest["events"].is_array())
        throw IoError("manifest '" + manifest_path.string() + "' has no 'events' array");

    const fs::path base = manifest_path.parent_path();
    std::vector<EventRecord> out;
    out.reserve(manifest["events"].size());
    for (const auto& e : manifest["events"]) {
        EventRecord r;
        try {
            r.event_id = e.at("event_id").get<std::string>();
            const auto& cls = e.at("class");
            if (!cls.is_null()) r.label = class_from_name(cls.get<std::string>());
            r.sample_rate_hz = e.at("sample_rate_hz").get<double>();
            const auto m = e.at("m").get<Index>();
            const auto N = e.at("N").get<Index>();
            if (m <= 0 || N <= 0) throw ShapeError("event '" + r.event_id + "': bad m/N");
            if (e.contains("meta")) r.meta = e["meta"].get<std::map<std::string, std::string>>();
            const fs::path file = base / e.at("file").get<std::string>();
            if (!fs::exists(file))
                throw IoError("event '" + r.event_id + "': missing data file '" + file.string() + "'");

            auto in = detail::open_in(file);
            std::string line;
            std::getline(in, line);
            if (detail::chomp(line) != "channel,pmu_index,sample_index,value")
                throw IoError("event '" + r.event_id + "': bad CSV header");

            r.data = Matrix::Constant(kChannelCount * m, N, std::nan(""));
            Index rows_read = 0;
            while (std::getline(in, line)) {
                auto l = detail::chomp(line);
                if (l.empty()) continue;
                auto f = detail::split_csv(l);
                if (f.size() != 4) throw IoError("event '" + r.event_id + "': malformed row");
                const auto ch = static_cast<Index>(channel_from_name(f[0]));
                const int i = parse_int(f[1]);
                const int n = parse_int(f[2]);
                if (i < 0 || i >= m || n < 0 || n >= N)
                    throw ShapeError("event '" + r.event_id + "': index out of declared shape");
                r.data(ch * m + i, n) = parse_double(f[3]);
                ++rows_read;
            }
            if (rows_read != kChannelCount * m * N)
                throw ShapeError("event '" + r.event_id + "': expected " +
                                 std::to_string(kChannelCount * m * N) + " values, read " +
                                 std::to_string(rows_read));
        } catch (const json::exception& ex) {
            throw IoError("manifest entry malformed: " + std::string(ex.what()));
        } catch (const Error& ex) {
            const std::string msg = ex.what();
            if (!r.event_id.empty() && msg.find(r.event_id) == std::string::npos)
                throw IoError("event '" + r.event_id + "': " + msg);
            throw;
        }
        r.validate();
        out.push_back(std::move(r));
    }
    return out;
}

// -------------------------------------------------------------- features

std::vector<std::string> feature_names(int modes, int retained_pmus) {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(feature_dimension(modes, retained_pmus)));
    for (auto c : kAllChannels) {
        std::string ch(channel_name(c));
        ch.erase(std::remove(ch.begin(), ch.end(), '_'), ch.end());
        for (int k = 1; k <= modes; ++k) names.push_back(ch + "_omega_" + std::to_string(k));
        for (int k = 1; k <= modes; ++k) names.push_back(ch + "_sigma_" + std::to_string(k));
        for (int j = 1; j <= retained_pmus; ++j) {
            const std::string pre = ch + "_pmu" + std::to_string(j);
            for (int k = 1; k <= modes; ++k) names.push_back(pre + "_mag_" + std::to_string(k));
            for (int k = 1; k <= modes; ++k) names.push_back(pre + "_ang_" + std::to_string(k));
        }
    }
    return names;
}

void FeatureDataset::validate() const {
    const auto n = static_cast<std::size_t>(X.rows());
    if (Y.size() != n || event_ids.size() != n)
        throw ShapeError("feature dataset: X, Y and event_ids lengths differ");
    if (feature_names.size() != static_cast<std::size_t>(X.cols()))
        throw ShapeError("feature dataset: feature_names length differs from column count");
    if (modes_per_channel > 0 &&
        X.cols() != feature_dimension(modes_per_channel, retained_pmus))
        throw ShapeError("feature dataset: d != 2p|C|(m'+1)");
    for (int y : Y)
        if (y != kUnlabeled && (y < 1 || y > kClassCount))
            throw Error("feature dataset: label " + std::to_string(y) + " is not a class code");
    if (!X.allFinite()) throw Error("feature dataset: non-finite feature value");
}

bool FeatureDataset::operator==(const FeatureDataset& o) const {
    return X.rows() == o.X.rows() && X.cols() == o.X.cols() && X == o.X && Y == o.Y &&
           feature_names == o.feature_names && event_ids == o.event_ids &&
           modes_per_channel == o.modes_per_channel && retained_pmus == o.retained_pmus;
}

void write_features(const FeatureDataset& ds, const fs::path& path) {
    ds.validate();
    for (const auto& id : ds.event_ids)
        if (!detail::safe_token(id)) throw Error("event_id '" + id + "' not CSV-safe");
    for (const auto& nm : ds.feature_names)
        if (!detail::safe_token(nm)) throw Error("feature name '" + nm + "' not CSV-safe");

    auto out = detail::open_out(path);
    out << "event_id,label";
    for (const auto& nm : ds.feature_names) out << ',' << nm;
    out << '\n';
    for (Index i = 0; i < ds.X.rows(); ++i) {
        out << ds.event_ids[static_cast<std::size_t>(i)] << ',' << ds.Y[static_cast<std::size_t>(i)];
        for (Index j = 0; j < ds.X.cols(); ++j) out << ',' << format_double(ds.X(i, j));
        out << '\n';
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

FeatureDataset read_features(const fs::path& path) {
    auto in = detail::open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("'" + path.string() + "' is empty");
    auto header = detail::split_csv(detail::chomp(line));
    if (header.size() < 2 || header[0] != "event_id" || header[1] != "label")
        throw IoError("'" + path.string() + "': header must start with event_id,label");

    FeatureDataset ds;
    for (std::size_t j = 2; j < header.size(); ++j) ds.feature_names.emplace_back(header[j]);
    const auto d = static_cast<Index>(ds.feature_names.size());

    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        auto l = detail::chomp(line);
        if (l.empty()) continue;
        auto f = detail::split_csv(l);
        if (static_cast<Index>(f.size()) != d + 2)
            throw IoError("'" + path.string() + "' line " + std::to_string(lineno) +
                          ": column count differs from header");
        ds.event_ids.emplace_back(f[0]);
        try {
            ds.Y.push_back(parse_int(f[1]));
            std::vector<double> row(static_cast<std::size_t>(d));
            for (Index j = 0; j < d; ++j) row[static_cast<std::size_t>(j)] = parse_double(f[static_cast<std::size_t>(j) + 2]);
            rows.push_back(std::move(row));
        } catch (const IoError& e) {
            throw IoError("'" + path.string() + "' line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    ds.X.resize(static_cast<Index>(rows.size()), d);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (Index j = 0; j < d; ++j) ds.X(static_cast<Index>(i), j) = rows[i][static_cast<std::size_t>(j)];

    // recover (p, m') when the columns follow the modal layout
    int p = 0;
    while (p < static_cast<int>(ds.feature_names.size()) &&
           ds.feature_names[static_cast<std::size_t>(p)] == "Vm_omega_" + std::to_string(p + 1))
        ++p;
    if (p > 0 && d % (2 * p * kChannelCount) == 0) {
        const int mprime = static_cast<int>(d / (2 * p * kChannelCount)) - 1;
        if (mprime >= 1 && feature_names(p, mprime) == ds.feature_names) {
            ds.modes_per_channel = p;
            ds.retained_pmus = mprime;
        }
    }
    ds.validate();
    return ds;
}

}  // namespace pmussl
