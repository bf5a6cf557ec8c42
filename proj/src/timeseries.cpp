#include "anomflow/timeseries.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "anomflow/error.hpp"
#include "anomflow/text.hpp"

namespace anomflow {

namespace {

struct RawPoint {
    std::int64_t timestamp;
    double value;
};

std::string describe_ts(std::int64_t ts) { return std::to_string(ts); }

// Sorts, rejects duplicates, then checks (or fills) the cadence.
TimeSeries assemble(std::vector<RawPoint> points, const ParseOptions& opts, Unit unit) {
    if (points.empty()) throw ValidationError("empty series");
    if (opts.cadence_seconds <= 0) throw ConfigError("cadence_seconds must be positive");

    std::stable_sort(points.begin(), points.end(),
                     [](const RawPoint& a, const RawPoint& b) { return a.timestamp < b.timestamp; });

    std::vector<std::int64_t> ts;
    std::vector<double> vals;
    ts.reserve(points.size());
    vals.reserve(points.size());
    ts.push_back(points.front().timestamp);
    vals.push_back(points.front().value);
    for (std::size_t i = 1; i < points.size(); ++i) {
        const auto prev = points[i - 1].timestamp;
        const auto cur = points[i].timestamp;
        if (cur == prev) throw ValidationError("duplicate timestamp " + describe_ts(cur));
        const auto gap = cur - prev;
        if (gap != opts.cadence_seconds) {
            if (!opts.fill_gaps || gap % opts.cadence_seconds != 0) {
                std::ostringstream msg;
                msg << "non-uniform cadence: first gap between timestamps " << prev << " and " << cur
                    << " is " << gap << " s, expected " << opts.cadence_seconds << " s";
                throw ValidationError(msg.str());
            }
            for (auto t = prev + opts.cadence_seconds; t < cur; t += opts.cadence_seconds) {
                ts.push_back(t);
                vals.push_back(points[i].value);
            }
        }
        ts.push_back(cur);
        vals.push_back(points[i].value);
    }
    return TimeSeries(std::move(ts), std::move(vals), opts.cadence_seconds, unit);
}

int parse_fixed_digits(std::string_view s, std::size_t pos, std::size_t n, bool& ok) {
    if (pos + n > s.size()) {
        ok = false;
        return 0;
    }
    int v = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
        if (s[i] < '0' || s[i] > '9') {
            ok = false;
            return 0;
        }
        v = v * 10 + (s[i] - '0');
    }
    return v;
}

}  // namespace

TimeSeries::TimeSeries(std::vector<std::int64_t> timestamps, std::vector<double> values,
                       std::int64_t cadence_seconds, Unit unit)
    : timestamps_(std::move(timestamps)), values_(std::move(values)), cadence_(cadence_seconds), unit_(unit) {
    if (values_.empty()) throw ValidationError("empty series");
    if (timestamps_.size() != values_.size())
        throw ValidationError("timestamp and value counts differ");
    if (cadence_ <= 0) throw ValidationError("cadence_seconds must be positive");
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i]) || values_[i] < 0.0)
            throw ValidationError("value at index " + std::to_string(i) + " is negative or not finite");
        if (i > 0 && timestamps_[i] - timestamps_[i - 1] != cadence_)
            throw ValidationError("non-uniform cadence at index " + std::to_string(i));
    }
}

TimeSeries TimeSeries::slice(std::size_t begin, std::size_t end) const {
    if (begin >= end || end > size()) throw ValidationError("empty series");
    return TimeSeries({timestamps_.begin() + static_cast<std::ptrdiff_t>(begin),
                       timestamps_.begin() + static_cast<std::ptrdiff_t>(end)},
                      {values_.begin() + static_cast<std::ptrdiff_t>(begin),
                       values_.begin() + static_cast<std::ptrdiff_t>(end)},
                      cadence_, unit_);
}

TimeSeries TimeSeries::with_values(std::vector<double> values) const {
    return TimeSeries(timestamps_, std::move(values), cadence_, unit_);
}

std::int64_t parse_timestamp(std::string_view text) {
    text = text::trim(text);
    long long epoch = 0;
    if (text::parse_int64(text, epoch)) return epoch;

    // YYYY-MM-DDTHH:MM:SS
    bool ok = text.size() >= 19 && text[4] == '-' && text[7] == '-' &&
              (text[10] == 'T' || text[10] == 't' || text[10] == ' ') && text[13] == ':' && text[16] == ':';
    const int y = parse_fixed_digits(text, 0, 4, ok);
    const int mo = parse_fixed_digits(text, 5, 2, ok);
    const int d = parse_fixed_digits(text, 8, 2, ok);
    const int h = parse_fixed_digits(text, 11, 2, ok);
    const int mi = parse_fixed_digits(text, 14, 2, ok);
    const int s = parse_fixed_digits(text, 17, 2, ok);
    if (!ok) throw ParseError("unparseable timestamp '" + std::string(text) + "'");

    auto rest = text.substr(19);
    if (!rest.empty() && rest.front() == '.') {
        // Fractional seconds are truncated.
        std::size_t i = 1;
        while (i < rest.size() && rest[i] >= '0' && rest[i] <= '9') ++i;
        if (i == 1) throw ParseError("unparseable timestamp '" + std::string(text) + "'");
        rest.remove_prefix(i);
    }
    if (!(rest.empty() || rest == "Z" || rest == "z" || rest == "+00:00" || rest == "+0000"))
        throw ParseError("timestamp '" + std::string(text) + "' is not UTC");

    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 60)
        throw ParseError("invalid calendar timestamp '" + std::string(text) + "'");
    const auto days_since = sys_days{ymd}.time_since_epoch().count();
    return static_cast<std::int64_t>(days_since) * kSecondsPerDay + h * 3600 + mi * 60 + s;
}

TimeSeries parse_telemetry_json(std::string_view raw, const ParseOptions& opts) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(raw.begin(), raw.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_array()) throw ParseError("telemetry JSON must be an array of records");

    std::vector<RawPoint> points;
    points.reserve(doc.size());
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& rec = doc[i];
        const auto where = "record " + std::to_string(i);
        if (!rec.is_object()) throw ParseError(where + ": not an object");
        auto ts_it = rec.find("timestamp");
        auto bps_it = rec.find("bps");
        if (ts_it == rec.end()) throw ParseError(where + ": missing 'timestamp'");
        if (bps_it == rec.end()) throw ParseError(where + ": missing 'bps'");

        RawPoint p{};
        if (ts_it->is_number_integer()) {
            p.timestamp = ts_it->get<std::int64_t>();
        } else if (ts_it->is_string()) {
            try {
                p.timestamp = parse_timestamp(ts_it->get<std::string>());
            } catch (const ParseError& e) {
                throw ParseError(where + ": " + e.what());
            }
        } else {
            throw ParseError(where + ": 'timestamp' must be a string or integer");
        }
        if (!bps_it->is_number()) throw ParseError(where + ": 'bps' must be a number");
        p.value = bps_it->get<double>();
        if (!std::isfinite(p.value) || p.value < 0.0)
            throw ValidationError(where + ": 'bps' must be finite and non-negative");
        points.push_back(p);
    }
    return assemble(std::move(points), opts, Unit::bps);
}

TimeSeries parse_telemetry_csv(std::string_view raw, const ParseOptions& opts) {
    auto lines = text::split_lines(raw);
    if (lines.empty()) throw ParseError("missing header 'timestamp,bps'");
    auto header = text::trim(lines.front());
    if (header.size() >= 3 && header.substr(0, 3) == "\xEF\xBB\xBF") header.remove_prefix(3);
    Unit unit;
    if (header == "timestamp,bps") {
        unit = Unit::bps;
    } else if (header == "timestamp,gbps") {
        unit = Unit::gbps;
    } else {
        throw ParseError("missing header 'timestamp,bps'");
    }

    std::vector<RawPoint> points;
    points.reserve(lines.size() - 1);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto row_no = std::to_string(i + 1);  // 1-based, header is row 1
        if (text::trim(lines[i]).empty()) continue;
        auto fields = text::split(lines[i], ',');
        if (fields.size() != 2) throw ParseError("row " + row_no + ": expected 2 fields");
        RawPoint p{};
        try {
            p.timestamp = parse_timestamp(fields[0]);
        } catch (const ParseError& e) {
            throw ParseError("row " + row_no + ": " + e.what());
        }
        if (!text::parse_double(fields[1], p.value))
            throw ParseError("row " + row_no + ": unparseable value '" + std::string(fields[1]) + "'");
        if (!std::isfinite(p.value) || p.value < 0.0)
            throw ValidationError("row " + row_no + ": value must be finite and non-negative");
        points.push_back(p);
    }
    return assemble(std::move(points), opts, unit);
}

std::string serialize_csv(const TimeSeries& series) {
    std::string out = series.unit() == Unit::bps ? "timestamp,bps\n" : "timestamp,gbps\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        out += std::to_string(series.timestamps()[i]);
        out += ',';
        out += text::format_double(series.values()[i]);
        out += '\n';
    }
    return out;
}

TimeSeries drop_incomplete_tail(const TimeSeries& series, std::int64_t points_per_day) {
    if (points_per_day <= 0) throw ConfigError("points_per_day must be positive");
    const auto ppd = static_cast<std::size_t>(points_per_day);
    const auto keep = series.size() / ppd * ppd;
    if (keep == 0) throw ValidationError("no complete day");
    return series.slice(0, keep);
}

TimeSeries bps_to_gbps(const TimeSeries& series) {
    std::vector<double> vals(series.values());
    for (auto& v : vals) v /= 1e9;
    return TimeSeries(series.timestamps(), std::move(vals), series.cadence_seconds(), Unit::gbps);
}

SyntheticSeries generate_synthetic(const SynthConfig& cfg) {
    if (cfg.days <= 0) throw ConfigError("days must be positive");
    if (cfg.cadence_seconds <= 0 || kSecondsPerDay % cfg.cadence_seconds != 0)
        throw ConfigError("cadence_seconds must divide one day");
    if (!(cfg.base_gbps > 0.0)) throw ConfigError("base_gbps must be positive");
    if (!(cfg.diurnal_amplitude >= 0.0)) throw ConfigError("diurnal_amplitude must be >= 0");
    if (!(cfg.noise_std >= 0.0)) throw ConfigError("noise_std must be >= 0");
    if (!(cfg.spike_fraction >= 0.0 && cfg.spike_fraction <= 1.0))
        throw ConfigError("spike_fraction must be in [0,1]");
    if (!(cfg.spike_multiplier > 1.0)) throw ConfigError("spike_multiplier must be > 1");

    const auto n = static_cast<std::size_t>(cfg.days) * static_cast<std::size_t>(kSecondsPerDay / cfg.cadence_seconds);
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> noise(0.0, 1.0);

    std::vector<std::int64_t> ts(n);
    std::vector<double> vals(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto offset = static_cast<std::int64_t>(i) * cfg.cadence_seconds;
        ts[i] = cfg.start_epoch + offset;
        const double phase = 2.0 * std::numbers::pi * static_cast<double>(offset) / static_cast<double>(kSecondsPerDay);
        const double v = cfg.base_gbps + cfg.diurnal_amplitude * std::sin(phase) + cfg.noise_std * noise(rng);
        vals[i] = std::max(v, 0.0);
    }

    std::vector<bool> truth(n, false);
    const auto n_spikes = static_cast<std::size_t>(std::llround(cfg.spike_fraction * static_cast<double>(n)));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // Partial Fisher-Yates: the first n_spikes slots form the sample.
    for (std::size_t i = 0; i < n_spikes; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
        truth[idx[i]] = true;
        vals[idx[i]] *= cfg.spike_multiplier;
    }

    return {TimeSeries(std::move(ts), std::move(vals), cfg.cadence_seconds, Unit::gbps), std::move(truth)};
}

}  // namespace anomflow
