#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace anomflow {

enum class Unit { bps, gbps };

inline constexpr std::int64_t kDefaultCadenceSeconds = 300;
inline constexpr std::int64_t kSecondsPerDay = 86400;

/// Uniformly spaced traffic series. Timestamps are epoch seconds UTC.
///
/// Construction validates: length >= 1, strictly increasing timestamps with
/// a constant step of `cadence_seconds`, finite non-negative values.
class TimeSeries {
public:
    TimeSeries(std::vector<std::int64_t> timestamps, std::vector<double> values,
               std::int64_t cadence_seconds = kDefaultCadenceSeconds, Unit unit = Unit::gbps);

    std::size_t size() const noexcept { return values_.size(); }
    const std::vector<std::int64_t>& timestamps() const noexcept { return timestamps_; }
    const std::vector<double>& values() const noexcept { return values_; }
    std::int64_t cadence_seconds() const noexcept { return cadence_; }
    Unit unit() const noexcept { return unit_; }
    std::int64_t points_per_day() const noexcept { return kSecondsPerDay / cadence_; }

    /// Points [begin, end). Throws ValidationError on an empty range.
    TimeSeries slice(std::size_t begin, std::size_t end) const;
    /// Same timestamps, new values (validated).
    TimeSeries with_values(std::vector<double> values) const;

    friend bool operator==(const TimeSeries&, const TimeSeries&) = default;

private:
    std::vector<std::int64_t> timestamps_;
    std::vector<double> values_;
    std::int64_t cadence_;
    Unit unit_;
};

struct ParseOptions {
    std::int64_t cadence_seconds = kDefaultCadenceSeconds;
    /// Insert points at missing cadence slots, each taking the value of the
    /// next observed point, instead of rejecting the gap.
    bool fill_gaps = false;
};

/// JSON array of records with `timestamp` (ISO-8601 UTC string or epoch
/// seconds) and `bps`. Other fields are ignored. Result is bps-valued.
TimeSeries parse_telemetry_json(std::string_view raw, const ParseOptions& opts = {});

/// CSV with header `timestamp,bps` (or `timestamp,gbps` for already-rescaled
/// series). Unit of the result follows the header.
TimeSeries parse_telemetry_csv(std::string_view raw, const ParseOptions& opts = {});

/// Canonical CSV: epoch-second timestamps, shortest round-trip values.
std::string serialize_csv(const TimeSeries& series);

/// Epoch seconds from `YYYY-MM-DDTHH:MM:SS[.fff][Z|+00:00]` or a plain integer.
std::int64_t parse_timestamp(std::string_view text);

/// Longest prefix whose length is a multiple of `points_per_day`.
TimeSeries drop_incomplete_tail(const TimeSeries& series, std::int64_t points_per_day);

TimeSeries bps_to_gbps(const TimeSeries& series);

struct SynthConfig {
    int days = 30;
    double base_gbps = 10.0;
    double diurnal_amplitude = 4.0;
    double noise_std = 0.2;
    double spike_fraction = 0.01;
    double spike_multiplier = 5.0;
    std::uint64_t seed = 7;
    std::int64_t cadence_seconds = kDefaultCadenceSeconds;
    std::int64_t start_epoch = 1609459200;  // 2021-01-01T00:00:00Z
};

struct SyntheticSeries {
    TimeSeries series;
    std::vector<bool> truth_mask;
};

/// Diurnal sine plus gaussian noise, clamped at zero, with round(fraction*n)
/// seeded spike positions multiplied by `spike_multiplier`.
SyntheticSeries generate_synthetic(const SynthConfig& cfg);

}  // namespace anomflow
