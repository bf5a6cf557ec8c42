#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "anomflow/timeseries.hpp"

namespace anomflow {

inline constexpr double kDefaultZeroGuard = 1e-9;

/// Mean absolute percentage error, in percent:
/// (100/n) * sum |p_i - o_i| / |o_i|. Any |o_i| <= epsilon is an error.
double mape(std::span<const double> predicted, std::span<const double> actual, double epsilon = kDefaultZeroGuard);

/// 100 - MAPE.
double accuracy(double mape_percent);

enum class Arm { with_outliers, outlier_adjusted };
std::string_view arm_name(Arm arm);
Arm parse_arm(std::string_view name);

/// Which actuals the adjusted arm is scored against.
enum class ScoreAgainst { adjusted, raw };

/// Grid key, ordered by (model, window, arm name).
struct CellKey {
    std::string model;
    std::size_t window = 0;
    Arm arm = Arm::with_outliers;

    friend bool operator<(const CellKey& a, const CellKey& b);
    friend bool operator==(const CellKey&, const CellKey&) = default;
};

struct GridMetadata {
    std::uint64_t seed = 0;
    std::string config_digest;
    std::string dataset_fingerprint;

    friend bool operator==(const GridMetadata&, const GridMetadata&) = default;
};

struct ExperimentGrid {
    std::map<CellKey, double> cells;  // MAPE percent
    GridMetadata metadata;

    /// Lowest MAPE over windows for one (model, arm).
    double best_over_windows(const std::string& model, Arm arm) const;
};

inline constexpr std::string_view kEnsembleModel = "ensemble";

struct CellReport {
    CellKey key;
    double mape_percent;
};

struct GridOptions {
    std::vector<std::size_t> windows{6, 9, 12, 15, 18};
    /// Preset names plus optionally "ensemble".
    std::vector<std::string> models{"gbt-a", "gbt-b", "gbt-c", "gbt-d", "sgd", "ensemble"};
    std::vector<Arm> arms{Arm::with_outliers, Arm::outlier_adjusted};
    std::size_t train_days = 21;
    std::size_t k = 5;
    std::uint64_t seed = 7;
    double epsilon = kDefaultZeroGuard;
    double ridge_lambda = 1e-3;
    ScoreAgainst score_against = ScoreAgainst::adjusted;
    std::size_t threads = 1;
    /// Called once per finished cell; calls are serialized.
    std::function<void(const CellReport&)> on_cell;
};

/// Canonical text of the options that influence results.
std::string describe_options(const GridOptions& opts);

ExperimentGrid run_grid(const TimeSeries& series, const GridOptions& opts);

/// Seed used for every fit in the (arm, window) slice of a grid.
std::uint64_t slice_seed(std::uint64_t seed, Arm arm, std::size_t window);

enum class GridFormat { csv, json };

std::string export_grid(const ExperimentGrid& grid, GridFormat format);
ExperimentGrid parse_grid_csv(std::string_view raw);
ExperimentGrid parse_grid_json(std::string_view raw);

/// CSV `timestamp,actual_gbps,predicted_gbps`; predicted[i] pairs with actual[offset + i]
/// and must cover the series to its end.
std::string export_plot_data(const TimeSeries& actual, std::span<const double> predicted, std::size_t offset);

std::string sha256_hex(std::string_view bytes);
/// Digest of the canonical CSV serialization.
std::string dataset_fingerprint(const TimeSeries& series);

}  // namespace anomflow
