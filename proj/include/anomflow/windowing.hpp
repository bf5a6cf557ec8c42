#pragma once

#include <cstddef>
#include <vector>

#include "anomflow/matrix.hpp"
#include "anomflow/timeseries.hpp"

namespace anomflow {

/// Lag-feature matrix and next-step targets. Row i holds
/// series[origin+i .. origin+i+W) and targets[i] = series[origin+i+W].
struct SupervisedDataset {
    Matrix features;
    std::vector<double> targets;
    std::size_t window_length = 0;
    std::size_t origin_index = 0;

    std::size_t size() const noexcept { return targets.size(); }

    /// Samples [begin, end); origin shifts accordingly.
    SupervisedDataset slice(std::size_t begin, std::size_t end) const;
};

SupervisedDataset make_supervised(const TimeSeries& series, std::size_t window_length);

struct SeriesSplit {
    TimeSeries train;
    TimeSeries test;
};

/// First train_days * points_per_day points vs the remainder, unshuffled.
SeriesSplit chronological_split(const TimeSeries& series, std::size_t train_days, std::size_t points_per_day);

struct DatasetSplit {
    SupervisedDataset train;
    SupervisedDataset test;
};

/// Splits samples by the series index of their target: targets before
/// `boundary` train, the rest test. Test lags may reach back into the
/// training period, so the test set covers every point from `boundary` on.
DatasetSplit split_by_target_index(const SupervisedDataset& data, std::size_t boundary);

struct Fold {
    std::size_t train_end;   // train range is [0, train_end)
    std::size_t test_start;  // == train_end
    std::size_t test_end;
};

struct FoldPlan {
    std::size_t k = 0;
    std::size_t n_samples = 0;
    std::vector<Fold> folds;
};

/// Rolling-origin folds: k+1 contiguous blocks (remainder to the earliest
/// blocks); fold j trains on blocks 0..j and tests on block j+1.
FoldPlan expanding_folds(std::size_t n_samples, std::size_t k);

}  // namespace anomflow
