#include "anomflow/windowing.hpp"

#include "anomflow/error.hpp"

namespace anomflow {

SupervisedDataset SupervisedDataset::slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > size()) throw InvariantError("dataset slice out of range");
    SupervisedDataset out;
    out.features = features.slice_rows(begin, end);
    out.targets.assign(targets.begin() + static_cast<std::ptrdiff_t>(begin),
                       targets.begin() + static_cast<std::ptrdiff_t>(end));
    out.window_length = window_length;
    out.origin_index = origin_index + begin;
    return out;
}

SupervisedDataset make_supervised(const TimeSeries& series, std::size_t window_length) {
    if (window_length == 0) throw ConfigError("window length must be positive");
    const auto n = series.size();
    if (n <= window_length) throw ValidationError("window too long");

    const auto& v = series.values();
    const auto samples = n - window_length;
    SupervisedDataset ds;
    ds.features = Matrix(samples, window_length);
    ds.targets.resize(samples);
    ds.window_length = window_length;
    ds.origin_index = 0;
    for (std::size_t i = 0; i < samples; ++i) {
        auto row = ds.features.row(i);
        for (std::size_t j = 0; j < window_length; ++j) row[j] = v[i + j];
        ds.targets[i] = v[i + window_length];
    }
    return ds;
}

SeriesSplit chronological_split(const TimeSeries& series, std::size_t train_days, std::size_t points_per_day) {
    const auto cut = train_days * points_per_day;
    if (cut == 0 || cut >= series.size())
        throw ValidationError("insufficient length: " + std::to_string(series.size()) +
                              " points cannot hold " + std::to_string(train_days) + " training days plus a test period");
    return {series.slice(0, cut), series.slice(cut, series.size())};
}

DatasetSplit split_by_target_index(const SupervisedDataset& data, std::size_t boundary) {
    // Sample i targets series index origin + i + W.
    const auto first_target = data.origin_index + data.window_length;
    if (boundary <= first_target || boundary >= first_target + data.size())
        throw ValidationError("split boundary leaves an empty train or test set");
    const auto cut = boundary - first_target;
    return {data.slice(0, cut), data.slice(cut, data.size())};
}

FoldPlan expanding_folds(std::size_t n_samples, std::size_t k) {
    if (k < 2) throw ConfigError("fold count k must be >= 2");
    if (n_samples < 2 * k)
        throw ValidationError("n_samples too small: " + std::to_string(n_samples) + " samples for " +
                              std::to_string(k) + " folds");
    const auto blocks = k + 1;
    const auto base = n_samples / blocks;
    const auto rem = n_samples % blocks;

    std::vector<std::size_t> ends(blocks);
    std::size_t pos = 0;
    for (std::size_t b = 0; b < blocks; ++b) {
        pos += base + (b < rem ? 1 : 0);
        ends[b] = pos;
    }

    FoldPlan plan{k, n_samples, {}};
    for (std::size_t j = 0; j < k; ++j) plan.folds.push_back({ends[j], ends[j], ends[j + 1]});
    return plan;
}

}  // namespace anomflow
