#include <algorithm>
#include <cmath>
#include <numeric>

#include "anomflow/error.hpp"
#include "anomflow/regressors.hpp"

namespace anomflow {

namespace detail {

double split_gain(double sum_left, std::size_t n_left, double sum_total, std::size_t n_total) {
    const double sum_right = sum_total - sum_left;
    const auto n_right = n_total - n_left;
    const double nl = static_cast<double>(n_left);
    const double nr = static_cast<double>(n_right);
    const double n = static_cast<double>(n_total);
    return (sum_left * sum_left / nl + sum_right * sum_right / nr - sum_total * sum_total / n) / n;
}

bool is_meaningful_gain(double gain, double mean_square) { return gain > 1e-12 * mean_square; }

std::optional<SplitCandidate> best_split_over_groups(std::span<const ValueGroup> groups, double sum_total,
                                                     std::size_t n_total, double mean_square,
                                                     std::size_t min_samples_leaf) {
    std::optional<SplitCandidate> best;
    double sum_left = 0.0;
    std::size_t n_left = 0;
    for (std::size_t g = 0; g + 1 < groups.size(); ++g) {
        sum_left += groups[g].sum;
        n_left += groups[g].count;
        if (n_left < min_samples_leaf) continue;
        if (n_total - n_left < min_samples_leaf) break;
        const double gain = split_gain(sum_left, n_left, sum_total, n_total);
        if (!is_meaningful_gain(gain, mean_square)) continue;
        if (!best || gain > best->gain) {
            double threshold = 0.5 * (groups[g].hi + groups[g + 1].lo);
            // Adjacent doubles: the midpoint can round up onto the right value.
            if (threshold >= groups[g + 1].lo) threshold = groups[g].hi;
            best = SplitCandidate{threshold, gain};
        }
    }
    return best;
}

}  // namespace detail

namespace {

using detail::ValueGroup;

struct NodeStats {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t count = 0;
};

struct BestSplit {
    int feature = -1;
    SplitCandidate split{0.0, 0.0};
};

// Per-fit state shared by all boosting stages.
class TreeGrower {
public:
    TreeGrower(const SupervisedDataset& data, const GbtConfig& cfg) : cfg_(cfg), n_(data.size()), w_(data.window_length) {
        columns_.assign(w_, std::vector<double>(n_));
        for (std::size_t i = 0; i < n_; ++i) {
            auto row = data.features.row(i);
            for (std::size_t f = 0; f < w_; ++f) columns_[f][i] = row[f];
        }
        if (cfg_.split_mode == SplitMode::exact) {
            sorted_.assign(w_, std::vector<std::size_t>(n_));
            for (std::size_t f = 0; f < w_; ++f) {
                auto& idx = sorted_[f];
                std::iota(idx.begin(), idx.end(), std::size_t{0});
                const auto& col = columns_[f];
                std::stable_sort(idx.begin(), idx.end(), [&col](std::size_t a, std::size_t b) { return col[a] < col[b]; });
            }
        } else {
            bins_.assign(w_, std::vector<std::uint32_t>(n_));
            for (std::size_t f = 0; f < w_; ++f) {
                const auto& col = columns_[f];
                const auto [lo_it, hi_it] = std::minmax_element(col.begin(), col.end());
                const double lo = *lo_it;
                const double width = (*hi_it - lo) / static_cast<double>(cfg_.n_bins);
                for (std::size_t i = 0; i < n_; ++i) {
                    std::size_t b = 0;
                    if (width > 0.0) {
                        b = static_cast<std::size_t>((col[i] - lo) / width);
                        b = std::min(b, cfg_.n_bins - 1);
                    }
                    bins_[f][i] = static_cast<std::uint32_t>(b);
                }
            }
        }
        node_of_.resize(n_);
    }

    /// Fits one tree to `residuals`; writes each sample's leaf value to `leaf_values`.
    RegressionTree grow(const std::vector<double>& residuals, std::vector<double>& leaf_values) {
        RegressionTree tree;
        tree.nodes.push_back({});
        std::fill(node_of_.begin(), node_of_.end(), 0);

        std::vector<int> open{0};
        for (std::size_t depth = 0; depth < cfg_.max_depth && !open.empty(); ++depth) {
            std::vector<int> slot_of(tree.nodes.size(), -1);
            for (std::size_t s = 0; s < open.size(); ++s) slot_of[static_cast<std::size_t>(open[s])] = static_cast<int>(s);

            std::vector<NodeStats> stats(open.size());
            for (std::size_t i = 0; i < n_; ++i) {
                const int s = slot_of[static_cast<std::size_t>(node_of_[i])];
                if (s < 0) continue;
                auto& st = stats[static_cast<std::size_t>(s)];
                st.sum += residuals[i];
                st.sum_sq += residuals[i] * residuals[i];
                ++st.count;
            }

            std::vector<BestSplit> best(open.size());
            std::vector<std::vector<ValueGroup>> groups(open.size());
            for (std::size_t f = 0; f < w_; ++f) {
                build_groups(f, residuals, slot_of, groups);
                for (std::size_t s = 0; s < open.size(); ++s) {
                    const auto& st = stats[s];
                    if (st.count < 2 * cfg_.min_samples_leaf) continue;
                    const double mean_square = st.sum_sq / static_cast<double>(st.count);
                    auto cand = detail::best_split_over_groups(groups[s], st.sum, st.count, mean_square,
                                                               cfg_.min_samples_leaf);
                    // Features are visited in ascending order, so only a strictly
                    // larger gain displaces an earlier feature.
                    if (cand && (best[s].feature < 0 || cand->gain > best[s].split.gain))
                        best[s] = {static_cast<int>(f), *cand};
                }
            }

            std::vector<int> next_open;
            std::vector<int> left_child(open.size(), -1);
            for (std::size_t s = 0; s < open.size(); ++s) {
                if (best[s].feature < 0) continue;
                const int id = open[s];
                const int l = static_cast<int>(tree.nodes.size());
                tree.nodes.push_back({});
                tree.nodes.push_back({});
                auto& node = tree.nodes[static_cast<std::size_t>(id)];
                node.feature = best[s].feature;
                node.threshold = best[s].split.threshold;
                node.left = l;
                node.right = l + 1;
                left_child[s] = l;
                next_open.push_back(l);
                next_open.push_back(l + 1);
            }
            for (std::size_t i = 0; i < n_; ++i) {
                const int s = slot_of[static_cast<std::size_t>(node_of_[i])];
                if (s < 0 || left_child[static_cast<std::size_t>(s)] < 0) continue;
                const auto& node = tree.nodes[static_cast<std::size_t>(node_of_[i])];
                const double x = columns_[static_cast<std::size_t>(node.feature)][i];
                node_of_[i] = x <= node.threshold ? node.left : node.right;
            }
            open = std::move(next_open);
        }

        // Leaf value = mean residual of the samples it holds.
        std::vector<double> sums(tree.nodes.size(), 0.0);
        std::vector<std::size_t> counts(tree.nodes.size(), 0);
        for (std::size_t i = 0; i < n_; ++i) {
            sums[static_cast<std::size_t>(node_of_[i])] += residuals[i];
            ++counts[static_cast<std::size_t>(node_of_[i])];
        }
        for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
            auto& node = tree.nodes[id];
            if (node.is_leaf() && counts[id] > 0) node.value = sums[id] / static_cast<double>(counts[id]);
        }
        leaf_values.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) leaf_values[i] = tree.nodes[static_cast<std::size_t>(node_of_[i])].value;
        return tree;
    }

private:
    void build_groups(std::size_t f, const std::vector<double>& residuals, const std::vector<int>& slot_of,
                      std::vector<std::vector<ValueGroup>>& groups) {
        for (auto& g : groups) g.clear();
        const auto& col = columns_[f];
        if (cfg_.split_mode == SplitMode::exact) {
            for (std::size_t i : sorted_[f]) {
                const int s = slot_of[static_cast<std::size_t>(node_of_[i])];
                if (s < 0) continue;
                auto& gs = groups[static_cast<std::size_t>(s)];
                if (gs.empty() || col[i] != gs.back().hi) {
                    gs.push_back({col[i], col[i], residuals[i], 1});
                } else {
                    gs.back().sum += residuals[i];
                    ++gs.back().count;
                }
            }
            return;
        }

        const auto n_bins = cfg_.n_bins;
        hist_.assign(groups.size() * n_bins, ValueGroup{0.0, 0.0, 0.0, 0});
        const auto& bins = bins_[f];
        for (std::size_t i = 0; i < n_; ++i) {
            const int s = slot_of[static_cast<std::size_t>(node_of_[i])];
            if (s < 0) continue;
            auto& h = hist_[static_cast<std::size_t>(s) * n_bins + bins[i]];
            if (h.count == 0) {
                h = {col[i], col[i], residuals[i], 1};
            } else {
                h.lo = std::min(h.lo, col[i]);
                h.hi = std::max(h.hi, col[i]);
                h.sum += residuals[i];
                ++h.count;
            }
        }
        for (std::size_t s = 0; s < groups.size(); ++s)
            for (std::size_t b = 0; b < n_bins; ++b)
                if (const auto& h = hist_[s * n_bins + b]; h.count > 0) groups[s].push_back(h);
    }

    const GbtConfig& cfg_;
    std::size_t n_;
    std::size_t w_;
    std::vector<std::vector<double>> columns_;
    std::vector<std::vector<std::size_t>> sorted_;
    std::vector<std::vector<std::uint32_t>> bins_;
    std::vector<int> node_of_;
    std::vector<ValueGroup> hist_;
};

void validate(const GbtConfig& cfg) {
    if (!(cfg.learning_rate > 0.0 && cfg.learning_rate <= 1.0)) throw ConfigError("learning_rate must be in (0,1]");
    if (cfg.max_depth == 0) throw ConfigError("max_depth must be positive");
    if (cfg.min_samples_leaf == 0) throw ConfigError("min_samples_leaf must be positive");
    if (cfg.split_mode == SplitMode::histogram && cfg.n_bins < 2) throw ConfigError("n_bins must be >= 2");
}

}  // namespace

double RegressionTree::predict(std::span<const double> x) const {
    std::size_t id = 0;
    while (!nodes[id].is_leaf()) {
        const auto& node = nodes[id];
        id = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right);
    }
    return nodes[id].value;
}

std::size_t RegressionTree::depth() const {
    std::vector<std::size_t> d(nodes.size(), 0);
    std::size_t deepest = 0;
    for (std::size_t id = 0; id < nodes.size(); ++id) {
        deepest = std::max(deepest, d[id]);
        if (!nodes[id].is_leaf()) {
            d[static_cast<std::size_t>(nodes[id].left)] = d[id] + 1;
            d[static_cast<std::size_t>(nodes[id].right)] = d[id] + 1;
        }
    }
    return deepest;
}

std::optional<SplitCandidate> find_best_split(std::span<const double> column, std::span<const double> residuals,
                                              std::size_t min_samples_leaf) {
    if (column.size() != residuals.size()) throw ValidationError("column and residuals differ in length");
    const auto n = column.size();
    if (n < 2) return std::nullopt;

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return column[a] < column[b]; });

    std::vector<ValueGroup> groups;
    for (std::size_t i : idx) {
        if (groups.empty() || column[i] != groups.back().hi) {
            groups.push_back({column[i], column[i], residuals[i], 1});
        } else {
            groups.back().sum += residuals[i];
            ++groups.back().count;
        }
    }
    double sum = 0.0;
    double sum_sq = 0.0;
    for (double r : residuals) {
        sum += r;
        sum_sq += r * r;
    }
    return detail::best_split_over_groups(groups, sum, n, sum_sq / static_cast<double>(n),
                                          std::max<std::size_t>(min_samples_leaf, 1));
}

GbtModel gbt_fit(const SupervisedDataset& data, const GbtConfig& cfg) {
    validate(cfg);
    const auto n = data.size();
    if (n == 0) throw ValidationError("empty dataset");
    if (n < cfg.min_samples_leaf)
        throw ValidationError("min_samples_leaf unsatisfiable: " + std::to_string(n) + " samples < " +
                              std::to_string(cfg.min_samples_leaf));

    GbtModel model;
    model.config = cfg;
    model.learning_rate = cfg.learning_rate;
    model.window_length = data.window_length;
    model.init_value = std::accumulate(data.targets.begin(), data.targets.end(), 0.0) / static_cast<double>(n);

    std::vector<double> pred(n, model.init_value);
    std::vector<double> residuals(n);
    std::vector<double> leaf_values;
    TreeGrower grower(data, cfg);
    model.trees.reserve(cfg.n_trees);
    for (std::size_t t = 0; t < cfg.n_trees; ++t) {
        for (std::size_t i = 0; i < n; ++i) residuals[i] = data.targets[i] - pred[i];
        model.trees.push_back(grower.grow(residuals, leaf_values));
        for (std::size_t i = 0; i < n; ++i) pred[i] += cfg.learning_rate * leaf_values[i];
    }
    return model;
}

std::vector<double> gbt_predict_staged(const GbtModel& model, const Matrix& features, std::size_t stages) {
    if (features.cols() != model.window_length)
        throw ValidationError("feature width " + std::to_string(features.cols()) + " does not match window length " +
                              std::to_string(model.window_length));
    stages = std::min(stages, model.trees.size());
    std::vector<double> out(features.rows(), model.init_value);
    for (std::size_t i = 0; i < features.rows(); ++i) {
        const auto x = features.row(i);
        for (std::size_t t = 0; t < stages; ++t) out[i] += model.learning_rate * model.trees[t].predict(x);
    }
    return out;
}

std::vector<double> gbt_predict(const GbtModel& model, const Matrix& features) {
    return gbt_predict_staged(model, features, model.trees.size());
}

}  // namespace anomflow
