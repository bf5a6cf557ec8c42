#include "anomflow/anomaly.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

#include "anomflow/error.hpp"
#include "anomflow/seeding.hpp"

namespace anomflow {

namespace {

constexpr double kEulerGamma = 0.5772156649;

double harmonic(double i) { return std::log(i) + kEulerGamma; }

}  // namespace

std::size_t OutlierReport::outlier_count() const {
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

OutlierReport three_sigma_detect(const TimeSeries& series) {
    const auto& v = series.values();
    if (v.size() < 2) throw ValidationError("three-sigma detection needs at least 2 points");

    const double n = static_cast<double>(v.size());
    const bool constant = std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
    double sum = 0.0;
    for (double x : v) sum += x;
    const double mean = constant ? v.front() : sum / n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / n);

    OutlierReport r;
    r.method = DetectorMethod::three_sigma;
    r.mean = mean;
    r.std_dev = sd;
    r.lower_bound = mean - 3.0 * sd;
    r.upper_bound = mean + 3.0 * sd;
    r.mask.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) r.mask[i] = v[i] < r.lower_bound || v[i] > r.upper_bound;
    return r;
}

double average_path_length(double m) {
    if (m <= 1.0) return 0.0;
    return 2.0 * harmonic(m - 1.0) - 2.0 * (m - 1.0) / m;
}

namespace iforest {

namespace {

class TreeBuilder {
public:
    TreeBuilder(Tree& tree, std::mt19937_64& rng, std::size_t height_limit)
        : tree_(tree), rng_(rng), limit_(height_limit) {}

    int grow(std::vector<double> points, std::size_t depth) {
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.push_back({0.0, -1, -1, points.size()});
        if (depth >= limit_ || points.size() <= 1) return id;
        const auto [lo_it, hi_it] = std::minmax_element(points.begin(), points.end());
        const double lo = *lo_it;
        const double hi = *hi_it;
        if (lo == hi) return id;

        std::uniform_real_distribution<double> draw(lo, hi);
        double split = draw(rng_);
        while (split <= lo) split = draw(rng_);

        std::vector<double> left;
        std::vector<double> right;
        for (double x : points) (x < split ? left : right).push_back(x);
        points.clear();
        points.shrink_to_fit();

        const int l = grow(std::move(left), depth + 1);
        const int r = grow(std::move(right), depth + 1);
        auto& node = tree_.nodes[static_cast<std::size_t>(id)];
        node.split = split;
        node.left = l;
        node.right = r;
        return id;
    }

private:
    Tree& tree_;
    std::mt19937_64& rng_;
    std::size_t limit_;
};

}  // namespace

Forest build(const std::vector<double>& values, const IForestConfig& cfg) {
    if (cfg.n_trees == 0) throw ConfigError("isolation forest needs at least one tree");
    if (cfg.subsample_size == 0) throw ConfigError("subsample size must be positive");
    const auto n = values.size();

    Forest forest;
    forest.subsample_size = std::min(cfg.subsample_size, n);
    forest.height_limit =
        static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(forest.subsample_size))));
    forest.trees.resize(cfg.n_trees);

    std::vector<std::size_t> idx(n);
    for (std::size_t t = 0; t < cfg.n_trees; ++t) {
        // Per-tree stream: trees are independent of build order.
        std::mt19937_64 rng(derive_seed(cfg.seed, t));
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::vector<double> sample(forest.subsample_size);
        for (std::size_t i = 0; i < forest.subsample_size; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, n - 1);
            std::swap(idx[i], idx[pick(rng)]);
            sample[i] = values[idx[i]];
        }
        TreeBuilder(forest.trees[t], rng, forest.height_limit).grow(std::move(sample), 0);
    }
    return forest;
}

double path_length(const Tree& tree, double x) {
    std::size_t id = 0;
    double depth = 0.0;
    while (tree.nodes[id].left >= 0) {
        const auto& node = tree.nodes[id];
        id = static_cast<std::size_t>(x < node.split ? node.left : node.right);
        depth += 1.0;
    }
    return depth + average_path_length(static_cast<double>(tree.nodes[id].size));
}

double score(const Forest& forest, double x) {
    double total = 0.0;
    for (const auto& tree : forest.trees) total += path_length(tree, x);
    const double mean_path = total / static_cast<double>(forest.trees.size());
    const double c = average_path_length(static_cast<double>(forest.subsample_size));
    return std::exp2(-mean_path / c);
}

}  // namespace iforest

OutlierReport iforest_detect(const TimeSeries& series, const IForestConfig& cfg) {
    const auto& v = series.values();
    if (v.size() < 8) throw ValidationError("isolation forest detection needs at least 8 points");
    if (cfg.contamination && !(*cfg.contamination > 0.0 && *cfg.contamination < 1.0))
        throw ConfigError("contamination must be in (0,1)");

    const auto forest = iforest::build(v, cfg);

    OutlierReport r;
    r.method = DetectorMethod::isolation_forest;
    r.iforest = cfg;
    r.scores.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) r.scores[i] = iforest::score(forest, v[i]);

    if (cfg.contamination) {
        const auto k = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::ceil(*cfg.contamination * static_cast<double>(v.size()))));
        std::vector<double> sorted(r.scores);
        std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end(),
                         std::greater<>());
        r.score_threshold = sorted[k - 1];
    } else {
        r.score_threshold = 0.5;
    }
    r.mask.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) r.mask[i] = r.scores[i] >= r.score_threshold;
    return r;
}

TimeSeries backward_fill(const TimeSeries& series, const std::vector<bool>& mask) {
    const auto& v = series.values();
    if (mask.size() != v.size()) throw ValidationError("mask length does not match series length");
    if (std::all_of(mask.begin(), mask.end(), [](bool b) { return b; }))
        throw ValidationError("all points masked; nothing to fill from");

    std::vector<double> out(v);
    // Right-to-left pass carries the next valid value backwards.
    bool have_next = false;
    double next = 0.0;
    for (std::size_t i = v.size(); i-- > 0;) {
        if (!mask[i]) {
            have_next = true;
            next = v[i];
        } else if (have_next) {
            out[i] = next;
        }
    }
    // Tail outliers have no following valid point: carry the last one forward.
    std::size_t last_valid = v.size() - 1;
    while (mask[last_valid]) --last_valid;
    for (std::size_t i = last_valid + 1; i < v.size(); ++i) out[i] = v[last_valid];
    return series.with_values(std::move(out));
}

AgreementSummary detector_agreement(const OutlierReport& a, const OutlierReport& b) {
    if (a.mask.size() != b.mask.size()) throw ValidationError("outlier masks have different lengths");
    AgreementSummary s;
    for (std::size_t i = 0; i < a.mask.size(); ++i) {
        s.count_a += a.mask[i];
        s.count_b += b.mask[i];
        s.intersection += a.mask[i] && b.mask[i];
        s.union_count += a.mask[i] || b.mask[i];
    }
    s.jaccard = s.union_count == 0 ? 1.0
                                   : static_cast<double>(s.intersection) / static_cast<double>(s.union_count);
    return s;
}

}  // namespace anomflow
