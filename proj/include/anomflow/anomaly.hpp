#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "anomflow/timeseries.hpp"

namespace anomflow {

enum class DetectorMethod { three_sigma, isolation_forest };

struct IForestConfig {
    std::size_t n_trees = 100;
    std::size_t subsample_size = 256;
    std::optional<double> contamination;  // in (0,1); absent => fixed 0.5 threshold
    std::uint64_t seed = 0;
};

struct OutlierReport {
    DetectorMethod method = DetectorMethod::three_sigma;
    std::vector<bool> mask;

    // three_sigma
    double mean = 0.0;
    double std_dev = 0.0;
    double lower_bound = 0.0;
    double upper_bound = 0.0;

    // isolation_forest
    std::vector<double> scores;
    double score_threshold = 0.0;
    IForestConfig iforest;

    std::size_t outlier_count() const;
};

/// mean ± 3·std over the whole series, population std (divisor n).
/// Points exactly on a bound are inliers.
OutlierReport three_sigma_detect(const TimeSeries& series);

/// c(m) = 2·H(m−1) − 2(m−1)/m with H(i) = ln(i) + Euler–Mascheroni; 0 for m <= 1.
double average_path_length(double m);

namespace iforest {

/// One node of a 1-D isolation tree; leaves have `left == -1`.
struct Node {
    double split = 0.0;
    int left = -1;
    int right = -1;
    std::size_t size = 0;  // subsample points reaching this node
};

struct Tree {
    std::vector<Node> nodes;  // nodes[0] is the root
};

struct Forest {
    std::vector<Tree> trees;
    std::size_t subsample_size = 0;  // effective ψ = min(ψ, n)
    std::size_t height_limit = 0;
};

Forest build(const std::vector<double>& values, const IForestConfig& cfg);

/// Path length of `x` in one tree, including the c(size) leaf adjustment.
double path_length(const Tree& tree, double x);

/// 2^(−E[h(x)]/c(ψ)).
double score(const Forest& forest, double x);

}  // namespace iforest

OutlierReport iforest_detect(const TimeSeries& series, const IForestConfig& cfg);

/// Each masked point takes the value of the nearest following unmasked point;
/// masked points after the last unmasked one carry it forward.
TimeSeries backward_fill(const TimeSeries& series, const std::vector<bool>& mask);

struct AgreementSummary {
    double jaccard = 0.0;
    std::size_t count_a = 0;
    std::size_t count_b = 0;
    std::size_t intersection = 0;
    std::size_t union_count = 0;
};

/// Jaccard index of two masks; two empty masks agree perfectly (1.0).
AgreementSummary detector_agreement(const OutlierReport& a, const OutlierReport& b);

}  // namespace anomflow
