#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "anomflow/matrix.hpp"
#include "anomflow/windowing.hpp"

namespace anomflow {

// ---------------------------------------------------------------------------
// Gradient-boosted regression trees (squared-error loss)
// ---------------------------------------------------------------------------

enum class SplitMode { exact, histogram };

struct GbtConfig {
    std::size_t n_trees = 100;
    double learning_rate = 0.1;
    std::size_t max_depth = 3;
    std::size_t min_samples_leaf = 5;
    SplitMode split_mode = SplitMode::exact;
    std::size_t n_bins = 255;
    std::uint64_t seed = 0;

    friend bool operator==(const GbtConfig&, const GbtConfig&) = default;
};

/// Internal nodes send x[feature] <= threshold to `left`. Leaves have feature == -1.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;

    bool is_leaf() const noexcept { return feature < 0; }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double predict(std::span<const double> x) const;
    std::size_t depth() const;
    friend bool operator==(const RegressionTree&, const RegressionTree&) = default;
};

/// prediction(x) = init_value + learning_rate * sum_t tree_t(x)
struct GbtModel {
    GbtConfig config;
    double init_value = 0.0;
    double learning_rate = 0.1;
    std::size_t window_length = 0;
    std::vector<RegressionTree> trees;

    friend bool operator==(const GbtModel&, const GbtModel&) = default;
};

struct SplitCandidate {
    double threshold;
    double gain;
};

/// Best variance-reduction split of `residuals` on one feature column.
///
/// Candidates are midpoints between consecutive distinct column values; both
/// sides need at least `min_samples_leaf` samples. Gain is the drop in
/// population variance,
///
///     gain = (S_L^2/n_L + S_R^2/n_R - S^2/n) / n,  S_R = S - S_L,
///
/// with S summed in sample order. Ties go to the smallest threshold; no
/// split is returned when the best gain is not meaningfully positive
/// (see detail::is_meaningful_gain).
std::optional<SplitCandidate> find_best_split(std::span<const double> column, std::span<const double> residuals,
                                              std::size_t min_samples_leaf);

GbtModel gbt_fit(const SupervisedDataset& data, const GbtConfig& cfg);

std::vector<double> gbt_predict(const GbtModel& model, const Matrix& features);

/// Predictions using only the first `stages` trees.
std::vector<double> gbt_predict_staged(const GbtModel& model, const Matrix& features, std::size_t stages);

namespace detail {

/// A run of samples sharing one value (exact mode) or one bin (histogram
/// mode), in ascending value order. `sum` is accumulated in sample order.
struct ValueGroup {
    double lo;
    double hi;
    double sum;
    std::size_t count;
};

double split_gain(double sum_left, std::size_t n_left, double sum_total, std::size_t n_total);

/// Gains at or below 1e-12 of the node's mean squared residual are rounding noise.
bool is_meaningful_gain(double gain, double mean_square);

std::optional<SplitCandidate> best_split_over_groups(std::span<const ValueGroup> groups, double sum_total,
                                                     std::size_t n_total, double mean_square,
                                                     std::size_t min_samples_leaf);

}  // namespace detail

// ---------------------------------------------------------------------------
// SGD linear regressor
// ---------------------------------------------------------------------------

enum class LearningSchedule { constant, inverse_scaling };

struct SgdConfig {
    std::size_t epochs = 50;
    double learning_rate = 0.01;
    LearningSchedule schedule = LearningSchedule::inverse_scaling;
    double power_t = 0.25;  // inverse_scaling: eta_t = learning_rate / t^power_t
    double l2_penalty = 1e-4;
    std::uint64_t seed = 0;

    friend bool operator==(const SgdConfig&, const SgdConfig&) = default;
};

struct FeatureScaler {
    std::vector<double> mean;
    std::vector<double> std_dev;  // zero-variance features get 1

    static FeatureScaler fit(const Matrix& features);
    void transform(std::span<const double> x, std::span<double> out) const;
    friend bool operator==(const FeatureScaler&, const FeatureScaler&) = default;
};

/// prediction(x) = weights . standardized(x) + intercept
struct SgdModel {
    SgdConfig config;
    std::vector<double> weights;
    double intercept = 0.0;
    FeatureScaler scaler;

    friend bool operator==(const SgdModel&, const SgdModel&) = default;
};

SgdModel sgd_fit(const SupervisedDataset& data, const SgdConfig& cfg);
std::vector<double> sgd_predict(const SgdModel& model, const Matrix& features);

namespace detail {

/// One step on the half squared error 0.5*(w.x + b - y)^2 plus 0.5*l2*|w|^2.
/// The intercept is not penalized.
void sgd_step(std::span<double> weights, double& intercept, std::span<const double> x, double y, double eta,
              double l2);

}  // namespace detail

// ---------------------------------------------------------------------------
// Uniform base-model surface
// ---------------------------------------------------------------------------

using ModelConfig = std::variant<GbtConfig, SgdConfig>;
using TrainedModel = std::variant<GbtModel, SgdModel>;

struct ModelSpec {
    std::string name;
    ModelConfig config;
};

/// gbt-a, gbt-b, gbt-c, gbt-d, sgd in that order.
const std::vector<ModelSpec>& model_presets();
/// Throws ConfigError for unknown names.
const ModelSpec& find_preset(const std::string& name);

ModelConfig with_seed(ModelConfig cfg, std::uint64_t seed);

TrainedModel fit_model(const ModelConfig& cfg, const SupervisedDataset& data);
std::vector<double> predict_model(const TrainedModel& model, const Matrix& features);
std::size_t model_window_length(const TrainedModel& model);

}  // namespace anomflow
