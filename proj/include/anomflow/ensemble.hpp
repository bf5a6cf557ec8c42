#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "anomflow/matrix.hpp"
#include "anomflow/regressors.hpp"
#include "anomflow/windowing.hpp"

namespace anomflow {

/// Level-0 models combined by a linear level-1 model:
/// prediction = meta_intercept + sum_j meta_weights[j] * base_j(x).
struct StackedModel {
    std::vector<std::string> base_names;
    std::vector<TrainedModel> base_models;
    std::vector<double> meta_weights;
    double meta_intercept = 0.0;
    std::size_t k = 0;
    double ridge_lambda = 0.0;

    std::size_t window_length() const;
};

/// Which training and test ranges produced a block of out-of-fold rows.
struct OofRecord {
    std::size_t fold;
    std::size_t base;
    std::size_t train_begin;
    std::size_t train_end;
    std::size_t test_begin;
    std::size_t test_end;
};

struct OofResult {
    Matrix predictions;     // rows cover samples [first_row, first_row + rows)
    std::size_t first_row = 0;
    std::vector<OofRecord> provenance;
};

/// Trains base `base` on `train` and predicts `test_features`.
using BaseFitPredict =
    std::function<std::vector<double>(std::size_t base, const SupervisedDataset& train, const Matrix& test_features)>;

OofResult oof_predictions(const SupervisedDataset& data, std::size_t n_bases, const FoldPlan& folds,
                          const BaseFitPredict& fit_predict);

OofResult oof_predictions(const SupervisedDataset& data, std::span<const ModelConfig> base_configs,
                          const FoldPlan& folds);

struct MetaFit {
    std::vector<double> weights;
    double intercept = 0.0;
};

/// Ridge least squares of `targets` on the columns of `predictions`, with an
/// unpenalized intercept. Throws ConfigError when the system is singular.
MetaFit fit_ridge_meta(const Matrix& predictions, std::span<const double> targets, double ridge_lambda);

/// Seed each base receives inside a stack fitted with `seed`.
std::uint64_t base_seed(std::uint64_t seed, const std::string& base_name);

StackedModel stack_fit(const SupervisedDataset& data, std::span<const ModelSpec> bases, std::size_t k,
                       double ridge_lambda, std::uint64_t seed);

/// As above, reusing `refit_bases` (the bases already fitted on all of
/// `data` with base_seed-derived seeds) instead of refitting them.
StackedModel stack_fit(const SupervisedDataset& data, std::span<const ModelSpec> bases, std::size_t k,
                       double ridge_lambda, std::uint64_t seed, std::vector<TrainedModel> refit_bases);

std::vector<double> stack_predict(const StackedModel& model, const Matrix& features);

}  // namespace anomflow
