#include "anomflow/ensemble.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "anomflow/error.hpp"
#include "anomflow/seeding.hpp"

namespace anomflow {

std::size_t StackedModel::window_length() const {
    return base_models.empty() ? 0 : model_window_length(base_models.front());
}

OofResult oof_predictions(const SupervisedDataset& data, std::size_t n_bases, const FoldPlan& folds,
                          const BaseFitPredict& fit_predict) {
    if (folds.n_samples != data.size() || folds.folds.empty())
        throw ValidationError("fold plan does not match dataset size");

    OofResult out;
    out.first_row = folds.folds.front().test_start;
    const auto covered = folds.folds.back().test_end - out.first_row;
    out.predictions = Matrix(covered, n_bases);

    for (std::size_t f = 0; f < folds.folds.size(); ++f) {
        const auto& fold = folds.folds[f];
        if (fold.test_start != fold.train_end || fold.test_end > data.size() || fold.test_start >= fold.test_end)
            throw ValidationError("invalid fold " + std::to_string(f));
        const auto train = data.slice(0, fold.train_end);
        const auto test_x = data.features.slice_rows(fold.test_start, fold.test_end);
        for (std::size_t b = 0; b < n_bases; ++b) {
            const auto pred = fit_predict(b, train, test_x);
            if (pred.size() != test_x.rows()) throw InvariantError("base model returned wrong prediction count");
            for (std::size_t r = 0; r < pred.size(); ++r) out.predictions(fold.test_start - out.first_row + r, b) = pred[r];
            out.provenance.push_back({f, b, 0, fold.train_end, fold.test_start, fold.test_end});
        }
    }
    return out;
}

OofResult oof_predictions(const SupervisedDataset& data, std::span<const ModelConfig> base_configs,
                          const FoldPlan& folds) {
    return oof_predictions(data, base_configs.size(), folds,
                           [&](std::size_t b, const SupervisedDataset& train, const Matrix& test_x) {
                               return predict_model(fit_model(base_configs[b], train), test_x);
                           });
}

MetaFit fit_ridge_meta(const Matrix& predictions, std::span<const double> targets, double ridge_lambda) {
    if (!(ridge_lambda >= 0.0)) throw ConfigError("ridge_lambda must be >= 0");
    const auto n = predictions.rows();
    const auto b = predictions.cols();
    if (n == 0 || n != targets.size()) throw ValidationError("meta-model needs one target per prediction row");

    Eigen::MatrixXd x(n, b);
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < b; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = predictions(i, j);
        y(static_cast<Eigen::Index>(i)) = targets[i];
    }
    const Eigen::RowVectorXd x_mean = x.colwise().mean();
    const double y_mean = y.mean();
    x.rowwise() -= x_mean;
    y.array() -= y_mean;

    Eigen::MatrixXd gram = x.transpose() * x;
    gram.diagonal().array() += ridge_lambda;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    const auto d = ldlt.vectorD().cwiseAbs();
    const double scale = std::max(gram.diagonal().cwiseAbs().maxCoeff(), 1e-300);
    if (ldlt.info() != Eigen::Success || d.minCoeff() <= 1e-12 * scale)
        throw ConfigError("singular meta-model system; use ridge_lambda > 0");
    const Eigen::VectorXd w = ldlt.solve(x.transpose() * y);

    MetaFit fit;
    fit.weights.assign(w.data(), w.data() + w.size());
    fit.intercept = y_mean - x_mean.dot(w);
    return fit;
}

std::uint64_t base_seed(std::uint64_t seed, const std::string& base_name) {
    return derive_seed(seed, name_stream(base_name));
}

namespace {

std::vector<ModelConfig> seeded_configs(std::span<const ModelSpec> bases, std::uint64_t seed) {
    std::vector<ModelConfig> out;
    out.reserve(bases.size());
    for (const auto& b : bases) out.push_back(with_seed(b.config, base_seed(seed, b.name)));
    return out;
}

}  // namespace

StackedModel stack_fit(const SupervisedDataset& data, std::span<const ModelSpec> bases, std::size_t k,
                       double ridge_lambda, std::uint64_t seed, std::vector<TrainedModel> refit_bases) {
    if (bases.empty()) throw ConfigError("stack needs at least one base model");
    if (refit_bases.size() != bases.size()) throw InvariantError("refit base count does not match base specs");
    const auto configs = seeded_configs(bases, seed);
    const auto folds = expanding_folds(data.size(), k);
    const auto oof = oof_predictions(data, configs, folds);
    const std::span<const double> covered_targets(data.targets.data() + oof.first_row, oof.predictions.rows());
    auto meta = fit_ridge_meta(oof.predictions, covered_targets, ridge_lambda);

    StackedModel model;
    for (const auto& b : bases) model.base_names.push_back(b.name);
    model.base_models = std::move(refit_bases);
    model.meta_weights = std::move(meta.weights);
    model.meta_intercept = meta.intercept;
    model.k = k;
    model.ridge_lambda = ridge_lambda;
    return model;
}

StackedModel stack_fit(const SupervisedDataset& data, std::span<const ModelSpec> bases, std::size_t k,
                       double ridge_lambda, std::uint64_t seed) {
    std::vector<TrainedModel> refit;
    for (const auto& cfg : seeded_configs(bases, seed)) refit.push_back(fit_model(cfg, data));
    return stack_fit(data, bases, k, ridge_lambda, seed, std::move(refit));
}

std::vector<double> stack_predict(const StackedModel& model, const Matrix& features) {
    if (model.base_models.size() != model.meta_weights.size())
        throw InvariantError("stacked model has mismatched base and weight counts");
    std::vector<double> out(features.rows(), model.meta_intercept);
    for (std::size_t j = 0; j < model.base_models.size(); ++j) {
        const auto base = predict_model(model.base_models[j], features);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += model.meta_weights[j] * base[i];
    }
    return out;
}

}  // namespace anomflow
