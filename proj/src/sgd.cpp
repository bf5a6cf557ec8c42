#include <cmath>
#include <random>

#include "anomflow/error.hpp"
#include "anomflow/regressors.hpp"

namespace anomflow {

namespace detail {

void sgd_step(std::span<double> weights, double& intercept, std::span<const double> x, double y, double eta,
              double l2) {
    double pred = intercept;
    for (std::size_t j = 0; j < weights.size(); ++j) pred += weights[j] * x[j];
    const double err = pred - y;
    for (std::size_t j = 0; j < weights.size(); ++j) weights[j] -= eta * (err * x[j] + l2 * weights[j]);
    intercept -= eta * err;
}

}  // namespace detail

FeatureScaler FeatureScaler::fit(const Matrix& features) {
    const auto n = features.rows();
    const auto w = features.cols();
    FeatureScaler s;
    s.mean.assign(w, 0.0);
    s.std_dev.assign(w, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < w; ++j) s.mean[j] += features(i, j);
    for (auto& m : s.mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < w; ++j) {
            const double d = features(i, j) - s.mean[j];
            s.std_dev[j] += d * d;
        }
    for (auto& sd : s.std_dev) {
        sd = std::sqrt(sd / static_cast<double>(n));
        if (!(sd > 0.0)) sd = 1.0;
    }
    return s;
}

void FeatureScaler::transform(std::span<const double> x, std::span<double> out) const {
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean[j]) / std_dev[j];
}

SgdModel sgd_fit(const SupervisedDataset& data, const SgdConfig& cfg) {
    if (data.size() == 0) throw ValidationError("empty dataset");
    if (cfg.epochs == 0) throw ConfigError("epochs must be positive");
    if (!(cfg.learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
    if (!(cfg.l2_penalty >= 0.0)) throw ConfigError("l2_penalty must be >= 0");

    const auto n = data.size();
    const auto w = data.window_length;

    SgdModel model;
    model.config = cfg;
    model.scaler = FeatureScaler::fit(data.features);
    model.weights.assign(w, 0.0);

    Matrix standardized(n, w);
    for (std::size_t i = 0; i < n; ++i) model.scaler.transform(data.features.row(i), standardized.row(i));

    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    const auto steps = cfg.epochs * n;
    for (std::size_t t = 1; t <= steps; ++t) {
        const double eta = cfg.schedule == LearningSchedule::constant
                               ? cfg.learning_rate
                               : cfg.learning_rate / std::pow(static_cast<double>(t), cfg.power_t);
        const auto i = pick(rng);
        detail::sgd_step(model.weights, model.intercept, standardized.row(i), data.targets[i], eta, cfg.l2_penalty);
    }
    return model;
}

std::vector<double> sgd_predict(const SgdModel& model, const Matrix& features) {
    if (features.cols() != model.weights.size())
        throw ValidationError("feature width " + std::to_string(features.cols()) + " does not match window length " +
                              std::to_string(model.weights.size()));
    std::vector<double> out(features.rows());
    std::vector<double> z(features.cols());
    for (std::size_t i = 0; i < features.rows(); ++i) {
        model.scaler.transform(features.row(i), z);
        double p = model.intercept;
        for (std::size_t j = 0; j < z.size(); ++j) p += model.weights[j] * z[j];
        out[i] = p;
    }
    return out;
}

}  // namespace anomflow
