#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "anomflow/ensemble.hpp"
#include "anomflow/error.hpp"
#include "anomflow/evaluation.hpp"
#include "anomflow/model_io.hpp"
#include "oracles.hpp"

using namespace anomflow;

namespace {

TimeSeries sine_series(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.2);
    std::vector<std::int64_t> ts(n);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        ts[i] = static_cast<std::int64_t>(i) * 300;
        v[i] = 10.0 + 4.0 * std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / 288.0) + noise(rng);
    }
    return TimeSeries(ts, v);
}

SupervisedDataset ramp_dataset(std::size_t n) {
    std::vector<std::int64_t> ts(n + 1);
    std::vector<double> v(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        ts[i] = static_cast<std::int64_t>(i) * 300;
        v[i] = static_cast<double>(i);
    }
    return make_supervised(TimeSeries(ts, v), 1);
}

std::vector<ModelSpec> small_bases() {
    return {{"gbt-small", GbtConfig{.n_trees = 15, .max_depth = 2}}, {"sgd", SgdConfig{.epochs = 5}}};
}

}  // namespace

TEST_CASE("oof predictions: constant base yields a constant column") {
    const auto data = ramp_dataset(12);
    const auto plan = expanding_folds(12, 2);
    const auto oof = oof_predictions(data, 2, plan, [](std::size_t b, const SupervisedDataset&, const Matrix& x) {
        return std::vector<double>(x.rows(), b == 0 ? 0.0 : 1.0);
    });
    CHECK(oof.first_row == 4);
    REQUIRE(oof.predictions.rows() == 8);
    for (std::size_t r = 0; r < 8; ++r) {
        CHECK(oof.predictions(r, 0) == 0.0);
        CHECK(oof.predictions(r, 1) == 1.0);
    }
}

TEST_CASE("oof predictions never see their own targets") {
    const auto data = ramp_dataset(60);
    const auto plan = expanding_folds(60, 5);
    std::size_t calls = 0;
    const auto oof = oof_predictions(data, 3, plan, [&](std::size_t, const SupervisedDataset& train, const Matrix& x) {
        ++calls;
        // The ramp target equals row index + 1; every training target must precede every test row.
        const double last_train_target = train.targets.back();
        for (std::size_t r = 0; r < x.rows(); ++r) CHECK(x(r, 0) + 1.0 > last_train_target);
        return std::vector<double>(x.rows(), last_train_target);
    });
    CHECK(calls == 15);
    CHECK(oof.provenance.size() == 15);
    for (const auto& rec : oof.provenance) {
        CHECK(rec.train_begin == 0);
        CHECK(rec.train_end <= rec.test_begin);
        CHECK(rec.test_begin < rec.test_end);
    }
    CHECK(oof.first_row == 10);
    CHECK(oof.predictions.rows() == 50);
}

TEST_CASE("fit_ridge_meta examples") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0.0, 1.0);
    const std::size_t n = 200;

    SUBCASE("perfect base gets unit weight") {
        Matrix p(n, 1);
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = p(i, 0) = g(rng) + 5.0;
        const auto m = fit_ridge_meta(p, y, 0.0);
        CHECK(std::abs(m.weights[0] - 1.0) <= 1e-9);
        CHECK(std::abs(m.intercept) <= 1e-9);
    }
    SUBCASE("identical bases share weight under ridge") {
        Matrix p(n, 2);
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            p(i, 0) = p(i, 1) = g(rng);
            y[i] = 2.0 * p(i, 0) + 0.1 * g(rng);
        }
        const auto m = fit_ridge_meta(p, y, 1e-3);
        CHECK(m.weights[0] == doctest::Approx(m.weights[1]).epsilon(1e-9));
        CHECK_THROWS_WITH_AS(fit_ridge_meta(p, y, 0.0), doctest::Contains("ridge_lambda"), ConfigError);
    }
    SUBCASE("matches the augmented normal equations") {
        for (double lambda : {0.0, 1e-3, 0.5, 10.0}) {
            Matrix p(n, 3);
            std::vector<std::vector<double>> rows(n, std::vector<double>(3));
            std::vector<double> y(n);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < 3; ++j) rows[i][j] = p(i, j) = 10.0 + g(rng);
                y[i] = 0.5 * rows[i][0] + 0.3 * rows[i][1] + 0.1 * rows[i][2] + 1.0 + 0.05 * g(rng);
            }
            const auto m = fit_ridge_meta(p, y, lambda);
            const auto o = oracle::ridge(rows, y, lambda);
            for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(m.weights[j] - o.weights[j]) <= 1e-9);
            CHECK(std::abs(m.intercept - o.intercept) <= 1e-9 * std::max(1.0, std::abs(o.intercept)));
        }
    }
    SUBCASE("errors") {
        Matrix p(3, 1, 1.0);
        std::vector<double> y{1, 2, 3};
        CHECK_THROWS_AS(fit_ridge_meta(p, y, -1.0), ConfigError);
        CHECK_THROWS_AS(fit_ridge_meta(p, std::vector<double>{1, 2}, 0.1), ValidationError);
    }
}

TEST_CASE("stack_predict is the affine combination of its bases") {
    const auto data = make_supervised(sine_series(1200, 3), 6);
    const auto bases = small_bases();
    const auto model = stack_fit(data, bases, 3, 1e-3, 11);
    REQUIRE(model.base_models.size() == 2);
    CHECK(model.window_length() == 6);
    const auto pred = stack_predict(model, data.features);
    std::vector<std::vector<double>> per_base;
    for (const auto& b : model.base_models) per_base.push_back(predict_model(b, data.features));
    for (std::size_t i = 0; i < pred.size(); ++i) {
        double expected = model.meta_intercept;
        for (std::size_t j = 0; j < per_base.size(); ++j) expected += model.meta_weights[j] * per_base[j][i];
        CHECK(std::abs(pred[i] - expected) <= 1e-12 * std::max(1.0, std::abs(expected)));
    }

    CHECK(stack_fit(data, bases, 3, 1e-3, 11).meta_weights == model.meta_weights);
    CHECK_THROWS_AS(stack_predict(model, Matrix(2, 4)), ValidationError);
    CHECK_THROWS_AS(stack_fit(data, {}, 3, 1e-3, 11), ConfigError);
}

TEST_CASE("stack with one base tracks that base") {
    const auto series = sine_series(2400, 5);
    const auto data = make_supervised(series, 9);
    const auto split = split_by_target_index(data, 1800);
    const std::vector<ModelSpec> one{{"gbt-small", GbtConfig{.n_trees = 40, .max_depth = 3}}};
    const auto stack = stack_fit(split.train, one, 5, 1e-3, 4);
    auto cfg = with_seed(one[0].config, base_seed(4, "gbt-small"));
    const auto alone = fit_model(cfg, split.train);
    const double m_stack = mape(stack_predict(stack, split.test.features), split.test.targets);
    const double m_alone = mape(predict_model(alone, split.test.features), split.test.targets);
    CHECK(std::abs(m_stack - m_alone) <= 0.1);
}

TEST_CASE("refit bases are reused") {
    const auto data = make_supervised(sine_series(900, 8), 6);
    const auto bases = small_bases();
    std::vector<TrainedModel> refit;
    for (const auto& b : bases) refit.push_back(fit_model(with_seed(b.config, base_seed(2, b.name)), data));
    const auto a = stack_fit(data, bases, 3, 1e-3, 2);
    const auto b = stack_fit(data, bases, 3, 1e-3, 2, refit);
    CHECK(stack_predict(a, data.features) == stack_predict(b, data.features));
}

TEST_CASE("stacked model round-trips") {
    const auto data = make_supervised(sine_series(900, 8), 6);
    const auto model = stack_fit(data, small_bases(), 3, 1e-3, 2);
    const auto doc = save_model(model);
    const auto back = load_model(doc);
    CHECK(save_model(back) == doc);
    CHECK(predict_any(back, data.features) == stack_predict(model, data.features));
    CHECK(kind_of(back) == kind_of(AnyModel{model}));
}
