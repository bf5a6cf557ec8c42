#include <doctest.h>

#include <random>

#include "anomflow/error.hpp"
#include "anomflow/evaluation.hpp"
#include "oracles.hpp"

using namespace anomflow;

TEST_CASE("mape examples") {
    CHECK(mape(std::vector<double>{110, 90}, std::vector<double>{100, 100}) == doctest::Approx(10.0));
    CHECK(mape(std::vector<double>{5, 5}, std::vector<double>{5, 5}) == 0.0);
    CHECK_THROWS_WITH_AS(mape(std::vector<double>{1, 1}, std::vector<double>{1, 0}), doctest::Contains("at/near zero"),
                         ValidationError);
    CHECK_THROWS_AS(mape(std::vector<double>{1}, std::vector<double>{1, 2}), ValidationError);
    CHECK_THROWS_AS(mape(std::vector<double>{}, std::vector<double>{}), ValidationError);
    CHECK_THROWS_AS(mape(std::vector<double>{1}, std::vector<double>{0.5}, 1.0), ValidationError);
}

TEST_CASE("mape agrees with direct summation and is scale invariant") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.5, 50.0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng() % 500;
        std::vector<double> p(n);
        std::vector<double> o(n);
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = u(rng);
            o[i] = u(rng);
        }
        const double m = mape(p, o);
        CHECK(std::abs(m - oracle::mape(p, o)) <= 1e-9);
        CHECK(m >= 0.0);
        std::vector<double> ps(p);
        std::vector<double> os(o);
        for (auto& x : ps) x *= 4.0;
        for (auto& x : os) x *= 4.0;
        CHECK(mape(ps, os) == doctest::Approx(m).epsilon(1e-12));
    }
}

TEST_CASE("accuracy") {
    CHECK(accuracy(7.23) == doctest::Approx(92.77));
    CHECK(accuracy(5.04) == doctest::Approx(94.96));
}

TEST_CASE("arms") {
    CHECK(arm_name(Arm::with_outliers) == "with_outliers");
    CHECK(parse_arm("outlier_adjusted") == Arm::outlier_adjusted);
    CHECK_THROWS_AS(parse_arm("both"), ParseError);
}

TEST_CASE("grid export round-trips byte-identically") {
    ExperimentGrid g;
    g.metadata = {7, "abc", "def"};
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 20.0);
    for (const char* m : {"sgd", "gbt-a", "ensemble"})
        for (std::size_t w : {6u, 18u, 9u})
            for (auto arm : {Arm::outlier_adjusted, Arm::with_outliers}) g.cells[{m, w, arm}] = u(rng);

    const auto csv = export_grid(g, GridFormat::csv);
    CHECK(csv.rfind("model,window,arm,mape_percent\nensemble,6,outlier_adjusted,", 0) == 0);
    const auto from_csv = parse_grid_csv(csv);
    CHECK(from_csv.cells == g.cells);
    CHECK(export_grid(from_csv, GridFormat::csv) == csv);

    const auto js = export_grid(g, GridFormat::json);
    const auto from_json = parse_grid_json(js);
    CHECK(from_json.cells == g.cells);
    CHECK(from_json.metadata == g.metadata);
    CHECK(export_grid(from_json, GridFormat::json) == js);

    CHECK(g.best_over_windows("sgd", Arm::with_outliers) ==
          std::min({g.cells[{"sgd", 6, Arm::with_outliers}], g.cells[{"sgd", 9, Arm::with_outliers}],
                    g.cells[{"sgd", 18, Arm::with_outliers}]}));
    CHECK_THROWS_AS(g.best_over_windows("gbt-b", Arm::with_outliers), ValidationError);

    CHECK_THROWS_AS(parse_grid_csv("model,window\n"), ParseError);
    CHECK_THROWS_AS(parse_grid_csv("model,window,arm,mape_percent\nsgd,x,with_outliers,1\n"), ParseError);
    CHECK_THROWS_AS(parse_grid_json("[1,"), ParseError);
}

TEST_CASE("plot data") {
    const TimeSeries s({0, 300, 600, 900}, {1, 2, 3, 4});
    const std::vector<double> pred{2.5, 3.5};
    CHECK(export_plot_data(s, pred, 2) == "timestamp,actual_gbps,predicted_gbps\n600,3,2.5\n900,4,3.5\n");
    CHECK_THROWS_AS(export_plot_data(s, pred, 1), ValidationError);
}

TEST_CASE("sha256") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("small grid: shape, determinism, slice independence") {
    SynthConfig cfg;
    cfg.days = 5;
    cfg.seed = 3;
    const auto series = generate_synthetic(cfg).series;

    GridOptions opts;
    opts.train_days = 4;
    opts.k = 3;
    opts.seed = 3;

    SUBCASE("empty model set") {
        opts.models.clear();
        const auto g = run_grid(series, opts);
        CHECK(g.cells.empty());
        CHECK(export_grid(g, GridFormat::csv) == "model,window,arm,mape_percent\n");
    }
    SUBCASE("full grid") {
        std::size_t reported = 0;
        opts.on_cell = [&](const CellReport&) { ++reported; };
        const auto a = run_grid(series, opts);
        CHECK(a.cells.size() == 60);
        CHECK(reported == 60);
        for (const auto& [key, v] : a.cells) {
            CHECK(v > 0.0);
            CHECK(v < 100.0);
        }
        CHECK(a.metadata.dataset_fingerprint == dataset_fingerprint(series));

        opts.on_cell = nullptr;
        opts.threads = 3;
        const auto b = run_grid(series, opts);
        CHECK(export_grid(a, GridFormat::csv) == export_grid(b, GridFormat::csv));
        CHECK(a.metadata == b.metadata);

        GridOptions narrow = opts;
        narrow.arms = {Arm::outlier_adjusted};
        narrow.windows = {9};
        narrow.models = {"sgd", "ensemble"};
        const auto c = run_grid(series, narrow);
        REQUIRE(c.cells.size() == 2);
        for (const auto& [key, v] : c.cells) CHECK(a.cells.at(key) == v);

        opts.seed = 4;
        CHECK(run_grid(series, opts).metadata.config_digest != a.metadata.config_digest);
    }
    SUBCASE("errors") {
        opts.models = {"gbt-z"};
        CHECK_THROWS_AS(run_grid(series, opts), ConfigError);
        opts = {};
        opts.train_days = 5;
        try {
            run_grid(series, opts);
            FAIL("expected a data error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::data);
            CHECK(std::string(e.what()).find("grid cell (window 6") != std::string::npos);
        }
        opts = {};
        opts.windows = {0};
        CHECK_THROWS_AS(run_grid(series, opts), ConfigError);
    }
}
