#include <doctest.h>

#include <random>
#include <set>

#include "anomflow/error.hpp"
#include "anomflow/windowing.hpp"
#include "oracles.hpp"

using namespace anomflow;

namespace {

TimeSeries series_of(const std::vector<double>& v) {
    std::vector<std::int64_t> ts(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) ts[i] = static_cast<std::int64_t>(i) * 300;
    return TimeSeries(ts, v);
}

TimeSeries ramp(std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>(i);
    return series_of(v);
}

}  // namespace

TEST_CASE("make_supervised") {
    const auto ds = make_supervised(series_of({1, 2, 3, 4, 5}), 3);
    REQUIRE(ds.size() == 2);
    CHECK(ds.features.rows() == 2);
    CHECK(std::vector<double>(ds.features.row(0).begin(), ds.features.row(0).end()) == std::vector<double>{1, 2, 3});
    CHECK(std::vector<double>(ds.features.row(1).begin(), ds.features.row(1).end()) == std::vector<double>{2, 3, 4});
    CHECK(ds.targets == std::vector<double>{4, 5});

    CHECK(make_supervised(ramp(8352), 12).size() == 8340);
    CHECK_THROWS_WITH_AS(make_supervised(ramp(10), 10), "window too long", ValidationError);
}

TEST_CASE("make_supervised is shift-equivariant and reassembles the series") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 50.0);
    std::vector<double> v(300);
    for (auto& x : v) x = u(rng);
    const auto full = series_of(v);
    const auto shifted = full.slice(1, full.size());
    for (std::size_t w : {1u, 6u, 18u}) {
        const auto a = make_supervised(full, w);
        const auto b = make_supervised(shifted, w);
        REQUIRE(b.size() + 1 == a.size());
        CHECK(b.features == a.features.slice_rows(1, a.size()));
        CHECK(std::equal(b.targets.begin(), b.targets.end(), a.targets.begin() + 1));
        // Last lag of row i equals target of row i-1.
        for (std::size_t i = 1; i < a.size(); ++i) CHECK(a.features(i, w - 1) == a.targets[i - 1]);
    }
}

TEST_CASE("chronological_split") {
    const auto s = ramp(8352);
    const auto split = chronological_split(s, 21, 288);
    CHECK(split.train.size() == 6048);
    CHECK(split.test.size() == 2304);
    CHECK(split.test.values().front() == 6048.0);

    const auto halves = chronological_split(ramp(576), 1, 288);
    CHECK(halves.train.size() == 288);
    CHECK(halves.test.size() == 288);
    CHECK_THROWS_AS(chronological_split(ramp(576), 2, 288), ValidationError);
}

TEST_CASE("split_by_target_index covers every point after the boundary") {
    const auto ds = make_supervised(ramp(8352), 12);
    const auto split = split_by_target_index(ds, 6048);
    CHECK(split.test.size() == 2304);
    CHECK(split.train.size() == 6048 - 12);
    CHECK(split.test.targets.front() == 6048.0);
    CHECK(split.test.features(0, 0) == 6036.0);
    CHECK(split.test.origin_index == 6036);
}

TEST_CASE("expanding_folds") {
    SUBCASE("n=12 k=2") {
        const auto plan = expanding_folds(12, 2);
        REQUIRE(plan.folds.size() == 2);
        CHECK(plan.folds[0].train_end == 4);
        CHECK(plan.folds[0].test_start == 4);
        CHECK(plan.folds[0].test_end == 8);
        CHECK(plan.folds[1].train_end == 8);
        CHECK(plan.folds[1].test_end == 12);
    }
    SUBCASE("n=600 k=5") {
        const auto plan = expanding_folds(600, 5);
        REQUIRE(plan.folds.size() == 5);
        for (std::size_t j = 0; j < 5; ++j) {
            CHECK(plan.folds[j].train_end == 100 * (j + 1));
            CHECK(plan.folds[j].test_end == 100 * (j + 2));
        }
    }
    SUBCASE("remainder goes to the earliest blocks") {
        const auto plan = expanding_folds(14, 3);  // blocks 4,4,3,3
        CHECK(plan.folds[0].train_end == 4);
        CHECK(plan.folds[1].train_end == 8);
        CHECK(plan.folds[2].train_end == 11);
        CHECK(plan.folds[2].test_end == 14);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(expanding_folds(100, 1), ConfigError);
        CHECK_THROWS_AS(expanding_folds(9, 5), ValidationError);
    }
}

TEST_CASE("expanding_folds brute-force coverage and causality") {
    for (std::size_t k = 2; k <= 6; ++k) {
        for (std::size_t n = std::max<std::size_t>(10, 2 * k); n <= 200; ++n) {
            const auto plan = expanding_folds(n, k);
            REQUIRE(plan.folds.size() == k);
            std::set<std::size_t> tested;
            for (const auto& f : plan.folds) {
                CHECK(f.test_start == f.train_end);
                for (std::size_t i = f.test_start; i < f.test_end; ++i) {
                    CHECK(tested.insert(i).second);  // disjoint
                    CHECK(f.train_end - 1 < i);      // train strictly before test
                }
            }
            const std::size_t block0 = n / (k + 1) + (n % (k + 1) ? 1 : 0);
            CHECK(tested.size() == n - block0);
            CHECK(*tested.begin() == block0);
            CHECK(*tested.rbegin() == n - 1);
        }
    }
}
