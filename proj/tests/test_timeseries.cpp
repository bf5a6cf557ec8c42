#include <doctest.h>

#include <algorithm>
#include <random>
#include <string>

#include "anomflow/error.hpp"
#include "anomflow/timeseries.hpp"

using namespace anomflow;

TEST_CASE("json parser keeps only timestamp and bps") {
    const std::string raw = R"([
        {"timestamp": "2021-03-01T00:00:00Z", "bps": 1.5e9, "interface": "xe-0/0/1", "router": "r1"},
        {"timestamp": "2021-03-01T00:05:00Z", "bps": 2.0e9, "extra": {"nested": true}},
        {"timestamp": 1614557400, "bps": 3, "note": null}
    ])";
    const auto s = parse_telemetry_json(raw);
    REQUIRE(s.size() == 3);
    CHECK(s.unit() == Unit::bps);
    CHECK(s.timestamps() == std::vector<std::int64_t>{1614556800, 1614557100, 1614557400});
    CHECK(s.values() == std::vector<double>{1.5e9, 2.0e9, 3.0});
}

TEST_CASE("json parser errors") {
    CHECK_THROWS_WITH_AS(parse_telemetry_json("[]"), "empty series", ValidationError);
    CHECK_THROWS_WITH_AS(parse_telemetry_json(R"([{"timestamp": 0, "bps": 1}, {"bps": 2}])"),
                         doctest::Contains("record 1"), ParseError);
    CHECK_THROWS_WITH_AS(parse_telemetry_json(R"([{"timestamp": 0, "bps": "x"}])"), doctest::Contains("record 0"),
                         ParseError);
    CHECK_THROWS_WITH_AS(parse_telemetry_json(R"([{"timestamp": 0, "bps": 1}, {"timestamp": 0, "bps": 2}])"),
                         doctest::Contains("duplicate"), ValidationError);
    CHECK_THROWS_WITH_AS(
        parse_telemetry_json(R"([{"timestamp": 0, "bps": 1}, {"timestamp": 300, "bps": 2}, {"timestamp": 900, "bps": 2}])"),
        doctest::Contains("300 and 900"), ValidationError);
    CHECK_THROWS_AS(parse_telemetry_json("{not json"), ParseError);
}

TEST_CASE("json parser sorts records") {
    const auto sorted = parse_telemetry_json(
        R"([{"timestamp": 0, "bps": 1}, {"timestamp": 300, "bps": 2}, {"timestamp": 600, "bps": 3}])");
    const auto shuffled = parse_telemetry_json(
        R"([{"timestamp": 600, "bps": 3}, {"timestamp": 0, "bps": 1}, {"timestamp": 300, "bps": 2}])");
    CHECK(sorted == shuffled);
}

TEST_CASE("gap filling inserts backward-filled points") {
    const std::string raw = R"([{"timestamp": 0, "bps": 1}, {"timestamp": 900, "bps": 4}])";
    CHECK_THROWS_AS(parse_telemetry_json(raw), ValidationError);
    ParseOptions opts;
    opts.fill_gaps = true;
    const auto s = parse_telemetry_json(raw, opts);
    CHECK(s.values() == std::vector<double>{1, 4, 4, 4});
    CHECK(s.timestamps() == std::vector<std::int64_t>{0, 300, 600, 900});
}

TEST_CASE("csv parser") {
    SUBCASE("two rows") {
        const auto s = parse_telemetry_csv("timestamp,bps\n1000,5\n1300,6\n");
        CHECK(s.size() == 2);
        CHECK(s.values() == std::vector<double>{5, 6});
    }
    SUBCASE("iso timestamps and CRLF") {
        const auto s = parse_telemetry_csv("timestamp,bps\r\n1970-01-01T00:00:00Z,1\r\n1970-01-01T00:05:00+00:00,2\r\n");
        CHECK(s.timestamps() == std::vector<std::int64_t>{0, 300});
    }
    SUBCASE("header only") { CHECK_THROWS_WITH_AS(parse_telemetry_csv("timestamp,bps\n"), "empty series", ValidationError); }
    SUBCASE("missing header") { CHECK_THROWS_AS(parse_telemetry_csv("1000,5\n"), ParseError); }
    SUBCASE("negative bps") {
        CHECK_THROWS_WITH_AS(parse_telemetry_csv("timestamp,bps\n1000,5\n1300,-1\n"), doctest::Contains("row 3"),
                             ValidationError);
    }
    SUBCASE("unparseable row names the row") {
        CHECK_THROWS_WITH_AS(parse_telemetry_csv("timestamp,bps\n1000,5\n1300,abc\n"), doctest::Contains("row 3"),
                             ParseError);
    }
}

TEST_CASE("timestamp parsing") {
    CHECK(parse_timestamp("2021-01-01T00:00:00Z") == 1609459200);
    CHECK(parse_timestamp("2021-01-01 00:00:00") == 1609459200);
    CHECK(parse_timestamp("2021-01-01T00:00:00.250Z") == 1609459200);
    CHECK(parse_timestamp("1609459200") == 1609459200);
    CHECK_THROWS_AS(parse_timestamp("2021-02-30T00:00:00Z"), ParseError);
    CHECK_THROWS_AS(parse_timestamp("2021-01-01T00:00:00+05:00"), ParseError);
    CHECK_THROWS_AS(parse_timestamp("yesterday"), ParseError);
}

TEST_CASE("serialize then parse round-trips exactly") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1e10);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 1 + rng() % 50;
        std::vector<std::int64_t> ts(n);
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) {
            ts[i] = 1600000000 + static_cast<std::int64_t>(i) * 300;
            v[i] = u(rng);
        }
        const TimeSeries s(ts, v, 300, trial % 2 ? Unit::bps : Unit::gbps);
        const auto once = parse_telemetry_csv(serialize_csv(s));
        CHECK(once == s);
        CHECK(serialize_csv(once) == serialize_csv(s));
    }
}

TEST_CASE("drop_incomplete_tail") {
    auto make = [](std::size_t n) {
        std::vector<std::int64_t> ts(n);
        for (std::size_t i = 0; i < n; ++i) ts[i] = static_cast<std::int64_t>(i) * 300;
        return TimeSeries(ts, std::vector<double>(n, 1.0));
    };
    CHECK(drop_incomplete_tail(make(8563), 288).size() == 8352);
    CHECK(drop_incomplete_tail(make(576), 288).size() == 576);
    CHECK_THROWS_WITH_AS(drop_incomplete_tail(make(100), 288), "no complete day", ValidationError);
    for (std::size_t n = 288; n < 2000; n += 37) CHECK(drop_incomplete_tail(make(n), 288).size() % 288 == 0);
}

TEST_CASE("bps_to_gbps") {
    const TimeSeries s({0, 300, 600}, {2.5e9, 0.0, 7.0e8}, 300, Unit::bps);
    const auto g = bps_to_gbps(s);
    CHECK(g.unit() == Unit::gbps);
    CHECK(g.values()[0] == 2.5);
    CHECK(g.values()[1] == 0.0);
    CHECK(g.timestamps() == s.timestamps());

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    std::vector<double> gbps(200);
    std::vector<std::int64_t> ts(200);
    for (std::size_t i = 0; i < gbps.size(); ++i) {
        gbps[i] = u(rng);
        ts[i] = static_cast<std::int64_t>(i) * 300;
    }
    std::vector<double> bps(gbps);
    for (auto& x : bps) x *= 1e9;
    const auto back = bps_to_gbps(TimeSeries(ts, bps, 300, Unit::bps));
    for (std::size_t i = 0; i < gbps.size(); ++i) CHECK(std::abs(back.values()[i] - gbps[i]) <= 1e-12 * gbps[i]);
    // Order relations survive rescaling.
    const auto& b = back.values();
    CHECK(std::max_element(b.begin(), b.end()) - b.begin() == std::max_element(bps.begin(), bps.end()) - bps.begin());
    CHECK(std::min_element(b.begin(), b.end()) - b.begin() == std::min_element(bps.begin(), bps.end()) - bps.begin());
    for (std::size_t i = 1; i < b.size(); ++i) CHECK((b[i] < b[i - 1]) == (bps[i] < bps[i - 1]));
}

TEST_CASE("generate_synthetic") {
    SynthConfig cfg;
    cfg.days = 30;
    const auto a = generate_synthetic(cfg);
    CHECK(a.series.size() == 8640);
    CHECK(a.truth_mask.size() == 8640);
    CHECK(std::count(a.truth_mask.begin(), a.truth_mask.end(), true) == 86);

    const auto b = generate_synthetic(cfg);
    CHECK(a.series == b.series);
    CHECK(a.truth_mask == b.truth_mask);

    cfg.spike_fraction = 0.0;
    cfg.days = 2;
    const auto c = generate_synthetic(cfg);
    CHECK(std::none_of(c.truth_mask.begin(), c.truth_mask.end(), [](bool x) { return x; }));

    cfg.noise_std = 50.0;  // forces clamping
    const auto d = generate_synthetic(cfg);
    CHECK(std::all_of(d.series.values().begin(), d.series.values().end(), [](double v) { return v >= 0.0; }));

    cfg.spike_multiplier = 1.0;
    CHECK_THROWS_AS(generate_synthetic(cfg), ConfigError);
}

TEST_CASE("TimeSeries invariants") {
    CHECK_THROWS_AS(TimeSeries({}, {}), ValidationError);
    CHECK_THROWS_AS(TimeSeries({0, 300, 700}, {1, 2, 3}), ValidationError);
    CHECK_THROWS_AS(TimeSeries({0}, {-1.0}), ValidationError);
    CHECK_THROWS_AS(TimeSeries({0}, {std::nan("")}), ValidationError);
}
