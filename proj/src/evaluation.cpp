#include "anomflow/evaluation.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "anomflow/anomaly.hpp"
#include "anomflow/ensemble.hpp"
#include "anomflow/error.hpp"
#include "anomflow/regressors.hpp"
#include "anomflow/seeding.hpp"
#include "anomflow/text.hpp"
#include "anomflow/windowing.hpp"

namespace anomflow {

double mape(std::span<const double> predicted, std::span<const double> actual, double epsilon) {
    if (predicted.size() != actual.size()) throw ValidationError("predicted and actual lengths differ");
    if (actual.empty()) throw ValidationError("MAPE of an empty evaluation");
    double total = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double o = std::abs(actual[i]);
        if (!(o > epsilon)) throw ValidationError("actual value at/near zero (index " + std::to_string(i) + ")");
        total += std::abs(predicted[i] - actual[i]) / o;
    }
    return total / static_cast<double>(actual.size()) * 100.0;
}

double accuracy(double mape_percent) { return 100.0 - mape_percent; }

std::string_view arm_name(Arm arm) { return arm == Arm::with_outliers ? "with_outliers" : "outlier_adjusted"; }

Arm parse_arm(std::string_view name) {
    if (name == "with_outliers") return Arm::with_outliers;
    if (name == "outlier_adjusted") return Arm::outlier_adjusted;
    throw ParseError("unknown arm '" + std::string(name) + "'");
}

bool operator<(const CellKey& a, const CellKey& b) {
    if (a.model != b.model) return a.model < b.model;
    if (a.window != b.window) return a.window < b.window;
    return arm_name(a.arm) < arm_name(b.arm);
}

double ExperimentGrid::best_over_windows(const std::string& model, Arm arm) const {
    double best = INFINITY;
    for (const auto& [key, value] : cells)
        if (key.model == model && key.arm == arm) best = std::min(best, value);
    if (std::isinf(best)) throw ValidationError("no cells for model '" + model + "'");
    return best;
}

std::string describe_options(const GridOptions& opts) {
    std::ostringstream s;
    s << "windows=";
    for (std::size_t i = 0; i < opts.windows.size(); ++i) s << (i ? "," : "") << opts.windows[i];
    s << ";models=";
    for (std::size_t i = 0; i < opts.models.size(); ++i) s << (i ? "," : "") << opts.models[i];
    s << ";arms=";
    for (std::size_t i = 0; i < opts.arms.size(); ++i) s << (i ? "," : "") << arm_name(opts.arms[i]);
    s << ";train_days=" << opts.train_days << ";k=" << opts.k << ";seed=" << opts.seed
      << ";epsilon=" << text::format_double(opts.epsilon) << ";ridge_lambda=" << text::format_double(opts.ridge_lambda)
      << ";score_against=" << (opts.score_against == ScoreAgainst::adjusted ? "adjusted" : "raw");
    return s.str();
}

std::uint64_t slice_seed(std::uint64_t seed, Arm arm, std::size_t window) {
    return derive_seed(derive_seed(seed, arm == Arm::with_outliers ? 1 : 2), window);
}

namespace {

struct SliceTask {
    Arm arm;
    std::size_t window;
};

[[noreturn]] void rethrow_for_cell(const std::string& where) {
    try {
        throw;
    } catch (const Error& e) {
        throw Error(e.kind(), where + ": " + e.what());
    } catch (const std::exception& e) {
        throw InvariantError(where + ": " + e.what());
    }
}

// Every requested model for one (arm, window) pair.
std::vector<CellReport> run_slice(const TimeSeries& arm_series, const TimeSeries& raw_series, const SliceTask& task,
                                  const GridOptions& opts) {
    const auto& presets = model_presets();
    const bool want_ensemble =
        std::find(opts.models.begin(), opts.models.end(), std::string(kEnsembleModel)) != opts.models.end();

    const auto data = make_supervised(arm_series, task.window);
    const auto boundary = opts.train_days * static_cast<std::size_t>(arm_series.points_per_day());
    const auto split = split_by_target_index(data, boundary);

    std::vector<double> actual = split.test.targets;
    if (task.arm == Arm::outlier_adjusted && opts.score_against == ScoreAgainst::raw) {
        const auto& raw = raw_series.values();
        for (std::size_t i = 0; i < actual.size(); ++i) actual[i] = raw[boundary + i];
    }

    const auto seed = slice_seed(opts.seed, task.arm, task.window);
    std::vector<CellReport> out;
    std::vector<TrainedModel> fitted(presets.size());
    for (std::size_t p = 0; p < presets.size(); ++p) {
        const bool requested = std::find(opts.models.begin(), opts.models.end(), presets[p].name) != opts.models.end();
        if (!requested && !want_ensemble) continue;
        fitted[p] = fit_model(with_seed(presets[p].config, base_seed(seed, presets[p].name)), split.train);
        if (requested) {
            const auto pred = predict_model(fitted[p], split.test.features);
            out.push_back({{presets[p].name, task.window, task.arm}, mape(pred, actual, opts.epsilon)});
        }
    }
    if (want_ensemble) {
        auto stack = stack_fit(split.train, presets, opts.k, opts.ridge_lambda, seed, std::move(fitted));
        const auto pred = stack_predict(stack, split.test.features);
        out.push_back({{std::string(kEnsembleModel), task.window, task.arm}, mape(pred, actual, opts.epsilon)});
    }
    return out;
}

}  // namespace

ExperimentGrid run_grid(const TimeSeries& series, const GridOptions& opts) {
    for (const auto& m : opts.models)
        if (m != kEnsembleModel) find_preset(m);
    if (opts.windows.empty()) throw ConfigError("no window lengths");
    for (auto w : opts.windows)
        if (w == 0) throw ConfigError("window lengths must be positive");
    if (opts.train_days == 0) throw ConfigError("train_days must be positive");

    ExperimentGrid grid;
    grid.metadata.seed = opts.seed;
    grid.metadata.config_digest = sha256_hex(describe_options(opts));
    grid.metadata.dataset_fingerprint = dataset_fingerprint(series);
    if (opts.models.empty()) return grid;

    const bool need_adjusted = std::find(opts.arms.begin(), opts.arms.end(), Arm::outlier_adjusted) != opts.arms.end();
    std::optional<TimeSeries> adjusted;
    if (need_adjusted) adjusted = backward_fill(series, three_sigma_detect(series).mask);

    std::vector<SliceTask> tasks;
    for (auto arm : opts.arms)
        for (auto w : opts.windows) tasks.push_back({arm, w});

    std::vector<std::vector<CellReport>> results(tasks.size());
    std::vector<std::exception_ptr> errors(tasks.size());
    std::atomic<std::size_t> next{0};
    std::mutex report_mutex;

    auto worker = [&] {
        for (std::size_t t = next++; t < tasks.size(); t = next++) {
            const auto& task = tasks[t];
            try {
                const auto& arm_series = task.arm == Arm::with_outliers ? series : *adjusted;
                results[t] = run_slice(arm_series, series, task, opts);
                if (opts.on_cell) {
                    std::lock_guard lock(report_mutex);
                    for (const auto& c : results[t]) opts.on_cell(c);
                }
            } catch (...) {
                errors[t] = std::current_exception();
            }
        }
    };

    const auto n_threads = std::clamp<std::size_t>(opts.threads, 1, tasks.size());
    {
        std::vector<std::jthread> pool;
        for (std::size_t i = 1; i < n_threads; ++i) pool.emplace_back(worker);
        worker();
    }

    for (std::size_t t = 0; t < tasks.size(); ++t) {
        if (!errors[t]) continue;
        try {
            std::rethrow_exception(errors[t]);
        } catch (...) {
            rethrow_for_cell("grid cell (window " + std::to_string(tasks[t].window) + ", arm " +
                             std::string(arm_name(tasks[t].arm)) + ")");
        }
    }
    for (const auto& slice : results)
        for (const auto& c : slice) grid.cells[c.key] = c.mape_percent;

    const auto expected = opts.models.size() * opts.windows.size() * opts.arms.size();
    if (grid.cells.size() != expected) throw InvariantError("experiment grid has holes");
    return grid;
}

std::string export_grid(const ExperimentGrid& grid, GridFormat format) {
    if (format == GridFormat::csv) {
        std::string out = "model,window,arm,mape_percent\n";
        for (const auto& [key, value] : grid.cells) {
            out += key.model + "," + std::to_string(key.window) + "," + std::string(arm_name(key.arm)) + "," +
                   text::format_double(value) + "\n";
        }
        return out;
    }
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& [key, value] : grid.cells)
        cells.push_back({{"model", key.model}, {"window", key.window}, {"arm", arm_name(key.arm)}, {"mape_percent", value}});
    nlohmann::json doc = {{"metadata",
                           {{"seed", grid.metadata.seed},
                            {"config_digest", grid.metadata.config_digest},
                            {"dataset_fingerprint", grid.metadata.dataset_fingerprint}}},
                          {"cells", std::move(cells)}};
    return doc.dump(2) + "\n";
}

ExperimentGrid parse_grid_csv(std::string_view raw) {
    const auto lines = text::split_lines(raw);
    if (lines.empty() || lines.front() != "model,window,arm,mape_percent")
        throw ParseError("missing grid header 'model,window,arm,mape_percent'");
    ExperimentGrid grid;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto fields = text::split(lines[i], ',');
        const auto row_no = std::to_string(i + 1);
        long long window = 0;
        double value = 0.0;
        if (fields.size() != 4 || !text::parse_int64(fields[1], window) || window <= 0 ||
            !text::parse_double(fields[3], value))
            throw ParseError("grid row " + row_no + " is malformed");
        grid.cells[{std::string(fields[0]), static_cast<std::size_t>(window), parse_arm(fields[2])}] = value;
    }
    return grid;
}

ExperimentGrid parse_grid_json(std::string_view raw) {
    try {
        const auto doc = nlohmann::json::parse(raw.begin(), raw.end());
        ExperimentGrid grid;
        const auto& meta = doc.at("metadata");
        grid.metadata.seed = meta.at("seed").get<std::uint64_t>();
        grid.metadata.config_digest = meta.at("config_digest").get<std::string>();
        grid.metadata.dataset_fingerprint = meta.at("dataset_fingerprint").get<std::string>();
        for (const auto& c : doc.at("cells"))
            grid.cells[{c.at("model").get<std::string>(), c.at("window").get<std::size_t>(),
                        parse_arm(c.at("arm").get<std::string>())}] = c.at("mape_percent").get<double>();
        return grid;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed grid JSON: ") + e.what());
    }
}

std::string export_plot_data(const TimeSeries& actual, std::span<const double> predicted, std::size_t offset) {
    if (offset > actual.size() || actual.size() - offset != predicted.size())
        throw ValidationError("predictions (" + std::to_string(predicted.size()) + ") do not align with actual[" +
                              std::to_string(offset) + "..] (" +
                              std::to_string(offset > actual.size() ? 0 : actual.size() - offset) + ")");
    std::string out = "timestamp,actual_gbps,predicted_gbps\n";
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        out += std::to_string(actual.timestamps()[offset + i]) + "," + text::format_double(actual.values()[offset + i]) +
               "," + text::format_double(predicted[i]) + "\n";
    }
    return out;
}

std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
        throw InvariantError("sha256 digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xF];
    }
    return out;
}

std::string dataset_fingerprint(const TimeSeries& series) { return sha256_hex(serialize_csv(series)); }

}  // namespace anomflow
