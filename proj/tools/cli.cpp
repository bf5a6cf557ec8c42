#include "cli.hpp"

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "anomflow/anomaly.hpp"
#include "anomflow/ensemble.hpp"
#include "anomflow/error.hpp"
#include "anomflow/evaluation.hpp"
#include "anomflow/model_io.hpp"
#include "anomflow/regressors.hpp"
#include "anomflow/text.hpp"
#include "anomflow/timeseries.hpp"
#include "anomflow/windowing.hpp"

namespace anomflow::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void log_line(const std::string& line) { std::cerr << line << '\n'; }

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

/// Output sink: "-" or empty means standard output. Files are written to a
/// temporary sibling and renamed into place.
class Outputs {
public:
    void add(std::string path, std::string bytes) { pending_.push_back({std::move(path), std::move(bytes)}); }

    void commit() {
        std::vector<std::pair<fs::path, fs::path>> staged;
        try {
            for (const auto& [path, bytes] : pending_) {
                if (path.empty() || path == "-") continue;
                const fs::path target(path);
                fs::path tmp = target;
                tmp += ".tmp-" + std::to_string(::getpid());
                {
                    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
                    if (!out) throw ValidationError("cannot write '" + path + "'");
                    staged.emplace_back(tmp, target);
                    out << bytes;
                    out.flush();
                    if (!out) throw ValidationError("cannot write '" + path + "'");
                }
            }
            for (const auto& [tmp, target] : staged) fs::rename(tmp, target);
        } catch (...) {
            std::error_code ec;
            for (const auto& [tmp, target] : staged) fs::remove(tmp, ec);
            throw;
        }
        for (const auto& [path, bytes] : pending_)
            if (path.empty() || path == "-") std::cout << bytes << std::flush;
    }

private:
    std::vector<std::pair<std::string, std::string>> pending_;
};

struct Common {
    std::string config_text;
    std::string config_digest;
};

json metadata_json(const Common& common, const std::string& command) {
    return {{"command", command}, {"config_digest", common.config_digest}, {"effective_config", common.config_text}};
}

/// Adds `bytes` at `path` plus, for file outputs, a `<path>.meta.json` sidecar.
void add_with_meta(Outputs& outs, const std::string& path, std::string bytes, const json& meta) {
    outs.add(path, std::move(bytes));
    if (!path.empty() && path != "-") outs.add(path + ".meta.json", meta.dump(2) + "\n");
}

TimeSeries load_series(const std::string& path, const ParseOptions& opts, bool keep_bps = false) {
    const auto raw = read_file(path);
    const auto first = raw.find_first_not_of(" \t\r\n\xEF\xBB\xBF");
    const bool is_json = (path.size() >= 5 && path.substr(path.size() - 5) == ".json") ||
                         (first != std::string::npos && raw[first] == '[');
    auto series = is_json ? parse_telemetry_json(raw, opts) : parse_telemetry_csv(raw, opts);
    if (!keep_bps && series.unit() == Unit::bps) series = bps_to_gbps(series);
    return series;
}

std::size_t worker_threads() {
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("ANOMFLOW_THREADS")) {
        long long cap = 0;
        if (!text::parse_int64(env, cap) || cap < 1) throw ConfigError("ANOMFLOW_THREADS must be a positive integer");
        n = std::min<std::size_t>(n, static_cast<std::size_t>(cap));
    }
    return n;
}

struct DetectorOptions {
    std::string method = "three-sigma";
    std::size_t trees = 100;
    std::size_t subsample = 256;
    double contamination = 0.0;  // 0 => fixed 0.5 score threshold
    std::uint64_t seed = 0;

    void bind(CLI::App* cmd) {
        cmd->add_option("--method", method, "three-sigma or isolation-forest")
            ->check(CLI::IsMember({"three-sigma", "isolation-forest"}))
            ->capture_default_str();
        cmd->add_option("--trees", trees, "isolation trees")->check(CLI::PositiveNumber)->capture_default_str();
        cmd->add_option("--subsample", subsample, "isolation subsample size")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_option("--contamination", contamination, "expected outlier fraction; 0 = score threshold 0.5")
            ->check(CLI::Range(0.0, 1.0))
            ->capture_default_str();
        cmd->add_option("--seed", seed, "detector seed")->capture_default_str();
    }

    IForestConfig iforest() const {
        IForestConfig c;
        c.n_trees = trees;
        c.subsample_size = subsample;
        if (contamination > 0.0) c.contamination = contamination;
        c.seed = seed;
        return c;
    }

    OutlierReport detect(const TimeSeries& s) const {
        return method == "three-sigma" ? three_sigma_detect(s) : iforest_detect(s, iforest());
    }
};

std::string report_csv(const TimeSeries& s, const OutlierReport& r) {
    std::string out = "index,timestamp,value,is_outlier,score_or_bound_violation\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double v = s.values()[i];
        double evidence = 0.0;
        if (r.method == DetectorMethod::isolation_forest) {
            evidence = r.scores[i];
        } else if (v > r.upper_bound) {
            evidence = v - r.upper_bound;
        } else if (v < r.lower_bound) {
            evidence = r.lower_bound - v;
        }
        out += std::to_string(i) + "," + std::to_string(s.timestamps()[i]) + "," + text::format_double(v) + "," +
               (r.mask[i] ? "1" : "0") + "," + text::format_double(evidence) + "\n";
    }
    return out;
}

std::string predictions_csv(const TimeSeries& s, const std::vector<double>& pred, std::size_t offset) {
    std::string out = "index,timestamp,predicted_gbps\n";
    for (std::size_t i = 0; i < pred.size(); ++i)
        out += std::to_string(offset + i) + "," + std::to_string(s.timestamps()[offset + i]) + "," +
               text::format_double(pred[i]) + "\n";
    return out;
}

std::vector<std::string> split_csv_list(const std::vector<std::string>& items) {
    std::vector<std::string> out;
    for (const auto& s : items)
        for (auto part : text::split(s, ','))
            if (auto t = text::trim(part); !t.empty()) out.emplace_back(t);
    return out;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"Anomaly-adjusted ISP traffic forecasting pipeline"};
    app.set_config("--config", "", "flat key = value file with [subcommand] sections");
    app.require_subcommand(1);

    Common common;
    Outputs outs;
    std::function<void()> action;

    // synth
    SynthConfig synth;
    std::string synth_out = "-";
    std::string truth_out;
    auto* synth_cmd = app.add_subcommand("synth", "generate a seeded synthetic Gbps series");
    auto bind_synth = [&synth](CLI::App* cmd, const std::string& prefix) {
        cmd->add_option("--" + prefix + "days", synth.days, "days to generate")->check(CLI::PositiveNumber)->capture_default_str();
        cmd->add_option("--" + prefix + "base", synth.base_gbps, "base Gbps")->capture_default_str();
        cmd->add_option("--" + prefix + "amplitude", synth.diurnal_amplitude, "diurnal amplitude Gbps")->capture_default_str();
        cmd->add_option("--" + prefix + "noise", synth.noise_std, "gaussian noise std")->capture_default_str();
        cmd->add_option("--" + prefix + "spike-fraction", synth.spike_fraction, "fraction of spiked points")
            ->check(CLI::Range(0.0, 1.0))
            ->capture_default_str();
        cmd->add_option("--" + prefix + "spike-multiplier", synth.spike_multiplier, "spike multiplier")->capture_default_str();
        cmd->add_option("--" + prefix + "cadence", synth.cadence_seconds, "seconds between points")->capture_default_str();
    };
    bind_synth(synth_cmd, "");
    synth_cmd->add_option("--seed", synth.seed, "generator seed")->capture_default_str();
    synth_cmd->add_option("--out", synth_out, "output series CSV ('-' = stdout)")->capture_default_str();
    synth_cmd->add_option("--truth-out", truth_out, "CSV of injected spike positions");
    synth_cmd->callback([&] {
        action = [&] {
            const auto gen = generate_synthetic(synth);
            const auto meta = metadata_json(common, "synth");
            add_with_meta(outs, synth_out, serialize_csv(gen.series), meta);
            if (!truth_out.empty()) {
                std::string t = "index,timestamp,is_spike\n";
                for (std::size_t i = 0; i < gen.series.size(); ++i)
                    t += std::to_string(i) + "," + std::to_string(gen.series.timestamps()[i]) + "," +
                         (gen.truth_mask[i] ? "1" : "0") + "\n";
                add_with_meta(outs, truth_out, t, meta);
            }
            log_line("synth: " + std::to_string(gen.series.size()) + " points");
        };
    });

    // ingest
    std::string input;
    ParseOptions parse_opts;
    long long points_per_day = 0;
    std::string ingest_out = "-";
    auto* ingest_cmd = app.add_subcommand("ingest", "parse telemetry, drop the incomplete last day, rescale to Gbps");
    ingest_cmd->add_option("--input", input, "telemetry JSON or CSV")->required();
    ingest_cmd->add_option("--cadence", parse_opts.cadence_seconds, "seconds between samples")->capture_default_str();
    ingest_cmd->add_flag("--fill-gaps", parse_opts.fill_gaps, "backward-fill missing cadence slots");
    ingest_cmd->add_option("--points-per-day", points_per_day, "samples per day (default 86400/cadence)");
    ingest_cmd->add_option("--out", ingest_out, "output series CSV")->capture_default_str();
    ingest_cmd->callback([&] {
        action = [&] {
            const auto raw = load_series(input, parse_opts, true);
            const auto ppd = points_per_day > 0 ? points_per_day : kSecondsPerDay / parse_opts.cadence_seconds;
            auto series = drop_incomplete_tail(raw, ppd);
            if (series.unit() == Unit::bps) series = bps_to_gbps(series);
            add_with_meta(outs, ingest_out, serialize_csv(series), metadata_json(common, "ingest"));
            log_line("ingest: " + std::to_string(raw.size()) + " points read, " + std::to_string(series.size()) +
                     " kept (" + std::to_string(series.size() / static_cast<std::size_t>(ppd)) + " complete days)");
        };
    });

    // detect / adjust
    DetectorOptions detector;
    std::string detect_out = "-";
    auto* detect_cmd = app.add_subcommand("detect", "flag outliers and write a per-point report");
    detect_cmd->add_option("--input", input, "series CSV or telemetry JSON")->required();
    detector.bind(detect_cmd);
    detect_cmd->add_option("--out", detect_out, "report CSV")->capture_default_str();
    detect_cmd->callback([&] {
        action = [&] {
            const auto series = load_series(input, parse_opts);
            const auto report = detector.detect(series);
            add_with_meta(outs, detect_out, report_csv(series, report), metadata_json(common, "detect"));
            std::ostringstream msg;
            msg << "detect: " << detector.method << " flagged " << report.outlier_count() << " of " << series.size();
            if (report.method == DetectorMethod::three_sigma)
                msg << " (bounds " << text::format_double(report.lower_bound) << " .. "
                    << text::format_double(report.upper_bound) << ")";
            log_line(msg.str());
        };
    });

    DetectorOptions adjust_detector;
    std::string adjust_out = "-";
    auto* adjust_cmd = app.add_subcommand("adjust", "backward-fill detected outliers");
    adjust_cmd->add_option("--input", input, "series CSV or telemetry JSON")->required();
    adjust_detector.bind(adjust_cmd);
    adjust_cmd->add_option("--out", adjust_out, "adjusted series CSV")->capture_default_str();
    adjust_cmd->callback([&] {
        action = [&] {
            const auto series = load_series(input, parse_opts);
            const auto report = adjust_detector.detect(series);
            const auto adjusted = backward_fill(series, report.mask);
            add_with_meta(outs, adjust_out, serialize_csv(adjusted), metadata_json(common, "adjust"));
            log_line("adjust: replaced " + std::to_string(report.outlier_count()) + " points");
        };
    });

    // train
    std::string model_name = "ensemble";
    std::size_t window = 12;
    std::size_t train_days = 0;
    std::size_t folds = 5;
    double ridge_lambda = 1e-3;
    std::uint64_t seed = 7;
    bool adjust_first = false;
    std::string model_out = "-";
    auto* train_cmd = app.add_subcommand("train", "fit one preset or the stacked ensemble");
    train_cmd->add_option("--input", input, "series CSV or telemetry JSON")->required();
    train_cmd->add_option("--model", model_name, "gbt-a|gbt-b|gbt-c|gbt-d|sgd|ensemble")->capture_default_str();
    train_cmd->add_option("--window", window, "lag window length")->check(CLI::PositiveNumber)->capture_default_str();
    train_cmd->add_option("--train-days", train_days, "use only the first N days (0 = all)")->capture_default_str();
    train_cmd->add_option("--folds", folds, "expanding folds for the ensemble")->capture_default_str();
    train_cmd->add_option("--ridge-lambda", ridge_lambda, "meta-model ridge penalty")->capture_default_str();
    train_cmd->add_option("--seed", seed, "training seed")->capture_default_str();
    train_cmd->add_flag("--adjust", adjust_first, "three-sigma detect and backward-fill before training");
    train_cmd->add_option("--out", model_out, "model document")->capture_default_str();
    train_cmd->callback([&] {
        action = [&] {
            if (model_name != kEnsembleModel) find_preset(model_name);
            auto series = load_series(input, parse_opts);
            if (adjust_first) series = backward_fill(series, three_sigma_detect(series).mask);
            if (train_days > 0) series = chronological_split(series, train_days, static_cast<std::size_t>(series.points_per_day())).train;
            const auto data = make_supervised(series, window);
            AnyModel model;
            if (model_name == kEnsembleModel) {
                model = stack_fit(data, model_presets(), folds, ridge_lambda, seed);
            } else {
                const auto& preset = find_preset(model_name);
                model = std::visit([](auto&& m) -> AnyModel { return m; },
                                   fit_model(with_seed(preset.config, base_seed(seed, preset.name)), data));
            }
            auto meta = metadata_json(common, "train");
            meta["model"] = model_name;
            meta["dataset_fingerprint"] = dataset_fingerprint(series);
            outs.add(model_out, save_model(model, meta));
            log_line("train: " + model_name + " W=" + std::to_string(window) + " on " + std::to_string(data.size()) +
                     " samples");
        };
    });

    // predict / plot-data
    std::string model_file;
    std::string predict_out = "-";
    auto* predict_cmd = app.add_subcommand("predict", "one-step predictions for every window of a series");
    predict_cmd->add_option("--input", input, "series CSV or telemetry JSON")->required();
    predict_cmd->add_option("--model-file", model_file, "model document from `train`")->required();
    predict_cmd->add_option("--out", predict_out, "predictions CSV")->capture_default_str();
    predict_cmd->callback([&] {
        action = [&] {
            const auto series = load_series(input, parse_opts);
            const auto model = load_model(read_file(model_file));
            const auto data = make_supervised(series, window_length_of(model));
            const auto pred = predict_any(model, data.features);
            add_with_meta(outs, predict_out, predictions_csv(series, pred, data.window_length),
                          metadata_json(common, "predict"));
            log_line("predict: " + std::to_string(pred.size()) + " predictions");
        };
    });

    std::size_t plot_offset = 0;
    std::string plot_out = "-";
    auto* plot_cmd = app.add_subcommand("plot-data", "actual vs predicted CSV for plotting");
    plot_cmd->add_option("--input", input, "series CSV or telemetry JSON")->required();
    plot_cmd->add_option("--model-file", model_file, "model document from `train`")->required();
    plot_cmd->add_option("--train-days", train_days, "start plotting after N days (0 = first predictable point)")
        ->capture_default_str();
    plot_cmd->add_flag("--adjust", adjust_first, "plot against the outlier-adjusted series");
    plot_cmd->add_option("--out", plot_out, "plot CSV")->capture_default_str();
    plot_cmd->callback([&] {
        action = [&] {
            if (model_name != kEnsembleModel) find_preset(model_name);
            auto series = load_series(input, parse_opts);
            if (adjust_first) series = backward_fill(series, three_sigma_detect(series).mask);
            const auto model = load_model(read_file(model_file));
            const auto w = window_length_of(model);
            const auto data = make_supervised(series, w);
            plot_offset = std::max(w, train_days * static_cast<std::size_t>(series.points_per_day()));
            if (plot_offset >= series.size()) throw ValidationError("--train-days leaves nothing to plot");
            const auto test = data.slice(plot_offset - w, data.size());
            const auto pred = predict_any(model, test.features);
            add_with_meta(outs, plot_out, export_plot_data(series, pred, plot_offset), metadata_json(common, "plot-data"));
            log_line("plot-data: " + std::to_string(pred.size()) + " rows");
        };
    });

    // grid
    GridOptions grid_opts;
    std::vector<std::string> windows_arg{"6", "9", "12", "15", "18"};
    std::vector<std::string> models_arg{"gbt-a", "gbt-b", "gbt-c", "gbt-d", "sgd", "ensemble"};
    std::vector<std::string> arms_arg{"with_outliers", "outlier_adjusted"};
    std::string score_against = "adjusted";
    std::string format = "csv";
    std::string grid_out = "-";
    std::string grid_input;
    auto* grid_cmd = app.add_subcommand("grid", "MAPE grid over models x windows x arms");
    grid_cmd->add_option("--input", grid_input, "series CSV or telemetry JSON (default: synthetic)");
    bind_synth(grid_cmd, "synth-");
    grid_cmd->add_option("--windows", windows_arg, "comma-separated window lengths")->delimiter(',')->capture_default_str();
    grid_cmd->add_option("--models", models_arg, "comma-separated model names")->delimiter(',')->capture_default_str();
    grid_cmd->add_option("--arms", arms_arg, "comma-separated arms")->delimiter(',')->capture_default_str();
    grid_cmd->add_option("--train-days", grid_opts.train_days, "training days")->capture_default_str();
    grid_cmd->add_option("--folds", grid_opts.k, "expanding folds for the ensemble")->capture_default_str();
    grid_cmd->add_option("--ridge-lambda", grid_opts.ridge_lambda, "meta-model ridge penalty")->capture_default_str();
    grid_cmd->add_option("--epsilon", grid_opts.epsilon, "MAPE zero guard (Gbps)")->capture_default_str();
    grid_cmd->add_option("--seed", grid_opts.seed, "seed for synthesis and training")->capture_default_str();
    grid_cmd->add_option("--score-against", score_against, "actuals for the adjusted arm")
        ->check(CLI::IsMember({"raw", "adjusted"}))
        ->capture_default_str();
    grid_cmd->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    grid_cmd->add_option("--out", grid_out, "grid report")->capture_default_str();
    grid_cmd->callback([&] {
        action = [&] {
            grid_opts.windows.clear();
            for (const auto& w : split_csv_list(windows_arg)) {
                long long v = 0;
                if (!text::parse_int64(w, v) || v <= 0) throw ConfigError("invalid window length '" + w + "'");
                grid_opts.windows.push_back(static_cast<std::size_t>(v));
            }
            grid_opts.models = split_csv_list(models_arg);
            grid_opts.arms.clear();
            for (const auto& a : split_csv_list(arms_arg)) {
                try {
                    grid_opts.arms.push_back(parse_arm(a));
                } catch (const ParseError&) {
                    throw ConfigError("unknown arm '" + a + "'");
                }
            }
            grid_opts.score_against = score_against == "raw" ? ScoreAgainst::raw : ScoreAgainst::adjusted;
            grid_opts.threads = worker_threads();
            grid_opts.on_cell = [](const CellReport& c) {
                log_line("cell " + c.key.model + " W=" + std::to_string(c.key.window) + " " +
                         std::string(arm_name(c.key.arm)) + " MAPE=" + text::format_double(c.mape_percent) + "%");
            };

            TimeSeries series = [&] {
                if (!grid_input.empty()) return load_series(grid_input, parse_opts);
                synth.seed = grid_opts.seed;
                return generate_synthetic(synth).series;
            }();
            const auto grid = run_grid(series, grid_opts);
            auto meta = metadata_json(common, "grid");
            meta["grid"] = {{"seed", grid.metadata.seed},
                            {"config_digest", grid.metadata.config_digest},
                            {"dataset_fingerprint", grid.metadata.dataset_fingerprint}};
            add_with_meta(outs, grid_out, export_grid(grid, format == "csv" ? GridFormat::csv : GridFormat::json), meta);
            log_line("grid: " + std::to_string(grid.cells.size()) + " cells");
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return static_cast<int>(ErrorKind::config);
    }

    try {
        const auto* active = app.get_subcommands().front();
        common.config_text = "[" + active->get_name() + "]\n" + active->config_to_str(true, false);
        common.config_digest = sha256_hex(common.config_text);
        if (!action) throw InvariantError("no subcommand action");
        action();
        outs.commit();
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return static_cast<int>(ErrorKind::invariant);
    }
}

}  // namespace anomflow::cli
