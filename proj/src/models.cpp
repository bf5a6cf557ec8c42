#include "anomflow/error.hpp"
#include "anomflow/regressors.hpp"

namespace anomflow {

namespace {

GbtConfig gbt_preset(SplitMode mode, std::size_t depth, double lr) {
    GbtConfig c;
    c.split_mode = mode;
    c.max_depth = depth;
    c.learning_rate = lr;
    return c;
}

}  // namespace

const std::vector<ModelSpec>& model_presets() {
    static const std::vector<ModelSpec> presets{
        {"gbt-a", gbt_preset(SplitMode::exact, 3, 0.1)},
        {"gbt-b", gbt_preset(SplitMode::histogram, 3, 0.1)},
        {"gbt-c", gbt_preset(SplitMode::exact, 2, 0.05)},
        {"gbt-d", gbt_preset(SplitMode::histogram, 4, 0.05)},
        {"sgd", SgdConfig{}},
    };
    return presets;
}

const ModelSpec& find_preset(const std::string& name) {
    for (const auto& p : model_presets())
        if (p.name == name) return p;
    throw ConfigError("unknown model preset '" + name + "'");
}

ModelConfig with_seed(ModelConfig cfg, std::uint64_t seed) {
    std::visit([seed](auto& c) { c.seed = seed; }, cfg);
    return cfg;
}

TrainedModel fit_model(const ModelConfig& cfg, const SupervisedDataset& data) {
    if (const auto* g = std::get_if<GbtConfig>(&cfg)) return gbt_fit(data, *g);
    return sgd_fit(data, std::get<SgdConfig>(cfg));
}

std::vector<double> predict_model(const TrainedModel& model, const Matrix& features) {
    if (const auto* g = std::get_if<GbtModel>(&model)) return gbt_predict(*g, features);
    return sgd_predict(std::get<SgdModel>(model), features);
}

std::size_t model_window_length(const TrainedModel& model) {
    if (const auto* g = std::get_if<GbtModel>(&model)) return g->window_length;
    return std::get<SgdModel>(model).weights.size();
}

}  // namespace anomflow
