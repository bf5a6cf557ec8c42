#include "anomflow/model_io.hpp"

#include "anomflow/error.hpp"

namespace anomflow {

using nlohmann::json;

namespace {

json gbt_config_json(const GbtConfig& c) {
    return {{"n_trees", c.n_trees},
            {"learning_rate", c.learning_rate},
            {"max_depth", c.max_depth},
            {"min_samples_leaf", c.min_samples_leaf},
            {"split_mode", c.split_mode == SplitMode::exact ? "exact" : "histogram"},
            {"n_bins", c.n_bins},
            {"seed", c.seed}};
}

GbtConfig gbt_config_from(const json& j) {
    GbtConfig c;
    c.n_trees = j.at("n_trees").get<std::size_t>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.max_depth = j.at("max_depth").get<std::size_t>();
    c.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
    const auto mode = j.at("split_mode").get<std::string>();
    if (mode != "exact" && mode != "histogram") throw ParseError("unknown split_mode '" + mode + "'");
    c.split_mode = mode == "exact" ? SplitMode::exact : SplitMode::histogram;
    c.n_bins = j.at("n_bins").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

json sgd_config_json(const SgdConfig& c) {
    return {{"epochs", c.epochs},
            {"learning_rate", c.learning_rate},
            {"schedule", c.schedule == LearningSchedule::constant ? "constant" : "inverse_scaling"},
            {"power_t", c.power_t},
            {"l2_penalty", c.l2_penalty},
            {"seed", c.seed}};
}

SgdConfig sgd_config_from(const json& j) {
    SgdConfig c;
    c.epochs = j.at("epochs").get<std::size_t>();
    c.learning_rate = j.at("learning_rate").get<double>();
    const auto sched = j.at("schedule").get<std::string>();
    if (sched != "constant" && sched != "inverse_scaling") throw ParseError("unknown schedule '" + sched + "'");
    c.schedule = sched == "constant" ? LearningSchedule::constant : LearningSchedule::inverse_scaling;
    c.power_t = j.at("power_t").get<double>();
    c.l2_penalty = j.at("l2_penalty").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

json gbt_json(const GbtModel& m) {
    json trees = json::array();
    for (const auto& t : m.trees) {
        // Node arrays: [feature, threshold, left, right, value]
        json nodes = json::array();
        for (const auto& n : t.nodes) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
        trees.push_back(std::move(nodes));
    }
    return {{"kind", "gbt"},
            {"config", gbt_config_json(m.config)},
            {"init_value", m.init_value},
            {"learning_rate", m.learning_rate},
            {"window_length", m.window_length},
            {"trees", std::move(trees)}};
}

GbtModel gbt_from(const json& j) {
    GbtModel m;
    m.config = gbt_config_from(j.at("config"));
    m.init_value = j.at("init_value").get<double>();
    m.learning_rate = j.at("learning_rate").get<double>();
    m.window_length = j.at("window_length").get<std::size_t>();
    for (const auto& jt : j.at("trees")) {
        RegressionTree t;
        for (const auto& jn : jt) {
            TreeNode n;
            n.feature = jn.at(0).get<int>();
            n.threshold = jn.at(1).get<double>();
            n.left = jn.at(2).get<int>();
            n.right = jn.at(3).get<int>();
            n.value = jn.at(4).get<double>();
            t.nodes.push_back(n);
        }
        const auto count = static_cast<int>(t.nodes.size());
        if (count == 0) throw ParseError("tree with no nodes");
        for (const auto& n : t.nodes) {
            if (n.is_leaf()) continue;
            if (n.feature >= static_cast<int>(m.window_length) || n.left <= 0 || n.right <= 0 || n.left >= count ||
                n.right >= count)
                throw ParseError("tree node references out of range");
        }
        m.trees.push_back(std::move(t));
    }
    return m;
}

json sgd_json(const SgdModel& m) {
    return {{"kind", "sgd"},
            {"config", sgd_config_json(m.config)},
            {"weights", m.weights},
            {"intercept", m.intercept},
            {"scaler", {{"mean", m.scaler.mean}, {"std", m.scaler.std_dev}}}};
}

SgdModel sgd_from(const json& j) {
    SgdModel m;
    m.config = sgd_config_from(j.at("config"));
    m.weights = j.at("weights").get<std::vector<double>>();
    m.intercept = j.at("intercept").get<double>();
    m.scaler.mean = j.at("scaler").at("mean").get<std::vector<double>>();
    m.scaler.std_dev = j.at("scaler").at("std").get<std::vector<double>>();
    if (m.scaler.mean.size() != m.weights.size() || m.scaler.std_dev.size() != m.weights.size())
        throw ParseError("sgd scaler width does not match weights");
    return m;
}

json trained_json(const TrainedModel& m) {
    return std::visit([](const auto& x) { return model_to_json(AnyModel{x}); }, m);
}

}  // namespace

json model_to_json(const AnyModel& model) {
    if (const auto* g = std::get_if<GbtModel>(&model)) return gbt_json(*g);
    if (const auto* s = std::get_if<SgdModel>(&model)) return sgd_json(*s);
    const auto& st = std::get<StackedModel>(model);
    json bases = json::array();
    for (std::size_t i = 0; i < st.base_models.size(); ++i) {
        auto b = trained_json(st.base_models[i]);
        b["name"] = st.base_names.at(i);
        bases.push_back(std::move(b));
    }
    return {{"kind", "stack"},
            {"k", st.k},
            {"ridge_lambda", st.ridge_lambda},
            {"meta_weights", st.meta_weights},
            {"meta_intercept", st.meta_intercept},
            {"bases", std::move(bases)}};
}

AnyModel model_from_json(const json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "gbt") return gbt_from(j);
    if (kind == "sgd") return sgd_from(j);
    if (kind != "stack") throw ParseError("unknown model kind '" + kind + "'");
    StackedModel st;
    st.k = j.at("k").get<std::size_t>();
    st.ridge_lambda = j.at("ridge_lambda").get<double>();
    st.meta_weights = j.at("meta_weights").get<std::vector<double>>();
    st.meta_intercept = j.at("meta_intercept").get<double>();
    for (const auto& b : j.at("bases")) {
        st.base_names.push_back(b.at("name").get<std::string>());
        const auto base_kind = b.at("kind").get<std::string>();
        if (base_kind == "gbt") {
            st.base_models.emplace_back(gbt_from(b));
        } else if (base_kind == "sgd") {
            st.base_models.emplace_back(sgd_from(b));
        } else {
            throw ParseError("unsupported base model kind '" + base_kind + "'");
        }
    }
    if (st.meta_weights.size() != st.base_models.size()) throw ParseError("meta weight count does not match bases");
    return st;
}

std::string save_model(const AnyModel& model, const json& metadata) {
    json doc = {{"format", "anomflow-model"},
                {"version", kModelFormatVersion},
                {"metadata", metadata},
                {"model", model_to_json(model)}};
    return doc.dump(1) + "\n";
}

AnyModel load_model(std::string_view document) {
    try {
        const auto doc = json::parse(document.begin(), document.end());
        if (doc.at("format").get<std::string>() != "anomflow-model") throw ParseError("not an anomflow model document");
        if (doc.at("version").get<int>() != kModelFormatVersion)
            throw ParseError("unsupported model document version");
        return model_from_json(doc.at("model"));
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed model document: ") + e.what());
    }
}

std::vector<double> predict_any(const AnyModel& model, const Matrix& features) {
    if (const auto* g = std::get_if<GbtModel>(&model)) return gbt_predict(*g, features);
    if (const auto* s = std::get_if<SgdModel>(&model)) return sgd_predict(*s, features);
    return stack_predict(std::get<StackedModel>(model), features);
}

std::size_t window_length_of(const AnyModel& model) {
    if (const auto* g = std::get_if<GbtModel>(&model)) return g->window_length;
    if (const auto* s = std::get_if<SgdModel>(&model)) return s->weights.size();
    return std::get<StackedModel>(model).window_length();
}

std::string kind_of(const AnyModel& model) {
    if (std::holds_alternative<GbtModel>(model)) return "gbt";
    if (std::holds_alternative<SgdModel>(model)) return "sgd";
    return "stack";
}

}  // namespace anomflow
