#pragma once

#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

#include "anomflow/ensemble.hpp"
#include "anomflow/regressors.hpp"

namespace anomflow {

using AnyModel = std::variant<GbtModel, SgdModel, StackedModel>;

inline constexpr int kModelFormatVersion = 1;

/// Self-describing JSON model document. Doubles are written in shortest
/// round-trip form, so load(save(m)) == m bit for bit.
std::string save_model(const AnyModel& model, const nlohmann::json& metadata = nlohmann::json::object());

/// Throws ParseError on malformed or unsupported documents.
AnyModel load_model(std::string_view document);

nlohmann::json model_to_json(const AnyModel& model);
AnyModel model_from_json(const nlohmann::json& doc);

std::vector<double> predict_any(const AnyModel& model, const Matrix& features);
std::size_t window_length_of(const AnyModel& model);
std::string kind_of(const AnyModel& model);

}  // namespace anomflow
