#pragma once

// Canonical `.riskmodel.json` document: sorted keys, elements ordered by id,
// every enum written as a lower-case string.

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "rmm/model.hpp"

namespace rmm {

using json = nlohmann::json;

std::string_view to_string(SecurityProperty v);
std::string_view to_string(BusinessAssetKind v);
std::string_view to_string(SupportCategory v);
std::string_view to_string(Refinement v);
std::string_view to_string(TreatmentStrategy v);
std::string_view to_string(LineOfDefence v);
std::string_view to_string(Tool v);
std::string_view to_string(TraceDirection v);
std::string_view to_string(ElementKind v);

/// Parses a lower-case enum name. Returns nullopt on an unknown name.
template <typename Enum>
std::optional<Enum> enum_from_string(std::string_view s);

/// Singular snake_case name of the kind ("business_asset").
std::string_view kind_name(ElementKind v);
std::optional<ElementKind> kind_from_name(std::string_view s);

// Element <-> JSON. from_json throws SchemaError on missing/ill-typed fields.
json to_json(const Element& element);
Element element_from_json(ElementKind kind, const json& j);
json to_json(const TraceLink& link);
TraceLink trace_link_from_json(const json& j);

/// Full canonical document as a JSON value.
json model_to_json(const RiskModel& model);
/// Builds a model from a JSON value without checking references.
RiskModel model_from_json(const json& doc);

/// Parses and checks a canonical document.
/// Throws ParseError, SchemaError or DanglingRefError.
RiskModel load_model(std::string_view text);

/// Deterministic serialization; identical models give identical bytes.
std::string save_model(const RiskModel& model);

/// Parses JSON text, translating syntax errors into ParseError with line/column.
json parse_json(std::string_view text);

/// Reads a whole file; throws Error if it cannot be opened.
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace rmm
