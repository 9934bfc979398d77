#pragma once

// MONARC-like risk-assessment project documents:
//
//   {project:{name}, assets:[{id,name,children:[...]}],
//    risks:[{asset,threat,vulnerability,likelihood,impact,strategy,measures:[...],remark}]}
//
// Top-level assets are business (primary) assets; every nested asset supports its
// top-level ancestor. Threat names read "<attacker> - <property>". Exports add optional
// fields (ids, needs, category, cves, qualification, feasibility, controls) that the
// importer honours, so a model survives export -> import on the mapped subset.

#include <optional>
#include <string>
#include <string_view>

#include "rmm/adapters/common.hpp"

namespace rmm::adapters {

/// Throws SchemaError when project/assets/risks are structurally wrong.
ImportResult import_monarc(const json& doc);
ImportResult import_monarc(std::string_view text);

/// Throws ValidationGateError when the model has Error findings.
ExportResult export_monarc(const RiskModel& model, std::string_view project_name = "risk-model");

/// Parses "accept", "Mitigate", MONARC's "reduction"/"denied"/"shared"/"accepted", ...
std::optional<TreatmentStrategy> parse_strategy(std::string_view text);

/// "<attacker name> - <property>"
std::string threat_name(const Attacker& attacker, SecurityProperty property);

}  // namespace rmm::adapters
