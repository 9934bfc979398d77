#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rmm/canonical.hpp"
#include "rmm/model.hpp"

namespace rmm {

enum class Severity { Error, Warning };

std::string_view to_string(Severity s);

struct Finding {
    std::string rule_id;
    Severity severity = Severity::Error;
    std::optional<ElementId> element;
    std::string message;

    bool operator==(const Finding&) const = default;
};

/// Ordering used for every published findings list: (severity, rule_id, element, message).
bool finding_less(const Finding& a, const Finding& b);
void sort_findings(std::vector<Finding>& findings);

/// Builds a finding whose severity comes from the catalogue entry for `rule_id`.
Finding make_finding(std::string_view rule_id, std::optional<ElementId> element, std::string message);

enum class RuleScope { Model, Adapter };

struct RuleInfo {
    std::string_view rule_id;
    Severity severity;
    RuleScope scope;
    std::string_view description;
};

/// Every rule a finding may carry. Model-scope rules are the ones `validate` checks;
/// adapter-scope rules are raised by the interchange adapters.
const std::vector<RuleInfo>& rule_catalogue();
const RuleInfo* find_rule(std::string_view rule_id);

/// Runs the full model-scope rule set. Never throws on inconsistent content.
std::vector<Finding> validate(const RiskModel& model);

bool has_errors(const std::vector<Finding>& findings);

/// Throws ValidationGateError when `validate(model)` reports any Error.
void require_no_errors(const RiskModel& model, std::string_view operation);

json findings_to_json(const std::vector<Finding>& findings);
std::vector<Finding> findings_from_json(const json& j);
/// Fixed-width table for terminals.
std::string format_findings(const std::vector<Finding>& findings);

}  // namespace rmm
