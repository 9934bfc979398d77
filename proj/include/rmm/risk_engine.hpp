#pragma once

#include <array>
#include <set>
#include <string>
#include <vector>

#include "rmm/model.hpp"
#include "rmm/validation.hpp"

namespace rmm::engine {

inline constexpr int kScaleSize = Level::kMax + 1;
inline constexpr int kDefaultAcceptThreshold = 9;

/// Weakest link: min(attacker capability, qualification of every step's vulnerability).
/// Throws UnresolvedRefError when the event, attacker or a step vulnerability is missing.
Level scenario_feasibility(const AttackScenario& scenario, const RiskModel& model);

/// impact x feasibility on 0..16. Throws RangeError when an argument is outside [0,4].
int inherent_level(int impact, int feasibility);
inline int inherent_level(Level impact, Level feasibility) {
    return inherent_level(impact.value(), feasibility.value());
}

/// Level after subtracting the summed reductions of every control mitigating `risk`
/// (clamped at zero). Non-mitigate strategies keep the inherent level.
int residual_level(const Risk& risk, const RiskModel& model);

struct RiskMatrix {
    // cells[impact][feasibility]
    std::array<std::array<std::set<ElementId>, kScaleSize>, kScaleSize> cells;
    std::array<std::string, kScaleSize> impact_labels{"negligible", "limited", "significant",
                                                      "major", "critical"};
    std::array<std::string, kScaleSize> feasibility_labels{"very low", "low", "moderate", "high",
                                                           "very high"};

    const std::set<ElementId>& cell(int impact, int feasibility) const {
        return cells.at(static_cast<std::size_t>(impact)).at(static_cast<std::size_t>(feasibility));
    }
    std::size_t total() const;
};

/// Partitions every risk by (impact, scenario feasibility).
/// Throws ValidationGateError when the model has Error findings.
RiskMatrix build_risk_matrix(const RiskModel& model);

/// 5 rows (impact 4 down to 0) x 5 count columns, comma separated, with a header row.
std::string format_matrix_csv(const RiskMatrix& matrix);
/// One line per risk: cell, inherent and residual levels, strategy.
std::string format_matrix_listing(const RiskMatrix& matrix, const RiskModel& model);

struct ZonePath {
    std::vector<ElementId> zones;
    std::vector<ElementId> conduits;  // conduits[i] joins zones[i] and zones[i+1]

    bool operator==(const ZonePath&) const = default;
};

/// Every simple zone path of at most `max_len` zones from `entry` to a zone holding a
/// support asset of `target`. Sorted by (length, zone ids, conduit ids).
std::vector<ZonePath> attack_paths(const RiskModel& model, const ElementId& entry,
                                   const ElementId& target, int max_len);

/// R-TOPOLOGY per consecutive step pair in distinct zones without a direct conduit;
/// W-ZONELESS when a step sits on an asset without a zone.
std::vector<Finding> check_scenario_topology(const AttackScenario& scenario, const RiskModel& model);

struct CoverageReport {
    std::set<ElementId> dreaded_events_without_scenario;
    std::set<ElementId> risks_without_strategy_rationale;
    std::set<ElementId> mitigate_risks_without_controls;
    std::set<ElementId> controls_unlinked;
    // Avoid-strategy risks: the supporting activity is expected to be decommissioned.
    std::set<ElementId> avoided_risks;

    bool empty() const;
    bool operator==(const CoverageReport&) const = default;
};

/// Throws ValidationGateError when the model has Error findings.
CoverageReport coverage_report(const RiskModel& model, int accept_threshold = kDefaultAcceptThreshold);

json to_json(const RiskMatrix& matrix);
json to_json(const ZonePath& path);
json to_json(const CoverageReport& report);

}  // namespace rmm::engine
