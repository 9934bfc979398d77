#include "rmm/adapters/mapping.hpp"

#include <algorithm>
#include <array>

namespace rmm::adapters {

bool MappingTable::maps(ElementKind kind) const {
    return std::any_of(entries.begin(), entries.end(),
                       [&](const MappingEntry& e) { return e.canonical == kind; });
}

namespace {

MappingTable pistar_table() {
    return {Tool::Pistar,
            {
                {"goal node", ElementKind::Goal,
                 "refinement links give the parent; customProperties carry refinement and secures"},
                {"actor (agent)", std::nullopt, "recorded as the owner of the goals it contains"},
                {"actor with security=attacker", ElementKind::Attacker,
                 "customProperties carry capability, motive and cooperative_facet"},
                {"goal node with security=antigoal", ElementKind::DreadedEvent,
                 "customProperties carry target, violates and severity"},
                {"task node with security=malicious", ElementKind::AttackScenario,
                 "skeleton only: refinement link to the anti-goal gives realizes, steps stay empty"},
                {"resource node", ElementKind::SupportAsset, "category defaults to software"},
                {"resource node with asset=business", ElementKind::BusinessAsset,
                 "customProperties carry kind, needs and supported_by"},
                {"role actor", std::nullopt, "role/person distinction is not captured; warned"},
                {"quality node, plain task, dependency", std::nullopt, "warned as unmapped"},
            }};
}

MappingTable monarc_table() {
    return {Tool::Monarc,
            {
                {"top-level asset", ElementKind::BusinessAsset, "primary asset"},
                {"nested asset (any depth)", ElementKind::SupportAsset,
                 "supports its top-level ancestor; deeper levels keep a path prefix in the name"},
                {"threat", ElementKind::Attacker,
                 "one generic attacker per threat name; likelihood becomes capability"},
                {"risk row threat + asset", ElementKind::DreadedEvent,
                 "violated property parsed from the threat name"},
                {"risk row vulnerability", ElementKind::Vulnerability, "qualification defaults to 4"},
                {"risk row", ElementKind::AttackScenario, "single step (asset, vulnerability)"},
                {"risk row", ElementKind::Risk, "strategy parsed case-insensitively"},
                {"risk row measure", ElementKind::Control, "linked only to mitigate rows"},
            }};
}

MappingTable cyrus_table() {
    return {Tool::Cyrus,
            {
                {"component", ElementKind::SupportAsset, "system-under-test component"},
                {"interface", ElementKind::Conduit, "zone-to-zone interface"},
                {"vulnerability", ElementKind::Vulnerability, "carries CVE ids"},
                {"attack_path", ElementKind::AttackScenario, "ordered asset:vulnerability steps"},
                {"test_suite", ElementKind::Risk, "one suite per mitigate risk, named after it"},
                {"test_result", std::nullopt, "verdicts become trace metadata on the risk"},
            }};
}

}  // namespace

const MappingTable& mapping_table(Tool tool) {
    static const std::array<MappingTable, 3> tables{pistar_table(), monarc_table(), cyrus_table()};
    return tables.at(static_cast<std::size_t>(tool));
}

std::vector<ElementKind> unmapped_kinds() {
    std::vector<ElementKind> out;
    for (std::size_t k = 0; k < kElementKindCount; ++k) {
        auto kind = static_cast<ElementKind>(k);
        bool reached = false;
        for (Tool t : {Tool::Pistar, Tool::Monarc, Tool::Cyrus}) {
            reached = reached || mapping_table(t).maps(kind);
        }
        if (!reached) {
            out.push_back(kind);
        }
    }
    return out;
}

}  // namespace rmm::adapters
