#pragma once

// piStar strategic-model (iStar 2.0) documents.
//
// Security concepts ride on node customProperties under the key `security`:
//   actor  security=attacker  -> Attacker (capability, motive, cooperative_facet)
//   goal   security=antigoal  -> DreadedEvent (target, violates, severity)
//   task   security=malicious -> AttackScenario skeleton (realizes via refinement link)
// Resources map to support assets, or to business assets when asset=business.

#include <string_view>

#include "rmm/adapters/common.hpp"

namespace rmm::adapters {

/// Throws SchemaError when the document lacks the actor/node/link structure.
ImportResult import_pistar(const json& doc);
/// Throws ParseError on malformed text.
ImportResult import_pistar(std::string_view text);

/// Throws ValidationGateError when the model has Error findings.
ExportResult export_pistar(const RiskModel& model);

}  // namespace rmm::adapters
