#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rmm/model.hpp"

namespace rmm::adapters {

struct MappingEntry {
    std::string external_concept;
    std::optional<ElementKind> canonical;  // nullopt: external concept kept out of the model
    std::string notes;
};

struct MappingTable {
    Tool tool;
    std::vector<MappingEntry> entries;

    bool maps(ElementKind kind) const;
};

const MappingTable& mapping_table(Tool tool);

/// Kinds that no tool table reaches. Listed explicitly rather than dropped silently.
std::vector<ElementKind> unmapped_kinds();

}  // namespace rmm::adapters
