#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "rmm/model.hpp"

namespace rmm::testing {

struct GenOptions {
    int max_zones = 5;
    int max_conduits = 8;
    int max_steps = 5;
    std::size_t max_elements = 50;
    // Names with quotes, control characters and non-ASCII text.
    bool exotic_text = true;
    bool trace_links = true;
};

/// Random model free of Error findings, at most `max_elements` elements.
RiskModel random_model(std::uint64_t seed, const GenOptions& options = {});

/// Random edits of a valid model (add, change, remove elements and links), kept valid.
RiskModel mutate(const RiskModel& base, std::uint64_t seed);

std::string random_text(std::mt19937_64& rng, bool exotic);

}  // namespace rmm::testing
