// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "poolnet/data.hpp"

namespace poolnet {

/// Multi-source dataset whose attributes differ in value format (prices,
/// clock times, color words, VIN-like codes, ...). Each source renders every
/// attribute in its own style variant, so leave-one-source-out runs see a
/// format shift between training and test sources.
struct SyntheticOptions {
  int sources = 3;
  std::vector<std::string> attributes = {"price", "time", "color", "vin", "mileage"};
  int records_per_source = 200;
  std::uint64_t seed = 42;
};

/// Attribute kinds the generator knows how to render.
const std::vector<std::string>& synthetic_attribute_kinds();

/// Records are emitted source by source; within a source, attributes cycle in
/// the given order so every attribute gets an equal share (+-1).
std::vector<AttributeRecord> generate_synthetic(const SyntheticOptions& options);

}  // namespace poolnet
