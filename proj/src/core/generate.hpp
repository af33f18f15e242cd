#pragma once

#include <cstdint>

#include "core/copula.hpp"
#include "core/subgroup.hpp"

namespace synteval {

/// Generate n rows from `gen` that satisfy `spec`.
///
/// Category atoms become exact conditions; interval atoms are drawn from the
/// truncated marginal and conditioned per row; neighborhood atoms condition
/// on the center's categorical coordinates and filter generated rows by the
/// radius until n are retained.
///
/// Throws EmptyConditional when the spec is unsatisfiable under the
/// generator's domains and NeighborhoodStall when a radius filter cannot be
/// populated within the draw budget.
GeneratedSample generate_for_spec(const CopulaGenerator& gen, const SubgroupSpec& spec,
                                  std::size_t n, std::uint64_t seed);

}  // namespace synteval
