#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace lha {

struct TransportPlan {
  double cost = 0.0;                 // sum of flow * unit cost
  std::vector<std::int64_t> flow;    // row-major supply x demand
};

/// Exact balanced transportation problem with integer masses, solved by
/// successive shortest paths with node potentials. `cost` is row-major
/// supply.size() x demand.size() and must be non-negative.
TransportPlan solve_transport(std::span<const std::int64_t> supply,
                              std::span<const std::int64_t> demand,
                              std::span<const double> cost);

}  // namespace lha
