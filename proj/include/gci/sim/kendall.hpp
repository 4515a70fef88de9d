#pragma once

#include <span>

namespace gci::sim {

/// Kendall tau-b rank correlation; handles ties in either vector. Returns 0
/// when one side is constant.
double kendall_tau_b(std::span<const double> x, std::span<const double> y);

}  // namespace gci::sim
