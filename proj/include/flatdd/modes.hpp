#pragma once

#include <variant>

#include "flatdd/basis.hpp"

namespace flatdd {

/// Explicit basis: Psi is evaluated and the stacked system materialized.
struct ExplicitMode {
  basis::BasisSet basis;
};

/// Implicit basis: only kernel inner products Psi(a)^T Psi(b) are used.
struct KernelMode {
  basis::Kernel kernel;
};

using Mode = std::variant<ExplicitMode, KernelMode>;

}  // namespace flatdd
