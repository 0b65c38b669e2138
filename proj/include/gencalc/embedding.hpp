#pragma once

#include "gencalc/distribution.hpp"
#include "gencalc/mollifier.hpp"
#include "gencalc/netexpr.hpp"

namespace gencalc {

/// σ(f): the constant net of an ε-independent smooth expression.
NetExpr embed_smooth(const NetExpr& f);

/// ι(u): the net (ε, x) ↦ ⟨u, ψ⃗_ε(x)⟩. Derivatives of the result fall on the
/// kernel. Throws ArgumentError when the kernel and u differ in dimension.
NetExpr embed_distribution(DistributionPtr u, const SmoothingKernelNet& kernel);
NetExpr embed_distribution(DistributionPtr u, std::shared_ptr<const SmoothingKernelNet> kernel);

}  // namespace gencalc
