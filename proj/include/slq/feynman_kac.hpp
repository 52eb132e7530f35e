#pragma once

#include "slq/brownian.hpp"
#include "slq/problem.hpp"
#include "slq/regression.hpp"
#include "slq/riccati.hpp"

namespace slq {

/// Independent estimate of (R_i, r_i, ρ_i) through the flow dV = V(a dt + c dB), V(s) = Id,
/// and its inverse V₀: R_i(t) = V₀(t)·E[𝔏_t | 𝓕_t] with 𝔏_t = V(T)γ_i + ∫_t^T V h dτ.
/// r_i uses the same representation applied to the B-derivatives of γ_i and h.
struct FeynmanKacEstimate {
    SurrogatePath R, r, rho;
    Matrix mean;  // nodes × n, sample mean of V₀(t_k)𝔏_{t_k}
    Matrix se;    // nodes × n, its standard error
    double max_drift = 0.0;  // max over paths and nodes of ‖V V₀ − Id‖∞
};

inline constexpr double kInversionTolerance = 1e-6;

/// With reduced = false, a = Aᵀ − (S⁻¹L)ᵀBᵀ, c = Cᵀ − (S⁻¹L)ᵀDᵀ and h = α − LᵀS⁻¹β
/// (the Riccati-corrected system); with reduced = true, a = Aᵀ, c = Cᵀ, h = α.
/// Throws VInversionDrift when ‖V V₀ − Id‖ exceeds kInversionTolerance.
FeynmanKacEstimate feynman_kac_estimate(const SlqProblem& p, const RiccatiSolution& ric, const BrownianEnsemble& ens,
                                        const Basis& basis, int i, Execution exec = Execution::Parallel,
                                        bool reduced = false);

}  // namespace slq
