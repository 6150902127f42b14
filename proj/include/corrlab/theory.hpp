#pragma once

#include <array>

namespace corrlab::theory {

// Two correlated zero-mean unit-variance Gaussian factors with correlation
// coefficient rho; the model prior over latents is standard normal.
struct GaussianWorld {
    double rho = 0.0;
};

void validate_world(const GaussianWorld& world);

// KL( N(0, S*) || N(0, (A^T A)^-1) ) where S* = [[1, rho], [rho, 1]] and the
// linear map z = A c pulls the standard-normal latent prior back to factor
// space. Zero iff the map transports the true factor prior exactly.
// A is row-major 2x2; throws std::domain_error if A is singular.
double pullback_prior_kl(const GaussianWorld& world, const std::array<double, 4>& a);

// The map that achieves zero KL: A = S*^(-1/2) (an entangled map for rho != 0).
std::array<double, 4> whitening_map(const GaussianWorld& world);

struct DiagonalFit {
    double kl = 0.0;
    std::array<double, 4> map{1.0, 0.0, 0.0, 1.0};
};

// Minimum of pullback_prior_kl over maps that are diagonal up to permutation
// (numerical 1D searches on each axis; both the diagonal and anti-diagonal
// orientations are considered). Strictly positive whenever rho != 0: the
// likelihood gap of disentangled maps.
DiagonalFit min_kl_over_diagonal(const GaussianWorld& world);

// -0.5 * ln(1 - rho^2): the analytic value of the diagonal minimum.
double analytic_diagonal_gap(double rho);

}  // namespace corrlab::theory
