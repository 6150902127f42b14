#include "corrlab/theory.hpp"

#include <cmath>
#include <stdexcept>

namespace corrlab::theory {

void validate_world(const GaussianWorld& world) {
    if (!(std::abs(world.rho) < 1.0)) {
        throw std::domain_error("GaussianWorld: |rho| must be < 1");
    }
}

double pullback_prior_kl(const GaussianWorld& world, const std::array<double, 4>& a) {
    validate_world(world);
    const double det = a[0] * a[3] - a[1] * a[2];
    if (std::abs(det) < 1e-12) throw std::domain_error("pullback_prior_kl: singular map");
    const double rho = world.rho;

    // M = A^T A
    const double m00 = a[0] * a[0] + a[2] * a[2];
    const double m01 = a[0] * a[1] + a[2] * a[3];
    const double m11 = a[1] * a[1] + a[3] * a[3];

    // KL(N(0,S) || N(0,M^-1)) = 0.5 * (tr(M S) - 2 + ln det(M^-1) ... ) with
    // ln det(M^-1) = -ln det(M); S has unit diagonal so ln det S = ln(1-rho^2).
    const double trace_ms = m00 + m11 + 2.0 * rho * m01;
    const double logdet_m = std::log(det * det);  // det(A^T A) = det(A)^2
    const double logdet_s = std::log(1.0 - rho * rho);
    return 0.5 * (trace_ms - 2.0 - logdet_m - logdet_s);
}

std::array<double, 4> whitening_map(const GaussianWorld& world) {
    validate_world(world);
    // S* eigenvectors are (1,1)/sqrt(2) and (1,-1)/sqrt(2) with eigenvalues
    // 1 +/- rho; S*^(-1/2) shares them with eigenvalues (1 +/- rho)^(-1/2).
    const double ip = 1.0 / std::sqrt(1.0 + world.rho);
    const double im = 1.0 / std::sqrt(1.0 - world.rho);
    const double d = 0.5 * (ip + im);
    const double o = 0.5 * (ip - im);
    return {d, o, o, d};
}

namespace {

// Golden-section minimization of a unimodal 1D function on [lo, hi].
template <typename F>
double golden_min(F f, double lo, double hi) {
    constexpr double kInvPhi = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 200 && (b - a) > 1e-13; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

DiagonalFit min_kl_over_diagonal(const GaussianWorld& world) {
    validate_world(world);

    // For A = diag(u, v) (or the permuted anti-diagonal), the objective is
    // separable in u and v, so two 1D searches find the joint minimum.
    auto diag_kl = [&](double u, double v) {
        return pullback_prior_kl(world, {u, 0.0, 0.0, v});
    };
    auto anti_kl = [&](double u, double v) {
        return pullback_prior_kl(world, {0.0, u, v, 0.0});
    };

    const double u_diag = golden_min([&](double u) { return diag_kl(u, 1.0); }, 0.05, 20.0);
    const double v_diag = golden_min([&](double v) { return diag_kl(u_diag, v); }, 0.05, 20.0);
    const double kl_diag = diag_kl(u_diag, v_diag);

    const double u_anti = golden_min([&](double u) { return anti_kl(u, 1.0); }, 0.05, 20.0);
    const double v_anti = golden_min([&](double v) { return anti_kl(u_anti, v); }, 0.05, 20.0);
    const double kl_anti = anti_kl(u_anti, v_anti);

    DiagonalFit fit;
    if (kl_diag <= kl_anti) {
        fit.kl = kl_diag;
        fit.map = {u_diag, 0.0, 0.0, v_diag};
    } else {
        fit.kl = kl_anti;
        fit.map = {0.0, u_anti, v_anti, 0.0};
    }
    return fit;
}

double analytic_diagonal_gap(double rho) { return -0.5 * std::log(1.0 - rho * rho); }

}  // namespace corrlab::theory
