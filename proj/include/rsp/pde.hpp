#pragma once

// Coupled pricing PDE residuals  r_i = dV_i/dt - D_i[V_1, V_2]  for the
// regime-switching Black–Scholes and Heston systems.
//
// The kernels are templated on the scalar so the same expressions evaluate
// one point (double) or a whole batch (Eigen arrays) inside the training loss.

#include <array>
#include <cmath>
#include <optional>

#include "rsp/core.hpp"

namespace rsp::pde {

enum class Model { BsmRs, HestonRs };

/// Value and partial derivatives of (V_1, V_2) at one point.
struct DerivBundle {
    RegimePair value{};
    RegimePair d_t{};
    RegimePair d_S{};
    RegimePair d_SS{};
    std::optional<RegimePair> d_v;
    std::optional<RegimePair> d_vv;
    std::optional<RegimePair> d_Sv;

    bool is_heston() const noexcept { return d_v && d_vv && d_Sv; }
};

/// BSM-RS residual for regime i with partner j:
///   dt V_i + 1/2 sigma_i^2 S^2 V_i,SS + r S V_i,S - r V_i - lambda_ij (V_i - V_j)
template <class T, class P>
std::array<T, 2> bsm_rs_residual_kernel(const std::array<T, 2>& v, const std::array<T, 2>& v_t,
                                        const std::array<T, 2>& v_s,
                                        const std::array<T, 2>& v_ss, const T& spot, const P& r,
                                        const P& sigma1, const P& sigma2, double lambda12,
                                        double lambda21) {
    const T s2 = spot * spot;
    return {v_t[0] + 0.5 * sigma1 * sigma1 * s2 * v_ss[0] + r * spot * v_s[0] - r * v[0] -
                lambda12 * (v[0] - v[1]),
            v_t[1] + 0.5 * sigma2 * sigma2 * s2 * v_ss[1] + r * spot * v_s[1] - r * v[1] -
                lambda21 * (v[1] - v[0])};
}

/// Heston-RS residual for regime i (vol-of-vol sigma_i):
///   dt V + 1/2 v S^2 V_SS + r S V_S - r V + 1/2 sigma_i^2 v V_vv
///   + rho sigma_i v S V_Sv + kappa (gamma - v) V_v - lambda_ij (V_i - V_j)
template <class T, class P>
std::array<T, 2> heston_rs_residual_kernel(
    const std::array<T, 2>& val, const std::array<T, 2>& v_t, const std::array<T, 2>& v_s,
    const std::array<T, 2>& v_ss, const std::array<T, 2>& v_v, const std::array<T, 2>& v_vv,
    const std::array<T, 2>& v_sv, const T& spot, const T& var, const P& r, const P& kappa,
    const P& gamma, const P& rho, const P& sigma1, const P& sigma2, double lambda12,
    double lambda21) {
    const T s2 = spot * spot;
    auto one = [&](int i, const P& sig, double lam) -> T {
        const int j = 1 - i;
        return v_t[i] + 0.5 * var * s2 * v_ss[i] + r * spot * v_s[i] - r * val[i] +
               0.5 * sig * sig * var * v_vv[i] + rho * sig * var * spot * v_sv[i] +
               kappa * (gamma - var) * v_v[i] - lam * (val[i] - val[j]);
    };
    return {one(0, sigma1, lambda12), one(1, sigma2, lambda21)};
}

inline RegimePair bsm_rs_residual(const DerivBundle& b, double spot, const BsmRsParams& p) {
    const auto res = bsm_rs_residual_kernel<double, double>(b.value, b.d_t, b.d_S, b.d_SS, spot,
                                                            p.r, p.sigma[0], p.sigma[1],
                                                            p.lambda12, p.lambda21);
    return {res[0], res[1]};
}

inline RegimePair heston_rs_residual(const DerivBundle& b, double spot, double variance,
                                     const HestonRsParams& p) {
    rsp::detail::require(b.is_heston(), "heston_rs_residual: bundle lacks variance derivatives");
    const auto res = heston_rs_residual_kernel<double, double>(
        b.value, b.d_t, b.d_S, b.d_SS, *b.d_v, *b.d_vv, *b.d_Sv, spot, variance, p.r, p.kappa,
        p.gamma, p.rho, p.sigma[0], p.sigma[1], p.lambda12, p.lambda21);
    return {res[0], res[1]};
}

/// Boundary target (same for both regimes) on the face the state lies on.
/// Faces are checked in order: expiry, S = 0, S = inf, v = 0 and v = inf (Heston).
inline RegimePair boundary_values(Model model, const MarketState& state, const OptionSpec& spec,
                                  double r) {
    auto both = [](double x) { return RegimePair{x, x}; };
    const double tau = spec.maturity - state.t;
    if (tau == 0.0) return both(put_payoff(state.spot, spec.strike));
    if (state.spot == 0.0) return both(discounted_floor(spec.strike, r, state.t, spec.maturity));
    if (std::isinf(state.spot)) return both(0.0);
    if (model == Model::HestonRs && state.variance) {
        const double v = *state.variance;
        // zero-variance limit: the spot grows deterministically at r
        if (v == 0.0) return both(std::max(spec.strike * std::exp(-r * tau) - state.spot, 0.0));
        if (std::isinf(v)) return both(0.0);
    }
    throw NotBoundaryError("boundary_values: state is not on a boundary face");
}

}  // namespace rsp::pde
