#pragma once

// Crank-Nicolson finite differences for the coupled regime-switching
// Black-Scholes put system on a uniform S grid, marching in time to maturity
// tau = T - t. The first step is replaced by two implicit Euler half-steps.

#include <Eigen/Dense>
#include <cmath>
#include <ostream>
#include <vector>

#include "rsp/core.hpp"
#include "rsp/pde.hpp"

namespace rsp::fd {

struct Grid1D {
    double s_max = 0.0;  // 0 means 4 * strike
    std::size_t n_space = 400;
    std::size_t n_time = 400;

    void validate(double strike) const {
        rsp::detail::require(s_max == 0.0 || s_max > strike, "Grid1D: S_max must exceed the strike");
        rsp::detail::require(n_space >= 50, "Grid1D: n_space must be >= 50");
        rsp::detail::require(n_time >= 50, "Grid1D: n_time must be >= 50");
    }
    double resolved_s_max(double strike) const { return s_max > 0.0 ? s_max : 4.0 * strike; }
};

/// Price surfaces V_1, V_2 on the (S, t) grid.
class Surface {
public:
    Surface(double s_max, std::size_t n_space, double maturity, std::size_t n_time)
        : s_max_(s_max), maturity_(maturity), ns_(n_space), nt_(n_time),
          data_(2 * (n_space + 1) * (n_time + 1), 0.0) {}

    std::size_t n_space() const noexcept { return ns_; }
    std::size_t n_time() const noexcept { return nt_; }
    double s_max() const noexcept { return s_max_; }
    double maturity() const noexcept { return maturity_; }
    double spot_at(std::size_t j) const noexcept { return s_max_ * double(j) / double(ns_); }
    /// Time-to-maturity of level k (level 0 is t = T).
    double tau_at(std::size_t k) const noexcept { return maturity_ * double(k) / double(nt_); }

    double& at(std::size_t k, std::size_t j, Regime i) { return data_[index(k, j, i)]; }
    double at(std::size_t k, std::size_t j, Regime i) const { return data_[index(k, j, i)]; }

    /// Bilinear interpolation in (S, tau); S beyond S_max returns 0.
    double value(Regime i, double spot, double tau) const {
        rsp::detail::require(spot >= 0.0, "Surface::value: spot must be >= 0");
        rsp::detail::require(tau >= 0.0 && tau <= maturity_ * (1.0 + 1e-12),
                        "Surface::value: tau outside the solved range");
        if (spot >= s_max_) return 0.0;
        const double xs = spot / s_max_ * double(ns_);
        const double xt = std::min(tau / maturity_ * double(nt_), double(nt_));
        const auto j = std::min<std::size_t>(static_cast<std::size_t>(xs), ns_ - 1);
        const auto k = std::min<std::size_t>(static_cast<std::size_t>(xt), nt_ - 1);
        const double ws = xs - double(j), wt = xt - double(k);
        return (1 - wt) * ((1 - ws) * at(k, j, i) + ws * at(k, j + 1, i)) +
               wt * ((1 - ws) * at(k + 1, j, i) + ws * at(k + 1, j + 1, i));
    }

    /// CSV with header `S,t,V1,V2`, one line per grid node.
    void write_csv(std::ostream& os) const {
        os << "S,t,V1,V2\n";
        for (std::size_t k = 0; k <= nt_; ++k)
            for (std::size_t j = 0; j <= ns_; ++j)
                os << spot_at(j) << ',' << maturity_ - tau_at(k) << ',' << at(k, j, Regime(1))
                   << ',' << at(k, j, Regime(2)) << '\n';
    }

private:
    std::size_t index(std::size_t k, std::size_t j, Regime i) const noexcept {
        return (k * (ns_ + 1) + j) * 2 + i.index();
    }

    double s_max_, maturity_;
    std::size_t ns_, nt_;
    std::vector<double> data_;
};

namespace detail {

using Mat2 = Eigen::Matrix2d;
using Vec2 = Eigen::Vector2d;

/// One theta-scheme step: (I - theta dt L) V_new = (I + (1 - theta) dt L) V_old.
/// Interior unknowns are solved with block Thomas elimination on 2 x 2 blocks.
inline void theta_step(const std::vector<Vec2>& old, std::vector<Vec2>& out, double dt,
                       double theta, const BsmRsParams& p, double lower_new) {
    const std::size_t n = old.size() - 1;
    const double lam[2] = {p.lambda12, p.lambda21};
    auto coeffs = [&](std::size_t j, int i, double& a, double& b, double& c) {
        const double al = 0.5 * p.sigma[i] * p.sigma[i] * double(j) * double(j);
        const double be = 0.5 * p.r * double(j);
        a = al - be;
        b = -2.0 * al - p.r - lam[i];
        c = al + be;
    };
    auto apply_L = [&](const std::vector<Vec2>& v, std::size_t j) {
        Vec2 out_j;
        for (int i = 0; i < 2; ++i) {
            double a, b, c;
            coeffs(j, i, a, b, c);
            out_j[i] = a * v[j - 1][i] + b * v[j][i] + c * v[j + 1][i] + lam[i] * v[j][1 - i];
        }
        return out_j;
    };

    const std::size_t m = n - 1;  // interior nodes 1..n-1
    std::vector<Mat2> bp(m);
    std::vector<Vec2> dp(m);
    std::vector<Vec2> cdiag(m);
    Vec2 prev_c = Vec2::Zero();
    for (std::size_t q = 0; q < m; ++q) {
        const std::size_t j = q + 1;
        Vec2 adiag, cd;
        Mat2 bj = Mat2::Identity();
        for (int i = 0; i < 2; ++i) {
            double a, b, c;
            coeffs(j, i, a, b, c);
            adiag[i] = -theta * dt * a;
            cd[i] = -theta * dt * c;
            bj(i, i) -= theta * dt * b;
            bj(i, 1 - i) = -theta * dt * lam[i];
        }
        Vec2 d = old[j];
        if (theta < 1.0) d += (1.0 - theta) * dt * apply_L(old, j);
        if (j == 1) d -= adiag * lower_new;  // both regimes share the S = 0 value
        cdiag[q] = cd;
        if (q == 0) {
            bp[q] = bj;
            dp[q] = d;
        } else {
            const Mat2 mult = adiag.asDiagonal() * bp[q - 1].inverse();
            bp[q] = bj - mult * prev_c.asDiagonal();
            dp[q] = d - mult * dp[q - 1];
        }
        prev_c = cd;
    }
    out.assign(n + 1, Vec2::Zero());
    out[0] = Vec2::Constant(lower_new);
    out[n] = Vec2::Zero();
    out[m] = bp[m - 1].inverse() * dp[m - 1];
    for (std::size_t q = m - 1; q-- > 0;)
        out[q + 1] = bp[q].inverse() * (dp[q] - cdiag[q].asDiagonal() * out[q + 2]);
}

}  // namespace detail

/// Coupled CN solve from t = T back to t = 0 for the put of `spec`.
inline Surface solve_bsm_rs_fd(const OptionSpec& spec, const BsmRsParams& p, const Grid1D& grid) {
    p.validate();
    grid.validate(spec.strike);
    rsp::detail::require(spec.maturity > 0.0, "solve_bsm_rs_fd: maturity must be > 0");
    const double s_max = grid.resolved_s_max(spec.strike);
    Surface surf(s_max, grid.n_space, spec.maturity, grid.n_time);
    const double dt = spec.maturity / double(grid.n_time);

    std::vector<detail::Vec2> v(grid.n_space + 1), next;
    for (std::size_t j = 0; j <= grid.n_space; ++j)
        v[j] = detail::Vec2::Constant(put_payoff(surf.spot_at(j), spec.strike));
    auto store = [&](std::size_t k) {
        for (std::size_t j = 0; j <= grid.n_space; ++j) {
            surf.at(k, j, Regime(1)) = v[j][0];
            surf.at(k, j, Regime(2)) = v[j][1];
        }
    };
    auto lower = [&](double tau) {
        const MarketState s0{spec.maturity - tau, 0.0, std::nullopt, Regime(1)};
        return pde::boundary_values(pde::Model::BsmRs, s0, spec, p.r)[0];
    };
    store(0);
    // Rannacher start-up
    detail::theta_step(v, next, 0.5 * dt, 1.0, p, lower(0.5 * dt));
    v.swap(next);
    detail::theta_step(v, next, 0.5 * dt, 1.0, p, lower(dt));
    v.swap(next);
    store(1);
    for (std::size_t k = 2; k <= grid.n_time; ++k) {
        detail::theta_step(v, next, dt, 0.5, p, lower(double(k) * dt));
        v.swap(next);
        store(k);
    }
    return surf;
}

/// Price at (state, spec) from a fresh solve whose grid holds the state's spot.
inline PriceResult put_price_fd(const MarketState& state, const OptionSpec& spec,
                                const BsmRsParams& p, const Grid1D& grid) {
    const double tau = state.tau(spec);
    rsp::detail::require(tau >= 0.0, "put_price_fd: t must be <= T");
    PriceResult out;
    out.regime = state.regime;
    if (tau == 0.0) {
        out.value = put_payoff(state.spot, spec.strike);
        return out;
    }
    const OptionSpec local{spec.strike, tau, spec.kind};
    const Surface s = solve_bsm_rs_fd(local, p, grid);
    out.value = s.value(state.regime, state.spot, tau);
    return out;
}

}  // namespace rsp::fd
