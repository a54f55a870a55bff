#pragma once

// Regime-switching Black–Scholes put pricing by Fourier inversion of the
// log-price characteristic function. The regime expectation is carried by a
// 2x2 complex matrix exponential; the two exercise probabilities follow from
// the Gil-Pelaez/Shephard inversion integral.

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rsp/core.hpp"
#include "rsp/ctmc.hpp"

namespace rsp::cf {

using Complex = std::complex<double>;

/// Row-major 2x2 complex matrix [[a, b], [c, d]].
struct ComplexMat2 {
    Complex a{}, b{}, c{}, d{};

    static ComplexMat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    static ComplexMat2 diag(Complex x, Complex y) { return {x, 0.0, 0.0, y}; }

    friend ComplexMat2 operator*(const ComplexMat2& m, const ComplexMat2& n) {
        return {m.a * n.a + m.b * n.c, m.a * n.b + m.b * n.d,
                m.c * n.a + m.d * n.c, m.c * n.b + m.d * n.d};
    }
    friend ComplexMat2 operator*(Complex s, const ComplexMat2& m) {
        return {s * m.a, s * m.b, s * m.c, s * m.d};
    }
    ComplexMat2 operator-() const { return {-a, -b, -c, -d}; }
};

/// Integrated generator-plus-drift matrix over a horizon tau.
/// Off-diagonals are Q^T tau: lambda21 top-right, lambda12 bottom-left.
inline ComplexMat2 matrix_M(Complex eta, double tau, const BsmRsParams& p) {
    rsp::detail::require(tau >= 0.0, "matrix_M: tau must be >= 0");
    const Complex i{0.0, 1.0};
    const Complex drift = -i * eta - eta * eta;
    const double s1 = p.sigma[0] * p.sigma[0];
    const double s2 = p.sigma[1] * p.sigma[1];
    return {-p.lambda12 * tau + 0.5 * s1 * drift * tau, p.lambda21 * tau,
            p.lambda12 * tau, -p.lambda21 * tau + 0.5 * s2 * drift * tau};
}

/// exp(m) via the two-eigenvalue (Putzer) closed form:
///   exp(m) = e^{mu} [cosh(delta) I + sinh(delta)/delta (m - mu I)]
/// with mu = tr/2 and delta^2 = ((a-d)/2)^2 + bc. sinh(delta)/delta switches to
/// its Taylor series when the eigenvalues nearly coincide.
inline ComplexMat2 expm_2x2(const ComplexMat2& m) {
    const Complex mu = 0.5 * (m.a + m.d);
    const Complex half_gap = 0.5 * (m.a - m.d);
    const Complex delta = std::sqrt(half_gap * half_gap + m.b * m.c);

    Complex ch, shc;  // e^mu cosh(delta), e^mu sinh(delta)/delta
    if (std::abs(delta) < 1e-3) {
        const Complex d2 = delta * delta;
        const Complex em = std::exp(mu);
        ch = em * (1.0 + d2 / 2.0 * (1.0 + d2 / 12.0 * (1.0 + d2 / 30.0 * (1.0 + d2 / 56.0))));
        shc = em * (1.0 + d2 / 6.0 * (1.0 + d2 / 20.0 * (1.0 + d2 / 42.0 * (1.0 + d2 / 72.0))));
    } else {
        // e^{mu +/- delta} keeps the product finite when mu is very negative.
        const Complex ep = std::exp(mu + delta);
        const Complex en = std::exp(mu - delta);
        ch = 0.5 * (ep + en);
        shc = 0.5 * (ep - en) / delta;
    }
    return {ch + shc * half_gap, shc * m.b, shc * m.c, ch - shc * half_gap};
}

namespace detail {

inline double log_spot(const MarketState& state) {
    if (!(state.spot > 0.0)) throw InvalidArgument("characteristic function: spot must be > 0");
    return std::log(state.spot);
}

inline double integrated_variance_mean(const MarketState& state, double tau,
                                       const BsmRsParams& p) {
    const ctmc::Generator gen(p.lambda12, p.lambda21);
    const RegimePair occ = gen.expected_occupation(state.regime, tau);
    return p.sigma[0] * p.sigma[0] * occ[0] + p.sigma[1] * p.sigma[1] * occ[1];
}

}  // namespace detail

/// Characteristic function of log S_T under the pricing measure.
inline Complex char_fn_f1(Complex eta, const MarketState& state, const OptionSpec& spec,
                          const BsmRsParams& p) {
    const double y = detail::log_spot(state);
    const double tau = state.tau(spec);
    rsp::detail::require(tau >= 0.0, "char_fn_f1: t must be <= T");
    const Complex i{0.0, 1.0};
    const ComplexMat2 e = expm_2x2(matrix_M(eta, tau, p));
    // <e^M e_i, 1>: column sum for the current regime
    const Complex regime_term = state.regime.label() == 1 ? e.a + e.c : e.b + e.d;
    return std::exp(i * eta * y + i * p.r * eta * tau) * regime_term;
}

/// Characteristic function of log S_T under the stock-numeraire measure.
inline Complex char_fn_f2(Complex eta, const MarketState& state, const OptionSpec& spec,
                          const BsmRsParams& p) {
    const double y = detail::log_spot(state);
    const double tau = state.tau(spec);
    const Complex i{0.0, 1.0};
    return std::exp(-p.r * tau - y) * char_fn_f1(eta - i, state, spec, p);
}

enum class QuadratureScheme { AdaptiveGaussKronrod15 };

struct QuadratureConfig {
    double eta_max = 0.0;        // 0 selects the a-priori Gaussian-decay bound
    double tolerance = 1e-12;    // truncation tail and relative panel tolerance
    unsigned max_depth = 20;
    QuadratureScheme scheme = QuadratureScheme::AdaptiveGaussKronrod15;
    double eta_cap = 1e4;

    void validate() const {
        rsp::detail::require(eta_max >= 0.0, "QuadratureConfig: eta_max must be >= 0");
        rsp::detail::require(tolerance > 0.0, "QuadratureConfig: tolerance must be > 0");
    }
};

/// A log-price characteristic function plus what the inversion needs to
/// handle its two ends: the mean (the integrand's eta -> 0 limit) and a
/// Gaussian decay rate c with |f(eta)| <= exp(-c eta^2).
struct LogPriceCharFn {
    std::function<Complex(double)> eval;
    double mean = 0.0;
    double decay = 0.0;
};

struct ProbabilityResult {
    double value = 0.0;
    double eta_max = 0.0;
    double tail_bound = 0.0;
    double quadrature_error = 0.0;
};

inline double tail_bound(double decay, double eta_max) {
    if (decay <= 0.0) return std::numeric_limits<double>::infinity();
    const double x = decay * eta_max * eta_max;
    return std::exp(-x) / (2.0 * std::numbers::pi * x);
}

/// P(S_T <= strike) = 1/2 - (1/pi) int_0^inf Re(e^{-i eta ln E} f(eta) / (i eta)) d eta.
inline ProbabilityResult prob_below_detailed(const LogPriceCharFn& f, double strike,
                                             const QuadratureConfig& quad = {}) {
    quad.validate();
    rsp::detail::require(strike > 0.0, "prob_below: strike must be > 0");
    const double log_k = std::log(strike);

    double eta_max = quad.eta_max;
    if (eta_max == 0.0) {
        eta_max = f.decay > 0.0
                      ? std::sqrt(std::log(1.0 / quad.tolerance) / f.decay) + 10.0
                      : quad.eta_cap;
        eta_max = std::min(eta_max, quad.eta_cap);
    }
    const double tail = tail_bound(f.decay, eta_max);
    if (tail > quad.tolerance * 100.0) {
        throw QuadratureError("prob_below: truncated tail exceeds tolerance", tail);
    }

    const Complex i{0.0, 1.0};
    const double limit_at_zero = f.mean - log_k;
    auto integrand = [&](double eta) {
        if (eta < 1e-8) return limit_at_zero;
        return (std::exp(-i * eta * log_k) * f.eval(eta) / (i * eta)).real();
    };

    double err = 0.0;
    const double integral = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        integrand, 0.0, eta_max, quad.max_depth, quad.tolerance, &err);
    if (!std::isfinite(integral)) {
        throw QuadratureError("prob_below: non-finite integral", tail);
    }
    return {0.5 - integral / std::numbers::pi, eta_max, tail, err / std::numbers::pi};
}

inline double prob_below(const LogPriceCharFn& f, double strike, const QuadratureConfig& quad = {}) {
    return prob_below_detailed(f, strike, quad).value;
}

inline LogPriceCharFn make_f1(const MarketState& state, const OptionSpec& spec,
                              const BsmRsParams& p) {
    const double tau = state.tau(spec);
    const double s_min = std::min(p.sigma[0], p.sigma[1]);
    const double y = detail::log_spot(state);
    const double var = detail::integrated_variance_mean(state, tau, p);
    return {[=](double eta) { return char_fn_f1(eta, state, spec, p); },
            y + p.r * tau - 0.5 * var, 0.5 * s_min * s_min * tau};
}

inline LogPriceCharFn make_f2(const MarketState& state, const OptionSpec& spec,
                              const BsmRsParams& p) {
    const double tau = state.tau(spec);
    const double s_min = std::min(p.sigma[0], p.sigma[1]);
    const double y = detail::log_spot(state);
    const double var = detail::integrated_variance_mean(state, tau, p);
    return {[=](double eta) { return char_fn_f2(eta, state, spec, p); },
            y + p.r * tau + 0.5 * var, 0.5 * s_min * s_min * tau};
}

/// European put under regime-switching Black–Scholes. Results outside the
/// model-free band by more than 1e-6 raise ConsistencyError.
inline PriceResult put_price_cf(const MarketState& state, const OptionSpec& spec,
                                const BsmRsParams& p, const QuadratureConfig& quad = {}) {
    p.validate();
    spec.validate();
    state.validate(spec);
    const double tau = state.tau(spec);
    if (tau == 0.0) return {put_payoff(state.spot, spec.strike), {}, {}, state.regime};
    if (!(state.spot > 0.0)) throw InvalidArgument("put_price_cf: spot must be > 0");

    const double p1 = prob_below(make_f1(state, spec, p), spec.strike, quad);
    const double p2 = prob_below(make_f2(state, spec, p), spec.strike, quad);
    const double value = std::exp(-p.r * tau) * spec.strike * p1 - state.spot * p2;

    const Interval band = put_bounds(state.spot, spec.strike, p.r, tau);
    constexpr double kBandTol = 1e-6;
    if (value < band.low - kBandTol || value > band.high + kBandTol || !std::isfinite(value)) {
        throw ConsistencyError("put_price_cf: price outside no-arbitrage band; check quadrature");
    }
    return {value, {}, {}, state.regime};
}

}  // namespace rsp::cf
