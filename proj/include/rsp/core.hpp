#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace rsp {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Raised when inputs violate a documented precondition.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Fourier inversion could not meet its tolerance; carries the tail bound.
class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& what, double tail_bound)
        : std::runtime_error(what), tail_bound_(tail_bound) {}
    double tail_bound() const noexcept { return tail_bound_; }

private:
    double tail_bound_;
};

/// A computed price left the model-free no-arbitrage band.
class ConsistencyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite loss during training. `component` names the offending term.
class DivergedError : public std::runtime_error {
public:
    DivergedError(const std::string& what, std::string component)
        : std::runtime_error(what), component_(std::move(component)) {}
    const std::string& component() const noexcept { return component_; }

private:
    std::string component_;
};

/// Requested a boundary target at a point that lies on no boundary face.
class NotBoundaryError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace detail {
inline void require(bool ok, const char* msg) {
    if (!ok) throw InvalidArgument(msg);
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Regime label. Interfaces are 1-based (1 or 2); use `index()` for storage.
class Regime {
public:
    constexpr Regime() = default;
    constexpr explicit Regime(int label) : label_(label) {
        if (label != 1 && label != 2) throw InvalidArgument("regime must be 1 or 2");
    }
    constexpr int label() const noexcept { return label_; }
    constexpr std::size_t index() const noexcept { return static_cast<std::size_t>(label_ - 1); }
    constexpr Regime other() const noexcept { return Regime(3 - label_); }
    friend constexpr bool operator==(Regime, Regime) = default;

private:
    int label_ = 1;
};

/// Per-regime pair of values, indexed by regime.
using RegimePair = std::array<double, 2>;

struct BsmRsParams {
    double r = 0.0;
    RegimePair sigma{0.2, 0.2};
    double lambda12 = 0.0;
    double lambda21 = 0.0;

    void validate() const {
        detail::require(std::isfinite(r) && r >= 0.0, "BsmRsParams: r must be >= 0");
        detail::require(sigma[0] > 0.0 && sigma[1] > 0.0, "BsmRsParams: sigma must be > 0");
        detail::require(lambda12 >= 0.0 && lambda21 >= 0.0,
                        "BsmRsParams: transition rates must be >= 0");
    }
    /// Rate of leaving regime `i`.
    double exit_rate(Regime i) const noexcept { return i.label() == 1 ? lambda12 : lambda21; }
};

struct HestonRsParams {
    double r = 0.0;
    double kappa = 1.0;
    double gamma = 0.04;  // long-run variance
    double rho = 0.0;
    RegimePair sigma{0.3, 0.3};  // vol-of-vol per regime
    double lambda12 = 0.0;
    double lambda21 = 0.0;

    void validate() const {
        detail::require(std::isfinite(r) && r >= 0.0, "HestonRsParams: r must be >= 0");
        detail::require(kappa > 0.0, "HestonRsParams: kappa must be > 0");
        detail::require(gamma > 0.0, "HestonRsParams: gamma must be > 0");
        detail::require(rho >= -1.0 && rho <= 1.0, "HestonRsParams: rho must lie in [-1, 1]");
        detail::require(sigma[0] > 0.0 && sigma[1] > 0.0, "HestonRsParams: sigma must be > 0");
        detail::require(lambda12 >= 0.0 && lambda21 >= 0.0,
                        "HestonRsParams: transition rates must be >= 0");
    }
    double exit_rate(Regime i) const noexcept { return i.label() == 1 ? lambda12 : lambda21; }
};

enum class PayoffKind { EuropeanPut };

struct OptionSpec {
    double strike = 70.0;
    double maturity = 1.0;
    PayoffKind kind = PayoffKind::EuropeanPut;

    void validate() const {
        detail::require(strike > 0.0, "OptionSpec: strike must be > 0");
        detail::require(maturity >= 0.0, "OptionSpec: maturity must be >= 0");
    }
};

struct MarketState {
    double t = 0.0;
    double spot = 70.0;
    std::optional<double> variance;  // Heston only
    Regime regime{1};

    void validate(const OptionSpec& spec) const {
        detail::require(t >= 0.0 && t <= spec.maturity, "MarketState: need 0 <= t <= T");
        detail::require(spot >= 0.0, "MarketState: spot must be >= 0");
        detail::require(!variance || *variance >= 0.0, "MarketState: variance must be >= 0");
    }
    double tau(const OptionSpec& spec) const noexcept { return spec.maturity - t; }
};

struct Interval {
    double low = 0.0;
    double high = 0.0;
};

struct PriceResult {
    double value = 0.0;
    std::optional<double> std_error;
    std::optional<Interval> ci98;
    Regime regime{1};
};

// ---------------------------------------------------------------------------
// Payoff and boundary formulas
// ---------------------------------------------------------------------------

inline double put_payoff(double spot, double strike) noexcept {
    return std::max(strike - spot, 0.0);
}

/// Strike discounted from T back to t; the S = 0 boundary value of a put.
inline double discounted_floor(double strike, double r, double t, double maturity) {
    if (t > maturity) throw InvalidArgument("discounted_floor: t > T");
    return strike * std::exp(-r * (maturity - t));
}

inline double norm_cdf(double x) noexcept { return 0.5 * std::erfc(-x * M_SQRT1_2); }

/// Black–Scholes European put. tau <= 0 collapses to the payoff.
inline double bs_put_closed_form(double spot, double strike, double r, double sigma, double tau) {
    if (tau <= 0.0) return put_payoff(spot, strike);
    if (spot <= 0.0) return strike * std::exp(-r * tau);
    detail::require(sigma > 0.0, "bs_put_closed_form: sigma must be > 0");
    const double vol = sigma * std::sqrt(tau);
    const double d1 = (std::log(spot / strike) + (r + 0.5 * sigma * sigma) * tau) / vol;
    const double d2 = d1 - vol;
    return strike * std::exp(-r * tau) * norm_cdf(-d2) - spot * norm_cdf(-d1);
}

/// Model-free put bounds [max(E e^{-r tau} - S, 0), E e^{-r tau}].
inline Interval put_bounds(double spot, double strike, double r, double tau) noexcept {
    const double disc = strike * std::exp(-r * tau);
    return {std::max(disc - spot, 0.0), disc};
}

}  // namespace rsp
