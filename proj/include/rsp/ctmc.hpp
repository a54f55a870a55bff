#pragma once

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "rsp/core.hpp"

namespace rsp::ctmc {

/// Two-state generator Q = [[-l12, l12], [l21, -l21]].
class Generator {
public:
    Generator(double lambda12, double lambda21) : lambda12_(lambda12), lambda21_(lambda21) {
        rsp::detail::require(std::isfinite(lambda12) && std::isfinite(lambda21),
                        "Generator: rates must be finite");
        rsp::detail::require(lambda12 >= 0.0 && lambda21 >= 0.0, "Generator: rates must be >= 0");
    }

    double lambda12() const noexcept { return lambda12_; }
    double lambda21() const noexcept { return lambda21_; }
    double exit_rate(Regime i) const noexcept { return i.label() == 1 ? lambda12_ : lambda21_; }

    /// Row-major rate matrix.
    std::array<std::array<double, 2>, 2> matrix() const noexcept {
        return {{{-lambda12_, lambda12_}, {lambda21_, -lambda21_}}};
    }

    /// Closed-form transition matrix exp(Q t).
    std::array<std::array<double, 2>, 2> transition(double t) const noexcept {
        const double s = lambda12_ + lambda21_;
        if (s == 0.0) return {{{1.0, 0.0}, {0.0, 1.0}}};
        const double e = std::exp(-s * t);
        const double p11 = (lambda21_ + lambda12_ * e) / s;
        const double p22 = (lambda12_ + lambda21_ * e) / s;
        return {{{p11, 1.0 - p11}, {1.0 - p22, p22}}};
    }

    /// Expected time spent in each regime over [0, horizon] starting from `initial`.
    RegimePair expected_occupation(Regime initial, double horizon) const noexcept {
        const double s = lambda12_ + lambda21_;
        if (s == 0.0) {
            RegimePair occ{0.0, 0.0};
            occ[initial.index()] = horizon;
            return occ;
        }
        const double pi1 = lambda21_ / s;
        // integral of (p_i1(u) - pi1) du over [0, horizon]
        const double decay = (1.0 - std::exp(-s * horizon)) / s;
        const double start = (initial.label() == 1 ? 1.0 : 0.0) - pi1;
        const double occ1 = pi1 * horizon + start * decay;
        return {occ1, horizon - occ1};
    }

private:
    double lambda12_;
    double lambda21_;
};

/// Piecewise-constant right-continuous regime trajectory on [0, horizon].
struct RegimePath {
    std::vector<double> switch_times;  // strictly increasing, each < horizon
    std::vector<Regime> states;        // states.size() == switch_times.size() + 1
    double horizon = 0.0;

    Regime at(double time) const noexcept {
        std::size_t k = 0;
        while (k < switch_times.size() && switch_times[k] <= time) ++k;
        return states[k];
    }
};

/// Event-driven exact simulation with exponential holding times.
template <class Rng>
RegimePath simulate_regime_path(const Generator& gen, Regime initial, double horizon, Rng& rng) {
    rsp::detail::require(horizon >= 0.0, "simulate_regime_path: horizon must be >= 0");
    RegimePath path;
    path.horizon = horizon;
    path.states.push_back(initial);
    Regime current = initial;
    double clock = 0.0;
    for (;;) {
        const double rate = gen.exit_rate(current);
        if (rate <= 0.0) break;  // absorbing
        std::exponential_distribution<double> hold(rate);
        clock += hold(rng);
        if (!(clock < horizon)) break;
        current = current.other();
        path.switch_times.push_back(clock);
        path.states.push_back(current);
    }
    return path;
}

/// Time spent in `regime` over the whole path.
inline double occupation_time(const RegimePath& path, Regime regime) noexcept {
    double total = 0.0;
    double start = 0.0;
    for (std::size_t k = 0; k < path.states.size(); ++k) {
        const double end = k < path.switch_times.size() ? path.switch_times[k] : path.horizon;
        if (path.states[k] == regime) total += end - start;
        start = end;
    }
    return total;
}

/// Both occupations; the second is horizon minus the first so the pair sums exactly.
inline RegimePair occupation_times(const RegimePath& path) noexcept {
    const double first = occupation_time(path, Regime(1));
    return {first, path.horizon - first};
}

/// Regime at each left endpoint of an n_steps uniform grid on [0, horizon].
inline std::vector<Regime> discretize(const RegimePath& path, std::size_t n_steps) {
    rsp::detail::require(n_steps >= 1, "discretize: n_steps must be >= 1");
    std::vector<Regime> out(n_steps);
    const double dt = path.horizon / static_cast<double>(n_steps);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n_steps; ++i) {
        const double left = static_cast<double>(i) * dt;
        while (k < path.switch_times.size() && path.switch_times[k] <= left) ++k;
        out[i] = path.states[k];
    }
    return out;
}

}  // namespace rsp::ctmc
