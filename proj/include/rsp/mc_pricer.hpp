#pragma once

// Monte Carlo put pricing for both regime-switching models.
//
// Paths are simulated in fixed-size batches; batch b draws from its own
// stream make_stream(seed, b), and batch sums are reduced in batch order.
// Estimates therefore depend only on (seed, n_paths), never on thread count.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "rsp/core.hpp"
#include "rsp/ctmc.hpp"
#include "rsp/parallel.hpp"

namespace rsp::mc {

inline constexpr double kZ98 = 2.326;  // two-sided 98% normal quantile
inline constexpr std::size_t kBatchPaths = 1024;

enum class VarianceScheme {
    FullTruncation,     // v+ in drift and diffusion
    DiffusionFloorOnly  // v+ only under the square root
};

struct McConfig {
    std::size_t n_paths = 100000;
    std::size_t steps_per_year = 250;
    std::uint64_t seed = 42;
    bool antithetic = false;
    VarianceScheme scheme = VarianceScheme::FullTruncation;
    std::size_t threads = 1;

    void validate() const {
        rsp::detail::require(n_paths >= 2, "McConfig: n_paths must be >= 2");
        rsp::detail::require(steps_per_year >= 1, "McConfig: steps_per_year must be >= 1");
        rsp::detail::require(!antithetic || n_paths % 2 == 0,
                        "McConfig: antithetic sampling needs an even path count");
    }
};

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    Interval ci98{};

    PriceResult to_price(Regime regime) const { return {mean, std_error, ci98, regime}; }
};

namespace detail {

/// Sum and sum of squares of independent samples, batch-local.
struct Moments {
    CompensatedSum sum;
    CompensatedSum sum_sq;
    std::size_t count = 0;
    void add(double x) {
        sum.add(x);
        sum_sq.add(x * x);
        ++count;
    }
};

inline McEstimate finish(const std::vector<Moments>& batches, double discount) {
    CompensatedSum s, s2;
    std::size_t n = 0;
    for (const auto& b : batches) {
        s.add(b.sum.value());
        s2.add(b.sum_sq.value());
        n += b.count;
    }
    const double mean = s.value() / static_cast<double>(n);
    const double var = std::max(0.0, (s2.value() - static_cast<double>(n) * mean * mean) /
                                         static_cast<double>(n - 1));
    const double se = std::sqrt(var / static_cast<double>(n));
    McEstimate est;
    est.mean = discount * mean;
    est.std_error = discount * se;
    est.ci98 = {est.mean - kZ98 * est.std_error, est.mean + kZ98 * est.std_error};
    return est;
}

/// Number of independent samples (pairs count as one under antithetics).
inline std::size_t sample_count(const McConfig& cfg) {
    return cfg.antithetic ? cfg.n_paths / 2 : cfg.n_paths;
}

inline std::size_t batch_count(std::size_t samples) {
    return (samples + kBatchPaths - 1) / kBatchPaths;
}

}  // namespace detail

/// Regime-switching Black–Scholes by exact simulation conditional on the
/// regime path: log S_T is Gaussian given the integrated variance.
inline McEstimate bsm_rs_put_mc(const MarketState& state, const OptionSpec& spec,
                                const BsmRsParams& p, const McConfig& cfg) {
    p.validate();
    spec.validate();
    state.validate(spec);
    cfg.validate();
    const double tau = state.tau(spec);
    if (tau == 0.0) {
        const double v = put_payoff(state.spot, spec.strike);
        return {v, 0.0, {v, v}};
    }
    rsp::detail::require(state.spot > 0.0, "bsm_rs_put_mc: spot must be > 0");

    const ctmc::Generator gen(p.lambda12, p.lambda21);
    const std::size_t samples = detail::sample_count(cfg);
    const std::size_t n_batches = detail::batch_count(samples);
    std::vector<detail::Moments> moments(n_batches);
    const double log_s0 = std::log(state.spot);
    const double s1 = p.sigma[0] * p.sigma[0];
    const double s2 = p.sigma[1] * p.sigma[1];

    parallel_for(n_batches, cfg.threads, [&](std::size_t b) {
        auto rng = make_stream(cfg.seed, b);
        std::normal_distribution<double> normal;
        const std::size_t begin = b * kBatchPaths;
        const std::size_t end = std::min(samples, begin + kBatchPaths);
        for (std::size_t k = begin; k < end; ++k) {
            const auto path = ctmc::simulate_regime_path(gen, state.regime, tau, rng);
            const RegimePair occ = ctmc::occupation_times(path);
            const double iv = s1 * occ[0] + s2 * occ[1];
            const double drift = log_s0 + p.r * tau - 0.5 * iv;
            const double vol = std::sqrt(iv);
            const double z = normal(rng);
            double payoff = put_payoff(std::exp(drift + vol * z), spec.strike);
            if (cfg.antithetic)
                payoff = 0.5 * (payoff + put_payoff(std::exp(drift - vol * z), spec.strike));
            moments[b].add(payoff);
        }
    });
    return detail::finish(moments, std::exp(-p.r * tau));
}

/// Heston-RS estimates on a (spot x maturity) grid from one set of paths.
struct HestonCurve {
    std::vector<double> spots;
    std::vector<double> maturities;
    std::vector<std::vector<McEstimate>> estimates;  // [spot][maturity]
};

namespace detail {

/// Euler–Maruyama core: fixed step `dt`, payoffs recorded after
/// `record_step[j]` steps. Paths run at unit spot (the scheme is linear in S_0).
inline HestonCurve heston_grid(const std::vector<double>& spots, double v0, Regime initial,
                               double strike, double dt,
                               const std::vector<std::size_t>& record_step,
                               const std::vector<double>& maturities, const HestonRsParams& p,
                               const McConfig& cfg) {
    std::size_t total_steps = 0;
    for (std::size_t k : record_step) total_steps = std::max(total_steps, k);
    std::vector<char> is_record(total_steps + 1, 0);
    for (std::size_t k : record_step) is_record[k] = 1;

    const ctmc::Generator gen(p.lambda12, p.lambda21);
    const std::size_t samples = sample_count(cfg);
    const std::size_t n_batches = batch_count(samples);
    const std::size_t n_mat = maturities.size();
    const std::size_t n_cells = spots.size() * n_mat;
    std::vector<std::vector<Moments>> moments(n_batches, std::vector<Moments>(n_cells));
    const double horizon = static_cast<double>(total_steps) * dt;
    const double sqrt_dt = std::sqrt(dt);
    const double rho_c = std::sqrt(std::max(0.0, 1.0 - p.rho * p.rho));
    const bool full = cfg.scheme == VarianceScheme::FullTruncation;

    parallel_for(n_batches, cfg.threads, [&](std::size_t b) {
        auto rng = make_stream(cfg.seed, b);
        std::normal_distribution<double> normal;
        const int n_legs = cfg.antithetic ? 2 : 1;
        std::vector<double> z1(total_steps), z2(total_steps);
        std::vector<double> growth(2 * n_mat);
        const std::size_t begin = b * kBatchPaths;
        const std::size_t end = std::min(samples, begin + kBatchPaths);
        for (std::size_t k = begin; k < end; ++k) {
            const auto path = ctmc::simulate_regime_path(gen, initial, horizon, rng);
            for (std::size_t i = 0; i < total_steps; ++i) {
                z1[i] = normal(rng);
                z2[i] = normal(rng);
            }
            for (int leg = 0; leg < n_legs; ++leg) {
                const double sign = leg == 0 ? 1.0 : -1.0;
                double s = 1.0, v = v0;
                std::size_t next_switch = 0;
                for (std::size_t i = 0;; ++i) {
                    if (is_record[i])
                        for (std::size_t j = 0; j < n_mat; ++j)
                            if (record_step[j] == i) growth[leg * n_mat + j] = s;
                    if (i == total_steps) break;
                    // regime frozen at the step's left endpoint
                    const double left = static_cast<double>(i) * dt;
                    while (next_switch < path.switch_times.size() &&
                           path.switch_times[next_switch] <= left)
                        ++next_switch;
                    const double vol_of_vol = p.sigma[path.states[next_switch].index()];
                    const double vp = std::max(v, 0.0);
                    const double sq = std::sqrt(vp);
                    const double dw1 = sign * z1[i] * sqrt_dt;
                    const double dw2 = sign * (p.rho * z1[i] + rho_c * z2[i]) * sqrt_dt;
                    s += p.r * s * dt + sq * s * dw1;
                    v += p.kappa * (p.gamma - (full ? vp : v)) * dt + vol_of_vol * sq * dw2;
                }
            }
            for (std::size_t a = 0; a < spots.size(); ++a) {
                for (std::size_t j = 0; j < n_mat; ++j) {
                    double payoff = put_payoff(spots[a] * growth[j], strike);
                    if (cfg.antithetic)
                        payoff = 0.5 * (payoff + put_payoff(spots[a] * growth[n_mat + j], strike));
                    moments[b][a * n_mat + j].add(payoff);
                }
            }
        }
    });

    HestonCurve curve{spots, maturities, {}};
    curve.estimates.assign(spots.size(), std::vector<McEstimate>(n_mat));
    std::vector<Moments> column(n_batches);
    for (std::size_t a = 0; a < spots.size(); ++a) {
        for (std::size_t j = 0; j < n_mat; ++j) {
            for (std::size_t b = 0; b < n_batches; ++b) column[b] = moments[b][a * n_mat + j];
            curve.estimates[a][j] = finish(column, std::exp(-p.r * maturities[j]));
        }
    }
    return curve;
}

}  // namespace detail

/// Regime-switching Heston puts on a (spot x maturity) grid from one path set,
/// time step 1/steps_per_year. Every maturity must lie on that grid.
inline HestonCurve heston_rs_put_mc_curve(const std::vector<double>& spots, double v0,
                                          Regime initial, double strike,
                                          const std::vector<double>& maturities,
                                          const HestonRsParams& p, const McConfig& cfg) {
    p.validate();
    cfg.validate();
    rsp::detail::require(!spots.empty() && !maturities.empty(), "heston curve: empty grid");
    rsp::detail::require(v0 >= 0.0, "heston curve: v0 must be >= 0");
    rsp::detail::require(strike > 0.0, "heston curve: strike must be > 0");
    for (double s : spots) rsp::detail::require(s > 0.0, "heston curve: spots must be > 0");

    std::vector<std::size_t> record_step(maturities.size());
    for (std::size_t j = 0; j < maturities.size(); ++j) {
        const double steps = maturities[j] * static_cast<double>(cfg.steps_per_year);
        const double rounded = std::round(steps);
        rsp::detail::require(maturities[j] >= 0.0 && std::abs(steps - rounded) < 1e-9,
                        "heston curve: maturities must lie on the time grid");
        record_step[j] = static_cast<std::size_t>(rounded);
    }
    return detail::heston_grid(spots, v0, initial, strike,
                               1.0 / static_cast<double>(cfg.steps_per_year), record_step,
                               maturities, p, cfg);
}

/// Single Heston-RS put with ceil(steps_per_year * tau) equal steps.
inline McEstimate heston_rs_put_mc(const MarketState& state, const OptionSpec& spec,
                                   const HestonRsParams& p, const McConfig& cfg) {
    p.validate();
    spec.validate();
    state.validate(spec);
    cfg.validate();
    rsp::detail::require(state.variance.has_value(), "heston_rs_put_mc: variance required");
    const double tau = state.tau(spec);
    if (tau == 0.0) {
        const double v = put_payoff(state.spot, spec.strike);
        return {v, 0.0, {v, v}};
    }
    rsp::detail::require(state.spot > 0.0, "heston_rs_put_mc: spot must be > 0");
    const auto n_steps = static_cast<std::size_t>(
        std::max(1.0, std::ceil(tau * static_cast<double>(cfg.steps_per_year) - 1e-9)));
    const auto curve = detail::heston_grid({state.spot}, *state.variance, state.regime,
                                           spec.strike, tau / static_cast<double>(n_steps),
                                           {n_steps}, {tau}, p, cfg);
    return curve.estimates[0][0];
}

}  // namespace rsp::mc
