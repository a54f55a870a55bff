#pragma once

// Error metrics and the fixed evaluation scenarios comparing a trained PIRL
// model with the Fourier (BSM-RS) or Monte Carlo (Heston-RS) oracle.

#include <chrono>
#include <cmath>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rsp/cf_pricer.hpp"
#include "rsp/mc_pricer.hpp"
#include "rsp/model.hpp"
#include "rsp/parallel.hpp"

namespace rsp::metrics {

inline void check_lengths(std::span<const double> pred, std::span<const double> truth) {
    rsp::detail::require(pred.size() == truth.size(), "metrics: length mismatch");
    rsp::detail::require(!pred.empty(), "metrics: empty input");
}

/// (1/N) sum (pred - truth)^2
inline double mse(std::span<const double> pred, std::span<const double> truth) {
    check_lengths(pred, truth);
    CompensatedSum s;
    for (std::size_t i = 0; i < pred.size(); ++i) s.add((pred[i] - truth[i]) * (pred[i] - truth[i]));
    return s.value() / double(pred.size());
}

/// (1/N) sum |pred - truth|
inline double mae(std::span<const double> pred, std::span<const double> truth) {
    check_lengths(pred, truth);
    CompensatedSum s;
    for (std::size_t i = 0; i < pred.size(); ++i) s.add(std::abs(pred[i] - truth[i]));
    return s.value() / double(pred.size());
}

struct ErrorPair {
    double mae = 0.0;
    double mse = 0.0;
};

inline ErrorPair error_pair(std::span<const double> pred, std::span<const double> truth) {
    return {mae(pred, truth), mse(pred, truth)};
}

enum class Scenario { Terminal, Tau1Grid, Random, HestonItmAtmOtm, HestonNoRs };

inline std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::Terminal: return "terminal";
        case Scenario::Tau1Grid: return "tau1-grid";
        case Scenario::Random: return "random-25000";
        case Scenario::HestonItmAtmOtm: return "heston-itm-atm-otm";
        default: return "heston-no-rs";
    }
}

inline Scenario parse_scenario(const std::string& name) {
    for (auto s : {Scenario::Terminal, Scenario::Tau1Grid, Scenario::Random,
                   Scenario::HestonItmAtmOtm, Scenario::HestonNoRs})
        if (to_string(s) == name) return s;
    throw InvalidArgument("unknown scenario: " + name);
}

inline pde::Model scenario_model(Scenario s) {
    return s == Scenario::HestonItmAtmOtm || s == Scenario::HestonNoRs ? pde::Model::HestonRs
                                                                        : pde::Model::BsmRs;
}

struct ScenarioConfig {
    std::size_t threads = 1;
    std::size_t random_draws = 25000;
    std::uint64_t seed = 2024;          // random-draw scenario
    mc::McConfig mc{200000, 250, 7, false, mc::VarianceScheme::FullTruncation, 1};
    cf::QuadratureConfig quadrature{};
};

/// Fixed evaluation parameters (strike and transition rates come from the model).
inline BsmRsParams bsm_fixture(const PirlModel& m) {
    return {0.02, {0.15, 0.35}, m.lambda12, m.lambda21};
}

inline HestonRsParams heston_fixture(const PirlModel& m, bool regime_switching) {
    HestonRsParams p{0.02, 2.0, 0.1, -0.8, {0.25, 0.5}, m.lambda12, m.lambda21};
    if (!regime_switching) p.sigma = {0.4, 0.4};
    return p;
}

inline constexpr double kHestonV0 = 0.05;

/// One evaluated point; `inputs` follows the model's raw input layout.
struct PointRow {
    std::string label;
    int regime = 1;
    std::vector<double> inputs;
    double pirl = 0.0;
    double oracle = 0.0;
    std::optional<Interval> ci98;

    double abs_error() const { return std::abs(pirl - oracle); }
    bool contained() const { return ci98 && pirl >= ci98->low && pirl <= ci98->high; }
};

struct SummaryRow {
    std::string label;
    int regime = 1;
    std::size_t points = 0;
    ErrorPair error;
    std::optional<std::size_t> contained;  // points inside the oracle's 98% band
};

struct ScenarioReport {
    Scenario scenario = Scenario::Terminal;
    pde::Model model = pde::Model::BsmRs;
    std::vector<PointRow> points;
    std::vector<SummaryRow> summary;
    std::size_t skipped = 0;       // oracle failures (e.g. quadrature at tiny tau)
    double pirl_seconds = 0.0;     // wall time of all network evaluations
    double oracle_seconds = 0.0;   // wall time of all oracle evaluations

    const SummaryRow& row(const std::string& label, int regime) const {
        for (const auto& r : summary)
            if (r.label == label && r.regime == regime) return r;
        throw InvalidArgument("ScenarioReport: no summary row " + label);
    }
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Summaries per (label, regime) in first-appearance order.
inline std::vector<SummaryRow> summarize(const std::vector<PointRow>& points) {
    std::vector<SummaryRow> rows;
    std::vector<std::vector<double>> pred, truth;
    std::vector<std::size_t> inside;
    std::vector<bool> has_ci;
    for (const auto& p : points) {
        std::size_t k = 0;
        while (k < rows.size() && !(rows[k].label == p.label && rows[k].regime == p.regime)) ++k;
        if (k == rows.size()) {
            rows.push_back({p.label, p.regime, 0, {}, std::nullopt});
            pred.emplace_back();
            truth.emplace_back();
            inside.push_back(0);
            has_ci.push_back(false);
        }
        pred[k].push_back(p.pirl);
        truth[k].push_back(p.oracle);
        if (p.ci98) {
            has_ci[k] = true;
            inside[k] += p.contained() ? 1 : 0;
        }
    }
    for (std::size_t k = 0; k < rows.size(); ++k) {
        rows[k].points = pred[k].size();
        rows[k].error = error_pair(pred[k], truth[k]);
        if (has_ci[k]) rows[k].contained = inside[k];
    }
    return rows;
}

/// Network prices for a batch of raw inputs (columns), timed.
inline net::Matrix predict_timed(const PirlModel& m, const net::Matrix& raw, double& seconds) {
    const auto t0 = Clock::now();
    net::Matrix out = m.predict(raw);
    seconds += seconds_since(t0);
    return out;
}

inline ScenarioReport eval_bsm(const PirlModel& m, Scenario scenario, const ScenarioConfig& cfg) {
    ScenarioReport rep;
    rep.scenario = scenario;
    rep.model = pde::Model::BsmRs;
    const BsmRsParams fixture = bsm_fixture(m);
    const double E = m.strike;

    net::Matrix raw;
    std::vector<std::string> labels;
    if (scenario == Scenario::Random) {
        raw = sampler::sample_inner(pde::Model::BsmRs, cfg.seed, cfg.random_draws);
        labels.assign(raw.cols(), "random");
    } else {
        const double T = 1.0, t = scenario == Scenario::Terminal ? 1.0 : 0.0;
        const int n = 81;  // S = 30, 31, ..., 110
        raw.resize(deriv::bsm_input::dim, n);
        for (int k = 0; k < n; ++k) raw.col(k) = bsm_input(t, T, 30.0 + k, fixture);
        labels.assign(n, scenario == Scenario::Terminal ? "terminal" : "tau1");
    }
    const net::Matrix pred = predict_timed(m, raw, rep.pirl_seconds);

    namespace in = deriv::bsm_input;
    const auto n = static_cast<std::size_t>(raw.cols());
    std::vector<std::array<std::optional<double>, 2>> truth(n);
    const auto t0 = Clock::now();
    parallel_for(n, cfg.threads, [&](std::size_t k) {
        const auto c = static_cast<Eigen::Index>(k);
        const double t = raw(in::t, c), T = raw(in::T, c), S = raw(in::S, c);
        const BsmRsParams p{raw(in::r, c), {raw(in::sigma1, c), raw(in::sigma2, c)}, m.lambda12,
                            m.lambda21};
        for (int r = 1; r <= 2; ++r) {
            const MarketState state{t, S, std::nullopt, Regime(r)};
            try {
                truth[k][r - 1] = cf::put_price_cf(state, {E, T}, p, cfg.quadrature).value;
            } catch (const QuadratureError&) {
            }
        }
    });
    rep.oracle_seconds = seconds_since(t0);

    for (std::size_t k = 0; k < n; ++k) {
        const auto c = static_cast<Eigen::Index>(k);
        if (!truth[k][0] || !truth[k][1]) {
            ++rep.skipped;
            continue;
        }
        const std::vector<double> inputs(raw.col(c).data(), raw.col(c).data() + raw.rows());
        for (int r = 0; r < 2; ++r)
            rep.points.push_back({labels[k], r + 1, inputs, pred(r, c), *truth[k][r], std::nullopt});
    }
    rep.summary = summarize(rep.points);
    return rep;
}

inline ScenarioReport eval_heston(const PirlModel& m, Scenario scenario, const ScenarioConfig& cfg) {
    ScenarioReport rep;
    rep.scenario = scenario;
    rep.model = pde::Model::HestonRs;
    const HestonRsParams fixture = heston_fixture(m, scenario == Scenario::HestonItmAtmOtm);
    const std::vector<double> spots{60.0, 70.0, 80.0};
    const std::vector<std::string> names{"ITM", "ATM", "OTM"};
    std::vector<double> maturities;
    for (int k = 1; k <= 40; ++k) maturities.push_back(0.1 * k);

    mc::McConfig mcc = cfg.mc;
    mcc.threads = cfg.threads;
    for (int r = 1; r <= 2; ++r) {
        const auto t0 = Clock::now();
        const auto curve = mc::heston_rs_put_mc_curve(spots, kHestonV0, Regime(r), m.strike,
                                                      maturities, fixture, mcc);
        rep.oracle_seconds += seconds_since(t0);
        net::Matrix raw(deriv::heston_input::dim,
                        static_cast<Eigen::Index>(spots.size() * maturities.size()));
        Eigen::Index c = 0;
        for (double s : spots)
            for (double T : maturities) raw.col(c++) = heston_input(0.0, T, s, kHestonV0, fixture);
        const net::Matrix pred = predict_timed(m, raw, rep.pirl_seconds);
        c = 0;
        for (std::size_t a = 0; a < spots.size(); ++a) {
            for (std::size_t j = 0; j < maturities.size(); ++j, ++c) {
                const auto& est = curve.estimates[a][j];
                const std::vector<double> inputs(raw.col(c).data(),
                                                 raw.col(c).data() + raw.rows());
                rep.points.push_back({names[a], r, inputs, pred(r - 1, c), est.mean, est.ci98});
            }
        }
    }
    rep.summary = summarize(rep.points);
    return rep;
}

}  // namespace detail

/// BSM-RS scenarios against the Fourier price.
inline ScenarioReport eval_bsm_scenario(const PirlModel& m, Scenario scenario,
                                        const ScenarioConfig& cfg = {}) {
    rsp::detail::require(m.model == pde::Model::BsmRs, "eval_bsm_scenario: model is not BSM-RS");
    rsp::detail::require(scenario_model(scenario) == pde::Model::BsmRs,
                         "eval_bsm_scenario: scenario needs a Heston-RS model");
    return detail::eval_bsm(m, scenario, cfg);
}

/// Heston-RS scenarios against Monte Carlo with 98% bands.
inline ScenarioReport eval_heston_scenario(const PirlModel& m, Scenario scenario,
                                           const ScenarioConfig& cfg = {}) {
    rsp::detail::require(m.model == pde::Model::HestonRs,
                         "eval_heston_scenario: model is not Heston-RS");
    rsp::detail::require(scenario_model(scenario) == pde::Model::HestonRs,
                         "eval_heston_scenario: scenario needs a BSM-RS model");
    return detail::eval_heston(m, scenario, cfg);
}

inline ScenarioReport eval_scenario(const PirlModel& m, Scenario scenario,
                                    const ScenarioConfig& cfg = {}) {
    return scenario_model(scenario) == pde::Model::BsmRs ? eval_bsm_scenario(m, scenario, cfg)
                                                         : eval_heston_scenario(m, scenario, cfg);
}

/// CSV header `label,regime,<input names>,pirl,oracle,abs_err,ci_low,ci_high`.
inline void write_points_csv(std::ostream& os, const ScenarioReport& rep) {
    os << "label,regime";
    for (const auto& n : sampler::ranges_for(rep.model).names) os << ',' << n;
    os << ",pirl,oracle,abs_err,ci_low,ci_high\n";
    os << std::setprecision(10);
    for (const auto& p : rep.points) {
        os << p.label << ',' << p.regime;
        for (double x : p.inputs) os << ',' << x;
        os << ',' << p.pirl << ',' << p.oracle << ',' << p.abs_error() << ',';
        if (p.ci98) os << p.ci98->low << ',' << p.ci98->high;
        else os << ',';
        os << '\n';
    }
}

/// CSV header `scenario,label,regime,points,mae,mse,contained`.
inline void write_summary_csv(std::ostream& os, const ScenarioReport& rep) {
    os << "scenario,label,regime,points,mae,mse,contained\n";
    os << std::setprecision(10);
    for (const auto& r : rep.summary) {
        os << to_string(rep.scenario) << ',' << r.label << ',' << r.regime << ',' << r.points << ','
           << r.error.mae << ',' << r.error.mse << ',';
        if (r.contained) os << *r.contained;
        os << '\n';
    }
}

inline nlohmann::json summary_json(const ScenarioReport& rep) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : rep.summary) {
        nlohmann::json j{{"label", r.label},
                         {"regime", r.regime},
                         {"points", r.points},
                         {"mae", r.error.mae},
                         {"mse", r.error.mse}};
        if (r.contained) j["contained"] = *r.contained;
        rows.push_back(j);
    }
    return {{"scenario", to_string(rep.scenario)},
            {"rows", rows},
            {"skipped", rep.skipped},
            {"pirl_seconds", rep.pirl_seconds},
            {"oracle_seconds", rep.oracle_seconds}};
}

}  // namespace rsp::metrics
