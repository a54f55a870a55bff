#pragma once

// Physics-informed training cost C = C_A + C_T + C_low and its exact gradient.
//
//   C_A   : squared PDE residual of both outputs over the inner set
//   C_T   : squared distance to the put payoff over the terminal set
//   C_low : squared distance to E exp(-r (T - t)) over the S = 0 set
//
// Each component is a mean over its rows (sum over the two regimes inside).
// Rows are processed in fixed chunks whose partial results are reduced in
// chunk order, so the cost and gradient do not depend on the thread count.

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "rsp/deriv.hpp"
#include "rsp/parallel.hpp"
#include "rsp/pde.hpp"
#include "rsp/sampler.hpp"

namespace rsp::loss {

using net::Matrix;
using RowArray = Eigen::Array<double, 1, Eigen::Dynamic>;

struct LossConfig {
    double strike = 70.0;
    double lambda12 = 2.0;
    double lambda21 = 1.0;
    std::array<double, 3> weights{1.0, 1.0, 1.0};  // inner, terminal, lower
    bool sum_convention = false;  // literal sums instead of means
    std::size_t threads = 1;
    std::size_t chunk = 256;

    /// Fixed transition rates used for training each model.
    static LossConfig for_model(pde::Model model) {
        LossConfig c;
        if (model == pde::Model::HestonRs) c.lambda21 = 3.0;
        return c;
    }
};

struct CostBreakdown {
    double total = 0.0;
    double inner = 0.0;
    double terminal = 0.0;
    double lower = 0.0;
};

namespace detail {

enum class Part { Inner = 0, Terminal = 1, Lower = 2 };

struct Task {
    Part part;
    Eigen::Index begin;
    Eigen::Index count;
};

struct TaskResult {
    double sum_sq = 0.0;
    std::vector<double> grad;
};

inline const char* part_name(Part p) {
    switch (p) {
        case Part::Inner: return "C_A";
        case Part::Terminal: return "C_T";
        default: return "C_low";
    }
}

/// Residual pair of the pricing PDE for a chunk of inner rows, from jet components.
inline std::array<RowArray, 2> residuals(pde::Model model, const std::vector<Matrix>& c,
                                         const Matrix& raw, const LossConfig& cfg) {
    auto pair = [&](std::size_t i) {
        return std::array<RowArray, 2>{c[i].row(0).array(), c[i].row(1).array()};
    };
    if (model == pde::Model::BsmRs) {
        namespace in = deriv::bsm_input;
        const RowArray spot = raw.row(in::S).array();
        const RowArray r = raw.row(in::r).array();
        const RowArray s1 = raw.row(in::sigma1).array();
        const RowArray s2 = raw.row(in::sigma2).array();
        const auto res = pde::bsm_rs_residual_kernel<RowArray, RowArray>(
            pair(0), pair(1), pair(2), pair(3), spot, r, s1, s2, cfg.lambda12, cfg.lambda21);
        return {res[0], res[1]};
    }
    namespace in = deriv::heston_input;
    const RowArray spot = raw.row(in::S).array();
    const RowArray var = raw.row(in::v).array();
    const RowArray r = raw.row(in::r).array();
    const RowArray kappa = raw.row(in::kappa).array();
    const RowArray gamma = raw.row(in::gamma).array();
    const RowArray rho = raw.row(in::rho).array();
    const RowArray s1 = raw.row(in::sigma1).array();
    const RowArray s2 = raw.row(in::sigma2).array();
    const auto res = pde::heston_rs_residual_kernel<RowArray, RowArray>(
        pair(0), pair(1), pair(2), pair(4), pair(3), pair(5), pair(6), spot, var, r, kappa, gamma,
        rho, s1, s2, cfg.lambda12, cfg.lambda21);
    return {res[0], res[1]};
}

/// Pull residual adjoints back onto the jet components (the residual is linear in them).
inline std::vector<Matrix> residual_adjoint(pde::Model model, const std::array<RowArray, 2>& rbar,
                                            const Matrix& raw, const LossConfig& cfg,
                                            std::size_t n_comp) {
    const Eigen::Index b = raw.cols();
    std::vector<Matrix> adj(n_comp, Matrix::Zero(2, b));
    const double lam[2] = {cfg.lambda12, cfg.lambda21};
    const bool bsm = model == pde::Model::BsmRs;
    const RowArray spot = raw.row(bsm ? deriv::bsm_input::S : deriv::heston_input::S).array();
    const RowArray r = raw.row(bsm ? deriv::bsm_input::r : deriv::heston_input::r).array();
    const RowArray sig[2] = {
        raw.row(bsm ? deriv::bsm_input::sigma1 : deriv::heston_input::sigma1).array(),
        raw.row(bsm ? deriv::bsm_input::sigma2 : deriv::heston_input::sigma2).array()};
    for (int i = 0; i < 2; ++i) {
        const int j = 1 - i;
        adj[0].row(i) = (-(r + lam[i]) * rbar[i] + lam[j] * rbar[j]).matrix();
        adj[1].row(i) = rbar[i].matrix();
        adj[2].row(i) = (r * spot * rbar[i]).matrix();
        if (bsm) {
            adj[3].row(i) = (0.5 * sig[i].square() * spot.square() * rbar[i]).matrix();
        } else {
            namespace in = deriv::heston_input;
            const RowArray var = raw.row(in::v).array();
            const RowArray kappa = raw.row(in::kappa).array();
            const RowArray gamma = raw.row(in::gamma).array();
            const RowArray rho = raw.row(in::rho).array();
            adj[3].row(i) = (kappa * (gamma - var) * rbar[i]).matrix();
            adj[4].row(i) = (0.5 * var * spot.square() * rbar[i]).matrix();
            adj[5].row(i) = (0.5 * sig[i].square() * var * rbar[i]).matrix();
            adj[6].row(i) = (rho * sig[i] * var * spot * rbar[i]).matrix();
        }
    }
    return adj;
}

/// Boundary targets for terminal (payoff) or lower (discounted strike) rows.
inline RowArray boundary_target(pde::Model model, Part part, const Matrix& raw,
                                const LossConfig& cfg) {
    const bool bsm = model == pde::Model::BsmRs;
    const auto s_row = bsm ? deriv::bsm_input::S : deriv::heston_input::S;
    if (part == Part::Terminal)
        return (cfg.strike - raw.row(s_row).array()).max(0.0);
    const auto r_row = bsm ? deriv::bsm_input::r : deriv::heston_input::r;
    const RowArray tau = raw.row(1).array() - raw.row(0).array();
    return cfg.strike * (-raw.row(r_row).array() * tau).exp();
}

inline CostBreakdown evaluate(const net::Network& network, std::span<const double> theta,
                              const sampler::SampleSets& sets, const LossConfig& cfg,
                              std::vector<double>* grad) {
    network.validate();
    net::check_shapes(network.arch, theta);
    const pde::Model model = sets.model;
    const Matrix* mats[3] = {&sets.inner, &sets.terminal, &sets.lower};
    const auto chunk = static_cast<Eigen::Index>(std::max<std::size_t>(1, cfg.chunk));

    std::vector<Task> tasks;
    for (int p = 0; p < 3; ++p) {
        if (cfg.weights[p] == 0.0) continue;
        for (Eigen::Index b = 0; b < mats[p]->cols(); b += chunk)
            tasks.push_back({static_cast<Part>(p), b, std::min(chunk, mats[p]->cols() - b)});
    }

    double norm[3];
    for (int p = 0; p < 3; ++p) {
        const auto n = static_cast<double>(mats[p]->cols());
        norm[p] = cfg.sum_convention ? 1.0 : (n > 0 ? 1.0 / n : 0.0);
    }

    std::vector<TaskResult> results(tasks.size());
    const std::size_t n_param = theta.size();
    parallel_for(tasks.size(), cfg.threads, [&](std::size_t k) {
        const Task& task = tasks[k];
        const int p = static_cast<int>(task.part);
        const Matrix raw = mats[p]->middleCols(task.begin, task.count);
        TaskResult& out = results[k];
        const deriv::JetSpec spec =
            task.part == Part::Inner ? deriv::pde_jet_spec(model) : deriv::JetSpec::value_only();
        deriv::JetTape tape(network, theta, spec);
        const auto& comps = tape.forward(raw);
        const double scale = 2.0 * cfg.weights[p] * norm[p];

        std::vector<Matrix> adj;
        if (task.part == Part::Inner) {
            const auto res = residuals(model, comps, raw, cfg);
            out.sum_sq = res[0].square().sum() + res[1].square().sum();
            if (grad) adj = residual_adjoint(model, {scale * res[0], scale * res[1]}, raw, cfg,
                                             spec.components());
        } else {
            const RowArray target = boundary_target(model, task.part, raw, cfg);
            Matrix err = comps[0];
            err.rowwise() -= target.matrix();
            out.sum_sq = err.squaredNorm();
            if (grad) adj = {scale * err};
        }
        if (grad && std::isfinite(out.sum_sq)) {
            out.grad.assign(n_param, 0.0);
            tape.backward(adj, out.grad);
        }
    });

    CompensatedSum sums[3];
    for (std::size_t k = 0; k < tasks.size(); ++k) {
        const int p = static_cast<int>(tasks[k].part);
        if (!std::isfinite(results[k].sum_sq))
            throw DivergedError("cost: non-finite loss component", part_name(tasks[k].part));
        sums[p].add(results[k].sum_sq);
    }
    if (grad) {
        grad->assign(n_param, 0.0);
        for (const auto& r : results)
            for (std::size_t i = 0; i < n_param; ++i) (*grad)[i] += r.grad[i];
        for (double g : *grad)
            if (!std::isfinite(g)) throw DivergedError("cost: non-finite gradient", "gradient");
    }

    CostBreakdown c;
    c.inner = sums[0].value() * norm[0];
    c.terminal = sums[1].value() * norm[1];
    c.lower = sums[2].value() * norm[2];
    c.total = cfg.weights[0] * c.inner + cfg.weights[1] * c.terminal + cfg.weights[2] * c.lower;
    return c;
}

}  // namespace detail

/// Cost components. Components whose weight is zero are reported as 0.
inline CostBreakdown cost(const net::Network& network, std::span<const double> theta,
                          const sampler::SampleSets& sets, const LossConfig& cfg) {
    return detail::evaluate(network, theta, sets, cfg, nullptr);
}

/// Cost components plus the exact gradient of the weighted total w.r.t. theta.
inline CostBreakdown cost_gradient(const net::Network& network, std::span<const double> theta,
                                   const sampler::SampleSets& sets, const LossConfig& cfg,
                                   std::vector<double>& grad) {
    return detail::evaluate(network, theta, sets, cfg, &grad);
}

/// PDE residual pairs (2 x N) of the network at raw interior points.
inline Matrix pde_residuals(const net::Network& network, std::span<const double> theta,
                            pde::Model model, const Matrix& raw, const LossConfig& cfg) {
    deriv::JetTape tape(network, theta, deriv::pde_jet_spec(model));
    const auto& comps = tape.forward(raw);
    const auto res = detail::residuals(model, comps, raw, cfg);
    Matrix out(2, raw.cols());
    out.row(0) = res[0].matrix();
    out.row(1) = res[1].matrix();
    return out;
}

}  // namespace rsp::loss
