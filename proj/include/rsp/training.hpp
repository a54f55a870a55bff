#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "rsp/loss.hpp"
#include "rsp/model.hpp"
#include "rsp/optim.hpp"

namespace rsp::training {

/// Divergence during training, with the last parameters whose cost was finite.
class TrainDiverged : public DivergedError {
public:
    TrainDiverged(const DivergedError& cause, std::vector<double> last_good)
        : DivergedError(cause.what(), cause.component()), last_good_(std::move(last_good)) {}
    const std::vector<double>& last_good() const noexcept { return last_good_; }

private:
    std::vector<double> last_good_;
};

struct TrainResult {
    PirlModel model;
    optim::Report report;
};

/// Objective over theta for L-BFGS; extras carry (C_A, C_T, C_low).
inline optim::Objective make_objective(const net::Network& network,
                                       const sampler::SampleSets& sets,
                                       const loss::LossConfig& cfg) {
    return [&network, &sets, cfg](const optim::Vec& theta) {
        optim::Evaluation e;
        const auto c = loss::cost_gradient(network, theta, sets, cfg, e.grad);
        e.value = c.total;
        e.extras = {c.inner, c.terminal, c.lower};
        return e;
    };
}

/// Full-batch L-BFGS on the physics-informed cost, starting from
/// init_params(seed). The strike and transition rates come from `cfg`.
inline TrainResult train(pde::Model model, const net::NetArchitecture& arch,
                         const sampler::SampleSets& sets, const loss::LossConfig& cfg,
                         const optim::LbfgsConfig& opt, std::uint64_t seed,
                         const std::function<void(const optim::IterationRecord&)>& progress = {}) {
    rsp::detail::require(sets.model == model, "train: sample sets belong to a different model");
    TrainResult out;
    out.model = PirlModel::make(model, arch.hidden_layers, arch.width, seed);
    out.model.network.arch.activation = arch.activation;
    rsp::detail::require(out.model.network.arch == arch,
                    "train: architecture input/output dims do not match the model layout");
    out.model.strike = cfg.strike;
    out.model.lambda12 = cfg.lambda12;
    out.model.lambda21 = cfg.lambda21;

    std::vector<double> last_good = out.model.params.theta;
    auto watch = [&](const optim::IterationRecord& rec) {
        if (progress) progress(rec);
    };
    const auto objective = make_objective(out.model.network, sets, cfg);
    // remember the most recent finite iterate for divergence reporting
    optim::Objective tracked = [&](const optim::Vec& theta) {
        auto e = objective(theta);
        if (std::isfinite(e.value)) last_good = theta;
        return e;
    };
    try {
        auto res = optim::minimize(tracked, out.model.params.theta, opt, watch);
        out.model.params.theta = std::move(res.x);
        out.report = std::move(res.report);
    } catch (const DivergedError& e) {
        throw TrainDiverged(e, last_good);
    }
    return out;
}

}  // namespace rsp::training
