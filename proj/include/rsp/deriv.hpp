#pragma once

// Exact input derivatives of the residual network, and their parameter
// gradients.
//
// Forward mode carries second-order Taylor coefficients through the network:
// for each sample, the value, a first derivative along each requested input
// coordinate, and the requested second derivatives. With z the pre-activation
// and a = act(z):
//
//   a_k  = act'(z) z_k
//   a_kl = act''(z) z_k z_l + act'(z) z_kl
//
// JetTape keeps every intermediate so that the adjoint of any loss written in
// terms of those coefficients can be pulled back to the weights (reverse mode
// through the forward-mode computation).

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "rsp/net.hpp"
#include "rsp/pde.hpp"

namespace rsp::deriv {

using net::Matrix;

/// Which raw-input derivatives to carry. `pairs` index into `dirs`.
struct JetSpec {
    std::vector<std::size_t> dirs;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;

    std::size_t components() const noexcept { return 1 + dirs.size() + pairs.size(); }
    std::size_t first(std::size_t k) const noexcept { return 1 + k; }
    std::size_t second(std::size_t p) const noexcept { return 1 + dirs.size() + p; }

    static JetSpec value_only() { return {}; }
};

/// Forward/backward tape for one batch of samples.
class JetTape {
public:
    JetTape(const net::Network& network, std::span<const double> theta, JetSpec spec)
        : net_(network), theta_(theta), spec_(std::move(spec)) {
        net::check_shapes(net_.arch, theta_);
    }

    const JetSpec& spec() const noexcept { return spec_; }

    /// Returns output components: [0] value, then first derivatives per dir,
    /// then second derivatives per pair. Each is output_dim x batch.
    const std::vector<Matrix>& forward(const Matrix& raw) {
        const auto& arch = net_.arch;
        const auto n = static_cast<Eigen::Index>(arch.width);
        const auto d = static_cast<Eigen::Index>(arch.input_dim);
        const Eigen::Index batch = raw.cols();
        const std::size_t nd = spec_.dirs.size();
        const std::size_t nc = spec_.components();

        x_ = net_.normalizer.apply(raw);
        layers_.assign(arch.hidden_layers, {});

        std::vector<Matrix> f;  // current hidden-state components
        for (std::size_t l = 0; l < arch.hidden_layers; ++l) {
            const auto lv = net::layer_view(arch, theta_, l);
            Layer& L = layers_[l];
            std::vector<Matrix> z(nc);
            if (l == 0) {
                z[0] = (lv.w * x_).colwise() + lv.b;
                for (std::size_t k = 0; k < nd; ++k) {
                    const auto c = static_cast<Eigen::Index>(spec_.dirs[k]);
                    z[spec_.first(k)] = (lv.w.col(c) * net_.normalizer.scale(spec_.dirs[k]))
                                            .replicate(1, batch);
                }
                for (std::size_t p = 0; p < spec_.pairs.size(); ++p)
                    z[spec_.second(p)] = Matrix::Zero(n, batch);
            } else {
                L.input = f;
                const auto wf = lv.w.leftCols(n);
                const auto wx = lv.w.rightCols(d);
                z[0] = (wf * f[0] + wx * x_).colwise() + lv.b;
                for (std::size_t k = 0; k < nd; ++k) {
                    const auto c = static_cast<Eigen::Index>(spec_.dirs[k]);
                    const std::size_t i = spec_.first(k);
                    z[i] = wf * f[i];
                    z[i].colwise() += wx.col(c) * net_.normalizer.scale(spec_.dirs[k]);
                }
                for (std::size_t p = 0; p < spec_.pairs.size(); ++p) {
                    const std::size_t i = spec_.second(p);
                    z[i] = wf * f[i];
                }
            }
            set_activation(L, z[0]);

            std::vector<Matrix> out(nc);
            out[0] = L.a;
            for (std::size_t k = 0; k < nd; ++k) {
                const std::size_t i = spec_.first(k);
                out[i] = L.a1.cwiseProduct(z[i]);
            }
            for (std::size_t p = 0; p < spec_.pairs.size(); ++p) {
                const auto [k, m] = spec_.pairs[p];
                const std::size_t i = spec_.second(p);
                out[i] = L.a2.cwiseProduct(z[spec_.first(k)]).cwiseProduct(z[spec_.first(m)]) +
                         L.a1.cwiseProduct(z[i]);
            }
            if (l > 0)
                for (std::size_t i = 0; i < nc; ++i) out[i] += f[i];
            L.z = std::move(z);
            f = std::move(out);
        }

        last_hidden_ = std::move(f);
        const auto ov = net::layer_view(arch, theta_, arch.hidden_layers);
        outputs_.assign(nc, Matrix());
        outputs_[0] = (ov.w * last_hidden_[0]).colwise() + ov.b;
        for (std::size_t i = 1; i < nc; ++i) outputs_[i] = ov.w * last_hidden_[i];
        return outputs_;
    }

    /// Accumulates d(loss)/d(theta) into `grad` given the adjoints of the
    /// output components returned by forward(). Empty adjoint matrices count as zero.
    void backward(const std::vector<Matrix>& out_adj, std::span<double> grad) const {
        const auto& arch = net_.arch;
        const auto n = static_cast<Eigen::Index>(arch.width);
        const auto d = static_cast<Eigen::Index>(arch.input_dim);
        const std::size_t nd = spec_.dirs.size();
        const std::size_t nc = spec_.components();
        const Eigen::Index batch = x_.cols();

        auto gw = [&](std::size_t l) {
            return Eigen::Map<net::RowMatrix>(grad.data() + arch.weight_offset(l),
                                              static_cast<Eigen::Index>(arch.rows(l)),
                                              static_cast<Eigen::Index>(arch.cols(l)));
        };
        auto gb = [&](std::size_t l) {
            return Eigen::Map<net::Vector>(grad.data() + arch.bias_offset(l),
                                           static_cast<Eigen::Index>(arch.rows(l)));
        };

        // output layer
        const std::size_t lo = arch.hidden_layers;
        const auto ov = net::layer_view(arch, theta_, lo);
        std::vector<Matrix> fbar(nc);
        {
            auto w = gw(lo);
            for (std::size_t i = 0; i < nc; ++i) {
                if (out_adj[i].size() == 0) {
                    fbar[i] = Matrix::Zero(n, batch);
                    continue;
                }
                w.noalias() += out_adj[i] * last_hidden_[i].transpose();
                fbar[i].noalias() = ov.w.transpose() * out_adj[i];
            }
            if (out_adj[0].size() != 0) gb(lo) += out_adj[0].rowwise().sum();
        }

        for (std::size_t l = arch.hidden_layers; l-- > 0;) {
            const Layer& L = layers_[l];
            const auto lv = net::layer_view(arch, theta_, l);
            std::vector<Matrix> zbar(nc);

            // a''' for the second-order terms
            Matrix a3;
            if (!spec_.pairs.empty()) a3 = third_derivative(L);

            zbar[0] = fbar[0].cwiseProduct(L.a1);
            for (std::size_t k = 0; k < nd; ++k) {
                const std::size_t i = spec_.first(k);
                zbar[0] += fbar[i].cwiseProduct(L.a2).cwiseProduct(L.z[i]);
                zbar[i] = fbar[i].cwiseProduct(L.a1);
            }
            for (std::size_t p = 0; p < spec_.pairs.size(); ++p) {
                const auto [k, m] = spec_.pairs[p];
                const std::size_t i = spec_.second(p);
                const std::size_t ik = spec_.first(k), im = spec_.first(m);
                zbar[0] += fbar[i].cwiseProduct(a3.cwiseProduct(L.z[ik]).cwiseProduct(L.z[im]) +
                                                L.a2.cwiseProduct(L.z[i]));
                const Matrix t = fbar[i].cwiseProduct(L.a2);
                zbar[ik] += t.cwiseProduct(L.z[im]);
                zbar[im] += t.cwiseProduct(L.z[ik]);
                zbar[i] = fbar[i].cwiseProduct(L.a1);
            }

            auto w = gw(l);
            gb(l) += zbar[0].rowwise().sum();
            if (l == 0) {
                w.noalias() += zbar[0] * x_.transpose();
                for (std::size_t k = 0; k < nd; ++k) {
                    const auto c = static_cast<Eigen::Index>(spec_.dirs[k]);
                    w.col(c) += zbar[spec_.first(k)].rowwise().sum() *
                                net_.normalizer.scale(spec_.dirs[k]);
                }
                break;
            }
            auto wf = w.leftCols(n);
            auto wx = w.rightCols(d);
            wx.noalias() += zbar[0] * x_.transpose();
            for (std::size_t k = 0; k < nd; ++k) {
                const auto c = static_cast<Eigen::Index>(spec_.dirs[k]);
                wx.col(c) += zbar[spec_.first(k)].rowwise().sum() *
                             net_.normalizer.scale(spec_.dirs[k]);
            }
            const auto lwf = lv.w.leftCols(n);
            for (std::size_t i = 0; i < nc; ++i) {
                wf.noalias() += zbar[i] * L.input[i].transpose();
                fbar[i].noalias() += lwf.transpose() * zbar[i];  // skip path keeps fbar
            }
        }
    }

private:
    struct Layer {
        std::vector<Matrix> input;  // hidden-state components entering the layer (l > 0)
        std::vector<Matrix> z;      // pre-activation components
        Matrix a, a1, a2;           // act(z), act'(z), act''(z)
    };

    void set_activation(Layer& L, const Matrix& z) const {
        if (net_.arch.activation == net::Activation::Tanh) {
            L.a = net::tanh(z);
            L.a1 = (1.0 - L.a.array().square()).matrix();
            L.a2 = (-2.0 * L.a.array() * L.a1.array()).matrix();
        } else {
            L.a = z;
            L.a1 = Matrix::Ones(z.rows(), z.cols());
            L.a2 = Matrix::Zero(z.rows(), z.cols());
        }
    }

    Matrix third_derivative(const Layer& L) const {
        if (net_.arch.activation == net::Activation::Tanh)
            return (-2.0 * (L.a1.array().square() + L.a.array() * L.a2.array())).matrix();
        return Matrix::Zero(L.a.rows(), L.a.cols());
    }

    const net::Network& net_;
    std::span<const double> theta_;
    JetSpec spec_;
    Matrix x_;
    std::vector<Layer> layers_;
    std::vector<Matrix> last_hidden_;
    std::vector<Matrix> outputs_;
};

// ---------------------------------------------------------------------------
// Input layouts and single-point jets
// ---------------------------------------------------------------------------

/// Raw input coordinates for each model.
namespace bsm_input {
inline constexpr std::size_t t = 0, T = 1, S = 2, r = 3, sigma1 = 4, sigma2 = 5, dim = 6;
}
namespace heston_input {
inline constexpr std::size_t t = 0, T = 1, S = 2, v = 3, r = 4, kappa = 5, gamma = 6, rho = 7,
                             sigma1 = 8, sigma2 = 9, dim = 10;
}

/// Derivatives the pricing PDE needs: (t, S) and SS for BSM; (t, S, v) and
/// SS, vv, Sv for Heston.
inline JetSpec pde_jet_spec(pde::Model model) {
    if (model == pde::Model::BsmRs) return {{bsm_input::t, bsm_input::S}, {{1, 1}}};
    return {{heston_input::t, heston_input::S, heston_input::v}, {{1, 1}, {2, 2}, {1, 2}}};
}

using InputJet = pde::DerivBundle;

/// Exact PDE derivative bundle of both outputs at one raw input point.
inline InputJet input_jet(const net::Network& network, std::span<const double> theta,
                          const net::Vector& raw, pde::Model model) {
    JetTape tape(network, theta, pde_jet_spec(model));
    const auto& c = tape.forward(net::Matrix(raw));
    auto pair = [&](std::size_t i) { return RegimePair{c[i](0, 0), c[i](1, 0)}; };
    InputJet jet;
    jet.value = pair(0);
    jet.d_t = pair(1);
    jet.d_S = pair(2);
    if (model == pde::Model::BsmRs) {
        jet.d_SS = pair(3);
    } else {
        jet.d_v = pair(3);
        jet.d_SS = pair(4);
        jet.d_vv = pair(5);
        jet.d_Sv = pair(6);
    }
    return jet;
}

}  // namespace rsp::deriv
