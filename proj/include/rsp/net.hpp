#pragma once

// Residual network with input re-injection:
//
//   f_1 = act(W_1 x + b_1)                          W_1: n x d
//   f_l = act(W_l [f_{l-1}; x] + b_l) + f_{l-1}     W_l: n x (n + d),  l = 2..H
//   out = W_o f_H + b_o                             W_o: k x n
//
// x is the input after the affine map of every coordinate onto [-1, 1].
// Parameters live in one flat vector: per layer, W row-major then b.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rsp/core.hpp"

namespace rsp::net {

using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class Activation : std::uint32_t { Tanh = 0, Identity = 1 };

inline std::string to_string(Activation a) { return a == Activation::Tanh ? "tanh" : "identity"; }

struct NetArchitecture {
    std::size_t input_dim = 6;
    std::size_t hidden_layers = 8;
    std::size_t width = 16;
    std::size_t output_dim = 2;
    Activation activation = Activation::Tanh;

    void validate() const {
        rsp::detail::require(input_dim >= 3, "NetArchitecture: input_dim must be >= 3");
        rsp::detail::require(hidden_layers >= 2, "NetArchitecture: hidden_layers must be >= 2");
        rsp::detail::require(width >= 1, "NetArchitecture: width must be >= 1");
        rsp::detail::require(output_dim >= 1, "NetArchitecture: output_dim must be >= 1");
    }

    std::size_t layer_count() const noexcept { return hidden_layers + 1; }
    std::size_t rows(std::size_t layer) const noexcept {
        return layer == hidden_layers ? output_dim : width;
    }
    std::size_t cols(std::size_t layer) const noexcept {
        if (layer == 0) return input_dim;
        if (layer == hidden_layers) return width;
        return width + input_dim;
    }

    /// n d + n + (H - 1)(n (n + d) + n) + k n + k
    std::size_t parameter_count() const noexcept {
        const std::size_t n = width, d = input_dim, k = output_dim;
        return n * d + n + (hidden_layers - 1) * (n * (n + d) + n) + k * n + k;
    }

    /// Offset of layer `layer`'s weight block in the flat parameter vector.
    std::size_t weight_offset(std::size_t layer) const noexcept {
        std::size_t off = 0;
        for (std::size_t l = 0; l < layer; ++l) off += rows(l) * cols(l) + rows(l);
        return off;
    }
    std::size_t bias_offset(std::size_t layer) const noexcept {
        return weight_offset(layer) + rows(layer) * cols(layer);
    }

    friend bool operator==(const NetArchitecture&, const NetArchitecture&) = default;
};

/// Affine map of each raw coordinate onto [-1, 1].
class Normalizer {
public:
    Normalizer() = default;
    explicit Normalizer(std::vector<Interval> ranges) : ranges_(std::move(ranges)) {
        for (const auto& r : ranges_)
            rsp::detail::require(r.high > r.low, "Normalizer: each range needs high > low");
    }

    std::size_t dim() const noexcept { return ranges_.size(); }
    const std::vector<Interval>& ranges() const noexcept { return ranges_; }

    /// d(normalized)/d(raw) for coordinate j.
    double scale(std::size_t j) const noexcept { return 2.0 / (ranges_[j].high - ranges_[j].low); }

    double apply(std::size_t j, double raw) const noexcept {
        return scale(j) * (raw - ranges_[j].low) - 1.0;
    }

    /// Columns are samples.
    Matrix apply(const Matrix& raw) const {
        Matrix out(raw.rows(), raw.cols());
        for (Eigen::Index j = 0; j < raw.rows(); ++j)
            out.row(j) = (raw.row(j).array() - ranges_[j].low) * scale(j) - 1.0;
        return out;
    }

private:
    std::vector<Interval> ranges_;
};

/// Weights and biases as one flat vector in declared layer order.
struct NetParams {
    std::vector<double> theta;
};

/// Read-only views onto one layer's block of a flat parameter vector.
struct LayerView {
    Eigen::Map<const RowMatrix> w;
    Eigen::Map<const Vector> b;
};

inline LayerView layer_view(const NetArchitecture& arch, std::span<const double> theta,
                            std::size_t layer) {
    const auto r = static_cast<Eigen::Index>(arch.rows(layer));
    const auto c = static_cast<Eigen::Index>(arch.cols(layer));
    return {Eigen::Map<const RowMatrix>(theta.data() + arch.weight_offset(layer), r, c),
            Eigen::Map<const Vector>(theta.data() + arch.bias_offset(layer), r)};
}

inline void check_shapes(const NetArchitecture& arch, std::span<const double> theta) {
    arch.validate();
    if (theta.size() != arch.parameter_count())
        throw InvalidArgument("NetParams: parameter vector does not match architecture");
}

/// Glorot-uniform weights, zero biases.
inline NetParams init_params(const NetArchitecture& arch, std::uint64_t seed) {
    arch.validate();
    NetParams p;
    p.theta.assign(arch.parameter_count(), 0.0);
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l < arch.layer_count(); ++l) {
        const double fan_in = static_cast<double>(arch.cols(l));
        const double fan_out = static_cast<double>(arch.rows(l));
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> u(-limit, limit);
        const std::size_t off = arch.weight_offset(l);
        for (std::size_t k = 0; k < arch.rows(l) * arch.cols(l); ++k) p.theta[off + k] = u(rng);
    }
    return p;
}

/// tanh through the vectorized exponential (Eigen evaluates double tanh one
/// element at a time). Absolute error stays within a few ulp of 1.
inline Matrix tanh(const Matrix& z) {
    return (1.0 - 2.0 / ((2.0 * z.array()).exp() + 1.0)).matrix();
}

inline void activate(Activation act, Matrix& z) {
    if (act == Activation::Tanh) z = net::tanh(z);
}

namespace detail {

template <class Block>
Matrix forward_block(const NetArchitecture& arch, std::span<const double> theta, const Block& x) {
    const auto n = static_cast<Eigen::Index>(arch.width);
    const auto first = layer_view(arch, theta, 0);
    Matrix f = (first.w * x).colwise() + first.b;
    activate(arch.activation, f);
    for (std::size_t l = 1; l < arch.hidden_layers; ++l) {
        const auto lv = layer_view(arch, theta, l);
        Matrix z = (lv.w.leftCols(n) * f + lv.w.rightCols(x.rows()) * x).colwise() + lv.b;
        activate(arch.activation, z);
        f += z;
    }
    const auto out = layer_view(arch, theta, arch.hidden_layers);
    return (out.w * f).colwise() + out.b;
}

}  // namespace detail

/// Columns per block in the batched forward pass; keeps the hidden state in cache.
inline constexpr Eigen::Index kForwardBlock = 256;

/// Forward pass on already-normalized inputs (columns are samples).
inline Matrix forward_normalized(const NetArchitecture& arch, std::span<const double> theta,
                                 const Matrix& x) {
    check_shapes(arch, theta);
    if (x.cols() <= kForwardBlock) return detail::forward_block(arch, theta, x);
    Matrix out(static_cast<Eigen::Index>(arch.output_dim), x.cols());
    for (Eigen::Index c0 = 0; c0 < x.cols(); c0 += kForwardBlock) {
        const Eigen::Index nc = std::min(kForwardBlock, x.cols() - c0);
        out.middleCols(c0, nc) = detail::forward_block(arch, theta, x.middleCols(c0, nc));
    }
    return out;
}

inline Vector forward_normalized(const NetArchitecture& arch, std::span<const double> theta,
                                 const Vector& x) {
    return forward_normalized(arch, theta, Matrix(x)).col(0);
}

/// A network together with its input normalization.
struct Network {
    NetArchitecture arch;
    Normalizer normalizer;

    void validate() const {
        arch.validate();
        rsp::detail::require(normalizer.dim() == arch.input_dim,
                        "Network: normalizer dimension must equal input_dim");
    }

    /// Raw inputs (columns are samples) -> outputs (k x samples).
    Matrix forward(std::span<const double> theta, const Matrix& raw) const {
        return forward_normalized(arch, theta, normalizer.apply(raw));
    }
    Vector forward(std::span<const double> theta, const Vector& raw) const {
        return forward(theta, Matrix(raw)).col(0);
    }
};

}  // namespace rsp::net
