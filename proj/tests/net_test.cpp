#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rsp/deriv.hpp"
#include "rsp/net.hpp"
#include "rsp/sampler.hpp"

namespace {

using namespace rsp;
using namespace rsp::net;

Network make_network(pde::Model model, std::size_t layers, std::size_t width) {
    const auto ranges = sampler::ranges_for(model);
    return {{ranges.dim(), layers, width, 2, Activation::Tanh}, Normalizer(ranges.ranges)};
}

TEST(Architecture, ParameterCountMatchesLayerShapes) {
    for (auto [d, H, n] : {std::tuple{6, 8, 16}, std::tuple{10, 6, 32}, std::tuple{6, 2, 3}}) {
        const NetArchitecture a{std::size_t(d), std::size_t(H), std::size_t(n), 2, Activation::Tanh};
        std::size_t total = 0;
        for (std::size_t l = 0; l < a.layer_count(); ++l) total += a.rows(l) * a.cols(l) + a.rows(l);
        EXPECT_EQ(a.parameter_count(), total);
        EXPECT_EQ(a.bias_offset(a.layer_count() - 1) + a.output_dim, total);
    }
    EXPECT_EQ((NetArchitecture{6, 8, 16, 2, Activation::Tanh}.parameter_count()), 2722u);
    EXPECT_EQ((NetArchitecture{10, 6, 32, 2, Activation::Tanh}.parameter_count()), 7298u);
}

TEST(Architecture, RejectsShallowNetworks) {
    EXPECT_THROW((NetArchitecture{6, 1, 16, 2, Activation::Tanh}.validate()), InvalidArgument);
}

TEST(Activation, TanhMatchesStandardLibrary) {
    const Vector z = Vector::LinSpaced(40001, -30.0, 30.0);
    const Matrix a = net::tanh(z);
    for (Eigen::Index k = 0; k < z.size(); ++k) EXPECT_NEAR(a(k, 0), std::tanh(z(k)), 1e-15);
    Matrix big(1, 4);
    big << 800.0, -800.0, 1e308, -1e308;
    const Matrix b = net::tanh(big);
    EXPECT_EQ(b(0, 0), 1.0);
    EXPECT_EQ(b(0, 1), -1.0);
    EXPECT_EQ(b(0, 2), 1.0);
    EXPECT_EQ(b(0, 3), -1.0);
}

TEST(Forward, ZeroParametersGiveZeroOutput) {
    const auto net = make_network(pde::Model::BsmRs, 4, 8);
    const std::vector<double> theta(net.arch.parameter_count(), 0.0);
    const Vector x = (Vector(6) << 0.3, 1.0, 70, 0.02, 0.2, 0.3).finished();
    EXPECT_EQ(net.forward(theta, x).norm(), 0.0);
}

TEST(Forward, ZeroMiddleLayerPassesThrough) {
    // H = 2 with a zero middle layer equals a one-hidden-layer tanh network
    const NetArchitecture a{6, 2, 5, 2, Activation::Tanh};
    auto p = init_params(a, 3);
    const std::size_t w1 = a.weight_offset(1), end1 = a.weight_offset(2);
    std::fill(p.theta.begin() + w1, p.theta.begin() + end1, 0.0);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1, 1);
    Vector x(6);
    for (auto& v : x) v = u(rng);
    const auto l0 = layer_view(a, p.theta, 0), lo = layer_view(a, p.theta, 2);
    const Vector f = (l0.w * x + l0.b).array().tanh().matrix();
    const Vector expect = lo.w * f + lo.b;
    EXPECT_NEAR((forward_normalized(a, p.theta, x) - expect).norm(), 0.0, 1e-15);
}

TEST(Forward, MatchesHandWrittenResidualRecursion) {
    const NetArchitecture a{6, 3, 4, 2, Activation::Tanh};
    auto p = init_params(a, 5);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (auto& t : p.theta) t += u(rng);
    Vector x(6);
    for (auto& v : x) v = 2 * u(rng);
    auto W = [&](std::size_t l, std::size_t i, std::size_t j) {
        return p.theta[a.weight_offset(l) + i * a.cols(l) + j];
    };
    auto B = [&](std::size_t l, std::size_t i) { return p.theta[a.bias_offset(l) + i]; };
    std::vector<double> f(4);
    for (std::size_t i = 0; i < 4; ++i) {
        double z = B(0, i);
        for (std::size_t j = 0; j < 6; ++j) z += W(0, i, j) * x[j];
        f[i] = std::tanh(z);
    }
    for (std::size_t l = 1; l < 3; ++l) {
        std::vector<double> g(4);
        for (std::size_t i = 0; i < 4; ++i) {
            double z = B(l, i);
            for (std::size_t j = 0; j < 4; ++j) z += W(l, i, j) * f[j];
            for (std::size_t j = 0; j < 6; ++j) z += W(l, i, 4 + j) * x[j];
            g[i] = std::tanh(z) + f[i];
        }
        f = g;
    }
    const Vector out = forward_normalized(a, p.theta, x);
    for (std::size_t k = 0; k < 2; ++k) {
        double o = B(3, k);
        for (std::size_t j = 0; j < 4; ++j) o += W(3, k, j) * f[j];
        EXPECT_NEAR(out[k], o, 1e-14);
    }
}

TEST(Forward, DirectionalDerivativeMatchesJet) {
    const auto net = make_network(pde::Model::BsmRs, 4, 16);
    const auto p = init_params(net.arch, 7);
    const Vector x = (Vector(6) << 0.4, 1.3, 66, 0.018, 0.2, 0.33).finished();
    const auto jet = deriv::input_jet(net, p.theta, x, pde::Model::BsmRs);
    const double h = 1e-4 * (1 + std::abs(x[2]));
    Vector xp = x, xm = x;
    xp[2] += h;
    xm[2] -= h;
    const Vector fd = (net.forward(p.theta, xp) - net.forward(p.theta, xm)) / (2 * h);
    for (int r = 0; r < 2; ++r) EXPECT_NEAR(fd[r], jet.d_S[r], 1e-6 * std::abs(jet.d_S[r]) + 1e-10);
}

TEST(Init, ReproducibleBySeed) {
    const NetArchitecture a{10, 6, 32, 2, Activation::Tanh};
    EXPECT_EQ(init_params(a, 9).theta, init_params(a, 9).theta);
    EXPECT_NE(init_params(a, 9).theta, init_params(a, 10).theta);
}

TEST(Init, GlorotVarianceAndZeroBiases) {
    const NetArchitecture a{10, 4, 64, 2, Activation::Tanh};
    const auto p = init_params(a, 1);
    for (std::size_t l = 0; l < a.layer_count(); ++l) {
        const auto lv = layer_view(a, p.theta, l);
        EXPECT_EQ(lv.b.norm(), 0.0);
        if (a.rows(l) < 32) continue;
        const double var = lv.w.squaredNorm() / double(lv.w.size());
        const double expect = 2.0 / double(a.rows(l) + a.cols(l));
        EXPECT_NEAR(var, expect, 0.1 * expect) << l;
    }
}

TEST(Normalizer, MapsRangesOntoUnitInterval) {
    const Normalizer nz(sampler::bsm_ranges().ranges);
    EXPECT_DOUBLE_EQ(nz.apply(2, 40.0), -1.0);
    EXPECT_DOUBLE_EQ(nz.apply(2, 100.0), 1.0);
    EXPECT_DOUBLE_EQ(nz.apply(2, 70.0), 0.0);
    EXPECT_THROW(Normalizer({{1.0, 1.0}}), InvalidArgument);
}

TEST(Forward, BlockedBatchEqualsColumnByColumn) {
    const NetArchitecture a{6, 4, 16, 2, Activation::Tanh};
    const auto p = init_params(a, 11);
    const Eigen::Index n = 3 * kForwardBlock + 17;
    const Matrix x = Matrix::Random(6, n);
    const Matrix batch = forward_normalized(a, p.theta, x);
    ASSERT_EQ(batch.cols(), n);
    for (Eigen::Index c = 0; c < n; ++c) {
        const Vector single = forward_normalized(a, p.theta, Vector(x.col(c)));
        EXPECT_NEAR(batch(0, c), single(0), 1e-13);
        EXPECT_NEAR(batch(1, c), single(1), 1e-13);
    }
}

TEST(Forward, RejectsWrongParameterCount) {
    const auto net = make_network(pde::Model::BsmRs, 2, 4);
    const std::vector<double> theta(3, 0.0);
    EXPECT_THROW(net.forward(theta, Vector::Zero(6).eval()), InvalidArgument);
}

}  // namespace
