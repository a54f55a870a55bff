#include <gtest/gtest.h>

#include <cmath>

#include "rsp/cf_pricer.hpp"
#include "rsp/mc_pricer.hpp"

namespace {

using namespace rsp;
using namespace rsp::mc;

const BsmRsParams kPaper{0.02, {0.15, 0.35}, 2.0, 1.0};
const HestonRsParams kHeston{0.02, 2.0, 0.1, -0.8, {0.25, 0.5}, 2.0, 3.0};

MarketState bsm_state(double spot, int regime) { return {0.0, spot, std::nullopt, Regime(regime)}; }
MarketState heston_state(double spot, double v0, int regime) { return {0.0, spot, v0, Regime(regime)}; }

McConfig cfg(std::size_t paths, std::uint64_t seed = 42) {
    McConfig c;
    c.n_paths = paths;
    c.seed = seed;
    return c;
}

TEST(BsmMc, ZeroHorizonIsPayoff) {
    const auto est = bsm_rs_put_mc({1.0, 60.0, std::nullopt, Regime(1)}, {70, 1}, kPaper, cfg(100));
    EXPECT_EQ(est.mean, 10.0);
    EXPECT_EQ(est.std_error, 0.0);
}

TEST(HestonMc, ZeroHorizonIsPayoff) {
    const auto est = heston_rs_put_mc({1.0, 60.0, 0.05, Regime(1)}, {70, 1}, kHeston, cfg(100));
    EXPECT_EQ(est.mean, 10.0);
    EXPECT_EQ(est.std_error, 0.0);
}

TEST(BsmMc, SingleRegimeMatchesBlackScholes) {
    const BsmRsParams p{0.02, {0.2, 0.2}, 0.0, 0.0};
    const auto est = bsm_rs_put_mc(bsm_state(65, 1), {70, 1.5}, p, cfg(100000));
    EXPECT_NEAR(est.mean, bs_put_closed_form(65, 70, 0.02, 0.2, 1.5), 3 * est.std_error);
}

TEST(BsmMc, AgreesWithFourierPrices) {
    for (double S : {50.0, 70.0, 90.0}) {
        for (int r = 1; r <= 2; ++r) {
            const auto est = bsm_rs_put_mc(bsm_state(S, r), {70, 1}, kPaper, cfg(200000, 3));
            const double cf = cf::put_price_cf(bsm_state(S, r), {70, 1}, kPaper).value;
            EXPECT_NEAR(est.mean, cf, 3 * est.std_error) << "S " << S << " regime " << r;
        }
    }
}

TEST(BsmMc, CiIsSymmetricAroundMean) {
    const auto est = bsm_rs_put_mc(bsm_state(70, 1), {70, 1}, kPaper, cfg(10000));
    EXPECT_NEAR(est.ci98.high - est.mean, kZ98 * est.std_error, 1e-12);
    EXPECT_NEAR(est.mean - est.ci98.low, kZ98 * est.std_error, 1e-12);
}

TEST(BsmMc, StandardErrorScalesAsInverseSquareRoot) {
    const auto a = bsm_rs_put_mc(bsm_state(70, 1), {70, 1}, kPaper, cfg(20000, 5));
    const auto b = bsm_rs_put_mc(bsm_state(70, 1), {70, 1}, kPaper, cfg(320000, 6));
    EXPECT_NEAR(a.std_error / b.std_error, 4.0, 0.4);
}

TEST(HestonMc, StandardErrorScalesAsInverseSquareRoot) {
    const auto a = heston_rs_put_mc(heston_state(70, 0.05, 1), {70, 0.5}, kHeston, cfg(5000, 5));
    const auto b = heston_rs_put_mc(heston_state(70, 0.05, 1), {70, 0.5}, kHeston, cfg(80000, 6));
    EXPECT_NEAR(a.std_error / b.std_error, 4.0, 0.4);
}

TEST(BsmMc, ReproducibleAndThreadCountInvariant) {
    McConfig c = cfg(50000, 17);
    const auto a = bsm_rs_put_mc(bsm_state(70, 2), {70, 2}, kPaper, c);
    const auto b = bsm_rs_put_mc(bsm_state(70, 2), {70, 2}, kPaper, c);
    c.threads = 3;
    const auto d = bsm_rs_put_mc(bsm_state(70, 2), {70, 2}, kPaper, c);
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.mean, d.mean);
    EXPECT_EQ(a.std_error, d.std_error);
}

TEST(HestonMc, ReproducibleAndThreadCountInvariant) {
    McConfig c = cfg(3000, 17);
    const auto a = heston_rs_put_mc(heston_state(70, 0.05, 1), {70, 1}, kHeston, c);
    c.threads = 2;
    const auto d = heston_rs_put_mc(heston_state(70, 0.05, 1), {70, 1}, kHeston, c);
    EXPECT_EQ(a.mean, d.mean);
    EXPECT_EQ(a.std_error, d.std_error);
}

TEST(HestonMc, EqualVolOfVolIgnoresSwitching) {
    HestonRsParams p = kHeston;
    p.sigma = {0.4, 0.4};
    const std::array<std::pair<double, double>, 3> rates{{{0.0, 0.0}, {2.0, 3.0}, {10.0, 0.5}}};
    std::vector<McEstimate> ests;
    for (auto [l12, l21] : rates) {
        p.lambda12 = l12;
        p.lambda21 = l21;
        for (int r = 1; r <= 2; ++r)
            ests.push_back(heston_rs_put_mc(heston_state(70, 0.05, r), {70, 1}, p, cfg(40000, 100 + r)));
    }
    for (std::size_t k = 1; k < ests.size(); ++k) {
        const double se = std::hypot(ests[0].std_error, ests[k].std_error);
        EXPECT_NEAR(ests[0].mean, ests[k].mean, 3 * se) << k;
    }
}

TEST(HestonMc, ZeroVarianceLimitIsDiscountedIntrinsic) {
    const HestonRsParams p{0.02, 1.0, 1e-10, -0.5, {1e-3, 1e-3}, 2.0, 3.0};
    const double tau = 1.0;
    const auto est = heston_rs_put_mc(heston_state(60, 1e-10, 1), {70, tau}, p, cfg(2000));
    EXPECT_NEAR(est.mean, std::max(70 * std::exp(-0.02 * tau) - 60, 0.0), 3 * est.std_error + 1e-3);
}

TEST(HestonMc, AntitheticPairsReduceVariance) {
    McConfig plain = cfg(20000, 8), anti = cfg(20000, 8);
    anti.antithetic = true;
    const auto a = heston_rs_put_mc(heston_state(70, 0.05, 1), {70, 1}, kHeston, plain);
    const auto b = heston_rs_put_mc(heston_state(70, 0.05, 1), {70, 1}, kHeston, anti);
    EXPECT_LT(b.std_error, a.std_error);
    EXPECT_NEAR(a.mean, b.mean, 3 * std::hypot(a.std_error, b.std_error));
}

TEST(HestonMc, VarianceSchemesAgreeStatistically) {
    McConfig ft = cfg(40000, 8), floor_only = cfg(40000, 9);
    floor_only.scheme = VarianceScheme::DiffusionFloorOnly;
    const auto a = heston_rs_put_mc(heston_state(70, 0.05, 2), {70, 1}, kHeston, ft);
    const auto b = heston_rs_put_mc(heston_state(70, 0.05, 2), {70, 1}, kHeston, floor_only);
    EXPECT_NEAR(a.mean, b.mean, 4 * std::hypot(a.std_error, b.std_error) + 0.02);
}

TEST(HestonCurve, RejectsOffGridMaturities) {
    EXPECT_THROW(heston_rs_put_mc_curve({70}, 0.05, Regime(1), 70, {0.1234}, kHeston, cfg(100)),
                 InvalidArgument);
}

TEST(HestonCurve, MatchesRescaledSpotsAndIsMonotone) {
    const auto curve = heston_rs_put_mc_curve({60, 70, 80}, 0.05, Regime(1), 70, {0.5, 1, 2, 4},
                                              kHeston, cfg(20000, 4));
    for (std::size_t j = 0; j < 4; ++j) {
        EXPECT_GE(curve.estimates[0][j].mean, curve.estimates[1][j].mean);
        EXPECT_GE(curve.estimates[1][j].mean, curve.estimates[2][j].mean);
        for (std::size_t a = 0; a < 3; ++a) {
            const double spot = curve.spots[a], tau = curve.maturities[j];
            const auto b = put_bounds(spot, 70, 0.02, tau);
            EXPECT_GE(curve.estimates[a][j].mean, b.low - 3 * curve.estimates[a][j].std_error);
            EXPECT_LE(curve.estimates[a][j].mean, b.high);
        }
    }
}

// Regression fixture at the evaluation parameters (N = 2e5, 250 steps per year, seed 42).
TEST(HestonCurve, ReferenceFixture) {
    const auto curve = heston_rs_put_mc_curve({60, 70, 80}, 0.05, Regime(1), 70, {0.5, 1, 2, 4},
                                              kHeston, cfg(200000, 42));
    const double expected[3][4] = {{10.390957032220, 11.670031991259, 13.854155402086, 16.669342649478},
                                   {4.697136895324, 6.837273680617, 9.741591950775, 13.215395858369},
                                   {1.978470230903, 4.001915280426, 6.937547693258, 10.611172370707}};
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t j = 0; j < 4; ++j)
            EXPECT_NEAR(curve.estimates[a][j].mean, expected[a][j], 1e-9 * expected[a][j]) << a << ' ' << j;
}

}  // namespace
