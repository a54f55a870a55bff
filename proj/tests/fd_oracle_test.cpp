#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "rsp/cf_pricer.hpp"
#include "rsp/fd_oracle.hpp"

namespace {

using namespace rsp;

const BsmRsParams kRs{0.02, {0.15, 0.35}, 2.0, 1.0};
const OptionSpec kSpec{70.0, 1.0};

TEST(FdOracle, UncoupledRegimesMatchBlackScholes) {
    const BsmRsParams p{0.02, {0.15, 0.35}, 0.0, 0.0};
    const auto surf = fd::solve_bsm_rs_fd(kSpec, p, {0.0, 400, 400});
    for (double S = 40; S <= 100; S += 5)
        for (int r = 1; r <= 2; ++r) {
            const double bs = bs_put_closed_form(S, 70.0, 0.02, p.sigma[std::size_t(r - 1)], 1.0);
            EXPECT_NEAR(surf.value(Regime(r), S, 1.0), bs, 5e-3) << S << ' ' << r;
        }
}

TEST(FdOracle, AgreesWithFourierPrice) {
    const auto surf = fd::solve_bsm_rs_fd(kSpec, kRs, {0.0, 800, 800});
    for (double S : {50.0, 70.0, 90.0})
        for (int r = 1; r <= 2; ++r) {
            const double cf = cf::put_price_cf({0.0, S, std::nullopt, Regime(r)}, kSpec, kRs).value;
            EXPECT_NEAR(surf.value(Regime(r), S, 1.0), cf, 1e-3) << S << ' ' << r;
        }
}

TEST(FdOracle, SecondOrderRefinement) {
    const double cf = cf::put_price_cf({0.0, 70.0, std::nullopt, Regime(1)}, kSpec, kRs).value;
    const double coarse = std::abs(fd::put_price_fd({0.0, 70.0, std::nullopt, Regime(1)}, kSpec, kRs, {0.0, 100, 100}).value - cf);
    const double fine = std::abs(fd::put_price_fd({0.0, 70.0, std::nullopt, Regime(1)}, kSpec, kRs, {0.0, 200, 200}).value - cf);
    EXPECT_GE(coarse / fine, 3.0);
}

TEST(FdOracle, MaximumPrincipleAndMonotonicity) {
    const auto surf = fd::solve_bsm_rs_fd(kSpec, kRs, {0.0, 200, 200});
    for (std::size_t k = 0; k <= surf.n_time(); ++k)
        for (int r = 1; r <= 2; ++r)
            for (std::size_t j = 0; j <= surf.n_space(); ++j) {
                const double v = surf.at(k, j, Regime(r));
                EXPECT_GE(v, -1e-10);
                EXPECT_LE(v, 70.0 + 1e-10);
                if (j > 0) {
                    EXPECT_LE(v, surf.at(k, j - 1, Regime(r)) + 1e-10);
                }
            }
}

TEST(FdOracle, RegimeRelabelingSwapsSurfaces) {
    const BsmRsParams swapped{kRs.r, {kRs.sigma[1], kRs.sigma[0]}, kRs.lambda21, kRs.lambda12};
    const auto a = fd::solve_bsm_rs_fd(kSpec, kRs, {0.0, 100, 100});
    const auto b = fd::solve_bsm_rs_fd(kSpec, swapped, {0.0, 100, 100});
    for (std::size_t k = 0; k <= 100; k += 10)
        for (std::size_t j = 0; j <= 100; ++j) {
            EXPECT_NEAR(a.at(k, j, Regime(1)), b.at(k, j, Regime(2)), 1e-12);
            EXPECT_NEAR(a.at(k, j, Regime(2)), b.at(k, j, Regime(1)), 1e-12);
        }
}

TEST(FdOracle, BoundaryRowsAndPayoff) {
    const auto surf = fd::solve_bsm_rs_fd(kSpec, kRs, {0.0, 100, 100});
    EXPECT_DOUBLE_EQ(surf.s_max(), 280.0);
    for (std::size_t j = 0; j <= 100; ++j)
        EXPECT_DOUBLE_EQ(surf.at(0, j, Regime(1)), std::max(70.0 - surf.spot_at(j), 0.0));
    EXPECT_NEAR(surf.at(100, 0, Regime(2)), 70.0 * std::exp(-0.02), 1e-12);
    EXPECT_EQ(surf.at(100, 100, Regime(1)), 0.0);
    EXPECT_EQ(surf.value(Regime(1), 500.0, 1.0), 0.0);
}

TEST(FdOracle, CsvLayout) {
    const auto surf = fd::solve_bsm_rs_fd(kSpec, kRs, {0.0, 50, 50});
    std::ostringstream os;
    surf.write_csv(os);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "S,t,V1,V2");
    std::size_t n = 0;
    while (std::getline(is, line)) ++n;
    EXPECT_EQ(n, 51u * 51u);
}

TEST(FdOracle, RejectsBadGrids) {
    EXPECT_THROW(fd::solve_bsm_rs_fd(kSpec, kRs, {60.0, 100, 100}), InvalidArgument);
    EXPECT_THROW(fd::solve_bsm_rs_fd(kSpec, kRs, {0.0, 10, 100}), InvalidArgument);
}

TEST(FdOracle, ZeroTauIsPayoff) {
    EXPECT_EQ(fd::put_price_fd({1.0, 60.0, std::nullopt, Regime(1)}, kSpec, kRs, {}).value, 10.0);
}

}  // namespace
