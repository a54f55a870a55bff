#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rsp/cf_pricer.hpp"
#include "rsp/ctmc.hpp"

namespace {

using namespace rsp;
using namespace rsp::cf;

const BsmRsParams kPaper{0.02, {0.15, 0.35}, 2.0, 1.0};
const Complex kI{0.0, 1.0};

void expect_mat_near(const ComplexMat2& m, const ComplexMat2& n, double tol) {
    EXPECT_NEAR(std::abs(m.a - n.a), 0.0, tol);
    EXPECT_NEAR(std::abs(m.b - n.b), 0.0, tol);
    EXPECT_NEAR(std::abs(m.c - n.c), 0.0, tol);
    EXPECT_NEAR(std::abs(m.d - n.d), 0.0, tol);
}

MarketState at(double spot, int regime = 1, double t = 0.0) {
    return {t, spot, std::nullopt, Regime(regime)};
}

TEST(MatrixM, ZeroHorizonIsZero) {
    expect_mat_near(matrix_M(Complex(1.7, 0.0), 0.0, kPaper), {}, 0.0);
}

TEST(MatrixM, ZeroFrequencyIsTransposedGenerator) {
    expect_mat_near(matrix_M(0.0, 1.0, kPaper), {-2.0, 1.0, 2.0, -1.0}, 0.0);
}

TEST(MatrixM, DegenerateRegimesGiveScaledIdentity) {
    const BsmRsParams p{0.02, {0.3, 0.3}, 0.0, 0.0};
    const Complex eta(0.8, 0.0);
    const Complex diag = 0.5 * 0.09 * (-kI * eta - eta * eta) * 2.0;
    expect_mat_near(matrix_M(eta, 2.0, p), ComplexMat2::diag(diag, diag), 1e-15);
}

TEST(Expm, ZeroIsIdentity) { expect_mat_near(expm_2x2({}), ComplexMat2::identity(), 0.0); }

TEST(Expm, DiagonalExponentiatesEntries) {
    const Complex a(-0.3, 1.2), b(0.4, -2.0);
    expect_mat_near(expm_2x2(ComplexMat2::diag(a, b)), ComplexMat2::diag(std::exp(a), std::exp(b)),
                    1e-14);
}

TEST(Expm, GeneratorGivesTransitionProbabilities) {
    const ctmc::Generator gen(2.0, 1.0);
    const auto P = gen.transition(1.0);
    const ComplexMat2 e = expm_2x2({-2.0, 2.0, 1.0, -1.0});
    EXPECT_NEAR(e.a.real(), P[0][0], 1e-12 * P[0][0]);
    EXPECT_NEAR(e.b.real(), P[0][1], 1e-12 * P[0][1]);
    EXPECT_NEAR(e.c.real(), P[1][0], 1e-12 * P[1][0]);
    EXPECT_NEAR(e.d.real(), P[1][1], 1e-12 * P[1][1]);
}

TEST(Expm, SeriesBranchAgreesWithTaylorSum) {
    // near-coincident eigenvalues exercise the series branch; compare with a direct Taylor sum
    const ComplexMat2 m{Complex(-0.5, 0.2), Complex(1e-4, 0.0), Complex(2e-4, 0.0),
                        Complex(-0.5001, 0.2)};
    ComplexMat2 sum = ComplexMat2::identity(), term = ComplexMat2::identity();
    for (int k = 1; k < 40; ++k) {
        term = Complex(1.0 / k, 0.0) * (term * m);
        sum = {sum.a + term.a, sum.b + term.b, sum.c + term.c, sum.d + term.d};
    }
    expect_mat_near(expm_2x2(m), sum, 1e-15);
}

TEST(CharFn, NormalizedAtZero) {
    for (int r = 1; r <= 2; ++r) {
        EXPECT_NEAR(std::abs(char_fn_f1(0.0, at(70, r), {70, 1}, kPaper) - 1.0), 0.0, 1e-10);
        EXPECT_NEAR(std::abs(char_fn_f2(0.0, at(70, r), {70, 1}, kPaper) - 1.0), 0.0, 1e-10);
    }
}

TEST(CharFn, DegenerateCaseIsGbm) {
    const double s = 0.25, r = 0.02, tau = 1.5, y = std::log(63.0);
    const BsmRsParams p{r, {s, s}, 0.0, 0.0};
    for (double eta : {0.3, 1.0, 4.0, 11.0}) {
        const Complex gbm1 =
            std::exp(kI * eta * y + kI * eta * (r - 0.5 * s * s) * tau - 0.5 * s * s * eta * eta * tau);
        const Complex gbm2 =
            std::exp(kI * eta * y + kI * eta * (r + 0.5 * s * s) * tau - 0.5 * s * s * eta * eta * tau);
        EXPECT_NEAR(std::abs(char_fn_f1(eta, at(63), {70, tau}, p) - gbm1), 0.0, 1e-13);
        EXPECT_NEAR(std::abs(char_fn_f2(eta, at(63), {70, tau}, p) - gbm2), 0.0, 1e-13);
    }
}

TEST(CharFn, HermitianAndBounded) {
    for (double eta : {0.1, 0.7, 2.5, 9.0, 30.0}) {
        for (int r = 1; r <= 2; ++r) {
            const Complex f = char_fn_f1(eta, at(55, r), {70, 2}, kPaper);
            const Complex g = char_fn_f1(-eta, at(55, r), {70, 2}, kPaper);
            EXPECT_NEAR(std::abs(f - std::conj(g)), 0.0, 1e-14);
            EXPECT_LE(std::abs(f), 1.0 + 1e-12);
            const Complex f2 = char_fn_f2(eta, at(55, r), {70, 2}, kPaper);
            EXPECT_NEAR(std::abs(f2 - std::conj(char_fn_f2(-eta, at(55, r), {70, 2}, kPaper))), 0.0,
                        1e-14);
            EXPECT_LE(std::abs(f2), 1.0 + 1e-12);
        }
    }
}

TEST(CharFn, MatchesConditionalGaussianAverageOverRegimePaths) {
    // log S_T given the regime path is normal with variance sum sigma_i^2 occ_i
    const ctmc::Generator gen(2.0, 1.0);
    const double tau = 1.0, y = std::log(70.0);
    std::mt19937_64 rng(9);
    const int n = 200000;
    for (int r = 1; r <= 2; ++r) {
        for (double eta : {0.5, 2.0, 5.0}) {
            Complex sum = 0.0;
            double sum_sq = 0.0;
            std::mt19937_64 local(rng());
            for (int k = 0; k < n; ++k) {
                const auto path = ctmc::simulate_regime_path(gen, Regime(r), tau, local);
                const auto occ = ctmc::occupation_times(path);
                const double var = 0.0225 * occ[0] + 0.1225 * occ[1];
                const Complex x = std::exp(kI * eta * (y + 0.02 * tau - 0.5 * var) - 0.5 * eta * eta * var);
                sum += x;
                sum_sq += std::norm(x);
            }
            const Complex mean = sum / double(n);
            const double se = std::sqrt((sum_sq / n - std::norm(mean)) / (n - 1));
            EXPECT_NEAR(std::abs(char_fn_f1(eta, at(70, r), {70, tau}, kPaper) - mean), 0.0, 4 * se)
                << "regime " << r << " eta " << eta;
        }
    }
}

TEST(ProbBelow, DegenerateCaseIsNormalCdf) {
    const double s = 0.2, r = 0.02, tau = 1.0, S = 70;
    const BsmRsParams p{r, {s, s}, 0.0, 0.0};
    for (double E : {50.0, 70.0, 95.0}) {
        const double d1 = (std::log(S / E) + (r + 0.5 * s * s) * tau) / (s * std::sqrt(tau));
        const double d2 = d1 - s * std::sqrt(tau);
        EXPECT_NEAR(prob_below(make_f1(at(S), {E, tau}, p), E), norm_cdf(-d2), 1e-8);
        EXPECT_NEAR(prob_below(make_f2(at(S), {E, tau}, p), E), norm_cdf(-d1), 1e-8);
    }
}

TEST(ProbBelow, CdfLimits) {
    const auto f = make_f1(at(70), {70, 1}, kPaper);
    EXPECT_NEAR(prob_below(f, 70e-6), 0.0, 1e-6);
    EXPECT_NEAR(prob_below(f, 70e6), 1.0, 1e-6);
}

TEST(ProbBelow, MonotoneInStrike) {
    const BsmRsParams p{0.02, {0.3, 0.3}, 2.0, 1.0};
    const auto f = make_f1(at(70), {70, 1}, p);
    double prev = -1.0;
    for (int k = 0; k < 50; ++k) {
        const double v = prob_below(f, 30.0 + 2.0 * k);
        EXPECT_GE(v, prev - 1e-12);
        prev = v;
    }
}

TEST(ProbBelow, TinyHorizonNeedsTooManyFrequencies) {
    QuadratureConfig q;
    q.eta_cap = 100.0;
    EXPECT_THROW(prob_below(make_f1(at(70), {70, 1e-6}, kPaper), 70.0, q), QuadratureError);
}

TEST(PutPriceCf, DegenerateCaseIsBlackScholes) {
    const BsmRsParams p{0.02, {0.15, 0.15}, 0.0, 0.0};
    EXPECT_NEAR(put_price_cf(at(70), {70, 1}, p).value, bs_put_closed_form(70, 70, 0.02, 0.15, 1),
                1e-6);
}

TEST(PutPriceCf, EqualVolatilitiesIgnoreSwitching) {
    const BsmRsParams p{0.02, {0.25, 0.25}, 2.0, 1.0};
    for (double S : {40.0, 70.0, 100.0})
        EXPECT_NEAR(put_price_cf(at(S, 2), {70, 2}, p).value,
                    bs_put_closed_form(S, 70, 0.02, 0.25, 2), 1e-6);
}

TEST(PutPriceCf, PaperCurveIsOrderedAndVanishes) {
    double prev1 = 1e9;
    for (double S = 30; S <= 110; S += 2) {
        const double v1 = put_price_cf(at(S, 1), {70, 1}, kPaper).value;
        const double v2 = put_price_cf(at(S, 2), {70, 1}, kPaper).value;
        EXPECT_GE(v2, v1 - 1e-10) << S;
        EXPECT_LE(v1, prev1 + 1e-10) << S;
        prev1 = v1;
    }
    EXPECT_LT(put_price_cf(at(1000, 1), {70, 1}, kPaper).value, 1e-8);
}

TEST(PutPriceCf, RegimeRelabelingSymmetry) {
    const BsmRsParams swapped{0.02, {0.35, 0.15}, 1.0, 2.0};
    for (double S : {50.0, 70.0, 90.0}) {
        EXPECT_NEAR(put_price_cf(at(S, 1), {70, 1}, kPaper).value,
                    put_price_cf(at(S, 2), {70, 1}, swapped).value, 1e-10);
        EXPECT_NEAR(put_price_cf(at(S, 2), {70, 1}, kPaper).value,
                    put_price_cf(at(S, 1), {70, 1}, swapped).value, 1e-10);
    }
}

TEST(PutPriceCf, AtMaturityReturnsPayoff) {
    EXPECT_EQ(put_price_cf(at(60, 1, 1.0), {70, 1}, kPaper).value, 10.0);
}

TEST(PutPriceCf, RejectsInvalidInput) {
    EXPECT_THROW(put_price_cf(at(0.0), {70, 1}, kPaper), InvalidArgument);
    EXPECT_THROW(put_price_cf(at(70, 1, 2.0), {70, 1}, kPaper), InvalidArgument);
}

}  // namespace
