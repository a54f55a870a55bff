#pragma once

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "rsp/core.hpp"
#include "rsp/deriv.hpp"
#include "rsp/net.hpp"
#include "rsp/pde.hpp"

namespace rsp::sampler {

using net::Matrix;

/// Closed interval per raw input coordinate, plus column names.
struct RangeSpec {
    std::vector<std::string> names;
    std::vector<Interval> ranges;

    std::size_t dim() const noexcept { return ranges.size(); }
    void validate() const {
        rsp::detail::require(names.size() == ranges.size(), "RangeSpec: names/ranges size mismatch");
        for (const auto& r : ranges) rsp::detail::require(r.low <= r.high, "RangeSpec: low > high");
    }
};

/// Training ranges for the BSM-RS inputs (t, T, S, r, sigma1, sigma2).
/// sigma2 is drawn from [sigma1, 0.40]; its listed range is the envelope.
inline RangeSpec bsm_ranges() {
    return {{"t", "T", "S", "r", "sigma1", "sigma2"},
            {{0.0, 4.0}, {0.0, 4.0}, {40.0, 100.0}, {0.01, 0.025}, {0.10, 0.30}, {0.10, 0.40}}};
}

/// Training ranges for the Heston-RS inputs (t, T, S, v, r, kappa, gamma, rho, sigma1, sigma2).
inline RangeSpec heston_ranges() {
    return {{"t", "T", "S", "v", "r", "kappa", "gamma", "rho", "sigma1", "sigma2"},
            {{0.0, 4.0},
             {0.0, 4.0},
             {40.0, 100.0},
             {0.01, 0.1},
             {0.015, 0.025},
             {1.4, 2.6},
             {0.01, 0.1},
             {-0.85, -0.55},
             {0.1, 0.45},
             {0.35, 0.75}}};
}

inline RangeSpec ranges_for(pde::Model model) {
    return model == pde::Model::BsmRs ? bsm_ranges() : heston_ranges();
}

inline net::Normalizer normalizer_for(pde::Model model) {
    return net::Normalizer(ranges_for(model).ranges);
}

struct SampleSizes {
    std::size_t inner = 0;
    std::size_t terminal = 0;
    std::size_t lower = 0;
};

inline SampleSizes paper_sizes(pde::Model model) {
    return model == pde::Model::BsmRs ? SampleSizes{20000, 5000, 5000}
                                      : SampleSizes{30000, 10000, 10000};
}

/// Inner, terminal (t = T) and lower (S = 0) collocation sets; columns are rows.
struct SampleSets {
    pde::Model model = pde::Model::BsmRs;
    Matrix inner;
    Matrix terminal;
    Matrix lower;

    std::size_t dim() const noexcept {
        return static_cast<std::size_t>(std::max({inner.rows(), terminal.rows(), lower.rows()}));
    }
};

namespace detail {

enum class Face { Inner, Terminal, Lower };

/// One raw input row. Draw order per row: T, t, state, then model parameters.
template <class Rng>
void draw_row(pde::Model model, Face face, Rng& rng, Eigen::Ref<Eigen::VectorXd> row) {
    auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    double T = u(0.0, 4.0);
    if (face == Face::Inner)
        while (T == 0.0) T = u(0.0, 4.0);
    double t = face == Face::Terminal ? T : u(0.0, T);
    if (face == Face::Inner)
        while (!(t < T)) t = u(0.0, T);
    const double spot = face == Face::Lower ? 0.0 : u(40.0, 100.0);
    if (model == pde::Model::BsmRs) {
        namespace in = deriv::bsm_input;
        row(in::t) = t;
        row(in::T) = T;
        row(in::S) = spot;
        row(in::r) = u(0.01, 0.025);
        const double s1 = u(0.10, 0.30);
        row(in::sigma1) = s1;
        row(in::sigma2) = u(s1, 0.40);
    } else {
        namespace in = deriv::heston_input;
        row(in::t) = t;
        row(in::T) = T;
        row(in::S) = spot;
        row(in::v) = u(0.01, 0.1);
        row(in::r) = u(0.015, 0.025);
        row(in::kappa) = u(1.4, 2.6);
        row(in::gamma) = u(0.01, 0.1);
        row(in::rho) = u(-0.85, -0.55);
        row(in::sigma1) = u(0.1, 0.45);
        row(in::sigma2) = u(0.35, 0.75);
    }
}

template <class Rng>
Matrix draw_set(pde::Model model, Face face, std::size_t count, Rng& rng) {
    const auto dim = static_cast<Eigen::Index>(ranges_for(model).dim());
    Matrix m(dim, static_cast<Eigen::Index>(count));
    for (Eigen::Index c = 0; c < m.cols(); ++c) draw_row(model, face, rng, m.col(c));
    return m;
}

}  // namespace detail

/// Uniform independent draws per coordinate (sigma2 >= sigma1 and t <= T
/// drawn conditionally for BSM). Reproducible by seed.
inline SampleSets sample(pde::Model model, std::uint64_t seed, SampleSizes sizes) {
    std::mt19937_64 rng(seed);
    SampleSets s;
    s.model = model;
    s.inner = detail::draw_set(model, detail::Face::Inner, sizes.inner, rng);
    s.terminal = detail::draw_set(model, detail::Face::Terminal, sizes.terminal, rng);
    s.lower = detail::draw_set(model, detail::Face::Lower, sizes.lower, rng);
    return s;
}

inline SampleSets sample_bsm(std::uint64_t seed, SampleSizes sizes = paper_sizes(pde::Model::BsmRs)) {
    return sample(pde::Model::BsmRs, seed, sizes);
}

inline SampleSets sample_heston(std::uint64_t seed,
                                SampleSizes sizes = paper_sizes(pde::Model::HestonRs)) {
    return sample(pde::Model::HestonRs, seed, sizes);
}

/// Interior points only (t < T, S in range), e.g. for held-out PDE residual checks.
inline Matrix sample_inner(pde::Model model, std::uint64_t seed, std::size_t count) {
    std::mt19937_64 rng(seed);
    return detail::draw_set(model, detail::Face::Inner, count, rng);
}

/// CSV with header `set,<coordinate names>`; one line per sample.
inline void write_csv(std::ostream& os, const SampleSets& sets) {
    const RangeSpec spec = ranges_for(sets.model);
    os << "set";
    for (const auto& n : spec.names) os << ',' << n;
    os << '\n';
    os << std::setprecision(17);
    auto dump = [&](const char* name, const Matrix& m) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            os << name;
            for (Eigen::Index r = 0; r < m.rows(); ++r) os << ',' << m(r, c);
            os << '\n';
        }
    };
    dump("inner", sets.inner);
    dump("terminal", sets.terminal);
    dump("lower", sets.lower);
}

}  // namespace rsp::sampler
