#pragma once

// Trained PIRL model: network description, the constants fixed during
// training (strike, transition rates) and the flat parameter vector.
//
// File layout (little-endian), version 1:
//   offset  size  field
//   0       8     magic "RSPIRL\0\0"
//   8       4     u32 version (1)
//   12      4     u32 model (0 = bsm-rs, 1 = heston-rs)
//   16      4     u32 input_dim d
//   20      4     u32 hidden_layers H
//   24      4     u32 width n
//   28      4     u32 output_dim k
//   32      4     u32 activation (0 = tanh, 1 = identity)
//   36      4     u32 reserved (0)
//   40      8     f64 strike
//   48      8     f64 lambda12
//   56      8     f64 lambda21
//   64      16d   f64 pairs (low, high) of the input normalization ranges
//   64+16d  8     u64 parameter count P
//   72+16d  8P    f64 parameters, layer order, each layer W row-major then b

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "rsp/deriv.hpp"
#include "rsp/net.hpp"
#include "rsp/pde.hpp"
#include "rsp/sampler.hpp"

namespace rsp {

/// I/O failure reading or writing a model file.
class FileError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

static_assert(std::endian::native == std::endian::little,
              "model files are written with native little-endian layout");

struct PirlModel {
    pde::Model model = pde::Model::BsmRs;
    net::Network network;
    double strike = 70.0;
    double lambda12 = 2.0;
    double lambda21 = 1.0;
    net::NetParams params;

    /// Price pair (regime 1, regime 2) at raw input columns.
    net::Matrix predict(const net::Matrix& raw) const { return network.forward(params.theta, raw); }

    static PirlModel make(pde::Model model, std::size_t hidden_layers, std::size_t width,
                          std::uint64_t seed) {
        PirlModel m;
        m.model = model;
        const auto ranges = sampler::ranges_for(model);
        m.network.arch = {ranges.dim(), hidden_layers, width, 2, net::Activation::Tanh};
        m.network.normalizer = net::Normalizer(ranges.ranges);
        m.network.validate();
        m.params = net::init_params(m.network.arch, seed);
        if (model == pde::Model::HestonRs) m.lambda21 = 3.0;
        return m;
    }
};

/// Raw BSM-RS network input (t, T, S, r, sigma1, sigma2).
inline net::Vector bsm_input(double t, double T, double spot, const BsmRsParams& p) {
    net::Vector x(deriv::bsm_input::dim);
    x << t, T, spot, p.r, p.sigma[0], p.sigma[1];
    return x;
}

/// Raw Heston-RS network input (t, T, S, v, r, kappa, gamma, rho, sigma1, sigma2).
inline net::Vector heston_input(double t, double T, double spot, double variance,
                                const HestonRsParams& p) {
    net::Vector x(deriv::heston_input::dim);
    x << t, T, spot, variance, p.r, p.kappa, p.gamma, p.rho, p.sigma[0], p.sigma[1];
    return x;
}

namespace io_detail {

inline constexpr char kMagic[8] = {'R', 'S', 'P', 'I', 'R', 'L', '\0', '\0'};
inline constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw FileError("model file: truncated");
    return v;
}

}  // namespace io_detail

inline void save_model(std::ostream& os, const PirlModel& m) {
    using namespace io_detail;
    const auto& a = m.network.arch;
    os.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(os, kVersion);
    put<std::uint32_t>(os, m.model == pde::Model::BsmRs ? 0u : 1u);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(a.input_dim));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(a.hidden_layers));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(a.width));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(a.output_dim));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(a.activation));
    put<std::uint32_t>(os, 0u);
    put<double>(os, m.strike);
    put<double>(os, m.lambda12);
    put<double>(os, m.lambda21);
    for (const auto& r : m.network.normalizer.ranges()) {
        put<double>(os, r.low);
        put<double>(os, r.high);
    }
    put<std::uint64_t>(os, m.params.theta.size());
    os.write(reinterpret_cast<const char*>(m.params.theta.data()),
             static_cast<std::streamsize>(m.params.theta.size() * sizeof(double)));
    if (!os) throw FileError("model file: write failed");
}

inline PirlModel load_model(std::istream& is) {
    using namespace io_detail;
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
        throw FileError("model file: bad magic");
    if (get<std::uint32_t>(is) != kVersion) throw FileError("model file: unsupported version");
    PirlModel m;
    const auto kind = get<std::uint32_t>(is);
    if (kind > 1) throw FileError("model file: unknown model kind");
    m.model = kind == 0 ? pde::Model::BsmRs : pde::Model::HestonRs;
    auto& a = m.network.arch;
    a.input_dim = get<std::uint32_t>(is);
    a.hidden_layers = get<std::uint32_t>(is);
    a.width = get<std::uint32_t>(is);
    a.output_dim = get<std::uint32_t>(is);
    const auto act = get<std::uint32_t>(is);
    if (act > 1) throw FileError("model file: unknown activation");
    a.activation = static_cast<net::Activation>(act);
    (void)get<std::uint32_t>(is);
    m.strike = get<double>(is);
    m.lambda12 = get<double>(is);
    m.lambda21 = get<double>(is);
    std::vector<Interval> ranges(a.input_dim);
    for (auto& r : ranges) {
        r.low = get<double>(is);
        r.high = get<double>(is);
    }
    try {
        m.network.normalizer = net::Normalizer(std::move(ranges));
        m.network.validate();
    } catch (const InvalidArgument& e) {
        throw FileError(std::string("model file: ") + e.what());
    }
    const auto count = get<std::uint64_t>(is);
    if (count != a.parameter_count()) throw FileError("model file: parameter count mismatch");
    m.params.theta.resize(count);
    is.read(reinterpret_cast<char*>(m.params.theta.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!is) throw FileError("model file: truncated parameters");
    return m;
}

inline void save_model(const std::string& path, const PirlModel& m) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FileError("cannot open " + path + " for writing");
    save_model(os, m);
}

inline PirlModel load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FileError("cannot open " + path);
    return load_model(is);
}

}  // namespace rsp
