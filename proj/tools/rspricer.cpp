// rspricer: price, sample, train, sweep and compare regime-switching puts.
//
// Machine-readable results go to stdout (one JSON object per line or CSV);
// progress and diagnostics go to stderr.
// Exit codes: 0 ok, 1 unexpected error, 2 usage, 3 numeric failure, 4 I/O.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rsp/cf_pricer.hpp"
#include "rsp/fd_oracle.hpp"
#include "rsp/mc_pricer.hpp"
#include "rsp/metrics.hpp"
#include "rsp/training.hpp"

namespace {

using nlohmann::json;
using namespace rsp;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

const std::map<std::string, pde::Model> kModels{{"bsm-rs", pde::Model::BsmRs},
                                                {"heston-rs", pde::Model::HestonRs}};

std::string model_name(pde::Model m) { return m == pde::Model::BsmRs ? "bsm-rs" : "heston-rs"; }

struct Globals {
    std::size_t threads = 1;
};

struct PriceOpts {
    pde::Model model = pde::Model::BsmRs;
    std::string method = "cf";
    double spot = 70.0, strike = 70.0, tau = 1.0;
    int regime = 1;
    double r = 0.02;
    std::optional<double> sigma1, sigma2, lambda12, lambda21;
    double variance = 0.05, kappa = 2.0, gamma = 0.1, rho = -0.8;
    std::size_t paths = 100000, steps = 250;
    std::uint64_t seed = 42;
    bool antithetic = false;
    std::string scheme = "full-truncation";
    std::size_t fd_space = 800, fd_time = 800;
    std::string pirl_file;
};

struct TrainOpts {
    pde::Model model = pde::Model::BsmRs;
    std::size_t layers = 8, width = 16, iters = 2000;
    std::uint64_t seed = 42;
    std::string out, report;
    std::size_t inner = 0, terminal = 0, lower = 0;
    std::optional<double> lambda12, lambda21;
    double strike = 70.0;
    std::size_t history = 10, log_every = 100;
    double grad_tol = 1e-7;
};

struct SweepOpts {
    TrainOpts base;
    std::vector<std::size_t> layers, widths;
    std::size_t test_size = 5000;
    std::string out;
};

struct CompareOpts {
    std::string model_file;
    std::string scenario;
    std::size_t draws = 25000;
    std::uint64_t eval_seed = 2024;
    std::size_t mc_paths = 200000;
    std::uint64_t mc_seed = 7;
    std::string points_csv, summary_csv;
};

struct SampleOpts {
    pde::Model model = pde::Model::BsmRs;
    std::uint64_t seed = 42;
    std::size_t inner = 0, terminal = 0, lower = 0;
    std::string out;
};

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw FileError("cannot open " + path + " for writing");
    return os;
}

json price_json(const PriceResult& p, const PriceOpts& o) {
    json j{{"model", model_name(o.model)},
           {"method", o.method},
           {"regime", p.regime.label()},
           {"spot", o.spot},
           {"strike", o.strike},
           {"tau", o.tau},
           {"value", p.value}};
    if (p.std_error) j["std_error"] = *p.std_error;
    if (p.ci98) j["ci98"] = {p.ci98->low, p.ci98->high};
    return j;
}

int cmd_price(const PriceOpts& o, const Globals& g) {
    const bool bsm = o.model == pde::Model::BsmRs;
    if (!bsm && (o.method == "cf" || o.method == "fd"))
        throw UsageError("--method " + o.method + " is not available for --model heston-rs");
    if (o.regime != 1 && o.regime != 2) throw UsageError("--regime must be 1 or 2");
    const OptionSpec spec{o.strike, o.tau};
    const Regime regime(o.regime);
    MarketState state{0.0, o.spot, std::nullopt, regime};
    if (!bsm) state.variance = o.variance;

    BsmRsParams bp{o.r, {o.sigma1.value_or(0.15), o.sigma2.value_or(0.35)}, o.lambda12.value_or(2.0),
                   o.lambda21.value_or(1.0)};
    HestonRsParams hp{o.r,
                      o.kappa,
                      o.gamma,
                      o.rho,
                      {o.sigma1.value_or(0.25), o.sigma2.value_or(0.5)},
                      o.lambda12.value_or(2.0),
                      o.lambda21.value_or(3.0)};

    PriceResult result;
    if (o.method == "cf") {
        result = cf::put_price_cf(state, spec, bp);
    } else if (o.method == "fd") {
        result = fd::put_price_fd(state, spec, bp, {0.0, o.fd_space, o.fd_time});
    } else if (o.method == "mc") {
        mc::McConfig cfg{o.paths, o.steps, o.seed, o.antithetic,
                         o.scheme == "full-truncation" ? mc::VarianceScheme::FullTruncation
                                                       : mc::VarianceScheme::DiffusionFloorOnly,
                         g.threads};
        const auto est = bsm ? mc::bsm_rs_put_mc(state, spec, bp, cfg)
                             : mc::heston_rs_put_mc(state, spec, hp, cfg);
        result = est.to_price(regime);
    } else {
        if (o.pirl_file.empty()) throw UsageError("--method pirl needs --pirl-file");
        const PirlModel m = load_model(o.pirl_file);
        if (m.model != o.model)
            throw UsageError("--pirl-file holds a " + model_name(m.model) + " model");
        if (o.strike != m.strike)
            throw UsageError("--strike differs from the strike the model was trained for");
        if ((o.lambda12 && *o.lambda12 != m.lambda12) || (o.lambda21 && *o.lambda21 != m.lambda21))
            throw UsageError("--lambda12/--lambda21 differ from the rates the model was trained for");
        bp.lambda12 = hp.lambda12 = m.lambda12;
        bp.lambda21 = hp.lambda21 = m.lambda21;
        const net::Vector x = bsm ? bsm_input(0.0, o.tau, o.spot, bp)
                                  : heston_input(0.0, o.tau, o.spot, o.variance, hp);
        result.value = m.predict(x)(regime.index(), 0);
        result.regime = regime;
    }
    std::cout << price_json(result, o).dump() << '\n';
    return kExitOk;
}

sampler::SampleSizes resolve_sizes(pde::Model model, std::size_t inner, std::size_t terminal,
                                   std::size_t lower) {
    const auto d = sampler::paper_sizes(model);
    return {inner ? inner : d.inner, terminal ? terminal : d.terminal, lower ? lower : d.lower};
}

loss::LossConfig loss_config(const TrainOpts& o, const Globals& g) {
    auto cfg = loss::LossConfig::for_model(o.model);
    cfg.strike = o.strike;
    if (o.lambda12) cfg.lambda12 = *o.lambda12;
    if (o.lambda21) cfg.lambda21 = *o.lambda21;
    cfg.threads = g.threads;
    return cfg;
}

optim::LbfgsConfig lbfgs_config(const TrainOpts& o) {
    optim::LbfgsConfig c;
    c.max_iterations = o.iters;
    c.history = o.history;
    c.grad_tolerance = o.grad_tol;
    return c;
}

net::NetArchitecture architecture(pde::Model model, std::size_t layers, std::size_t width) {
    return {sampler::ranges_for(model).dim(), layers, width, 2, net::Activation::Tanh};
}

training::TrainResult run_training(const TrainOpts& o, const Globals& g,
                                   const sampler::SampleSets& sets) {
    const auto progress = [&](const optim::IterationRecord& r) {
        if (o.log_every && r.iteration % o.log_every == 0)
            std::cerr << "iter " << r.iteration << " total " << r.value << " grad " << r.grad_norm
                      << '\n';
    };
    return training::train(o.model, architecture(o.model, o.layers, o.width), sets,
                           loss_config(o, g), lbfgs_config(o), o.seed, progress);
}

int cmd_train(const TrainOpts& o, const Globals& g) {
    if (o.layers < 1 || o.width < 1) throw UsageError("--layers and --width must be >= 1");
    const auto sets =
        sampler::sample(o.model, o.seed, resolve_sizes(o.model, o.inner, o.terminal, o.lower));
    const auto t0 = std::chrono::steady_clock::now();
    training::TrainResult res;
    try {
        res = run_training(o, g, sets);
    } catch (const training::TrainDiverged& e) {
        PirlModel last = PirlModel::make(o.model, o.layers, o.width, o.seed);
        const auto cfg = loss_config(o, g);
        last.strike = cfg.strike;
        last.lambda12 = cfg.lambda12;
        last.lambda21 = cfg.lambda21;
        last.params.theta = e.last_good();
        const std::string path = o.out + ".lastgood";
        save_model(path, last);
        std::cerr << "training diverged (" << e.component() << "): " << e.what()
                  << "; last finite parameters written to " << path << '\n';
        return kExitNumeric;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    save_model(o.out, res.model);
    const std::string report = o.report.empty() ? o.out + ".report.csv" : o.report;
    auto os = open_out(report);
    optim::write_report_csv(os, res.report);
    const auto& last = res.report.history.back();
    json j{{"model", model_name(o.model)},
           {"layers", o.layers},
           {"width", o.width},
           {"parameters", res.model.params.theta.size()},
           {"iterations", res.report.iterations()},
           {"termination", optim::to_string(res.report.termination)},
           {"total", last.value},
           {"c_a", last.extras.at(0)},
           {"c_t", last.extras.at(1)},
           {"c_low", last.extras.at(2)},
           {"seconds", secs},
           {"out", o.out},
           {"report", report}};
    std::cout << j.dump() << '\n';
    return kExitOk;
}

int cmd_sweep(const SweepOpts& o, const Globals& g) {
    const pde::Model model = o.base.model;
    const bool bsm = model == pde::Model::BsmRs;
    const std::vector<std::size_t> layers =
        o.layers.empty() ? (bsm ? std::vector<std::size_t>{4, 6, 8} : std::vector<std::size_t>{2, 4, 6})
                         : o.layers;
    const std::vector<std::size_t> widths =
        o.widths.empty() ? std::vector<std::size_t>{16, 32, 48} : o.widths;
    const auto sizes = resolve_sizes(model, o.base.inner, o.base.terminal, o.base.lower);
    const auto sets = sampler::sample(model, o.base.seed, sizes);
    const double frac_t = double(sizes.terminal) / double(sizes.inner);
    const double frac_l = double(sizes.lower) / double(sizes.inner);
    const auto test = sampler::sample(
        model, o.base.seed + 1,
        {o.test_size, static_cast<std::size_t>(std::lround(frac_t * double(o.test_size))),
         static_cast<std::size_t>(std::lround(frac_l * double(o.test_size)))});

    std::ofstream file;
    if (!o.out.empty()) file = open_out(o.out);
    std::ostream& os = o.out.empty() ? std::cout : file;
    os << "layers,width,parameters,physics_loss,total_loss,test_loss,iterations,status\n";
    os << std::setprecision(10);
    for (std::size_t l : layers) {
        for (std::size_t w : widths) {
            TrainOpts cell = o.base;
            cell.layers = l;
            cell.width = w;
            const auto arch = architecture(model, l, w);
            os << l << ',' << w << ',' << arch.parameter_count() << ',';
            try {
                const auto res = run_training(cell, g, sets);
                const auto& last = res.report.history.back();
                const auto tc = loss::cost(res.model.network, res.model.params.theta, test,
                                           loss_config(cell, g));
                os << last.extras.at(0) << ',' << last.value << ',' << tc.total << ','
                   << res.report.iterations() << ",ok\n";
            } catch (const DivergedError& e) {
                os << ",,,,diverged\n";
                std::cerr << "cell " << l << 'x' << w << " diverged: " << e.what() << '\n';
            }
            os.flush();
        }
    }
    return kExitOk;
}

int cmd_compare(const CompareOpts& o, const Globals& g) {
    const metrics::Scenario scenario = metrics::parse_scenario(o.scenario);
    const PirlModel m = load_model(o.model_file);
    if (metrics::scenario_model(scenario) != m.model)
        throw UsageError("scenario " + o.scenario + " has no oracle for a " +
                         model_name(m.model) + " model");
    metrics::ScenarioConfig cfg;
    cfg.threads = g.threads;
    cfg.random_draws = o.draws;
    cfg.seed = o.eval_seed;
    cfg.mc.n_paths = o.mc_paths;
    cfg.mc.seed = o.mc_seed;
    const auto rep = metrics::eval_scenario(m, scenario, cfg);
    if (!o.points_csv.empty()) {
        auto os = open_out(o.points_csv);
        metrics::write_points_csv(os, rep);
    }
    if (!o.summary_csv.empty()) {
        auto os = open_out(o.summary_csv);
        metrics::write_summary_csv(os, rep);
    }
    std::cout << metrics::summary_json(rep).dump() << '\n';
    return kExitOk;
}

int cmd_sample(const SampleOpts& o) {
    const auto sets =
        sampler::sample(o.model, o.seed, resolve_sizes(o.model, o.inner, o.terminal, o.lower));
    if (o.out.empty()) {
        sampler::write_csv(std::cout, sets);
    } else {
        auto os = open_out(o.out);
        sampler::write_csv(os, sets);
    }
    return kExitOk;
}

CLI::Option* add_model(CLI::App* app, pde::Model& m) {
    return app->add_option("--model", m, "bsm-rs or heston-rs")
        ->transform(CLI::CheckedTransformer(kModels, CLI::ignore_case))
        ->default_str(model_name(m));
}

CLI::Option* add_seed(CLI::App* app, std::uint64_t& seed) {
    return app->add_option("--seed", seed, "random seed")->envname("RP_SEED");
}

void add_train_options(CLI::App* app, TrainOpts& o) {
    add_model(app, o.model);
    app->add_option("--layers", o.layers, "hidden layers");
    app->add_option("--width", o.width, "units per hidden layer");
    app->add_option("--iters", o.iters, "L-BFGS iteration budget");
    add_seed(app, o.seed);
    app->add_option("--inner", o.inner, "interior points (0: model default)");
    app->add_option("--terminal", o.terminal, "terminal points (0: model default)");
    app->add_option("--lower", o.lower, "S = 0 points (0: model default)");
    app->add_option("--strike", o.strike, "strike the network is trained for");
    app->add_option("--lambda12", o.lambda12, "rate 1 -> 2 (default 2)");
    app->add_option("--lambda21", o.lambda21, "rate 2 -> 1 (default 1 bsm-rs, 3 heston-rs)");
    app->add_option("--history", o.history, "L-BFGS memory");
    app->add_option("--grad-tol", o.grad_tol, "gradient-norm stopping tolerance");
    app->add_option("--log-every", o.log_every, "progress line interval on stderr (0: off)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Regime-switching put pricing: Fourier, Monte Carlo, finite differences and "
                 "physics-informed residual networks"};
    app.option_defaults()->always_capture_default();
    app.set_config("--config", "", "key=value configuration file (flags take precedence)");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);
    Globals g;
    app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
    bool show_config = false;
    app.add_flag("--show-config", show_config, "print the effective configuration and exit");

    PriceOpts po;
    auto* price = app.add_subcommand("price", "price one put");
    add_model(price, po.model);
    price->add_option("--method", po.method, "cf, mc, fd or pirl")
        ->check(CLI::IsMember({"cf", "mc", "fd", "pirl"}));
    price->add_option("--spot", po.spot);
    price->add_option("--strike", po.strike);
    price->add_option("--tau", po.tau, "time to maturity in years");
    price->add_option("--regime", po.regime, "current regime, 1 or 2");
    price->add_option("--r", po.r, "risk-free rate");
    price->add_option("--sigma1", po.sigma1, "volatility (bsm-rs, default 0.15) or vol-of-vol (heston-rs, default 0.25) in regime 1");
    price->add_option("--sigma2", po.sigma2, "as --sigma1 for regime 2 (default 0.35 bsm-rs, 0.5 heston-rs)");
    price->add_option("--lambda12", po.lambda12, "rate 1 -> 2 (default 2)");
    price->add_option("--lambda21", po.lambda21, "rate 2 -> 1 (default 1 bsm-rs, 3 heston-rs)");
    price->add_option("--variance", po.variance, "initial variance (heston-rs)");
    price->add_option("--kappa", po.kappa, "mean reversion speed (heston-rs)");
    price->add_option("--gamma", po.gamma, "long-run variance (heston-rs)");
    price->add_option("--rho", po.rho, "spot/variance correlation (heston-rs)");
    price->add_option("--paths", po.paths, "Monte Carlo paths");
    price->add_option("--steps", po.steps, "Monte Carlo steps per year (heston-rs)");
    add_seed(price, po.seed);
    price->add_flag("--antithetic", po.antithetic, "antithetic pairs");
    price->add_option("--scheme", po.scheme, "full-truncation or diffusion-floor")
        ->check(CLI::IsMember({"full-truncation", "diffusion-floor"}));
    price->add_option("--fd-space", po.fd_space, "finite-difference space nodes");
    price->add_option("--fd-time", po.fd_time, "finite-difference time steps");
    price->add_option("--pirl-file", po.pirl_file, "trained model file for --method pirl");

    TrainOpts to;
    auto* train = app.add_subcommand("train", "train a residual network on the pricing PDEs");
    add_train_options(train, to);
    train->add_option("--out", to.out, "model file to write")->required();
    train->add_option("--report", to.report, "training report CSV (default <out>.report.csv)");

    SweepOpts so;
    auto* sweep = app.add_subcommand("sweep", "train a grid of depths and widths");
    add_train_options(sweep, so.base);
    sweep->remove_option(sweep->get_option("--layers"));
    sweep->remove_option(sweep->get_option("--width"));
    sweep->add_option("--layers", so.layers, "depths (default 4 6 8 bsm-rs, 2 4 6 heston-rs)");
    sweep->add_option("--widths", so.widths, "widths (default 16 32 48)");
    sweep->add_option("--test-size", so.test_size, "held-out interior points");
    sweep->add_option("--out", so.out, "CSV file (default stdout)");

    CompareOpts co;
    auto* compare = app.add_subcommand("compare", "evaluate a trained model on a fixed scenario");
    compare->add_option("--model-file", co.model_file)->required();
    compare->add_option("--scenario", co.scenario)
        ->required()
        ->check(CLI::IsMember(
            {"terminal", "tau1-grid", "random-25000", "heston-itm-atm-otm", "heston-no-rs"}));
    compare->add_option("--draws", co.draws, "draws for random-25000");
    compare->add_option("--eval-seed", co.eval_seed, "seed of the random draws");
    compare->add_option("--mc-paths", co.mc_paths, "Monte Carlo paths for Heston scenarios");
    compare->add_option("--mc-seed", co.mc_seed, "Monte Carlo seed");
    compare->add_option("--points-csv", co.points_csv, "per-point CSV output");
    compare->add_option("--summary-csv", co.summary_csv, "summary CSV output");

    SampleOpts sa;
    auto* sample = app.add_subcommand("sample", "write collocation sets as CSV");
    add_model(sample, sa.model);
    add_seed(sample, sa.seed);
    sample->add_option("--inner", sa.inner, "interior points (0: model default)");
    sample->add_option("--terminal", sa.terminal, "terminal points (0: model default)");
    sample->add_option("--lower", sa.lower, "S = 0 points (0: model default)");
    sample->add_option("--out", sa.out, "CSV file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }
    if (show_config) {
        std::cout << app.config_to_str(true, true);
        return kExitOk;
    }

    try {
        if (*price) return cmd_price(po, g);
        if (*train) return cmd_train(to, g);
        if (*sweep) return cmd_sweep(so, g);
        if (*compare) return cmd_compare(co, g);
        if (*sample) return cmd_sample(sa);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const InvalidArgument& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return kExitUsage;
    } catch (const FileError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const DivergedError& e) {
        std::cerr << "numeric divergence: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const QuadratureError& e) {
        std::cerr << "quadrature error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const ConsistencyError& e) {
        std::cerr << "consistency error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return kExitUsage;
}
