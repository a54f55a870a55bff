#pragma once

// Limited-memory BFGS with a strong-Wolfe line search (bracketing + zoom with
// cubic interpolation).

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rsp/core.hpp"

namespace rsp::optim {

using Vec = std::vector<double>;

struct LbfgsConfig {
    std::size_t history = 10;
    std::size_t max_iterations = 2000;
    double grad_tolerance = 1e-7;
    double c1 = 1e-4;
    double c2 = 0.9;
    std::size_t max_line_search = 20;
    bool scale_initial_hessian = true;  // H0 = (s'y / y'y) I

    void validate() const {
        rsp::detail::require(history >= 1, "LbfgsConfig: history must be >= 1");
        rsp::detail::require(c1 > 0.0 && c1 < c2 && c2 < 1.0, "LbfgsConfig: need 0 < c1 < c2 < 1");
        rsp::detail::require(max_line_search >= 1, "LbfgsConfig: max_line_search must be >= 1");
    }
};

enum class Termination { GradientTolerance, MaxIterations, LineSearchFailure };

inline std::string to_string(Termination t) {
    switch (t) {
        case Termination::GradientTolerance: return "gradient_tolerance";
        case Termination::MaxIterations: return "max_iterations";
        default: return "line_search_failure";
    }
}

/// What the objective returns: value, gradient and optional extra
/// diagnostics (carried into the report for the accepted iterate).
struct Evaluation {
    double value = 0.0;
    Vec grad;
    std::vector<double> extras;
};

using Objective = std::function<Evaluation(const Vec&)>;

struct IterationRecord {
    std::size_t iteration = 0;
    double value = 0.0;
    std::vector<double> extras;
    double grad_norm = 0.0;
    double step = 0.0;
};

struct Report {
    std::vector<IterationRecord> history;  // entry 0 is the starting point
    Termination termination = Termination::MaxIterations;
    std::size_t evaluations = 0;

    std::size_t iterations() const noexcept { return history.empty() ? 0 : history.size() - 1; }
};

struct Result {
    Vec x;
    Evaluation at_x;
    Report report;
};

namespace detail {

inline double dot(const Vec& a, const Vec& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}
inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

/// Minimizer of the cubic interpolating (a, fa, ga), (b, fb, gb), kept inside
/// the safeguarded interval; falls back to bisection.
inline double cubic_min(double a, double fa, double ga, double b, double fb, double gb) {
    const double d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
    const double disc = d1 * d1 - ga * gb;
    const double lo = std::min(a, b), hi = std::max(a, b);
    if (disc >= 0.0) {
        const double d2 = std::copysign(std::sqrt(disc), b - a);
        const double x = b - (b - a) * (gb + d2 - d1) / (gb - ga + 2.0 * d2);
        const double margin = 0.1 * (hi - lo);
        if (std::isfinite(x) && x > lo + margin && x < hi - margin) return x;
    }
    return 0.5 * (a + b);
}

}  // namespace detail

/// Two-loop recursion: returns -H g for the curvature pairs (s_k, y_k), oldest first.
inline Vec two_loop_direction(const Vec& g, const std::deque<Vec>& s, const std::deque<Vec>& y,
                              double h0) {
    const std::size_t m = s.size();
    Vec q = g;
    std::vector<double> alpha(m), rho(m);
    for (std::size_t k = m; k-- > 0;) {
        rho[k] = 1.0 / detail::dot(y[k], s[k]);
        alpha[k] = rho[k] * detail::dot(s[k], q);
        for (std::size_t i = 0; i < q.size(); ++i) q[i] -= alpha[k] * y[k][i];
    }
    for (double& v : q) v *= h0;
    for (std::size_t k = 0; k < m; ++k) {
        const double beta = rho[k] * detail::dot(y[k], q);
        for (std::size_t i = 0; i < q.size(); ++i) q[i] += s[k][i] * (alpha[k] - beta);
    }
    for (double& v : q) v = -v;
    return q;
}

/// L-BFGS minimization. Accepted iterates satisfy the strong Wolfe conditions,
/// so the accepted cost never increases. A line-search failure returns the
/// best point so far. Trial points where the objective throws DivergedError
/// are treated as +inf and shrink the step.
inline Result minimize(const Objective& fn, Vec x0, const LbfgsConfig& cfg,
                       const std::function<void(const IterationRecord&)>& on_iteration = {}) {
    cfg.validate();
    Result res;
    Report& rep = res.report;
    Vec x = std::move(x0);
    Evaluation cur = fn(x);
    ++rep.evaluations;
    if (!std::isfinite(cur.value))
        throw DivergedError("minimize: non-finite objective at the starting point", "objective");

    auto record = [&](std::size_t it, double step) {
        rep.history.push_back({it, cur.value, cur.extras, detail::norm(cur.grad), step});
        if (on_iteration) on_iteration(rep.history.back());
    };
    record(0, 0.0);

    std::deque<Vec> s_hist, y_hist;
    double h0 = 1.0;
    const std::size_t n = x.size();

    for (std::size_t it = 1;; ++it) {
        const double gnorm = detail::norm(cur.grad);
        if (gnorm <= cfg.grad_tolerance) {
            rep.termination = Termination::GradientTolerance;
            break;
        }
        if (it > cfg.max_iterations) {
            rep.termination = Termination::MaxIterations;
            break;
        }

        Vec dir = two_loop_direction(cur.grad, s_hist, y_hist, h0);
        double dg0 = detail::dot(dir, cur.grad);
        if (!(dg0 < 0.0)) {  // not a descent direction: restart from steepest descent
            s_hist.clear();
            y_hist.clear();
            for (std::size_t i = 0; i < n; ++i) dir[i] = -cur.grad[i];
            dg0 = -gnorm * gnorm;
        }
        const double alpha0 = s_hist.empty() ? std::min(1.0, 1.0 / gnorm) : 1.0;

        // --- strong Wolfe line search ---
        const double f0 = cur.value;
        Vec xt(n);
        auto eval_at = [&](double a) {
            for (std::size_t i = 0; i < n; ++i) xt[i] = x[i] + a * dir[i];
            Evaluation e;
            try {
                e = fn(xt);
            } catch (const DivergedError&) {
                e.value = std::numeric_limits<double>::infinity();
            }
            ++rep.evaluations;
            if (!std::isfinite(e.value)) e.value = std::numeric_limits<double>::infinity();
            return e;
        };
        auto slope = [&](const Evaluation& e) {
            return std::isfinite(e.value) ? detail::dot(e.grad, dir)
                                          : std::numeric_limits<double>::infinity();
        };

        bool found = false;
        double a_acc = 0.0;
        Evaluation e_acc;
        double a_prev = 0.0, f_prev = f0, g_prev = dg0;
        double a = alpha0;
        std::size_t trials = 0;

        auto zoom = [&](double lo, double f_lo, double g_lo, double hi, double f_hi, double g_hi) {
            while (trials < cfg.max_line_search) {
                double aj;
                if (std::isfinite(f_hi) && std::isfinite(g_hi))
                    aj = detail::cubic_min(lo, f_lo, g_lo, hi, f_hi, g_hi);
                else
                    aj = 0.5 * (lo + hi);
                Evaluation ej = eval_at(aj);
                ++trials;
                const double gj = slope(ej);
                if (ej.value > f0 + cfg.c1 * aj * dg0 || ej.value >= f_lo) {
                    hi = aj;
                    f_hi = ej.value;
                    g_hi = gj;
                } else {
                    if (std::abs(gj) <= -cfg.c2 * dg0) {
                        a_acc = aj;
                        e_acc = std::move(ej);
                        return true;
                    }
                    if (gj * (hi - lo) >= 0.0) {
                        hi = lo;
                        f_hi = f_lo;
                        g_hi = g_lo;
                    }
                    lo = aj;
                    f_lo = ej.value;
                    g_lo = gj;
                    // keep the best sufficient-decrease point as a fallback
                    a_acc = aj;
                    e_acc = ej;
                }
                if (std::abs(hi - lo) < 1e-16 * std::max(1.0, std::abs(lo))) break;
            }
            return false;
        };

        while (trials < cfg.max_line_search) {
            Evaluation e = eval_at(a);
            ++trials;
            const double ga = slope(e);
            if (e.value > f0 + cfg.c1 * a * dg0 || (trials > 1 && e.value >= f_prev)) {
                found = zoom(a_prev, f_prev, g_prev, a, e.value, ga);
                break;
            }
            if (std::abs(ga) <= -cfg.c2 * dg0) {
                found = true;
                a_acc = a;
                e_acc = std::move(e);
                break;
            }
            if (ga >= 0.0) {
                found = zoom(a, e.value, ga, a_prev, f_prev, g_prev);
                break;
            }
            a_prev = a;
            f_prev = e.value;
            g_prev = ga;
            a_acc = a;
            e_acc = e;
            a *= 2.0;
        }

        // a sufficient-decrease point is still progress even if curvature failed
        const bool decreased = a_acc > 0.0 && std::isfinite(e_acc.value) && e_acc.value < f0;
        if (!found && !decreased) {
            rep.termination = Termination::LineSearchFailure;
            break;
        }

        Vec s(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = a_acc * dir[i];
            y[i] = e_acc.grad[i] - cur.grad[i];
            x[i] += s[i];
        }
        cur = std::move(e_acc);
        const double sy = detail::dot(s, y);
        if (sy > 1e-12 * detail::norm(s) * detail::norm(y)) {
            if (cfg.scale_initial_hessian) h0 = sy / detail::dot(y, y);
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            if (s_hist.size() > cfg.history) {
                s_hist.pop_front();
                y_hist.pop_front();
            }
        }
        record(it, a_acc);
    }
    res.x = std::move(x);
    res.at_x = std::move(cur);
    return res;
}

/// CSV: iteration,total,c_a,c_t,c_low,grad_norm,step
inline void write_report_csv(std::ostream& os, const Report& rep) {
    os << "iteration,total,c_a,c_t,c_low,grad_norm,step\n";
    for (const auto& r : rep.history) {
        os << r.iteration << ',' << r.value;
        for (std::size_t k = 0; k < 3; ++k)
            os << ',' << (k < r.extras.size() ? r.extras[k] : 0.0);
        os << ',' << r.grad_norm << ',' << r.step << '\n';
    }
}

}  // namespace rsp::optim
