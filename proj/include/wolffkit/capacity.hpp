#pragma once

#include <wolffkit/absorption.hpp>
#include <wolffkit/lorentz.hpp>
#include <wolffkit/potential.hpp>
#include <wolffkit/report.hpp>

#include <sstream>
#include <tuple>

namespace wolffkit {

struct OptimizerSettings {
    int max_iterations = 3000;
    double step = 0.3;         ///< c in the step c / sqrt(k), relative to ||f||_2 / ||d||_2
    double tolerance = 1e-5;   ///< relative change of the best value over the window
    int window = 50;
};

struct CapacityProblem {
    std::vector<std::size_t> E;  ///< target cells
    double alpha = 2.0;
    LorentzParams lp;
    Domain grid;
    OptimizerSettings opt;
    std::optional<std::vector<double>> initial;  ///< feasible-direction warm start (f >= 0)

    void validate() const {
        require(alpha > 0.0 && alpha < grid.dim(), "0 < alpha < N");
        require(lp.s > 1.0, "s > 1");
        require(!lp.q_infinite, "q < inf");
        for (std::size_t e : E) require(e < grid.cell_count(), "target cells inside the grid");
        if (initial) require(initial->size() == grid.cell_count(), "warm start has one value per cell");
    }
};

struct TracePoint {
    int iteration = 0;
    double objective = 0.0;  ///< best feasible value so far
    double margin = 0.0;     ///< min_E G*f - 1 of the best iterate
};

struct CapacityResult {
    double value = 0.0;
    ScalarField argmin;
    bool converged = false;
    bool heuristic = false;  ///< quasi-norm range: no convexity guarantee
    double dual_gap = 0.0;   ///< relative change of the best value over the last window
    int iterations = 0;
    std::vector<TracePoint> trace;
    std::string fingerprint;
};

/// Rows of the discrete operator f -> G_alpha * f restricted to E:
/// K[e][j] = V G(|x_e - x_j|), and the self term is the integral of G over the
/// ball with the cell's volume.
inline std::vector<std::vector<double>> bessel_rows(const Domain& grid, double alpha,
                                                    const std::vector<std::size_t>& E) {
    const auto table = bessel_table_for(alpha, grid);
    const double V = grid.cell_volume();
    const double self = table->self_cell_integral(V);
    const int n = grid.dim();
    std::vector<std::vector<double>> rows(E.size(), std::vector<double>(grid.cell_count()));
    parallel_for(E.size(), [&](std::size_t r) {
        const Point xe = grid.cell_center(E[r]);
        double x[16];
        for (std::size_t j = 0; j < grid.cell_count(); ++j) {
            if (j == E[r]) {
                rows[r][j] = self;
                continue;
            }
            grid.cell_center(j, x);
            rows[r][j] = V * (*table)(std::sqrt(squared_distance(x, xe.data(), n)));
        }
    });
    return rows;
}

inline std::string grid_fingerprint(const Domain& g) {
    std::ostringstream os;
    os.precision(17);
    os << "grid";
    for (int d = 0; d < g.dim(); ++d) os << (d ? "x" : ":") << g.res()[d];
    os << " box";
    for (int d = 0; d < g.dim(); ++d) os << (d ? "," : ":") << "[" << g.lo()[d] << "," << g.hi()[d] << "]";
    return os.str();
}

/// C_{alpha,s,q}(E) = inf { ||f||_{s,q} : f >= 0, G_alpha * f >= 1 on E }, by
/// projected subgradient descent on f >= 0 with feasibility rescaling
/// f <- f / min_E G_alpha * f after every step. The reported value is the best
/// feasible iterate, so it is an upper bound on the discrete optimum.
inline CapacityResult capacity_estimate(const CapacityProblem& prob) {
    prob.validate();
    CapacityResult out;
    out.argmin = ScalarField(prob.grid);
    {
        const auto t = bessel_table_for(prob.alpha, prob.grid);
        std::ostringstream os;
        os.precision(17);
        os << grid_fingerprint(prob.grid) << " table:G_" << prob.alpha << ",N=" << prob.grid.dim() << ","
           << BesselTable::kNodes << ",[" << t->r_min() << "," << t->r_max() << "]";
        out.fingerprint = os.str();
    }
    out.heuristic = prob.lp.quasi_norm();
    if (prob.E.empty()) {
        out.converged = true;
        return out;
    }
    const std::size_t n = prob.grid.cell_count();
    const double V = prob.grid.cell_volume();
    const auto K = bessel_rows(prob.grid, prob.alpha, prob.E);

    auto constraint = [&](const std::vector<double>& f, std::size_t* arg) {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < K.size(); ++r) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += K[r][j] * f[j];
            if (s < m) {
                m = s;
                if (arg) *arg = r;
            }
        }
        return m;
    };

    std::vector<double> f(n, 0.0);
    if (prob.initial) {
        f = *prob.initial;
        for (double& v : f) v = std::max(v, 0.0);
    }
    if (constraint(f, nullptr) <= 0.0) {
        for (const auto& row : K) {
            for (std::size_t j = 0; j < n; ++j) f[j] += row[j];
        }
    }
    {
        const double m = constraint(f, nullptr);
        for (double& v : f) v /= m;
    }
    double best = lorentz_norm_gradient(f, V, prob.lp).norm;
    std::vector<double> best_f = f;
    std::vector<double> history{best};
    out.trace.push_back({0, best, constraint(best_f, nullptr) - 1.0});

    for (int k = 1; k <= prob.opt.max_iterations; ++k) {
        std::size_t star = 0;
        const double m = constraint(f, &star);  // == 1 up to rounding
        const LorentzGradient lg = lorentz_norm_gradient(f, V, prob.lp);
        std::vector<double> d(n);
        double dn = 0.0, fn = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            d[j] = lg.gradient[j] - lg.norm / m * K[star][j];
            dn += d[j] * d[j];
            fn += f[j] * f[j];
        }
        if (dn == 0.0) {
            out.converged = true;
            out.iterations = k;
            break;
        }
        const double step = prob.opt.step * std::sqrt(fn / dn) / std::sqrt(static_cast<double>(k));
        std::vector<double> trial(n);
        for (std::size_t j = 0; j < n; ++j) trial[j] = std::max(0.0, f[j] - step * d[j]);
        const double mt = constraint(trial, nullptr);
        if (mt > 0.0) {
            for (double& v : trial) v /= mt;
            f = std::move(trial);
        }
        const double val = lorentz_norm_gradient(f, V, prob.lp).norm;
        if (val < best) {
            best = val;
            best_f = f;
        }
        history.push_back(best);
        out.trace.push_back({k, best, constraint(best_f, nullptr) - 1.0});
        out.iterations = k;
        if (k >= prob.opt.window) {
            const double old = history[history.size() - 1 - prob.opt.window];
            out.dual_gap = (old - best) / best;
            if (out.dual_gap <= prob.opt.tolerance) {
                out.converged = true;
                break;
            }
        }
    }
    out.value = best;
    out.argmin = ScalarField(prob.grid, std::move(best_f));
    return out;
}

/// (alpha, s, q_lorentz) = (p, Nq/(Nq-(p-1)(N-beta)), q/(q+1-p)); the
/// second variant returns q_lorentz = 1.
inline std::tuple<double, double, double> power_capacity_indices(int N, double p, double q, double beta,
                                                                  bool second_variant = false) {
    require(p > 1.0 && p < N, "1 < p < N");
    require(q > p - 1.0, "q > p-1");
    require(beta >= 0.0 && beta < N, "0 <= beta < N");
    const double s = N * q / (N * q - (p - 1.0) * (N - beta));
    if (!(s > 1.0)) throw std::logic_error("capacity index s must exceed 1");
    return {p, s, second_variant ? 1.0 : q / (q + 1.0 - p)};
}

/// Finite/infinite classification of int_1^inf g(s) s^e ds.
struct IntegralTest {
    bool applicable = true;
    bool finite = false;
    double value = 0.0;
};

namespace detail {

inline IntegralTest power_tail_test(const AbsorptionSpec& g, double e) {
    IntegralTest out;
    switch (g.kind) {
        case AbsorptionSpec::Kind::None:
            out.finite = true;
            return out;
        case AbsorptionSpec::Kind::Power:
            // int_1^inf s^{q+e} ds
            out.finite = g.q + e < -1.0;
            if (out.finite) out.value = -1.0 / (g.q + e + 1.0);
            return out;
        case AbsorptionSpec::Kind::Exponential:
            out.finite = false;
            return out;
        case AbsorptionSpec::Kind::Custom: break;
    }
    // numeric: growth exponent of g from two far samples, then quadrature
    const double s1 = 1e6, s2 = 1e8;
    const double g1 = std::abs(g.profile(s1)), g2 = std::abs(g.profile(s2));
    if (g1 == 0.0 && g2 == 0.0) {
        out.finite = true;
    } else {
        const double growth = (std::log(g2) - std::log(g1)) / (std::log(s2) - std::log(s1));
        if (!std::isfinite(growth) || growth + e >= -1.0 - 1e-3) {
            out.finite = false;
            return out;
        }
        out.finite = true;
    }
    const double S = 1e12;
    out.value = log_panel_integral([&](double s) { return g.profile(s) * std::pow(s, e); }, 1.0, S);
    const double gs = std::abs(g.profile(S));
    if (gs > 0.0) {
        const double growth = (std::log(gs) - std::log(std::abs(g.profile(S / 10.0)))) / std::log(10.0);
        out.value += gs * std::pow(S, e + 1.0) / -(growth + e + 1.0);
    }
    return out;
}

}  // namespace detail

/// int_1^inf g(s) s^{-(N-1)/(N-2)} ds; not applicable for N = 2.
inline IntegralTest subcritical_integral(const AbsorptionSpec& g, int N) {
    if (N == 2) return {false, false, 0.0};
    require(N >= 3, "N >= 3");
    return detail::power_tail_test(g, -(N - 1.0) / (N - 2.0));
}

/// int_1^inf g(s) s^{-q-1} ds.
inline IntegralTest tail_integral_q(const AbsorptionSpec& g, double q) {
    require(q > 0.0, "q > 0");
    return detail::power_tail_test(g, -q - 1.0);
}

/// (p ln2 / (tau (12 lambda c)^lambda))^{(p-1)/lambda}.
inline double exp_threshold(int N, double p, double tau, double lambda, double c) {
    require(p > 1.0 && p < N, "1 < p < N");
    require(tau > 0.0, "tau > 0");
    require(lambda >= 1.0, "lambda >= 1");
    require(c > 0.0, "c > 0");
    return std::pow(p * std::numbers::ln2 / (tau * std::pow(12.0 * lambda * c, lambda)), (p - 1.0) / lambda);
}

/// Exponential-absorption criterion: pass iff
/// ||M^{(p-1)(lambda-1)/lambda}_{p, 2 diam}[nu]||_inf (over the grid) < threshold.
inline CriterionReport exp_good_criterion(const Measure& nu, int N, double p, double tau, double lambda, double c,
                                          const Domain& grid, double diam) {
    CriterionReport rep;
    rep.name = "exponential-absorption";
    const double thr = exp_threshold(N, p, tau, lambda, c);
    const double eta = (p - 1.0) * (lambda - 1.0) / lambda;
    const auto pp = PotentialParams::make(N, 1.0, p, Radius::finite(2.0 * diam), eta);
    const ScalarField M = potential_field(nu, pp, grid, PotentialKind::EtaMaximal);
    double sup = 0.0;
    for (double v : M.values()) sup = std::max(sup, v);
    rep.inputs = {{"N", N}, {"p", p}, {"tau", tau}, {"lambda", lambda}, {"c", c}, {"eta", eta},
                  {"nu_mass", nu.total_mass()}, {"diam", diam}};
    rep.threshold = ExtReal::finite(thr);
    rep.measured = std::isfinite(sup) ? ExtReal::finite(sup) : ExtReal::inf();
    rep.verdict = rep.measured.is_finite() && sup < thr ? Verdict::Pass : Verdict::Fail;
    return rep;
}

/// Cells with centre in the closed cube of side `side` around x (the nearest
/// cell if none).
inline std::vector<std::size_t> cube_cells(const Domain& grid, std::span<const double> x, double side) {
    const int n = grid.dim();
    Point lo(n), hi(n);
    for (int d = 0; d < n; ++d) {
        lo[d] = x[d] - 0.5 * side;
        hi[d] = x[d] + 0.5 * side;
    }
    std::vector<std::size_t> out;
    grid.for_cells_in_box(lo, hi, [&](std::size_t c) { out.push_back(c); });
    if (out.empty()) out.push_back(grid.locate(x));
    return out;
}

/// Capacity probe around every atom of weight >= delta: capacities of the
/// cubes of side eps, eps/2, eps/4. Fails if each halving at least halves the
/// capacity for some atom (capacity heading to 0 under positive mass);
/// inconclusive otherwise, since a grid probe cannot certify absolute continuity.
inline CriterionReport capacity_probe(const Measure& mu, double alpha, const LorentzParams& lp, const Domain& grid,
                                      double eps, double delta, const OptimizerSettings& opt = {}) {
    require(eps > 0.0, "eps > 0");
    CriterionReport rep;
    rep.name = "capacity-probe";
    rep.inputs = {{"alpha", alpha}, {"s", lp.s}, {"q", lp.q}, {"eps", eps}, {"delta", delta}};
    rep.verdict = Verdict::Inconclusive;
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& a : mu.atoms) {
        if (a.w < delta) continue;
        double caps[3];
        for (int k = 0; k < 3; ++k) {
            CapacityProblem prob;
            prob.E = cube_cells(grid, a.x, eps * std::ldexp(1.0, -k));
            prob.alpha = alpha;
            prob.lp = lp;
            prob.grid = grid;
            prob.opt = opt;
            caps[k] = capacity_estimate(prob).value;
        }
        std::ostringstream os;
        os << "atom w=" << a.w << " caps " << caps[0] << " " << caps[1] << " " << caps[2];
        rep.notes.push_back(os.str());
        worst = std::min(worst, caps[2]);
        if (caps[1] <= 0.5 * caps[0] && caps[2] <= 0.5 * caps[1]) rep.verdict = Verdict::Fail;
    }
    rep.measured = std::isfinite(worst) ? ExtReal::finite(worst) : ExtReal::inf();
    return rep;
}

}  // namespace wolffkit
