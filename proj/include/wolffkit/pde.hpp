#pragma once

#include <wolffkit/absorption.hpp>
#include <wolffkit/potential.hpp>
#include <wolffkit/report.hpp>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include <cstdint>
#include <optional>

namespace wolffkit {

struct SolveConfig {
    double p = 2.0;
    Domain grid;
    std::optional<BallMask> ball;
    int ladder_levels = 5;
    double final_bandwidth = 0.0;       ///< 0: min_bandwidth_cells * cell width
    double min_bandwidth_cells = 1.6;
    int max_newton = 80;
    double damping = 1.0;
    double tolerance = 1e-9;            ///< on max |residual| / max(1, max |data|)
    double eps_grad = 0.0;              ///< 0: 1e-8 * diam of the grid box
    double cg_tolerance = 1e-12;
    int cg_max_iterations = 20000;

    void validate() const {
        require(p > 1.0 && p < grid.dim(), "1 < p < N");
        require(tolerance > 0.0, "tolerance > 0");
        require(eps_grad >= 0.0, "eps_grad > 0");
        require(ladder_levels >= 1, "ladder length >= 1");
        require(damping > 0.0 && damping <= 1.0, "0 < damping <= 1");
        require(min_bandwidth_cells > 0.0, "bandwidth > 0");
        if (ball) {
            require(ball->radius > 0.0, "ball radius > 0");
            require(static_cast<int>(ball->center.size()) == grid.dim(), "ball centre dimension matches grid");
        }
    }
    double regularization() const { return eps_grad > 0.0 ? eps_grad : 1e-8 * grid.diameter(); }
    /// Diameter of the physical domain (ball or box).
    double domain_diameter() const { return ball ? 2.0 * ball->radius : grid.diameter(); }
};

/// T_k applied pointwise.
inline ScalarField truncate(const ScalarField& u, double k) {
    require(k > 0.0, "k > 0");
    ScalarField out = u;
    for (double& v : out.values()) v = clamp_level(v, k);
    return out;
}

/// Cell-centred finite-difference layout. Outer box layer and (for ball
/// domains) cells with centre outside the ball are pinned to 0. Each active
/// cell has 2N links; links to pinned neighbours end at the Dirichlet point
/// (distance theta h along the axis, theta from the sphere crossing) and carry
/// weight theta, links between active cells carry weight 1/2 on each side.
class FDLayout {
public:
    struct Link {
        std::int64_t nb;  ///< unknown index, -1 for a pinned neighbour (value 0)
        double inv_dist;
        double a;
    };

    FDLayout(const Domain& grid, const std::optional<BallMask>& ball) : grid_(grid) {
        const int n = grid.dim();
        const std::size_t cells = grid.cell_count();
        unknown_.assign(cells, -1);
        Point x(n);
        int idx[16];
        for (std::size_t c = 0; c < cells; ++c) {
            grid.multi_index(c, idx);
            bool pinned = false;
            for (int d = 0; d < n; ++d) pinned |= idx[d] == 0 || idx[d] == grid.res()[d] - 1;
            if (!pinned && ball) {
                grid.cell_center(c, x.data());
                pinned = squared_distance(x.data(), ball->center.data(), n) >= ball->radius * ball->radius;
            }
            if (!pinned) {
                unknown_[c] = static_cast<std::int64_t>(active_.size());
                active_.push_back(c);
            }
        }
        links_.reserve(active_.size() * 2 * n);
        centers_.resize(active_.size() * n);
        for (std::size_t i = 0; i < active_.size(); ++i) {
            const std::size_t c = active_[i];
            grid.cell_center(c, centers_.data() + i * n);
            grid.multi_index(c, idx);
            for (int d = 0; d < n; ++d) {
                const double h = grid.spacing(d);
                for (int dir = -1; dir <= 1; dir += 2) {
                    idx[d] += dir;
                    const std::size_t nc = grid.flat_index(idx);
                    idx[d] -= dir;
                    if (unknown_[nc] >= 0) {
                        links_.push_back({unknown_[nc], 1.0 / h, 0.5});
                        continue;
                    }
                    double theta = 1.0;
                    if (ball) {
                        Point nx = grid.cell_center(nc);
                        if (squared_distance(nx.data(), ball->center.data(), n) >= ball->radius * ball->radius) {
                            const double* xc = centers_.data() + i * n;
                            const double yd = dir * (xc[d] - ball->center[d]);
                            const double y2 = squared_distance(xc, ball->center.data(), n);
                            const double disc = yd * yd - (y2 - ball->radius * ball->radius);
                            theta = (-yd + std::sqrt(std::max(0.0, disc))) / h;
                        }
                    }
                    theta = std::clamp(theta, 0.01, 1.0);
                    links_.push_back({-1, 1.0 / (theta * h), theta});
                }
            }
        }
    }

    const Domain& grid() const { return grid_; }
    int dim() const { return grid_.dim(); }
    std::size_t unknowns() const { return active_.size(); }
    std::size_t cell_of(std::size_t i) const { return active_[i]; }
    std::int64_t unknown_of(std::size_t cell) const { return unknown_[cell]; }
    std::span<const Link> links(std::size_t i) const {
        const std::size_t k = 2 * static_cast<std::size_t>(dim());
        return {links_.data() + i * k, k};
    }
    std::span<const double> center(std::size_t i) const {
        return {centers_.data() + i * dim(), static_cast<std::size_t>(dim())};
    }

    Eigen::VectorXd restrict_field(const ScalarField& f) const {
        Eigen::VectorXd v(unknowns());
        for (std::size_t i = 0; i < unknowns(); ++i) v[i] = f[active_[i]];
        return v;
    }
    ScalarField extend(const Eigen::VectorXd& v) const {
        ScalarField out(grid_);
        for (std::size_t i = 0; i < unknowns(); ++i) out[active_[i]] = v[i];
        return out;
    }

private:
    Domain grid_;
    std::vector<std::int64_t> unknown_;
    std::vector<std::size_t> active_;
    std::vector<Link> links_;
    std::vector<double> centers_;
};

/// Discrete functional J(u) = sum_c V [ (1/p)((s_c + e^2)^{p/2} - e^p) + G(x_c, u_c) - f_c u_c ],
/// s_c = sum_k a_k D_k^2 with D_k the one-sided difference along link k.
class PEnergy {
public:
    PEnergy(const FDLayout& layout, double p, double eps, const AbsorptionSpec& g, Eigen::VectorXd data)
        : L_(layout), p_(p), eps2_(eps * eps), g_(g), f_(std::move(data)), V_(layout.grid().cell_volume()) {}

    const Eigen::VectorXd& data() const { return f_; }

    double slope2(const Eigen::VectorXd& u, std::size_t i) const {
        double s = 0.0;
        for (const auto& l : L_.links(i)) {
            const double D = ((l.nb >= 0 ? u[l.nb] : 0.0) - u[i]) * l.inv_dist;
            s += l.a * D * D;
        }
        return s;
    }

    double energy(const Eigen::VectorXd& u) const {
        const double base = std::pow(eps2_, 0.5 * p_);
        double J = 0.0;
        for (std::size_t i = 0; i < L_.unknowns(); ++i) {
            const double s = slope2(u, i);
            J += (std::pow(s + eps2_, 0.5 * p_) - base) / p_ + g_.G(L_.center(i), u[i]) - f_[i] * u[i];
        }
        J *= V_;
        return std::isfinite(J) ? J : std::numeric_limits<double>::infinity();
    }

    /// Gradient of J; with `regularized = false` the unregularized weight
    /// s^{p/2-1} is used (and the result is divided by V: the strong residual).
    Eigen::VectorXd gradient(const Eigen::VectorXd& u, bool regularized = true) const {
        Eigen::VectorXd gr = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(L_.unknowns()));
        for (std::size_t i = 0; i < L_.unknowns(); ++i) {
            const double s = slope2(u, i);
            double w;
            if (regularized) {
                w = std::pow(s + eps2_, 0.5 * p_ - 1.0);
            } else {
                w = s > 0.0 ? std::pow(s, 0.5 * p_ - 1.0) : 0.0;
            }
            for (const auto& l : L_.links(i)) {
                const double D = ((l.nb >= 0 ? u[l.nb] : 0.0) - u[i]) * l.inv_dist;
                const double z = w * l.a * D * l.inv_dist;
                gr[i] -= z;
                if (l.nb >= 0) gr[l.nb] += z;
            }
            gr[i] += g_.g(L_.center(i), u[i]) - f_[i];
        }
        if (regularized) gr *= V_;
        return gr;
    }

    Eigen::SparseMatrix<double> hessian(const Eigen::VectorXd& u) const {
        const std::size_t n = L_.unknowns();
        const std::size_t k = 2 * static_cast<std::size_t>(L_.dim());
        const bool rank_one = p_ != 2.0;
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(n * (rank_one ? (k + 1) * (k + 1) + 4 * k : 4 * k + 1));
        std::vector<std::pair<std::int64_t, double>> z;
        for (std::size_t i = 0; i < n; ++i) {
            const auto idx = static_cast<std::int64_t>(i);
            const double s = slope2(u, i);
            const double w = V_ * std::pow(s + eps2_, 0.5 * p_ - 1.0);
            for (const auto& l : L_.links(i)) {
                const double c = w * l.a * l.inv_dist * l.inv_dist;
                trip.emplace_back(idx, idx, c);
                if (l.nb >= 0) {
                    trip.emplace_back(l.nb, l.nb, c);
                    trip.emplace_back(idx, l.nb, -c);
                    trip.emplace_back(l.nb, idx, -c);
                }
            }
            trip.emplace_back(idx, idx, V_ * g_.dg(L_.center(i), u[i]));
            if (!rank_one) continue;
            const double w2 = 2.0 * V_ * (0.5 * p_ - 1.0) * std::pow(s + eps2_, 0.5 * p_ - 2.0);
            z.clear();
            double zc = 0.0;
            for (const auto& l : L_.links(i)) {
                const double D = ((l.nb >= 0 ? u[l.nb] : 0.0) - u[i]) * l.inv_dist;
                const double coef = l.a * D * l.inv_dist;
                zc -= coef;
                if (l.nb >= 0) z.emplace_back(l.nb, coef);
            }
            z.emplace_back(idx, zc);
            for (const auto& [r, zr] : z) {
                for (const auto& [c, zcol] : z) trip.emplace_back(r, c, w2 * zr * zcol);
            }
        }
        Eigen::SparseMatrix<double> H(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        H.setFromTriplets(trip.begin(), trip.end());
        return H;
    }

    double g_of(std::size_t i, double u) const { return g_.g(L_.center(i), u); }

private:
    const FDLayout& L_;
    double p_;
    double eps2_;
    const AbsorptionSpec& g_;
    Eigen::VectorXd f_;
    double V_;
};

/// Diagnostics of one rung of the approximation ladder.
struct LevelDiagnostics {
    int level = 0;
    double bandwidth = 0.0;
    double truncation = 0.0;
    double data_mass = 0.0;
    double energy = 0.0;
    double residual = 0.0;
    int newton_iterations = 0;
    bool converged = false;
    double absorption_l1 = 0.0;         ///< int |g(x, u)|
    double u_l1_change = 0.0;           ///< ||u_l - u_{l-1}||_1
    double absorption_l1_change = 0.0;  ///< ||g(u_l) - g(u_{l-1})||_1
};

enum class LadderStatus { Converged, Divergent, Inconclusive };

inline const char* to_string(LadderStatus s) {
    switch (s) {
        case LadderStatus::Converged: return "converged";
        case LadderStatus::Divergent: return "divergent";
        case LadderStatus::Inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

struct SolutionBundle {
    ScalarField u;
    ScalarField absorption;  ///< g(x, u(x))
    bool converged = false;  ///< last Newton solve reached the tolerance
    double residual = 0.0;   ///< max |strong residual| of the last solve
    int newton_iterations = 0;
    std::vector<double> energy_trace;  ///< J after each accepted step of the last solve
    std::vector<LevelDiagnostics> levels;
    LadderStatus ladder = LadderStatus::Inconclusive;
    double sandwich_violation = 0.0;  ///< max(0, u - u1, -u2 - u) over the grid
    bool sandwich_checked = false;
    std::vector<std::string> notes;
};

namespace detail {

inline double field_l1_distance(const ScalarField& a, const ScalarField& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s * a.cell_volume();
}

struct NewtonResult {
    Eigen::VectorXd u;
    bool converged = false;
    double residual = 0.0;
    int iterations = 0;
    std::vector<double> trace;
    std::string failure;
};

inline NewtonResult newton_minimize(const PEnergy& E, Eigen::VectorXd u, const SolveConfig& cfg) {
    NewtonResult res;
    const double scale = std::max(1.0, E.data().size() ? E.data().cwiseAbs().maxCoeff() : 0.0);
    const double target = cfg.tolerance * scale;
    double damping = cfg.damping;
    bool halved = false;
    double J = E.energy(u);
    res.trace.push_back(J);
    for (int it = 0; it < cfg.max_newton; ++it) {
        res.residual = u.size() ? E.gradient(u, false).cwiseAbs().maxCoeff() : 0.0;
        if (res.residual <= target) {
            res.converged = true;
            break;
        }
        const Eigen::VectorXd gr = E.gradient(u, true);
        const Eigen::SparseMatrix<double> H = E.hessian(u);
        Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
        cg.setTolerance(cfg.cg_tolerance);
        cg.setMaxIterations(cfg.cg_max_iterations);
        cg.compute(H);
        Eigen::VectorXd d = cg.solve(-gr);
        double gd = gr.dot(d);
        if (!(gd < 0.0) || !d.allFinite()) {
            d = -gr;
            gd = -gr.squaredNorm();
        }
        double t = damping;
        bool accepted = false;
        double Jn = J;
        for (int ls = 0; ls < 40; ++ls) {
            Jn = E.energy(u + t * d);
            if (Jn <= J + 1e-4 * t * gd + 1e-13 * std::abs(J)) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        ++res.iterations;
        if (!accepted) {
            if (halved) {
                res.failure = "line search failed";
                break;
            }
            halved = true;
            damping *= 0.5;
            continue;
        }
        u += t * d;
        J = Jn;
        res.trace.push_back(J);
    }
    if (!res.converged) {
        res.residual = u.size() ? E.gradient(u, false).cwiseAbs().maxCoeff() : 0.0;
        res.converged = res.residual <= target;
        if (!res.converged && res.failure.empty()) res.failure = "Newton iteration limit";
    }
    res.u = std::move(u);
    return res;
}

}  // namespace detail

/// Minimizes the discrete J with bounded (signed) density data and zero
/// boundary values by damped Newton with Armijo backtracking.
inline SolutionBundle solve_regularized(const ScalarField& density, const AbsorptionSpec& g, const SolveConfig& cfg,
                                        const ScalarField* initial = nullptr) {
    cfg.validate();
    g.validate(cfg.p, cfg.grid.dim());
    require(density.domain() == cfg.grid, "data lives on the solver grid");
    const FDLayout layout(cfg.grid, cfg.ball);
    const PEnergy E(layout, cfg.p, cfg.regularization(), g, layout.restrict_field(density));
    Eigen::VectorXd u0 = initial ? layout.restrict_field(*initial)
                                 : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.unknowns()));
    detail::NewtonResult nr = detail::newton_minimize(E, std::move(u0), cfg);

    SolutionBundle out;
    out.u = layout.extend(nr.u);
    out.absorption = ScalarField(cfg.grid);
    for (std::size_t i = 0; i < layout.unknowns(); ++i) out.absorption[layout.cell_of(i)] = E.g_of(i, nr.u[i]);
    out.converged = nr.converged;
    out.residual = nr.residual;
    out.newton_iterations = nr.iterations;
    out.energy_trace = std::move(nr.trace);
    if (!nr.failure.empty()) out.notes.push_back(nr.failure);
    return out;
}

/// Bandwidths of the ladder: halving per level, ending at the final bandwidth.
inline std::vector<double> ladder_bandwidths(const SolveConfig& cfg) {
    const double fin =
        cfg.final_bandwidth > 0.0 ? cfg.final_bandwidth : cfg.min_bandwidth_cells * cfg.grid.cell_width();
    std::vector<double> b(cfg.ladder_levels);
    for (int l = 0; l < cfg.ladder_levels; ++l) b[l] = fin * std::ldexp(1.0, cfg.ladder_levels - 1 - l);
    return b;
}

namespace detail {

/// Data of one ladder level for one sign part: T_n(chi f) + chi nu, mollified.
inline ScalarField ladder_data(const Measure& part, const Domain& grid, int level, int levels, double bandwidth,
                               bool* clipped, double* truncation) {
    const int n = grid.dim();
    const int back = levels - 1 - level;
    // exhausting boxes: margin halves per level, from a quarter of the half width
    Box omega = grid.box();
    for (int d = 0; d < n; ++d) {
        const double half = 0.5 * (grid.hi()[d] - grid.lo()[d]);
        const double margin = std::min(0.25 * half, 0.5 * grid.spacing(d) * std::ldexp(1.0, back));
        omega.lo[d] += margin * (back > 0);
        omega.hi[d] -= margin * (back > 0);
    }
    double level_n = std::numeric_limits<double>::infinity();
    Measure trunc;
    if (part.density) {
        const double top = part.density->max_abs();
        level_n = top > 0.0 ? top * std::ldexp(1.0, -back) : 1.0;
        Measure nu{part.atoms, std::nullopt};
        trunc = truncate_restrict(*part.density, nu, level_n, omega);
    } else {
        for (const auto& a : part.atoms) {
            if (omega.contains(a.x)) trunc.atoms.push_back(a);
        }
    }
    *truncation = level_n;
    MollifyResult m = mollify(trunc, bandwidth, grid);
    *clipped |= m.clipped;
    return std::move(m.field);
}

}  // namespace detail

/// Runs the approximation ladder for measure data and returns the final
/// level with convergence diagnostics. The monitored quantity is int |g(u)|
/// (or ||u||_1 when g = 0). Verdict: divergent if its increments fail to
/// contract (ratio >= 0.7) at the last two levels, converged if the last
/// increment is within 2% of the value, inconclusive otherwise.
inline SolutionBundle solve_measure(const SignedMeasure& mu, const AbsorptionSpec& g, const SolveConfig& cfg) {
    cfg.validate();
    g.validate(cfg.p, cfg.grid.dim());
    const std::vector<double> bands = ladder_bandwidths(cfg);
    const int L = cfg.ladder_levels;
    const bool signed_data = !mu.negative.empty();

    SolutionBundle out;
    ScalarField prev_u, prev_g;
    std::vector<double> monitored;
    bool clipped = false;
    ScalarField pos_last, neg_last;
    for (int l = 0; l < L; ++l) {
        double trunc = 0.0;
        ScalarField pos = detail::ladder_data(mu.positive, cfg.grid, l, L, bands[l], &clipped, &trunc);
        ScalarField data = pos;
        ScalarField neg(cfg.grid);
        if (signed_data) {
            double t2 = 0.0;
            neg = detail::ladder_data(mu.negative, cfg.grid, l, L, bands[l], &clipped, &t2);
            for (std::size_t i = 0; i < data.size(); ++i) data[i] -= neg[i];
        }
        SolutionBundle lvl = solve_regularized(data, g, cfg, l > 0 ? &prev_u : nullptr);
        LevelDiagnostics d;
        d.level = l + 1;
        d.bandwidth = bands[l];
        d.truncation = trunc;
        d.data_mass = data.integral_abs();
        d.energy = lvl.energy_trace.empty() ? 0.0 : lvl.energy_trace.back();
        d.residual = lvl.residual;
        d.newton_iterations = lvl.newton_iterations;
        d.converged = lvl.converged;
        d.absorption_l1 = lvl.absorption.integral_abs();
        if (l > 0) {
            d.u_l1_change = detail::field_l1_distance(lvl.u, prev_u);
            d.absorption_l1_change = detail::field_l1_distance(lvl.absorption, prev_g);
        }
        monitored.push_back(g.is_none() ? lvl.u.integral_abs() : d.absorption_l1);
        out.levels.push_back(d);
        prev_u = lvl.u;
        prev_g = lvl.absorption;
        if (l == L - 1) {
            out.u = std::move(lvl.u);
            out.absorption = std::move(lvl.absorption);
            out.converged = lvl.converged;
            out.residual = lvl.residual;
            out.newton_iterations = lvl.newton_iterations;
            out.energy_trace = std::move(lvl.energy_trace);
            for (auto& note : lvl.notes) out.notes.push_back(std::move(note));
            pos_last = std::move(pos);
            neg_last = std::move(neg);
        }
    }
    if (clipped) out.notes.push_back("mollifier bandwidth clipped at the domain boundary");

    // companion single-sign solves on the final data: -u2 <= u <= u1
    if (signed_data) {
        const SolutionBundle u1 = solve_regularized(pos_last, g, cfg);
        const SolutionBundle u2 = solve_regularized(neg_last, g, cfg);
        for (std::size_t i = 0; i < out.u.size(); ++i) {
            out.sandwich_violation =
                std::max({out.sandwich_violation, out.u[i] - u1.u[i], -u2.u[i] - out.u[i]});
        }
    } else {
        for (std::size_t i = 0; i < out.u.size(); ++i)
            out.sandwich_violation = std::max(out.sandwich_violation, -out.u[i]);
    }
    out.sandwich_checked = true;

    // ladder verdict
    std::vector<double> inc;
    for (std::size_t l = 1; l < monitored.size(); ++l) inc.push_back(std::abs(monitored[l] - monitored[l - 1]));
    bool all_levels = true;
    for (const auto& d : out.levels) all_levels &= d.converged;
    out.ladder = LadderStatus::Inconclusive;
    if (inc.size() >= 3) {
        const std::size_t m = inc.size();
        const bool stalled = inc[m - 1] >= 0.7 * inc[m - 2] && inc[m - 2] >= 0.7 * inc[m - 3] && inc[m - 1] > 0.0;
        if (stalled) out.ladder = LadderStatus::Divergent;
    }
    if (out.ladder != LadderStatus::Divergent && !inc.empty() && all_levels) {
        if (inc.back() <= 0.02 * std::abs(monitored.back())) out.ladder = LadderStatus::Converged;
    }
    if (L == 1 && all_levels) out.ladder = LadderStatus::Converged;
    if (!all_levels) out.notes.push_back("a ladder level did not reach the Newton tolerance");
    return out;
}

inline SolutionBundle solve_measure(const Measure& mu, const AbsorptionSpec& g, const SolveConfig& cfg) {
    return solve_measure(SignedMeasure{mu, Measure{}}, g, cfg);
}

/// k -> k^{-1} int |grad T_k(u)|^p with the gradient from averaged one-sided
/// differences (one-sided at the grid edge).
struct TruncationEnergyTable {
    std::vector<double> ks;
    std::vector<double> values;
    double max_value = 0.0;
};

inline TruncationEnergyTable truncation_energy_table(const ScalarField& u, double p, const std::vector<double>& ks) {
    TruncationEnergyTable out;
    const Domain& g = u.domain();
    const int n = g.dim();
    for (double k : ks) {
        require(k > 0.0, "k > 0");
        const ScalarField t = truncate(u, k);
        double acc = 0.0;
        int idx[16];
        for (std::size_t c = 0; c < t.size(); ++c) {
            g.multi_index(c, idx);
            double s = 0.0;
            for (int d = 0; d < n; ++d) {
                const double h = g.spacing(d);
                double sq = 0.0;
                int cnt = 0;
                for (int dir = -1; dir <= 1; dir += 2) {
                    const int j = idx[d] + dir;
                    if (j < 0 || j >= g.res()[d]) continue;
                    idx[d] = j;
                    const double D = (t[g.flat_index(idx)] - t[c]) / h;
                    idx[d] -= dir;
                    sq += D * D;
                    ++cnt;
                }
                s += sq / cnt;
            }
            acc += std::pow(s, 0.5 * p);
        }
        const double v = acc * g.cell_volume() / k;
        out.ks.push_back(k);
        out.values.push_back(v);
        out.max_value = std::max(out.max_value, v);
    }
    return out;
}

/// c_hat = max over cells of max(u / W[mu+], -u / W[mu-]), with 0/0 = 0 and
/// W evaluated at R = 2 diam(domain), alpha = 1.
inline FitReport pointwise_bound_check(const ScalarField& u, const SignedMeasure& mu, const PotentialParams& pp,
                                       const std::optional<BallMask>& ball = std::nullopt) {
    FitReport rep;
    rep.experiment = "pointwise-bound";
    const Domain& g = u.domain();
    const ScalarField wp = wolff_field(mu.positive, pp, g);
    const ScalarField wm = wolff_field(mu.negative, pp, g);
    double c = 0.0;
    std::size_t violations = 0, samples = 0;
    const double floor = 1e-12 * std::max(u.max_abs(), 1e-300);
    Point x(g.dim());
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (ball) {
            g.cell_center(i, x.data());
            if (squared_distance(x.data(), ball->center.data(), g.dim()) >= ball->radius * ball->radius) continue;
        }
        const double v = u[i];
        ++samples;
        if (v > floor) {
            if (wp[i] > 0.0) c = std::max(c, v / wp[i]);
            else ++violations;
        } else if (v < -floor) {
            if (wm[i] > 0.0) c = std::max(c, -v / wm[i]);
            else ++violations;
        }
    }
    rep.samples = samples;
    rep.constants["c_hat"] = c;
    rep.constants["violations"] = static_cast<double>(violations);
    rep.pass = violations == 0 && std::isfinite(c);
    if (violations) rep.notes.push_back("W = 0 where u != 0");
    return rep;
}

}  // namespace wolffkit
