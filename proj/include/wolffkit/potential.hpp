#pragma once

#include <wolffkit/lorentz.hpp>

#include <map>
#include <memory>
#include <mutex>
#include <tuple>

namespace wolffkit {

/// (N, alpha, p, R, eta) for W^R_{alpha,p}, M^eta_{alpha p, R} and friends.
struct PotentialParams {
    int N = 3;
    double alpha = 1.0;
    double p = 2.0;
    Radius R = Radius::infinity();
    double eta = 0.0;

    static PotentialParams make(int N, double alpha, double p, Radius R, double eta = 0.0) {
        require(N >= 2, "N >= 2");
        require(p > 1.0, "p > 1");
        require(p < N, "p < N");
        require(alpha > 0.0, "alpha > 0");
        require(alpha * p < N, "alpha*p >= N");
        require(eta >= 0.0, "eta >= 0");
        return {N, alpha, p, R, eta};
    }

    /// N - alpha p, the homogeneity exponent of the maximal operators.
    double order_gap() const { return N - alpha * p; }
    /// (N - alpha p) / (p - 1), the decay exponent of the Wolff integrand.
    double gamma() const { return order_gap() / (p - 1.0); }
    /// eta < p - 1, needed wherever the eta-maximal operator is paired with W.
    void require_eta_admissible() const { require(eta < p - 1.0, "0 <= eta < p-1"); }
};

/// h_eta(t) = (-ln t)^{-eta} for t < 1/2, (ln 2)^{-eta} for t >= 1/2.
inline double h_eta(double t, double eta) {
    require(t > 0.0, "t > 0");
    require(eta >= 0.0, "eta >= 0");
    if (eta == 0.0) return 1.0;
    if (t < 0.5) return std::pow(-std::log(t), -eta);
    return std::pow(std::numbers::ln2, -eta);
}

/// l(r, R) = g (min{r,R}^{-g} - R^{-g}) with g = (N - alpha p)/(p-1);
/// R = infinity keeps g r^{-g} alone.
inline double l_of_rR(double r, Radius R, const PotentialParams& pp) {
    require(r > 0.0, "r > 0");
    const double g = pp.gamma();
    if (R.is_infinite()) return g * std::pow(r, -g);
    const double Rv = R.value();
    return g * (std::pow(std::min(r, Rv), -g) - std::pow(Rv, -g));
}

/// Radial mass function t -> mu(B_t(x)) around a fixed point, as a sum of
///  - jumps (atoms at distance d, counted for t > d),
///  - ramps (density cells away from x: mass grows linearly across one cell width),
///  - ball parts (the cell containing x: mass grows like t^N up to the
///    equal-volume radius).
/// Between consecutive breakpoints the mass is A + B t + C t^N exactly.
class RadialMass {
public:
    struct Segment {
        double lo, hi;  // hi may be +inf
        double A, B, C;
    };

    RadialMass(const Measure& mu, std::span<const double> x, int N) : N_(N) {
        for (const auto& a : mu.atoms) {
            if (a.w <= 0.0) continue;
            jumps_.emplace_back(std::sqrt(squared_distance(a.x.data(), x.data(), N)), a.w);
        }
        if (mu.density) add_density(*mu.density, x);
        build();
    }

    const std::vector<Segment>& segments() const { return segments_; }
    bool has_density() const { return has_density_; }
    int dim() const { return N_; }

    double mass(double t) const {
        for (const auto& s : segments_) {
            if (t > s.lo && t <= s.hi) return s.A + s.B * t + s.C * std::pow(t, N_);
        }
        return 0.0;
    }

private:
    void add_density(const ScalarField& f, std::span<const double> x) {
        const Domain& g = f.domain();
        const double V = g.cell_volume();
        const double h = g.cell_width();
        const double r_eq = std::pow(V / unit_ball_volume(N_), 1.0 / N_);
        Point c(N_);
        for (std::size_t i = 0; i < f.size(); ++i) {
            if (f[i] <= 0.0) continue;
            has_density_ = true;
            g.cell_center(i, c.data());
            const double d = std::sqrt(squared_distance(c.data(), x.data(), N_));
            const double m = f[i] * V;
            if (d > 0.5 * h) {
                ramps_.push_back({d - 0.5 * h, d + 0.5 * h, m});
            } else {
                balls_.push_back({r_eq, m});
            }
        }
    }

    void build() {
        std::vector<double> cuts;
        for (const auto& [d, w] : jumps_) cuts.push_back(d);
        for (const auto& r : ramps_) {
            cuts.push_back(r.a);
            cuts.push_back(r.b);
        }
        for (const auto& b : balls_) cuts.push_back(b.r);
        cuts.push_back(0.0);
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        cuts.push_back(std::numeric_limits<double>::infinity());

        // sort sources by start so the sweep is linear
        std::sort(jumps_.begin(), jumps_.end());
        std::vector<std::pair<double, int>> starts, ends;  // (t, index)
        for (int i = 0; i < static_cast<int>(ramps_.size()); ++i) {
            starts.emplace_back(ramps_[i].a, i);
            ends.emplace_back(ramps_[i].b, i);
        }
        std::sort(starts.begin(), starts.end());
        std::sort(ends.begin(), ends.end());
        std::vector<std::pair<double, double>> ball_ends;
        double C = 0.0;
        for (const auto& b : balls_) {
            ball_ends.emplace_back(b.r, b.m);
            C += b.m / std::pow(b.r, N_);
        }
        std::sort(ball_ends.begin(), ball_ends.end());

        double A = 0.0, B = 0.0;
        std::size_t ij = 0, is = 0, ie = 0, ib = 0;
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
            const double lo = cuts[k];
            // everything starting or ending at lo takes effect for t > lo
            while (ij < jumps_.size() && jumps_[ij].first <= lo) A += jumps_[ij++].second;
            while (is < starts.size() && starts[is].first <= lo) {
                const auto& r = ramps_[starts[is++].second];
                const double slope = r.m / (r.b - r.a);
                B += slope;
                A -= slope * r.a;
            }
            while (ie < ends.size() && ends[ie].first <= lo) {
                const auto& r = ramps_[ends[ie++].second];
                const double slope = r.m / (r.b - r.a);
                B -= slope;
                A += slope * r.a + r.m;
            }
            while (ib < ball_ends.size() && ball_ends[ib].first <= lo) {
                C -= ball_ends[ib].second / std::pow(ball_ends[ib].first, N_);
                A += ball_ends[ib].second;
                ++ib;
            }
            if (is == starts.size() && ie == ends.size()) B = 0.0;  // clear round-off
            if (ib == ball_ends.size()) C = 0.0;
            segments_.push_back({lo, cuts[k + 1], A, B, C});
        }
    }

    struct Ramp {
        double a, b, m;
    };
    struct Ball {
        double r, m;
    };

    int N_;
    bool has_density_ = false;
    std::vector<std::pair<double, double>> jumps_;
    std::vector<Ramp> ramps_;
    std::vector<Ball> balls_;
    std::vector<Segment> segments_;
};

/// W^R_{alpha,p}[mu](x) = int_0^R (mu(B_t(x)) / t^{N - alpha p})^{1/(p-1)} dt/t.
/// Constant-mass segments are integrated in closed form, so purely atomic
/// measures are exact; density segments use Gauss-Legendre panels in log t.
/// Returns +inf at points carrying an atom.
inline double wolff(const RadialMass& prof, const PotentialParams& pp) {
    const double k = pp.order_gap();
    const double e = 1.0 / (pp.p - 1.0);
    const double g = pp.gamma();
    const double Rv = pp.R.value();
    double total = 0.0;
    for (const auto& s : prof.segments()) {
        if (s.lo >= Rv) break;
        const double hi = std::min(s.hi, Rv);
        if (s.B == 0.0 && s.C == 0.0) {
            if (s.A <= 0.0) continue;
            if (s.lo == 0.0) return std::numeric_limits<double>::infinity();
            const double upper = std::isinf(hi) ? 0.0 : std::pow(hi, -g);
            total += std::pow(s.A, e) * (std::pow(s.lo, -g) - upper) / g;
            continue;
        }
        if (s.lo == 0.0 && s.A == 0.0 && s.B == 0.0) {
            // mass C t^N near the centre: int_0^hi C^e t^{alpha p e - 1} dt
            const double ape = pp.alpha * pp.p * e;
            total += std::pow(s.C, e) * std::pow(hi, ape) / ape;
            continue;
        }
        if (s.lo == 0.0) return std::numeric_limits<double>::infinity();
        total += detail::log_panel_integral(
            [&](double t) {
                const double m = std::max(0.0, s.A + s.B * t + s.C * std::pow(t, pp.N));
                return std::pow(m / std::pow(t, k), e) / t;
            },
            s.lo, hi);
    }
    return total;
}

inline double wolff(const Measure& mu, const PotentialParams& pp, std::span<const double> x) {
    return wolff(RadialMass(mu, x, pp.N), pp);
}

/// sup_{0<t<R} mu(B_t(x)) / (t^{N - order} h_eta(t)).
///
/// The weight t^{-(N-order)} / h_eta(t) is strictly decreasing on (0, inf):
/// on (0, 1/2) its log-derivative is -(k(-ln t) + eta) / (t(-ln t)) < 0 and on
/// [1/2, inf) it is -k/t. So on a segment where the mass is constant the sup is
/// the right limit at the segment start, and purely atomic measures only need
/// the atom distances as candidates. Segments with growing mass (density ramps)
/// are searched by golden section in log t between their end values.
inline double maximal_sup(const RadialMass& prof, double order, int N, Radius R, double eta) {
    const double k = N - order;
    const double Rv = R.value();
    auto ratio = [&](const RadialMass::Segment& s, double t) {
        const double m = std::max(0.0, s.A + s.B * t + s.C * std::pow(t, N));
        return m / (std::pow(t, k) * h_eta(t, eta));
    };
    double best = 0.0;
    for (const auto& s : prof.segments()) {
        if (s.lo >= Rv) break;
        const double hi = std::min(s.hi, Rv);
        if (s.B == 0.0 && s.C == 0.0) {
            if (s.A <= 0.0) continue;
            if (s.lo == 0.0) return std::numeric_limits<double>::infinity();
            best = std::max(best, s.A / (std::pow(s.lo, k) * h_eta(s.lo, eta)));
            continue;
        }
        const double lo = s.lo > 0.0 ? s.lo : hi * 1e-12;
        const double top = std::isinf(hi) ? lo * 1e6 : hi;
        best = std::max({best, ratio(s, lo), ratio(s, top)});
        double a = std::log(lo), b = std::log(top);
        const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
        double c = b - phi * (b - a), d = a + phi * (b - a);
        double fc = ratio(s, std::exp(c)), fd = ratio(s, std::exp(d));
        for (int it = 0; it < 60; ++it) {
            if (fc > fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - phi * (b - a);
                fc = ratio(s, std::exp(c));
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + phi * (b - a);
                fd = ratio(s, std::exp(d));
            }
        }
        best = std::max({best, fc, fd});
    }
    return best;
}

/// M_{alpha p, R}[mu](x) = sup_{0<t<R} mu(B_t(x)) / t^{N - alpha p}.
inline double frac_maximal(const Measure& mu, const PotentialParams& pp, std::span<const double> x) {
    return maximal_sup(RadialMass(mu, x, pp.N), pp.alpha * pp.p, pp.N, pp.R, 0.0);
}

/// M^eta_{alpha p, R}[mu](x), the h_eta-weighted variant.
inline double eta_maximal(const Measure& mu, const PotentialParams& pp, std::span<const double> x) {
    return maximal_sup(RadialMass(mu, x, pp.N), pp.alpha * pp.p, pp.N, pp.R, pp.eta);
}

enum class PotentialKind { Wolff, FracMaximal, EtaMaximal };

/// Evaluates a potential at every cell centre of `grid`.
inline ScalarField potential_field(const Measure& mu, const PotentialParams& pp, const Domain& grid,
                                   PotentialKind kind) {
    require(grid.dim() == pp.N, "grid dimension equals N");
    ScalarField out(grid);
    const int n = grid.dim();
    parallel_for(grid.cell_count(), [&](std::size_t c) {
        double x[16];
        grid.cell_center(c, x);
        const RadialMass prof(mu, std::span<const double>(x, n), n);
        switch (kind) {
            case PotentialKind::Wolff: out[c] = wolff(prof, pp); break;
            case PotentialKind::FracMaximal: out[c] = maximal_sup(prof, pp.alpha * pp.p, n, pp.R, 0.0); break;
            case PotentialKind::EtaMaximal: out[c] = maximal_sup(prof, pp.alpha * pp.p, n, pp.R, pp.eta); break;
        }
    });
    return out;
}

inline ScalarField wolff_field(const Measure& mu, const PotentialParams& pp, const Domain& grid) {
    return potential_field(mu, pp, grid, PotentialKind::Wolff);
}

// ---------------------------------------------------------------------------
// Bessel kernel

/// G_alpha(r) = (4 pi)^{-N/2} Gamma(alpha/2)^{-1} int_0^inf e^{-t - r^2/(4t)} t^{(alpha-N)/2} dt/t,
/// the kernel of (1 - Laplacian)^{-alpha/2} in R^N. Evaluated by the trapezoid
/// rule in s = ln t (doubly-exponentially convergent), refined until two
/// successive step sizes agree to 1e-15.
inline double bessel_kernel(double r, double alpha, int N) {
    require(alpha > 0.0, "alpha > 0");
    if (r <= 0.0) {
        return alpha < N ? std::numeric_limits<double>::infinity()
                         : 0.0;  // only alpha < N is used; keep r = 0 defined
    }
    const double a = 0.5 * (alpha - N);
    const double r2q = 0.25 * r * r;
    auto expo = [&](double s) { return -std::exp(s) - r2q * std::exp(-s) + a * s; };
    // peak: e^s - r2q e^{-s} = a  =>  e^s = (a + sqrt(a^2 + 4 r2q)) / 2
    const double root = std::sqrt(a * a + 4.0 * r2q);
    const double es = a >= 0.0 ? 0.5 * (a + root) : 2.0 * r2q / (root - a);
    const double s0 = std::log(es);
    const double top = expo(s0);
    double lo = s0, hi = s0, step = 0.25;
    while (expo(lo) > top - 60.0) lo -= step, step *= 1.5;
    step = 0.25;
    while (expo(hi) > top - 60.0) hi += step, step *= 1.5;

    auto trap = [&](int n) {
        const double h = (hi - lo) / n;
        double acc = 0.5 * (std::exp(expo(lo) - top) + std::exp(expo(hi) - top));
        for (int i = 1; i < n; ++i) acc += std::exp(expo(lo + i * h) - top);
        return acc * h;
    };
    int n = 64;
    double prev = trap(n);
    for (int it = 0; it < 12; ++it) {
        n *= 2;
        const double cur = trap(n);
        if (std::abs(cur - prev) <= 1e-15 * std::abs(cur)) {
            prev = cur;
            break;
        }
        prev = cur;
    }
    const double pref = std::pow(4.0 * std::numbers::pi, -0.5 * N) / std::tgamma(0.5 * alpha);
    return pref * prev * std::exp(top);
}

/// Radial lookup table for G_alpha: 4096 log-spaced radii, cubic (Catmull-Rom)
/// interpolation of ln G in ln r. Immutable once built.
class BesselTable {
public:
    static constexpr int kNodes = 4096;

    BesselTable(double alpha, int N, double r_min, double r_max)
        : alpha_(alpha), N_(N), lmin_(std::log(r_min)), lmax_(std::log(r_max)) {
        require(alpha > 0.0 && alpha < N, "0 < alpha < N");
        require(r_max > r_min && r_min > 0.0, "table radii ordered");
        step_ = (lmax_ - lmin_) / (kNodes - 1);
        logg_.resize(kNodes);
        parallel_for(kNodes, [&](std::size_t i) {
            logg_[i] = std::log(bessel_kernel(std::exp(lmin_ + i * step_), alpha_, N_));
        });
    }

    double alpha() const { return alpha_; }
    int dim() const { return N_; }
    double r_min() const { return std::exp(lmin_); }
    double r_max() const { return std::exp(lmax_); }

    double operator()(double r) const {
        if (r <= 0.0) return std::numeric_limits<double>::infinity();
        const double u = (std::log(r) - lmin_) / step_;
        if (u < 1.0 || u > kNodes - 2.0) return bessel_kernel(r, alpha_, N_);
        const int i = static_cast<int>(u);
        const double t = u - i;
        const double p0 = logg_[i - 1], p1 = logg_[i], p2 = logg_[i + 1], p3 = logg_[i + 2];
        const double v = p1 + 0.5 * t *
                                  (p2 - p0 + t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + t * (3.0 * (p1 - p2) + p3 - p0)));
        return std::exp(v);
    }

    /// Integral of G over the ball with the same volume as a cell of volume V,
    /// used for the self-interaction of a density cell.
    double self_cell_integral(double V) const {
        const double rho = std::pow(V / unit_ball_volume(N_), 1.0 / N_);
        const double surface = N_ * unit_ball_volume(N_);
        // G r^{N-1} ~ r^{alpha-1} near 0; the part below rho*1e-12 is negligible
        const double body = detail::log_panel_integral(
            [&](double r) { return bessel_kernel(r, alpha_, N_) * std::pow(r, N_ - 1); }, rho * 1e-12, rho);
        return surface * body;
    }

private:
    double alpha_;
    int N_;
    double lmin_, lmax_, step_;
    std::vector<double> logg_;
};

/// Shared immutable tables keyed by (alpha, N, r_min, r_max).
inline std::shared_ptr<const BesselTable> bessel_table(double alpha, int N, double r_min, double r_max) {
    static std::mutex mu;
    static std::map<std::tuple<double, int, double, double>, std::shared_ptr<const BesselTable>> cache;
    const std::lock_guard lock(mu);
    auto key = std::make_tuple(alpha, N, r_min, r_max);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto table = std::make_shared<const BesselTable>(alpha, N, r_min, r_max);
    cache.emplace(key, table);
    return table;
}

/// Table covering every pairwise distance on `grid` (and atoms inside it).
inline std::shared_ptr<const BesselTable> bessel_table_for(double alpha, const Domain& grid) {
    const double r_max = 2.0 * grid.diameter();
    const double r_min = 1e-3 * grid.cell_width();
    return bessel_table(alpha, grid.dim(), r_min, r_max);
}

/// G_alpha[mu] at the cell centres of `grid`.
inline ScalarField bessel_potential(const Measure& mu, double alpha, const Domain& grid) {
    const int n = grid.dim();
    require(alpha > 0.0 && alpha < n, "0 < alpha < N");
    ScalarField out(grid);
    if (mu.empty()) return out;
    const auto table = bessel_table_for(alpha, grid);

    struct Source {
        Point x;
        double m;
        std::size_t cell;  // cell of the density source, or npos for atoms
    };
    std::vector<Source> sources;
    for (const auto& a : mu.atoms) {
        if (a.w > 0.0) sources.push_back({a.x, a.w, static_cast<std::size_t>(-1)});
    }
    double self = 0.0;
    const ScalarField* dens = mu.density ? &*mu.density : nullptr;
    const bool same_grid = dens && dens->domain() == grid;
    if (dens) {
        const Domain& dg = dens->domain();
        self = table->self_cell_integral(dg.cell_volume());
        for (std::size_t j = 0; j < dens->size(); ++j) {
            if ((*dens)[j] > 0.0) sources.push_back({dg.cell_center(j), (*dens)[j] * dg.cell_volume(), j});
        }
    }
    parallel_for(grid.cell_count(), [&](std::size_t c) {
        double x[16];
        grid.cell_center(c, x);
        double acc = 0.0;
        for (const auto& s : sources) {
            if (same_grid && s.cell == c) {
                acc += (*dens)[c] * self;
                continue;
            }
            acc += s.m * (*table)(std::sqrt(squared_distance(x, s.x.data(), n)));
        }
        out[c] = acc;
    });
    return out;
}

/// Smallest c with c^{-1} (chi_{B_R} |.|^{alpha-N}) * mu <= G_alpha[mu]
/// <= c (chi_{B_{R/2}} |.|^{alpha-N}) * mu + c e^{-|.|/2} * mu at the cell
/// centres (atomic part of mu). Points where both sides vanish are skipped.
inline double bessel_sandwich_constant(const Measure& mu, double alpha, const Domain& grid, double R) {
    const int n = grid.dim();
    const ScalarField G = bessel_potential(Measure{mu.atoms, std::nullopt}, alpha, grid);
    double c = 1.0;
    Point x(n);
    for (std::size_t i = 0; i < grid.cell_count(); ++i) {
        grid.cell_center(i, x.data());
        double riesz_R = 0.0, riesz_half = 0.0, expo = 0.0;
        for (const auto& a : mu.atoms) {
            const double r = std::sqrt(squared_distance(x.data(), a.x.data(), n));
            if (r <= 0.0) continue;
            const double k = std::pow(r, alpha - n);
            if (r < R) riesz_R += a.w * k;
            if (r < 0.5 * R) riesz_half += a.w * k;
            expo += a.w * std::exp(-0.5 * r);
        }
        if (riesz_R > 0.0 && G[i] > 0.0) c = std::max(c, riesz_R / G[i]);
        if (G[i] > 0.0) c = std::max(c, G[i] / (riesz_half + expo));
    }
    return c;
}

}  // namespace wolffkit
