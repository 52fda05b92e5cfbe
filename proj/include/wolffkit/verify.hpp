#pragma once

#include <wolffkit/lorentz.hpp>
#include <wolffkit/potential.hpp>
#include <wolffkit/report.hpp>

#include <random>
#include <sstream>

namespace wolffkit {

/// Least-squares line y = a + b x with coefficient of determination.
struct LineFit {
    double slope = std::numeric_limits<double>::quiet_NaN();
    double intercept = std::numeric_limits<double>::quiet_NaN();
    double r2 = std::numeric_limits<double>::quiet_NaN();
    std::size_t points = 0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    LineFit out;
    out.points = x.size();
    if (x.size() < 2) return out;
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) return out;
    out.slope = sxy / sxx;
    out.intercept = my - out.slope * mx;
    out.r2 = syy == 0.0 ? 1.0 : sxy * sxy / (sxx * syy);
    return out;
}

/// Diameter of the support (atoms of positive weight and positive density cells).
inline double support_diameter(const Measure& mu) {
    std::vector<Point> pts;
    for (const auto& a : mu.atoms) {
        if (a.w > 0.0) pts.push_back(a.x);
    }
    if (mu.density) {
        for (std::size_t i = 0; i < mu.density->size(); ++i) {
            if ((*mu.density)[i] > 0.0) pts.push_back(mu.density->domain().cell_center(i));
        }
    }
    double d2 = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            d2 = std::max(d2, squared_distance(pts[i].data(), pts[j].data(), static_cast<int>(pts[i].size())));
        }
    }
    return std::sqrt(d2);
}

inline std::string measure_fingerprint(const Measure& mu) {
    std::ostringstream os;
    os.precision(17);
    os << "atoms=" << mu.atoms.size() << " mass=" << mu.total_mass();
    if (mu.density) os << " density-cells=" << mu.density->size();
    return os.str();
}

/// K = ((p-1-eta)/(4(p-1)))^{(p-1)/(p-1-eta)} alpha p ln 2.
inline double levelset_rate(const PotentialParams& pp) {
    pp.require_eta_admissible();
    const double e = (pp.p - 1.0) / (pp.p - 1.0 - pp.eta);
    return std::pow((pp.p - 1.0 - pp.eta) / (4.0 * (pp.p - 1.0)), e) * pp.alpha * pp.p * std::numbers::ln2;
}

/// Counts |{W > 3 lambda, M^{1/(p-1)} <= eps lambda}| (LHS) and |{W > lambda}|
/// (RHS) on the grid for every (lambda, eps), fits the smallest c0 with
/// LHS <= c0 exp(-K eps^{-(p-1)/(p-1-eta)}) RHS, and regresses
/// log(LHS/RHS) on eps^{-(p-1)/(p-1-eta)} over pairs where both sets are nonempty.
inline FitReport verify_levelset_decay(const Measure& mu, const PotentialParams& pp, const std::vector<double>& lambdas,
                                       const std::vector<double>& eps, const Domain& grid) {
    pp.require_eta_admissible();
    FitReport rep;
    rep.experiment = "levelset-decay";
    rep.fingerprints = {measure_fingerprint(mu)};
    rep.columns = {"lambda", "eps", "lhs", "rhs", "bound_factor"};

    const double r = support_diameter(mu);
    const double mass = mu.total_mass();
    if (mass > 0.0) {
        const double lam_min = r > 0.0 ? std::pow(mass, 1.0 / (pp.p - 1.0)) * l_of_rR(r, pp.R, pp)
                                       : std::numeric_limits<double>::infinity();
        rep.constants["lambda_min"] = lam_min;
        for (double lam : lambdas) {
            if (!(lam > lam_min)) {
                rep.notes.push_back("lambda below the admissible threshold (support diameter " + std::to_string(r) +
                                    ")");
                break;
            }
        }
    }

    const ScalarField W = wolff_field(mu, pp, grid);
    const ScalarField M = potential_field(mu, pp, grid, PotentialKind::EtaMaximal);
    const double V = grid.cell_volume();
    const double K = levelset_rate(pp);
    const double power = (pp.p - 1.0) / (pp.p - 1.0 - pp.eta);
    rep.constants["K"] = K;

    double c0 = 0.0;
    std::vector<double> xs, ys;
    std::size_t pairs = 0;
    for (double lam : lambdas) {
        require(lam > 0.0, "lambda > 0");
        for (double e : eps) {
            require(e > 0.0, "eps > 0");
            double lhs = 0.0, rhs = 0.0;
            for (std::size_t i = 0; i < W.size(); ++i) {
                if (W[i] > lam) rhs += V;
                if (W[i] > 3.0 * lam && std::pow(M[i], 1.0 / (pp.p - 1.0)) <= e * lam) lhs += V;
            }
            const double bound = std::exp(-K * std::pow(e, -power));
            rep.rows.push_back({lam, e, lhs, rhs, bound});
            if (rhs == 0.0) continue;  // 0 <= 0
            ++pairs;
            c0 = std::max(c0, lhs / (bound * rhs));
            if (lhs > 0.0) {
                xs.push_back(std::pow(e, -power));
                ys.push_back(std::log(lhs / rhs));
            }
        }
    }
    const LineFit fit = fit_line(xs, ys);
    rep.samples = pairs;
    rep.constants["c0"] = c0;
    rep.constants["decay_slope"] = fit.slope;
    rep.constants["decay_r2"] = fit.r2;
    rep.constants["decay_points"] = static_cast<double>(fit.points);
    if (mass == 0.0) rep.notes.push_back("zero measure: all level sets empty, c0 = 0");
    if (fit.points < 3) rep.notes.push_back("fewer than three pairs with a nonempty left-hand set");
    rep.pass = std::isfinite(c0);
    return rep;
}

/// Random atomic measures: uniform locations in the ball B(0, radius), log-uniform
/// weights in [wmin, wmax].
inline std::vector<Measure> random_atomic_measures(std::size_t count, int N, int min_atoms, int max_atoms,
                                                   double radius, double wmin, double wmax, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> natoms(min_atoms, max_atoms);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> logw(std::log(wmin), std::log(wmax));
    std::vector<Measure> out(count);
    for (auto& mu : out) {
        const int k = natoms(rng);
        for (int a = 0; a < k; ++a) {
            Point x(N);
            double r2;
            do {
                r2 = 0.0;
                for (double& v : x) {
                    v = unit(rng);
                    r2 += v * v;
                }
            } while (r2 >= 1.0);
            for (double& v : x) v *= radius;
            mu.atoms.push_back({std::move(x), std::exp(logw(rng))});
        }
    }
    return out;
}

/// Ratios ||W^R||_{L^{q,s}} / ||M_{alpha p,R}||^{1/(p-1)}_{L^{q/(p-1),s/(p-1)}} over a batch,
/// and the Bessel variant with G_{alpha p}[mu] in place of M.
/// `lq` holds (q, s) as (primary, secondary) exponents.
inline FitReport verify_norm_equivalence(const std::vector<Measure>& measures, const PotentialParams& pp,
                                         const LorentzParams& lq, const Domain& grid, double spread_limit = 50.0) {
    require(pp.p - 1.0 < lq.s, "0 < p-1 < q");
    FitReport rep;
    rep.experiment = "norm-equivalence";
    rep.columns = {"index", "wolff_norm", "maximal_norm", "ratio", "bessel_norm", "bessel_ratio"};
    const double e = 1.0 / (pp.p - 1.0);
    const LorentzParams scaled = lq.q_infinite ? LorentzParams::weak(lq.s * e) : LorentzParams::make(lq.s * e, lq.q * e);
    std::vector<double> ratios, bessel;
    for (std::size_t i = 0; i < measures.size(); ++i) {
        const Measure& mu = measures[i];
        rep.fingerprints.push_back(measure_fingerprint(mu));
        const ExtReal nw = lorentz_norm(wolff_field(mu, pp, grid), lq);
        const ExtReal nm = lorentz_norm(potential_field(mu, pp, grid, PotentialKind::FracMaximal), scaled);
        const ExtReal ng = lorentz_norm(bessel_potential(mu, pp.alpha * pp.p, grid), scaled);
        if (nw.infinite || nm.infinite || ng.infinite) {
            rep.notes.push_back("measure " + std::to_string(i) + ": infinite norm");
            continue;
        }
        const double m = std::pow(nm.value, e), g = std::pow(ng.value, e);
        if (m == 0.0 || g == 0.0) {
            rep.notes.push_back("measure " + std::to_string(i) + ": zero norm");
            continue;
        }
        ratios.push_back(nw.value / m);
        bessel.push_back(nw.value / g);
        rep.rows.push_back({static_cast<double>(i), nw.value, m, nw.value / m, g, nw.value / g});
    }
    summarize_ratios(rep, ratios);
    if (!ratios.empty()) {
        rep.constants["spread"] = rep.ratio_max / rep.ratio_min;
        const auto [bmin, bmax] = std::minmax_element(bessel.begin(), bessel.end());
        rep.constants["bessel_ratio_min"] = *bmin;
        rep.constants["bessel_ratio_max"] = *bmax;
        rep.constants["bessel_spread"] = *bmax / *bmin;
    }
    rep.constants["spread_limit"] = spread_limit;
    rep.notes.push_back("Bessel kernel normalization (4 pi)^{-N/2} / Gamma(alpha/2)");
    rep.pass = !ratios.empty() && rep.ratio_max / rep.ratio_min <= spread_limit;
    return rep;
}

/// ((p-1-eta)/(12(p-1)))^{(p-1)/(p-1-eta)} alpha p ln 2.
inline double exp_integrability_delta0(const PotentialParams& pp) {
    pp.require_eta_admissible();
    const double e = (pp.p - 1.0) / (pp.p - 1.0 - pp.eta);
    return std::pow((pp.p - 1.0 - pp.eta) / (12.0 * (pp.p - 1.0)), e) * pp.alpha * pp.p * std::numbers::ln2;
}

/// Grid averages over B2 = B(center, 2 radius) of
/// exp(delta W^R[mu_B1]^{(p-1)/(p-1-eta)} / M^{1/(p-1-eta)}), M = sup_{B1} M^eta[mu_B1].
inline FitReport verify_exp_integrability(const Measure& mu, const PotentialParams& pp, const BallMask& B1,
                                          std::vector<double> deltas, const Domain& grid, double band = 10.0) {
    const double d0 = exp_integrability_delta0(pp);
    for (double d : deltas) {
        require(d > 0.0, "delta > 0");
        require(d < d0, "delta < delta0");
    }
    std::sort(deltas.begin(), deltas.end());
    FitReport rep;
    rep.experiment = "exp-integrability";
    rep.columns = {"delta", "average", "weighted"};
    rep.constants["delta0"] = d0;

    const int n = grid.dim();
    const double r1 = B1.radius * B1.radius, r2 = 4.0 * B1.radius * B1.radius;
    Measure local;
    for (const auto& a : mu.atoms) {
        if (squared_distance(a.x.data(), B1.center.data(), n) < r1) local.atoms.push_back(a);
    }
    if (mu.density) {
        ScalarField f(mu.density->domain());
        for (std::size_t i = 0; i < f.size(); ++i) {
            const Point c = f.domain().cell_center(i);
            if (squared_distance(c.data(), B1.center.data(), n) < r1) f[i] = (*mu.density)[i];
        }
        local.density = std::move(f);
    }
    rep.fingerprints = {measure_fingerprint(local)};

    std::vector<std::size_t> in1, in2;
    Point x(n);
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
        grid.cell_center(c, x.data());
        const double d2 = squared_distance(x.data(), B1.center.data(), n);
        if (d2 < r1) in1.push_back(c);
        if (d2 < r2) in2.push_back(c);
    }
    require(!in2.empty(), "B2 contains grid cells");
    std::vector<double> mvals(in1.size()), wvals(in2.size());
    parallel_for(in1.size(), [&](std::size_t k) {
        double y[16];
        grid.cell_center(in1[k], y);
        mvals[k] = maximal_sup(RadialMass(local, std::span<const double>(y, n), n), pp.alpha * pp.p, n, pp.R, pp.eta);
    });
    parallel_for(in2.size(), [&](std::size_t k) {
        double y[16];
        grid.cell_center(in2[k], y);
        wvals[k] = wolff(RadialMass(local, std::span<const double>(y, n), n), pp);
    });
    double M = 0.0;
    for (double v : mvals) M = std::max(M, v);
    rep.constants["M"] = M;
    if (!std::isfinite(M)) {
        rep.notes.push_back("M is infinite on the grid");
        rep.pass = false;
        return rep;
    }
    const double a = (pp.p - 1.0) / (pp.p - 1.0 - pp.eta);
    const double scale = M > 0.0 ? std::pow(M, -1.0 / (pp.p - 1.0 - pp.eta)) : 0.0;
    std::vector<double> weighted;
    bool finite = true, increasing = true;
    double prev = 0.0;
    for (double d : deltas) {
        double acc = 0.0;
        for (double w : wvals) acc += std::exp(d * std::pow(w, a) * scale);
        const double avg = acc / static_cast<double>(wvals.size());
        finite &= std::isfinite(avg);
        increasing &= avg >= prev;
        prev = avg;
        weighted.push_back((d0 - d) * avg);
        rep.rows.push_back({d, avg, (d0 - d) * avg});
    }
    rep.samples = wvals.size();
    summarize_ratios(rep, weighted);
    const double spread = weighted.empty() ? 1.0 : rep.ratio_max / rep.ratio_min;
    rep.constants["band"] = spread;
    rep.constants["band_limit"] = band;
    rep.pass = finite && increasing && spread <= band;
    if (!increasing) rep.notes.push_back("averages not increasing in delta");
    return rep;
}

}  // namespace wolffkit
