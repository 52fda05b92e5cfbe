#pragma once

#include <wolffkit/measure.hpp>

#include <numeric>
#include <optional>

namespace wolffkit {

/// Exponents of L^{s,q}. `q_infinite` selects the sup branch.
struct LorentzParams {
    double s = 2.0;
    double q = 2.0;
    bool q_infinite = false;

    static LorentzParams make(double s, double q) {
        require(s > 0.0 && std::isfinite(s), "s > 0");
        require(q > 0.0 && std::isfinite(q), "q > 0");
        return {s, q, false};
    }
    static LorentzParams weak(double s) {
        require(s > 0.0 && std::isfinite(s), "s > 0");
        return {s, 0.0, true};
    }
    /// Outside 1 <= s < inf, 1 <= q <= inf the functional is only a quasi-norm.
    bool quasi_norm() const { return s < 1.0 || (!q_infinite && q < 1.0); }
};

/// Piecewise-constant decreasing rearrangement f*: value[i] on
/// [breaks[i], breaks[i+1]). Only the strictly positive part is stored.
struct RearrangedProfile {
    std::vector<double> values;  ///< strictly decreasing, > 0
    std::vector<double> lengths;

    bool empty() const { return values.empty(); }
    std::size_t steps() const { return values.size(); }
    double support() const { return std::accumulate(lengths.begin(), lengths.end(), 0.0); }
    /// integral of (f*)^r.
    double power_integral(double r) const {
        double s = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) s += std::pow(values[i], r) * lengths[i];
        return s;
    }
};

/// Decreasing rearrangement of |f| on the grid: exact sort, stable by cell index,
/// equal values merged into one step.
inline RearrangedProfile rearrange(std::span<const double> values, double cell_volume) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(values[a]) > std::abs(values[b]); });
    RearrangedProfile prof;
    for (std::size_t idx : order) {
        const double v = std::abs(values[idx]);
        if (v == 0.0) break;
        if (!prof.values.empty() && prof.values.back() == v) {
            prof.lengths.back() += cell_volume;
        } else {
            prof.values.push_back(v);
            prof.lengths.push_back(cell_volume);
        }
    }
    return prof;
}

inline RearrangedProfile rearrange(const ScalarField& f) { return rearrange(f.values(), f.cell_volume()); }

/// f**(t) = (1/t) * integral_0^t f*.
inline double double_star(const RearrangedProfile& prof, double t) {
    require(t > 0.0, "t > 0");
    double start = 0.0, acc = 0.0;
    for (std::size_t i = 0; i < prof.steps(); ++i) {
        const double end = start + prof.lengths[i];
        if (t <= end) return (acc + prof.values[i] * (t - start)) / t;
        acc += prof.values[i] * prof.lengths[i];
        start = end;
    }
    return acc / t;
}

namespace detail {

/// integral_a^b t^e dt for 0 < a < b.
inline double power_integral(double e, double a, double b) {
    if (std::abs(e + 1.0) < 1e-14) return std::log(b / a);
    return (std::pow(b, e + 1.0) - std::pow(a, e + 1.0)) / (e + 1.0);
}

/// integral over [a, b] (0 < a < b) of a smooth function of t, done in log t
/// with Gauss-Legendre panels of width <= 1 in log t.
template <class Fn>
double log_panel_integral(Fn&& f, double a, double b) {
    const double la = std::log(a), lb = std::log(b);
    const double width = lb - la;
    if (width < 0.05) {
        // three-point rule is exact to O(width^6) on these short panels
        static constexpr double x = 0.7745966692414834;
        const double mid = 0.5 * (la + lb), half = 0.5 * width;
        auto g = [&](double u) { const double t = std::exp(u); return f(t) * t; };
        return half * (5.0 / 9.0 * (g(mid - half * x) + g(mid + half * x)) + 8.0 / 9.0 * g(mid));
    }
    const int panels = std::max(1, static_cast<int>(std::ceil(width)));
    const double step = width / panels;
    double acc = 0.0;
    for (int k = 0; k < panels; ++k) {
        acc += GaussLegendre16::integrate(
            [&](double u) {
                const double t = std::exp(u);
                return f(t) * t;
            },
            la + k * step, la + (k + 1) * step);
    }
    return acc;
}

}  // namespace detail

/// ||f||_{L^{s,q}} computed from f**: closed form on the first step and on the
/// tail, Gauss-Legendre in log t on interior steps (where f** = v + c/t).
inline ExtReal lorentz_norm(const RearrangedProfile& prof, const LorentzParams& lp) {
    if (prof.empty()) return ExtReal::finite(0.0);
    if (std::isinf(prof.values[0])) return ExtReal::inf();
    const double s = lp.s;
    const std::size_t n = prof.steps();

    if (lp.q_infinite) {
        // sup_t t^{1/s} f**(t): increasing on the first step, v t^{1/s} + c t^{1/s-1} inside
        double best = prof.values[0] * std::pow(prof.lengths[0], 1.0 / s);
        double start = prof.lengths[0], acc = prof.values[0] * prof.lengths[0];
        for (std::size_t i = 1; i < n; ++i) {
            const double v = prof.values[i];
            const double c = acc - v * start;
            const double end = start + prof.lengths[i];
            auto phi = [&](double t) { return v * std::pow(t, 1.0 / s) + c * std::pow(t, 1.0 / s - 1.0); };
            best = std::max({best, phi(start), phi(end)});
            if (s > 1.0) {
                const double tc = c * (s - 1.0) / v;
                if (tc > start && tc < end) best = std::max(best, phi(tc));
            }
            acc += v * prof.lengths[i];
            start = end;
        }
        // tail: acc * t^{1/s - 1}
        if (s < 1.0) return ExtReal::inf();
        best = std::max(best, acc * std::pow(start, 1.0 / s - 1.0));
        return ExtReal::finite(best);
    }

    const double q = lp.q;
    if (s <= 1.0) return ExtReal::inf();  // tail integral of t^{q/s-1-q} diverges
    double total = std::pow(prof.values[0], q) * std::pow(prof.lengths[0], q / s) * (s / q);
    double start = prof.lengths[0], acc = prof.values[0] * prof.lengths[0];
    for (std::size_t i = 1; i < n; ++i) {
        const double v = prof.values[i];
        const double c = acc - v * start;
        const double end = start + prof.lengths[i];
        total += detail::log_panel_integral(
            [&](double t) { return std::pow(t, q / s - 1.0) * std::pow(v + c / t, q); }, start, end);
        acc += v * prof.lengths[i];
        start = end;
    }
    total += std::pow(acc, q) * std::pow(start, q / s - q) / (q - q / s);
    if (!std::isfinite(total)) return ExtReal::inf();
    return ExtReal::finite(std::pow(total, 1.0 / q));
}

inline ExtReal lorentz_norm(const ScalarField& f, const LorentzParams& lp) {
    return lorentz_norm(rearrange(f), lp);
}

/// The two-sided Hardy bound around the L^{s,q} norm:
/// ||t^{1/s} f*||_{L^q(dt/t)} <= ||f||_{s,q} <= s/(s-1) ||t^{1/s} f*||_{L^q(dt/t)}.
/// The upper bound is Hardy's inequality and needs q >= 1.
struct HardySandwich {
    std::optional<double> lower;
    ExtReal norm;
    std::optional<double> upper;
    bool skipped = false;  ///< s <= 1: the s/(s-1) factor is undefined

    bool holds(double rel_tol = 1e-12) const {
        if (skipped || norm.infinite) return true;
        return *lower <= norm.value * (1.0 + rel_tol) + 1e-300 && norm.value <= *upper * (1.0 + rel_tol) + 1e-300;
    }
};

inline HardySandwich check_L2_sandwich(const ScalarField& f, const LorentzParams& lp) {
    const RearrangedProfile prof = rearrange(f);
    HardySandwich out;
    out.norm = lorentz_norm(prof, lp);
    if (lp.s <= 1.0) {
        out.skipped = true;
        return out;
    }
    double base = 0.0;
    double start = 0.0;
    if (lp.q_infinite) {
        for (std::size_t i = 0; i < prof.steps(); ++i) {
            start += prof.lengths[i];
            base = std::max(base, prof.values[i] * std::pow(start, 1.0 / lp.s));
        }
    } else {
        const double e = lp.q / lp.s;
        for (std::size_t i = 0; i < prof.steps(); ++i) {
            const double end = start + prof.lengths[i];
            base += std::pow(prof.values[i], lp.q) * (std::pow(end, e) - std::pow(start, e)) / e;
            start = end;
        }
        base = std::pow(base, 1.0 / lp.q);
    }
    out.lower = base;
    out.upper = lp.s / (lp.s - 1.0) * base;
    return out;
}

/// Norm and gradient of f -> ||f||_{s,q} for a nonnegative grid function
/// (q < inf, s > 1). At ties the sort order picks one element of the
/// subdifferential.
struct LorentzGradient {
    double norm = 0.0;
    std::vector<double> gradient;
};

inline LorentzGradient lorentz_norm_gradient(std::span<const double> f, double cell_volume, const LorentzParams& lp) {
    require(!lp.q_infinite && lp.s > 1.0, "gradient needs s > 1 and q < inf");
    const double s = lp.s, q = lp.q, V = cell_volume;
    const std::size_t n = f.size();
    LorentzGradient out;
    out.gradient.assign(n, 0.0);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return f[a] > f[b]; });
    std::size_t npos = 0;
    while (npos < n && f[order[npos]] > 0.0) ++npos;
    if (npos == 0) {
        // At f = 0 any direction with unit norm works; use the indicator of the grid.
        for (auto& g : out.gradient) g = 1.0;
        return out;
    }

    // F = int t^{q/s-1} (f**)^q dt; A[i] = int_{seg i} t^{q/s-1} (f**)^{q-1} / t dt;
    // B[i] = int_{seg i} t^{q/s-1} (f**)^{q-1} (t - L_{i-1}) / t dt.
    std::vector<double> A(npos, 0.0), B(npos, 0.0);
    double F = 0.0;
    const double e = q / s;
    {
        const double v = f[order[0]];
        F += std::pow(v, q) * std::pow(V, e) / e;
        B[0] = std::pow(v, q - 1.0) * std::pow(V, e) / e;
    }
    double acc = f[order[0]] * V;
    for (std::size_t i = 1; i < npos; ++i) {
        const double v = f[order[i]];
        const double a = i * V, b = a + V;
        const double c = acc - v * a;
        F += detail::log_panel_integral([&](double t) { return std::pow(t, e - 1.0) * std::pow(v + c / t, q); }, a, b);
        A[i] = detail::log_panel_integral(
            [&](double t) { return std::pow(t, e - 2.0) * std::pow(v + c / t, q - 1.0); }, a, b);
        B[i] = detail::log_panel_integral(
            [&](double t) { return std::pow(t, e - 2.0) * std::pow(v + c / t, q - 1.0) * (t - a); }, a, b);
        acc += v * V;
    }
    // Past the positive part f** = S/t in closed form.
    const double S = acc, Lp = npos * V;
    F += std::pow(S, q) * std::pow(Lp, e - q) / (q - e);
    out.norm = std::pow(F, 1.0 / q);
    const double scale = std::pow(F, 1.0 / q - 1.0);  // (1/q) F^{1/q-1} * q

    // suffix sums of A give int_{L_j}^inf w (f**)^{q-1} / t
    std::vector<double> tail(npos + 1, 0.0);
    tail[npos] = std::pow(S, q - 1.0) * std::pow(Lp, e - q) / (q - e);
    for (std::size_t i = npos; i-- > 1;) tail[i] = tail[i + 1] + A[i];
    for (std::size_t j = 0; j < npos; ++j) {
        out.gradient[order[j]] = scale * (B[j] + V * tail[j + 1]);
    }
    // Zero cells: raising one opens a segment at the end of the positive part.
    const double zero_grad = scale * V * tail[npos];
    for (std::size_t j = npos; j < n; ++j) out.gradient[order[j]] = zero_grad;
    return out;
}

}  // namespace wolffkit
