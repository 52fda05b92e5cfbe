#pragma once

#include <wolffkit/common.hpp>

#include <functional>
#include <span>

namespace wolffkit {

/// The absorption nonlinearity g(x, u), odd and nondecreasing in u, with its
/// primitive G(x, u) = int_0^u g(x, s) ds.
struct AbsorptionSpec {
    enum class Kind { None, Power, Exponential, Custom };
    using Fn = std::function<double(std::span<const double>, double)>;

    Kind kind = Kind::None;
    double q = 1.0;       // power: |x|^{-beta} |u|^{q-1} u
    double beta = 0.0;
    double tau = 1.0;     // exponential: sign(u) (e^{tau |u|^lambda} - 1)
    double lambda = 1.0;
    Fn custom;            // custom: g(x, u); G and g' are computed numerically

    static AbsorptionSpec none() { return {}; }

    static AbsorptionSpec power(double q, double beta = 0.0) {
        require(q > 0.0, "q > 0");
        require(beta >= 0.0, "0 <= beta");
        AbsorptionSpec a;
        a.kind = Kind::Power;
        a.q = q;
        a.beta = beta;
        return a;
    }

    static AbsorptionSpec exponential(double tau, double lambda) {
        require(tau > 0.0, "tau > 0");
        require(lambda >= 1.0, "lambda >= 1");
        AbsorptionSpec a;
        a.kind = Kind::Exponential;
        a.tau = tau;
        a.lambda = lambda;
        return a;
    }

    static AbsorptionSpec from_function(Fn g) {
        require(static_cast<bool>(g), "custom absorption needs a function");
        AbsorptionSpec a;
        a.kind = Kind::Custom;
        a.custom = std::move(g);
        return a;
    }

    /// Checks the parameter ranges that depend on the problem: q > p - 1, beta < N.
    void validate(double p, int N) const {
        if (kind == Kind::Power) {
            require(q > p - 1.0, "q > p-1");
            require(beta < N, "0 <= beta < N");
        }
    }

    bool is_none() const { return kind == Kind::None; }

    double weight(std::span<const double> x) const {
        if (beta == 0.0) return 1.0;
        double r2 = 0.0;
        for (double v : x) r2 += v * v;
        return std::pow(r2, -0.5 * beta);
    }

    double g(std::span<const double> x, double u) const {
        switch (kind) {
            case Kind::None: return 0.0;
            case Kind::Power: return weight(x) * std::copysign(std::pow(std::abs(u), q), u);
            case Kind::Exponential: return std::copysign(std::expm1(tau * std::pow(std::abs(u), lambda)), u);
            case Kind::Custom: return custom(x, u);
        }
        return 0.0;
    }

    /// dg/du. For q < 1 the power branch is singular at 0; |u| is floored at 1e-8.
    double dg(std::span<const double> x, double u) const {
        const double a = std::abs(u);
        switch (kind) {
            case Kind::None: return 0.0;
            case Kind::Power: {
                if (q >= 1.0 && a == 0.0) return q == 1.0 ? weight(x) : 0.0;
                return weight(x) * q * std::pow(std::max(a, 1e-8), q - 1.0);
            }
            case Kind::Exponential: {
                const double ap = std::pow(a, lambda);
                if (lambda == 1.0) return tau * std::exp(tau * a);
                return a == 0.0 ? 0.0 : tau * lambda * ap / a * std::exp(tau * ap);
            }
            case Kind::Custom: {
                const double h = 1e-6 * std::max(1.0, a);
                return (custom(x, u + h) - custom(x, u - h)) / (2.0 * h);
            }
        }
        return 0.0;
    }

    double G(std::span<const double> x, double u) const {
        const double a = std::abs(u);
        switch (kind) {
            case Kind::None: return 0.0;
            case Kind::Power: return weight(x) * std::pow(a, q + 1.0) / (q + 1.0);
            case Kind::Exponential: {
                if (lambda == 1.0) return std::expm1(tau * a) / tau - a;
                double acc = 0.0;
                for (int k = 0; k < 4; ++k) {
                    acc += GaussLegendre16::integrate(
                        [&](double s) { return std::expm1(tau * std::pow(s, lambda)); }, a * k / 4.0,
                        a * (k + 1) / 4.0);
                }
                return acc;
            }
            case Kind::Custom: {
                double acc = 0.0;
                for (int k = 0; k < 4; ++k) {
                    acc += GaussLegendre16::integrate([&](double s) { return custom(x, s); }, a * k / 4.0,
                                                      a * (k + 1) / 4.0);
                }
                return acc;  // g odd => G even
            }
        }
        return 0.0;
    }

    /// x-independent profile s -> g(e_1, s) used by the integral tests on [1, inf).
    double profile(double s) const {
        const double x[16] = {1.0};
        return g(std::span<const double>(x, 1), s);
    }
};

/// Spot check of oddness and monotonicity of u -> g(x, u) on [-umax, umax].
inline bool absorption_is_odd_monotone(const AbsorptionSpec& a, std::span<const double> x, double umax = 10.0,
                                       int samples = 201) {
    double prev = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i) {
        const double u = -umax + 2.0 * umax * i / (samples - 1);
        const double v = a.g(x, u);
        const double w = a.g(x, -u);
        if (std::abs(v + w) > 1e-12 * std::max(1.0, std::abs(v))) return false;
        if (v < prev) return false;
        prev = v;
    }
    return true;
}

}  // namespace wolffkit
