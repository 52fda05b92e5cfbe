#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace wolffkit {

/// Raised when an operation is called outside its admissible parameter range.
/// The message names the violated precondition (e.g. "alpha*p >= N").
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised on malformed input files.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw ParameterError(what);
}

using Point = std::vector<double>;

/// A nonnegative quantity that may legitimately diverge. Divergence is carried
/// as a flag so it never leaks into arithmetic as a float sentinel.
struct ExtReal {
    double value = 0.0;
    bool infinite = false;

    static ExtReal finite(double v) { return {v, false}; }
    static ExtReal inf() { return {0.0, true}; }

    bool is_finite() const { return !infinite; }
    /// For plotting/logging only.
    double as_double() const { return infinite ? std::numeric_limits<double>::infinity() : value; }
};

/// Truncation radius of potentials; R = infinity is a distinct value because
/// several closed forms change shape there.
class Radius {
public:
    Radius() = default;
    static Radius finite(double r) {
        require(r > 0.0 && std::isfinite(r), "R > 0");
        Radius out;
        out.value_ = r;
        return out;
    }
    static Radius infinity() {
        Radius out;
        out.infinite_ = true;
        return out;
    }

    bool is_infinite() const { return infinite_; }
    double value() const { return infinite_ ? std::numeric_limits<double>::infinity() : value_; }
    bool contains(double t) const { return infinite_ || t < value_; }

private:
    double value_ = 1.0;
    bool infinite_ = false;
};

/// Volume of the unit ball in R^n.
inline double unit_ball_volume(int n) {
    return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

inline double squared_distance(const double* a, const double* b, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

/// Number of worker threads; bounded by WOLFFKIT_THREADS when set.
inline unsigned thread_count() {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("WOLFFKIT_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) hw = std::min<unsigned>(hw, static_cast<unsigned>(v));
    }
    return hw;
}

/// Static-partition parallel map over [0, n). Each index is written by exactly
/// one worker, so results do not depend on the thread count.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(thread_count(), n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([begin, end, &fn] {
            for (std::size_t i = begin; i < end; ++i) fn(i);
        });
    }
}

/// 16-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendre16 {
    static constexpr double nodes[8] = {
        0.0950125098376374401853193, 0.2816035507792589132304605, 0.4580167776572273863424194,
        0.6178762444026437484466718, 0.7554044083550030338951012, 0.8656312023878317438804679,
        0.9445750230732325760779884, 0.9894009349916499325961542};
    static constexpr double weights[8] = {
        0.1894506104550684962853967, 0.1826034150449235888667637, 0.1691565193950025381893121,
        0.1495959888165767320815017, 0.1246289712555338720524763, 0.0951585116824927848099251,
        0.0622535239386478928628438, 0.0271524594117540948517806};

    template <class Fn>
    static double integrate(Fn&& f, double a, double b) {
        const double mid = 0.5 * (a + b);
        const double half = 0.5 * (b - a);
        double acc = 0.0;
        for (int i = 0; i < 8; ++i) {
            acc += weights[i] * (f(mid - half * nodes[i]) + f(mid + half * nodes[i]));
        }
        return acc * half;
    }
};

}  // namespace wolffkit
