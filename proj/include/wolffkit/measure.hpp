#pragma once

#include <wolffkit/common.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <utility>

namespace wolffkit {

/// Axis-aligned box [lo, hi].
struct Box {
    Point lo;
    Point hi;

    int dim() const { return static_cast<int>(lo.size()); }

    bool contains(std::span<const double> x) const {
        for (int d = 0; d < dim(); ++d) {
            if (x[d] < lo[d] || x[d] > hi[d]) return false;
        }
        return true;
    }
    bool contains(const Box& other) const {
        for (int d = 0; d < dim(); ++d) {
            if (other.lo[d] < lo[d] || other.hi[d] > hi[d]) return false;
        }
        return true;
    }
    double volume() const {
        double v = 1.0;
        for (int d = 0; d < dim(); ++d) v *= hi[d] - lo[d];
        return v;
    }
    double diameter() const {
        double s = 0.0;
        for (int d = 0; d < dim(); ++d) s += (hi[d] - lo[d]) * (hi[d] - lo[d]);
        return std::sqrt(s);
    }
    /// Distance from x (assumed inside) to the box boundary.
    double distance_to_boundary(std::span<const double> x) const {
        double m = std::numeric_limits<double>::infinity();
        for (int d = 0; d < dim(); ++d) m = std::min({m, x[d] - lo[d], hi[d] - x[d]});
        return m;
    }
};

/// Euclidean ball; also used to mask box grids into ball domains.
struct BallMask {
    Point center;
    double radius = 1.0;
};

/// Box domain with a regular cell-centred grid. Cells are numbered row-major:
/// the last axis varies fastest.
class Domain {
public:
    Domain() = default;
    Domain(Point lo, Point hi, std::vector<int> res)
        : box_{std::move(lo), std::move(hi)}, res_(std::move(res)) {
        const int n = box_.dim();
        require(n >= 2, "N >= 2");
        require(static_cast<int>(box_.hi.size()) == n && static_cast<int>(res_.size()) == n,
                "domain lo/hi/res have matching dimension");
        spacing_.resize(n);
        for (int d = 0; d < n; ++d) {
            require(box_.hi[d] > box_.lo[d], "upper > lower componentwise");
            require(res_[d] >= 2, "resolution >= 2 per axis");
            spacing_[d] = (box_.hi[d] - box_.lo[d]) / res_[d];
        }
        cell_volume_ = 1.0;
        cells_ = 1;
        for (int d = 0; d < n; ++d) {
            cell_volume_ *= spacing_[d];
            cells_ *= static_cast<std::size_t>(res_[d]);
        }
    }

    /// Cube [-half, half]^n with `res` cells per axis.
    static Domain cube(int n, double half, int res) {
        return Domain(Point(n, -half), Point(n, half), std::vector<int>(n, res));
    }

    int dim() const { return box_.dim(); }
    const Box& box() const { return box_; }
    const Point& lo() const { return box_.lo; }
    const Point& hi() const { return box_.hi; }
    const std::vector<int>& res() const { return res_; }
    double spacing(int d) const { return spacing_[d]; }
    std::size_t cell_count() const { return cells_; }
    double cell_volume() const { return cell_volume_; }
    double diameter() const { return box_.diameter(); }
    /// Edge of the cube with the same volume as a cell.
    double cell_width() const { return std::pow(cell_volume_, 1.0 / dim()); }

    void multi_index(std::size_t cell, int* idx) const {
        for (int d = dim() - 1; d >= 0; --d) {
            idx[d] = static_cast<int>(cell % res_[d]);
            cell /= res_[d];
        }
    }
    std::size_t flat_index(const int* idx) const {
        std::size_t c = 0;
        for (int d = 0; d < dim(); ++d) c = c * res_[d] + idx[d];
        return c;
    }
    double center_coord(int d, int i) const { return box_.lo[d] + (i + 0.5) * spacing_[d]; }
    void cell_center(std::size_t cell, double* out) const {
        int idx[16];
        multi_index(cell, idx);
        for (int d = 0; d < dim(); ++d) out[d] = center_coord(d, idx[d]);
    }
    Point cell_center(std::size_t cell) const {
        Point x(dim());
        cell_center(cell, x.data());
        return x;
    }
    /// All cell centres, flattened (cell-major).
    std::vector<double> centers() const {
        std::vector<double> out(cells_ * dim());
        for (std::size_t c = 0; c < cells_; ++c) cell_center(c, out.data() + c * dim());
        return out;
    }
    /// Cell containing x, clamped to the grid.
    std::size_t locate(std::span<const double> x) const {
        int idx[16];
        for (int d = 0; d < dim(); ++d) {
            const int i = static_cast<int>(std::floor((x[d] - box_.lo[d]) / spacing_[d]));
            idx[d] = std::clamp(i, 0, res_[d] - 1);
        }
        return flat_index(idx);
    }

    /// Visit every cell whose centre lies in the closed box [lo, hi] (pruned by index range).
    template <class Fn>
    void for_cells_in_box(std::span<const double> lo, std::span<const double> hi, Fn&& fn) const {
        const int n = dim();
        int first[16], last[16], idx[16];
        for (int d = 0; d < n; ++d) {
            first[d] = std::max(0, static_cast<int>(std::ceil((lo[d] - box_.lo[d]) / spacing_[d] - 0.5)));
            last[d] = std::min(res_[d] - 1,
                               static_cast<int>(std::floor((hi[d] - box_.lo[d]) / spacing_[d] - 0.5)));
            if (first[d] > last[d]) return;
            idx[d] = first[d];
        }
        while (true) {
            fn(flat_index(idx));
            int d = n - 1;
            while (d >= 0 && ++idx[d] > last[d]) {
                idx[d] = first[d];
                --d;
            }
            if (d < 0) break;
        }
    }

    bool operator==(const Domain& o) const {
        return box_.lo == o.box_.lo && box_.hi == o.box_.hi && res_ == o.res_;
    }

private:
    Box box_;
    std::vector<int> res_;
    std::vector<double> spacing_;
    double cell_volume_ = 0.0;
    std::size_t cells_ = 0;
};

/// One value per grid cell, with the cell volume as Lebesgue weight.
class ScalarField {
public:
    ScalarField() = default;
    explicit ScalarField(Domain domain, double fill = 0.0)
        : domain_(std::move(domain)), values_(domain_.cell_count(), fill) {}
    ScalarField(Domain domain, std::vector<double> values) : domain_(std::move(domain)), values_(std::move(values)) {
        require(values_.size() == domain_.cell_count(), "value count equals product of resolutions");
    }

    const Domain& domain() const { return domain_; }
    std::size_t size() const { return values_.size(); }
    double cell_volume() const { return domain_.cell_volume(); }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }

    /// Grid quadrature of the field.
    double integral() const {
        double s = 0.0;
        for (double v : values_) s += v;
        return s * cell_volume();
    }
    double integral_abs() const {
        double s = 0.0;
        for (double v : values_) s += std::abs(v);
        return s * cell_volume();
    }
    double max_abs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    ScalarField& operator*=(double c) {
        for (double& v : values_) v *= c;
        return *this;
    }

private:
    Domain domain_;
    std::vector<double> values_;
};

struct Atom {
    Point x;
    double w = 0.0;
};

/// Finite positive measure: point masses plus an optional grid density.
struct Measure {
    std::vector<Atom> atoms;
    std::optional<ScalarField> density;

    bool empty() const { return atoms.empty() && (!density || density->max_abs() == 0.0); }

    double atom_mass() const {
        double m = 0.0;
        for (const auto& a : atoms) m += a.w;
        return m;
    }
    double density_mass() const { return density ? density->integral() : 0.0; }
    double total_mass() const { return atom_mass() + density_mass(); }

    /// Checks the invariants against the domain the measure lives in.
    void validate(const Domain& domain) const {
        for (const auto& a : atoms) {
            require(static_cast<int>(a.x.size()) == domain.dim(), "atom dimension matches domain");
            require(a.w >= 0.0 && std::isfinite(a.w), "atom weight nonnegative");
            require(domain.box().contains(a.x), "atom location inside the domain");
        }
        if (density) {
            for (double v : density->values()) require(v >= 0.0 && std::isfinite(v), "density nonnegative");
        }
    }

    Measure scaled(double c) const {
        Measure out = *this;
        for (auto& a : out.atoms) a.w *= c;
        if (out.density) *out.density *= c;
        return out;
    }

    friend Measure operator+(const Measure& a, const Measure& b) {
        Measure out = a;
        out.atoms.insert(out.atoms.end(), b.atoms.begin(), b.atoms.end());
        if (b.density) {
            if (!out.density) {
                out.density = b.density;
            } else {
                require(out.density->domain() == b.density->domain(), "densities share a grid");
                for (std::size_t i = 0; i < out.density->size(); ++i) (*out.density)[i] += (*b.density)[i];
            }
        }
        return out;
    }
};

/// Signed measure carried as the ordered pair (positive part, negative part).
struct SignedMeasure {
    Measure positive;
    Measure negative;

    double total_variation() const { return positive.total_mass() + negative.total_mass(); }
};

/// mu(B_t(x)) for the open ball. Density cells count iff their centre is in the ball.
inline double ball_mass(const Measure& mu, std::span<const double> x, double t) {
    require(t > 0.0, "t > 0");
    const double t2 = t * t;
    double m = 0.0;
    for (const auto& a : mu.atoms) {
        if (squared_distance(a.x.data(), x.data(), static_cast<int>(x.size())) < t2) m += a.w;
    }
    if (mu.density) {
        const ScalarField& f = *mu.density;
        const Domain& g = f.domain();
        const int n = g.dim();
        Point lo(n), hi(n), c(n);
        for (int d = 0; d < n; ++d) {
            lo[d] = x[d] - t;
            hi[d] = x[d] + t;
        }
        double s = 0.0;
        g.for_cells_in_box(lo, hi, [&](std::size_t cell) {
            g.cell_center(cell, c.data());
            if (squared_distance(c.data(), x.data(), n) < t2) s += f[cell];
        });
        m += s * g.cell_volume();
    }
    return m;
}

struct MollifyResult {
    ScalarField field;
    double bandwidth = 0.0;  ///< bandwidth actually used
    bool clipped = false;    ///< requested bandwidth exceeded dist(supp, boundary)
    bool collapsed = false;  ///< some source had no cell centre within the bandwidth
};

namespace detail {

inline double bump(double r2_over_h2) {
    const double s = 1.0 - r2_over_h2;
    return s > 0.0 ? s * s : 0.0;
}

/// Spread mass m from source point s onto `out` with the normalized bump kernel.
/// Returns false if no cell centre fell inside the kernel support.
inline bool spread_bump(ScalarField& out, std::span<const double> s, double mass, double h) {
    const Domain& g = out.domain();
    const int n = g.dim();
    Point lo(n), hi(n), c(n);
    for (int d = 0; d < n; ++d) {
        lo[d] = s[d] - h;
        hi[d] = s[d] + h;
    }
    const double h2 = h * h;
    std::vector<std::pair<std::size_t, double>> taps;
    double total = 0.0;
    g.for_cells_in_box(lo, hi, [&](std::size_t cell) {
        g.cell_center(cell, c.data());
        const double w = bump(squared_distance(c.data(), s.data(), n) / h2);
        if (w > 0.0) {
            taps.emplace_back(cell, w);
            total += w;
        }
    });
    if (total <= 0.0) {
        out[g.locate(s)] += mass / g.cell_volume();
        return false;
    }
    const double scale = mass / (total * g.cell_volume());
    for (const auto& [cell, w] : taps) out[cell] += w * scale;
    return true;
}

}  // namespace detail

/// Convolution with the compactly supported bump (1 - |y/h|^2)^2, normalized on
/// the target grid so that total mass is preserved exactly.
inline MollifyResult mollify(const Measure& mu, double bandwidth, const Domain& grid) {
    require(bandwidth > 0.0, "bandwidth > 0");
    MollifyResult res{ScalarField(grid), bandwidth, false, false};

    // Distance from the support to the boundary bounds the admissible bandwidth.
    double clearance = std::numeric_limits<double>::infinity();
    for (const auto& a : mu.atoms) {
        if (a.w > 0.0) clearance = std::min(clearance, grid.box().distance_to_boundary(a.x));
    }
    if (mu.density) {
        const ScalarField& f = *mu.density;
        Point c(f.domain().dim());
        for (std::size_t i = 0; i < f.size(); ++i) {
            if (f[i] == 0.0) continue;
            f.domain().cell_center(i, c.data());
            clearance = std::min(clearance, grid.box().distance_to_boundary(c));
        }
    }
    if (bandwidth >= clearance) {
        res.clipped = true;
        res.bandwidth = std::max(0.999 * clearance, 1e-12);
    }

    for (const auto& a : mu.atoms) {
        if (a.w == 0.0) continue;
        res.collapsed |= !detail::spread_bump(res.field, a.x, a.w, res.bandwidth);
    }
    if (mu.density) {
        const ScalarField& f = *mu.density;
        const double vol = f.cell_volume();
        Point c(f.domain().dim());
        for (std::size_t i = 0; i < f.size(); ++i) {
            if (f[i] == 0.0) continue;
            f.domain().cell_center(i, c.data());
            res.collapsed |= !detail::spread_bump(res.field, c, f[i] * vol, res.bandwidth);
        }
    }
    return res;
}

/// T_k(s) = max(min(s, k), -k).
inline double clamp_level(double s, double k) { return std::max(std::min(s, k), -k); }

/// T_n(chi_{omega_n} f) + chi_{omega_n} nu. Cells belong to omega_n by their centre.
inline Measure truncate_restrict(const ScalarField& f, const Measure& nu, double n, const Box& omega_n) {
    require(n > 0.0, "n > 0");
    const Domain& g = f.domain();
    require(omega_n.dim() == g.dim(), "omega_n dimension matches domain");
    for (int d = 0; d < g.dim(); ++d) require(omega_n.hi[d] > omega_n.lo[d], "omega_n is a nonempty box");
    require(g.box().contains(omega_n), "omega_n inside domain");

    Measure out;
    ScalarField dens(g);
    Point c(g.dim());
    for (std::size_t i = 0; i < f.size(); ++i) {
        g.cell_center(i, c.data());
        if (omega_n.contains(c)) dens[i] = clamp_level(f[i], n);
    }
    out.density = std::move(dens);
    for (const auto& a : nu.atoms) {
        if (omega_n.contains(a.x)) out.atoms.push_back(a);
    }
    if (nu.density) {
        // Diffuse part of nu is restricted but not truncated.
        ScalarField nd(nu.density->domain());
        const Domain& ng = nd.domain();
        Point cc(ng.dim());
        for (std::size_t i = 0; i < nd.size(); ++i) {
            ng.cell_center(i, cc.data());
            if (omega_n.contains(cc)) nd[i] = (*nu.density)[i];
        }
        out = out + Measure{{}, std::move(nd)};
    }
    return out;
}

}  // namespace wolffkit
