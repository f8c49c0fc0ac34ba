#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "pbmo/common.hpp"

namespace pbmo {

struct ParabolicPoint {
    Point x{};
    double t = 0.0;
};

/// C_p making the upper quarter of a rectangle a ball of the parabolic quasi-metric.
inline double ball_constant(double p) { return std::exp2((2.0 - p) / p); }

/// max{ |x_a - x_b|_inf, C_p |t_a - t_b|^{1/p} }
inline double parabolic_distance(ParabolicPoint const& a, ParabolicPoint const& b, int dim, double p, double cp) {
    return std::max(inf_distance(a.x, b.x, dim), cp * std::pow(std::abs(a.t - b.t), 1.0 / p));
}

/// Axis-aligned space-time box, half-open: closed at the low faces.
/// Stored as center plus half-widths so generated measures avoid cancellation.
struct Box {
    int dim = 1;
    Point center{};
    double half = 0.0;      ///< spatial half-width (cube)
    double t_center = 0.0;
    double t_half = 0.0;

    double lo(int axis) const { return center[static_cast<std::size_t>(axis)] - half; }
    double hi(int axis) const { return center[static_cast<std::size_t>(axis)] + half; }
    double t_lo() const { return t_center - t_half; }
    double t_hi() const { return t_center + t_half; }

    bool contains(ParabolicPoint const& q) const {
        for (int a = 0; a < dim; ++a) {
            double const v = q.x[static_cast<std::size_t>(a)];
            if (!(v >= lo(a) && v < hi(a))) return false;
        }
        return q.t >= t_lo() && q.t < t_hi();
    }

    /// Lebesgue measure; the product is formed in extended precision and rounded once.
    double measure() const {
        long double m = 2.0L * static_cast<long double>(t_half);
        for (int a = 0; a < dim; ++a) m *= 2.0L * static_cast<long double>(half);
        return static_cast<double>(m);
    }
};

/// Measure of the intersection of two boxes (the second may be a cylinder).
struct Extents {
    int dim = 1;
    std::array<double, 2> lo{}, hi{};
    double t_lo = 0.0, t_hi = 0.0;
};

inline Extents extents(Box const& b) {
    Extents e;
    e.dim = b.dim;
    for (int a = 0; a < b.dim; ++a) {
        e.lo[static_cast<std::size_t>(a)] = b.lo(a);
        e.hi[static_cast<std::size_t>(a)] = b.hi(a);
    }
    e.t_lo = b.t_lo();
    e.t_hi = b.t_hi();
    return e;
}

inline Extents intersect(Extents a, Extents const& b) {
    for (int i = 0; i < a.dim; ++i) {
        auto const k = static_cast<std::size_t>(i);
        a.lo[k] = std::max(a.lo[k], b.lo[k]);
        a.hi[k] = std::min(a.hi[k], b.hi[k]);
    }
    a.t_lo = std::max(a.t_lo, b.t_lo);
    a.t_hi = std::min(a.t_hi, b.t_hi);
    return a;
}

inline double measure(Extents const& e) {
    long double m = positive_part(e.t_hi - e.t_lo);
    for (int a = 0; a < e.dim; ++a) m *= positive_part(e.hi[static_cast<std::size_t>(a)] - e.lo[static_cast<std::size_t>(a)]);
    return static_cast<double>(m);
}

/// Measure of a box clipped to another box (for instance a space-time cylinder).
inline double clipped_measure(Box const& b, Extents const& clip) { return measure(intersect(extents(b), clip)); }

inline double intersection_measure(Box const& a, Box const& b) { return measure(intersect(extents(a), extents(b))); }

inline bool box_inside(Box const& b, Extents const& outer) {
    for (int a = 0; a < b.dim; ++a) {
        auto const k = static_cast<std::size_t>(a);
        if (b.lo(a) < outer.lo[k] || b.hi(a) > outer.hi[k]) return false;
    }
    return b.t_lo() >= outer.t_lo && b.t_hi() <= outer.t_hi;
}

/// Default ratio between a fragment and its quarter.
inline constexpr double kFragmentRatio = 1.0 / 8.0;

/// Q x (t - L^p, t + L^p) with Q the cube of side L centered at x.
class ParabolicRectangle {
public:
    ParabolicRectangle() = default;
    ParabolicRectangle(int dim, Point center, double t, double side, double p)
        : dim_(dim), center_(center), t_(t), side_(side), p_(p) {
        if (dim_ != 1 && dim_ != 2) throw InputError("rectangle dimension must be 1 or 2");
        if (!(side_ > 0.0) || !std::isfinite(side_)) throw InputError("rectangle sidelength must be positive");
        if (!(p_ > 1.0)) throw InputError("parabolic exponent must exceed 1");
        if (dim_ == 1) center_[1] = 0.0;
    }

    int dim() const { return dim_; }
    Point const& center() const { return center_; }
    double t() const { return t_; }
    double side() const { return side_; }
    double p() const { return p_; }
    double time_scale() const { return std::pow(side_, p_); }  ///< L^p

    Box box() const { return {dim_, center_, 0.5 * side_, t_, time_scale()}; }
    Box upper_half() const { double const lp = time_scale(); return {dim_, center_, 0.5 * side_, t_ + 0.5 * lp, 0.5 * lp}; }
    Box lower_half() const { double const lp = time_scale(); return {dim_, center_, 0.5 * side_, t_ - 0.5 * lp, 0.5 * lp}; }
    Box upper_quarter() const { return scaled_upper_quarter(1.0); }
    Box lower_quarter() const { return scaled_lower_quarter(1.0); }
    Box upper_fragment(double ratio = kFragmentRatio) const { return scaled_upper_quarter(ratio); }
    Box lower_fragment(double ratio = kFragmentRatio) const { return scaled_lower_quarter(ratio); }

    /// lambda S^+: (lambda Q) x (t + 3/4 L^p -+ 1/4 (lambda L)^p)
    Box scaled_upper_quarter(double lambda) const {
        double const ls = lambda * side_;
        return {dim_, center_, 0.5 * ls, t_ + 0.75 * time_scale(), 0.25 * std::pow(ls, p_)};
    }
    Box scaled_lower_quarter(double lambda) const {
        double const ls = lambda * side_;
        return {dim_, center_, 0.5 * ls, t_ - 0.75 * time_scale(), 0.25 * std::pow(ls, p_)};
    }

    /// lambda R keeps the center and scales the sidelength.
    ParabolicRectangle scaled(double lambda) const {
        if (!(lambda > 0.0)) throw InputError("scaling factor must be positive");
        return {dim_, center_, t_, lambda * side_, p_};
    }

    /// |R| = L^n 2 L^p
    double measure() const { return static_cast<double>(2.0L * std::pow(static_cast<long double>(side_), dim_ + static_cast<long double>(p_))); }

    /// Center of the upper quarter viewed as a metric ball.
    ParabolicPoint upper_quarter_center() const { return {center_, t_ + 0.75 * time_scale()}; }
    ParabolicPoint lower_quarter_center() const { return {center_, t_ - 0.75 * time_scale()}; }

    friend bool operator==(ParabolicRectangle const&, ParabolicRectangle const&) = default;

private:
    int dim_ = 1;
    Point center_{};
    double t_ = 0.0;
    double side_ = 1.0;
    double p_ = 2.0;
};

struct SubRegions {
    Box r_plus, r_minus, s_plus, s_minus, u_plus, u_minus;
};

inline SubRegions sub_regions(ParabolicRectangle const& r, double fragment_ratio = kFragmentRatio) {
    return {r.upper_half(), r.lower_half(), r.upper_quarter(), r.lower_quarter(),
            r.upper_fragment(fragment_ratio), r.lower_fragment(fragment_ratio)};
}

/// Closed-form measures, rounded once from extended precision.
namespace closed_form {
inline double rectangle(double L, int n, double p) { return static_cast<double>(2.0L * std::pow(static_cast<long double>(L), n + static_cast<long double>(p))); }
inline double half(double L, int n, double p) { return static_cast<double>(std::pow(static_cast<long double>(L), n + static_cast<long double>(p))); }
inline double quarter(double L, int n, double p) { return static_cast<double>(std::pow(static_cast<long double>(L), n + static_cast<long double>(p)) / 2.0L); }
inline double fragment(double L, int n, double p, double ratio = kFragmentRatio) {
    long double const l = static_cast<long double>(L) * static_cast<long double>(ratio);
    return static_cast<double>(std::pow(l, n + static_cast<long double>(p)) / 2.0L);
}
}  // namespace closed_form

/// Rectangle literal "cx[,cy],t,L,p".
inline ParabolicRectangle parse_rectangle(std::string const& text, int dim) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (item.find_first_not_of(" \t", used) != std::string::npos) throw InputError("bad number");
        } catch (std::exception const&) {
            throw InputError("rectangle literal has a malformed field: '" + item + "'");
        }
    }
    if (v.size() != static_cast<std::size_t>(dim) + 3) throw InputError("rectangle literal must be cx[,cy],t,L,p");
    Point c{v[0], dim == 2 ? v[1] : 0.0};
    auto const k = static_cast<std::size_t>(dim);
    return {dim, c, v[k], v[k + 1], v[k + 2]};
}

}  // namespace pbmo
