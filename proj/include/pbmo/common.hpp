#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pbmo {

/// Spatial point. One-dimensional domains leave the second coordinate at zero.
using Point = std::array<double, 2>;

/// Malformed input, violated precondition or unusable configuration.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A computation could not be completed (lost positivity, unreachable cell, ...).
class ComputationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double inf_distance(Point const& a, Point const& b, int dim) {
    double d = std::abs(a[0] - b[0]);
    if (dim > 1) d = std::max(d, std::abs(a[1] - b[1]));
    return d;
}

inline double euclidean_distance(Point const& a, Point const& b, int dim) {
    double const dx = a[0] - b[0];
    double const dy = dim > 1 ? a[1] - b[1] : 0.0;
    return std::hypot(dx, dy);
}

inline double positive_part(double v) { return v > 0.0 ? v : 0.0; }

/// Counter-based generator: output i of stream s is a pure function of (seed, s, i),
/// so splitting never depends on how many draws other streams made.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : key_(mix(seed)) {}

    CounterRng split(std::uint64_t stream) const {
        CounterRng child(0);
        child.key_ = mix(key_ ^ mix(stream + 0x632be59bd9b4e019ULL));
        return child;
    }

    std::uint64_t next() { return mix(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Ordinary least squares fit y = intercept + slope * x.
struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double rms_residual = 0.0;
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw InputError("fit_line: need at least two paired samples");
    double const n = static_cast<double>(x.size());
    double const mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double const my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw InputError("fit_line: abscissae are all equal");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double const r = y[i] - (fit.intercept + fit.slope * x[i]);
        ss += r * r;
    }
    fit.rms_residual = std::sqrt(ss / n);
    return fit;
}

/// Geometric grid of `count` points spanning [lo, hi].
inline std::vector<double> geometric_grid(double lo, double hi, std::size_t count) {
    if (!(lo > 0.0) || !(hi > lo) || count < 2) throw InputError("geometric_grid: need 0 < lo < hi and count >= 2");
    std::vector<double> g(count);
    double const ratio = std::log(hi / lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) g[i] = lo * std::exp(ratio * static_cast<double>(i));
    g.back() = hi;
    return g;
}

/// Median of a copy of the data (mean of the two central order statistics for even sizes).
inline double median(std::vector<double> v) {
    if (v.empty()) throw InputError("median of an empty set");
    auto const mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    double const hi = *mid;
    if (v.size() % 2 == 1) return hi;
    double const lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

}  // namespace pbmo
