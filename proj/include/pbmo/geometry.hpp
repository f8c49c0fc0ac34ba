#pragma once

#include <deque>
#include <fstream>
#include <functional>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pbmo/common.hpp"

namespace pbmo {

/// Bounded open set in one or two spatial dimensions, stored as a union of
/// square lattice cells. Everything outside the bounding box is complement.
class SpatialDomain {
public:
    SpatialDomain(int dim, std::size_t nx, std::size_t ny, double h, Point origin, std::vector<std::uint8_t> mask)
        : dim_(dim), nx_(nx), ny_(dim == 1 ? 1 : ny), h_(h), origin_(origin), mask_(std::move(mask)) {
        if (dim_ != 1 && dim_ != 2) throw InputError("domain dimension must be 1 or 2");
        if (!(h_ > 0.0) || !std::isfinite(h_)) throw InputError("grid spacing must be positive");
        if (nx_ == 0 || ny_ == 0) throw InputError("domain grid is empty");
        if (mask_.size() != nx_ * ny_) throw InputError("mask size does not match grid dimensions");
        if (dim_ == 1) origin_[1] = 0.0;
        for (std::size_t c = 0; c < mask_.size(); ++c)
            if (mask_[c]) interior_.push_back(c);
        if (interior_.empty()) throw InputError("domain has an empty interior");
        check_connected();
    }

    /// Cells whose centers satisfy `inside`, on the box [lo, hi] with spacing h.
    static SpatialDomain from_predicate(int dim, Point lo, Point hi, double h, std::function<bool(Point const&)> const& inside) {
        if (!(h > 0.0)) throw InputError("grid spacing must be positive");
        auto const count = [h](double a, double b) {
            double const n = std::round((b - a) / h);
            if (!(n >= 1.0)) throw InputError("bounding box is thinner than one cell");
            return static_cast<std::size_t>(n);
        };
        std::size_t const nx = count(lo[0], hi[0]);
        std::size_t const ny = dim == 1 ? 1 : count(lo[1], hi[1]);
        std::vector<std::uint8_t> mask(nx * ny, 0);
        for (std::size_t iy = 0; iy < ny; ++iy)
            for (std::size_t ix = 0; ix < nx; ++ix) {
                Point c{lo[0] + (static_cast<double>(ix) + 0.5) * h,
                        dim == 1 ? 0.0 : lo[1] + (static_cast<double>(iy) + 0.5) * h};
                mask[iy * nx + ix] = inside(c) ? 1 : 0;
            }
        return SpatialDomain(dim, nx, ny, h, lo, std::move(mask));
    }

    int dim() const { return dim_; }
    std::size_t nx() const { return nx_; }
    std::size_t ny() const { return ny_; }
    double h() const { return h_; }
    Point origin() const { return origin_; }
    Point upper_corner() const {
        return {origin_[0] + static_cast<double>(nx_) * h_, dim_ == 1 ? 0.0 : origin_[1] + static_cast<double>(ny_) * h_};
    }
    std::size_t cell_count() const { return nx_ * ny_; }
    std::size_t index(std::size_t ix, std::size_t iy) const { return iy * nx_ + ix; }
    std::size_t ix(std::size_t cell) const { return cell % nx_; }
    std::size_t iy(std::size_t cell) const { return cell / nx_; }
    bool interior(std::size_t cell) const { return mask_[cell] != 0; }
    bool interior(std::ptrdiff_t ix, std::ptrdiff_t iy) const {
        if (ix < 0 || iy < 0 || ix >= static_cast<std::ptrdiff_t>(nx_) || iy >= static_cast<std::ptrdiff_t>(ny_)) return false;
        return mask_[index(static_cast<std::size_t>(ix), static_cast<std::size_t>(iy))] != 0;
    }
    std::vector<std::size_t> const& interior_cells() const { return interior_; }
    std::vector<std::uint8_t> const& mask() const { return mask_; }

    double axis_center(int axis, std::ptrdiff_t i) const {
        return origin_[static_cast<std::size_t>(axis)] + (static_cast<double>(i) + 0.5) * h_;
    }
    Point center(std::size_t cell) const {
        return {axis_center(0, static_cast<std::ptrdiff_t>(ix(cell))),
                dim_ == 1 ? 0.0 : axis_center(1, static_cast<std::ptrdiff_t>(iy(cell)))};
    }
    double cell_volume() const { return dim_ == 1 ? h_ : h_ * h_; }
    double interior_measure() const { return static_cast<double>(interior_.size()) * cell_volume(); }

    /// Nearest interior cell center; throws if none lies within one grid spacing.
    std::size_t locate(Point const& p) const {
        auto const near = [&](int axis) {
            double const f = (p[static_cast<std::size_t>(axis)] - origin_[static_cast<std::size_t>(axis)]) / h_ - 0.5;
            return static_cast<std::ptrdiff_t>(std::floor(f));
        };
        std::ptrdiff_t const bx = near(0), by = dim_ == 1 ? 0 : near(1);
        std::optional<std::size_t> best;
        double best_d = kInf;
        for (std::ptrdiff_t jy = by - 1; jy <= by + 2; ++jy) {
            if (dim_ == 1 && jy != 0) continue;
            for (std::ptrdiff_t jx = bx - 1; jx <= bx + 2; ++jx) {
                if (!interior(jx, jy)) continue;
                std::size_t const c = index(static_cast<std::size_t>(jx), static_cast<std::size_t>(jy));
                double const d = euclidean_distance(center(c), p, dim_);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
        }
        if (!best || best_d > h_) throw InputError("point is not within one grid spacing of an interior cell");
        return *best;
    }

    /// Each cell split into k^n cells.
    SpatialDomain refined(std::size_t k) const {
        if (k == 0) throw InputError("refinement factor must be positive");
        std::size_t const ky = dim_ == 1 ? 1 : k;
        std::size_t const rnx = nx_ * k, rny = ny_ * ky;
        std::vector<std::uint8_t> m(rnx * rny);
        for (std::size_t y = 0; y < rny; ++y)
            for (std::size_t x = 0; x < rnx; ++x) m[y * rnx + x] = mask_[index(x / k, y / ky)];
        return SpatialDomain(dim_, rnx, rny, h_ / static_cast<double>(k), origin_, std::move(m));
    }

private:
    void check_connected() const {
        std::vector<std::uint8_t> seen(mask_.size(), 0);
        std::deque<std::size_t> queue{interior_.front()};
        seen[interior_.front()] = 1;
        std::size_t reached = 1;
        while (!queue.empty()) {
            std::size_t const c = queue.front();
            queue.pop_front();
            auto const x = static_cast<std::ptrdiff_t>(ix(c)), y = static_cast<std::ptrdiff_t>(iy(c));
            std::array<std::array<std::ptrdiff_t, 2>, 4> const nb{{{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}}};
            for (auto const& [a, b] : nb) {
                if (!interior(a, b)) continue;
                std::size_t const n = index(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
                if (!seen[n]) {
                    seen[n] = 1;
                    ++reached;
                    queue.push_back(n);
                }
            }
        }
        if (reached != interior_.size()) throw InputError("domain interior is not a single connected component");
    }

    int dim_;
    std::size_t nx_, ny_;
    double h_;
    Point origin_;
    std::vector<std::uint8_t> mask_;
    std::vector<std::size_t> interior_;
};

namespace domains {

inline SpatialDomain interval(double a, double b, double h) {
    return SpatialDomain::from_predicate(1, {a, 0.0}, {b, 0.0}, h, [](Point const&) { return true; });
}

inline SpatialDomain box(Point lo, Point hi, double h) {
    return SpatialDomain::from_predicate(2, lo, hi, h, [](Point const&) { return true; });
}

inline SpatialDomain disk(Point c, double r, double h) {
    return SpatialDomain::from_predicate(2, {c[0] - r, c[1] - r}, {c[0] + r, c[1] + r}, h,
                                         [&](Point const& p) { return std::hypot(p[0] - c[0], p[1] - c[1]) < r; });
}

/// [0, 2s]^2 with the open upper-right quadrant (s, 2s)^2 removed.
inline SpatialDomain lshape(double s, double h) {
    return SpatialDomain::from_predicate(2, {0.0, 0.0}, {2 * s, 2 * s}, h,
                                         [s](Point const& p) { return !(p[0] > s && p[1] > s); });
}

}  // namespace domains

/// Mask text format: first line "n nx [ny] h", then rows of '#' (interior)
/// and '.' (complement), top row first.
inline SpatialDomain read_mask(std::istream& in, Point origin = {0.0, 0.0}) {
    std::string line;
    if (!std::getline(in, line)) throw InputError("mask: missing header line");
    std::istringstream hs(line);
    int n = 0;
    std::size_t nx = 0, ny = 1;
    double h = 0.0;
    if (!(hs >> n >> nx)) throw InputError("mask: malformed header");
    if (n == 2 && !(hs >> ny)) throw InputError("mask: malformed header");
    if (!(hs >> h)) throw InputError("mask: malformed header");
    if (n != 1 && n != 2) throw InputError("mask: dimension must be 1 or 2");
    std::vector<std::uint8_t> mask(nx * ny, 0);
    for (std::size_t r = 0; r < ny; ++r) {
        if (!std::getline(in, line)) throw InputError("mask: too few rows");
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.size() != nx) throw InputError("mask: row " + std::to_string(r + 1) + " has the wrong length");
        std::size_t const iy = ny - 1 - r;
        for (std::size_t ix = 0; ix < nx; ++ix) {
            char const ch = line[ix];
            if (ch != '#' && ch != '.') throw InputError("mask: unexpected character");
            mask[iy * nx + ix] = ch == '#' ? 1 : 0;
        }
    }
    return SpatialDomain(n, nx, ny, h, origin, std::move(mask));
}

inline SpatialDomain read_mask_file(std::string const& path, Point origin = {0.0, 0.0}) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open mask file " + path);
    return read_mask(in, origin);
}

inline void write_mask(std::ostream& out, SpatialDomain const& dom) {
    out << dom.dim() << ' ' << dom.nx();
    if (dom.dim() == 2) out << ' ' << dom.ny();
    out << ' ' << dom.h() << '\n';
    for (std::size_t r = 0; r < dom.ny(); ++r) {
        std::size_t const iy = dom.ny() - 1 - r;
        for (std::size_t ix = 0; ix < dom.nx(); ++ix) out << (dom.interior(dom.index(ix, iy)) ? '#' : '.');
        out << '\n';
    }
}

/// Distance from each cell center to the complement, where the complement is
/// the union of closed non-interior cells and everything outside the box.
class DistanceField {
public:
    DistanceField(SpatialDomain const& dom, std::vector<double> lattice_sq)
        : dom_(&dom), lattice_sq_(std::move(lattice_sq)) {
        values_.resize(lattice_sq_.size());
        for (std::size_t c = 0; c < values_.size(); ++c) values_[c] = dom.h() * std::sqrt(lattice_sq_[c]);
    }

    double operator[](std::size_t cell) const { return values_[cell]; }
    std::vector<double> const& values() const { return values_; }
    /// Squared distance in units of h^2; sums of squared half-integers, hence exact.
    std::vector<double> const& lattice_squared() const { return lattice_sq_; }
    SpatialDomain const& domain() const { return *dom_; }

    double max() const {
        double m = 0.0;
        for (std::size_t c : dom_->interior_cells()) m = std::max(m, values_[c]);
        return m;
    }

    /// Exact distance from an arbitrary interior point to the complement.
    double at(Point const& p) const {
        SpatialDomain const& d = *dom_;
        double const h = d.h();
        auto const cell_of = [&](int axis) {
            return static_cast<std::ptrdiff_t>(std::floor((p[static_cast<std::size_t>(axis)] - d.origin()[static_cast<std::size_t>(axis)]) / h));
        };
        std::ptrdiff_t const cx = cell_of(0), cy = d.dim() == 1 ? 0 : cell_of(1);
        // An upper bound from a nearby cell center fixes the search window.
        double bound = kInf;
        for (std::ptrdiff_t jy = cy - 1; jy <= cy + 1; ++jy)
            for (std::ptrdiff_t jx = cx - 1; jx <= cx + 1; ++jx) {
                if ((d.dim() == 1 && jy != 0) || !d.interior(jx, jy)) continue;
                std::size_t const c = d.index(static_cast<std::size_t>(jx), static_cast<std::size_t>(jy));
                bound = std::min(bound, values_[c] + euclidean_distance(p, d.center(c), d.dim()));
            }
        if (!std::isfinite(bound)) return 0.0;
        auto const reach = static_cast<std::ptrdiff_t>(std::ceil(bound / h)) + 1;
        double best_sq = bound * bound;
        std::ptrdiff_t const y0 = d.dim() == 1 ? 0 : cy - reach, y1 = d.dim() == 1 ? 0 : cy + reach;
        for (std::ptrdiff_t jy = y0; jy <= y1; ++jy)
            for (std::ptrdiff_t jx = cx - reach; jx <= cx + reach; ++jx) {
                if (d.interior(jx, jy)) continue;
                double const gx = gap(p[0], d.axis_center(0, jx), h);
                double const gy = d.dim() == 1 ? 0.0 : gap(p[1], d.axis_center(1, jy), h);
                best_sq = std::min(best_sq, gx * gx + gy * gy);
            }
        return std::sqrt(best_sq);
    }

private:
    static double gap(double x, double c, double h) { return positive_part(std::abs(x - c) - 0.5 * h); }

    SpatialDomain const* dom_;
    std::vector<double> lattice_sq_;
    std::vector<double> values_;
};

namespace detail {

/// Squared gap, in cell units, between a cell center and a cell k cells away.
inline double lattice_gap_sq(std::ptrdiff_t k) {
    if (k == 0) return 0.0;
    double const g = static_cast<double>(k < 0 ? -k : k) - 0.5;
    return g * g;
}

}  // namespace detail

/// Separable exact distance transform: a per-row nearest-complement scan,
/// then a per-column minimisation with outward early exit.
inline DistanceField distance_to_boundary(SpatialDomain const& dom) {
    auto const nx = static_cast<std::ptrdiff_t>(dom.nx());
    auto const ny = static_cast<std::ptrdiff_t>(dom.ny());
    // Row pass: nearest complement index along x, including the virtual
    // complement columns -1 and nx.
    std::vector<double> row(static_cast<std::size_t>(nx * ny));
    for (std::ptrdiff_t y = 0; y < ny; ++y) {
        std::ptrdiff_t last = -1;
        std::vector<std::ptrdiff_t> left(static_cast<std::size_t>(nx));
        for (std::ptrdiff_t x = 0; x < nx; ++x) {
            if (!dom.interior(x, y)) last = x;
            left[static_cast<std::size_t>(x)] = last;
        }
        std::ptrdiff_t next = nx;
        for (std::ptrdiff_t x = nx - 1; x >= 0; --x) {
            if (!dom.interior(x, y)) next = x;
            std::ptrdiff_t const k = std::min(x - left[static_cast<std::size_t>(x)], next - x);
            row[static_cast<std::size_t>(y * nx + x)] = detail::lattice_gap_sq(k);
        }
    }
    std::vector<double> sq(row.size());
    if (dom.dim() == 1) {
        sq = row;
    } else {
        for (std::ptrdiff_t x = 0; x < nx; ++x)
            for (std::ptrdiff_t y = 0; y < ny; ++y) {
                // Virtual complement rows -1 and ny.
                double best = std::min(detail::lattice_gap_sq(y + 1), detail::lattice_gap_sq(ny - y));
                for (std::ptrdiff_t k = 0;; ++k) {
                    double const vertical = detail::lattice_gap_sq(k);
                    if (vertical >= best) break;
                    bool any = false;
                    for (std::ptrdiff_t yy : {y - k, y + k}) {
                        if (yy < 0 || yy >= ny || (k == 0 && yy != y)) continue;
                        any = true;
                        best = std::min(best, row[static_cast<std::size_t>(yy * nx + x)] + vertical);
                        if (k == 0) break;
                    }
                    if (!any) break;
                }
                sq[static_cast<std::size_t>(y * nx + x)] = best;
            }
    }
    for (std::size_t c = 0; c < sq.size(); ++c)
        if (!dom.interior(c)) sq[c] = 0.0;
    return DistanceField(dom, std::move(sq));
}

}  // namespace pbmo
