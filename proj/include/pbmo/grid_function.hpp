#pragma once

#include <concepts>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "pbmo/geometry.hpp"
#include "pbmo/parabolic.hpp"

namespace pbmo {

/// Uniform temporal lattice over (0, T); cell `it` is centered at (it + 1/2) tstep.
struct TimeGrid {
    std::size_t nt = 0;
    double tstep = 0.0;

    TimeGrid() = default;
    TimeGrid(std::size_t n, double step) : nt(n), tstep(step) {
        if (nt == 0 || !(tstep > 0.0)) throw InputError("time grid needs nt > 0 and tstep > 0");
    }
    static TimeGrid covering(double T, double step) {
        if (!(T > 0.0)) throw InputError("time horizon must be positive");
        auto const n = static_cast<std::size_t>(std::llround(T / step));
        return TimeGrid(std::max<std::size_t>(n, 1), T / static_cast<double>(std::max<std::size_t>(n, 1)));
    }
    double horizon() const { return static_cast<double>(nt) * tstep; }
    double center(std::size_t it) const { return (static_cast<double>(it) + 0.5) * tstep; }
};

/// Anything that yields a value per (cell, time cell) over a domain and a time grid.
template <class F>
concept SpaceTimeField = requires(F const& f, std::size_t c, std::size_t it) {
    { f.domain() } -> std::convertible_to<SpatialDomain const&>;
    { f.time() } -> std::convertible_to<TimeGrid const&>;
    { f(c, it) } -> std::convertible_to<double>;
};

/// Stored values on the space-time lattice (layer-major).
class GridFunction {
public:
    GridFunction(std::shared_ptr<const SpatialDomain> dom, TimeGrid time, double fill = 0.0)
        : dom_(std::move(dom)), time_(time), values_(dom_->cell_count() * time.nt, fill) {}

    template <class Fn>
    static GridFunction sample(std::shared_ptr<const SpatialDomain> dom, TimeGrid time, Fn&& fn) {
        GridFunction g(std::move(dom), time);
        for (std::size_t it = 0; it < time.nt; ++it)
            for (std::size_t c = 0; c < g.dom_->cell_count(); ++c) g.at(c, it) = fn(g.dom_->center(c), time.center(it));
        return g;
    }

    SpatialDomain const& domain() const { return *dom_; }
    std::shared_ptr<const SpatialDomain> const& domain_ptr() const { return dom_; }
    TimeGrid const& time() const { return time_; }
    double operator()(std::size_t cell, std::size_t it) const { return values_[it * dom_->cell_count() + cell]; }
    double& at(std::size_t cell, std::size_t it) { return values_[it * dom_->cell_count() + cell]; }
    std::vector<double> const& values() const { return values_; }

    template <class Fn>
    GridFunction transformed(Fn&& fn) const {
        GridFunction g(dom_, time_);
        for (std::size_t i = 0; i < values_.size(); ++i) g.values_[i] = fn(values_[i]);
        return g;
    }

private:
    std::shared_ptr<const SpatialDomain> dom_;
    TimeGrid time_;
    std::vector<double> values_;
};

/// Values computed on demand by fn(cell, it).
template <class Fn>
class LazyField {
public:
    LazyField(std::shared_ptr<const SpatialDomain> dom, TimeGrid time, Fn fn)
        : dom_(std::move(dom)), time_(time), fn_(std::move(fn)) {}
    SpatialDomain const& domain() const { return *dom_; }
    TimeGrid const& time() const { return time_; }
    double operator()(std::size_t cell, std::size_t it) const { return fn_(cell, it); }

private:
    std::shared_ptr<const SpatialDomain> dom_;
    TimeGrid time_;
    Fn fn_;
};

/// Time-independent field u(x, t) = v(x).
inline auto stationary_field(std::shared_ptr<const SpatialDomain> dom, TimeGrid time, std::vector<double> spatial) {
    auto fn = [v = std::make_shared<const std::vector<double>>(std::move(spatial))](std::size_t c, std::size_t) { return (*v)[c]; };
    return LazyField<decltype(fn)>(std::move(dom), time, std::move(fn));
}

/// Half-open index ranges of the lattice cells whose centers lie in a box.
struct CellBlock {
    std::size_t ix0 = 0, ix1 = 0, iy0 = 0, iy1 = 1, it0 = 0, it1 = 0;
    bool empty() const { return ix0 >= ix1 || iy0 >= iy1 || it0 >= it1; }
};

namespace detail {

/// First lattice index whose center origin + (i + 1/2) step is >= bound, clamped to [0, n].
inline std::size_t first_center_at_least(double origin, double step, std::size_t n, double bound) {
    auto const center = [&](std::ptrdiff_t i) { return origin + (static_cast<double>(i) + 0.5) * step; };
    double const guess = std::ceil((bound - origin) / step - 0.5);
    if (guess <= 0.0) return 0;
    if (guess >= static_cast<double>(n)) {
        if (center(static_cast<std::ptrdiff_t>(n) - 1) >= bound) {
            // fall through to the exact scan below
        } else {
            return n;
        }
    }
    auto i = static_cast<std::ptrdiff_t>(std::min(guess, static_cast<double>(n)));
    while (i > 0 && center(i - 1) >= bound) --i;
    while (i < static_cast<std::ptrdiff_t>(n) && center(i) < bound) ++i;
    return static_cast<std::size_t>(i);
}

}  // namespace detail

inline CellBlock cell_block(SpatialDomain const& dom, TimeGrid const& time, Box const& box) {
    CellBlock b;
    b.ix0 = detail::first_center_at_least(dom.origin()[0], dom.h(), dom.nx(), box.lo(0));
    b.ix1 = detail::first_center_at_least(dom.origin()[0], dom.h(), dom.nx(), box.hi(0));
    if (dom.dim() == 2) {
        b.iy0 = detail::first_center_at_least(dom.origin()[1], dom.h(), dom.ny(), box.lo(1));
        b.iy1 = detail::first_center_at_least(dom.origin()[1], dom.h(), dom.ny(), box.hi(1));
    }
    b.it0 = detail::first_center_at_least(0.0, time.tstep, time.nt, box.t_lo());
    b.it1 = detail::first_center_at_least(0.0, time.tstep, time.nt, box.t_hi());
    return b;
}

/// Calls fn(cell, it) for every interior lattice cell whose center lies in the box.
template <class Fn>
void for_each_cell(SpatialDomain const& dom, TimeGrid const& time, Box const& box, Fn&& fn) {
    CellBlock const b = cell_block(dom, time, box);
    if (b.empty()) return;
    for (std::size_t it = b.it0; it < b.it1; ++it)
        for (std::size_t iy = b.iy0; iy < b.iy1; ++iy)
            for (std::size_t ix = b.ix0; ix < b.ix1; ++ix) {
                std::size_t const c = dom.index(ix, iy);
                if (dom.interior(c)) fn(c, it);
            }
}

template <SpaceTimeField F>
void gather(F const& f, Box const& box, std::vector<double>& out) {
    out.clear();
    for_each_cell(f.domain(), f.time(), box, [&](std::size_t c, std::size_t it) { out.push_back(f(c, it)); });
}

template <SpaceTimeField F>
std::vector<double> gather(F const& f, Box const& box) {
    std::vector<double> out;
    gather(f, box, out);
    return out;
}

/// Grid quadrature of |box ∩ (Omega x (0,T))|: interior cells counted times cell volume.
inline double grid_measure(SpatialDomain const& dom, TimeGrid const& time, Box const& box) {
    std::size_t n = 0;
    for_each_cell(dom, time, box, [&](std::size_t, std::size_t) { ++n; });
    return static_cast<double>(n) * dom.cell_volume() * time.tstep;
}

/// True if every lattice cell with center in the spatial cube is interior and
/// the cube stays inside the bounding box.
inline bool cube_inside_domain(SpatialDomain const& dom, Point const& c, double half) {
    Point const lo = dom.origin(), hi = dom.upper_corner();
    for (int a = 0; a < dom.dim(); ++a) {
        auto const k = static_cast<std::size_t>(a);
        if (c[k] - half < lo[k] || c[k] + half > hi[k]) return false;
    }
    std::size_t const x0 = detail::first_center_at_least(lo[0], dom.h(), dom.nx(), c[0] - half);
    std::size_t const x1 = detail::first_center_at_least(lo[0], dom.h(), dom.nx(), c[0] + half);
    std::size_t y0 = 0, y1 = 1;
    if (dom.dim() == 2) {
        y0 = detail::first_center_at_least(lo[1], dom.h(), dom.ny(), c[1] - half);
        y1 = detail::first_center_at_least(lo[1], dom.h(), dom.ny(), c[1] + half);
    }
    if (x0 >= x1 || y0 >= y1) return false;
    for (std::size_t iy = y0; iy < y1; ++iy)
        for (std::size_t ix = x0; ix < x1; ++ix)
            if (!dom.interior(dom.index(ix, iy))) return false;
    return true;
}

/// sigma R ⊂ Omega x (0, T) on the lattice.
inline bool admissible(ParabolicRectangle const& r, double sigma, SpatialDomain const& dom, double T) {
    ParabolicRectangle const s = r.scaled(sigma);
    double const lp = s.time_scale();
    if (s.t() - lp < 0.0 || s.t() + lp > T) return false;
    return cube_inside_domain(dom, s.center(), 0.5 * s.side());
}

// ---------------------------------------------------------------------------
// GridFunction text format: header "n nx [ny] nt h tstep T", then the CSV
// header "ix[,iy],it,value" and one row per stored cell.

inline void write_grid_function(std::ostream& out, GridFunction const& g, bool interior_only = true) {
    SpatialDomain const& d = g.domain();
    out << d.dim() << ' ' << d.nx();
    if (d.dim() == 2) out << ' ' << d.ny();
    out << ' ' << g.time().nt << ' ' << fmt::format("{:.17g} {:.17g} {:.17g}", d.h(), g.time().tstep, g.time().horizon()) << '\n';
    out << (d.dim() == 2 ? "ix,iy,it,value\n" : "ix,it,value\n");
    std::string line;
    for (std::size_t it = 0; it < g.time().nt; ++it)
        for (std::size_t c = 0; c < d.cell_count(); ++c) {
            if (interior_only && !d.interior(c)) continue;
            if (d.dim() == 2)
                line = fmt::format("{},{},{},{:.17g}\n", d.ix(c), d.iy(c), it, g(c, it));
            else
                line = fmt::format("{},{},{:.17g}\n", d.ix(c), it, g(c, it));
            out << line;
        }
}

/// Reads values for a known domain; every interior cell must be present.
inline GridFunction read_grid_function(std::istream& in, std::shared_ptr<const SpatialDomain> dom) {
    std::string line;
    if (!std::getline(in, line)) throw InputError("grid function: missing header");
    std::istringstream hs(line);
    int n = 0;
    std::size_t nx = 0, ny = 1, nt = 0;
    double h = 0, tstep = 0, T = 0;
    if (!(hs >> n >> nx)) throw InputError("grid function: malformed header");
    if (n == 2 && !(hs >> ny)) throw InputError("grid function: malformed header");
    if (!(hs >> nt >> h >> tstep >> T)) throw InputError("grid function: malformed header");
    if (n != dom->dim() || nx != dom->nx() || ny != dom->ny()) throw InputError("grid function does not match the domain grid");
    if (std::abs(h - dom->h()) > 1e-12 * dom->h()) throw InputError("grid function spacing does not match the domain");
    TimeGrid const time(nt, tstep);
    if (std::abs(time.horizon() - T) > 1e-9 * T) throw InputError("grid function horizon is inconsistent with nt * tstep");
    if (!std::getline(in, line)) throw InputError("grid function: missing CSV header");
    GridFunction g(dom, time, std::numeric_limits<double>::quiet_NaN());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<std::string> f;
        while (std::getline(ss, tok, ',')) f.push_back(tok);
        if (f.size() != static_cast<std::size_t>(n) + 2) throw InputError("grid function: malformed row '" + line + "'");
        try {
            std::size_t const ix = std::stoul(f[0]);
            std::size_t const iy = n == 2 ? std::stoul(f[1]) : 0;
            std::size_t const it = std::stoul(f[static_cast<std::size_t>(n)]);
            double const v = std::stod(f[static_cast<std::size_t>(n) + 1]);
            if (ix >= nx || iy >= ny || it >= nt) throw InputError("grid function: index out of range");
            g.at(dom->index(ix, iy), it) = v;
        } catch (InputError const&) {
            throw;
        } catch (std::exception const&) {
            throw InputError("grid function: malformed row '" + line + "'");
        }
    }
    for (std::size_t it = 0; it < nt; ++it)
        for (std::size_t c : dom->interior_cells())
            if (!std::isfinite(g(c, it))) throw InputError("grid function: missing or non-finite value on the interior");
    return g;
}

inline GridFunction read_grid_function_file(std::string const& path, std::shared_ptr<const SpatialDomain> dom) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open grid function file " + path);
    return read_grid_function(in, std::move(dom));
}

}  // namespace pbmo
