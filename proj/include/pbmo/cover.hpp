#pragma once

#include <map>
#include <optional>
#include <vector>

#include "pbmo/geometry.hpp"

namespace pbmo {

struct Cube {
    Point center{};
    double side = 0.0;
};

/// Greedy 5r-cover: the `cubes` (five-fold enlargements of the selected seed
/// cubes) cover the interior while the seed cubes are pairwise disjoint.
struct SpatialCover {
    std::vector<Cube> cubes;
    std::size_t max_overlap = 0;   ///< most cubes containing one cell center
    double mean_overlap = 0.0;
    std::size_t uncovered = 0;     ///< interior cells outside every cube; 0 unless a forced first cube is small
};

inline bool cube_contains(Cube const& q, Point const& p, int dim) {
    return inf_distance(q.center, p, dim) <= 0.5 * q.side;
}

inline SpatialCover whitney_cover(SpatialDomain const& dom, DistanceField const& dist, double beta, double cap,
                                  std::optional<std::size_t> first = std::nullopt) {
    if (!(beta > 0.0 && beta < 1.0)) throw InputError("cover ratio must lie in (0, 1)");
    if (!(cap > 0.0)) throw InputError("cover size cap must be positive");
    int const dim = dom.dim();
    // Seed cube side l_y with 5 l_y = min(beta d(y), cap).
    std::vector<std::pair<double, std::size_t>> seeds;
    seeds.reserve(dom.interior_cells().size());
    for (std::size_t c : dom.interior_cells()) seeds.emplace_back(std::min(beta * dist[c], cap) / 5.0, c);
    std::sort(seeds.begin(), seeds.end(), [](auto const& a, auto const& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    if (first) {
        if (!dom.interior(*first)) throw InputError("distinguished cover point is not interior");
        auto it = std::find_if(seeds.begin(), seeds.end(), [&](auto const& s) { return s.second == *first; });
        std::rotate(seeds.begin(), it, it + 1);
    }
    double const lmax = seeds.empty() ? 0.0 : std::max_element(seeds.begin(), seeds.end())->first;
    double const bucket = std::max(lmax, dom.h());
    auto const key = [&](Point const& p) {
        return std::pair<long, long>{static_cast<long>(std::floor(p[0] / bucket)), static_cast<long>(std::floor(p[1] / bucket))};
    };
    std::map<std::pair<long, long>, std::vector<std::size_t>> grid;
    std::vector<Cube> seedsel;
    for (auto const& [l, c] : seeds) {
        Point const y = dom.center(c);
        auto const [bx, by] = key(y);
        bool clash = false;
        for (long ox = -1; ox <= 1 && !clash; ++ox)
            for (long oy = -1; oy <= 1 && !clash; ++oy) {
                auto it = grid.find({bx + ox, by + oy});
                if (it == grid.end()) continue;
                for (std::size_t s : it->second)
                    if (inf_distance(seedsel[s].center, y, dim) < 0.5 * (seedsel[s].side + l)) {
                        clash = true;
                        break;
                    }
            }
        if (clash) continue;
        grid[{bx, by}].push_back(seedsel.size());
        seedsel.push_back({y, l});
    }
    SpatialCover cover;
    cover.cubes.reserve(seedsel.size());
    for (auto const& q : seedsel) cover.cubes.push_back({q.center, 5.0 * q.side});

    // Overlap statistics by direct counting.
    std::vector<std::size_t> count(dom.cell_count(), 0);
    double const h = dom.h();
    for (auto const& q : cover.cubes) {
        auto const lo = [&](int a) {
            return static_cast<std::ptrdiff_t>(std::floor((q.center[static_cast<std::size_t>(a)] - 0.5 * q.side - dom.origin()[static_cast<std::size_t>(a)]) / h)) - 1;
        };
        auto const hi = [&](int a) {
            return static_cast<std::ptrdiff_t>(std::ceil((q.center[static_cast<std::size_t>(a)] + 0.5 * q.side - dom.origin()[static_cast<std::size_t>(a)]) / h)) + 1;
        };
        std::ptrdiff_t const y0 = dim == 1 ? 0 : lo(1), y1 = dim == 1 ? 0 : hi(1);
        for (std::ptrdiff_t jy = y0; jy <= y1; ++jy)
            for (std::ptrdiff_t jx = lo(0); jx <= hi(0); ++jx) {
                if (!dom.interior(jx, jy)) continue;
                std::size_t const cell = dom.index(static_cast<std::size_t>(jx), static_cast<std::size_t>(jy));
                if (cube_contains(q, dom.center(cell), dim)) ++count[cell];
            }
    }
    double sum = 0.0;
    for (std::size_t c : dom.interior_cells()) {
        cover.max_overlap = std::max(cover.max_overlap, count[c]);
        if (count[c] == 0) ++cover.uncovered;
        sum += static_cast<double>(count[c]);
    }
    cover.mean_overlap = sum / static_cast<double>(dom.interior_cells().size());
    return cover;
}

}  // namespace pbmo
