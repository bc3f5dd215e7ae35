#ifndef VPPSCHED_NSGA2_HPP
#define VPPSCHED_NSGA2_HPP

// Two-objective NSGA-II machinery (both objectives maximised): fast
// nondominated sorting, crowding distance, truncation selection and the
// 2-D hypervolume used as a progress indicator.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

namespace vppsched {

using Objectives = std::array<double, 2>;

/// a dominates b: no worse in every objective and strictly better in one.
inline bool dominates(const Objectives& a, const Objectives& b)
{
    bool strictly = false;
    for (std::size_t m = 0; m < a.size(); ++m) {
        if (a[m] < b[m])
            return false;
        if (a[m] > b[m])
            strictly = true;
    }
    return strictly;
}

/// Deb's O(M N^2) sort. Fronts hold indices into `points`, best front first,
/// members of each front in ascending index order.
inline std::vector<std::vector<std::size_t>> fast_nondominated_sort(std::span<const Objectives> points)
{
    const std::size_t n = points.size();
    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<std::size_t> dom_count(n, 0);
    std::vector<std::vector<std::size_t>> fronts;
    std::vector<std::size_t> current;

    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = 0; q < n; ++q) {
            if (p == q)
                continue;
            if (dominates(points[p], points[q]))
                dominated[p].push_back(q);
            else if (dominates(points[q], points[p]))
                ++dom_count[p];
        }
        if (dom_count[p] == 0)
            current.push_back(p);
    }
    while (!current.empty()) {
        std::vector<std::size_t> next;
        for (auto p : current)
            for (auto q : dominated[p])
                if (--dom_count[q] == 0)
                    next.push_back(q);
        std::sort(next.begin(), next.end());
        fronts.push_back(std::move(current));
        current = std::move(next);
    }
    return fronts;
}

/// Crowding distance of each member of `front` (same order as `front`).
inline std::vector<double> crowding_distance(std::span<const Objectives> points, std::span<const std::size_t> front)
{
    const std::size_t n = front.size();
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(n, 0.0);
    if (n <= 2) {
        std::fill(dist.begin(), dist.end(), inf);
        return dist;
    }
    std::vector<std::size_t> order(n);
    for (std::size_t m = 0; m < 2; ++m) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return points[front[a]][m] < points[front[b]][m]; });
        const double lo = points[front[order.front()]][m];
        const double hi = points[front[order.back()]][m];
        dist[order.front()] = inf;
        dist[order.back()] = inf;
        const double range = hi - lo;
        if (!(range > 0.0) || !std::isfinite(range))
            continue;
        for (std::size_t k = 1; k + 1 < n; ++k) {
            const double gap = points[front[order[k + 1]]][m] - points[front[order[k - 1]]][m];
            if (std::isfinite(gap))
                dist[order[k]] += gap / range;
        }
    }
    return dist;
}

/// Indices of the `mu` survivors, best first: whole fronts in order, the
/// splitting front by descending crowding distance.
inline std::vector<std::size_t> nsga2_select(std::span<const Objectives> points, std::size_t mu)
{
    std::vector<std::size_t> chosen;
    chosen.reserve(mu);
    for (const auto& front : fast_nondominated_sort(points)) {
        const auto dist = crowding_distance(points, front);
        std::vector<std::size_t> order(front.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] > dist[b]; });
        for (auto k : order) {
            if (chosen.size() == mu)
                return chosen;
            chosen.push_back(front[k]);
        }
    }
    return chosen;
}

/// Area dominated by `points` and bounded below by `reference`.
inline double hypervolume_2d(std::span<const Objectives> points, const Objectives& reference)
{
    std::vector<Objectives> pts;
    for (const auto& p : points)
        if (p[0] > reference[0] && p[1] > reference[1] && std::isfinite(p[0]) && std::isfinite(p[1]))
            pts.push_back(p);
    std::sort(pts.begin(), pts.end(), [](const Objectives& a, const Objectives& b) { return a[0] > b[0]; });
    double volume = 0.0;
    double best_y = reference[1];
    for (const auto& p : pts) {
        if (p[1] > best_y) {
            volume += (p[0] - reference[0]) * (p[1] - best_y);
            best_y = p[1];
        }
    }
    return volume;
}

} // namespace vppsched

#endif
