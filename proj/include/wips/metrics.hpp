#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "wips/common.hpp"
#include "wips/path.hpp"

namespace wips {

/// Geodesic distance on the circle of length 2 pi.
inline double torus_distance(double x, double y) {
    const double d = std::fabs(wrap_angle(x) - wrap_angle(y));
    return std::min(d, two_pi - d);
}

/// Point of the product space T x R.
struct ProductPoint {
    double x = 0.0;
    double a = 0.0;
};

/// d_{T x R}((x,a),(y,b)) = sqrt(torus(x,y)^2 + (a-b)^2).
inline double product_distance(const ProductPoint& p, const ProductPoint& q) {
    const double dt = torus_distance(p.x, q.x);
    const double da = p.a - q.a;
    return std::sqrt(dt * dt + da * da);
}

namespace detail {

/// Exact minimum-cost assignment (Hungarian algorithm with potentials,
/// O(n^3)); cost is row-major n x n.  Returns col_of_row.
inline std::vector<int> solve_assignment(const std::vector<double>& cost,
                                         int n) {
    const double INF = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0),
        v(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<int> p(static_cast<std::size_t>(n) + 1, 0),
        way(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(n) + 1, INF);
        std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = p[static_cast<std::size_t>(j0)];
            int j1 = 0;
            double delta = INF;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)])
                    continue;
                const double cur =
                    cost[static_cast<std::size_t>(i0 - 1) *
                             static_cast<std::size_t>(n) +
                         static_cast<std::size_t>(j - 1)] -
                    u[static_cast<std::size_t>(i0)] -
                    v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] +=
                        delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> col_of_row(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= n; ++j)
        if (p[static_cast<std::size_t>(j)] != 0)
            col_of_row[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] =
                j - 1;
    return col_of_row;
}

}  // namespace detail

/// Exact 2-Wasserstein distance between equal-weight empirical measures on
/// T x R: sqrt(min over assignments of (1/n) sum d(p_i, q_{sigma(i)})^2).
/// Sample counts must match and stay <= 512 (optimal assignment is exact).
inline double wasserstein2_exact(std::span<const ProductPoint> P,
                                 std::span<const ProductPoint> Q) {
    if (P.size() != Q.size())
        throw DomainError("wasserstein2_exact: sample counts differ");
    if (P.empty())
        throw DomainError("wasserstein2_exact: empty samples");
    if (P.size() > 512)
        throw DomainError("wasserstein2_exact: more than 512 samples");
    const int n = static_cast<int>(P.size());
    std::vector<double> cost(static_cast<std::size_t>(n) *
                             static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double d = product_distance(P[static_cast<std::size_t>(i)],
                                              Q[static_cast<std::size_t>(j)]);
            cost[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
                 static_cast<std::size_t>(j)] = d * d;
        }
    const auto assign = detail::solve_assignment(cost, n);
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
        acc += cost[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
                    static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
    return std::sqrt(acc / static_cast<double>(n));
}

/// Deterministic stride subsampling to at most 512 points, then exact.
inline double wasserstein2_capped(std::vector<ProductPoint> P,
                                  std::vector<ProductPoint> Q) {
    auto thin = [](std::vector<ProductPoint>& v) {
        if (v.size() <= 512)
            return;
        std::vector<ProductPoint> out;
        const std::size_t stride = (v.size() + 511) / 512;
        for (std::size_t i = 0; i < v.size(); i += stride)
            out.push_back(v[i]);
        v = std::move(out);
    };
    thin(P);
    thin(Q);
    const std::size_t n = std::min(P.size(), Q.size());
    P.resize(n);
    Q.resize(n);
    return wasserstein2_exact(P, Q);
}

/// sup over the union mesh of |A(t) - B(t)| for two pairing trajectories.
inline double sup_pairing_gap(const SampledPath& a, const SampledPath& b) {
    if (std::fabs(a.horizon() - b.horizon()) > 1e-9)
        throw DomainError("sup_pairing_gap: horizon mismatch");
    std::vector<double> mesh;
    mesh.reserve(a.size() + b.size());
    std::merge(a.times().begin(), a.times().end(), b.times().begin(),
               b.times().end(), std::back_inserter(mesh));
    mesh.erase(std::unique(mesh.begin(), mesh.end()), mesh.end());
    double sup = 0.0;
    for (double t : mesh)
        sup = std::max(sup, std::fabs(a(t) - b(t)));
    return sup;
}

}  // namespace wips
