#pragma once

#include <cmath>
#include <vector>

#include "west/autodiff.hpp"
#include "west/geometry.hpp"
#include "west/util.hpp"

namespace testsupport {

/// Jacobi rotation eigensolver for symmetric matrices; independent oracle for
/// spectrum checks at test scale.
inline std::vector<double> symmetric_eigenvalues(west::Tensor m) {
    const int n = m.rows;
    for (int sweep = 0; sweep < 200; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += m.at(i, j) * m.at(i, j);
        if (off < 1e-26) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::fabs(m.at(p, q)) < 1e-300) continue;
                const double theta = (m.at(q, q) - m.at(p, p)) / (2.0 * m.at(p, q));
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double mkp = m.at(k, p);
                    const double mkq = m.at(k, q);
                    m.at(k, p) = c * mkp - s * mkq;
                    m.at(k, q) = s * mkp + c * mkq;
                }
                for (int k = 0; k < n; ++k) {
                    const double mpk = m.at(p, k);
                    const double mqk = m.at(q, k);
                    m.at(p, k) = c * mpk - s * mqk;
                    m.at(q, k) = s * mpk + c * mqk;
                }
            }
        }
    }
    std::vector<double> eig;
    for (int i = 0; i < n; ++i) eig.push_back(m.at(i, i));
    return eig;
}

/// 2x2 grid of unit squares tiling [0,2]^2; indices row-major from the origin.
inline std::vector<west::Region> unit_grid_regions() {
    using west::Point;
    auto square = [](int idx, double x0, double y0) {
        return west::make_region(idx, Point{x0 + 0.5, y0 + 0.5},
                                 {Point{x0, y0}, Point{x0 + 1, y0}, Point{x0 + 1, y0 + 1},
                                  Point{x0, y0 + 1}});
    };
    return {square(0, 0, 0), square(1, 1, 0), square(2, 0, 1), square(3, 1, 1)};
}

/// [0,4]x[0,2] split into two 2x2 rectangles at x=2.
inline std::vector<west::Region> two_rect_regions() {
    using west::Point;
    return {west::make_region(0, Point{1, 1},
                              {Point{0, 0}, Point{2, 0}, Point{2, 2}, Point{0, 2}}),
            west::make_region(1, Point{3, 1},
                              {Point{2, 0}, Point{4, 0}, Point{4, 2}, Point{2, 2}})};
}

/// Standard normal via Box-Muller on the portable Rng stream.
inline double gauss(west::Rng& rng) {
    const double u1 = rng.uniform();
    const double u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(6.283185307179586 * u2);
}

} // namespace testsupport
