#include "hthmix/contour.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace hth {

ContourGrid contour_grid(const HthParams& params, const Eigen::Matrix2d& bounds, int resolution,
                         const QuadratureSpec& quad, const MvnSpec& mvn) {
    params.validate();
    if (params.p() != 2) throw std::invalid_argument("contour_grid: parameters must be bivariate (p = 2)");
    if (resolution < 10) throw std::invalid_argument("contour_grid: resolution must be at least 10");
    if (!(bounds(0, 0) < bounds(0, 1)) || !(bounds(1, 0) < bounds(1, 1))) {
        throw std::invalid_argument("contour_grid: each bound needs min < max");
    }
    const HthDerived d(params);
    ContourGrid grid;
    const auto n = static_cast<std::size_t>(resolution);
    grid.x1.resize(n);
    grid.x2.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) / static_cast<double>(n - 1);
        grid.x1[k] = bounds(0, 0) + t * (bounds(0, 1) - bounds(0, 0));
        grid.x2[k] = bounds(1, 0) + t * (bounds(1, 1) - bounds(1, 0));
    }
    grid.density.resize(resolution, resolution);
    Eigen::VectorXd x(2);
    for (int i = 0; i < resolution; ++i) {
        for (int j = 0; j < resolution; ++j) {
            x << grid.x1[static_cast<std::size_t>(i)], grid.x2[static_cast<std::size_t>(j)];
            grid.density(i, j) = std::exp(hth_logpdf(x, d, quad, mvn));
        }
    }
    return grid;
}

void write_contour_csv(const ContourGrid& grid, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_contour_csv: cannot open " + path);
    out << "x1,x2,density\n" << std::setprecision(17);
    for (std::size_t i = 0; i < grid.x1.size(); ++i) {
        for (std::size_t j = 0; j < grid.x2.size(); ++j) {
            out << grid.x1[i] << ',' << grid.x2[j] << ','
                << grid.density(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) << '\n';
        }
    }
}

int ConvexityReport::total_violations() const {
    int s = 0;
    for (const auto& l : levels) s += l.violations;
    return s;
}

namespace {

struct Mask {
    int n1, n2;
    std::vector<char> in;

    bool at(int i, int j) const {
        return i >= 0 && j >= 0 && i < n1 && j < n2 && in[static_cast<std::size_t>(i * n2 + j)];
    }
    bool near(int i, int j) const {
        for (int di = -1; di <= 1; ++di) {
            for (int dj = -1; dj <= 1; ++dj) {
                if (at(i + di, j + dj)) return true;
            }
        }
        return false;
    }
};

// Walk the chord in quarter-cell steps.
bool chord_ok(const Mask& m, int i0, int j0, int i1, int j1) {
    const int steps = 4 * std::max(std::abs(i1 - i0), std::abs(j1 - j0));
    for (int s = 1; s < steps; ++s) {
        const double t = static_cast<double>(s) / steps;
        const int i = static_cast<int>(std::lround(i0 + t * (i1 - i0)));
        const int j = static_cast<int>(std::lround(j0 + t * (j1 - j0)));
        if (!m.at(i, j) && !m.near(i, j)) return false;
    }
    return true;
}

}  // namespace

ConvexityReport quasiconcavity_check(const ContourGrid& grid, int level_count) {
    ConvexityReport rep;
    const int n1 = static_cast<int>(grid.density.rows()), n2 = static_cast<int>(grid.density.cols());
    if (level_count < 1 || n1 == 0 || n2 == 0) return rep;
    const double peak = grid.density.maxCoeff();
    std::vector<double> vals;
    for (Eigen::Index k = 0; k < grid.density.size(); ++k) {
        const double v = grid.density.data()[k];
        if (v >= 1e-6 * peak) vals.push_back(v);
    }
    std::sort(vals.begin(), vals.end());
    for (int l = 1; l <= level_count; ++l) {
        const double pos = static_cast<double>(l) / (level_count + 1) * static_cast<double>(vals.size() - 1);
        const auto lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, vals.size() - 1);
        const double level = vals[lo] + (pos - static_cast<double>(lo)) * (vals[hi] - vals[lo]);

        Mask m{n1, n2, std::vector<char>(static_cast<std::size_t>(n1 * n2), 0)};
        int cells = 0;
        for (int i = 0; i < n1; ++i) {
            for (int j = 0; j < n2; ++j) {
                if (grid.density(i, j) >= level) {
                    m.in[static_cast<std::size_t>(i * n2 + j)] = 1;
                    ++cells;
                }
            }
        }
        std::vector<std::pair<int, int>> edge;
        for (int i = 0; i < n1; ++i) {
            for (int j = 0; j < n2; ++j) {
                if (m.at(i, j) && (!m.at(i - 1, j) || !m.at(i + 1, j) || !m.at(i, j - 1) || !m.at(i, j + 1))) {
                    edge.emplace_back(i, j);
                }
            }
        }
        int violations = 0;
        for (std::size_t a = 0; a < edge.size(); ++a) {
            for (std::size_t b = a + 1; b < edge.size(); ++b) {
                if (!chord_ok(m, edge[a].first, edge[a].second, edge[b].first, edge[b].second)) ++violations;
            }
        }
        rep.levels.push_back({level, cells, violations});
    }
    return rep;
}

HthParams appendix_params(bool multi, double index) {
    HthParams p;
    p.mu = Eigen::Vector2d(1.0, 1.0);
    p.sigma.resize(2, 2);
    p.sigma << 1.5, 0.3, 0.3, 2.0;
    if (multi) {
        p.lambda_mat.resize(2, 2);
        p.lambda_mat << -1.0, 9.0, 3.0, 9.0;
    } else {
        p.lambda_mat.resize(2, 1);
        p.lambda_mat << 9.0, -5.0;
    }
    p.omega = 2.0;
    p.index = index;
    p.canonicalize();
    return p;
}

}  // namespace hth
