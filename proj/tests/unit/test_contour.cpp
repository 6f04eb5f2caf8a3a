#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "hthmix/contour.hpp"

namespace {

Eigen::Matrix2d box(double lo, double hi) {
    Eigen::Matrix2d b;
    b << lo, hi, lo, hi;
    return b;
}

double riemann_mass(const hth::ContourGrid& g) {
    const double h1 = g.x1[1] - g.x1[0], h2 = g.x2[1] - g.x2[0];
    return g.density.sum() * h1 * h2;
}

}  // namespace

TEST_CASE("grid validation") {
    auto par = hth::appendix_params(false, 1.0);
    CHECK_THROWS_AS(hth::contour_grid(par, box(-1, 1), 9), std::invalid_argument);
    CHECK_THROWS_AS(hth::contour_grid(par, box(1, -1), 20), std::invalid_argument);
    par.mu = Eigen::Vector3d::Zero();
    par.sigma = Eigen::Matrix3d::Identity();
    par.lambda_mat = Eigen::Vector3d::Ones();
    CHECK_THROWS_AS(hth::contour_grid(par, box(-1, 1), 20), std::invalid_argument);
}

TEST_CASE("appendix parameter grids are finite and positive") {
    for (bool multi : {false, true}) {
        for (int lam = -2; lam <= 2; ++lam) {
            const auto g = hth::contour_grid(hth::appendix_params(multi, lam), box(-10, 12), 40);
            CHECK(g.density.allFinite());
            CHECK(g.density.minCoeff() > 0.0);
        }
    }
}

TEST_CASE("symmetric grids are mirror images about the centre") {
    auto par = hth::appendix_params(false, 0.5);
    par.lambda_mat.setZero();
    Eigen::Matrix2d b;
    b << par.mu(0) - 6, par.mu(0) + 6, par.mu(1) - 6, par.mu(1) + 6;
    const auto g = hth::contour_grid(par, b, 41);
    const Eigen::Index n = g.density.rows();
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            worst = std::max(worst, std::abs(g.density(i, j) - g.density(n - 1 - i, n - 1 - j)));
        }
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("wide grids capture the mass") {
    const auto par = hth::appendix_params(false, 1.0);
    const Eigen::MatrixXd om = par.omega_mat();
    Eigen::Matrix2d b;
    for (int k = 0; k < 2; ++k) {
        const double s = std::sqrt(om(k, k));
        b(k, 0) = par.mu(k) - 12.0 * s;
        b(k, 1) = par.mu(k) + 12.0 * s;
    }
    const auto g = hth::contour_grid(par, b, 300);
    const double m = riemann_mass(g);
    CHECK(m <= 1.0 + 1e-6);
    CHECK(m >= 0.99);
}

TEST_CASE("csv output") {
    const auto g = hth::contour_grid(hth::appendix_params(true, 1.0), box(-2, 3), 10);
    const auto path = (std::filesystem::temp_directory_path() / "hthmix_contour_test.csv").string();
    hth::write_contour_csv(g, path);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "x1,x2,density");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 100);
}

TEST_CASE("elliptical level sets are convex") {
    auto par = hth::appendix_params(false, 1.0);
    par.lambda_mat.setZero();
    const auto rep = hth::quasiconcavity_check(hth::contour_grid(par, box(-8, 10), 80), 10);
    CHECK(rep.levels.size() == 10);
    CHECK(rep.total_violations() == 0);
    for (std::size_t k = 1; k < rep.levels.size(); ++k) CHECK(rep.levels[k].cells <= rep.levels[k - 1].cells);
}

TEST_CASE("appendix level sets are convex") {
    for (bool multi : {false, true}) {
        for (int lam = -2; lam <= 2; ++lam) {
            CAPTURE(multi);
            CAPTURE(lam);
            const auto g = hth::contour_grid(hth::appendix_params(multi, lam), box(-10, 12), 70);
            CHECK(hth::quasiconcavity_check(g, 10).total_violations() == 0);
        }
    }
}

TEST_CASE("strongly heavy-tailed single skewing dimension is quasi-concave") {
    const auto g = hth::contour_grid(hth::appendix_params(false, -2.0), box(-10, 12), 70);
    CHECK(hth::quasiconcavity_check(g, 10).total_violations() == 0);
}

TEST_CASE("two separated bumps are detected") {
    hth::ContourGrid g;
    const int n = 60;
    for (int k = 0; k < n; ++k) {
        g.x1.push_back(-6.0 + 12.0 * k / (n - 1));
        g.x2.push_back(-6.0 + 12.0 * k / (n - 1));
    }
    g.density.resize(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double a = g.x1[static_cast<std::size_t>(i)], b = g.x2[static_cast<std::size_t>(j)];
            g.density(i, j) = std::exp(-0.5 * ((a - 3) * (a - 3) + b * b)) + std::exp(-0.5 * ((a + 3) * (a + 3) + b * b));
        }
    }
    CHECK(hth::quasiconcavity_check(g, 10).total_violations() > 0);
}
