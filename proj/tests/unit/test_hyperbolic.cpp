#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hthmix/contour.hpp"
#include "hthmix/gig.hpp"
#include "hthmix/hyperbolic.hpp"

namespace {

Eigen::MatrixXd random_pd(int p, std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    Eigen::MatrixXd a(p, p);
    for (int i = 0; i < p * p; ++i) a.data()[i] = z(rng);
    return a * a.transpose() / p + 0.3 * Eigen::MatrixXd::Identity(p, p);
}

hth::HthParams random_params(int p, int q, std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> u(0.5, 3.0), l(-2.0, 2.0);
    hth::HthParams par;
    par.mu = Eigen::VectorXd(p);
    for (int i = 0; i < p; ++i) par.mu(i) = z(rng);
    par.sigma = random_pd(p, rng);
    par.lambda_mat = Eigen::MatrixXd(p, q);
    for (int i = 0; i < p * q; ++i) par.lambda_mat.data()[i] = 1.5 * z(rng);
    par.index = l(rng);
    par.omega = u(rng);
    return par;
}

}  // namespace

TEST_CASE("symmetric density at its centre") {
    Eigen::MatrixXd s(2, 2);
    s << 2.0, 0.4, 0.4, 1.0;
    const Eigen::Vector2d mu(0.3, -1.0);
    const double lam = 0.7, om = 1.8;
    const double expected = hth::log_bessel_k(lam - 1.0, om) -
                            (std::log(2 * std::numbers::pi) + 0.5 * std::log(s.determinant()) + hth::log_bessel_k(lam, om));
    CHECK(hth::sym_hyperbolic_logpdf(mu, mu, s, lam, om) == doctest::Approx(expected).epsilon(1e-12));
    const Eigen::Vector2d v(0.8, -2.1);
    CHECK(hth::sym_hyperbolic_logpdf(mu + v, mu, s, lam, om) ==
          doctest::Approx(hth::sym_hyperbolic_logpdf(mu - v, mu, s, lam, om)).epsilon(1e-13));
}

TEST_CASE("univariate symmetric density integrates to one") {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(1);
    const Eigen::MatrixXd s = Eigen::MatrixXd::Identity(1, 1);
    auto f = [&](double x) { return std::exp(hth::sym_hyperbolic_logpdf(Eigen::VectorXd::Constant(1, x), mu, s, 1.0, 2.0)); };
    CHECK(boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, -30.0, 30.0, 15, 1e-12) ==
          doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("H_q basic values") {
    const Eigen::MatrixXd i1 = Eigen::MatrixXd::Identity(1, 1);
    for (double lam : {-1.5, 0.0, 2.0}) {
        CHECK(hth::sym_hyperbolic_cdf(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), i1, lam, 1.3) ==
              doctest::Approx(0.5).epsilon(1e-10));
    }
    const Eigen::MatrixXd i2 = Eigen::MatrixXd::Identity(2, 2);
    CHECK(hth::sym_hyperbolic_cdf(Eigen::Vector2d(60.0, 60.0), Eigen::Vector2d::Zero(), i2, 1.0, 2.0) ==
          doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("H_2 matches the GIG Monte Carlo average") {
    const Eigen::Vector2d pt(0.5, -0.3);
    const Eigen::MatrixXd i2 = Eigen::MatrixXd::Identity(2, 2);
    const auto ws = hth::gig_sample({2.0, 2.0, 1.0}, 1000000, 11);
    double s = 0.0, s2 = 0.0;
    for (double w : ws) {
        const double v = hth::norm_cdf(pt(0) / std::sqrt(w)) * hth::norm_cdf(pt(1) / std::sqrt(w));
        s += v;
        s2 += v * v;
    }
    const double n = static_cast<double>(ws.size());
    const double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
    const double h = hth::sym_hyperbolic_cdf(pt, Eigen::Vector2d::Zero(), i2, 1.0, 2.0);
    CHECK(std::abs(h - mean) < 3 * se);
}

TEST_CASE("skew-normal density") {
    std::mt19937_64 rng(2);
    const Eigen::MatrixXd s = random_pd(3, rng);
    const Eigen::Vector3d mu(0.1, 0.2, -0.4), y(1.0, -0.5, 0.3);
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(3, 2);
    const double lognorm = -0.5 * (y - mu).dot(s.llt().solve(y - mu)) - 1.5 * std::log(2 * std::numbers::pi) -
                           0.5 * std::log(s.determinant());
    CHECK(hth::cfusn_logpdf(y, mu, s, zero) == doctest::Approx(lognorm).epsilon(1e-12));
    Eigen::MatrixXd lam(3, 2);
    lam << 1.0, -0.3, 0.5, 2.0, -1.0, 0.2;
    const Eigen::Vector3d v(0.4, 0.9, -1.1);
    CHECK(hth::cfusn_logpdf(mu + v, mu, s, lam) == doctest::Approx(hth::cfusn_logpdf(mu - v, mu, s, -lam)).epsilon(1e-10));

    const Eigen::VectorXd m1 = Eigen::VectorXd::Zero(1);
    const Eigen::MatrixXd s1 = Eigen::MatrixXd::Identity(1, 1), l1 = Eigen::MatrixXd::Constant(1, 1, 2.0);
    auto f = [&](double x) { return std::exp(hth::cfusn_logpdf(Eigen::VectorXd::Constant(1, x), m1, s1, l1)); };
    CHECK(boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, -30.0, 30.0, 15, 1e-12) ==
          doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("zero skewness reduces to the symmetric density") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z;
    for (int rep = 0; rep < 5; ++rep) {
        auto par = random_params(3, 2, rng);
        par.lambda_mat.setZero();
        for (int k = 0; k < 20; ++k) {
            Eigen::Vector3d x = par.mu + Eigen::Vector3d(z(rng), z(rng), z(rng)) * 2.0;
            CHECK(hth::hth_logpdf(x, par) ==
                  doctest::Approx(hth::sym_hyperbolic_logpdf(x, par.mu, par.sigma, par.index, par.omega)).epsilon(1e-9));
        }
    }
}

TEST_CASE("skewness column permutation leaves the density unchanged") {
    std::mt19937_64 rng(4);
    auto par = random_params(3, 3, rng);
    auto perm = par;
    perm.lambda_mat.col(0) = par.lambda_mat.col(2);
    perm.lambda_mat.col(2) = par.lambda_mat.col(0);
    perm.lambda_mat.col(1) = par.lambda_mat.col(1);
    const Eigen::Vector3d x(0.3, -0.2, 1.0);
    CHECK(hth::hth_logpdf(x, par) == doctest::Approx(hth::hth_logpdf(x, perm)).epsilon(1e-9));
}

TEST_CASE("HTH density normalizes on a 2-D grid") {
    hth::HthParams par;
    par.mu = Eigen::Vector2d::Zero();
    par.sigma = Eigen::Matrix2d::Identity();
    par.lambda_mat = Eigen::MatrixXd(2, 1);
    par.lambda_mat << 1.0, 0.0;
    par.index = 1.0;
    par.omega = 2.0;
    const hth::HthDerived d(par);
    const int n = 241;
    const double lo = -15.0, h = 30.0 / (n - 1);
    double sum = 0.0;
    Eigen::Vector2d x;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            x << lo + i * h, lo + j * h;
            sum += std::exp(hth::hth_logpdf(x, d, {}, {}));
        }
    }
    CHECK(sum * h * h == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("appendix parameters give a positive finite density on a grid") {
    const auto par = hth::appendix_params(false, 0.0);
    const hth::HthDerived d(par);
    Eigen::Vector2d x;
    bool ok = true;
    for (int i = 0; i < 50; ++i) {
        for (int j = 0; j < 50; ++j) {
            x << -10.0 + 22.0 * i / 49.0, -10.0 + 22.0 * j / 49.0;
            const double v = std::exp(hth::hth_logpdf(x, d, {}, {}));
            ok = ok && std::isfinite(v) && v > 0.0;
        }
    }
    CHECK(ok);
}

TEST_CASE("sample mean follows the fractional-moment formula") {
    std::mt19937_64 rng(6);
    for (int rep = 0; rep < 4; ++rep) {
        const auto par = random_params(2, rep % 2 + 1, rng);
        const int n = 100000;
        const Eigen::MatrixXd xs = hth::hth_sample(par, n, 100 + rep);
        const double esw = std::exp(hth::log_bessel_k(par.index + 0.5, par.omega) - hth::log_bessel_k(par.index, par.omega));
        const Eigen::VectorXd expected =
            par.mu + esw * std::sqrt(2.0 / std::numbers::pi) * par.lambda_mat * Eigen::VectorXd::Ones(par.q());
        const Eigen::VectorXd mean = xs.colwise().mean().transpose();
        const Eigen::MatrixXd centred = xs.rowwise() - mean.transpose();
        const Eigen::VectorXd se = (centred.array().square().colwise().sum() / (n - 1.0) / n).sqrt().transpose();
        for (int k = 0; k < 2; ++k) CHECK(std::abs(mean(k) - expected(k)) < 3.5 * se(k));
        const Eigen::MatrixXd cov = centred.transpose() * centred / (n - 1.0);
        CHECK(cov.llt().info() == Eigen::Success);
    }
}

TEST_CASE("posterior mixing density shape") {
    hth::HthParams par;
    par.mu = Eigen::Vector2d(0.5, 0.0);
    par.sigma = Eigen::Matrix2d::Identity();
    par.lambda_mat = Eigen::MatrixXd::Zero(2, 1);
    par.index = 0.8;
    par.omega = 1.5;
    const Eigen::Vector2d x(1.0, 2.0);
    const double delta = (x - par.mu).squaredNorm();
    const hth::GigParams post{par.omega, par.omega + delta, par.index - 1.0};
    const double off = hth::posterior_w_logdensity_unnorm(1.0, x, par) - hth::gig_logpdf(1.0, post);
    for (double w : {0.05, 0.7, 4.0, 30.0}) {
        CHECK(hth::posterior_w_logdensity_unnorm(w, x, par) - hth::gig_logpdf(w, post) == doctest::Approx(off).epsilon(1e-10));
    }
    CHECK(hth::posterior_w_logdensity_unnorm(1e-6, x, par) < -1e5);
    CHECK(hth::posterior_w_logdensity_unnorm(1e6, x, par) < -1e5);
    CHECK_THROWS_AS(hth::posterior_w_logdensity_unnorm(0.0, x, par), std::domain_error);
}

TEST_CASE("parameter validation and canonical order") {
    hth::HthParams par;
    par.mu = Eigen::Vector2d::Zero();
    par.sigma = Eigen::Matrix2d::Identity();
    par.lambda_mat = Eigen::MatrixXd(2, 2);
    par.lambda_mat << 0.1, 3.0, 0.2, 1.0;
    par.canonicalize();
    CHECK(par.lambda_mat(0, 0) == 3.0);
    auto twice = par;
    twice.canonicalize();
    CHECK(twice.lambda_mat == par.lambda_mat);
    par.sigma(0, 1) = par.sigma(1, 0) = 2.0;
    CHECK_THROWS_AS(par.validate(), std::invalid_argument);
}
