#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "hthmix/gig.hpp"

namespace {

// Kolmogorov-Smirnov statistic against a cdf evaluated by direct integration.
double ks_statistic(std::vector<double> xs, const hth::GigParams& p) {
    std::sort(xs.begin(), xs.end());
    boost::math::quadrature::exp_sinh<double> rule;
    auto dens = [&](double w) { return std::exp(hth::gig_logpdf(w, p)); };
    const std::size_t n = xs.size();
    double d = 0.0;
    // Every 50th order statistic.
    for (std::size_t i = 0; i < n; i += 50) {
        const double cdf = 1.0 - rule.integrate(dens, xs[i], std::numeric_limits<double>::infinity());
        const double lo = static_cast<double>(i) / n, hi = static_cast<double>(i + 1) / n;
        d = std::max({d, std::abs(cdf - lo), std::abs(cdf - hi)});
    }
    return d;
}

}  // namespace

TEST_CASE("density integrates to one and moments match quadrature") {
    boost::math::quadrature::exp_sinh<double> rule;
    for (auto p : {hth::GigParams{2.0, 2.0, 0.5}, hth::GigParams{0.3, 4.0, -1.7}, hth::GigParams{5.0, 0.1, 3.0}}) {
        auto dens = [&](double w) { return std::exp(hth::gig_logpdf(w, p)); };
        CHECK(rule.integrate(dens) == doctest::Approx(1.0).epsilon(1e-9));
        const auto m = hth::gig_moments(p);
        CHECK(m.mean == doctest::Approx(rule.integrate([&](double w) { return w * dens(w); })).epsilon(1e-9));
        CHECK(m.inv_mean == doctest::Approx(rule.integrate([&](double w) { return dens(w) / w; })).epsilon(1e-9));
        CHECK(m.log_mean == doctest::Approx(rule.integrate([&](double w) { return std::log(w) * dens(w); })).epsilon(1e-7));
    }
}

TEST_CASE("sample mean within 3 standard errors") {
    const hth::GigParams p{2.0, 2.0, 0.5};
    const auto xs = hth::gig_sample(p, 200000, 42);
    double s = 0.0, s2 = 0.0;
    for (double x : xs) {
        s += x;
        s2 += x * x;
    }
    const double n = static_cast<double>(xs.size());
    const double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
    CHECK(std::abs(mean - 1.5) < 3 * se);
}

TEST_CASE("sampler regimes pass a Kolmogorov-Smirnov check") {
    // Shifted ratio-of-uniforms, plain ratio-of-uniforms, piecewise envelope,
    // and negative index by inversion.
    for (auto p : {hth::GigParams{2.0, 2.0, 3.0}, hth::GigParams{1.0, 1.0, 0.5}, hth::GigParams{0.01, 0.01, 0.1},
                   hth::GigParams{4.0, 1.0, -2.5}, hth::GigParams{30.0, 30.0, 0.0}}) {
        const auto xs = hth::gig_sample(p, 20000, 7);
        // Critical value at the 0.1% level is 1.95 / sqrt(n).
        CHECK(ks_statistic(xs, p) < 1.95 / std::sqrt(20000.0));
    }
}

TEST_CASE("sampling is reproducible and validates parameters") {
    const hth::GigParams p{1.0, 2.0, 0.3};
    CHECK(hth::gig_sample(p, 100, 9) == hth::gig_sample(p, 100, 9));
    CHECK_THROWS(hth::GigParams({0.0, 1.0, 1.0}).validate());
    CHECK_THROWS(hth::GigParams({1.0, -1.0, 1.0}).validate());
}

TEST_CASE("closed-form moment values") {
    for (double w : {0.5, 2.0, 7.0}) {
        CHECK(hth::gig_moments({w, w, 0.5}).inv_mean == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(hth::gig_moments({w, w, 0.0}).log_mean) < 1e-9);
    }
    CHECK(hth::gig_moments({2.0, 2.0, 0.5}).mean == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("reciprocal symmetry and mode") {
    const hth::GigParams p{1.7, 0.4, 1.3}, r{0.4, 1.7, -1.3};
    for (double w : {0.1, 0.9, 3.0}) {
        CHECK(hth::gig_logpdf(w, p) == doctest::Approx(hth::gig_logpdf(1.0 / w, r) - 2.0 * std::log(w)).epsilon(1e-12));
    }
    const double mode = ((p.lambda - 1.0) + std::sqrt((p.lambda - 1.0) * (p.lambda - 1.0) + p.psi * p.chi)) / p.psi;
    const double h = 1e-5;
    CHECK(std::abs(hth::gig_logpdf(mode + h, p) - hth::gig_logpdf(mode - h, p)) / (2 * h) < 1e-6);
    CHECK_THROWS_AS(hth::gig_logpdf(0.0, p), std::domain_error);
}

TEST_CASE("large-sample inverse mean and KS distance") {
    const hth::GigParams p{2.0, 2.0, 0.5};
    const auto xs = hth::gig_sample(p, 200000, 4242);
    double s = 0.0, s2 = 0.0;
    for (double x : xs) {
        s += 1.0 / x;
        s2 += 1.0 / (x * x);
    }
    const double n = static_cast<double>(xs.size());
    const double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
    CHECK(std::abs(mean - 1.0) < 3 * se);
    CHECK(ks_statistic(xs, p) < 0.01);
}
