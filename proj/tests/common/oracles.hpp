#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include <Eigen/Dense>

#include "hthmix/gig.hpp"
#include "hthmix/hyperbolic.hpp"
#include "hthmix/trunc_moments.hpp"

namespace oracle {

struct MomentEstimate {
    double accept_rate = 0.0;
    double accept_se = 0.0;
    Eigen::VectorXd mean, mean_se;
    Eigen::MatrixXd second, second_se;
    long kept = 0;
};

// Rejection Monte Carlo for the symmetric hyperbolic law restricted to y >= lower:
// Y = mu + sqrt(W) L Z with W ~ GIG(omega, omega, index).
inline MomentEstimate th_rejection(const hth::ThParams& p, long draws, std::uint64_t seed) {
    const Eigen::Index q = p.mu.size();
    const Eigen::VectorXd lo = p.bounds();
    const Eigen::MatrixXd l = p.sigma.llt().matrixL();
    hth::GigSampler gig({p.omega, p.omega, p.index});
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(q), s1sq = Eigen::VectorXd::Zero(q), zz(q);
    Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(q, q), s2sq = Eigen::MatrixXd::Zero(q, q);
    long kept = 0;
    for (long i = 0; i < draws; ++i) {
        const double w = gig(rng);
        for (Eigen::Index k = 0; k < q; ++k) zz(k) = z(rng);
        const Eigen::VectorXd y = p.mu + std::sqrt(w) * (l * zz);
        if (((y - lo).array() < 0.0).any()) continue;
        ++kept;
        s1 += y;
        s1sq += y.cwiseProduct(y);
        const Eigen::MatrixXd yy = y * y.transpose();
        s2 += yy;
        s2sq += yy.cwiseProduct(yy);
    }
    MomentEstimate out;
    out.kept = kept;
    const double n = static_cast<double>(draws), m = static_cast<double>(kept);
    out.accept_rate = m / n;
    out.accept_se = std::sqrt(out.accept_rate * (1.0 - out.accept_rate) / n);
    out.mean = s1 / m;
    out.mean_se = ((s1sq / m - out.mean.cwiseProduct(out.mean)) / m).cwiseMax(0.0).cwiseSqrt();
    out.second = s2 / m;
    out.second_se = ((s2sq / m - out.second.cwiseProduct(out.second)) / m).cwiseMax(0.0).cwiseSqrt();
    return out;
}

inline Eigen::MatrixXd random_pd(int p, std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    Eigen::MatrixXd a(p, p);
    for (int i = 0; i < p * p; ++i) a.data()[i] = z(rng);
    return a * a.transpose() / p + 0.3 * Eigen::MatrixXd::Identity(p, p);
}

inline hth::HthParams random_params(int p, int q, std::mt19937_64& rng) {
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

struct PosteriorMoments {
    double log_density;
    double a, b, c, d, e;  // E[W], E[1/W], E[ln W], E[U/W], E[U^2/W] given x
};

// Direct quadrature of the joint density of (X, U, W) for one skewing
// dimension: adaptive Gauss-Kronrod in t = ln w around composite
// Gauss-Legendre in u >= 0.
inline PosteriorMoments posterior_quadrature(const Eigen::VectorXd& x, const hth::HthParams& par) {
    const double p = static_cast<double>(par.p());
    const Eigen::MatrixXd om = par.omega_mat();
    const Eigen::LLT<Eigen::MatrixXd> llt(om);
    const Eigen::VectorXd diff = x - par.mu;
    const double delta = diff.dot(llt.solve(diff));
    const double r = par.lambda_mat.col(0).dot(llt.solve(diff));
    const double dl = 1.0 - par.lambda_mat.col(0).dot(llt.solve(par.lambda_mat.col(0)));
    const double lam = par.index, w0 = par.omega;
    const double rneg = std::min(r, 0.0);

    // ln of the w-part and the three u-integrals, with exp(-rneg^2 / (2 w dl)) moved out of the latter.
    auto inner = [&](double w, double* m) {
        const double s = std::sqrt(w * dl);
        double lo = 0.0, hi;
        if (r > 0.0) {
            lo = std::max(0.0, r - 14.0 * s);
            hi = r + 14.0 * s;
        } else {
            hi = std::min(14.0 * s, 40.0 * s * s / std::max(-r, 1e-300));
        }
        m[0] = m[1] = m[2] = 0.0;
        const int panels = 40;
        const double h = (hi - lo) / panels;
        using gl = boost::math::quadrature::gauss<double, 20>;
        for (int k = 0; k < panels; ++k) {
            const double c = lo + (k + 0.5) * h;
            auto add = [&](double node, double wt) {
                const double u = c + 0.5 * h * node;
                const double f = wt * 0.5 * h * std::exp(-((u - r) * (u - r) - rneg * rneg) / (2.0 * w * dl));
                m[0] += f;
                m[1] += f * u;
                m[2] += f * u * u;
            };
            const auto& ab = gl::abscissa();
            const auto& wt = gl::weights();
            for (std::size_t j = 0; j < ab.size(); ++j) {
                add(ab[j], wt[j]);
                if (ab[j] != 0.0) add(-ab[j], wt[j]);
            }
        }
    };
    auto log_w_part = [&](double t) {
        const double w = std::exp(t);
        return (lam - (p + 1.0) / 2.0 - 1.0) * t + t - (w0 * w * w + w0 + delta + rneg * rneg / dl) / (2.0 * w);
    };
    double peak = -std::numeric_limits<double>::infinity(), tpk = 0.0;
    for (int k = 0; k <= 4000; ++k) {
        const double t = -40.0 + 0.02 * k;
        double m[3];
        inner(std::exp(t), m);
        const double v = log_w_part(t) + std::log(m[0]);
        if (v > peak) {
            peak = v;
            tpk = t;
        }
    }
    double tlo = tpk, thi = tpk;
    auto above = [&](double t) {
        double m[3];
        inner(std::exp(t), m);
        return log_w_part(t) + std::log(m[0]) > peak - 60.0;
    };
    while (tlo > -60.0 && above(tlo)) tlo -= 0.25;
    while (thi < 60.0 && above(thi)) thi += 0.25;

    std::vector<double> acc(6);
    for (int k = 0; k < 6; ++k) {
        auto f = [&](double t) {
            const double w = std::exp(t);
            double m[3];
            inner(w, m);
            const double base = std::exp(log_w_part(t) - peak);
            switch (k) {
                case 0: return base * m[0];
                case 1: return base * m[0] * w;
                case 2: return base * m[0] / w;
                case 3: return base * m[0] * t;
                case 4: return base * m[1] / w;
                default: return base * m[2] / w;
            }
        };
        acc[static_cast<std::size_t>(k)] =
            boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, tlo, thi, 20, 1e-13);
    }
    const double log_norm = -((p + 1.0) / 2.0) * std::log(std::numbers::pi) - ((p - 1.0) / 2.0 + 1.0) * std::numbers::ln2 -
                            std::log(boost::math::cyl_bessel_k(lam, w0)) -
                            0.5 * std::log(par.sigma.determinant());
    PosteriorMoments out;
    out.log_density = log_norm + peak + std::log(acc[0]);
    out.a = acc[1] / acc[0];
    out.b = acc[2] / acc[0];
    out.c = acc[3] / acc[0];
    out.d = acc[4] / acc[0];
    out.e = acc[5] / acc[0];
    return out;
}

}  // namespace oracle
