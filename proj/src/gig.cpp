#include "hthmix/gig.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "hthmix/specfun.hpp"

namespace hth {

namespace {

// Mode of x^(a-1) exp(-omega (x + 1/x) / 2).
double kernel_mode(double a, double omega) {
    const double b = a - 1.0;
    const double root = std::sqrt(b * b + omega * omega);
    return b >= 0.0 ? (b + root) / omega : omega / (root - b);
}

template <class F>
double bisect(F&& fn, double lo, double hi) {
    for (int i = 0; i < 200 && hi - lo > 1e-14 * (1.0 + std::abs(hi)); ++i) {
        const double mid = 0.5 * (lo + hi);
        if (fn(mid) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double unit(std::mt19937_64& rng) {
    // Uniform on (0, 1].
    return 1.0 - std::generate_canonical<double, 53>(rng);
}

}  // namespace

void GigParams::validate() const {
    if (!(psi > 0.0) || !(chi > 0.0) || !std::isfinite(psi) || !std::isfinite(chi) || !std::isfinite(lambda)) {
        throw std::invalid_argument("GigParams: require psi > 0, chi > 0, finite lambda");
    }
}

double gig_logpdf(double w, const GigParams& p) {
    p.validate();
    if (!(w > 0.0)) throw std::domain_error("gig_logpdf: w must be positive");
    const double omega = std::sqrt(p.psi * p.chi);
    return 0.5 * p.lambda * std::log(p.psi / p.chi) + (p.lambda - 1.0) * std::log(w) - std::numbers::ln2 -
           log_bessel_k(p.lambda, omega) - 0.5 * (p.psi * w + p.chi / w);
}

GigMoments gig_moments(const GigParams& p) {
    p.validate();
    const double omega = std::sqrt(p.psi * p.chi);
    const double eta = std::sqrt(p.chi / p.psi);
    GigMoments m;
    m.mean = eta * bessel_k_ratio(p.lambda, omega);
    m.inv_mean = 1.0 / (eta * bessel_k_ratio(p.lambda - 1.0, omega));
    m.log_mean = std::log(eta) + dlog_bessel_k_dorder(p.lambda, omega);
    return m;
}

GigSampler::GigSampler(const GigParams& p) {
    p.validate();
    lambda_ = std::abs(p.lambda);
    omega_ = std::sqrt(p.psi * p.chi);
    alpha_ = std::sqrt(p.chi / p.psi);
    invert_ = p.lambda < 0.0;

    const double l = lambda_, w = omega_;
    if (l > 2.0 || w > 3.0) {
        method_ = Method::rou_shift;
    } else if (l >= 1.0 - 2.25 * w * w || w > 0.2) {
        method_ = Method::rou_plain;
    } else {
        method_ = Method::piecewise;
    }

    if (method_ == Method::rou_plain || method_ == Method::rou_shift) {
        xm_ = kernel_mode(l, w);
        nc_ = log_g(xm_);
    }
    if (method_ == Method::rou_plain) {
        const double ym = kernel_mode(l + 2.0, w);
        umin_ = 0.0;
        umax_ = ym * std::exp(0.5 * (log_g(ym) - nc_));
    } else if (method_ == Method::rou_shift) {
        // Extremes of (x - xm) sqrt(g(x) / g(xm)) on either side of the mode.
        auto slope = [&](double x) {
            return 1.0 / (x - xm_) + 0.5 * ((l - 1.0) / x - 0.5 * w + 0.5 * w / (x * x));
        };
        double hi = 2.0 * xm_ + 1.0;
        while (slope(hi) > 0.0) hi *= 2.0;
        const double xp = bisect(slope, xm_ * (1.0 + 1e-12) + 1e-300, hi);
        double lo = 0.5 * xm_;
        while (slope(lo) <= 0.0) lo *= 0.5;
        const double xn = bisect(slope, lo, xm_ * (1.0 - 1e-12));
        umax_ = (xp - xm_) * std::exp(0.5 * (log_g(xp) - nc_));
        umin_ = (xn - xm_) * std::exp(0.5 * (log_g(xn) - nc_));
    } else {
        const double mode = kernel_mode(l, w);
        x0_ = w / (1.0 - l);
        xs_ = std::max(x0_, 2.0 / w);
        k1_ = std::exp(log_g(mode));
        a1_ = k1_ * x0_;
        if (x0_ < 2.0 / w) {
            k2_ = std::exp(-w);
            a2_ = l == 0.0 ? k2_ * std::log(2.0 / (w * w)) : k2_ / l * (std::pow(2.0 / w, l) - std::pow(x0_, l));
        }
        k3_ = std::pow(xs_, l - 1.0);
        a3_ = 2.0 * k3_ * std::exp(-xs_ * w / 2.0) / w;
    }
}

double GigSampler::log_g(double x) const {
    return (lambda_ - 1.0) * std::log(x) - 0.5 * omega_ * (x + 1.0 / x);
}

double GigSampler::draw_standard(std::mt19937_64& rng) const {
    switch (method_) {
        case Method::rou_plain:
        case Method::rou_shift: {
            const double shift = method_ == Method::rou_shift ? xm_ : 0.0;
            for (;;) {
                const double u = umin_ + (umax_ - umin_) * unit(rng);
                const double v = unit(rng);
                const double x = u / v + shift;
                if (x <= 0.0) continue;
                if (2.0 * std::log(v) <= log_g(x) - nc_) return x;
            }
        }
        case Method::piecewise: {
            const double l = lambda_, w = omega_;
            const double total = a1_ + a2_ + a3_;
            for (;;) {
                const double u = unit(rng);
                double v = total * unit(rng);
                double x, hat;
                if (v <= a1_) {
                    x = x0_ * v / a1_;
                    hat = k1_;
                } else if (v <= a1_ + a2_) {
                    v -= a1_;
                    x = l == 0.0 ? w * std::exp(v * std::exp(w)) : std::pow(std::pow(x0_, l) + v * l / k2_, 1.0 / l);
                    hat = k2_ * std::pow(x, l - 1.0);
                } else {
                    v -= a1_ + a2_;
                    x = -2.0 / w * std::log(std::exp(-xs_ * w / 2.0) - v * w / (2.0 * k3_));
                    hat = k3_ * std::exp(-x * w / 2.0);
                }
                if (!(x > 0.0) || !std::isfinite(x)) continue;
                if (std::log(u * hat) <= log_g(x)) return x;
            }
        }
    }
    return 0.0;
}

double GigSampler::operator()(std::mt19937_64& rng) const {
    double x = draw_standard(rng);
    if (invert_) x = 1.0 / x;
    return alpha_ * x;
}

std::vector<double> gig_sample(const GigParams& p, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("gig_sample: n must be >= 1");
    const GigSampler sampler(p);
    std::mt19937_64 rng(seed);
    std::vector<double> out(n);
    for (auto& x : out) x = sampler(rng);
    return out;
}

}  // namespace hth
