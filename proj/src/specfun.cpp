#include "hthmix/specfun.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/math/special_functions/erf.hpp>

namespace hth {

namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxTerms = 10'000;

// Coefficients of 1/Gamma(z) = sum_{k>=1} c_k z^k (Abramowitz & Stegun 6.1.34).
constexpr std::array<double, 26> kRecipGamma = {
    1.0,
    0.5772156649015329,
    -0.6558780715202538,
    -0.0420026350340952,
    0.1665386113822915,
    -0.0421977345555443,
    -0.0096219715278770,
    0.0072189432466630,
    -0.0011651675918591,
    -0.0002152416741149,
    0.0001280502823882,
    -0.0000201348547807,
    -0.0000012504934821,
    0.0000011330272320,
    -0.0000002056338417,
    0.0000000061160950,
    0.0000000050020075,
    -0.0000000011812746,
    0.0000000001043427,
    0.0000000000077823,
    -0.0000000000036968,
    0.0000000000005100,
    -0.0000000000000206,
    -0.0000000000000054,
    0.0000000000000014,
    0.0000000000000001,
};

struct GammaTerms {
    double gam1;        // (1/G(1-mu) - 1/G(1+mu)) / (2 mu)
    double gam2;        // (1/G(1-mu) + 1/G(1+mu)) / 2
    double recip_plus;  // 1/G(1+mu)
    double recip_minus; // 1/G(1-mu)
};

// Series evaluation avoids the cancellation in gam1 as mu -> 0.
GammaTerms gamma_terms(double mu) {
    // 1/G(1+z) = sum_k c_k z^(k-1); split into even and odd powers of mu.
    // kRecipGamma[k] multiplies mu^k in 1/G(1+mu).
    double even = 0.0, odd = 0.0;
    const double mu2 = mu * mu;
    double pw = 1.0;
    for (std::size_t k = 0; k + 1 < kRecipGamma.size(); k += 2) {
        even += kRecipGamma[k] * pw;
        odd += kRecipGamma[k + 1] * pw;
        pw *= mu2;
    }
    GammaTerms g;
    g.gam2 = even;
    g.gam1 = -odd;
    g.recip_plus = even + mu * odd;
    g.recip_minus = even - mu * odd;
    return g;
}

struct SeedPair {
    double log_k_mu;  // ln K_mu(x)
    double ratio;     // K_{mu+1}(x) / K_mu(x)
};

// Temme's series, |mu| <= 1/2, 0 < x < 2.
SeedPair temme_series(double mu, double x) {
    const double x2 = 0.5 * x;
    const double pimu = std::numbers::pi * mu;
    const double fact = std::abs(pimu) < kEps ? 1.0 : pimu / std::sin(pimu);
    const double d = -std::log(x2);
    const double e = mu * d;
    const double fact2 = std::abs(e) < kEps ? 1.0 : std::sinh(e) / e;
    const GammaTerms g = gamma_terms(mu);

    double ff = fact * (g.gam1 * std::cosh(e) + g.gam2 * fact2 * d);
    double sum = ff;
    const double ee = std::exp(e);
    double p = 0.5 * ee / g.recip_plus;
    double q = 0.5 / (ee * g.recip_minus);
    double c = 1.0;
    const double dd = x2 * x2;
    double sum1 = p;
    int i = 1;
    for (; i <= kMaxTerms; ++i) {
        const double di = i;
        ff = (di * ff + p + q) / (di * di - mu * mu);
        c *= dd / di;
        p /= (di - mu);
        q /= (di + mu);
        const double del = c * ff;
        sum += del;
        const double del1 = c * (p - di * ff);
        sum1 += del1;
        if (std::abs(del) < std::abs(sum) * kEps) break;
    }
    if (i > kMaxTerms) throw std::runtime_error("log_bessel_k: Temme series did not converge");
    return {std::log(sum), sum1 * (2.0 / x) / sum};
}

// Steed's continued fraction (CF2), |mu| <= 1/2, x >= 2. Returns ln K_mu
// with the e^{-x} factor applied in log space.
SeedPair steed_cf2(double mu, double x) {
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d;
    double delh = d;
    double q1 = 0.0;
    double q2 = 1.0;
    const double a1 = 0.25 - mu * mu;
    double q = a1;
    double c = a1;
    double a = -a1;
    double s = 1.0 + q * delh;
    int i = 2;
    for (; i <= kMaxTerms; ++i) {
        a -= 2.0 * (i - 1);
        c = -a * c / i;
        const double qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        const double dels = q * delh;
        s += dels;
        if (std::abs(dels / s) < kEps) break;
    }
    if (i > kMaxTerms) throw std::runtime_error("log_bessel_k: continued fraction did not converge");
    h = a1 * h;
    const double log_k = 0.5 * std::log(std::numbers::pi / (2.0 * x)) - x - std::log(s);
    return {log_k, (mu + x + 0.5 - h) / x};
}

void check_args(double order, double arg, const char* who) {
    if (!std::isfinite(order) || !std::isfinite(arg)) {
        throw std::domain_error(std::string(who) + ": non-finite argument");
    }
    if (arg <= 0.0) {
        throw std::domain_error(std::string(who) + ": argument must be positive");
    }
}

// ln K_nu and K_{nu+1}/K_nu for nu >= 0.
SeedPair log_bessel_k_and_ratio(double nu, double x) {
    const int nl = static_cast<int>(std::floor(nu + 0.5));
    const double mu = nu - nl;
    SeedPair s = x < 2.0 ? temme_series(mu, x) : steed_cf2(mu, x);
    double log_k = s.log_k_mu;
    double r = s.ratio;
    for (int i = 1; i <= nl; ++i) {
        log_k += std::log(r);
        r = 2.0 * (mu + i) / x + 1.0 / r;
    }
    return {log_k, r};
}

}  // namespace

double log_bessel_k(double order, double arg) {
    check_args(order, arg, "log_bessel_k");
    return log_bessel_k_and_ratio(std::abs(order), arg).log_k_mu;
}

double bessel_k_ratio(double order, double arg) {
    check_args(order, arg, "bessel_k_ratio");
    if (order >= 0.0) {
        return log_bessel_k_and_ratio(order, arg).ratio;
    }
    // K_{nu+1}/K_nu with nu < 0: use K_{-v} = K_v.
    return std::exp(log_bessel_k(order + 1.0, arg) - log_bessel_k(order, arg));
}

double dlog_bessel_k_dorder(double order, double arg) {
    check_args(order, arg, "dlog_bessel_k_dorder");
    constexpr double h = 1e-5;
    return (log_bessel_k(order + h, arg) - log_bessel_k(order - h, arg)) / (2.0 * h);
}

double dlog_bessel_k_darg(double order, double arg) {
    check_args(order, arg, "dlog_bessel_k_darg");
    const double l0 = log_bessel_k(order, arg);
    const double lm = log_bessel_k(order - 1.0, arg);
    const double lp = log_bessel_k(order + 1.0, arg);
    return -0.5 * (std::exp(lm - l0) + std::exp(lp - l0));
}

double norm_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double norm_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double log_norm_cdf(double x) {
    if (x == -std::numeric_limits<double>::infinity()) {
        return -std::numeric_limits<double>::infinity();
    }
    if (x > 5.0) {
        return std::log1p(-0.5 * std::erfc(x / std::numbers::sqrt2));
    }
    if (x > -30.0) {
        return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
    }
    // Asymptotic series of the Mills ratio.
    const double z2 = 1.0 / (x * x);
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 12; ++k) {
        term *= -(2.0 * k - 1.0) * z2;
        sum += term;
    }
    return -0.5 * x * x - std::log(-x) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(sum);
}

double norm_quantile(double p) {
    if (p <= 0.0) return -std::numeric_limits<double>::infinity();
    if (p >= 1.0) return std::numeric_limits<double>::infinity();
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

}  // namespace hth
