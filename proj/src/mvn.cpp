#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hthmix/specfun.hpp"

namespace hth {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Gauss-Legendre half-rules (nodes on [-1, 0)) with 6, 12 and 20 points.
constexpr std::array<double, 3> kW6 = {0.1713244923791705, 0.3607615730481384, 0.4679139345726904};
constexpr std::array<double, 3> kX6 = {-0.9324695142031522, -0.6612093864662647, -0.2386191860831970};
constexpr std::array<double, 6> kW12 = {0.4717533638651177e-1, 0.1069393259953183, 0.1600783285433464,
                                        0.2031674267230659,    0.2334925365383547, 0.2491470458134029};
constexpr std::array<double, 6> kX12 = {-0.9815606342467191, -0.9041172563704750, -0.7699026741943050,
                                        -0.5873179542866171, -0.3678314989981802, -0.1252334085114692};
constexpr std::array<double, 10> kW20 = {0.1761400713915212e-1, 0.4060142980038694e-1, 0.6267204833410906e-1,
                                         0.8327674157670475e-1, 0.1019301198172404,    0.1181945319615184,
                                         0.1316886384491766,    0.1420961093183821,    0.1491729864726037,
                                         0.1527533871307259};
constexpr std::array<double, 10> kX20 = {-0.9931285991850949, -0.9639719272779138, -0.9122344282513259,
                                         -0.8391169718222188, -0.7463319064601508, -0.6360536807265150,
                                         -0.5108670019508271, -0.3737060887154196, -0.2277858511416451,
                                         -0.7652652113349733e-1};

template <std::size_t N>
double bvn_core(double h, double k, double r, const std::array<double, N>& w, const std::array<double, N>& x) {
    const double hk = h * k;
    double bvn = 0.0;
    if (std::abs(r) < 0.925) {
        const double hs = 0.5 * (h * h + k * k);
        const double asr = std::asin(r);
        for (std::size_t i = 0; i < N; ++i) {
            double sn = std::sin(asr * (x[i] + 1.0) / 2.0);
            bvn += w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
            sn = std::sin(asr * (-x[i] + 1.0) / 2.0);
            bvn += w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
        }
        return bvn * asr / (2.0 * kTwoPi) + norm_cdf(-h) * norm_cdf(-k);
    }
    double kk = k;
    double hhk = hk;
    if (r < 0.0) {
        kk = -k;
        hhk = -hk;
    }
    if (std::abs(r) < 1.0) {
        const double as = (1.0 - r) * (1.0 + r);
        double a = std::sqrt(as);
        const double bs = (h - kk) * (h - kk);
        const double c = (4.0 - hhk) / 8.0;
        const double d = (12.0 - hhk) / 16.0;
        bvn = a * std::exp(-(bs / as + hhk) / 2.0) *
              (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
        if (hhk > -160.0) {
            const double b = std::sqrt(bs);
            bvn -= std::exp(-hhk / 2.0) * std::sqrt(kTwoPi) * norm_cdf(-b / a) * b *
                   (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
        }
        a /= 2.0;
        for (std::size_t i = 0; i < N; ++i) {
            double xs = (a * (x[i] + 1.0)) * (a * (x[i] + 1.0));
            double rs = std::sqrt(1.0 - xs);
            bvn += a * w[i] *
                   (std::exp(-bs / (2.0 * xs) - hhk / (1.0 + rs)) / rs -
                    std::exp(-(bs / xs + hhk) / 2.0) * (1.0 + c * xs * (1.0 + d * xs)));
            xs = as * (-x[i] + 1.0) * (-x[i] + 1.0) / 4.0;
            rs = std::sqrt(1.0 - xs);
            bvn += a * w[i] * std::exp(-(bs / xs + hhk) / 2.0) *
                   (std::exp(-hhk * xs / (2.0 * (1.0 + rs) * (1.0 + rs))) / rs - (1.0 + c * xs * (1.0 + d * xs)));
        }
        bvn = -bvn / kTwoPi;
    }
    if (r > 0.0) {
        bvn += norm_cdf(-std::max(h, kk));
    } else {
        bvn = -bvn;
        if (kk > h) {
            if (h < 0.0) {
                bvn += norm_cdf(kk) - norm_cdf(h);
            } else {
                bvn += norm_cdf(-h) - norm_cdf(-kk);
            }
        }
    }
    return bvn;
}

// ln of the integral of phi(x) exp(lg(x)) over x <= b, with lg <= 0.
// Works in t = b - x, scaled by the largest value found on a graded grid.
template <class F>
double log_tail_integral(double b, const F& lg) {
    const double hi = std::max(b, 0.0) + 40.0;
    auto h = [&](double t) { return -0.5 * (b - t) * (b - t) + lg(b - t); };
    constexpr int n = 32;
    std::array<double, n + 1> ts{}, vs{};
    double m = -kInf;
    int kpk = 0;
    for (int k = 0; k <= n; ++k) {
        ts[k] = hi * (static_cast<double>(k) / n) * (static_cast<double>(k) / n);
        vs[k] = h(ts[k]);
        if (vs[k] > m) {
            m = vs[k];
            kpk = k;
        }
    }
    if (m == -kInf) return -kInf;
    int k0 = kpk, k1 = kpk;
    while (k0 > 0 && vs[k0] > m - 40.0) --k0;
    while (k1 < n && vs[k1] > m - 40.0) ++k1;
    auto f = [&](double t) {
        const double v = h(t) - m;
        return v < -745.0 ? 0.0 : std::exp(v);
    };
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    double err = 0.0, val = 0.0;
    if (kpk > k0) val += GK::integrate(f, ts[k0], ts[kpk], 12, 1e-7, &err);
    if (k1 > kpk) val += GK::integrate(f, ts[kpk], ts[k1], 12, 1e-7, &err);
    if (!(val > 0.0)) return -kInf;
    return m + std::log(val) - 0.5 * std::log(kTwoPi);
}

// ln(exp(a) - exp(b)) for a >= b.
double log_diff_exp(double a, double b) {
    if (b == -kInf) return a;
    if (!(a > b)) return -kInf;
    return a + std::log1p(-std::exp(b - a));
}

// ln P(X <= b1, Y <= b2), standard bivariate normal with correlation rho.
double log_bvn_cdf(double b1, double b2, double rho) {
    if (b1 == -kInf || b2 == -kInf) return -kInf;
    if (b1 == kInf) return log_norm_cdf(b2);
    if (b2 == kInf) return log_norm_cdf(b1);
    if (rho >= 1.0 - 1e-14) return log_norm_cdf(std::min(b1, b2));
    if (rho <= -1.0 + 1e-14) return b1 > -b2 ? log_diff_exp(log_norm_cdf(b1), log_norm_cdf(-b2)) : -kInf;
    const double p = bvn_upper(-b1, -b2, rho);
    // The closed-form rule is accurate in absolute terms only.
    if (p > 1e-5) return std::log(std::min(p, 1.0));
    const double lo = std::min(b1, b2), other = std::max(b1, b2);
    const double s = std::sqrt((1.0 - rho) * (1.0 + rho));
    return log_tail_integral(lo, [&](double x) { return log_norm_cdf((other - rho * x) / s); });
}

// sin(x) and cos(x)^2, with a series near |x| = pi / 2.
void sincs(double x, double& sx, double& cs) {
    const double ee = (std::numbers::pi / 2 - std::abs(x)) * (std::numbers::pi / 2 - std::abs(x));
    if (ee < 5e-5) {
        sx = std::copysign(1.0 - ee * (1.0 - ee / 12.0) / 2.0, x);
        cs = ee * (1.0 - ee * (1.0 - 2.0 * ee / 15.0) / 3.0);
    } else {
        sx = std::sin(x);
        cs = 1.0 - sx * sx;
    }
}

// d/dr of the trivariate cdf along the Plackett path, up to 1/(2 pi sqrt(rr)).
double plackett_term(double ba, double bb, double bc, double ra, double rb, double r, double rr) {
    const double dt = rr * (rr - (ra - rb) * (ra - rb) - 2.0 * ra * rb * (1.0 - r));
    if (!(dt > 0.0)) return 0.0;
    const double bt = (bc * rr + ba * (r * rb - ra) + bb * (r * ra - rb)) / std::sqrt(dt);
    const double ft = (ba - r * bb) * (ba - r * bb) / rr + bb * bb;
    if (bt <= -10.0 || ft >= 100.0) return 0.0;
    double v = std::exp(-ft / 2.0);
    if (bt < 10.0) v *= norm_cdf(bt);
    return v;
}

// P(Z <= h) for a standardized trivariate normal, absolute accuracy about 1e-14.
// The two smallest correlations are integrated from zero along r = sin(t asin r).
double tvn_plackett(double h1, double h2, double h3, double r12, double r13, double r23) {
    if (std::abs(r12) > std::abs(r13)) {
        std::swap(h2, h3);
        std::swap(r12, r13);
    }
    if (std::abs(r13) > std::abs(r23)) {
        std::swap(h1, h2);
        std::swap(r23, r13);
    }
    constexpr double eps = 1e-14;
    if (std::abs(h1) + std::abs(h2) + std::abs(h3) < eps) {
        return std::clamp((1.0 + (std::asin(r12) + std::asin(r13) + std::asin(r23)) / (std::numbers::pi / 2)) / 8.0,
                          0.0, 1.0);
    }
    const double bvn23 = bvn_upper(-h2, -h3, r23);
    if (std::abs(r12) + std::abs(r13) < eps) return std::clamp(norm_cdf(h1) * bvn23, 0.0, 1.0);
    double tvt = norm_cdf(h1) * bvn23;
    const double rua = std::asin(r12), rub = std::asin(r13);
    auto f = [&](double x) {
        double v = 0.0, s12, c12, s13, c13;
        sincs(rua * x, s12, c12);
        sincs(rub * x, s13, c13);
        if (rua != 0.0) v += rua * plackett_term(h1, h2, h3, s13, r23, s12, c12);
        if (rub != 0.0) v += rub * plackett_term(h1, h3, h2, s12, r23, s13, c13);
        return v;
    };
    double err = 0.0;
    tvt += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, 1.0, 8, 1e-10, &err) /
           (2.0 * std::numbers::pi);
    return std::clamp(tvt, 0.0, 1.0);
}

// Conditioning on the most restrictive coordinate; keeps relative accuracy
// when the probability is tiny.
double log_tvn_conditional(const std::array<double, 3>& b, const Eigen::Matrix3d& r) {
    std::array<int, 3> idx = {0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](int i, int j) { return b[i] < b[j]; });
    const int i0 = idx[0], i1 = idx[1], i2 = idx[2];
    const double b0 = b[i0], bb1 = b[i1], bb2 = b[i2];
    const double r01 = r(i0, i1), r02 = r(i0, i2), r12 = r(i1, i2);
    const double s1 = std::sqrt(std::max(1.0 - r01 * r01, 1e-300));
    const double s2 = std::sqrt(std::max(1.0 - r02 * r02, 1e-300));
    const double rc = std::clamp((r12 - r01 * r02) / (s1 * s2), -1.0, 1.0);
    auto inner = [&](double x) {
        const double c1 = bb1 == kInf ? kInf : (bb1 - r01 * x) / s1;
        const double c2 = bb2 == kInf ? kInf : (bb2 - r02 * x) / s2;
        return log_bvn_cdf(c1, c2, rc);
    };
    if (log_norm_cdf(b0) < -700.0) return log_norm_cdf(b0) + inner(b0);
    return log_tail_integral(b0, inner);
}

// ln P(Z <= b) for a standardized trivariate normal with correlation r.
double log_tvn_cdf(std::array<double, 3> b, const Eigen::Matrix3d& r) {
    for (double v : b) {
        if (v == -kInf) return -kInf;
    }
    const double p = tvn_plackett(b[0], b[1], b[2], r(0, 1), r(0, 2), r(1, 2));
    if (p > 1e-5) return std::log(p);
    return log_tvn_conditional(b, r);
}

bool is_pd(const Eigen::MatrixXd& cov) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    return llt.info() == Eigen::Success;
}

void check_cov(const Eigen::MatrixXd& cov, Eigen::Index q, const char* who) {
    if (cov.rows() != q || cov.cols() != q) {
        throw std::invalid_argument(std::string(who) + ": dimension mismatch");
    }
    if (!is_pd(cov)) {
        throw std::invalid_argument(std::string(who) + ": covariance is not positive definite");
    }
}

constexpr std::array<int, 40> kPrimes = {2,   3,   5,   7,   11,  13,  17,  19,  23,  29,  31,  37,  41,  43,
                                         47,  53,  59,  61,  67,  71,  73,  79,  83,  89,  97,  101, 103, 107,
                                         109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173};

}  // namespace

void MvnSpec::validate() const {
    if (sample_budget < 100) throw std::invalid_argument("MvnSpec: sample_budget must be >= 100");
    if (!(error_target > 0.0)) throw std::invalid_argument("MvnSpec: error_target must be positive");
}

double bvn_upper(double h, double k, double rho) {
    if (std::abs(rho) < 0.3) return bvn_core(h, k, rho, kW6, kX6);
    if (std::abs(rho) < 0.75) return bvn_core(h, k, rho, kW12, kX12);
    return bvn_core(h, k, rho, kW20, kX20);
}

QmcEstimate mvn_qmc(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, const Eigen::MatrixXd& cov,
                    const MvnSpec& spec) {
    spec.validate();
    const Eigen::Index q = cov.rows();
    if (q > static_cast<Eigen::Index>(kPrimes.size())) {
        throw std::invalid_argument("mvn_qmc: dimension too large");
    }
    // Cholesky factor with variable reordering by expected interval mass.
    Eigen::MatrixXd c = cov;
    Eigen::VectorXd a = lower, b = upper;
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(q, q);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(q);
    for (Eigen::Index i = 0; i < q; ++i) {
        Eigen::Index best = i;
        double best_mass = kInf;
        for (Eigen::Index j = i; j < q; ++j) {
            double var = c(j, j);
            double s = 0.0;
            for (Eigen::Index k = 0; k < i; ++k) {
                var -= l(j, k) * l(j, k);
                s += l(j, k) * y(k);
            }
            const double sd = std::sqrt(std::max(var, 1e-300));
            const double mass = norm_cdf((b(j) - s) / sd) - norm_cdf((a(j) - s) / sd);
            if (mass < best_mass) {
                best_mass = mass;
                best = j;
            }
        }
        if (best != i) {
            std::swap(a(i), a(best));
            std::swap(b(i), b(best));
            c.row(i).swap(c.row(best));
            c.col(i).swap(c.col(best));
            l.row(i).swap(l.row(best));
        }
        double var = c(i, i);
        for (Eigen::Index k = 0; k < i; ++k) var -= l(i, k) * l(i, k);
        if (var <= 0.0) throw std::invalid_argument("mvn_qmc: covariance is not positive definite");
        l(i, i) = std::sqrt(var);
        for (Eigen::Index j = i + 1; j < q; ++j) {
            double v = c(j, i);
            for (Eigen::Index k = 0; k < i; ++k) v -= l(j, k) * l(i, k);
            l(j, i) = v / l(i, i);
        }
        double s = 0.0;
        for (Eigen::Index k = 0; k < i; ++k) s += l(i, k) * y(k);
        const double lo = (a(i) - s) / l(i, i), hi = (b(i) - s) / l(i, i);
        const double mass = norm_cdf(hi) - norm_cdf(lo);
        const double plo = std::isfinite(lo) ? norm_pdf(lo) : 0.0;
        const double phi = std::isfinite(hi) ? norm_pdf(hi) : 0.0;
        y(i) = mass > 1e-300 ? (plo - phi) / mass : (std::isfinite(lo) ? lo : hi);
    }

    const int shifts = 12;
    const int per_shift = std::max(1, spec.sample_budget / (2 * shifts));
    std::vector<double> alpha(static_cast<std::size_t>(std::max<Eigen::Index>(q - 1, 1)));
    for (std::size_t k = 0; k < alpha.size(); ++k) {
        const double s = std::sqrt(static_cast<double>(kPrimes[k]));
        alpha[k] = s - std::floor(s);
    }
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    std::vector<double> yy(static_cast<std::size_t>(q));
    auto integrand = [&](const std::vector<double>& w) {
        double d = norm_cdf(a(0) / l(0, 0));
        double e = norm_cdf(b(0) / l(0, 0));
        double f = e - d;
        for (Eigen::Index i = 1; i < q && f > 0.0; ++i) {
            const double u = std::clamp(d + w[static_cast<std::size_t>(i - 1)] * (e - d), 1e-300, 1.0 - 1e-16);
            yy[static_cast<std::size_t>(i - 1)] = norm_quantile(u);
            double s = 0.0;
            for (Eigen::Index k = 0; k < i; ++k) s += l(i, k) * yy[static_cast<std::size_t>(k)];
            d = norm_cdf((a(i) - s) / l(i, i));
            e = norm_cdf((b(i) - s) / l(i, i));
            f *= (e - d);
        }
        return f;
    };

    double mean = 0.0, m2 = 0.0;
    std::vector<double> shift(alpha.size()), w(alpha.size()), wa(alpha.size());
    for (int s = 0; s < shifts; ++s) {
        for (auto& v : shift) v = unif(rng);
        double acc = 0.0;
        for (int j = 1; j <= per_shift; ++j) {
            for (std::size_t k = 0; k < alpha.size(); ++k) {
                double t = j * alpha[k] + shift[k];
                t -= std::floor(t);
                w[k] = std::abs(2.0 * t - 1.0);
                wa[k] = 1.0 - w[k];
            }
            acc += 0.5 * (integrand(w) + integrand(wa));
        }
        acc /= per_shift;
        const double delta = acc - mean;
        mean += delta / (s + 1);
        m2 += delta * (acc - mean);
    }
    const double var = m2 / (shifts - 1) / shifts;
    return {std::clamp(mean, 0.0, 1.0), 3.0 * std::sqrt(var)};
}

double log_mvn_cdf(const Eigen::VectorXd& upper, const Eigen::MatrixXd& cov, const MvnSpec& spec) {
    const Eigen::Index q = upper.size();
    if (cov.rows() != q || cov.cols() != q) throw std::invalid_argument("log_mvn_cdf: dimension mismatch");
    std::vector<Eigen::Index> keep;
    keep.reserve(static_cast<std::size_t>(q));
    for (Eigen::Index i = 0; i < q; ++i) {
        if (std::isnan(upper(i))) throw std::domain_error("log_mvn_cdf: NaN bound");
        if (upper(i) == -kInf) return -kInf;
        // Beyond 38 standard deviations the coordinate no longer restricts anything.
        if (upper(i) < 38.0 * std::sqrt(cov(i, i))) keep.push_back(i);
    }
    const auto m = static_cast<Eigen::Index>(keep.size());
    if (m == 0) return 0.0;
    Eigen::VectorXd sd(m), bs(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        sd(i) = std::sqrt(cov(keep[i], keep[i]));
        bs(i) = upper(keep[i]) / sd(i);
    }
    if (m == 1) return log_norm_cdf(bs(0));
    Eigen::MatrixXd corr(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) corr(i, j) = cov(keep[i], keep[j]) / (sd(i) * sd(j));
    }
    if (spec.method == MvnSpec::Method::automatic && m == 2) {
        return log_bvn_cdf(bs(0), bs(1), std::clamp(corr(0, 1), -1.0, 1.0));
    }
    if (spec.method == MvnSpec::Method::automatic && m == 3) {
        Eigen::Matrix3d r3 = corr;
        return log_tvn_cdf({bs(0), bs(1), bs(2)}, r3);
    }
    const Eigen::VectorXd lo = Eigen::VectorXd::Constant(m, -kInf);
    const QmcEstimate est = mvn_qmc(lo, bs, corr, spec);
    return est.value > 0.0 ? std::log(est.value) : -kInf;
}

double mvn_rectangle_prob(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, const Eigen::VectorXd& mean,
                          const Eigen::MatrixXd& cov, const MvnSpec& spec) {
    spec.validate();
    const Eigen::Index q = mean.size();
    if (lower.size() != q || upper.size() != q) throw std::invalid_argument("mvn_rectangle_prob: dimension mismatch");
    check_cov(cov, q, "mvn_rectangle_prob");
    for (Eigen::Index i = 0; i < q; ++i) {
        if (std::isnan(lower(i)) || std::isnan(upper(i)) || lower(i) > upper(i)) {
            throw std::invalid_argument("mvn_rectangle_prob: require lower <= upper");
        }
    }
    Eigen::VectorXd a = lower - mean, b = upper - mean;
    if (q == 1) {
        const double s = std::sqrt(cov(0, 0));
        const double lo = a(0) / s, hi = b(0) / s;
        if (lo > 0.0) return std::clamp(norm_cdf(-lo) - norm_cdf(-hi), 0.0, 1.0);
        return std::clamp(norm_cdf(hi) - norm_cdf(lo), 0.0, 1.0);
    }
    std::vector<Eigen::Index> finite_lower;
    for (Eigen::Index i = 0; i < q; ++i) {
        if (a(i) != -kInf) finite_lower.push_back(i);
    }
    if (spec.method == MvnSpec::Method::automatic && q <= 3) {
        // Inclusion-exclusion over the finite lower bounds.
        const std::size_t nf = finite_lower.size();
        double total = 0.0;
        for (std::size_t mask = 0; mask < (std::size_t{1} << nf); ++mask) {
            Eigen::VectorXd corner = b;
            int bits = 0;
            for (std::size_t k = 0; k < nf; ++k) {
                if (mask & (std::size_t{1} << k)) {
                    corner(finite_lower[k]) = a(finite_lower[k]);
                    ++bits;
                }
            }
            const double p = std::exp(log_mvn_cdf(corner, cov, spec));
            total += (bits % 2 == 0) ? p : -p;
        }
        return std::clamp(total, 0.0, 1.0);
    }
    return mvn_qmc(a, b, cov, spec).value;
}

}  // namespace hth
