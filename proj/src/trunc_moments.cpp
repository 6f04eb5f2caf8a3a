#include "hthmix/trunc_moments.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "hthmix/errors.hpp"
#include "hthmix/hyperbolic.hpp"

namespace hth {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogFloor = -700.0;

double log_h1(double a, double mu, double s2, double index, double omega) {
    const double d = a - mu;
    return sym_hyperbolic_log_kernel(d * d / s2, std::log(s2), 1, index, omega);
}

// ln P(Y_J >= a_J) over the coordinates J where a is finite.
double log_upper_orthant(const Eigen::VectorXd& m, const Eigen::MatrixXd& s, const Eigen::VectorXd& a, double index,
                         double pair, const QuadratureSpec& quad, const MvnSpec& mvn) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a(i) != -kInf) keep.push_back(i);
    }
    if (keep.empty()) return 0.0;
    const auto k = static_cast<Eigen::Index>(keep.size());
    Eigen::VectorXd c(k);
    Eigen::MatrixXd sub(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        c(i) = m(keep[i]) - a(keep[i]);
        for (Eigen::Index j = 0; j < k; ++j) sub(i, j) = s(keep[i], keep[j]);
    }
    return log_gig_mixed_normal_cdf(c, sub, pair, pair, index, quad, mvn);
}

double log_lower_tail(double l, double mu, double s2, double index, double omega, const QuadratureSpec& quad) {
    Eigen::VectorXd c(1);
    c(0) = l - mu;
    return log_gig_mixed_normal_cdf(c, Eigen::MatrixXd::Constant(1, 1, s2), omega, omega, index, quad, MvnSpec{});
}

double log_upper_tail(double l, double mu, double s2, double index, double omega, const QuadratureSpec& quad) {
    Eigen::VectorXd c(1);
    c(0) = mu - l;
    return log_gig_mixed_normal_cdf(c, Eigen::MatrixXd::Constant(1, 1, s2), omega, omega, index, quad, MvnSpec{});
}

double log_diff(double big, double small) {
    if (small == -kInf) return big;
    if (small >= big) return -kInf;
    return big + std::log1p(-std::exp(small - big));
}

double log_interval(double mu, double s2, double index, double omega, double l1, double l2, const QuadratureSpec& quad) {
    if (l1 == -kInf && l2 == kInf) return 0.0;
    if (l1 == -kInf) return log_lower_tail(l2, mu, s2, index, omega, quad);
    if (l2 == kInf) return log_upper_tail(l1, mu, s2, index, omega, quad);
    if (l1 >= mu) {
        return log_diff(log_upper_tail(l1, mu, s2, index, omega, quad), log_upper_tail(l2, mu, s2, index, omega, quad));
    }
    return log_diff(log_lower_tail(l2, mu, s2, index, omega, quad), log_lower_tail(l1, mu, s2, index, omega, quad));
}

void check_mass(double log_c) {
    if (!std::isfinite(log_c) || log_c < kLogFloor) {
        throw DegenerateTruncation("truncation region carries negligible probability mass");
    }
}

UnivariateMoments univariate_core(double mu, double s2, double index, double omega, double l1, double l2,
                                  double log_den, double log_next) {
    check_mass(log_den);
    const double r = bessel_k_ratio(index, omega);
    double t1 = 0.0, t2 = 0.0, e1 = 0.0, e2 = 0.0;
    if (std::isfinite(l1)) {
        t1 = std::exp(log_h1(l1, mu, s2, index + 1.0, omega) - log_den);
        e1 = (l1 - mu) * t1;
    }
    if (std::isfinite(l2)) {
        t2 = std::exp(log_h1(l2, mu, s2, index + 1.0, omega) - log_den);
        e2 = (l2 - mu) * t2;
    }
    UnivariateMoments m;
    m.m1 = mu + s2 * r * (t1 - t2);
    m.m2 = 2.0 * mu * m.m1 - mu * mu + s2 * r * (std::exp(log_next - log_den) + e1 - e2);
    return m;
}

}  // namespace

Eigen::VectorXd ThParams::bounds() const {
    if (lower.size() == 0) return Eigen::VectorXd::Zero(mu.size());
    return lower;
}

void ThParams::validate() const {
    const Eigen::Index q = mu.size();
    if (q < 1) throw std::invalid_argument("ThParams: empty location");
    if (sigma.rows() != q || sigma.cols() != q) throw std::invalid_argument("ThParams: sigma must be q x q");
    if (lower.size() != 0 && lower.size() != q) throw std::invalid_argument("ThParams: lower must have length q");
    if (!(omega > 0.0) || !std::isfinite(omega) || !std::isfinite(index)) {
        throw std::invalid_argument("ThParams: require omega > 0 and finite index");
    }
    if (!mu.allFinite()) throw std::invalid_argument("ThParams: non-finite location");
    for (Eigen::Index i = 0; i < lower.size(); ++i) {
        if (std::isnan(lower(i)) || lower(i) == kInf) throw std::invalid_argument("ThParams: lower must be finite or -inf");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success || !sigma.allFinite()) {
        throw std::invalid_argument("ThParams: sigma is not positive definite");
    }
}

double th_log_orthant(const ThParams& p, double index, const QuadratureSpec& quad, const MvnSpec& mvn) {
    p.validate();
    return log_upper_orthant(p.mu, p.sigma, p.bounds(), index, p.omega, quad, mvn);
}

double th_orthant_prob(const ThParams& p, const QuadratureSpec& quad, const MvnSpec& mvn) {
    return std::exp(th_log_orthant(p, p.index, quad, mvn));
}

UnivariateMoments th_univariate_moments(double mu, double sigma2, double index, double omega, double l1, double l2,
                                        const QuadratureSpec& quad) {
    if (!(sigma2 > 0.0)) throw std::invalid_argument("th_univariate_moments: sigma2 must be positive");
    if (!(omega > 0.0)) throw std::invalid_argument("th_univariate_moments: omega must be positive");
    if (!(l1 < l2)) throw std::invalid_argument("th_univariate_moments: require l1 < l2");
    const double log_den = log_interval(mu, sigma2, index, omega, l1, l2, quad);
    check_mass(log_den);
    const double log_next = log_interval(mu, sigma2, index + 1.0, omega, l1, l2, quad);
    return univariate_core(mu, sigma2, index, omega, l1, l2, log_den, log_next);
}

ThMoments th_moments(const ThParams& p, const QuadratureSpec& quad, const MvnSpec& mvn,
                     std::optional<OrthantPair> known) {
    p.validate();
    const Eigen::Index q = p.mu.size();
    const Eigen::VectorXd a = p.bounds();
    const double lam = p.index, om = p.omega;
    const double log_c = known ? known->log_c : log_upper_orthant(p.mu, p.sigma, a, lam, om, quad, mvn);
    check_mass(log_c);
    const double log_c_next =
        known ? known->log_c_next : log_upper_orthant(p.mu, p.sigma, a, lam + 1.0, om, quad, mvn);

    ThMoments out;
    out.log_c = log_c;
    if (q == 1) {
        const auto m = univariate_core(p.mu(0), p.sigma(0, 0), lam, om, a(0), kInf, log_c, log_c_next);
        out.mean = Eigen::VectorXd::Constant(1, m.m1);
        out.second = Eigen::MatrixXd::Constant(1, 1, m.m2);
        return out;
    }

    const Eigen::MatrixXd& s = p.sigma;
    const Eigen::VectorXd& mu = p.mu;
    const double r_lam = bessel_k_ratio(lam, om);

    // eps / c
    Eigen::VectorXd eps = Eigen::VectorXd::Zero(q);
    for (Eigen::Index r = 0; r < q; ++r) {
        if (a(r) == -kInf) continue;
        const double dr = a(r) - mu(r);
        const double gam = dr * dr / s(r, r);
        const double lh = log_h1(a(r), mu(r), s(r, r), lam + 1.0, om);
        std::vector<Eigen::Index> o;
        for (Eigen::Index i = 0; i < q; ++i) {
            if (i != r) o.push_back(i);
        }
        const auto m = static_cast<Eigen::Index>(o.size());
        Eigen::VectorXd loc(m), ao(m);
        Eigen::MatrixXd cond(m, m);
        for (Eigen::Index i = 0; i < m; ++i) {
            loc(i) = mu(o[i]) + s(o[i], r) * dr / s(r, r);
            ao(i) = a(o[i]);
            for (Eigen::Index j = 0; j < m; ++j) cond(i, j) = s(o[i], o[j]) - s(o[i], r) * s(r, o[j]) / s(r, r);
        }
        const double inflate = std::sqrt((om + gam) / om);
        const double lp = log_upper_orthant(loc, inflate * cond, ao, lam + 0.5, om * inflate, quad, mvn);
        eps(r) = r_lam * std::exp(lh + lp - log_c);
    }
    out.mean = mu + s * eps;

    // H / c
    Eigen::MatrixXd hmat = Eigen::MatrixXd::Zero(q, q);
    const double k2 = std::exp(log_bessel_k(lam + 2.0, om) - log_bessel_k(lam, om));
    for (Eigen::Index r = 0; r < q; ++r) {
        for (Eigen::Index t = r + 1; t < q; ++t) {
            if (a(r) == -kInf || a(t) == -kInf) continue;
            Eigen::Matrix2d srs;
            srs << s(r, r), s(r, t), s(t, r), s(t, t);
            const Eigen::Vector2d d(a(r) - mu(r), a(t) - mu(t));
            const Eigen::LLT<Eigen::Matrix2d> llt(srs);
            const Eigen::Vector2d sol = llt.solve(d);
            const double gam = d.dot(sol);
            const double lh2 = sym_hyperbolic_log_kernel(gam, std::log(srs.determinant()), 2, lam + 2.0, om);
            double lp = 0.0;
            if (q > 2) {
                std::vector<Eigen::Index> o;
                for (Eigen::Index i = 0; i < q; ++i) {
                    if (i != r && i != t) o.push_back(i);
                }
                const auto m = static_cast<Eigen::Index>(o.size());
                Eigen::MatrixXd cross(m, 2);
                Eigen::VectorXd ao(m);
                Eigen::MatrixXd soo(m, m);
                for (Eigen::Index i = 0; i < m; ++i) {
                    cross(i, 0) = s(o[i], r);
                    cross(i, 1) = s(o[i], t);
                    ao(i) = a(o[i]);
                    for (Eigen::Index j = 0; j < m; ++j) soo(i, j) = s(o[i], o[j]);
                }
                const Eigen::MatrixXd b = llt.solve(cross.transpose()).transpose();
                Eigen::VectorXd loc(m);
                for (Eigen::Index i = 0; i < m; ++i) loc(i) = mu(o[i]) + b.row(i).dot(d);
                const Eigen::MatrixXd cond = soo - b * cross.transpose();
                const double inflate = std::sqrt((om + gam) / om);
                lp = log_upper_orthant(loc, inflate * cond, ao, lam + 1.0, om * inflate, quad, mvn);
            }
            hmat(r, t) = hmat(t, r) = k2 * std::exp(lh2 + lp - log_c);
        }
    }
    const Eigen::MatrixXd sh = s * hmat;
    Eigen::MatrixXd dmat = Eigen::MatrixXd::Zero(q, q);
    for (Eigen::Index r = 0; r < q; ++r) {
        const double lead = a(r) == -kInf ? 0.0 : (a(r) - mu(r)) * eps(r);
        dmat(r, r) = (lead - sh(r, r)) / s(r, r);
    }
    const double kc = r_lam * std::exp(log_c_next - log_c);
    Eigen::MatrixXd second = mu * out.mean.transpose() + out.mean * mu.transpose() - mu * mu.transpose() + kc * s +
                             s * (hmat + dmat) * s;
    out.second = 0.5 * (second + second.transpose());
    return out;
}

Eigen::VectorXd th_mean(const ThParams& p, const QuadratureSpec& quad, const MvnSpec& mvn) {
    return th_moments(p, quad, mvn).mean;
}

Eigen::MatrixXd th_second_moment(const ThParams& p, const QuadratureSpec& quad, const MvnSpec& mvn) {
    return th_moments(p, quad, mvn).second;
}

}  // namespace hth
