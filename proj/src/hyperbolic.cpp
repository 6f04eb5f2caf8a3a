#include "hthmix/hyperbolic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "hthmix/gig.hpp"

namespace hth {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogTwoPi = 1.8378770664093453;

bool positive_definite(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols() || !a.allFinite()) return false;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    return llt.info() == Eigen::Success;
}

double log_det(const Eigen::LLT<Eigen::MatrixXd>& llt) {
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

Eigen::LLT<Eigen::MatrixXd> checked_llt(const Eigen::MatrixXd& a, const char* who) {
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success || !a.allFinite()) {
        throw std::invalid_argument(std::string(who) + ": matrix is not positive definite");
    }
    return llt;
}

}  // namespace

Eigen::MatrixXd HthParams::omega_mat() const {
    return sigma + lambda_mat * lambda_mat.transpose();
}

Eigen::MatrixXd HthParams::delta_mat() const {
    const Eigen::MatrixXd om = omega_mat();
    const Eigen::MatrixXd sol = om.llt().solve(lambda_mat);
    Eigen::MatrixXd d = Eigen::MatrixXd::Identity(q(), q()) - lambda_mat.transpose() * sol;
    return 0.5 * (d + d.transpose());
}

void HthParams::validate() const {
    const Eigen::Index pp = p();
    if (pp < 1) throw std::invalid_argument("HthParams: empty location");
    if (sigma.rows() != pp || sigma.cols() != pp) throw std::invalid_argument("HthParams: sigma must be p x p");
    if (lambda_mat.rows() != pp || q() < 1 || q() > pp) {
        throw std::invalid_argument("HthParams: lambda_mat must be p x q with 1 <= q <= p");
    }
    if (!mu.allFinite() || !lambda_mat.allFinite() || !std::isfinite(index)) {
        throw std::invalid_argument("HthParams: non-finite parameter");
    }
    if (!(omega > 0.0) || !std::isfinite(omega)) throw std::invalid_argument("HthParams: omega must be positive");
    if (!positive_definite(sigma)) throw std::invalid_argument("HthParams: sigma is not positive definite");
    if (!positive_definite(omega_mat())) throw std::invalid_argument("HthParams: omega matrix is not positive definite");
    if (!positive_definite(delta_mat())) throw std::invalid_argument("HthParams: delta matrix is not positive definite");
}

void HthParams::canonicalize() {
    const Eigen::Index qq = q();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(qq));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return lambda_mat.col(a).squaredNorm() > lambda_mat.col(b).squaredNorm();
    });
    Eigen::MatrixXd sorted(lambda_mat.rows(), qq);
    for (Eigen::Index j = 0; j < qq; ++j) sorted.col(j) = lambda_mat.col(order[static_cast<std::size_t>(j)]);
    lambda_mat = sorted;
}

HthDerived::HthDerived(const HthParams& params)
    : p(params.p()), q(params.q()), index(params.index), omega(params.omega), mu(params.mu) {
    params.validate();
    omega_llt = checked_llt(params.omega_mat(), "HthDerived");
    log_det_omega = log_det(omega_llt);
    coef = omega_llt.solve(params.lambda_mat).transpose();
    delta = Eigen::MatrixXd::Identity(q, q) - coef * params.lambda_mat;
    delta = 0.5 * (delta + delta.transpose());
    log_bessel_index = log_bessel_k(index, omega);
}

double HthDerived::mahalanobis(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd z = omega_llt.matrixL().solve(x - mu);
    return z.squaredNorm();
}

Eigen::VectorXd HthDerived::skew_arg(const Eigen::VectorXd& x) const {
    return coef * (x - mu);
}

double sym_hyperbolic_log_kernel(double delta, double log_det_scale, Eigen::Index dim, double index, double omega) {
    const double nu = index - 0.5 * static_cast<double>(dim);
    return 0.5 * nu * std::log1p(delta / omega) + log_bessel_k(nu, std::sqrt(omega * (omega + delta))) -
           0.5 * static_cast<double>(dim) * kLogTwoPi - 0.5 * log_det_scale - log_bessel_k(index, omega);
}

double sym_hyperbolic_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                             double index, double omega) {
    if (x.size() != mu.size() || sigma.rows() != mu.size() || sigma.cols() != mu.size()) {
        throw std::invalid_argument("sym_hyperbolic_logpdf: dimension mismatch");
    }
    if (!(omega > 0.0)) throw std::invalid_argument("sym_hyperbolic_logpdf: omega must be positive");
    const auto llt = checked_llt(sigma, "sym_hyperbolic_logpdf");
    const double delta = llt.matrixL().solve(x - mu).squaredNorm();
    return sym_hyperbolic_log_kernel(delta, log_det(llt), mu.size(), index, omega);
}

double log_gig_mixed_normal_cdf(const Eigen::VectorXd& c, const Eigen::MatrixXd& scale, double psi, double chi,
                                double index, const QuadratureSpec& quad, const MvnSpec& mvn) {
    const Eigen::Index q = c.size();
    if (scale.rows() != q || scale.cols() != q) throw std::invalid_argument("mixed normal cdf: dimension mismatch");
    bool all_inf = true;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < q; ++i) {
        if (std::isnan(c(i))) throw std::domain_error("mixed normal cdf: NaN argument");
        if (c(i) == kNegInf) return kNegInf;
        if (c(i) != std::numeric_limits<double>::infinity()) {
            all_inf = false;
            worst = std::max(worst, -c(i) / std::sqrt(scale(i, i)));
        }
    }
    if (all_inf) return 0.0;
    const double chi_eff = chi + worst * worst;
    const KernelAnchor anchor = gig_anchor(psi, chi_eff, index);
    Eigen::VectorXd arg(q);
    auto kernel = [&](double w, double* mult) {
        mult[0] = 1.0;
        const double s = 1.0 / std::sqrt(w);
        for (Eigen::Index i = 0; i < q; ++i) arg(i) = c(i) * s;
        return (index - 1.0) * std::log(w) - 0.5 * (psi * w + chi / w) + log_mvn_cdf(arg, scale, mvn);
    };
    const KernelIntegral res = integrate_kernel(kernel, 1, anchor.mode, anchor.width, quad);
    const double log_norm =
        std::numbers::ln2 + 0.5 * index * std::log(chi / psi) + log_bessel_k(index, std::sqrt(psi * chi));
    return std::min(0.0, res.log_of(0) - log_norm);
}

double sym_hyperbolic_logcdf(const Eigen::VectorXd& point, const Eigen::VectorXd& mu, const Eigen::MatrixXd& scale,
                             double index, double omega_pair, const QuadratureSpec& quad, const MvnSpec& mvn) {
    if (point.size() != mu.size()) throw std::invalid_argument("sym_hyperbolic_cdf: dimension mismatch");
    if (!(omega_pair > 0.0)) throw std::invalid_argument("sym_hyperbolic_cdf: omega must be positive");
    checked_llt(scale, "sym_hyperbolic_cdf");
    return log_gig_mixed_normal_cdf(point - mu, scale, omega_pair, omega_pair, index, quad, mvn);
}

double sym_hyperbolic_cdf(const Eigen::VectorXd& point, const Eigen::VectorXd& mu, const Eigen::MatrixXd& scale,
                          double index, double omega_pair, const QuadratureSpec& quad, const MvnSpec& mvn) {
    return std::exp(sym_hyperbolic_logcdf(point, mu, scale, index, omega_pair, quad, mvn));
}

double cfusn_logpdf(const Eigen::VectorXd& y, const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                    const Eigen::MatrixXd& lambda_mat, const MvnSpec& mvn) {
    const Eigen::Index p = mu.size();
    const Eigen::Index q = lambda_mat.cols();
    if (y.size() != p || sigma.rows() != p || sigma.cols() != p || lambda_mat.rows() != p) {
        throw std::invalid_argument("cfusn_logpdf: dimension mismatch");
    }
    const Eigen::MatrixXd om = sigma + lambda_mat * lambda_mat.transpose();
    const auto llt = checked_llt(om, "cfusn_logpdf");
    const Eigen::MatrixXd coef = llt.solve(lambda_mat).transpose();
    Eigen::MatrixXd delta = Eigen::MatrixXd::Identity(q, q) - coef * lambda_mat;
    delta = 0.5 * (delta + delta.transpose());
    checked_llt(delta, "cfusn_logpdf");
    const Eigen::VectorXd dev = y - mu;
    const double maha = llt.matrixL().solve(dev).squaredNorm();
    const double log_phi = -0.5 * (static_cast<double>(p) * kLogTwoPi + log_det(llt) + maha);
    return static_cast<double>(q) * std::numbers::ln2 + log_phi + log_mvn_cdf(coef * dev, delta, mvn);
}

double hth_logpdf(const Eigen::VectorXd& x, const HthDerived& d, const QuadratureSpec& quad, const MvnSpec& mvn) {
    if (x.size() != d.p) throw std::invalid_argument("hth_logpdf: dimension mismatch");
    const double delta = d.mahalanobis(x);
    const double nu = d.index - 0.5 * static_cast<double>(d.p);
    const double gamma = std::sqrt(d.omega * (d.omega + delta));
    const Eigen::VectorXd c = d.skew_arg(x) * std::pow(d.omega / (d.omega + delta), 0.25);
    return static_cast<double>(d.q) * std::numbers::ln2 +
           sym_hyperbolic_log_kernel(delta, d.log_det_omega, d.p, d.index, d.omega) +
           log_gig_mixed_normal_cdf(c, d.delta, gamma, gamma, nu, quad, mvn);
}

double hth_logpdf(const Eigen::VectorXd& x, const HthParams& params, const QuadratureSpec& quad, const MvnSpec& mvn) {
    return hth_logpdf(x, HthDerived(params), quad, mvn);
}

Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd hth_sample(const HthParams& params, std::size_t n, std::uint64_t seed) {
    params.validate();
    if (n < 1) throw std::invalid_argument("hth_sample: n must be >= 1");
    const Eigen::Index p = params.p(), q = params.q();
    const Eigen::MatrixXd root = sym_sqrt(params.sigma);
    const GigSampler gig({params.omega, params.omega, params.index});
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd out(static_cast<Eigen::Index>(n), p);
    Eigen::VectorXd u(q), k(p);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
        const double w = gig(rng);
        for (Eigen::Index j = 0; j < q; ++j) u(j) = std::abs(normal(rng));
        for (Eigen::Index j = 0; j < p; ++j) k(j) = normal(rng);
        out.row(i) = (params.mu + std::sqrt(w) * (params.lambda_mat * u + root * k)).transpose();
    }
    return out;
}

double posterior_w_logdensity_unnorm(double w, const Eigen::VectorXd& x, const HthParams& params,
                                     const MvnSpec& mvn) {
    if (!(w > 0.0)) throw std::domain_error("posterior_w_logdensity_unnorm: w must be positive");
    const HthDerived d(params);
    if (x.size() != d.p) throw std::invalid_argument("posterior_w_logdensity_unnorm: dimension mismatch");
    const double delta = d.mahalanobis(x);
    const Eigen::VectorXd r = d.skew_arg(x) / std::sqrt(w);
    return (d.index - 0.5 * static_cast<double>(d.p) - 1.0) * std::log(w) -
           (d.omega * w * w + d.omega + delta) / (2.0 * w) + log_mvn_cdf(r, d.delta, mvn);
}

}  // namespace hth
