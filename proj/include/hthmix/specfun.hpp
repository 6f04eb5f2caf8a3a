#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace hth {

// ---------------------------------------------------------------------------
// Modified Bessel function of the third kind, real order, in log scale.
//
// K_nu(x) is evaluated from K_mu and K_{mu+1} with |mu| <= 1/2 (Temme's
// series for x < 2, Steed's continued fraction otherwise) followed by the
// forward recurrence, which is carried out on the ratio K_{mu+k+1}/K_{mu+k}
// so that nothing overflows for large orders or arguments.
// ---------------------------------------------------------------------------

/// ln K_order(arg). Throws std::domain_error for arg <= 0 or non-finite input.
double log_bessel_k(double order, double arg);

/// K_{order+1}(arg) / K_order(arg).
double bessel_k_ratio(double order, double arg);

/// d/d(order) ln K_order(arg), central difference with step 1e-5.
double dlog_bessel_k_dorder(double order, double arg);

/// K'_order(arg) / K_order(arg) from K' = -(K_{order-1} + K_{order+1}) / 2.
double dlog_bessel_k_darg(double order, double arg);

// ---------------------------------------------------------------------------
// Normal distribution helpers.
// ---------------------------------------------------------------------------

double norm_pdf(double x);
double norm_cdf(double x);
/// ln Phi(x), accurate far into the lower tail.
double log_norm_cdf(double x);
double norm_quantile(double p);

// ---------------------------------------------------------------------------
// Multivariate normal rectangle probabilities.
// ---------------------------------------------------------------------------

struct MvnSpec {
    enum class Method {
        // Closed-form/deterministic rules for dimension <= 3, quasi-random
        // separation of variables above that.
        automatic,
        // Always use the quasi-random separation-of-variables rule.
        quasi_monte_carlo,
    };

    int sample_budget = 10'000;
    double error_target = 1e-6;
    std::uint64_t seed = 0x9e3779b97f4a7c15ULL;
    Method method = Method::automatic;

    void validate() const;
};

/// P(lower <= N(mean, cov) <= upper). Bounds may be +/- infinity.
double mvn_rectangle_prob(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                          const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                          const MvnSpec& spec = {});

/// ln P(Z <= upper), Z ~ N(0, cov). The workhorse behind every skewing
/// factor; returns -infinity when the probability underflows.
double log_mvn_cdf(const Eigen::VectorXd& upper, const Eigen::MatrixXd& cov,
                   const MvnSpec& spec = {});

/// P(X > h, Y > k) for a standard bivariate normal with correlation rho.
double bvn_upper(double h, double k, double rho);

/// Quasi-random separation-of-variables estimate of the rectangle
/// probability for a zero-mean normal. Also reports the error estimate.
struct QmcEstimate {
    double value;
    double error;
};
QmcEstimate mvn_qmc(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                    const Eigen::MatrixXd& cov, const MvnSpec& spec);

}  // namespace hth
