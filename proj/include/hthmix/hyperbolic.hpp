#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "hthmix/quadrature.hpp"
#include "hthmix/specfun.hpp"

namespace hth {

// One HTH component: location, scale, skewness, index and concentration.
struct HthParams {
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;
    Eigen::MatrixXd lambda_mat;
    double index = 1.0;
    double omega = 1.0;

    Eigen::Index p() const { return mu.size(); }
    Eigen::Index q() const { return lambda_mat.cols(); }

    Eigen::MatrixXd omega_mat() const;  // sigma + lambda lambda^T
    Eigen::MatrixXd delta_mat() const;  // I - lambda^T omega^-1 lambda

    // Throws std::invalid_argument when dimensions or definiteness fail.
    void validate() const;
    // Sort the columns of lambda_mat by descending norm.
    void canonicalize();
};

// Factorizations shared by every density evaluation of one component.
struct HthDerived {
    explicit HthDerived(const HthParams& params);

    Eigen::Index p, q;
    double index, omega;
    Eigen::VectorXd mu;
    Eigen::LLT<Eigen::MatrixXd> omega_llt;
    double log_det_omega;
    Eigen::MatrixXd coef;   // lambda^T omega^-1, q x p
    Eigen::MatrixXd delta;  // q x q
    double log_bessel_index;

    double mahalanobis(const Eigen::VectorXd& x) const;
    Eigen::VectorXd skew_arg(const Eigen::VectorXd& x) const;
};

// ln h(x) given delta = Mahalanobis distance, log|scale| and dimension.
// The concentration pair is (omega, omega).
double sym_hyperbolic_log_kernel(double delta, double log_det, Eigen::Index dim, double index, double omega);

double sym_hyperbolic_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                             double index, double omega);

// H_q(point | mu, scale, index, omega, omega) as E[Phi_q((point - mu)/sqrt(W) | scale)],
// W ~ GIG(omega, omega, index).
double sym_hyperbolic_logcdf(const Eigen::VectorXd& point, const Eigen::VectorXd& mu, const Eigen::MatrixXd& scale,
                             double index, double omega_pair, const QuadratureSpec& quad = {},
                             const MvnSpec& mvn = {});
double sym_hyperbolic_cdf(const Eigen::VectorXd& point, const Eigen::VectorXd& mu, const Eigen::MatrixXd& scale,
                          double index, double omega_pair, const QuadratureSpec& quad = {}, const MvnSpec& mvn = {});

// E[Phi_q(c / sqrt(W) | scale)] in log form, W ~ GIG(psi, chi, index).
double log_gig_mixed_normal_cdf(const Eigen::VectorXd& c, const Eigen::MatrixXd& scale, double psi, double chi,
                                double index, const QuadratureSpec& quad, const MvnSpec& mvn);

double cfusn_logpdf(const Eigen::VectorXd& y, const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                    const Eigen::MatrixXd& lambda_mat, const MvnSpec& mvn = {});

double hth_logpdf(const Eigen::VectorXd& x, const HthParams& params, const QuadratureSpec& quad = {},
                  const MvnSpec& mvn = {});
double hth_logpdf(const Eigen::VectorXd& x, const HthDerived& d, const QuadratureSpec& quad, const MvnSpec& mvn);

// n x p matrix of draws.
Eigen::MatrixXd hth_sample(const HthParams& params, std::size_t n, std::uint64_t seed);

double posterior_w_logdensity_unnorm(double w, const Eigen::VectorXd& x, const HthParams& params,
                                     const MvnSpec& mvn = {});

// Symmetric positive semi-definite square root.
Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& a);

}  // namespace hth
