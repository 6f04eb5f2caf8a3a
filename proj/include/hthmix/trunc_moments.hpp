#pragma once

#include <optional>

#include <Eigen/Dense>

#include "hthmix/quadrature.hpp"
#include "hthmix/specfun.hpp"

namespace hth {

// Symmetric hyperbolic law h_q(mu, sigma, index, omega, omega) restricted to
// y >= lower coordinatewise. Entries of lower may be -infinity.
struct ThParams {
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;
    double index = 1.0;
    double omega = 1.0;
    Eigen::VectorXd lower;  // empty means the zero vector

    Eigen::VectorXd bounds() const;
    void validate() const;
};

// ln P(Y >= lower) at a given index.
double th_log_orthant(const ThParams& p, double index, const QuadratureSpec& quad = {}, const MvnSpec& mvn = {});

double th_orthant_prob(const ThParams& p, const QuadratureSpec& quad = {}, const MvnSpec& mvn = {});
Eigen::VectorXd th_mean(const ThParams& p, const QuadratureSpec& quad = {}, const MvnSpec& mvn = {});
Eigen::MatrixXd th_second_moment(const ThParams& p, const QuadratureSpec& quad = {}, const MvnSpec& mvn = {});

struct ThMoments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd second;
    double log_c;
};

// Orthant masses at index and index + 1 when the caller already has them.
struct OrthantPair {
    double log_c;
    double log_c_next;
};

ThMoments th_moments(const ThParams& p, const QuadratureSpec& quad = {}, const MvnSpec& mvn = {},
                     std::optional<OrthantPair> known = std::nullopt);

struct UnivariateMoments {
    double m1;
    double m2;
};

// First and second moments of the univariate law restricted to [l1, l2].
UnivariateMoments th_univariate_moments(double mu, double sigma2, double index, double omega, double l1, double l2,
                                        const QuadratureSpec& quad = {});

}  // namespace hth
