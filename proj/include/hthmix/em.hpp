#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hthmix/hyperbolic.hpp"
#include "hthmix/quadrature.hpp"
#include "hthmix/specfun.hpp"

namespace hth {

struct MixtureModel {
    Eigen::VectorXd weights;
    std::vector<HthParams> components;
    int p = 0;
    int q = 0;
    int G = 0;

    void validate() const;
    // Components by descending weight (ties by first coordinate of mu),
    // skewness columns by descending norm.
    void canonicalize();
};

// Per observation i and component g; flat vectors are indexed i * G + g.
struct EStepCache {
    Eigen::MatrixXd z;
    Eigen::MatrixXd a;
    Eigen::MatrixXd b;
    Eigen::MatrixXd c;
    std::vector<Eigen::VectorXd> d;
    std::vector<Eigen::MatrixXd> E;
    Eigen::MatrixXd log_density;  // ln f(x_i | theta_g); -inf where the component was screened out
    double loglik = 0.0;          // observed log-likelihood at the model used
    int G = 0;
    int degenerate = 0;           // fallbacks at observations with non-negligible z

    const Eigen::VectorXd& d_at(Eigen::Index i, Eigen::Index g) const { return d[static_cast<std::size_t>(i * G + g)]; }
    const Eigen::MatrixXd& E_at(Eigen::Index i, Eigen::Index g) const { return E[static_cast<std::size_t>(i * G + g)]; }
};

struct FitConfig {
    int max_iter = 1000;
    double loglik_rel_tol = 1e-6;
    std::vector<double> anneal_schedule = default_schedule();
    int n_starts = 5;
    std::uint64_t seed = 1;
    QuadratureSpec quad;
    MvnSpec mvn;
    // 0 keeps the OpenMP default; 1 runs the serial reference kernels.
    int threads = 0;

    static std::vector<double> default_schedule();
    void validate() const;
};

struct FitResult {
    MixtureModel model;
    std::vector<double> loglik_trace;
    std::vector<double> anneal_trace;  // annealing power used by each E-step
    double loglik = 0.0;
    double bic = 0.0;
    std::vector<int> labels;  // 1-based
    bool converged = false;
    int n_iter = 0;
    int start = 0;
    std::vector<std::string> warnings;
};

struct KmeansResult {
    std::vector<int> labels;  // 0-based
    Eigen::MatrixXd centers;
    double within_ss;
};

KmeansResult kmeans(const Eigen::MatrixXd& data, int G, std::uint64_t seed, int restarts = 25);
MixtureModel kmeans_init(const Eigen::MatrixXd& data, int G, int q, std::uint64_t seed);

EStepCache e_step(const Eigen::MatrixXd& data, const MixtureModel& model, double anneal_d,
                  const QuadratureSpec& quad = {}, const MvnSpec& mvn = {}, int threads = 0);
// Single-threaded reference with the same arithmetic.
EStepCache e_step_serial(const Eigen::MatrixXd& data, const MixtureModel& model, double anneal_d,
                         const QuadratureSpec& quad = {}, const MvnSpec& mvn = {});

// Expectations for one observation and component, exposed for testing.
struct PointExpectations {
    double log_density;
    double a, b, c;
    Eigen::VectorXd d;
    Eigen::MatrixXd E;
    bool degenerate;
};
PointExpectations point_expectations(const Eigen::VectorXd& x, const HthDerived& comp, const QuadratureSpec& quad,
                                     const MvnSpec& mvn);

MixtureModel m_step(const Eigen::MatrixXd& data, const EStepCache& cache, const MixtureModel& model,
                    std::vector<std::string>* warnings = nullptr);

double observed_loglik(const Eigen::MatrixXd& data, const MixtureModel& model, const QuadratureSpec& quad = {},
                       const MvnSpec& mvn = {});

FitResult ecm_fit(const Eigen::MatrixXd& data, int G, int q, const FitConfig& config);
// One start from a given initial model.
FitResult ecm_run(const Eigen::MatrixXd& data, MixtureModel init, const FitConfig& config);

int count_free_params(int G, int p, int q);
double bic(double loglik, int rho, long n);

}  // namespace hth
