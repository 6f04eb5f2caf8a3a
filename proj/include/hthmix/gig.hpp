#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace hth {

// Generalized inverse Gaussian law with density proportional to
// w^(lambda-1) exp(-(psi w + chi / w) / 2) on w > 0.
struct GigParams {
    double psi = 1.0;
    double chi = 1.0;
    double lambda = 1.0;

    void validate() const;
};

struct GigMoments {
    double mean;      // E[W]
    double inv_mean;  // E[1/W]
    double log_mean;  // E[ln W]
};

double gig_logpdf(double w, const GigParams& p);
GigMoments gig_moments(const GigParams& p);

// Exact sampler; the envelope is built once and reused across draws.
class GigSampler {
public:
    explicit GigSampler(const GigParams& p);
    double operator()(std::mt19937_64& rng) const;

private:
    enum class Method { rou_shift, rou_plain, piecewise };

    double log_g(double x) const;
    double draw_standard(std::mt19937_64& rng) const;

    Method method_;
    double lambda_;  // |lambda|
    double omega_;
    double alpha_;
    bool invert_;
    double xm_ = 0.0, nc_ = 0.0;
    double umin_ = 0.0, umax_ = 0.0;
    double x0_ = 0.0, xs_ = 0.0, k1_ = 0.0, k2_ = 0.0, k3_ = 0.0, a1_ = 0.0, a2_ = 0.0, a3_ = 0.0;
};
std::vector<double> gig_sample(const GigParams& p, std::size_t n, std::uint64_t seed);

}  // namespace hth
