#include "hthmix/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "hthmix/errors.hpp"

namespace hth {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kTailDrop = 36.0;
constexpr double kMaxT = 700.0;
constexpr int kNodesPerSubdivision = 50;

// Running trapezoid sums kept relative to a movable log reference.
struct Sums {
    double ref = kNegInf;
    std::vector<double> signed_sum;
    std::vector<double> abs_sum;

    explicit Sums(std::size_t m) : signed_sum(m, 0.0), abs_sum(m, 0.0) {}

    void add(double g, const std::vector<double>& mult) {
        if (g == kNegInf) return;
        if (g > ref) {
            if (ref != kNegInf) {
                const double f = std::exp(ref - g);
                for (auto& v : signed_sum) v *= f;
                for (auto& v : abs_sum) v *= f;
            }
            ref = g;
        }
        const double e = std::exp(g - ref);
        for (std::size_t k = 0; k < mult.size(); ++k) {
            signed_sum[k] += e * mult[k];
            abs_sum[k] += e * std::abs(mult[k]);
        }
    }
};

KernelIntegral integrate_exp_sinh(const KernelFn& f, std::size_t n_mult, double mode, const QuadratureSpec& spec) {
    std::vector<double> mult(n_mult);
    const double ref = f(mode, mult.data());
    if (!std::isfinite(ref)) throw NumericalError("integrate_kernel: kernel not finite at its mode");
    KernelIntegral out;
    out.log_scale = ref;
    out.value.assign(n_mult, 0.0);
    boost::math::quadrature::exp_sinh<double> integrator(static_cast<std::size_t>(std::max(4, spec.max_subdivisions / 20)));
    for (std::size_t k = 0; k < n_mult; ++k) {
        std::vector<double> buf(n_mult);
        auto g = [&](double w) {
            if (!(w > 0.0) || !std::isfinite(w)) return 0.0;
            const double l = f(w, buf.data());
            ++out.evaluations;
            if (l == kNegInf) return 0.0;
            return std::exp(l - ref) * buf[k];
        };
        double err = 0.0, l1 = 0.0;
        const double v = integrator.integrate(g, spec.relative_tolerance, &err, &l1);
        const double rel = l1 > 0.0 ? err / l1 : 0.0;
        if (!std::isfinite(v) || rel > std::max(spec.relative_tolerance * 10.0, 1e-6)) {
            throw NumericalError("integrate_kernel: double-exponential rule did not converge", rel);
        }
        out.value[k] = v;
        out.achieved_tolerance = std::max(out.achieved_tolerance, rel);
    }
    return out;
}

}  // namespace

void QuadratureSpec::validate() const {
    if (!(relative_tolerance > 0.0)) throw std::invalid_argument("QuadratureSpec: relative_tolerance must be positive");
    if (max_subdivisions < 1) throw std::invalid_argument("QuadratureSpec: max_subdivisions must be >= 1");
}

double KernelIntegral::log_of(std::size_t k) const {
    const double v = value.at(k);
    if (v <= 0.0) return kNegInf;
    return log_scale + std::log(v);
}

KernelAnchor gig_anchor(double psi, double chi, double index) {
    const double root = std::sqrt(index * index + psi * chi);
    const double mode = index >= 0.0 ? (index + root) / psi : chi / (root - index);
    const double curv = 0.5 * (psi * mode + chi / mode);
    return {mode, 1.0 / std::sqrt(curv)};
}

KernelIntegral integrate_kernel(const KernelFn& f, std::size_t n_mult, double mode, double width,
                                const QuadratureSpec& spec) {
    spec.validate();
    if (!(mode > 0.0) || !std::isfinite(mode)) throw std::invalid_argument("integrate_kernel: mode must be positive");
    if (spec.transform == QuadratureSpec::Transform::none) return integrate_exp_sinh(f, n_mult, mode, spec);

    const double t0 = std::log(mode);
    double h = std::clamp(width, 1e-3, 2.0);
    const int max_nodes = kNodesPerSubdivision * spec.max_subdivisions;

    std::vector<double> mult(n_mult);
    int evaluations = 0;
    auto eval = [&](double t) {
        ++evaluations;
        const double l = f(std::exp(t), mult.data());
        return std::isnan(l) ? kNegInf : l + t;
    };

    Sums sums(n_mult);
    double gmax = kNegInf;
    auto scan = [&](int dir) {
        int j = dir > 0 ? 0 : -1;
        int last = 0;
        for (;; j += dir) {
            const double t = t0 + j * h;
            if (std::abs(t) > kMaxT || evaluations > max_nodes) break;
            const double g = eval(t);
            sums.add(g, mult);
            gmax = std::max(gmax, g);
            last = j;
            if (gmax != kNegInf && g < gmax - kTailDrop && std::abs(j) >= 2) break;
        }
        return last;
    };
    const int jhi = scan(+1);
    const int jlo = scan(-1);
    if (gmax == kNegInf) throw NumericalError("integrate_kernel: kernel vanishes on the scanned range");

    auto estimate = [&](double step, std::vector<double>& s, std::vector<double>& a) {
        for (std::size_t k = 0; k < n_mult; ++k) {
            s[k] = sums.signed_sum[k] * step;
            a[k] = sums.abs_sum[k] * step;
        }
    };
    std::vector<double> prev(n_mult), prev_abs(n_mult), cur(n_mult), cur_abs(n_mult);
    estimate(h, prev, prev_abs);
    double prev_ref = sums.ref;

    double achieved = std::numeric_limits<double>::infinity();
    const double span_lo = t0 + jlo * h;
    int panels = jhi - jlo;
    for (int level = 1;; ++level) {
        const double step = h / 2.0;
        for (int j = 0; j < panels; ++j) sums.add(eval(span_lo + (j + 0.5) * h), mult);
        estimate(step, cur, cur_abs);
        // Bring the previous estimate onto the current reference.
        const double f = std::exp(prev_ref - sums.ref);
        achieved = 0.0;
        for (std::size_t k = 0; k < n_mult; ++k) {
            const double diff = std::abs(cur[k] - prev[k] * f);
            const double scale = cur_abs[k];
            if (scale > 0.0) achieved = std::max(achieved, diff / scale);
        }
        // Trapezoid error roughly squares with each halving.
        const double squared = 100.0 * achieved * achieved;
        if (std::min(achieved, squared) <= spec.relative_tolerance) {
            achieved = std::min(achieved, squared);
            break;
        }
        if (evaluations + 2 * panels > max_nodes) {
            throw NumericalError("integrate_kernel: tolerance not reached within the node budget", achieved);
        }
        prev = cur;
        prev_ref = sums.ref;
        h = step;
        panels *= 2;
    }

    KernelIntegral out;
    out.log_scale = sums.ref;
    out.value = cur;
    out.achieved_tolerance = achieved;
    out.evaluations = evaluations;
    return out;
}

}  // namespace hth
