#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace hth {

struct QuadratureSpec {
    enum class Transform {
        // Trapezoid rule in t = ln w, anchored at the kernel mode.
        log_substitution,
        // Double-exponential rule directly on (0, inf).
        none,
    };

    double relative_tolerance = 1e-8;
    int max_subdivisions = 200;
    Transform transform = Transform::log_substitution;

    void validate() const;
};

// Result of integrating several functionals against one positive kernel:
// integral k equals exp(log_scale) * value[k].
struct KernelIntegral {
    double log_scale = 0.0;
    std::vector<double> value;
    double achieved_tolerance = 0.0;
    int evaluations = 0;

    double log_of(std::size_t k) const;
};

// Called at each node w > 0. Returns ln of the kernel at w and writes the
// multipliers m_k(w) into mult. The kernel may be -infinity.
using KernelFn = std::function<double(double w, double* mult)>;

// I_k = int_0^inf exp(L(w)) m_k(w) dw. mode and width locate the bulk of
// the kernel on the log scale (width is measured in ln w).
KernelIntegral integrate_kernel(const KernelFn& f, std::size_t n_mult, double mode, double width,
                                const QuadratureSpec& spec);

struct KernelAnchor {
    double mode;
    double width;
};

// Mode and curvature scale, on the ln w axis, of w^index exp(-(psi w + chi / w) / 2).
KernelAnchor gig_anchor(double psi, double chi, double index);

}  // namespace hth
