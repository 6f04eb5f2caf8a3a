// Serial vs OpenMP E-step on simulated data.
#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "hthmix/contour.hpp"
#include "hthmix/em.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    const int n = argc > 1 ? std::atoi(argv[1]) : 400;
    const int reps = argc > 2 ? std::atoi(argv[2]) : 3;
    int threads = 1;
#ifdef _OPENMP
    threads = omp_get_max_threads();
#endif
    std::printf("n=%d reps=%d threads=%d\n", n, reps, threads);
    std::printf("%-4s %-4s %12s %12s %8s %s\n", "G", "q", "serial_s", "parallel_s", "speedup", "identical");
    for (int q : {1, 2}) {
        const hth::HthParams truth = hth::appendix_params(q == 2, 1.0);
        const Eigen::MatrixXd x = hth::hth_sample(truth, static_cast<std::size_t>(n), 7);
        for (int G : {1, 3}) {
            const hth::MixtureModel model = hth::kmeans_init(x, G, q, 11);
            hth::EStepCache a, b;
            auto t0 = std::chrono::steady_clock::now();
            for (int r = 0; r < reps; ++r) a = hth::e_step_serial(x, model, 1.0);
            const double ts = seconds_since(t0) / reps;
            t0 = std::chrono::steady_clock::now();
            for (int r = 0; r < reps; ++r) b = hth::e_step(x, model, 1.0);
            const double tp = seconds_since(t0) / reps;
            const bool same = a.loglik == b.loglik && a.z == b.z && a.a == b.a && a.b == b.b && a.c == b.c;
            std::printf("%-4d %-4d %12.4f %12.4f %8.2f %s\n", G, q, ts, tp, ts / tp, same ? "yes" : "NO");
        }
    }
    return 0;
}
