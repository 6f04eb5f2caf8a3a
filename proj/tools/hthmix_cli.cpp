#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "hthmix/run.hpp"
#include "hthmix/serialize.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

int main(int argc, char** argv) {
    CLI::App app{"Hidden truncation hyperbolic mixtures: fit, select by BIC, export contours"};

    hth::RunConfig cfg;
    std::string contour;
    std::vector<double> contour_bounds;
    std::vector<double> contour_lambdas = {-2.0, -1.0, 0.0, 1.0, 2.0};
    int contour_resolution = 100;
    bool check_convexity = false;
    int levels = 10;
    bool no_scale = false;

    app.add_option("--input", cfg.input, "CSV file with a header row");
    app.add_option("--columns", cfg.columns, "Columns to use (default: all but the label column)")->delimiter(',');
    app.add_option("--label-column", cfg.label_column, "Column with known classes, used for ARI");
    app.add_option("--G", cfg.G, "Numbers of components, e.g. 1,2,3")->delimiter(',');
    app.add_option("--q", cfg.q, "Skewing dimensions, e.g. 1,2")->delimiter(',');
    app.add_option("--starts", cfg.fit.n_starts, "k-means starts per fit")->check(CLI::PositiveNumber);
    app.add_option("--seed", cfg.fit.seed, "Base seed");
    app.add_flag("--no-scale", no_scale, "Do not standardize columns");
    app.add_option("--tol", cfg.fit.loglik_rel_tol, "Relative log-likelihood change for convergence");
    app.add_option("--max-iter", cfg.fit.max_iter, "Iteration cap per start")->check(CLI::PositiveNumber);
    app.add_option("--threads", cfg.fit.threads, "E-step threads (0 = OpenMP default, 1 = serial)");
    app.add_option("--out", cfg.out_dir, "Output directory");
    app.add_option("--contour", contour, "Contour grids: hthu, hthm or fit")
        ->check(CLI::IsMember({"hthu", "hthm", "fit"}));
    app.add_option("--contour-lambdas", contour_lambdas, "Index values for hthu/hthm grids")->delimiter(',');
    app.add_option("--contour-bounds", contour_bounds, "x1min,x1max,x2min,x2max")->delimiter(',')->expected(4);
    app.add_option("--contour-resolution", contour_resolution, "Grid points per axis");
    app.add_flag("--check-convexity", check_convexity, "Test the upper-level sets of each grid for convexity");
    app.add_option("--levels", levels, "Quantile levels for the convexity check");

    CLI11_PARSE(app, argc, argv);
    cfg.scale = !no_scale;

#ifdef _OPENMP
    if (cfg.fit.threads > 0) omp_set_num_threads(cfg.fit.threads);
#endif

    if (!contour.empty()) {
        hth::ContourRequest req;
        static const std::map<std::string, hth::ContourRequest::Source> sources = {
            {"hthu", hth::ContourRequest::Source::hthu},
            {"hthm", hth::ContourRequest::Source::hthm},
            {"fit", hth::ContourRequest::Source::fit}};
        req.source = sources.at(contour);
        req.indices = contour_lambdas;
        if (!contour_bounds.empty()) {
            req.bounds << contour_bounds[0], contour_bounds[1], contour_bounds[2], contour_bounds[3];
        }
        req.resolution = contour_resolution;
        req.check_convexity = check_convexity;
        req.levels = levels;
        cfg.contour = req;
    }

    if (cfg.input.empty() && (!cfg.contour || cfg.contour->source == hth::ContourRequest::Source::fit)) {
        std::cerr << "error: --input is required unless --contour hthu|hthm is given\n";
        return 1;
    }

    int exit_code = 0;
    try {
        if (!cfg.input.empty()) {
            hth::Dataset data = hth::load_csv(cfg.input, cfg.columns, cfg.label_column);
            if (cfg.scale) data = hth::standardize(data);
            std::cout << "data: n=" << data.x.rows() << " p=" << data.x.cols() << (cfg.scale ? " (standardized)" : "")
                      << "\n";
            const hth::RunSummary summary = hth::run_fit(data, cfg);
            for (std::size_t k = 0; k < summary.rows.size(); ++k) {
                const auto& r = summary.rows[k];
                std::printf("G=%d q=%d ", r.G, r.q);
                if (r.ok) {
                    std::printf("loglik=%.6f bic=%.6f iter=%d%s", r.loglik, r.bic, r.n_iter,
                                r.converged ? "" : " (not converged)");
                    if (r.ari) std::printf(" ari=%.4f", *r.ari);
                    if (static_cast<int>(k) == summary.best) std::printf("  <- best BIC");
                } else {
                    std::printf("FAILED: %s", r.error.c_str());
                }
                std::printf("\n");
            }
            if (summary.best < 0) {
                std::cerr << "error: every fit failed\n";
                return 1;
            }
            if (summary.failures() > 0) exit_code = 2;
            if (cfg.contour) {
                const auto& best = summary.rows[static_cast<std::size_t>(summary.best)];
                std::ifstream in(std::filesystem::path(cfg.out_dir) / best.file);
                std::stringstream buf;
                buf << in.rdbuf();
                const hth::FitRecord rec = hth::parse_fit_json(buf.str());
                if (cfg.contour->source == hth::ContourRequest::Source::fit && rec.fit.model.p != 2) {
                    std::cerr << "error: contours need p = 2\n";
                    return 1;
                }
                const auto outs = hth::run_contours(*cfg.contour, cfg.out_dir, &rec.fit.model, &rec.scaling,
                                                    cfg.fit.quad, cfg.fit.mvn);
                for (const auto& o : outs) {
                    std::printf("wrote %s", o.file.c_str());
                    if (o.violations >= 0) std::printf(" convexity violations=%d", o.violations);
                    std::printf("\n");
                }
            }
        } else {
            const auto outs = hth::run_contours(*cfg.contour, cfg.out_dir, nullptr, nullptr, cfg.fit.quad, cfg.fit.mvn);
            for (const auto& o : outs) {
                std::printf("wrote %s", o.file.c_str());
                if (o.violations >= 0) std::printf(" convexity violations=%d", o.violations);
                std::printf("\n");
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return exit_code;
}
