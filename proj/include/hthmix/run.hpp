#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hthmix/dataset.hpp"
#include "hthmix/em.hpp"

namespace hth {

struct ContourRequest {
    enum class Source { hthu, hthm, fit };

    Source source = Source::hthu;
    std::vector<double> indices = {-2.0, -1.0, 0.0, 1.0, 2.0};
    Eigen::Matrix2d bounds = (Eigen::Matrix2d() << -10.0, 12.0, -10.0, 12.0).finished();
    int resolution = 100;
    bool check_convexity = false;
    int levels = 10;
};

struct RunConfig {
    std::string input;
    std::vector<std::string> columns;
    std::string label_column;
    bool scale = true;
    std::vector<int> G = {1};
    std::vector<int> q = {1};
    FitConfig fit;
    std::string out_dir = "hthmix_out";
    std::optional<ContourRequest> contour;

    // Dimension checks need p, known only after loading.
    void validate(int p) const;
};

struct RunRow {
    int G = 0;
    int q = 0;
    bool ok = false;
    std::string error;
    double loglik = 0.0;
    double bic = 0.0;
    int n_iter = 0;
    bool converged = false;
    std::optional<double> ari;
    std::string file;
};

struct RunSummary {
    std::vector<RunRow> rows;
    int best = -1;  // index into rows of the largest BIC

    int failures() const;
};

// Fits every (G, q) pair on an already prepared dataset and writes
// fit_G{G}_q{q}.json, labels_G{G}_q{q}.csv, summary.csv and summary.json.
RunSummary run_fit(const Dataset& data, const RunConfig& config);

// Loads and optionally standardizes the input, then calls run_fit.
RunSummary run_fit(const RunConfig& config);

struct ContourOutput {
    std::string file;
    std::string label;
    int violations = -1;  // -1 when not checked
};

// Writes contour_*.csv files (and convexity.csv when requested). The fit
// source uses the components of the given fitted model, in original units.
std::vector<ContourOutput> run_contours(const ContourRequest& req, const std::string& out_dir,
                                        const MixtureModel* fitted = nullptr, const Scaling* scaling = nullptr,
                                        const QuadratureSpec& quad = {}, const MvnSpec& mvn = {});

}  // namespace hth
