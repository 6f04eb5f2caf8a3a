#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hthmix/hyperbolic.hpp"

namespace hth {

// Density on a uniform planar grid; density(i, j) is at (x1[i], x2[j]).
struct ContourGrid {
    std::vector<double> x1;
    std::vector<double> x2;
    Eigen::MatrixXd density;
};

// bounds row k holds (min, max) of coordinate k.
ContourGrid contour_grid(const HthParams& params, const Eigen::Matrix2d& bounds, int resolution,
                         const QuadratureSpec& quad = {}, const MvnSpec& mvn = {});

void write_contour_csv(const ContourGrid& grid, const std::string& path);

struct LevelReport {
    double level;
    int cells;       // grid cells in the upper-level set
    int violations;  // boundary-cell pairs whose chord leaves the set
};

struct ConvexityReport {
    std::vector<LevelReport> levels;

    int total_violations() const;
};

// Discrete convexity of the upper-level sets at level_count quantiles of the
// grid densities above 1e-6 of the peak.
ConvexityReport quasiconcavity_check(const ContourGrid& grid, int level_count);

// The two planar parameter sets used for the convexity illustrations:
// one skewing dimension when multi is false, two otherwise.
HthParams appendix_params(bool multi, double index);

}  // namespace hth
