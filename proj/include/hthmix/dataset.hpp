#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hthmix/hyperbolic.hpp"

namespace hth {

// Affine map from stored (scaled) units back to the original ones:
// original = center + scale .* stored.
struct Scaling {
    Eigen::VectorXd center;
    Eigen::VectorXd scale;

    bool identity() const { return center.size() == 0; }
};

struct Dataset {
    Eigen::MatrixXd x;
    std::vector<std::string> columns;
    Scaling scaling;
    std::vector<int> labels;  // from the label column, 1-based; empty if none
    std::vector<std::string> label_names;
};

// Header row required. An empty column list selects every column except the
// label column.
Dataset load_csv(const std::string& path, const std::vector<std::string>& columns,
                 const std::string& label_column = "");

// Per-column (x - mean) / sd with the sample standard deviation.
Dataset standardize(const Dataset& d);

HthParams to_original_units(const HthParams& params, const Scaling& s);

// RFC 4180 record splitting; exposed for tests.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

}  // namespace hth
