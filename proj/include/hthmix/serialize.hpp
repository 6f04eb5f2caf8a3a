#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hthmix/dataset.hpp"
#include "hthmix/em.hpp"

namespace hth {

// A fitted model plus the context needed to report it in original units.
struct FitRecord {
    FitResult fit;
    Scaling scaling;
    std::vector<std::string> columns;
    std::optional<double> ari;
};

// Pretty-printed JSON. Original-unit parameters are derived from the scaled
// ones on every write, so parse followed by write reproduces the text.
std::string write_fit_json(const FitRecord& rec);
FitRecord parse_fit_json(const std::string& text);

}  // namespace hth
