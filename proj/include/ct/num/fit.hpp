#pragma once
#include <span>

namespace ct::num {

struct LineFit {
    double slope = 0;
    double intercept = 0;
    double max_residual = 0;
};

LineFit fit_line(std::span<const double> x, std::span<const double> y);

} // namespace ct::num
