#pragma once
#include <vector>

namespace ct::num {

// C2 cubic spline through (x_i, y_i) with clamped end slopes. End slopes are
// estimated from the data by one-sided 4th order differences unless supplied.
class CubicSpline {
public:
    CubicSpline() = default;
    CubicSpline(std::vector<double> x, std::vector<double> y);
    CubicSpline(std::vector<double> x, std::vector<double> y, double d_left, double d_right);

    double operator()(double x) const;
    double derivative(double x) const;
    bool empty() const { return x_.empty(); }
    double x_min() const { return x_.front(); }
    double x_max() const { return x_.back(); }

private:
    void build(double d_left, double d_right);
    std::size_t locate(double x) const;
    std::vector<double> x_, y_, d_; // nodes, values, node slopes
};

} // namespace ct::num
