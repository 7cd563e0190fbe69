#include "ct/num/spline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ct::num {

// Slope of the Newton interpolant through up to five samples, evaluated at
// the first sample. Node order is arbitrary, so the same routine serves both
// edges; exact for quartics on any spacing.
static double edge_slope(const std::vector<std::size_t>& idx, const std::vector<double>& x,
                         const std::vector<double>& y) {
    const std::size_t k = idx.size();
    std::vector<double> dd(k);
    for (std::size_t i = 0; i < k; ++i)
        dd[i] = y[idx[i]];
    for (std::size_t lvl = 1; lvl < k; ++lvl)
        for (std::size_t i = k - 1; i >= lvl; --i)
            dd[i] = (dd[i] - dd[i - 1]) / (x[idx[i]] - x[idx[i - lvl]]);
    // p'(x_{idx0}) = sum_j dd[j] * prod_{i<j, i>=1} (x_{idx0} - x_{idxi})
    double slope = 0, prod = 1;
    for (std::size_t j = 1; j < k; ++j) {
        slope += dd[j] * prod;
        prod *= x[idx[0]] - x[idx[j]];
    }
    return slope;
}

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
    if (x_.size() != y_.size() || x_.size() < 2)
        throw std::invalid_argument("CubicSpline: need matching grids with >= 2 points");
    const std::size_t n = x_.size(), k = std::min<std::size_t>(n, 5);
    std::vector<std::size_t> left(k), right(k);
    for (std::size_t i = 0; i < k; ++i) {
        left[i] = i;
        right[i] = n - 1 - i;
    }
    build(edge_slope(left, x_, y_), edge_slope(right, x_, y_));
}

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y, double d_left,
                         double d_right)
    : x_(std::move(x)), y_(std::move(y)) {
    if (x_.size() != y_.size() || x_.size() < 2)
        throw std::invalid_argument("CubicSpline: need matching grids with >= 2 points");
    build(d_left, d_right);
}

void CubicSpline::build(double d_left, double d_right) {
    const std::size_t n = x_.size();
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (!(x_[i + 1] > x_[i]))
            throw std::invalid_argument("CubicSpline: grid must be strictly increasing");
    d_.assign(n, 0.0);
    d_.front() = d_left;
    d_.back() = d_right;
    if (n == 2)
        return;
    // Tridiagonal system for interior slopes (C2 conditions).
    std::vector<double> a(n, 0), b(n, 0), c(n, 0), rhs(n, 0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        double hl = x_[i] - x_[i - 1], hr = x_[i + 1] - x_[i];
        double sl = (y_[i] - y_[i - 1]) / hl, sr = (y_[i + 1] - y_[i]) / hr;
        a[i] = 1.0 / hl;
        b[i] = 2.0 * (1.0 / hl + 1.0 / hr);
        c[i] = 1.0 / hr;
        rhs[i] = 3.0 * (sl / hl + sr / hr);
    }
    rhs[1] -= a[1] * d_.front();
    rhs[n - 2] -= c[n - 2] * d_.back();
    // Thomas sweep over i = 1 .. n-2
    for (std::size_t i = 2; i + 1 < n; ++i) {
        double m = a[i] / b[i - 1];
        b[i] -= m * c[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    d_[n - 2] = rhs[n - 2] / b[n - 2];
    for (std::size_t i = n - 3; i >= 1; --i) {
        d_[i] = (rhs[i] - c[i] * d_[i + 1]) / b[i];
        if (i == 1)
            break;
    }
}

std::size_t CubicSpline::locate(double x) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = (it == x_.begin()) ? 0 : std::size_t(it - x_.begin()) - 1;
    if (i + 1 >= x_.size())
        i = x_.size() - 2;
    return i;
}

double CubicSpline::operator()(double x) const {
    std::size_t i = locate(x);
    double h = x_[i + 1] - x_[i];
    double t = (x - x_[i]) / h;
    double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
    double h10 = t * (1 - t) * (1 - t);
    double h01 = t * t * (3 - 2 * t);
    double h11 = t * t * (t - 1);
    return h00 * y_[i] + h10 * h * d_[i] + h01 * y_[i + 1] + h11 * h * d_[i + 1];
}

double CubicSpline::derivative(double x) const {
    std::size_t i = locate(x);
    double h = x_[i + 1] - x_[i];
    double t = (x - x_[i]) / h;
    double g00 = 6 * t * (t - 1) / h;
    double g10 = (1 - t) * (1 - 3 * t);
    double g01 = -g00;
    double g11 = t * (3 * t - 2);
    return g00 * y_[i] + g10 * d_[i] + g01 * y_[i + 1] + g11 * d_[i + 1];
}

} // namespace ct::num
