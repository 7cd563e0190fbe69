#include "ct/transform.hpp"

#include "ct/errors.hpp"
#include "ct/num/gauss.hpp"

#include <algorithm>
#include <cmath>

namespace ct {

RadialProfile::RadialProfile(std::vector<double> r_grid, std::vector<double> values,
                             double support_radius)
    : r_(std::move(r_grid)), u_(std::move(values)), support_(support_radius) {
    if (r_.size() < 2 || r_.size() != u_.size())
        throw DomainError("profile needs at least two samples and matching grid sizes");
    if (r_.front() < 0.0) throw DomainError("profile grid starts below zero");
    for (std::size_t i = 1; i < r_.size(); ++i)
        if (!(r_[i] > r_[i - 1])) throw DomainError("profile grid must be strictly increasing");
    for (double v : u_)
        if (!std::isfinite(v)) throw DomainError("profile samples must be finite");
    if (!(support_ > 0.0)) throw DomainError("support radius must be positive");
    flat_zero_ = std::all_of(u_.begin(), u_.end(), [](double v) { return v == 0.0; });
    if (!flat_zero_) {
        spline_ = num::CubicSpline(r_, u_);
        std::size_t a = 0;
        while (u_[a] == 0.0) ++a;
        if (a > 0) lead_zero_r_ = r_[a - 1];
        std::size_t b = u_.size();
        while (u_[b - 1] == 0.0) --b;
        if (b < u_.size()) trail_zero_r_ = r_[b];
        // fourth difference ~ h^4 u'''', the scale the spline cannot resolve
        for (std::size_t i = 2; i + 2 < u_.size(); ++i) {
            double d4 = u_[i - 2] - 4.0 * u_[i - 1] + 6.0 * u_[i] - 4.0 * u_[i + 1] + u_[i + 2];
            noise_ = std::max(noise_, std::abs(d4) / 16.0);
        }
    }
}

double RadialProfile::operator()(double r) const {
    if (flat_zero_ || r_.empty()) return 0.0;
    if (r >= support_ || r > r_.back()) return 0.0;
    if (r <= lead_zero_r_ || r >= trail_zero_r_) return 0.0;
    if (r <= r_.front()) return u_.front();
    return spline_(r);
}

RadialProfile bump_profile(double s, int n) {
    if (!(s > 0.0) || n < 8) throw DomainError("bump profile needs s > 0 and n >= 8");
    std::vector<double> r(n + 1), u(n + 1);
    for (int i = 0; i <= n; ++i) {
        double x = double(i) / n;
        r[i] = s * x;
        u[i] = x < 1.0 ? std::exp(-1.0 / (1.0 - x * x)) : 0.0;
    }
    return RadialProfile(std::move(r), std::move(u), s);
}

RadialProfile sampled_profile(const std::function<double(double)>& u, double support, int n) {
    if (!(support > 0.0) || !std::isfinite(support) || n < 8)
        throw DomainError("sampled profile needs a finite positive support and n >= 8");
    std::vector<double> r(n + 1), v(n + 1);
    for (int i = 0; i <= n; ++i) {
        r[i] = support * double(i) / n;
        v[i] = u(r[i]);
    }
    return RadialProfile(std::move(r), std::move(v), support);
}

namespace {

double support_end(const RadialProfile& f) {
    return std::min(f.support_radius(), f.r_grid().back());
}

} // namespace

double radial_l1_norm(const DensityModel& model, const RadialProfile& f) {
    if (f.empty()) return 0.0;
    return num::adaptive_gk(
        [&](double r) { return std::abs(f(r)) * model.eval_A(r); }, 0.0, support_end(f),
        1e-10, 1e-14);
}

double radial_l2_norm(const DensityModel& model, const RadialProfile& f) {
    if (f.empty()) return 0.0;
    double q = num::adaptive_gk(
        [&](double r) {
            double v = f(r);
            return v * v * model.eval_A(r);
        },
        0.0, support_end(f), 1e-10, 1e-16);
    return std::sqrt(std::max(q, 0.0));
}

} // namespace ct
