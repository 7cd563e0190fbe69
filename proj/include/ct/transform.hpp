#pragma once
#include <complex>
#include <functional>
#include <limits>
#include <vector>

#include "ct/density.hpp"
#include "ct/num/spline.hpp"

namespace ct {

using cplx = std::complex<double>;

// Compactly supported radial profile u(r): cubic interpolation through the
// samples, identically zero at and beyond support_radius. The samples must
// cover [0, support_radius] for transforms to accept the profile.
class RadialProfile {
public:
    RadialProfile() = default;
    RadialProfile(std::vector<double> r_grid, std::vector<double> values,
                  double support_radius);

    double operator()(double r) const;
    double support_radius() const { return support_; }
    const std::vector<double>& r_grid() const { return r_; }
    const std::vector<double>& values() const { return u_; }
    bool empty() const { return r_.empty(); }
    // resolution floor of the sampled representation, ~ the interpolation
    // error scale; quadrature refinement must not chase structure below it
    double sample_noise() const { return noise_; }

private:
    std::vector<double> r_, u_;
    double support_ = 0;
    num::CubicSpline spline_;
    bool flat_zero_ = true;
    // sampled zeros stay zeros: spline evaluation is suppressed on the
    // leading and trailing all-zero sample runs
    double lead_zero_r_ = -1.0;
    double trail_zero_r_ = std::numeric_limits<double>::infinity();
    double noise_ = 0.0;
};

// C^infinity bump exp(-1 / (1 - (r/s)^2)) on [0, s), sampled on n+1 uniform
// nodes. All derivatives vanish at the support edge.
RadialProfile bump_profile(double s, int n = 2048);

// Profile sampled from a callable on n+1 uniform nodes of [0, support].
RadialProfile sampled_profile(const std::function<double(double)>& u, double support,
                              int n = 2048);

// L1 and L2 norms with respect to the measure A(r) dr.
double radial_l1_norm(const DensityModel& model, const RadialProfile& f);
double radial_l2_norm(const DensityModel& model, const RadialProfile& f);

// Tuning knobs for the spectral-side grid and the two evaluation paths.
// Below `split` the eigenfunction ODE is solved directly; above it phi and
// c(lambda) come from the scattering representation
//   phi_lambda(r) = 2 Re[ c(lambda) C^{1/2} m(r, lambda) e^{i lambda r} ] / A^{1/2}(r)
// with the Jost amplitude m obtained by a downward Volterra march.
struct TransformOptions {
    double lambda_max = 500.0;  // spectral truncation radius
    int panel_nodes = 12;       // Gauss nodes per lambda panel
    double first_width = 0.25;  // lambda panel width at 0
    double growth = 1.15;       // geometric panel growth up to width_cap
    double width_cap = 1.3;     // resolves transforms of supports up to ~8
    double split = 12.0;        // direct ODE below, scattering path above
    int cheb_nodes = 33;        // Chebyshev nodes for c(lambda) above the split
    double match_r = 0.35;      // radius where phi is matched to fix c(lambda)
    double tail_budget = 2e-3;  // admissible endpoint mass of |fhat| |c|^-2, relative
    double trunc_rel = 1e-14;   // truncation threshold relative to the peak
    int trunc_run = 50;         // consecutive nodes below threshold
};

// c(lambda) and the Plancherel density |c(lambda)|^-2 on a Gauss panel grid
// over [0, lambda_max]. C0 stays 0 (unset) until calibrate_C0 runs.
struct CFunctionTable {
    std::vector<double> lambda_grid;        // ascending Gauss nodes
    std::vector<double> weights;            // matching quadrature weights
    std::vector<cplx> c_values;
    std::vector<double> plancherel_density; // |c|^-2 at the nodes
    std::vector<double> panel_edges;        // 0 = e_0 < e_1 < ... = lambda_max
    int panel_nodes = 12;
    double split = 12.0;
    double C0 = 0.0;
    double C0_dispersion = 0.0;
    double c_interp_error = 0.0; // probed relative error of the c interpolant
    bool calibrated() const { return C0 > 0.0; }
};

CFunctionTable build_c_table(const DensityModel& model, const TransformOptions& opts = {});

// fhat(lambda) = int_0^inf u(r) phi_lambda(r) A(r) dr on an arbitrary real
// grid (even in lambda, so the sign of the entries is ignored). The error
// indicator is an order-of-magnitude bound from the tail initialization and
// the panel resolution studies, not a computed residual.
std::vector<cplx> spherical_transform(const DensityModel& model, const RadialProfile& f,
                                      const std::vector<double>& lambda_grid,
                                      const TransformOptions& opts = {},
                                      double* error_estimate = nullptr);

// Same transform evaluated on the table grid.
std::vector<cplx> spherical_transform(const DensityModel& model, const RadialProfile& f,
                                      const CFunctionTable& table,
                                      double* error_estimate = nullptr);

// Single evaluation by direct quadrature against phi_lambda; admits complex
// lambda (phi is entire), e.g. fhat(i rho) = int u A.
cplx spherical_transform_at(const DensityModel& model, const RadialProfile& f, cplx lambda);

struct CalibrationResult {
    double C0 = 0;
    double mean_dispersion = 0;
    double max_dispersion = 0;
};

// Fixes the inversion constant from u(0) = C0 int fhat |c|^-2 d lambda over
// the given profiles and stores it on the table. Throws
// InconsistentCalibration when the per-profile values disagree beyond 1e-4.
CalibrationResult calibrate_C0(const DensityModel& model,
                               const std::vector<RadialProfile>& profiles,
                               CFunctionTable& table);

// u(r) = C0 int fhat(lambda) phi_lambda(r) |c|^-2 d lambda for fhat sampled
// on the table grid. The spectral integral is truncated where |fhat| |c|^-2
// stays below trunc_rel relative to its peak; the discarded mass is reported
// through truncation_bound. Throws TailTooFat when the integrand has not
// decayed at lambda_max.
RadialProfile inverse_transform(const DensityModel& model, const std::vector<cplx>& fhat,
                                const CFunctionTable& table,
                                const std::vector<double>& r_grid,
                                double* truncation_bound = nullptr);

struct PlancherelResult {
    double lhs = 0;          // int f g A dr
    double rhs = 0;          // C0 int fhat conj(ghat) |c|^-2 d lambda
    double relative_gap = 0; // |lhs - rhs| / (|f|_2 |g|_2)
};

PlancherelResult plancherel_radial(const DensityModel& model, const RadialProfile& f,
                                   const RadialProfile& g, const CFunctionTable& table);

} // namespace ct
