#pragma once
#include <complex>
#include <vector>

#include "ct/density.hpp"

namespace ct {

using cplx = std::complex<double>;

struct SolveOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    int series_order = 12;      // origin series order for the regular solution
    double series_radius = 1e-3; // handoff radius from series to stepper
    double match_tail = 1e-10;  // admissible Jost initialization error
    double match_rmin = 20.0;
    double match_rmax = 60.0;
    // independent finite-difference defect audit of the returned solution
    enum class Audit { None, Sparse, Full } audit = Audit::Sparse;
};

// One eigenfunction solve: phi_lambda on a grid, optional scattering
// solutions, the connection coefficient c(lambda), and diagnostics.
struct SphericalEval {
    cplx lambda{};
    std::vector<double> r_grid;
    std::vector<cplx> phi, dphi;
    std::vector<cplx> jost_plus, jost_minus; // filled when requested
    cplx c_value{};
    double c_error = 0;     // relative two-radius disagreement
    double residual = 0;    // max scaled ODE defect at audited radii
    double match_radius = 0;
};

struct CValue {
    cplx value{};
    double error_estimate = 0; // relative two-radius disagreement
    double match_radius = 0;
};

struct GrowthExponents {
    double small_slope = 0, small_residual = 0; // log|c|^{-1} vs log lambda on [1e-3, 1e-1]
    double large_slope = 0, large_residual = 0; // same on [50, 500]
};

// phi_lambda: the solution of u'' + (A'/A) u' = -(lambda^2 + rho^2) u with
// u(0) = 1, regular at 0. Entire in lambda, even in lambda.
std::vector<cplx> phi_values(const DensityModel& model, cplx lambda,
                             const std::vector<double>& r_grid,
                             const SolveOptions& opts = {});

// Scattering solutions normalized by Phi_{+-}(r) ~ e^{(+-i lambda - rho) r}
// at infinity, integrated inward from the match radius (R = 0 picks it
// automatically). Requires lambda != 0.
void jost_pair(const DensityModel& model, cplx lambda, const std::vector<double>& r_grid,
               std::vector<cplx>& plus, std::vector<cplx>& minus, double R = 0,
               const SolveOptions& opts = {});

// A(r) (u1 u2' - u2 u1'), constant in r for simultaneous solutions
cplx modified_wronskian(const DensityModel& model, cplx u1, cplx du1, cplx u2, cplx du2,
                        double r);

// connection coefficient in phi = c(lambda) Phi_+ + c(-lambda) Phi_-,
// extracted by Wronskian matching at the match radius. lambda != 0,
// Im lambda <= 0.
CValue c_function(const DensityModel& model, cplx lambda, const SolveOptions& opts = {});

// log-log slopes of |c|^{-1} over a small and a large real lambda range
GrowthExponents c_growth_check(const DensityModel& model, const SolveOptions& opts = {});

// full record: phi everywhere, c, and (optionally) the scattering pair
SphericalEval spherical_eval(const DensityModel& model, cplx lambda,
                             const std::vector<double>& r_grid, bool with_jost = false,
                             bool with_c = true, const SolveOptions& opts = {});

// match radius for the given model and spectral parameter (exposed for tests
// and for grid planning); throws MatchRadiusTooSmall when unattainable
double match_radius(const DensityModel& model, cplx lambda, const SolveOptions& opts = {});

} // namespace ct
