#include "ct/spectral.hpp"

#include "ct/errors.hpp"
#include "ct/num/fit.hpp"
#include "ct/num/ode.hpp"
#include "ct/num/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ct {

namespace {

using num::CVec2;

// Coefficients of the regular solution u = sum c_j r^j of
// u'' + (m/r + g(r)) u' + sigma u = 0 with u(0) = 1; g = B'/B.
std::vector<cplx> origin_coeffs(const DensityModel& d, cplx sigma, int order) {
    auto g = d.origin_log_series(order);
    const int m = d.radial_power();
    std::vector<cplx> c(order + 1);
    c[0] = 1.0;
    if (order >= 1)
        c[1] = 0.0;
    for (int j = 2; j <= order; ++j) {
        cplx s = sigma * c[j - 2];
        for (int i = 1; i <= j - 1; ++i)
            s += double(i) * c[i] * g[j - 1 - i];
        c[j] = -s / double(j * (j - 1 + m));
    }
    return c;
}

void series_eval(const std::vector<cplx>& c, double r, cplx& u, cplx& du) {
    u = du = 0.0;
    for (std::size_t j = c.size(); j-- > 1;)
        du = du * r + double(j) * c[j];
    for (std::size_t j = c.size(); j-- > 0;)
        u = u * r + c[j];
}

double series_tail(const std::vector<cplx>& c, double r) {
    std::size_t n = c.size();
    return std::abs(c[n - 1]) * std::pow(r, double(n - 1)) +
           std::abs(c[n - 2]) * std::pow(r, double(n - 2));
}

// u and u' of the regular solution inside the series radius, with a
// convergence guard on the trailing term
void series_u_at(const std::vector<cplx>& c, double r, cplx& u, cplx& du) {
    series_eval(c, r, u, du);
    if (series_tail(c, r) > 1e-12 * std::max(1.0, std::abs(u)))
        throw SeriesDivergence("origin series does not converge at the handoff radius");
}

struct ReducedCoords {
    double sqrtSa;  // sqrt(A e^{-2 rho r})
    double L;       // A'/A
    double damp;    // e^{-rho r}
};

ReducedCoords reduced_at(const DensityModel& d, double r) {
    return {std::sqrt(d.eval_A_damped(r)), d.log_derivative(r), std::exp(-d.rho() * r)};
}

// v = sqrt(A) u and back; the reduced variable solves v'' = (G - lambda^2) v
// and stays O(sqrt(C)) for real lambda, which keeps the step control honest
CVec2 to_reduced(const ReducedCoords& rc, cplx u, cplx du) {
    double sqrtA = rc.sqrtSa / rc.damp;
    return {sqrtA * u, sqrtA * (du + 0.5 * rc.L * u)};
}

void from_reduced(const ReducedCoords& rc, const CVec2& v, cplx& u, cplx& du) {
    double inv = rc.damp / rc.sqrtSa;
    u = v[0] * inv;
    du = (v[1] - 0.5 * rc.L * v[0]) * inv;
}

num::OdeOptions stepper_options(const DensityModel& d, cplx lambda, double r_end,
                                const SolveOptions& opts, double vscale) {
    num::OdeOptions o;
    // phase error accumulates like phase * rtol^{4/5}, so the tolerance has
    // to fall faster than 1/phase; the 2e-11 ceiling keeps the step-count
    // error of slow solves near 1e-9 as well
    double phase = std::max(1.0, std::abs(lambda) * r_end);
    o.rtol = std::clamp(5e-9 * std::pow(phase, -1.5), 1e-13, std::min(opts.rtol, 2e-11));
    o.atol = opts.atol;
    // vscale carries the natural size of the reduced solution relative to
    // sqrt(A e^{-2 rho r}); without it the absolute floor swamps the
    // relative control whenever the solution is small
    double sv = vscale * std::sqrt(d.eval_A_damped(std::max(r_end, 1.0)));
    o.atol_scale = {sv, sv * std::max(1.0, std::abs(lambda))};
    o.h_init = 1e-4;
    return o;
}

// the reduced form of the regular solution has amplitude ~ sqrt(C)|c(lambda)|,
// and |c| falls off like |lambda|^{-(alpha+1/2)}
double phi_amplitude(const DensityModel& d, cplx lambda) {
    return std::pow(std::max(1.0, std::abs(lambda)), -(d.alpha() + 0.5));
}

struct Trajectory {
    std::vector<double> stops;  // >= series radius, ascending
    std::vector<CVec2> states;  // reduced (v, v') at stops
    num::OdeOptions ode;
    std::vector<cplx> series; // origin coefficients
    double r0 = 0;            // series handoff radius
};

// integrate the regular solution through every stop
Trajectory march_phi(const DensityModel& d, cplx lambda, std::vector<double> stops,
                     const SolveOptions& opts) {
    Trajectory t;
    t.stops = std::move(stops);
    t.states.resize(t.stops.size());
    cplx sigma = lambda * lambda + d.rho() * d.rho();
    t.series = origin_coeffs(d, sigma, opts.series_order);
    t.r0 = opts.series_radius;
    double r0 = t.r0;
    cplx u, du;
    series_u_at(t.series, r0, u, du);
    CVec2 y = to_reduced(reduced_at(d, r0), u, du);
    double r_end = t.stops.empty() ? r0 : t.stops.back();
    t.ode = stepper_options(d, lambda, r_end, opts, phi_amplitude(d, lambda));
    auto rhs = [&d, sigma](double r, const CVec2& v) -> CVec2 {
        // G - lambda^2 = (G + rho^2) - sigma
        return {v[1], (d.eval_G(r) + d.rho() * d.rho() - sigma) * v[0]};
    };
    num::ode_march(rhs, r0, y, t.stops, t.ode,
                   [&](std::size_t k, double, const CVec2& v) { t.states[k] = v; });
    return t;
}

double defect_at(const DensityModel& d, cplx lambda, const Trajectory& t, std::size_t k) {
    // independent 5-point finite-difference audit of the unreduced equation
    // u'' + (A'/A) u' + (lambda^2 + rho^2) u = 0
    cplx sigma = lambda * lambda + d.rho() * d.rho();
    double r = t.stops[k];
    // keep the stencil well inside (0, inf) when auditing near the origin
    double h = std::min(0.004 / std::max(1.0, std::abs(lambda) + d.rho()), 0.25 * r);
    auto rhs = [&](double x, const CVec2& v) -> CVec2 {
        return {v[1], (d.eval_G(x) + d.rho() * d.rho() - sigma) * v[0]};
    };
    cplx u[5];
    cplx dummy;
    if (r - 2 * h < t.r0 && series_tail(t.series, r + 2 * h) < 1e-11) {
        // a stencil dipping into the series zone reads the series directly;
        // integrating through the 1/r^2 region would feed step noise into
        // the h^{-2} second difference
        for (int s = -2; s <= 2; ++s)
            series_eval(t.series, r + s * h, u[s + 2], dummy);
    } else {
        num::OdeOptions hop = t.ode;
        hop.rtol = std::max(1e-13, 0.1 * t.ode.rtol);
        hop.h_init = 0.5 * h;
        // one continuous sweep through the stencil: the error inherited from
        // the walk down to r - 2h is itself close to a solution, which the
        // defect operator annihilates, so only fresh in-window error
        // pollutes the second difference
        double rr = r;
        CVec2 v = t.states[k];
        num::ode_integrate(rhs, rr, v, r - 2 * h, hop);
        for (int s = -2; s <= 2; ++s) {
            double x = r + s * h;
            num::ode_integrate(rhs, rr, v, x, hop);
            cplx uu, duu;
            from_reduced(reduced_at(d, x), v, uu, duu);
            u[s + 2] = uu;
        }
    }
    cplx d2 = (-u[4] + 16.0 * u[3] - 30.0 * u[2] + 16.0 * u[1] - u[0]) / (12 * h * h);
    cplx d1 = (-u[4] + 8.0 * u[3] - 8.0 * u[1] + u[0]) / (12 * h);
    double L = d.log_derivative(r);
    cplx defect = d2 + L * d1 + sigma * u[2];
    double scale = std::abs(d2) + std::abs(L * d1) + std::abs(sigma * u[2]) + 1e-300;
    return std::abs(defect) / scale;
}

double run_audit(const DensityModel& d, cplx lambda, const Trajectory& t,
                 SolveOptions::Audit mode) {
    if (mode == SolveOptions::Audit::None || t.stops.empty())
        return 0.0;
    std::vector<std::size_t> picks;
    if (mode == SolveOptions::Audit::Full) {
        picks.resize(t.stops.size());
        std::iota(picks.begin(), picks.end(), std::size_t{0});
    } else {
        std::size_t n = t.stops.size();
        for (std::size_t i = 0; i < std::min<std::size_t>(8, n); ++i)
            picks.push_back(i * (n - 1) / std::max<std::size_t>(1, 7));
        std::sort(picks.begin(), picks.end());
        picks.erase(std::unique(picks.begin(), picks.end()), picks.end());
    }
    double worst = 0;
    for (std::size_t k : picks)
        worst = std::max(worst, defect_at(d, lambda, t, k));
    return worst;
}

void check_grid(const std::vector<double>& grid) {
    if (grid.empty())
        throw DomainError("empty radius grid");
    double prev = 0;
    for (double r : grid) {
        if (!(r > prev))
            throw DomainError("radius grid must be positive and strictly increasing");
        prev = r;
    }
}

cplx minus_init_value(double sqrtSa, cplx lambda, double R) {
    return sqrtSa * std::exp(cplx(0.0, -1.0) * lambda * R);
}

// extraction radius for the dominant-branch route: deep enough that the
// subdominant exponential and the density tail both sit below 1e-12, small
// enough that e^{tau R} stays representable
double asymptotic_radius(const DensityModel& d, double tau, const SolveOptions& opts) {
    double R = opts.match_rmin;
    const double K = d.tail_K(), kappa = d.tail_kappa();
    if (K > 0.0) R = std::max(R, std::log(K / (opts.match_tail * kappa)) / kappa);
    R = std::max(R, 14.0 / tau);
    return std::min(R, 560.0 / tau);
}

} // namespace

double match_radius(const DensityModel& d, cplx lambda, const SolveOptions& opts) {
    double tau = std::abs(lambda.imag());
    double K = d.tail_K(), kappa = d.tail_kappa();
    if (K == 0.0)
        return opts.match_rmin;
    double keff = kappa - 2.0 * tau;
    if (keff <= 0.05)
        throw MatchRadiusTooSmall("spectral parameter too deep for this potential tail");
    double R = std::log(K / (opts.match_tail * keff)) / keff;
    if (R <= opts.match_rmin)
        return opts.match_rmin;
    if (R > opts.match_rmax)
        throw MatchRadiusTooSmall("tail constraint is not attainable below the radius cap");
    return R;
}

SphericalEval spherical_eval(const DensityModel& d, cplx lambda,
                             const std::vector<double>& r_grid, bool with_jost, bool with_c,
                             const SolveOptions& opts) {
    check_grid(r_grid);
    SphericalEval out;
    out.lambda = lambda;
    out.r_grid = r_grid;
    out.phi.resize(r_grid.size());
    out.dphi.resize(r_grid.size());

    double r0 = opts.series_radius;
    double R = 0, R2 = 0;
    // well below the real axis the c(lambda) branch dominates the regular
    // solution outright, so c comes from one-point asymptotics; the Wronskian
    // match, which must integrate the recessive branch, handles the rest
    const bool deep_c = with_c && !with_jost && lambda.imag() < -0.25;
    if (with_c || with_jost) {
        if (std::abs(lambda) < 1e-12)
            throw ZeroLambda("scattering data requires lambda != 0");
        const double tau = std::abs(lambda.imag());
        R = deep_c ? asymptotic_radius(d, tau, opts) : match_radius(d, lambda, opts);
        R2 = R + std::min(5.0, 80.0 / std::max(tau, 1.0));
    }

    // radii the integrator must visit: grid points beyond the series radius,
    // plus the two matching radii
    std::vector<double> stops;
    for (double r : r_grid)
        if (r >= r0)
            stops.push_back(r);
    if (with_c || with_jost) {
        stops.push_back(R);
        stops.push_back(R2);
    }
    std::sort(stops.begin(), stops.end());
    stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

    Trajectory t = march_phi(d, lambda, stops, opts);

    for (std::size_t i = 0; i < r_grid.size(); ++i) {
        double r = r_grid[i];
        if (r < r0) {
            series_u_at(t.series, r, out.phi[i], out.dphi[i]);
        } else {
            std::size_t k = std::lower_bound(t.stops.begin(), t.stops.end(), r) -
                            t.stops.begin();
            from_reduced(reduced_at(d, r), t.states[k], out.phi[i], out.dphi[i]);
        }
    }

    if (with_c) {
        cplx c[2];
        for (int j = 0; j < 2; ++j) {
            double Rj = (j == 0) ? R : R2;
            std::size_t k = std::lower_bound(t.stops.begin(), t.stops.end(), Rj) -
                            t.stops.begin();
            auto rc = reduced_at(d, Rj);
            if (deep_c) {
                c[j] = t.states[k][0] *
                       std::exp(cplx(0.0, -1.0) * lambda * Rj) / rc.sqrtSa;
                continue;
            }
            double Sa = rc.sqrtSa * rc.sqrtSa;
            cplx Vm = minus_init_value(rc.sqrtSa, lambda, Rj);
            cplx dVm = (0.5 * rc.L - d.rho() - cplx(0.0, 1.0) * lambda) * Vm;
            cplx Wnum = t.states[k][0] * dVm - Vm * t.states[k][1];
            cplx Wden = cplx(0.0, -2.0) * lambda * Sa;
            if (!std::isfinite(std::abs(Wden)) || std::abs(Wden) < 1e-280)
                throw WronskianDegenerate("scattering basis collapsed at the match radius");
            c[j] = Wnum / Wden;
        }
        out.c_value = c[0];
        out.c_error = std::abs(c[0] - c[1]) / std::max(std::abs(c[0]), 1e-300);
        out.match_radius = R;
    }

    if (with_jost)
        jost_pair(d, lambda, r_grid, out.jost_plus, out.jost_minus, R, opts);

    out.residual = run_audit(d, lambda, t, opts.audit);
    return out;
}

std::vector<cplx> phi_values(const DensityModel& d, cplx lambda,
                             const std::vector<double>& r_grid, const SolveOptions& opts) {
    return spherical_eval(d, lambda, r_grid, false, false, opts).phi;
}

void jost_pair(const DensityModel& d, cplx lambda, const std::vector<double>& r_grid,
               std::vector<cplx>& plus, std::vector<cplx>& minus, double R,
               const SolveOptions& opts) {
    check_grid(r_grid);
    if (std::abs(lambda) < 1e-12)
        throw ZeroLambda("scattering solutions require lambda != 0");
    if (r_grid.front() < opts.series_radius)
        throw DomainError("scattering solutions are singular at the origin; grid starts too low");
    if (R == 0.0)
        R = match_radius(d, lambda, opts);
    plus.assign(r_grid.size(), 0.0);
    minus.assign(r_grid.size(), 0.0);

    cplx sigma = lambda * lambda + d.rho() * d.rho();
    auto rhs = [&d, sigma](double r, const CVec2& v) -> CVec2 {
        return {v[1], (d.eval_G(r) + d.rho() * d.rho() - sigma) * v[0]};
    };
    num::OdeOptions ode = stepper_options(d, lambda, std::max(R, r_grid.back()), opts, 1.0);

    // march each branch down from R through the grid points below it, and up
    // through the ones above it
    std::vector<double> below, above;
    std::vector<std::size_t> below_idx, above_idx;
    for (std::size_t i = 0; i < r_grid.size(); ++i) {
        if (r_grid[i] <= R) {
            below.push_back(r_grid[i]);
            below_idx.push_back(i);
        } else {
            above.push_back(r_grid[i]);
            above_idx.push_back(i);
        }
    }
    std::reverse(below.begin(), below.end());
    std::reverse(below_idx.begin(), below_idx.end());

    auto rcR = reduced_at(d, R);
    for (int sgn : {+1, -1}) {
        auto& dst = (sgn > 0) ? plus : minus;
        cplx V = minus_init_value(rcR.sqrtSa, -double(sgn) * lambda, R);
        CVec2 y{V, (0.5 * rcR.L - d.rho() + double(sgn) * cplx(0.0, 1.0) * lambda) * V};
        cplx u, du;
        num::ode_march(rhs, R, y, below, ode, [&](std::size_t k, double r, const CVec2& v) {
            from_reduced(reduced_at(d, r), v, u, du);
            dst[below_idx[k]] = u;
        });
        num::ode_march(rhs, R, y, above, ode, [&](std::size_t k, double r, const CVec2& v) {
            from_reduced(reduced_at(d, r), v, u, du);
            dst[above_idx[k]] = u;
        });
    }
}

cplx modified_wronskian(const DensityModel& d, cplx u1, cplx du1, cplx u2, cplx du2,
                        double r) {
    return d.eval_A(r) * (u1 * du2 - u2 * du1);
}

CValue c_function(const DensityModel& d, cplx lambda, const SolveOptions& opts) {
    if (std::abs(lambda) < 1e-12)
        throw ZeroLambda("the connection coefficient has a pole at lambda = 0");
    if (lambda.imag() > 1e-12)
        throw NotInLowerHalfPlane("the connection coefficient is evaluated for Im lambda <= 0");
    SolveOptions o = opts;
    o.audit = SolveOptions::Audit::None;
    auto ev = spherical_eval(d, lambda, {1.0}, false, true, o);
    return {ev.c_value, ev.c_error, ev.match_radius};
}

GrowthExponents c_growth_check(const DensityModel& d, const SolveOptions& opts) {
    auto slope_on = [&](double lo, double hi, int n, double& resid) {
        std::vector<double> lx(n), ly(n);
        num::parallel_for(n, [&](std::size_t i) {
            double lam = lo * std::pow(hi / lo, double(i) / (n - 1));
            auto cv = c_function(d, lam, opts);
            lx[i] = std::log(lam);
            ly[i] = -std::log(std::abs(cv.value));
        });
        auto fit = num::fit_line(lx, ly);
        resid = fit.max_residual;
        return fit.slope;
    };
    GrowthExponents g;
    g.small_slope = slope_on(1e-3, 1e-1, 17, g.small_residual);
    g.large_slope = slope_on(50.0, 500.0, 17, g.large_residual);
    return g;
}

} // namespace ct
