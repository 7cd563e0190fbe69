#include "ct/density.hpp"
#include "ct/errors.hpp"
#include "ct/num/gauss.hpp"
#include "ct/spectral.hpp"
#include "ct/transform.hpp"

#include "doctest.h"

#include <cmath>
#include <complex>
#include <limits>
#include <vector>

using namespace ct;
using std::abs;

namespace {

const DensityModel& h2() {
    static auto d = build_model(hyperbolic_spec(2));
    return d;
}
const DensityModel& h3() {
    static auto d = build_model(hyperbolic_spec(3));
    return d;
}
const DensityModel& dr12() {
    static auto d = build_model(damek_ricci_spec(1, 2));
    return d;
}

// calibrated tables are expensive; share them across cases
const CFunctionTable& h3_table() {
    static CFunctionTable t = [] {
        auto tab = build_c_table(h3());
        calibrate_C0(h3(), {bump_profile(1), bump_profile(2), bump_profile(4)}, tab);
        return tab;
    }();
    return t;
}
const CFunctionTable& dr12_table() {
    static CFunctionTable t = [] {
        auto tab = build_c_table(dr12());
        calibrate_C0(dr12(), {bump_profile(1), bump_profile(2)}, tab);
        return tab;
    }();
    return t;
}

double rel(cplx got, cplx want) { return abs(got - want) / std::max(abs(want), 1e-300); }

double bump_fn(double r, double s) {
    double x = r / s;
    return x < 1 ? std::exp(-1.0 / (1.0 - x * x)) : 0.0;
}

// window bump on [c-w, c+w], all derivatives vanish at the edges
double window_fn(double r, double c, double w) {
    double x = (r - c) / w;
    return std::abs(x) < 1 ? std::exp(-1.0 / (1.0 - x * x)) : 0.0;
}

// transform by composite Gauss quadrature against the ODE solution, used as
// an independent oracle for the scattering-path evaluations
cplx direct_fhat(const DensityModel& d, const RadialProfile& u, double lam) {
    double S = u.support_radius();
    int np = std::max(16, int(std::ceil(lam * S / 4.0)));
    auto edges = num::uniform_edges(0.0, S, np);
    std::vector<double> xs, ws;
    for (std::size_t k = 0; k + 1 < edges.size(); ++k)
        num::gl_append(12, edges[k], edges[k + 1], xs, ws);
    auto phi = phi_values(d, lam, xs);
    cplx acc = 0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        acc += ws[i] * u(xs[i]) * phi[i] * d.eval_A(xs[i]);
    return acc;
}

std::vector<double> uniform_grid(double a, double b, int n) {
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = a + (b - a) * i / double(n - 1);
    return g;
}

} // namespace

TEST_CASE("profile interpolation, support cutoff, and norms") {
    auto u = bump_profile(2.0);
    CHECK(abs(u(0.0) - std::exp(-1.0)) < 1e-14);
    CHECK(abs(u(1.0) - bump_fn(1.0, 2.0)) < 1e-11);
    CHECK(abs(u(0.7137) - bump_fn(0.7137, 2.0)) < 1e-11);
    CHECK(u(2.0) == 0.0);
    CHECK(u(17.0) == 0.0);
    CHECK(u.support_radius() == 2.0);

    auto w = sampled_profile([](double r) { return window_fn(r, 1.9, 1.0); }, 2.9);
    CHECK(w(0.3) == 0.0);
    CHECK(abs(w(1.9) - std::exp(-1.0)) < 1e-12);

    // int_0^2 u 4 pi sinh^2 r dr and its L2 cousin, adaptive quadrature
    double l1 = radial_l1_norm(h3(), u);
    double want = num::adaptive_gk([&](double r) { return u(r) * h3().eval_A(r); }, 0.0, 2.0);
    CHECK(abs(l1 - want) < 1e-10 * want);
    CHECK(radial_l2_norm(h3(), bump_profile(1.0)) > 0);

    CHECK_THROWS_AS(RadialProfile({0.0, 0.5, 0.4}, {1.0, 2.0, 3.0}, 1.0), DomainError);
    CHECK_THROWS_AS(RadialProfile({-0.1, 0.5}, {1.0, 2.0}, 1.0), DomainError);
    CHECK_THROWS_AS(bump_profile(-1.0), DomainError);
}

TEST_CASE("transform is linear, even in lambda, and kills the zero profile") {
    auto u1 = sampled_profile([](double r) { return bump_fn(r, 1.0); }, 1.9);
    auto u2 = sampled_profile([](double r) { return window_fn(r, 1.2, 0.7); }, 1.9);
    const double a = 1.7, b = -0.42;
    auto comb = sampled_profile([&](double r) { return a * u1(r) + b * u2(r); }, 1.9);

    std::vector<double> grid = {0.7, 3.0, 15.0};
    auto f1 = spherical_transform(h3(), u1, grid);
    auto f2 = spherical_transform(h3(), u2, grid);
    auto fc = spherical_transform(h3(), comb, grid);
    // additivity holds to method accuracy only: the adaptive panel layout
    // follows each profile's own edge layers
    for (std::size_t i = 0; i < grid.size(); ++i) {
        cplx want = a * f1[i] + b * f2[i];
        CHECK(abs(fc[i] - want) < 2e-10 * std::max(1.0, abs(want)));
    }

    // scaling by a power of two changes no panel decision and commutes with
    // rounding, so homogeneity is exact
    auto u4 = sampled_profile([&](double r) { return -2.0 * u1(r); }, 1.9);
    auto f4 = spherical_transform(h3(), u4, grid);
    for (std::size_t i = 0; i < grid.size(); ++i)
        CHECK(abs(f4[i] + 2.0 * f1[i]) < 1e-14 * std::max(1.0, abs(f1[i])));

    auto pm = spherical_transform(h2(), u1, {-3.0, 3.0, -40.0, 40.0});
    CHECK(abs(pm[0] - pm[1]) < 1e-14);
    CHECK(abs(pm[2] - pm[3]) < 1e-14);

    auto z = sampled_profile([](double) { return 0.0; }, 1.0);
    for (cplx v : spherical_transform(h3(), z, grid)) CHECK(v == cplx(0.0));
}

TEST_CASE("at lambda = i rho the transform is the plain density integral") {
    // phi_{i rho} == 1, so fhat(i rho) = int u A dr; frozen at 20 digits for
    // the s = 2 bump on the 3-space
    auto u = bump_profile(2.0);
    cplx got = spherical_transform_at(h3(), u, cplx(0.0, 1.0));
    CHECK(rel(got, 5.5292463404615976238) < 1e-9);
}

TEST_CASE("closed-form anchors on the 3-space") {
    // int_0^2 exp(-1/(1-(r/2)^2)) sin(lam r)/(lam sinh r) 4 pi sinh^2 r dr,
    // frozen at 20-digit working precision
    auto u = bump_profile(2.0);
    auto got = spherical_transform(h3(), u, {0.7, 1.9, 6.3});
    CHECK(rel(got[0], 3.9008911086363782789) < 1e-9);
    CHECK(rel(got[1], 1.6632861261970374323) < 1e-9);
    CHECK(rel(got[2], 0.05048902577632548503) < 1e-9);
    for (cplx v : got) CHECK(abs(v.imag()) < 1e-13);
}

TEST_CASE("hypergeometric anchors on the 2-space and the (1,2) model") {
    // oracle: quadrature of the s = 1 bump against 2F1 eigenfunctions
    auto u = bump_profile(1.0);
    auto g2 = spherical_transform(h2(), u, {1.3});
    CHECK(rel(g2[0], 0.42804993100222918087) < 1e-8);
    auto gd = spherical_transform(dr12(), u, {0.9});
    CHECK(rel(gd[0], 0.39439598666822232086) < 1e-8);
}

TEST_CASE("direct and scattering paths agree above and at the split") {
    // relative agreement while fhat is alive, with an absolute floor that
    // covers the quadrature noise once the transform has decayed under it
    auto u = bump_profile(1.0);
    for (const DensityModel* d : {&h3(), &h2(), &dr12()}) {
        for (double lam : {15.0, 40.0}) {
            cplx want = direct_fhat(*d, u, lam);
            cplx got = spherical_transform(*d, u, {lam})[0];
            CHECK(abs(got - want) < 5e-8 * abs(want) + 2e-12);
        }
        cplx want = direct_fhat(*d, u, 80.0);
        cplx got = spherical_transform(*d, u, {80.0})[0];
        CHECK(abs(got - want) < 5e-7 * abs(want) + 2e-12);
    }
    // both sides of the path switch against the same oracle
    for (double lam : {11.999, 12.001}) {
        cplx want = direct_fhat(h2(), u, lam);
        cplx got = spherical_transform(h2(), u, {lam})[0];
        CHECK(abs(got - want) < 5e-8 * abs(want) + 1e-12);
    }
}

TEST_CASE("c table nodes match the connection coefficient") {
    const auto& t = h3_table();
    REQUIRE(t.lambda_grid.size() == t.c_values.size());
    REQUIRE(t.lambda_grid.size() == t.weights.size());
    REQUIRE(t.panel_edges.front() == 0.0);
    CHECK(t.panel_edges.back() == doctest::Approx(500.0).epsilon(1e-12));
    for (std::size_t i = 1; i < t.lambda_grid.size(); ++i)
        CHECK(t.lambda_grid[i] > t.lambda_grid[i - 1]);
    double wsum = 0;
    for (double w : t.weights) {
        CHECK(w > 0);
        wsum += w;
    }
    CHECK(abs(wsum - 500.0) < 1e-9 * 500.0);
    CHECK(t.c_interp_error < 5e-8);

    // 3-space: c(lam) = 1/(i lam), density lam^2 on the nose
    for (std::size_t i : {std::size_t(0), t.lambda_grid.size() / 2, t.lambda_grid.size() - 1}) {
        double lam = t.lambda_grid[i];
        CHECK(rel(t.c_values[i], cplx(0.0, -1.0 / lam)) < 5e-8);
        CHECK(abs(t.plancherel_density[i] / (lam * lam) - 1.0) < 1e-7);
    }

    // 2-space: compare an interpolated node against the matched coefficient
    auto t2 = build_c_table(h2());
    std::size_t hi = 0;
    while (hi + 1 < t2.lambda_grid.size() && t2.lambda_grid[hi] < 100.0) ++hi;
    auto cv = c_function(h2(), t2.lambda_grid[hi]);
    CHECK(rel(t2.c_values[hi], cv.value) < 5e-8);
    // density vanishes quadratically at lambda = 0
    double q0 = t2.plancherel_density[0] / (t2.lambda_grid[0] * t2.lambda_grid[0]);
    double q1 = t2.plancherel_density[1] / (t2.lambda_grid[1] * t2.lambda_grid[1]);
    CHECK(abs(q1 / q0 - 1.0) < 5e-3);
}

TEST_CASE("calibration fixes the inversion constant") {
    const auto& t = h3_table();
    REQUIRE(t.calibrated());
    // classical constant for the 3-space with this density normalization,
    // 1/(2 pi^2)
    CHECK(abs(t.C0 - 0.050660591821168885722) < 2e-7 * t.C0);
    CHECK(t.C0_dispersion < 1e-6);

    // scaling a profile cannot move the constant
    auto tab = build_c_table(h3());
    auto b1 = bump_profile(1.0);
    std::vector<double> scaled = b1.values();
    for (double& v : scaled) v *= 7.0;
    auto res1 = calibrate_C0(h3(), {b1}, tab);
    auto res7 = calibrate_C0(h3(), {RadialProfile(b1.r_grid(), scaled, 1.0)}, tab);
    CHECK(abs(res1.C0 - res7.C0) < 1e-12 * res1.C0);

    // a refined spectral grid moves the constant by less than 1e-6
    TransformOptions fine;
    fine.first_width = 0.15;
    fine.growth = 1.10;
    fine.cheb_nodes = 41;
    auto tf = build_c_table(h3(), fine);
    auto resf = calibrate_C0(h3(), {bump_profile(1), bump_profile(2), bump_profile(4)}, tf);
    CHECK(abs(resf.C0 - t.C0) < 1e-6 * t.C0);

    // truncating the spectral integral unbalances the profiles
    TransformOptions low;
    low.lambda_max = 35.0;
    auto tl = build_c_table(h3(), low);
    CHECK_THROWS_AS(
        calibrate_C0(h3(), {bump_profile(1), bump_profile(2), bump_profile(4)}, tl),
        InconsistentCalibration);
}

TEST_CASE("inverse transform returns the profile it came from") {
    auto grid = uniform_grid(0.0, 1.0, 161);

    auto u = bump_profile(1.0);
    auto fh = spherical_transform(h3(), u, h3_table());
    double bound = 0;
    auto rec = inverse_transform(h3(), fh, h3_table(), grid, &bound);
    double worst = 0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        worst = std::max(worst, abs(rec.values()[i] - u(grid[i])));
    CHECK(worst < 1e-6);
    // the reported bound also counts amplified quadrature noise past the
    // spectral cutoff, so it sits a little above the actual error
    CHECK(bound < 1e-7);

    auto ud = bump_profile(1.0);
    auto fhd = spherical_transform(dr12(), ud, dr12_table());
    auto recd = inverse_transform(dr12(), fhd, dr12_table(), grid);
    worst = 0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        worst = std::max(worst, abs(recd.values()[i] - ud(grid[i])));
    CHECK(worst < 1e-5);

    // narrow bump stress: spectral content reaches the truncation edge
    auto un = bump_profile(0.3);
    auto fhn = spherical_transform(h3(), un, h3_table());
    auto gridn = uniform_grid(0.0, 0.3, 121);
    auto recn = inverse_transform(h3(), fhn, h3_table(), gridn);
    worst = 0;
    for (std::size_t i = 0; i < gridn.size(); ++i)
        worst = std::max(worst, abs(recn.values()[i] - un(gridn[i])));
    CHECK(worst < 1e-3);

    std::vector<cplx> zero(h3_table().lambda_grid.size(), cplx(0.0));
    auto recz = inverse_transform(h3(), zero, h3_table(), grid);
    for (double v : recz.values()) CHECK(v == 0.0);
}

TEST_CASE("the transform diagonalizes the radial laplacian") {
    // u compactly supported away from 0, L u = u'' + (A'/A) u'; then
    // (L u)^hat = -(lam^2 + rho^2) uhat
    const double c = 1.9, w = 1.0;
    auto u = sampled_profile([&](double r) { return window_fn(r, c, w); }, c + w);
    auto lu = sampled_profile(
        [&](double r) {
            double x = (r - c) / w;
            if (std::abs(x) >= 1) return 0.0;
            double om = 1.0 - x * x;
            double g1 = -2.0 * x / (om * om);
            double g2 = -(2.0 + 6.0 * x * x) / (om * om * om);
            double B = std::exp(-1.0 / om);
            double du = B * g1 / w;
            double ddu = B * (g2 + g1 * g1) / (w * w);
            return ddu + h2().log_derivative(r) * du;
        },
        c + w);
    double rho = h2().rho();
    for (double lam : {0.8, 7.7, 23.0}) {
        cplx lhs = spherical_transform(h2(), lu, {lam})[0];
        cplx rhs = -(lam * lam + rho * rho) * spherical_transform(h2(), u, {lam})[0];
        CHECK(abs(lhs - rhs) < 1e-6 * abs(rhs));
    }
}

TEST_CASE("plancherel identity on the spectral side") {
    auto f = bump_profile(1.0);
    auto p = plancherel_radial(h3(), f, f, h3_table());
    // frozen int_0^1 u^2 4 pi sinh^2 r dr
    CHECK(abs(p.lhs - 0.10482445015750861329) < 1e-9);
    CHECK(p.relative_gap < 1e-6);

    // disjoint supports: lhs is identically zero, rhs must vanish with it
    auto g = sampled_profile([](double r) { return window_fn(r, 2.0, 0.5); }, 2.5);
    auto pd = plancherel_radial(h3(), f, g, h3_table());
    CHECK(pd.lhs == 0.0);
    CHECK(abs(pd.rhs) < 1e-6 * radial_l2_norm(h3(), f) * radial_l2_norm(h3(), g));
    CHECK(pd.relative_gap < 1e-6);

    auto z = sampled_profile([](double) { return 0.0; }, 1.0);
    auto pz = plancherel_radial(h3(), f, z, h3_table());
    CHECK(pz.lhs == 0.0);
    CHECK(pz.rhs == 0.0);
    CHECK(pz.relative_gap == 0.0);
}

TEST_CASE("degenerate inputs are rejected") {
    std::vector<double> r = uniform_grid(0.0, 5.0, 64);
    std::vector<double> v(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) v[i] = std::exp(-r[i]);

    RadialProfile no_support(r, v, std::numeric_limits<double>::infinity());
    CHECK_THROWS_AS(spherical_transform(h3(), no_support, {1.0}), UnboundedSupport);
    RadialProfile no_vanish(r, v, 5.0);
    CHECK_THROWS_AS(spherical_transform(h3(), no_vanish, {1.0}), UnboundedSupport);

    // spectral integrand with no decay at the truncation edge
    std::vector<cplx> ones(h3_table().lambda_grid.size(), cplx(1.0));
    auto grid = uniform_grid(0.0, 1.0, 33);
    CHECK_THROWS_AS(inverse_transform(h3(), ones, h3_table(), grid), TailTooFat);

    TransformOptions small;
    small.lambda_max = 20.0;
    auto raw = build_c_table(h3(), small);
    std::vector<cplx> fh(raw.lambda_grid.size(), cplx(0.1));
    CHECK_THROWS_AS(inverse_transform(h3(), fh, raw, grid), ConfigError);
    CHECK_THROWS_AS(plancherel_radial(h3(), bump_profile(1), bump_profile(1), raw),
                    ConfigError);

    std::vector<cplx> wrong(3, cplx(0.0));
    CHECK_THROWS_AS(inverse_transform(h3(), wrong, h3_table(), grid), DomainError);
    std::vector<cplx> zeros(h3_table().lambda_grid.size(), cplx(0.0));
    CHECK_THROWS_AS(inverse_transform(h3(), zeros, h3_table(), {0.5, 0.2}), DomainError);
}

TEST_CASE("table construction is deterministic") {
    TransformOptions small;
    small.lambda_max = 20.0;
    auto a = build_c_table(h3(), small);
    auto b = build_c_table(h3(), small);
    CHECK(a.lambda_grid == b.lambda_grid);
    CHECK(a.weights == b.weights);
    CHECK(a.c_values == b.c_values);
    CHECK(a.plancherel_density == b.plancherel_density);
}
