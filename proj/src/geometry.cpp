#include "ct/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ct/errors.hpp"
#include "ct/num/gauss.hpp"

namespace ct {

namespace {

constexpr double kPi = std::numbers::pi;

bool all_finite(const std::vector<double>& v) {
    for (double t : v)
        if (!std::isfinite(t)) return false;
    return true;
}

// normalized sin^{n-2} weight on [0, pi]: c_n = sqrt(pi) G((n-1)/2) / G(n/2)
double axial_norm(int n) {
    return std::sqrt(kPi) * std::exp(std::lgamma(0.5 * (n - 1)) - std::lgamma(0.5 * n));
}

// Canonical orthonormal tangent frame at x: Gram-Schmidt, in the Minkowski
// metric, of the projected spatial axes e_i + x_i x. The projections are
// independent for every point on the sheet (a vanishing combination would
// have zero time component and zero spatial part at once), and at the origin
// the frame is exactly the standard axes.
std::vector<std::vector<double>> tangent_frame(const ModelPoint& x) {
    const std::size_t m = x.coords.size();
    const int n = static_cast<int>(m) - 1;
    std::vector<std::vector<double>> frame;
    frame.reserve(n);
    for (int i = 1; i <= n; ++i) {
        std::vector<double> v(m, 0.0);
        v[i] = 1.0;
        const double xi = x.coords[i];
        for (std::size_t k = 0; k < m; ++k) v[k] += xi * x.coords[k];
        for (const auto& e : frame) {
            const double p = mink(v, e);
            for (std::size_t k = 0; k < m; ++k) v[k] -= p * e[k];
        }
        const double nn = mink(v, v);
        if (!(nn > 0.0)) throw InvalidPoint("degenerate tangent frame");
        const double s = 1.0 / std::sqrt(nn);
        for (double& t : v) t *= s;
        frame.push_back(std::move(v));
    }
    return frame;
}

// embed a chart direction as the unit tangent vector at x
std::vector<double> lift(const ModelPoint& x, const BoundaryDirection& xi) {
    if (xi.dir.size() + 1 != x.coords.size())
        throw InvalidPoint("direction dimension does not match point");
    const auto frame = tangent_frame(x);
    std::vector<double> w(x.coords.size(), 0.0);
    for (std::size_t i = 0; i < xi.dir.size(); ++i)
        for (std::size_t k = 0; k < w.size(); ++k) w[k] += xi.dir[i] * frame[i][k];
    return w;
}

// decompose x = cosh(r) o + sinh(r) u with u unit tangent at o;
// r below resolution leaves u empty
std::pair<double, std::vector<double>> unit_from(const ModelPoint& o, const ModelPoint& x) {
    const double r = distance(o, x);
    if (r < 1e-14) return {0.0, {}};
    const double ch = std::cosh(r), ish = 1.0 / std::sinh(r);
    std::vector<double> u(o.coords.size());
    for (std::size_t k = 0; k < u.size(); ++k)
        u[k] = (x.coords[k] - ch * o.coords[k]) * ish;
    return {r, std::move(u)};
}

BoundaryDirection normalized(const BoundaryDirection& xi) {
    validate_direction(xi);
    double nn = 0.0;
    for (double t : xi.dir) nn += t * t;
    const double s = 1.0 / std::sqrt(nn);
    BoundaryDirection out = xi;
    for (double& t : out.dir) t *= s;
    return out;
}

} // namespace

ModelPoint origin(int n) {
    if (n < 2) throw DomainError("model dimension must be at least 2");
    ModelPoint o;
    o.coords.assign(n + 1, 0.0);
    o.coords[0] = 1.0;
    return o;
}

int dim(const ModelPoint& x) { return static_cast<int>(x.coords.size()) - 1; }

double mink(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.empty())
        throw InvalidPoint("dimension mismatch in Minkowski product");
    double s = -x[0] * y[0];
    for (std::size_t k = 1; k < x.size(); ++k) s += x[k] * y[k];
    return s;
}

void validate_point(const ModelPoint& x) {
    if (x.coords.size() < 3) throw InvalidPoint("point needs at least 3 coordinates");
    if (!all_finite(x.coords)) throw InvalidPoint("non-finite coordinate");
    const double x0 = x.coords[0];
    if (!(x0 >= 1.0 - 1e-12)) throw InvalidPoint("not on the upper sheet");
    // the sheet constraint is checked relative to x0^2, the roundoff scale of
    // the chart itself (an absolute tolerance is vacuous at large radius)
    const double s = mink(x.coords, x.coords);
    if (!(std::abs(s + 1.0) <= 1e-12 * std::max(1.0, x0 * x0)))
        throw InvalidPoint("not on the unit hyperboloid");
}

void validate_direction(const BoundaryDirection& xi) {
    if (xi.dir.size() < 2) throw DomainError("direction needs at least 2 components");
    if (!all_finite(xi.dir)) throw DomainError("non-finite direction component");
    double nn = 0.0;
    for (double t : xi.dir) nn += t * t;
    if (!(std::abs(std::sqrt(nn) - 1.0) <= 1e-12))
        throw DomainError("direction is not a unit vector");
}

ModelPoint geodesic_point(const ModelPoint& base, const BoundaryDirection& xi, double t) {
    validate_point(base);
    if (!std::isfinite(t)) throw DomainError("non-finite arc length");
    const auto w = lift(base, normalized(xi));
    const double ch = std::cosh(t), sh = std::sinh(t);
    ModelPoint out;
    out.coords.resize(base.coords.size());
    for (std::size_t k = 0; k < w.size(); ++k)
        out.coords[k] = ch * base.coords[k] + sh * w[k];
    // roundoff in the initial data is amplified by e^{2|t|} in the sheet
    // constraint, so project back; far out the form itself cancels to
    // roundoff and the raw point is already as good as the chart allows
    const double s = mink(out.coords, out.coords);
    if (s < -0.5 && s > -1.5) {
        const double scale = 1.0 / std::sqrt(-s);
        for (double& c : out.coords) c *= scale;
    }
    return out;
}

double distance(const ModelPoint& x, const ModelPoint& y) {
    validate_point(x);
    validate_point(y);
    if (x.coords.size() != y.coords.size()) throw InvalidPoint("dimension mismatch");
    return std::acosh(std::max(1.0, -mink(x.coords, y.coords)));
}

double busemann(const ModelPoint& o, const BoundaryDirection& xi, const ModelPoint& x) {
    const auto xin = normalized(xi);
    const auto [r, u] = unit_from(o, x);
    if (r == 0.0) return 0.0;
    const auto w = lift(o, xin);
    // cosh r - sinh r cos(theta) = e^{-r} + sinh(r) |u - w|^2 / 2, with the
    // squared norm taken in the tangent metric at o; every term is
    // nonnegative, so the value stays accurate out to the far ends of the ray
    double q = -(u[0] - w[0]) * (u[0] - w[0]);
    for (std::size_t k = 1; k < u.size(); ++k) {
        const double d = u[k] - w[k];
        q += d * d;
    }
    q = std::clamp(q, 0.0, 4.0);
    return std::log(std::exp(-r) + 0.5 * std::sinh(r) * q);
}

double busemann_cocycle(const ModelPoint& x, const ModelPoint& y, const BoundaryDirection& xi,
                        const ModelPoint& o_chart) {
    return busemann(o_chart, xi, x) - busemann(o_chart, xi, y);
}

BoundaryDirection transport_direction(const ModelPoint& o, const BoundaryDirection& xi,
                                      const ModelPoint& x) {
    validate_point(o);
    validate_point(x);
    if (o.coords.size() != x.coords.size()) throw InvalidPoint("dimension mismatch");
    const auto w = lift(o, normalized(xi));
    // null vector of the boundary point, normalized against o
    std::vector<double> nv(o.coords.size());
    for (std::size_t k = 0; k < nv.size(); ++k) nv[k] = o.coords[k] + w[k];
    const double e = -mink(x.coords, nv);
    if (!(e > 0.0) || !std::isfinite(e))
        throw InvalidPoint("boundary point not visible from x");
    std::vector<double> v(nv.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = nv[k] / e - x.coords[k];
    const double vn = mink(v, v);
    if (!(vn > 0.0)) throw InvalidPoint("transport lost the tangent direction");
    const double s = 1.0 / std::sqrt(vn);
    const auto frame = tangent_frame(x);
    BoundaryDirection out;
    out.dir.resize(frame.size());
    double nn = 0.0;
    for (std::size_t i = 0; i < frame.size(); ++i) {
        out.dir[i] = s * mink(v, frame[i]);
        nn += out.dir[i] * out.dir[i];
    }
    const double rs = 1.0 / std::sqrt(nn);
    for (double& t : out.dir) t *= rs;
    return out;
}

double visual_metric(const ModelPoint& o, const BoundaryDirection& xi,
                     const BoundaryDirection& eta) {
    validate_point(o);
    const auto a = normalized(xi), b = normalized(eta);
    if (a.dir.size() != b.dir.size() || a.dir.size() + 1 != o.coords.size())
        throw DomainError("dimension mismatch");
    // chord formula: sin(theta/2) = |xi - eta| / 2 for unit chart vectors
    double q = 0.0;
    for (std::size_t k = 0; k < a.dir.size(); ++k) {
        const double d = a.dir[k] - b.dir[k];
        q += d * d;
    }
    return std::min(1.0, 0.5 * std::sqrt(q));
}

double gromov_product(const ModelPoint& o, const BoundaryDirection& xi,
                      const BoundaryDirection& eta) {
    const double rho = visual_metric(o, xi, eta);
    if (rho < 1e-17) throw CoincidentDirections("Gromov product is infinite");
    return -std::log(rho);
}

double visibility_density(const ModelPoint& o, const ModelPoint& x,
                          const BoundaryDirection& xi) {
    const double rho = 0.5 * (dim(o) - 1);
    return std::exp(-2.0 * rho * busemann(o, xi, x));
}

cplx boundary_average(const ModelPoint& o,
                      const std::function<cplx(const BoundaryDirection&)>& g) {
    validate_point(o);
    const int n = dim(o);
    cplx acc{};
    if (n == 2) {
        const int m = 512;
        BoundaryDirection xi;
        xi.dir.resize(2);
        for (int j = 0; j < m; ++j) {
            const double th = 2.0 * kPi * (j + 0.5) / m;
            xi.dir[0] = std::cos(th);
            xi.dir[1] = std::sin(th);
            acc += g(xi);
        }
        acc /= static_cast<double>(m);
    } else if (n == 3) {
        const int mphi = 128;
        acc = num::gl_sum(256, -1.0, 1.0, [&](double c) {
            const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
            cplx ring{};
            BoundaryDirection xi;
            xi.dir.resize(3);
            for (int j = 0; j < mphi; ++j) {
                const double ph = 2.0 * kPi * (j + 0.5) / mphi;
                xi.dir[0] = c;
                xi.dir[1] = s * std::cos(ph);
                xi.dir[2] = s * std::sin(ph);
                ring += g(xi);
            }
            return ring / static_cast<double>(mphi);
        });
        acc *= 0.5;
    } else {
        throw QuadratureFailure("boundary average needs dimension 2 or 3");
    }
    if (!std::isfinite(acc.real()) || !std::isfinite(acc.imag()))
        throw QuadratureFailure("non-finite boundary average");
    return acc;
}

cplx radialize(const ModelPoint& o, const std::function<cplx(const ModelPoint&)>& f,
               const ModelPoint& x) {
    const double r = distance(o, x);
    return boundary_average(
        o, [&](const BoundaryDirection& xi) { return f(geodesic_point(o, xi, r)); });
}

cplx c_boundary_integral(int n, cplx lambda) {
    if (n < 2) throw DomainError("dimension must be at least 2");
    const double t = -lambda.imag();
    if (!(t > 0.0)) throw NotInLowerHalfPlane("boundary integral needs Im lambda < 0");
    const double s = lambda.real();
    const auto f = [&](double th) {
        const cplx p = (2.0 * cplx(0.0, 1.0) * lambda - cplx(n - 1, 0.0)) *
                       std::log(std::sin(0.5 * th));
        return std::exp(p) * std::pow(std::sin(th), n - 2);
    };
    // away from 0 the integrand is smooth with log-phase 2|s| ln(pi/th0)
    const double th0 = 0.1;
    const int m1 = std::max(4, static_cast<int>(std::ceil(2.0 * std::abs(s) *
                                                          std::log(kPi / th0) / 10.0)));
    const cplx outer = num::gl_composite(64, num::uniform_edges(th0, kPi, m1), f);
    // near 0 substitute u = log(theta): the integrand becomes e^{2tu} times a
    // bounded oscillation e^{2isu}, integrated over a span that captures the
    // mass to 1e-20; panel width is set by both the decay and the phase rate
    const double a = 2.0 * t;
    const double u0 = std::log(th0);
    const double span = 46.0 / a;
    const double width = std::min(15.0 / a, 6.0 / std::max(std::abs(s), 0.25));
    const double panels = span / width;
    if (panels > 2e5)
        throw QuadratureFailure("lambda too close to the real axis for quadrature");
    const auto fu = [&](double u) {
        const double th = std::exp(u);
        return f(th) * th;
    };
    const cplx inner = num::gl_composite(
        64, num::uniform_edges(u0 - span, u0, static_cast<int>(std::ceil(panels))), fu);
    return (outer + inner) / axial_norm(n);
}

cplx phi_poisson(int n, cplx lambda, double r) {
    if (n < 2) throw DomainError("dimension must be at least 2");
    if (!(r >= 0.0)) throw DomainError("radius must be nonnegative");
    const double sh = std::sinh(r), em = std::exp(-r);
    const cplx ex = cplx(0.0, 1.0) * lambda - cplx(0.5 * (n - 1), 0.0);
    const auto f = [&](double th) {
        const double s2 = std::sin(0.5 * th);
        // cosh r - sinh r cos(theta) rewritten with nonnegative terms
        const double base = em + 2.0 * sh * s2 * s2;
        return std::exp(ex * std::log(base)) * std::pow(std::sin(th), n - 2);
    };
    // the integrand varies on the angular scale e^{-r} near 0, so grade the
    // panels geometrically down to that scale; each octave sees a bounded
    // swing in log(base), which caps the per-panel phase as well
    std::vector<double> edges{0.0};
    const double thmin = std::min(0.5 * kPi, std::exp(-r - 2.0));
    edges.push_back(thmin);
    for (double e = thmin * 2.0; e < 0.99 * kPi; e *= 2.0) edges.push_back(e);
    edges.push_back(kPi);
    const int split = std::clamp(
        static_cast<int>(std::ceil(1.4 * std::abs(lambda.real()) / 10.0)), 1, 64);
    if (split > 1) {
        std::vector<double> fine;
        for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
            const auto part = num::uniform_edges(edges[k], edges[k + 1], split);
            fine.insert(fine.end(), part.begin(), part.end() - 1);
        }
        fine.push_back(kPi);
        edges.swap(fine);
    }
    return num::gl_composite(64, edges, f) / axial_norm(n);
}

std::vector<double> shadow_ratio(int n, const std::vector<double>& eps_list) {
    if (n < 2) throw DomainError("dimension must be at least 2");
    const double cn = axial_norm(n);
    std::vector<double> out;
    out.reserve(eps_list.size());
    for (double eps : eps_list) {
        if (!(eps > 0.0 && eps <= 1.0)) throw DomainError("visual radius must be in (0, 1]");
        const double the = 2.0 * std::asin(eps);
        const double mass =
            num::gl_composite(64, num::uniform_edges(0.0, the, 4), [&](double th) {
                return std::pow(std::sin(th), n - 2);
            }) /
            cn;
        out.push_back(mass / std::pow(eps, n - 1));
    }
    return out;
}

} // namespace ct
