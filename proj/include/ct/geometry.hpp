#pragma once

#include <complex>
#include <functional>
#include <vector>

namespace ct {

using cplx = std::complex<double>;

// Point on the upper sheet of the unit hyperboloid in Minkowski space
// R^{n,1} with form diag(-1, 1, ..., 1): <x,x> = -1, x0 >= 1. This chart
// realizes the n-dimensional hyperbolic space with curvature -1.
struct ModelPoint {
    std::vector<double> coords; // n+1 reals, time coordinate first
};

// Direction in the unit tangent sphere at a basepoint, written in that
// point's canonical orthonormal tangent frame (n reals, unit norm). The
// frame is the Gram-Schmidt completion of the projected spatial axes, so at
// the origin the chart is the standard sphere. A direction determines a
// boundary point at infinity; ops that mix basepoints say which chart each
// direction lives in.
struct BoundaryDirection {
    std::vector<double> dir;
};

// basepoint (1, 0, ..., 0) of the n-dimensional model
ModelPoint origin(int n);

int dim(const ModelPoint& x);

// throws InvalidPoint unless x sits on the upper sheet (tolerance scales
// with x0^2, the precision the chart itself supports)
void validate_point(const ModelPoint& x);
void validate_direction(const BoundaryDirection& xi);

// Minkowski inner product <x,y> = -x0 y0 + sum xi yi
double mink(const std::vector<double>& x, const std::vector<double>& y);

// geodesic through base with initial direction xi, at arc length t
ModelPoint geodesic_point(const ModelPoint& base, const BoundaryDirection& xi, double t);

double distance(const ModelPoint& x, const ModelPoint& y);

// Busemann function of the boundary point of xi, based at o, evaluated at x:
// B = log(cosh r - sinh r cos theta), r = d(o,x), theta the angle at o
double busemann(const ModelPoint& o, const BoundaryDirection& xi, const ModelPoint& x);

// chart-free cocycle B(x, y, xi) = B_{xi,o}(x) - B_{xi,o}(y)
double busemann_cocycle(const ModelPoint& x, const ModelPoint& y, const BoundaryDirection& xi,
                        const ModelPoint& o_chart);

// the direction at x pointing to the same boundary point as xi does at o
BoundaryDirection transport_direction(const ModelPoint& o, const BoundaryDirection& xi,
                                      const ModelPoint& x);

// visual distance sin(theta/2) between boundary points and the Gromov
// product (xi|eta)_o = -log of it; gromov_product throws
// CoincidentDirections when the directions agree
double visual_metric(const ModelPoint& o, const BoundaryDirection& xi,
                     const BoundaryDirection& eta);
double gromov_product(const ModelPoint& o, const BoundaryDirection& xi,
                      const BoundaryDirection& eta);

// density e^{-2 rho B_{xi,o}(x)} of the visibility measure based at x
// against the one based at o, rho = (n-1)/2
double visibility_density(const ModelPoint& o, const ModelPoint& x,
                          const BoundaryDirection& xi);

// normalized integral over the boundary sphere in o's chart (full product
// quadrature; dimensions 2 and 3 only, others throw QuadratureFailure)
cplx boundary_average(const ModelPoint& o,
                      const std::function<cplx(const BoundaryDirection&)>& g);

// spherical mean of f over the sphere around o through x
cplx radialize(const ModelPoint& o, const std::function<cplx(const ModelPoint&)>& f,
               const ModelPoint& x);

// boundary-integral representation of the connection coefficient:
// (1/c_n) Int_0^pi sin(theta/2)^{2(i lambda - rho)} sin^{n-2}theta dtheta,
// convergent for Im lambda < 0 (else NotInLowerHalfPlane)
cplx c_boundary_integral(int n, cplx lambda);

// boundary-integral representation of the spherical function:
// (1/c_n) Int_0^pi (cosh r - sinh r cos theta)^{i lambda - rho}
//                  sin^{n-2}theta dtheta,  entire in lambda
cplx phi_poisson(int n, cplx lambda, double r);

// visibility mass of the cap of visual radius eps around a boundary point,
// divided by eps^{2 rho}; bounded above and below by the shadow estimates
std::vector<double> shadow_ratio(int n, const std::vector<double>& eps_list);

} // namespace ct
