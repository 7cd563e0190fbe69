#pragma once
#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

namespace ct::num {

// Gauss-Legendre rule on [-1, 1]. Rules are computed once per size and cached.
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

const GaussRule& gauss_legendre(int n);

// Append the rule mapped to [a, b] onto x / w.
void gl_append(int n, double a, double b, std::vector<double>& x, std::vector<double>& w);

template <class F>
auto gl_sum(int n, double a, double b, F&& f) {
    const GaussRule& g = gauss_legendre(n);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    using R = decltype(f(mid));
    R acc{};
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
        acc += f(mid + half * g.nodes[i]) * g.weights[i];
    return acc * half;
}

// Composite rule over consecutive panels given by edge list.
template <class F>
auto gl_composite(int n, const std::vector<double>& edges, F&& f) {
    using R = decltype(f(edges.front()));
    R acc{};
    for (std::size_t k = 0; k + 1 < edges.size(); ++k)
        acc += gl_sum(n, edges[k], edges[k + 1], f);
    return acc;
}

// Panel edges: m uniform panels on [a, b].
std::vector<double> uniform_edges(double a, double b, int m);

// Adaptive Gauss-Kronrod 7/15 for smooth real or complex integrands.
double adaptive_gk(const std::function<double(double)>& f, double a, double b,
                   double rel_tol = 1e-12, double abs_tol = 1e-300,
                   double* err_out = nullptr);
std::complex<double> adaptive_gk_complex(
    const std::function<std::complex<double>(double)>& f, double a, double b,
    double rel_tol = 1e-12, double abs_tol = 1e-300, double* err_out = nullptr);

} // namespace ct::num
