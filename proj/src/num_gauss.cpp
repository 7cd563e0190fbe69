#include "ct/num/gauss.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace ct::num {

static GaussRule compute_gauss_legendre(int n) {
    GaussRule g;
    g.nodes.resize(n);
    g.weights.resize(n);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Tricomi initial guess, then Newton on P_n.
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16)
                break;
        }
        g.nodes[i] = -x;
        g.nodes[n - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        g.weights[i] = w;
        g.weights[n - 1 - i] = w;
    }
    return g;
}

const GaussRule& gauss_legendre(int n) {
    if (n < 1)
        throw std::invalid_argument("gauss_legendre: order must be positive");
    static std::map<int, GaussRule> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end())
        it = cache.emplace(n, compute_gauss_legendre(n)).first;
    return it->second;
}

void gl_append(int n, double a, double b, std::vector<double>& x, std::vector<double>& w) {
    const GaussRule& g = gauss_legendre(n);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        x.push_back(mid + half * g.nodes[i]);
        w.push_back(half * g.weights[i]);
    }
}

std::vector<double> uniform_edges(double a, double b, int m) {
    std::vector<double> e(m + 1);
    for (int k = 0; k <= m; ++k)
        e[k] = a + (b - a) * double(k) / m;
    return e;
}

// Gauss 7 / Kronrod 15 node pair on [-1, 1].
static const double kGK15Nodes[15] = {
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0,                0.207784955007898,
    0.405845151377397,  0.586087235467691,  0.741531185599394,
    0.864864423359769,  0.949107912342759,  0.991455371120813};
static const double kK15Weights[15] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728, 0.204432940075298,
    0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529};
static const double kG7Weights[7] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469, 0.381830050505119, 0.279705391489277,
    0.129484966168870};

namespace {

template <class T>
struct GkAdaptive {
    const std::function<T(double)>& f;
    double rel_tol, abs_tol;

    void panel(double a, double b, T& value, double& err) const {
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        T k15{};
        T g7{};
        for (int i = 0; i < 15; ++i) {
            T fv = f(mid + half * kGK15Nodes[i]);
            k15 += fv * kK15Weights[i];
            if (i % 2 == 1)
                g7 += fv * kG7Weights[i / 2];
        }
        k15 *= half;
        g7 *= half;
        value = k15;
        err = std::abs(k15 - g7);
    }

    T run(double a, double b, double* err_out) const {
        struct Piece {
            double a, b, err;
            T val;
        };
        T total{};
        double total_err = 0;
        std::vector<Piece> stack;
        {
            Piece p{a, b, 0, T{}};
            panel(a, b, p.val, p.err);
            stack.push_back(p);
        }
        int splits = 0;
        const int max_splits = 4000;
        while (!stack.empty()) {
            // find worst piece
            std::size_t worst = 0;
            double err_sum = 0, val_scale = 0;
            for (std::size_t i = 0; i < stack.size(); ++i) {
                err_sum += stack[i].err;
                val_scale += std::abs(stack[i].val);
                if (stack[i].err > stack[worst].err)
                    worst = i;
            }
            if (err_sum <= abs_tol || err_sum <= rel_tol * std::max(val_scale, 1e-300) ||
                splits >= max_splits) {
                for (const Piece& p : stack)
                    total += p.val;
                total_err = err_sum;
                break;
            }
            Piece p = stack[worst];
            stack.erase(stack.begin() + worst);
            double m = 0.5 * (p.a + p.b);
            Piece l{p.a, m, 0, T{}}, r{m, p.b, 0, T{}};
            panel(l.a, l.b, l.val, l.err);
            panel(r.a, r.b, r.val, r.err);
            stack.push_back(l);
            stack.push_back(r);
            ++splits;
        }
        if (err_out)
            *err_out = total_err;
        return total;
    }
};

} // namespace

double adaptive_gk(const std::function<double(double)>& f, double a, double b,
                   double rel_tol, double abs_tol, double* err_out) {
    GkAdaptive<double> gk{f, rel_tol, abs_tol};
    return gk.run(a, b, err_out);
}

std::complex<double> adaptive_gk_complex(const std::function<std::complex<double>(double)>& f,
                                         double a, double b, double rel_tol, double abs_tol,
                                         double* err_out) {
    GkAdaptive<std::complex<double>> gk{f, rel_tol, abs_tol};
    return gk.run(a, b, err_out);
}

} // namespace ct::num
