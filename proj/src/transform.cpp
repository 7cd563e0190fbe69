#include "ct/transform.hpp"

#include "ct/errors.hpp"
#include "ct/num/gauss.hpp"
#include "ct/spectral.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>

namespace ct {
namespace {

constexpr cplx kI{0.0, 1.0};

double support_end(const RadialProfile& f) {
    return std::min(f.support_radius(), f.r_grid().back());
}

double max_abs(const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// profiles enter transforms only with a finite support inside the sampled
// range and values that vanish there
void require_compact(const RadialProfile& f) {
    if (f.empty()) return;
    if (!std::isfinite(f.support_radius()))
        throw UnboundedSupport("profile support radius is not finite");
    double scale = max_abs(f.values());
    if (scale == 0.0) return;
    double S = support_end(f);
    if (std::abs(f(S * (1.0 - 1e-12))) > 1e-6 * scale)
        throw UnboundedSupport("profile does not vanish at its support radius");
}

// shortest wiggle of the sampled data, from the largest second difference;
// quadrature grids and amplitude panels must resolve it
double feature_scale(const RadialProfile& f) {
    const auto& r = f.r_grid();
    const auto& y = f.values();
    const double umax = max_abs(y);
    if (umax == 0.0 || r.size() < 3) return std::numeric_limits<double>::infinity();
    double c2 = 0;
    for (std::size_t i = 1; i + 1 < r.size(); ++i) {
        const double h1 = r[i] - r[i - 1], h2 = r[i + 1] - r[i];
        const double d2 = 2.0 * (y[i - 1] / (h1 * (h1 + h2)) - y[i] / (h1 * h2) +
                                 y[i + 1] / (h2 * (h1 + h2)));
        c2 = std::max(c2, std::abs(d2));
    }
    if (c2 == 0.0) return std::numeric_limits<double>::infinity();
    return std::sqrt(umax / c2);
}

// ---- oscillatory panel moments ------------------------------------------

// mu_j(X) = int_0^X xi^j e^{i Omega xi} d xi, j <= 5. Series below |Omega X|
// = 1, upward integration by parts above; the by-parts branch loses at most
// a factor j/|Omega X| per step there.
void power_moments(double Omega, double X, cplx out[6]) {
    const double ax = std::abs(Omega) * X;
    if (ax < 1.0) {
        const cplx z = kI * Omega * X;
        double Xp = X;
        for (int j = 0; j < 6; ++j) {
            cplx term = Xp / (j + 1.0);
            cplx sum = term;
            for (int k = 1; k < 48; ++k) {
                term *= z * (double(j + k) / (double(k) * double(j + k + 1)));
                sum += term;
                if (std::abs(term) < 1e-18 * std::abs(sum) + 1e-300) break;
            }
            out[j] = sum;
            Xp *= X;
        }
        return;
    }
    const cplx iw = kI * Omega;
    const cplx e = std::polar(1.0, Omega * X);
    out[0] = (e - 1.0) / iw;
    double Xj = 1.0;
    for (int j = 1; j < 6; ++j) {
        Xj *= X;
        out[j] = (Xj * e - double(j) * out[j - 1]) / iw;
    }
}

// ---- Legendre fit tables -------------------------------------------------

// coefficient extraction on Gauss nodes: a_k = (2k+1)/2 sum_i w_i y_i P_k(x_i)
// reproduces the degree n-1 interpolant exactly
struct GlFit {
    int n = 0;
    std::vector<double> x, w;
    std::vector<double> coefw; // [k*n + i] = (2k+1)/2 w_i P_k(x_i)
};

const GlFit& gl_fit(int n) {
    static std::map<int, GlFit> cache;
    static std::mutex mx;
    std::lock_guard<std::mutex> lk(mx);
    GlFit& f = cache[n];
    if (f.n == n) return f;
    const auto& g = num::gauss_legendre(n);
    f.n = n;
    f.x = g.nodes;
    f.w = g.weights;
    f.coefw.assign(std::size_t(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        double p0 = 1.0, p1 = f.x[i];
        for (int k = 0; k < n; ++k) {
            double pk;
            if (k == 0) {
                pk = 1.0;
            } else if (k == 1) {
                pk = p1;
            } else {
                pk = ((2.0 * k - 1.0) * f.x[i] * p1 - (k - 1.0) * p0) / double(k);
                p0 = p1;
                p1 = pk;
            }
            f.coefw[std::size_t(k) * n + i] = 0.5 * (2.0 * k + 1.0) * f.w[i] * pk;
        }
    }
    return f;
}

// spherical Bessel ladder j_0..j_kmax
void sph_jk(int kmax, double x, double* out) {
    for (int k = 0; k <= kmax; ++k) out[k] = std::sph_bessel(unsigned(k), x);
}

// int_{-1}^{1} P_k(x) e^{i s x} dx = 2 i^k j_k(s); one panel of a Filon rule
// for int_a^b Y(t) e^{i om t} dt with slow Y given by Legendre coefficients
cplx filon_panel(double mid, double half, double om, const cplx* a, int nk, const double* jk) {
    cplx s = 0;
    for (int k = 0; k < nk; ++k) {
        cplx term = 2.0 * a[k] * jk[k];
        switch (k & 3) {
            case 0: s += term; break;
            case 1: s += kI * term; break;
            case 2: s -= term; break;
            default: s -= kI * term; break;
        }
    }
    return half * std::polar(1.0, om * mid) * s;
}

// ---- quintic power-basis fit on the Gauss-6 nodes -------------------------

struct FitBasis {
    double xi[6];      // Gauss nodes mapped to (0, 1), ascending
    double inv[6][6];  // power coefficients from node values
    double dpx[6][6];  // [i][j] = (1 - xi_i^{j+1})/(j+1)
};

const FitBasis& fit_basis() {
    static const FitBasis fb = [] {
        FitBasis f{};
        const auto& g = num::gauss_legendre(6);
        double aug[6][12] = {};
        for (int i = 0; i < 6; ++i) {
            f.xi[i] = 0.5 * (g.nodes[i] + 1.0);
            double p = 1.0;
            for (int j = 0; j < 6; ++j) {
                aug[i][j] = p;
                p *= f.xi[i];
            }
            aug[i][6 + i] = 1.0;
        }
        for (int c = 0; c < 6; ++c) { // Gauss-Jordan with partial pivoting
            int piv = c;
            for (int r = c + 1; r < 6; ++r)
                if (std::abs(aug[r][c]) > std::abs(aug[piv][c])) piv = r;
            for (int j = 0; j < 12; ++j) std::swap(aug[c][j], aug[piv][j]);
            double d = aug[c][c];
            for (int j = 0; j < 12; ++j) aug[c][j] /= d;
            for (int r = 0; r < 6; ++r) {
                if (r == c) continue;
                double m = aug[r][c];
                for (int j = 0; j < 12; ++j) aug[r][j] -= m * aug[c][j];
            }
        }
        for (int j = 0; j < 6; ++j)
            for (int i = 0; i < 6; ++i) f.inv[j][i] = aug[j][6 + i];
        for (int i = 0; i < 6; ++i) {
            double p = f.xi[i];
            for (int j = 0; j < 6; ++j) {
                f.dpx[i][j] = (1.0 - p) / (j + 1.0);
                p *= f.xi[i];
            }
        }
        return f;
    }();
    return fb;
}

// Gauss-8 nodes on (0, 1) where the Jost amplitude is evaluated inside
// amplitude panels, feeding a degree 7 Legendre fit of the slow factor
struct AmpNodes {
    double xi[8];
    double dp[8][6]; // [i][j] = (1 - xi_i^{j+1})/(j+1)
};

const AmpNodes& amp_nodes() {
    static const AmpNodes an = [] {
        AmpNodes a{};
        const auto& g = num::gauss_legendre(8);
        for (int i = 0; i < 8; ++i) {
            a.xi[i] = 0.5 * (g.nodes[i] + 1.0);
            double p = a.xi[i];
            for (int j = 0; j < 6; ++j) {
                a.dp[i][j] = (1.0 - p) / (j + 1.0);
                p *= a.xi[i];
            }
        }
        return a;
    }();
    return an;
}

// ---- downward Volterra march for the Jost amplitude ----------------------

// m(r) = e^{-i lambda r} w_+(r) / C^{1/2} for the scattering solution w_+ of
// v'' = (G - lambda^2) v with w_+ ~ C^{1/2} e^{i lambda r}. With
// J = int_r^inf G m dt and H = int_r^inf e^{2 i lambda t} G m dt,
//   m = 1 - J/(2 i lambda) + nu,  nu = e^{-2 i lambda r} H/(2 i lambda),
//   m' = -2 i lambda nu.
// m is slow in r, so one quintic per panel resolves w = G m and the
// oscillation is carried entirely by the exact panel moments: stepping
// [a, b] down to t = a + h xi,
//   J(t) = J_b + h sum_j c_j (1 - xi^{j+1})/(j+1)
//   H(t) = H_b + h e^{2 i lambda a} sum_j c_j (mu_j(1) - mu_j(xi)).

struct MarchPlan {
    struct Panel {
        double a = 0, b = 0, h = 0;
        double t[6]{}, G[6]{};
        double gmax = 0;
        bool amp = false; // inside the amplitude window of a transform
        int record = -1;  // marker recorded after stepping to a
    };
    std::vector<Panel> panels; // descending in r
    int marker_count = 0;
    bool trivial = false; // G vanishes on the whole plan
};

// Panels shrink toward the origin, ratio 8/9 and steeper near an r^-2 pole
// of G where the Picard contraction |G| h / lambda has to stay under 1/4
// for the slowest oscillation lam_min; inside the amplitude window [0, amp]
// they are also capped at amp_h.
MarchPlan build_march_plan(const DensityModel& d, double top, double bottom,
                           std::vector<double> markers, double amp, double amp_h,
                           double lam_min) {
    MarchPlan plan;
    const double pole = std::abs(d.alpha() * d.alpha() - 0.25);
    const bool singular = std::abs(d.alpha() - 0.5) > 1e-12;
    std::sort(markers.begin(), markers.end(), std::greater<double>());
    markers.erase(std::unique(markers.begin(), markers.end()), markers.end());
    while (!markers.empty() && markers.front() >= top) markers.erase(markers.begin());
    plan.marker_count = int(markers.size());
    const auto& fb = fit_basis();
    double e = top;
    std::size_t mi = 0;
    double gmax_all = 0;
    while (e > bottom * (1.0 + 1e-12)) {
        double h = std::min(0.5, e / 9.0);
        if (singular && e < 1.0) {
            h = std::min(h, e / 13.0);
            h = std::min(h, 0.25 * lam_min * (0.87 * e) * (0.87 * e) / pole);
        }
        if (amp > 0 && e <= amp * (1.0 + 1e-12)) h = std::min(h, amp_h);
        double next = e - h;
        if (amp > 0 && e > amp && next < amp) next = amp;
        if (mi < markers.size() && next < markers[mi]) next = markers[mi];
        if (next < bottom) next = bottom;
        MarchPlan::Panel P;
        P.a = next;
        P.b = e;
        P.h = e - next;
        for (int i = 0; i < 6; ++i) {
            P.t[i] = next + P.h * fb.xi[i];
            P.G[i] = d.eval_G(P.t[i]);
            P.gmax = std::max(P.gmax, std::abs(P.G[i]));
        }
        P.gmax *= 1.05; // edge values sit slightly outside the nodes
        gmax_all = std::max(gmax_all, P.gmax);
        P.amp = amp > 0 && P.b <= amp * (1.0 + 1e-12);
        if (mi < markers.size() && markers[mi] == next) {
            P.record = int(mi);
            ++mi;
        }
        plan.panels.push_back(P);
        e = next;
        if (plan.panels.size() > 400000)
            throw QuadratureFailure("jost march plan did not terminate");
    }
    plan.trivial = gmax_all < 1e-15;
    return plan;
}

MarchPlan::Panel make_panel(const DensityModel& d, double a, double b, bool amp, int record) {
    const auto& fb = fit_basis();
    MarchPlan::Panel P;
    P.a = a;
    P.b = b;
    P.h = b - a;
    for (int i = 0; i < 6; ++i) {
        P.t[i] = a + P.h * fb.xi[i];
        P.G[i] = d.eval_G(P.t[i]);
        P.gmax = std::max(P.gmax, std::abs(P.G[i]));
    }
    P.gmax *= 1.05;
    P.amp = amp;
    P.record = record;
    return P;
}

// Compactly supported profiles have Gevrey boundary layers at their support
// edges whose high derivatives defeat any fixed panel width, so amplitude
// panels are bisected until the Legendre tail of the slow factor u A^{1/2}
// is negligible. The tolerance is floored by the profile's own sampling
// noise: refining below what the samples resolve only chases interpolation
// wiggle.
void refine_amp_panels(const DensityModel& d, const RadialProfile& u, MarchPlan& plan) {
    const auto& an = amp_nodes();
    const auto& f8 = gl_fit(8);
    auto tail = [&](double a, double h, double* ymax) {
        double a6 = 0, a7 = 0, ym = 0;
        for (int i = 0; i < 8; ++i) {
            const double t = a + h * an.xi[i];
            const double y = u(t) * std::sqrt(d.eval_A(t));
            a6 += f8.coefw[6 * 8 + i] * y;
            a7 += f8.coefw[7 * 8 + i] * y;
            ym = std::max(ym, std::abs(y));
        }
        if (ymax) *ymax = std::max(*ymax, ym);
        return std::abs(a6) + std::abs(a7);
    };
    double scale = 0, sqa = 0;
    bool any = false;
    for (const auto& P : plan.panels)
        if (P.amp) {
            tail(P.a, P.h, &scale);
            sqa = std::max(sqa, std::sqrt(d.eval_A(P.b)));
            any = true;
        }
    if (!any || scale <= 0) return;
    const double tol = std::max(3e-10 * scale, 8.0 * u.sample_noise() * sqa);
    std::vector<MarchPlan::Panel> out;
    out.reserve(plan.panels.size() + 64);
    for (const auto& P : plan.panels) {
        if (!P.amp || tail(P.a, P.h, nullptr) <= tol) {
            out.push_back(P);
            continue;
        }
        // bisect depth-first, upper half first to keep the descending order;
        // the marker stays with the lowest piece since it is recorded after
        // stepping to P.a
        struct Seg {
            double a, b;
            int depth, record;
        };
        std::vector<Seg> stack{{P.a, P.b, 0, P.record}};
        while (!stack.empty()) {
            Seg s = stack.back();
            stack.pop_back();
            if (s.depth >= 12 || tail(s.a, s.b - s.a, nullptr) <= tol) {
                out.push_back(make_panel(d, s.a, s.b, true, s.record));
                continue;
            }
            const double m = 0.5 * (s.a + s.b);
            stack.push_back({s.a, m, s.depth + 1, s.record});
            stack.push_back({m, s.b, s.depth + 1, -1});
        }
        if (out.size() > 500000)
            throw QuadratureFailure("amplitude panel refinement did not terminate");
    }
    plan.panels = std::move(out);
}

struct JostSample {
    cplx m{1.0};
    cplx nu{0.0};
};

// on_panel(P, m8) fires once per panel after its state is final; m8 holds
// the amplitude m at the Gauss-8 nodes and is only valid when P.amp
template <class PanelFn>
void run_jost_march(const MarchPlan& plan, double lambda, PanelFn&& on_panel,
                    std::vector<JostSample>* samples) {
    if (samples) samples->assign(std::size_t(plan.marker_count), JostSample{});
    const cplx i2l(0.0, 2.0 * lambda);
    const auto& fb = fit_basis();
    const auto& an = amp_nodes();
    cplx J = 0, H = 0;
    cplx m6[6], c[6], m8[8];
    cplx up1[6], upx[6][6];
    for (const auto& P : plan.panels) {
        if (plan.trivial) {
            if (P.amp)
                for (int i = 0; i < 8; ++i) m8[i] = 1.0;
            on_panel(P, m8);
            if (P.record >= 0 && samples) (*samples)[P.record] = JostSample{};
            continue;
        }
        const double h = P.h, om = 2.0 * lambda * h;
        const double kap = P.gmax * h / lambda;
        if (kap >= 0.6)
            throw QuadratureFailure("jost march stalled; radius too small for the spectral band");
        int n_sw = 2;
        if (kap > 1e-13) n_sw = std::clamp(int(std::ceil(-30.0 / std::log(kap))) - 1, 2, 64);
        power_moments(om, 1.0, up1);
        for (int i = 0; i < 6; ++i) power_moments(om, fb.xi[i], upx[i]);
        const cplx pa = std::polar(1.0, 2.0 * lambda * P.a);
        cplx pt[6];
        for (int i = 0; i < 6; ++i) pt[i] = std::polar(1.0, -2.0 * lambda * P.t[i]);
        // the predictor freezes the slow state and keeps the fast phase of nu
        for (int i = 0; i < 6; ++i) m6[i] = 1.0 - J / i2l + pt[i] * H / i2l;
        for (int sweep = 0; sweep <= n_sw; ++sweep) {
            cplx wv[6];
            for (int i = 0; i < 6; ++i) wv[i] = P.G[i] * m6[i];
            for (int j = 0; j < 6; ++j) {
                cplx cj = 0;
                for (int i = 0; i < 6; ++i) cj += fb.inv[j][i] * wv[i];
                c[j] = cj;
            }
            if (sweep == n_sw) break;
            for (int i = 0; i < 6; ++i) {
                cplx sj = 0, sh = 0;
                for (int j = 0; j < 6; ++j) {
                    sj += c[j] * fb.dpx[i][j];
                    sh += c[j] * (up1[j] - upx[i][j]);
                }
                m6[i] = 1.0 - (J + h * sj) / i2l + pt[i] * (H + h * pa * sh) / i2l;
            }
        }
        if (P.amp) {
            for (int i = 0; i < 8; ++i) {
                cplx up[6];
                power_moments(om, an.xi[i], up);
                cplx sj = 0, sh = 0;
                for (int j = 0; j < 6; ++j) {
                    sj += c[j] * an.dp[i][j];
                    sh += c[j] * (up1[j] - up[j]);
                }
                const cplx pt8 = std::polar(1.0, -2.0 * lambda * (P.a + h * an.xi[i]));
                m8[i] = 1.0 - (J + h * sj) / i2l + pt8 * (H + h * pa * sh) / i2l;
            }
        }
        cplx sj = 0, sh = 0;
        for (int j = 0; j < 6; ++j) {
            sj += c[j] / (j + 1.0);
            sh += c[j] * up1[j];
        }
        J += h * sj;
        H += h * pa * sh;
        on_panel(P, m8);
        if (P.record >= 0 && samples) {
            const cplx nu_a = std::conj(pa) * H / i2l;
            (*samples)[P.record] = JostSample{1.0 - J / i2l + nu_a, nu_a};
        }
    }
}

// tail initialization error of the march, |G| <= K e^{-kappa r} out there
double tail_eps(const DensityModel& d, double R) {
    if (d.tail_K() <= 0) return 0.0;
    double kap = d.tail_kappa();
    return d.tail_K() * std::exp(-kap * R) / (kap * kap);
}

double far_radius(const DensityModel& d, double needed) {
    double R = needed + 1.0;
    if (d.tail_K() > 0) {
        double kap = d.tail_kappa();
        double Rt = std::log(d.tail_K() / (1e-13 * kap * kap)) / kap;
        R = std::max(R, std::min(std::max(Rt, 10.0), 45.0));
    }
    return R;
}

// ---- pole patch -----------------------------------------------------------

// below r_lo the phase lambda r is not yet oscillatory, so the contribution
// is integrated directly against the ODE solution instead of driving the
// march into vanishing panels at the r^-2 pole of G
struct PolePatch {
    std::vector<double> xs, gA; // Gauss nodes on [0, r_lo], weights u A
};

double pole_patch_radius(double S, double lambda_max) {
    return std::min({1e-3, 3.0 / lambda_max, 0.25 * S});
}

PolePatch make_pole_patch(const DensityModel& d, const RadialProfile& u, double r_lo) {
    PolePatch p;
    num::gl_append(8, 0.0, r_lo, p.xs, p.gA);
    for (std::size_t i = 0; i < p.xs.size(); ++i) p.gA[i] *= u(p.xs[i]) * d.eval_A(p.xs[i]);
    return p;
}

double pole_patch_value(const DensityModel& d, const PolePatch& p, double lambda) {
    SolveOptions so;
    so.audit = SolveOptions::Audit::None;
    auto phi = phi_values(d, lambda, p.xs, so);
    double acc = 0;
    for (std::size_t i = 0; i < p.xs.size(); ++i) acc += p.gA[i] * phi[i].real();
    return acc;
}

// ---- connection coefficient above the split ------------------------------

// matches A^{1/2} phi against 2 Re[c C^{1/2} m e^{i lambda r}] and its
// derivative at r_star
cplx match_c(const DensityModel& d, double lambda, const JostSample& s, double r_star,
             double C12) {
    const cplx m = s.m;
    const cplx dm = -2.0 * kI * lambda * s.nu;

    SolveOptions so;
    so.audit = SolveOptions::Audit::None;
    auto ev = spherical_eval(d, lambda, {r_star}, false, false, so);
    const double A12 = std::sqrt(d.eval_A(r_star));
    const double L = d.log_derivative(r_star);
    const double v = A12 * ev.phi[0].real();
    const double dv = A12 * (ev.dphi[0].real() + 0.5 * L * ev.phi[0].real());

    const cplx ph = std::polar(1.0, lambda * r_star);
    const cplx z = C12 * ph * m;
    const cplx zp = C12 * ph * (kI * lambda * m + dm);
    const double det = -4.0 * std::imag(std::conj(z) * zp);
    if (std::abs(det) < 1e-300)
        throw QuadratureFailure("degenerate scattering match for c(lambda)");
    const double x = (-2.0 * v * zp.imag() + 2.0 * dv * z.imag()) / det;
    const double y = (2.0 * z.real() * dv - 2.0 * zp.real() * v) / det;
    return {x, y};
}

// plan must carry r_star as its marker 0
cplx jost_c(const DensityModel& d, double lambda, const MarchPlan& plan, double r_star,
            double C12) {
    std::vector<JostSample> smp;
    run_jost_march(plan, lambda, [](const MarchPlan::Panel&, const cplx*) {}, &smp);
    return match_c(d, lambda, smp.at(0), r_star, C12);
}

// Chebyshev interpolant of log(c(lambda) lambda^{alpha + 1/2}) in log lambda;
// both factors are smooth and bounded on [split, lambda_max]
struct ChebLog {
    double la = 0, lb = 1, apow = 0;
    std::vector<cplx> coef;

    cplx eval(double lam) const {
        const double x = (2.0 * std::log(lam) - la - lb) / (lb - la);
        cplx b1 = 0, b2 = 0;
        for (int k = int(coef.size()) - 1; k >= 1; --k) {
            cplx b0 = 2.0 * x * b1 - b2 + coef[k];
            b2 = b1;
            b1 = b0;
        }
        cplx g = x * b1 - b2 + 0.5 * coef[0];
        return std::exp(g) * std::pow(lam, -apow);
    }
};

ChebLog fit_cheb_log(const std::vector<double>& lam, const std::vector<cplx>& c, double apow,
                     double la, double lb) {
    const int N = int(lam.size());
    std::vector<cplx> g(N);
    double prev_im = 0;
    for (int j = 0; j < N; ++j) {
        cplx lg = std::log(c[j] * std::pow(lam[j], apow));
        double im = lg.imag();
        if (j > 0) {
            while (im - prev_im > M_PI) im -= 2.0 * M_PI;
            while (im - prev_im < -M_PI) im += 2.0 * M_PI;
        }
        g[j] = {lg.real(), im};
        prev_im = im;
    }
    ChebLog ch;
    ch.la = la;
    ch.lb = lb;
    ch.apow = apow;
    ch.coef.assign(N, cplx(0.0));
    for (int k = 0; k < N; ++k) {
        cplx acc = 0;
        for (int j = 0; j < N; ++j) {
            double tk = std::cos(k * M_PI * double(N - 1 - j) / double(N - 1));
            double tau = (j == 0 || j == N - 1) ? 0.5 : 1.0;
            acc += tau * g[j] * tk;
        }
        ch.coef[k] = 2.0 / double(N - 1) * acc;
    }
    ch.coef[N - 1] *= 0.5;
    return ch;
}

// ---- evaluation paths -----------------------------------------------------

// direct quadrature against the ODE solution, lambda at or below the split
std::vector<cplx> brute_fhat(const DensityModel& d, const RadialProfile& u,
                             const std::vector<double>& lambdas) {
    std::vector<cplx> out(lambdas.size(), cplx(0.0));
    if (lambdas.empty()) return out;
    const double S = support_end(u);
    const double hq = std::min({S / 12.0, 1.0, 2.5 * feature_scale(u)});
    const int np = std::min(640, std::max(8, int(std::ceil(S / hq))));
    auto edges = num::uniform_edges(0.0, S, np);
    std::vector<double> xs, ws;
    for (std::size_t k = 0; k + 1 < edges.size(); ++k)
        num::gl_append(12, edges[k], edges[k + 1], xs, ws);
    std::vector<double> gA(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) gA[i] = ws[i] * u(xs[i]) * d.eval_A(xs[i]);
    SolveOptions so;
    so.audit = SolveOptions::Audit::None;
    for (std::size_t q = 0; q < lambdas.size(); ++q) {
        auto phi = phi_values(d, lambdas[q], xs, so);
        double acc = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) acc += gA[i] * phi[i].real();
        out[q] = acc;
    }
    return out;
}

// amplitude samples u A^{1/2} on the Gauss-8 nodes of the amp panels
std::vector<std::array<double, 8>> amp_samples(const DensityModel& d, const RadialProfile& u,
                                               const MarchPlan& plan) {
    const auto& an = amp_nodes();
    std::vector<std::array<double, 8>> g(plan.panels.size());
    for (std::size_t k = 0; k < plan.panels.size(); ++k) {
        const auto& P = plan.panels[k];
        if (!P.amp) {
            g[k].fill(0.0);
            continue;
        }
        for (int i = 0; i < 8; ++i) {
            const double t = P.a + P.h * an.xi[i];
            g[k][i] = u(t) * std::sqrt(d.eval_A(t));
        }
    }
    return g;
}

// int u A^{1/2} m e^{i lambda r} dr over the amplitude window
cplx jost_oscillatory_integral(const MarchPlan& plan,
                               const std::vector<std::array<double, 8>>& g, double lambda,
                               std::vector<JostSample>* samples) {
    const auto& f8 = gl_fit(8);
    cplx I = 0;
    std::size_t k = 0;
    run_jost_march(
        plan, lambda,
        [&](const MarchPlan::Panel& P, const cplx* m8) {
            std::size_t idx = k++;
            if (!P.amp) return;
            cplx y[8], a[8];
            for (int i = 0; i < 8; ++i) y[i] = g[idx][i] * m8[i];
            for (int kk = 0; kk < 8; ++kk) {
                cplx s = 0;
                for (int i = 0; i < 8; ++i) s += f8.coefw[std::size_t(kk) * 8 + i] * y[i];
                a[kk] = s;
            }
            double half = 0.5 * P.h;
            double jk[8];
            sph_jk(7, lambda * half, jk);
            I += filon_panel(0.5 * (P.a + P.b), half, lambda, a, 8, jk);
        },
        samples);
    return I;
}

// panel-mean envelope of |q|; spectral sums stop at its trailing minimum,
// past which amplified noise would dominate the decayed integrand
std::size_t envelope_cutoff(const std::vector<double>& q, int nn) {
    const std::size_t n = q.size();
    const std::size_t npan = nn > 0 ? n / std::size_t(nn) : 0;
    if (npan < 3 || npan * std::size_t(nn) != n) return n;
    std::vector<double> m(npan, 0.0);
    for (std::size_t k = 0; k < npan; ++k) {
        for (int i = 0; i < nn; ++i) m[k] += std::abs(q[k * std::size_t(nn) + i]);
        m[k] /= double(nn);
    }
    std::size_t kp = 0;
    for (std::size_t k = 1; k < npan; ++k)
        if (m[k] > m[kp]) kp = k;
    std::size_t km = npan - 1;
    double best = m[km];
    for (std::size_t k = kp; k < npan; ++k) {
        if (m[k] < best) {
            best = m[k];
            km = k;
        }
    }
    return (km + 1) * std::size_t(nn);
}

void check_options(const TransformOptions& o) {
    if (!(o.lambda_max > o.split) || !(o.split > 0) || o.panel_nodes < 4 ||
        o.cheb_nodes < 8 || !(o.first_width > 0) || !(o.growth >= 1.0) ||
        !(o.width_cap >= o.first_width) || !(o.match_r > 0))
        throw ConfigError("invalid transform options");
}

std::vector<double> lambda_edges(const TransformOptions& o) {
    std::vector<double> edges = {0.0};
    double w = o.first_width;
    double e = 0.0;
    bool cut_split = false;
    while (e < o.lambda_max) {
        double next = e + w;
        if (!cut_split && next >= o.split) {
            next = o.split;
            cut_split = true;
        }
        if (next > o.lambda_max - 0.3 * w) next = o.lambda_max;
        edges.push_back(next);
        e = next;
        w = std::min(w * o.growth, o.width_cap);
    }
    return edges;
}

} // namespace

// ---- public api -----------------------------------------------------------

CFunctionTable build_c_table(const DensityModel& model, const TransformOptions& opts) {
    check_options(opts);
    CFunctionTable t;
    t.panel_nodes = opts.panel_nodes;
    t.split = opts.split;
    t.panel_edges = lambda_edges(opts);
    for (std::size_t k = 0; k + 1 < t.panel_edges.size(); ++k)
        num::gl_append(opts.panel_nodes, t.panel_edges[k], t.panel_edges[k + 1], t.lambda_grid,
                       t.weights);

    SolveOptions cso;
    cso.audit = SolveOptions::Audit::None;
    t.c_values.resize(t.lambda_grid.size());
    std::size_t n_low = 0;
    while (n_low < t.lambda_grid.size() && t.lambda_grid[n_low] <= opts.split) ++n_low;
    for (std::size_t i = 0; i < n_low; ++i)
        t.c_values[i] = c_function(model, t.lambda_grid[i], cso).value;

    if (n_low < t.lambda_grid.size()) {
        const double C12 = std::sqrt(model.leading_coefficient());
        const double apow = model.alpha() + 0.5;
        const double la = std::log(opts.split * (1.0 - 1e-3));
        const double lb = std::log(opts.lambda_max * (1.0 + 1e-3));
        const int N = opts.cheb_nodes;
        auto plan = build_march_plan(model, far_radius(model, opts.match_r), opts.match_r,
                                     {opts.match_r}, 0.0, 0.0, opts.split);
        std::vector<double> lam(N);
        std::vector<cplx> cv(N);
        for (int j = 0; j < N; ++j) {
            double x = -std::cos(M_PI * double(j) / double(N - 1));
            lam[j] = std::exp(0.5 * (la + lb) + 0.5 * (lb - la) * x);
            cv[j] = jost_c(model, lam[j], plan, opts.match_r, C12);
        }
        auto ch = fit_cheb_log(lam, cv, apow, la, lb);
        for (std::size_t i = n_low; i < t.lambda_grid.size(); ++i)
            t.c_values[i] = ch.eval(t.lambda_grid[i]);
        // probe the interpolant between nodes
        for (int j : {N / 4, N / 2, 3 * N / 4}) {
            double lm = std::sqrt(lam[j] * lam[j + 1]);
            cplx direct = jost_c(model, lm, plan, opts.match_r, C12);
            t.c_interp_error =
                std::max(t.c_interp_error, std::abs(ch.eval(lm) - direct) / std::abs(direct));
        }
    }

    t.plancherel_density.resize(t.lambda_grid.size());
    for (std::size_t i = 0; i < t.lambda_grid.size(); ++i)
        t.plancherel_density[i] = 1.0 / std::norm(t.c_values[i]);
    return t;
}

std::vector<cplx> spherical_transform(const DensityModel& model, const RadialProfile& f,
                                      const std::vector<double>& lambda_grid,
                                      const TransformOptions& opts, double* error_estimate) {
    check_options(opts);
    require_compact(f);
    std::vector<cplx> out(lambda_grid.size(), cplx(0.0));
    if (f.empty() || max_abs(f.values()) == 0.0) {
        if (error_estimate) *error_estimate = 0.0;
        return out;
    }
    const double S = support_end(f);
    const double mass = radial_l1_norm(model, f);

    std::vector<double> low;
    std::vector<std::size_t> low_idx;
    double lam_top = 0;
    for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
        double lam = std::abs(lambda_grid[i]);
        lam_top = std::max(lam_top, lam);
        if (lam <= opts.split) {
            low.push_back(lam);
            low_idx.push_back(i);
        }
    }
    auto lowv = brute_fhat(model, f, low);
    for (std::size_t q = 0; q < low.size(); ++q) out[low_idx[q]] = lowv[q];

    const double C12 = std::sqrt(model.leading_coefficient());
    const double amp_h = std::min(S / 18.0, 1.2 * feature_scale(f));
    const double r_lo = pole_patch_radius(S, lam_top);
    const double top = far_radius(model, std::max(S, opts.match_r));
    PolePatch patch;
    bool have_patch = false;
    double teps = 0;
    for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
        double lam = std::abs(lambda_grid[i]);
        if (lam <= opts.split) continue;
        if (!have_patch) {
            patch = make_pole_patch(model, f, r_lo);
            teps = tail_eps(model, top);
            have_patch = true;
        }
        auto plan = build_march_plan(model, top, std::min(r_lo, opts.match_r),
                                     {opts.match_r}, S, amp_h, lam);
        refine_amp_panels(model, f, plan);
        auto g = amp_samples(model, f, plan);
        std::vector<JostSample> smp;
        cplx I = jost_oscillatory_integral(plan, g, lam, &smp);
        cplx c = match_c(model, lam, smp.at(0), opts.match_r, C12);
        out[i] = 2.0 * std::real(c * C12 * I) + pole_patch_value(model, patch, lam);
    }

    if (error_estimate) {
        double est = 0;
        for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
            double lam = std::abs(lambda_grid[i]);
            double rate = lam <= opts.split ? 1e-10 : 3e-10;
            est = std::max(est, rate * std::abs(out[i]) + (3e-13 + teps) * mass);
        }
        *error_estimate = est;
    }
    return out;
}

std::vector<cplx> spherical_transform(const DensityModel& model, const RadialProfile& f,
                                      const CFunctionTable& table, double* error_estimate) {
    require_compact(f);
    std::vector<cplx> out(table.lambda_grid.size(), cplx(0.0));
    if (f.empty() || max_abs(f.values()) == 0.0) {
        if (error_estimate) *error_estimate = 0.0;
        return out;
    }
    const double S = support_end(f);
    const double mass = radial_l1_norm(model, f);

    std::vector<double> low;
    std::size_t n_low = 0;
    while (n_low < table.lambda_grid.size() && table.lambda_grid[n_low] <= table.split) {
        low.push_back(table.lambda_grid[n_low]);
        ++n_low;
    }
    auto lowv = brute_fhat(model, f, low);
    std::copy(lowv.begin(), lowv.end(), out.begin());

    double teps = 0;
    if (n_low < table.lambda_grid.size()) {
        const double C12 = std::sqrt(model.leading_coefficient());
        const double amp_h = std::min(S / 18.0, 1.2 * feature_scale(f));
        const double r_lo = pole_patch_radius(S, table.lambda_grid.back());
        const double top = far_radius(model, S);
        const auto patch = make_pole_patch(model, f, r_lo);
        teps = tail_eps(model, top);
        const int nn = table.panel_nodes;
        std::size_t node0 = 0;
        for (std::size_t pe = 0; pe + 1 < table.panel_edges.size(); ++pe) {
            const std::size_t lo = node0;
            node0 += std::size_t(nn);
            if (lo < n_low) continue;
            // one plan per lambda panel: pole panels coarsen with the band
            auto plan = build_march_plan(model, top, r_lo, {}, S, amp_h,
                                         std::max(table.panel_edges[pe], table.split));
            refine_amp_panels(model, f, plan);
            auto g = amp_samples(model, f, plan);
            for (std::size_t i = lo; i < std::min(lo + std::size_t(nn), out.size()); ++i) {
                cplx I = jost_oscillatory_integral(plan, g, table.lambda_grid[i], nullptr);
                out[i] = 2.0 * std::real(table.c_values[i] * C12 * I) +
                         pole_patch_value(model, patch, table.lambda_grid[i]);
            }
        }
    }

    if (error_estimate) {
        double est = 0;
        for (std::size_t i = 0; i < out.size(); ++i) {
            double rate = i < n_low ? 1e-10 : 3e-10;
            est = std::max(est, rate * std::abs(out[i]) + (3e-13 + teps) * mass);
        }
        *error_estimate = est;
    }
    return out;
}

cplx spherical_transform_at(const DensityModel& model, const RadialProfile& f, cplx lambda) {
    require_compact(f);
    if (f.empty() || max_abs(f.values()) == 0.0) return 0.0;
    const double S = support_end(f);
    const double width =
        std::min({S / 8.0, 8.0 / (std::abs(lambda) + 1.0), 2.5 * feature_scale(f)});
    const int np = std::min(640, std::max(8, int(std::ceil(S / width))));
    auto edges = num::uniform_edges(0.0, S, np);
    std::vector<double> xs, ws;
    for (std::size_t k = 0; k + 1 < edges.size(); ++k)
        num::gl_append(12, edges[k], edges[k + 1], xs, ws);
    SolveOptions so;
    so.audit = SolveOptions::Audit::None;
    auto phi = phi_values(model, lambda, xs, so);
    cplx acc = 0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        acc += ws[i] * f(xs[i]) * phi[i] * model.eval_A(xs[i]);
    return acc;
}

CalibrationResult calibrate_C0(const DensityModel& model,
                               const std::vector<RadialProfile>& profiles,
                               CFunctionTable& table) {
    if (profiles.empty()) throw DomainError("calibration needs at least one profile");
    if (table.lambda_grid.empty()) throw DomainError("calibration needs a populated table");
    std::vector<double> c0(profiles.size());
    for (std::size_t p = 0; p < profiles.size(); ++p) {
        double u0 = profiles[p](0.0);
        if (u0 == 0.0)
            throw DomainError("calibration profile must not vanish at the origin");
        auto fh = spherical_transform(model, profiles[p], table);
        std::vector<double> q(fh.size());
        for (std::size_t i = 0; i < fh.size(); ++i)
            q[i] = fh[i].real() * table.plancherel_density[i];
        const std::size_t n_act = envelope_cutoff(q, table.panel_nodes);
        double I = 0;
        for (std::size_t i = 0; i < n_act; ++i) I += table.weights[i] * q[i];
        if (I == 0.0 || !std::isfinite(I))
            throw InconsistentCalibration("spectral mass of a calibration profile vanished");
        c0[p] = u0 / I;
    }
    double mean = std::accumulate(c0.begin(), c0.end(), 0.0) / double(c0.size());
    if (!(mean > 0)) throw InconsistentCalibration("calibration produced a nonpositive constant");
    CalibrationResult res;
    res.C0 = mean;
    for (double v : c0) {
        double rel = std::abs(v - mean) / mean;
        res.mean_dispersion += rel / double(c0.size());
        res.max_dispersion = std::max(res.max_dispersion, rel);
    }
    if (res.max_dispersion > 1e-4)
        throw InconsistentCalibration("calibration profiles disagree beyond 1e-4");
    table.C0 = res.C0;
    table.C0_dispersion = res.max_dispersion;
    return res;
}

RadialProfile inverse_transform(const DensityModel& model, const std::vector<cplx>& fhat,
                                const CFunctionTable& table,
                                const std::vector<double>& r_grid,
                                double* truncation_bound) {
    if (fhat.size() != table.lambda_grid.size())
        throw DomainError("fhat must be sampled on the table grid");
    if (r_grid.size() < 2) throw DomainError("inverse transform needs at least two radii");
    for (std::size_t i = 0; i < r_grid.size(); ++i) {
        if (!std::isfinite(r_grid[i]) || r_grid[i] < 0)
            throw DomainError("output radii must be finite and nonnegative");
        if (i > 0 && !(r_grid[i] > r_grid[i - 1]))
            throw DomainError("output radii must be strictly increasing");
    }
    if (!table.calibrated())
        throw ConfigError("inverse transform needs a calibrated table; run calibrate_C0");

    const TransformOptions defaults; // truncation thresholds
    const std::size_t n = fhat.size();
    std::vector<double> q(n);
    double peak = 0;
    for (std::size_t i = 0; i < n; ++i) {
        q[i] = fhat[i].real() * table.plancherel_density[i];
        peak = std::max(peak, std::abs(q[i]));
    }
    std::vector<double> vals(r_grid.size(), 0.0);
    if (peak == 0.0) {
        if (truncation_bound) *truncation_bound = 0.0;
        return RadialProfile(r_grid, vals, r_grid.back());
    }

    const std::size_t tail_n = std::min<std::size_t>(32, n);
    double tail_mean = 0;
    for (std::size_t i = n - tail_n; i < n; ++i) tail_mean += std::abs(q[i]) / double(tail_n);
    if (tail_mean > defaults.tail_budget * peak)
        throw TailTooFat("spectral integrand has not decayed at the truncation edge");

    // keep whole panels up to the point where |fhat| / |c|^2 stays below
    // trunc_rel of its peak for a full run of nodes
    std::size_t n_act = n;
    {
        const double thresh = defaults.trunc_rel * peak;
        int run = 0;
        for (std::size_t i = 0; i < n; ++i) {
            run = std::abs(q[i]) < thresh ? run + 1 : 0;
            if (run >= defaults.trunc_run) {
                n_act = i + 1 - std::size_t(run);
                break;
            }
        }
        if (n_act < n) {
            const std::size_t nn = std::size_t(table.panel_nodes);
            n_act = std::min(n, ((n_act + nn - 1) / nn) * nn);
        }
    }
    n_act = std::min(n_act, envelope_cutoff(q, table.panel_nodes));
    double dropped = 0;
    for (std::size_t i = n_act; i < n; ++i) dropped += table.weights[i] * std::abs(q[i]);
    if (truncation_bound) {
        double edge = table.panel_edges.size() > 1
                          ? table.panel_edges.back() -
                                table.panel_edges[table.panel_edges.size() - 2]
                          : 0.0;
        *truncation_bound = table.C0 * (dropped + (n_act == n ? tail_mean * edge : 0.0));
    }

    std::size_t n_low = 0;
    while (n_low < n && table.lambda_grid[n_low] <= table.split) ++n_low;
    n_low = std::min(n_low, n_act);

    // radii below the series threshold take phi = 1 - sigma r^2 / (2 (m+1))
    const double m1 = model.radial_power() + 1.0;
    const double rho2 = model.rho() * model.rho();
    std::vector<double> r_march;
    std::vector<std::size_t> march_idx;
    for (std::size_t ir = 0; ir < r_grid.size(); ++ir) {
        const double r = r_grid[ir];
        if (r > 1e-5) {
            r_march.push_back(r);
            march_idx.push_back(ir);
        } else {
            double acc = 0;
            for (std::size_t i = 0; i < n_act; ++i) {
                const double lam = table.lambda_grid[i];
                acc += table.weights[i] * q[i] *
                       (1.0 - (lam * lam + rho2) * r * r / (2.0 * m1));
            }
            vals[ir] = table.C0 * acc;
        }
    }

    SolveOptions so;
    so.audit = SolveOptions::Audit::None;
    std::vector<double> acc_pos(r_march.size(), 0.0);
    for (std::size_t i = 0; i < n_low; ++i) {
        auto phi = phi_values(model, table.lambda_grid[i], r_march, so);
        for (std::size_t p = 0; p < r_march.size(); ++p)
            acc_pos[p] += table.weights[i] * q[i] * phi[p].real();
    }

    if (n_low < n_act && !r_march.empty()) {
        const double C12 = std::sqrt(model.leading_coefficient());
        const std::size_t n_rm = r_march.size();
        const std::vector<double> markers(r_march.rbegin(), r_march.rend());
        const double top = far_radius(model, r_march.back());
        const auto& fn = gl_fit(table.panel_nodes);
        const int nn = table.panel_nodes;
        std::vector<cplx> acc_c(n_rm, cplx(0.0));
        std::vector<cplx> row(std::size_t(nn) * n_rm);
        std::vector<cplx> y(nn), a(nn);
        std::vector<double> jk(nn);
        std::vector<JostSample> smp;
        std::size_t node0 = 0;
        for (std::size_t pe = 0; pe + 1 < table.panel_edges.size(); ++pe) {
            const std::size_t lo = node0;
            node0 += std::size_t(nn);
            if (lo < n_low || lo >= n_act) continue;
            auto plan = build_march_plan(model, top, r_march.front(), markers, 0.0, 0.0,
                                         std::max(table.panel_edges[pe], table.split));
            for (int i = 0; i < nn; ++i) {
                run_jost_march(plan, table.lambda_grid[lo + std::size_t(i)],
                               [](const MarchPlan::Panel&, const cplx*) {}, &smp);
                for (std::size_t p = 0; p < n_rm; ++p)
                    row[std::size_t(i) * n_rm + p] = smp[n_rm - 1 - p].m;
            }
            // Filon in lambda; the amplitude carries fhat, the connection
            // coefficient, the density, and the slow Jost factor
            const double el = table.panel_edges[pe], eh = table.panel_edges[pe + 1];
            const double mid = 0.5 * (el + eh), half = 0.5 * (eh - el);
            for (std::size_t p = 0; p < n_rm; ++p) {
                for (int i = 0; i < nn; ++i) {
                    const std::size_t gi = lo + std::size_t(i);
                    y[i] = q[gi] * table.c_values[gi] * row[std::size_t(i) * n_rm + p];
                }
                for (int k = 0; k < nn; ++k) {
                    cplx s = 0;
                    for (int i = 0; i < nn; ++i) s += fn.coefw[std::size_t(k) * nn + i] * y[i];
                    a[k] = s;
                }
                sph_jk(nn - 1, r_march[p] * half, jk.data());
                acc_c[p] += filon_panel(mid, half, r_march[p], a.data(), nn, jk.data());
            }
        }
        for (std::size_t p = 0; p < n_rm; ++p)
            acc_pos[p] += 2.0 * std::real(C12 * acc_c[p]) / std::sqrt(model.eval_A(r_march[p]));
    }

    for (std::size_t p = 0; p < r_march.size(); ++p) vals[march_idx[p]] = table.C0 * acc_pos[p];
    return RadialProfile(r_grid, vals, r_grid.back());
}

PlancherelResult plancherel_radial(const DensityModel& model, const RadialProfile& f,
                                   const RadialProfile& g, const CFunctionTable& table) {
    if (!table.calibrated())
        throw ConfigError("plancherel needs a calibrated table; run calibrate_C0");
    PlancherelResult res;
    if (f.empty() || g.empty()) return res;

    auto fh = spherical_transform(model, f, table);
    auto gh = spherical_transform(model, g, table);
    std::vector<double> q(fh.size());
    for (std::size_t i = 0; i < fh.size(); ++i)
        q[i] = fh[i].real() * gh[i].real() * table.plancherel_density[i];
    const std::size_t n_act = envelope_cutoff(q, table.panel_nodes);
    double rhs = 0;
    for (std::size_t i = 0; i < n_act; ++i) rhs += table.weights[i] * q[i];
    res.rhs = table.C0 * rhs;

    const double S = std::min(support_end(f), support_end(g));
    res.lhs = num::adaptive_gk([&](double r) { return f(r) * g(r) * model.eval_A(r); }, 0.0, S,
                               1e-12, 1e-16);

    const double nf = radial_l2_norm(model, f), ng = radial_l2_norm(model, g);
    res.relative_gap = nf * ng > 0 ? std::abs(res.lhs - res.rhs) / (nf * ng) : 0.0;
    return res;
}

} // namespace ct
