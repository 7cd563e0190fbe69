#include "ct/density.hpp"

#include "ct/errors.hpp"
#include "ct/num/fit.hpp"
#include "ct/num/gauss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <tuple>

namespace ct {

double unit_sphere_area(int n) {
    if (n < 1)
        throw DomainError("unit_sphere_area: dimension must be positive");
    return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

namespace {

std::vector<double> pascal_row(int n) {
    std::vector<double> c(n + 1, 0.0);
    c[0] = 1.0;
    for (int i = 1; i <= n; ++i)
        for (int j = i; j >= 1; --j)
            c[j] += c[j - 1];
    return c;
}

std::vector<double> poly_derivative(const std::vector<double>& p) {
    std::vector<double> d;
    for (std::size_t i = 1; i < p.size(); ++i)
        d.push_back(double(i) * p[i]);
    return d;
}

void poly_axpy(std::vector<double>& acc, double s, const std::vector<double>& p) {
    if (acc.size() < p.size())
        acc.resize(p.size(), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i)
        acc[i] += s * p[i];
}

bool poly_zero(const std::vector<double>& p) {
    for (double c : p)
        if (c != 0.0)
            return false;
    return true;
}

double poly_eval(const std::vector<double>& p, double r) {
    double v = 0;
    for (std::size_t i = p.size(); i-- > 0;)
        v = v * r + p[i];
    return v;
}

// merge terms sharing (exponent, trig), drop vanished ones
std::vector<DensityTerm> canonicalize(const std::vector<DensityTerm>& ts) {
    std::map<std::tuple<double, double, bool>, std::vector<double>> acc;
    for (const auto& t : ts) {
        if (t.poly.empty() || poly_zero(t.poly))
            continue;
        double beta = t.trig_freq;
        bool sine = t.trig_sine && beta != 0.0; // sin(0 r) term is identically zero
        if (t.trig_sine && beta == 0.0)
            continue;
        poly_axpy(acc[{t.exponent, beta, sine}], 1.0, t.poly);
    }
    std::vector<DensityTerm> out;
    for (auto& [key, poly] : acc) {
        while (!poly.empty() && poly.back() == 0.0)
            poly.pop_back();
        if (poly.empty() || poly_zero(poly))
            continue;
        DensityTerm t;
        t.poly = std::move(poly);
        t.exponent = std::get<0>(key);
        t.trig_freq = std::get<1>(key);
        t.trig_sine = std::get<2>(key);
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<DensityTerm> differentiate(const std::vector<DensityTerm>& ts) {
    std::vector<DensityTerm> out;
    for (const auto& t : ts) {
        DensityTerm base; // (p' + a p) with the same trig factor
        base.poly = poly_derivative(t.poly);
        poly_axpy(base.poly, t.exponent, t.poly);
        base.trig_freq = t.trig_freq;
        base.trig_sine = t.trig_sine;
        base.exponent = t.exponent;
        out.push_back(std::move(base));
        if (t.trig_freq != 0.0) {
            DensityTerm cross; // beta p with the trig factor flipped
            cross.poly = t.poly;
            double s = t.trig_sine ? t.trig_freq : -t.trig_freq;
            for (double& c : cross.poly)
                c *= s;
            cross.trig_freq = t.trig_freq;
            cross.trig_sine = !t.trig_sine;
            cross.exponent = t.exponent;
            out.push_back(std::move(cross));
        }
    }
    return canonicalize(out);
}

std::vector<DensityTerm> scaled_sum(const std::vector<DensityTerm>& a, double sa,
                                    const std::vector<DensityTerm>& b, double sb) {
    std::vector<DensityTerm> out;
    for (const auto& t : a) {
        out.push_back(t);
        for (double& c : out.back().poly)
            c *= sa;
    }
    for (const auto& t : b) {
        out.push_back(t);
        for (double& c : out.back().poly)
            c *= sb;
    }
    return canonicalize(out);
}

// Taylor coefficients of the term sum about r = 0 together with an
// absolute-value scale per order, to tell genuine zeros from cancellation.
void taylor_with_scale(const std::vector<DensityTerm>& ts, int order, std::vector<double>& coef,
                       std::vector<double>& scale) {
    coef.assign(order + 1, 0.0);
    scale.assign(order + 1, 0.0);
    std::vector<double> f(order + 1), fa(order + 1), g(order + 1), ga(order + 1);
    for (const auto& t : ts) {
        // exp(a r) * trig(beta r) as one series
        f.assign(order + 1, 0.0);
        fa.assign(order + 1, 0.0);
        double ek = 1, eka = 1; // a^k / k! and |a|^k / k!
        for (int k = 0; k <= order; ++k) {
            f[k] = ek;
            fa[k] = eka;
            ek *= t.exponent / (k + 1);
            eka *= std::abs(t.exponent) / (k + 1);
        }
        if (t.trig_freq != 0.0) {
            g.assign(order + 1, 0.0);
            ga.assign(order + 1, 0.0);
            double b = t.trig_freq;
            double term = t.trig_sine ? b : 1.0;
            int k0 = t.trig_sine ? 1 : 0;
            for (int k = k0; k <= order; k += 2) {
                g[k] = term;
                ga[k] = std::abs(term);
                term *= -b * b / double((k + 1) * (k + 2));
            }
            std::vector<double> h(order + 1, 0.0), ha(order + 1, 0.0);
            for (int i = 0; i <= order; ++i)
                for (int j = 0; i + j <= order; ++j) {
                    h[i + j] += f[i] * g[j];
                    ha[i + j] += fa[i] * ga[j];
                }
            f.swap(h);
            fa.swap(ha);
        }
        for (std::size_t i = 0; i < t.poly.size() && int(i) <= order; ++i)
            for (int j = 0; int(i) + j <= order; ++j) {
                coef[i + j] += t.poly[i] * f[j];
                scale[i + j] += std::abs(t.poly[i]) * fa[j];
            }
    }
}

} // namespace

ModelSpec hyperbolic_spec(int n) {
    if (n < 2)
        throw ConfigError("hyperbolic model needs dimension >= 2");
    ModelSpec s;
    s.kind = ModelSpec::Kind::Hyperbolic;
    s.n = n;
    return s;
}

ModelSpec damek_ricci_spec(int p, int q) {
    if (p < 0 || q < 0 || p + q < 1)
        throw ConfigError("damek_ricci model needs p, q >= 0 with p + q >= 1");
    ModelSpec s;
    s.kind = ModelSpec::Kind::DamekRicci;
    s.p = p;
    s.q = q;
    return s;
}

ModelSpec custom_spec(std::vector<DensityTerm> terms) {
    ModelSpec s;
    s.kind = ModelSpec::Kind::Custom;
    s.terms = std::move(terms);
    return s;
}

double DensityModel::eval_terms(const std::vector<DensityTerm>& ts, double r) const {
    double v = 0;
    for (const auto& t : ts) {
        if (t.exponent * r > 700.0)
            throw DomainError("density evaluation overflows at this radius");
        double w = poly_eval(t.poly, r) * std::exp(t.exponent * r);
        if (t.trig_freq != 0.0)
            w *= t.trig_sine ? std::sin(t.trig_freq * r) : std::cos(t.trig_freq * r);
        v += w;
    }
    return v;
}

void DensityModel::eval_B(double r, double& B, double& dB, double& ddB) const {
    B = dB = ddB = 0;
    for (std::size_t k = bexp_.size(); k-- > 0;) {
        ddB = ddB * r + (k >= 2 ? bexp_[k] * double(k) * double(k - 1) : 0.0);
    }
    for (std::size_t k = bexp_.size(); k-- > 0;)
        dB = dB * r + (k >= 1 ? bexp_[k] * double(k) : 0.0);
    for (std::size_t k = bexp_.size(); k-- > 0;)
        B = B * r + bexp_[k];
    // ddB and dB were accumulated with the factors already applied at order k,
    // so divide out the surplus powers of r
    if (r != 0.0) {
        dB /= r;
        ddB /= (r * r);
    } else {
        dB = bexp_.size() > 1 ? bexp_[1] : 0.0;
        ddB = bexp_.size() > 2 ? 2.0 * bexp_[2] : 0.0;
    }
}

double DensityModel::A_series(double r) const {
    double B, dB, ddB;
    eval_B(r, B, dB, ddB);
    return std::pow(r, m_) * B;
}

double DensityModel::A_terms(double r) const { return eval_terms(terms_, r); }

double DensityModel::L_series(double r) const {
    double B, dB, ddB;
    eval_B(r, B, dB, ddB);
    return m_ / r + dB / B;
}

double DensityModel::L_terms(double r) const {
    return 2.0 * rho_ + eval_terms(sqterms_, r) / eval_terms(sterms_, r);
}

double DensityModel::dL_series(double r) const {
    double B, dB, ddB;
    eval_B(r, B, dB, ddB);
    double g = dB / B;
    return -m_ / (r * r) + ddB / B - g * g;
}

double DensityModel::dL_terms(double r) const {
    double A = eval_terms(sterms_, r);
    double qa = eval_terms(sqterms_, r) / A;
    return eval_terms(sdqterms_, r) / A - qa * (2.0 * rho_ + qa);
}

double DensityModel::G_series(double r) const {
    double B, dB, ddB;
    eval_B(r, B, dB, ddB);
    double g = dB / B;
    double dg = ddB / B - g * g;
    // (alpha^2 - 1/4)/r^2 + m g/(2r) + g^2/4 + g'/2 - rho^2, m = 2 alpha + 1
    return 0.25 * double(m_) * double(m_ - 2) / (r * r) + 0.5 * m_ * g / r + 0.25 * g * g +
           0.5 * dg - rho_ * rho_;
}

double DensityModel::G_terms(double r) const {
    // with Q = A' - 2 rho A the pieces collapse to G = Q'/2A - (Q/A)^2/4,
    // which stays accurate where A'/A - 2 rho is far below rounding of A'/A
    double A = eval_terms(sterms_, r);
    double qa = eval_terms(sqterms_, r) / A;
    return 0.5 * eval_terms(sdqterms_, r) / A - 0.25 * qa * qa;
}

double DensityModel::eval_A(double r) const {
    if (r <= 0)
        throw DomainError("density argument must be positive");
    return r < kSeriesCutoff ? A_series(r) : A_terms(r);
}

double DensityModel::eval_A_damped(double r) const {
    if (r <= 0)
        throw DomainError("density argument must be positive");
    if (r < kSeriesCutoff)
        return A_series(r) * std::exp(-2.0 * rho_ * r);
    return eval_terms(sterms_, r);
}

std::vector<double> DensityModel::origin_log_series(int order) const {
    // divide B'/B as formal power series; B(0) = b0 > 0
    if (order + 2 > int(bexp_.size()))
        throw SeriesDivergence("origin expansion holds fewer terms than requested");
    std::vector<double> g(order + 1, 0.0);
    for (int k = 0; k <= order; ++k) {
        double num = double(k + 1) * bexp_[k + 1];
        for (int i = 0; i < k; ++i)
            num -= g[i] * bexp_[k - i];
        g[k] = num / bexp_[0];
    }
    return g;
}

double DensityModel::log_derivative(double r) const {
    if (r <= 0)
        throw DomainError("density argument must be positive");
    return r < kSeriesCutoff ? L_series(r) : L_terms(r);
}

double DensityModel::dlog_derivative(double r) const {
    if (r <= 0)
        throw DomainError("density argument must be positive");
    return r < kSeriesCutoff ? dL_series(r) : dL_terms(r);
}

double DensityModel::eval_G(double r) const {
    if (r <= 0)
        throw DomainError("density argument must be positive");
    return r < kSeriesCutoff ? G_series(r) : G_terms(r);
}

void DensityModel::fit_tail() {
    std::vector<double> xs, ys;
    double gmax = 0;
    const int npts = 75;
    for (int i = 0; i < npts; ++i) {
        double r = 8.0 + (45.0 - 8.0) * i / (npts - 1);
        double g;
        try {
            g = std::abs(G_terms(r));
        } catch (const DomainError&) {
            break; // overflow radius reached, fit on what we have
        }
        gmax = std::max(gmax, g);
        if (g > 1e-290) {
            xs.push_back(r);
            ys.push_back(std::log(g));
        }
    }
    if (gmax < 1e-200 || xs.size() < 8) {
        tail_K_ = 0;
        tail_kappa_ = 0;
        return;
    }
    // keep the points that still carry signal relative to the largest value
    std::vector<double> fx, fy;
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (ys[i] > std::log(gmax) - 250.0) {
            fx.push_back(xs[i]);
            fy.push_back(ys[i]);
        }
    auto fit = num::fit_line(fx, fy);
    tail_kappa_ = -fit.slope;
    tail_K_ = std::exp(fit.intercept);
}

DensityModel build_model(const ModelSpec& spec) {
    DensityModel d;
    switch (spec.kind) {
    case ModelSpec::Kind::Hyperbolic: {
        const int n = spec.n;
        if (n < 2)
            throw ConfigError("hyperbolic model needs dimension >= 2");
        // omega_{n-1} sinh^{n-1} r expanded over e^{(n-1-2j) r}
        double omega = unit_sphere_area(n);
        auto bin = pascal_row(n - 1);
        double lead = omega * std::pow(2.0, -(n - 1));
        for (int j = 0; j <= n - 1; ++j) {
            DensityTerm t;
            t.poly = {lead * bin[j] * (j % 2 ? -1.0 : 1.0)};
            t.exponent = double(n - 1 - 2 * j);
            d.terms_.push_back(std::move(t));
        }
        d.sphere_factor_ = omega;
        d.name_ = "hyperbolic(" + std::to_string(n) + ")";
        break;
    }
    case ModelSpec::Kind::DamekRicci: {
        const int p = spec.p, q = spec.q;
        if (p < 0 || q < 0 || p + q < 1)
            throw ConfigError("damek_ricci model needs p, q >= 0 with p + q >= 1");
        // omega_{p+q} 2^{p+q} sinh^{p+q}(r/2) cosh^q(r/2); exponents are half
        // integers (p + 2q - 2(j + k))/2... collected via binomial products
        double omega = unit_sphere_area(p + q + 1);
        auto bs = pascal_row(p + q), bc = pascal_row(q);
        double lead = omega * std::pow(2.0, -q);
        std::map<int, double> coef; // key: twice the exponent
        for (int j = 0; j <= p + q; ++j)
            for (int k = 0; k <= q; ++k) {
                int twice = (p + q + q) - 2 * (j + k);
                coef[twice] += lead * bs[j] * (j % 2 ? -1.0 : 1.0) * bc[k];
            }
        for (auto& [twice, c] : coef) {
            if (c == 0.0)
                continue;
            DensityTerm t;
            t.poly = {c};
            t.exponent = 0.5 * twice;
            d.terms_.push_back(std::move(t));
        }
        d.sphere_factor_ = omega;
        d.name_ = "damek_ricci(" + std::to_string(p) + "," + std::to_string(q) + ")";
        break;
    }
    case ModelSpec::Kind::Custom:
        d.terms_ = spec.terms;
        d.sphere_factor_ = 1.0;
        d.name_ = "custom";
        break;
    }
    d.terms_ = canonicalize(d.terms_);
    if (d.terms_.empty())
        throw NonPositiveDensity("density has no nonzero terms");
    for (const auto& t : d.terms_)
        if (t.trig_freq != 0.0)
            d.has_trig_ = true;

    double a_max = d.terms_.front().exponent;
    for (const auto& t : d.terms_)
        a_max = std::max(a_max, t.exponent);
    d.rho_ = 0.5 * a_max;

    d.dterms_ = differentiate(d.terms_);
    // Q = A' - 2 rho A; the leading exponential cancels exactly because both
    // sides carry the same product 2 rho * C
    auto qterms = scaled_sum(d.dterms_, 1.0, d.terms_, -2.0 * d.rho_);
    auto dqterms = differentiate(qterms);
    auto damp = [&](std::vector<DensityTerm> ts) {
        for (auto& t : ts)
            t.exponent -= 2.0 * d.rho_;
        return ts;
    };
    d.sterms_ = damp(d.terms_);
    d.sqterms_ = damp(std::move(qterms));
    d.sdqterms_ = damp(std::move(dqterms));

    // locate m = order of vanishing at 0 and the coefficients of B = A / r^m
    double absmax = 0;
    for (const auto& t : d.terms_)
        absmax = std::max(absmax, std::abs(t.exponent) + std::abs(t.trig_freq));
    int order = std::min(400, 48 + int(3.0 * absmax));
    std::vector<double> coef, scale;
    taylor_with_scale(d.terms_, order, coef, scale);
    int m = -1;
    for (int k = 0; k <= order; ++k) {
        if (std::abs(coef[k]) > 1e-10 * scale[k]) {
            m = k;
            break;
        }
        coef[k] = 0.0;
    }
    if (m < 0)
        throw SeriesDivergence("cannot locate the order of the density at r = 0");
    d.m_ = m;
    d.bexp_.assign(coef.begin() + m, coef.end());
    d.b0_ = d.bexp_[0];
    if (d.b0_ <= 0)
        throw NonPositiveDensity("density is negative near r = 0");

    // coarse acceptance scan before deriving anything else
    const int npts = 2048;
    double prevA = 0;
    for (int i = 0; i < npts; ++i) {
        double r = 1e-4 * std::pow(50.0 / 1e-4, double(i) / (npts - 1));
        double A = d.eval_A(r);
        if (!(A > 0))
            throw NonPositiveDensity("density is not positive at r = " + std::to_string(r));
        if (d.log_derivative(r) < -1e-12)
            throw DecreasingDensity("density decreases near r = " + std::to_string(r));
        if (i > 0 && A < prevA * (1.0 - 1e-9))
            throw DecreasingDensity("density decreases near r = " + std::to_string(r));
        prevA = A;
    }
    if (d.rho_ <= 0)
        throw NoPositiveRho("log derivative limit is not positive");

    // leading-term decomposition A = C e^{2 rho r} + P
    const DensityTerm* lead = nullptr;
    bool lead_clean = true;
    double delta = -std::numeric_limits<double>::infinity();
    for (const auto& t : d.terms_) {
        if (t.exponent == a_max && t.trig_freq == 0.0) {
            if (lead)
                lead_clean = false;
            lead = &t;
        } else if (t.exponent >= a_max - 1e-12) {
            lead_clean = false; // an oscillatory term rides on the leading exponential
        } else {
            delta = std::max(delta, t.exponent);
        }
    }
    if (lead && lead_clean && lead->poly.size() == 1 && lead->poly[0] > 0) {
        d.decomposition_ok_ = true;
        d.leading_C_ = lead->poly[0];
        d.secondary_delta_ = delta;
    } else {
        d.decomposition_ok_ = false;
        d.leading_C_ = std::numeric_limits<double>::quiet_NaN();
        d.secondary_delta_ = std::numeric_limits<double>::quiet_NaN();
    }

    d.fit_tail();
    return d;
}

HypothesisReport check_hypotheses(const DensityModel& d, double r_max, double tol) {
    if (r_max < 10)
        throw DomainError("hypothesis check needs r_max >= 10");
    HypothesisReport rep;
    rep.experimental_trig = d.has_trig();
    rep.rho_exact = d.rho();
    rep.rho_numeric = 0.5 * d.log_derivative(std::min(50.0, r_max));
    rep.leading_C = d.leading_coefficient();
    rep.secondary_delta = d.secondary_degree();
    rep.b0 = d.b0();
    rep.decomposition = d.decomposition_ok();
    rep.tail_K = d.tail_K();
    rep.tail_kappa = d.tail_kappa();

    const int npts = 2048;
    bool a_up = true, l_down = true;
    double prevA = 0, prevL = 0, ratio_lo = 0, ratio_hi = 0;
    double lscale = std::max(1.0, 2.0 * d.rho());
    for (int i = 0; i < npts; ++i) {
        double r = 1e-4 * std::pow(r_max / 1e-4, double(i) / (npts - 1));
        double A = d.eval_A(r);
        double L = d.log_derivative(r);
        if (i > 0) {
            if (A < prevA * (1.0 - 1e-9))
                a_up = false;
            if (L > prevL + tol * lscale)
                l_down = false;
        }
        if (r >= 1.0) {
            double ratio = d.eval_A_damped(r);
            if (ratio_lo == 0) {
                ratio_lo = ratio_hi = ratio;
            } else {
                ratio_lo = std::min(ratio_lo, ratio);
                ratio_hi = std::max(ratio_hi, ratio);
            }
        }
        prevA = A;
        prevL = L;
    }
    rep.h1 = a_up && d.eval_A(r_max) > d.eval_A(0.5 * r_max);
    rep.h2 = l_down && rep.rho_numeric > 0;
    rep.h3 = d.radial_power() >= 1 && d.b0() > 0;
    rep.pureexp_C = std::max(ratio_hi, ratio_lo > 0 ? 1.0 / ratio_lo : 0.0);

    rep.tail_integral = num::adaptive_gk([&](double r) { return r * std::abs(d.eval_G(r)); },
                                         1.0, r_max, 1e-8, 1e-30);
    rep.h4 = d.tail_K() == 0.0 || d.tail_kappa() > 0.0;
    return rep;
}

} // namespace ct
