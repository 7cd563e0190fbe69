#pragma once
#include <optional>
#include <string>
#include <vector>

namespace ct {

// One summand p(r) * trig(beta r) * e^{a r} of a density function.
// trig is cos unless trig_sine is set; beta = 0 and cos give a plain
// exponential-polynomial term. poly holds coefficients, constant first.
struct DensityTerm {
    std::vector<double> poly;
    double trig_freq = 0.0;
    bool trig_sine = false;
    double exponent = 0.0;
};

struct ModelSpec {
    enum class Kind { Hyperbolic, DamekRicci, Custom };
    Kind kind = Kind::Custom;
    int n = 0;                      // hyperbolic dimension
    int p = 0, q = 0;               // damek_ricci parameters, dimension p+q+1
    std::vector<DensityTerm> terms; // custom term list
};

ModelSpec hyperbolic_spec(int n);
ModelSpec damek_ricci_spec(int p, int q);
ModelSpec custom_spec(std::vector<DensityTerm> terms);

// Volume density A(r) of a radially symmetric space, stored as a finite sum
// of exponential-polynomial terms. The solid angle of the unit sphere is
// absorbed into A, so radial integrals against the volume measure are plain
// \int u(r) A(r) dr. Immutable once built; evaluation is thread-safe.
class DensityModel {
public:
    double rho() const { return rho_; }
    double alpha() const { return 0.5 * (m_ - 1); }
    int radial_power() const { return m_; } // m = 2 alpha + 1, order of the zero of A at 0
    int dim() const { return m_ + 1; }
    double sphere_factor() const { return sphere_factor_; }
    const std::string& name() const { return name_; }
    const std::vector<DensityTerm>& terms() const { return terms_; }
    bool has_trig() const { return has_trig_; }

    double eval_A(double r) const;
    double eval_A_damped(double r) const;   // A(r) e^{-2 rho r}, safe at any radius
    double log_derivative(double r) const;  // A'/A
    double dlog_derivative(double r) const; // (A'/A)'
    double eval_G(double r) const; // 1/4 (A'/A)^2 + 1/2 (A'/A)' - rho^2

    // Taylor coefficients of B'/B about r = 0, for series starts of the
    // eigenfunction ODE. Throws SeriesDivergence if more terms are requested
    // than the stored expansion supports.
    std::vector<double> origin_log_series(int order) const;

    // A(r) = C e^{2 rho r} + P(r) when the decomposition holds
    bool decomposition_ok() const { return decomposition_ok_; }
    double leading_coefficient() const { return leading_C_; } // C
    double secondary_degree() const { return secondary_delta_; } // exponential degree of P
    double b0() const { return b0_; } // B(0) where A = r^m B(r)

    // fitted bound |G(r)| <= tail_K e^{-tail_kappa r} on the far range;
    // tail_K = 0 marks G numerically zero (no fit)
    double tail_K() const { return tail_K_; }
    double tail_kappa() const { return tail_kappa_; }

private:
    friend DensityModel build_model(const ModelSpec&);
    friend struct DensityProbe;
    DensityModel() = default;

    double A_series(double r) const;
    double A_terms(double r) const;
    double L_series(double r) const;
    double L_terms(double r) const;
    double dL_series(double r) const;
    double dL_terms(double r) const;
    double G_series(double r) const;
    double G_terms(double r) const;
    void eval_B(double r, double& B, double& dB, double& ddB) const;
    double eval_terms(const std::vector<DensityTerm>& ts, double r) const;
    void fit_tail();

    std::vector<DensityTerm> terms_, dterms_;         // A, A'
    // damped copies, exponents shifted by -2 rho so large radii cannot
    // overflow: A e^{-2 rho r}, Q e^{-2 rho r}, Q' e^{-2 rho r}
    std::vector<DensityTerm> sterms_, sqterms_, sdqterms_;
    std::vector<double> bexp_;                        // Taylor coefficients of B about 0
    double rho_ = 0, sphere_factor_ = 1, leading_C_ = 0, secondary_delta_ = 0, b0_ = 0;
    double tail_K_ = 0, tail_kappa_ = 0;
    int m_ = 0;
    bool decomposition_ok_ = false, has_trig_ = false;
    std::string name_ = "custom";
    static constexpr double kSeriesCutoff = 0.5;
};

// direct access to both evaluation branches, for consistency tests
struct DensityProbe {
    static double A_series(const DensityModel& d, double r) { return d.A_series(r); }
    static double A_terms(const DensityModel& d, double r) { return d.A_terms(r); }
    static double L_series(const DensityModel& d, double r) { return d.L_series(r); }
    static double L_terms(const DensityModel& d, double r) { return d.L_terms(r); }
    static double dL_series(const DensityModel& d, double r) { return d.dL_series(r); }
    static double dL_terms(const DensityModel& d, double r) { return d.dL_terms(r); }
    static double G_series(const DensityModel& d, double r) { return d.G_series(r); }
    static double G_terms(const DensityModel& d, double r) { return d.G_terms(r); }
};

// Validates positivity, growth and the sign of rho on a coarse scan and
// derives all model constants. Throws NonPositiveDensity, DecreasingDensity
// or NoPositiveRho when the scan rejects the spec.
DensityModel build_model(const ModelSpec& spec);

struct HypothesisReport {
    bool h1 = false;            // A increasing and unbounded
    bool h2 = false;            // A'/A non-increasing with positive limit
    bool h3 = false;            // A = r^{2 alpha + 1} B, B(0) > 0
    bool h4 = false;            // integrable weighted tail of G
    bool decomposition = false; // A = C e^{2 rho r} + lower order
    double rho_exact = 0;       // from the leading exponent
    double rho_numeric = 0;     // A'/2A at the far end of the scan
    double leading_C = 0;
    double secondary_delta = 0;
    double b0 = 0;
    double tail_integral = 0; // \int_1^{r_max} r |G| dr
    double tail_K = 0, tail_kappa = 0;
    double pureexp_C = 0; // A(r) e^{-2 rho r} within [1/C, C] for r >= 1
    bool experimental_trig = false;
};

HypothesisReport check_hypotheses(const DensityModel& model, double r_max = 50.0,
                                  double tol = 1e-12);

// surface area of the unit sphere S^{n-1} in R^n
double unit_sphere_area(int n);

} // namespace ct
