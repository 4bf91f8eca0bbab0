#pragma once

// Scalar profiles g, the causal four-vector kernel K(k,p) and the
// stress-energy kernel K_n(k,p) of the massive scalar boson.

#include "achronal/minkowski.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace achronal {

enum class GVariant { basic, basic_printed, oscillatory, constant, custom };

/// Profile g on [m², ∞) with g(m²) = 1.
class GFunction {
public:
    /// (2m²)^r (m²+t)^{-r}, r ≥ 3/2.
    static GFunction basic(double r, double mass = 1.0);
    /// (2m²)^r (m²+t²)^{-r}; kept only for comparison, normalized only at m = 1.
    static GFunction basic_printed(double r, double mass = 1.0);
    /// cos(ω(t − m²)): normalized but not a causal profile.
    static GFunction oscillatory(double omega, double mass = 1.0);
    static GFunction constant(double mass = 1.0);
    static GFunction custom(std::function<double(double)> g, double mass, std::string label = "custom");

    /// Throws domain for t < m² (beyond rounding).
    double operator()(double t) const;

    /// Unchecked evaluation for inner loops; t is clamped to m².
    double eval(double t) const noexcept {
        const double m2 = mass_ * mass_;
        if (t < m2) t = m2;
        switch (variant_) {
            case GVariant::basic: {
                const double u = m2 + t;
                if (half_power_ > 0) {
                    const double s = 1.0 / std::sqrt(u);
                    double v = scale_;
                    for (int i = 0; i < half_power_; ++i) v *= s;
                    return v;
                }
                return scale_ * std::pow(u, -r_);
            }
            case GVariant::basic_printed: return scale_ * std::pow(m2 + t * t, -r_);
            case GVariant::oscillatory: return std::cos(omega_ * (t - m2));
            case GVariant::constant: return 1.0;
            case GVariant::custom: return custom_(t);
        }
        return 0.0;
    }

    GVariant variant() const { return variant_; }
    double r() const { return r_; }
    double omega() const { return omega_; }
    double mass() const { return mass_; }
    std::string describe() const;

private:
    GFunction() = default;

    GVariant variant_ = GVariant::constant;
    double mass_ = 1.0;
    double r_ = 0.0;
    double omega_ = 0.0;
    double scale_ = 1.0;
    int half_power_ = 0;  // 2r when that is a small integer
    std::function<double(double)> custom_;
    std::string label_;
};

/// g_r(t) = (2m²)^r (m²+t)^{-r}; throws domain for t < m² or r < 3/2.
double g_basic(double r, double t, double m);

struct CausalKernel {
    GFunction g = GFunction::basic(1.5);

    double mass() const { return g.mass(); }
};

/// K(k,p) = (ε(k)+ε(p), k+p) / (2√(ε(k)ε(p))) · g(ε(k)ε(p) − k·p)
Vec4 kernel_K(const Vec3& k, const Vec3& p, const CausalKernel& kern);

enum class TensorVariant { standard, as_printed };
enum class TensorNorm { raw, energy_weighted };

std::string to_string(TensorVariant v);
std::string to_string(TensorNorm n);

/// Stress-energy kernel indexed by a unit future timelike n.
///   standard:   [(k·n)p + (p·n)k + (m² − k·p)n] / (2√(ε(k)ε(p)))
///   as_printed: [(k·n)p + (p·n)k − (m² + k·p)n] / (2√(ε(k)ε(p)))
/// energy_weighted multiplies by 1/√((k·n)(p·n)), which makes the n-time
/// component equal 1 on the diagonal for the standard variant.
class TensorKernel {
public:
    static TensorKernel make(const FourVector& n, double mass = 1.0, TensorVariant variant = TensorVariant::standard,
                             TensorNorm norm = TensorNorm::energy_weighted);

    const FourVector& n() const { return n_; }
    double mass() const { return mass_; }
    TensorVariant variant() const { return variant_; }
    TensorNorm norm() const { return norm_; }

    /// Same kernel with n replaced by Λn.
    TensorKernel transformed(const LorentzTransform& L) const;

private:
    TensorKernel() = default;

    FourVector n_{1.0, 0.0, 0.0, 0.0};
    double mass_ = 1.0;
    TensorVariant variant_ = TensorVariant::standard;
    TensorNorm norm_ = TensorNorm::energy_weighted;
};

Vec4 kernel_Kn(const Vec3& k, const Vec3& p, const TensorKernel& kern);

using KernelSpec = std::variant<CausalKernel, TensorKernel>;

double kernel_mass(const KernelSpec& k);

/// "basic:r=1.5", "basic:r=2.5:printed", "osc:w=50", "const",
/// "tensor:n=(1,0,0,0):variant=standard:norm=energy".
KernelSpec parse_kernel(const std::string& text, double mass = 1.0);
std::string to_string(const KernelSpec& k);

struct GramReport {
    std::size_t size = 0;
    double min_eigenvalue = 0.0;
    double max_eigenvalue = 0.0;
    std::uint64_t points_hash = 0;
};

/// Spectrum of the symmetrized matrix [K₀(kᵢ,kⱼ)].
GramReport gram_report(std::span<const Vec3> points, const CausalKernel& kern);
double gram_min_eigenvalue(std::span<const Vec3> points, const CausalKernel& kern);

}  // namespace achronal
