#pragma once

// Achronal surfaces t = τ(x) given as graphs of Lipschitz functions with
// L ≤ 1, and their images under Poincaré transformations.

#include "achronal/currents.hpp"
#include "achronal/minkowski.hpp"

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace achronal {

enum class SurfaceKind { flat, tilted, bump, cone, sampled, transformed };

std::string to_string(SurfaceKind k);

struct GradientSample {
    Vec3 value = Vec3::Zero();
    bool differentiable = true;  // false at the cone apex
};

class SurfaceImpl;

class AchronalSurface {
public:
    /// τ ≡ t0
    static AchronalSurface flat(double t0 = 0.0);
    /// τ(x) = e·x + offset, |e| ≤ 1
    static AchronalSurface tilted(const Vec3& e, double offset = 0.0);
    /// τ(x) = offset + λ s (√(1+|x|²/s²) − 1), |λ| < 1, s > 0
    static AchronalSurface bump(double lambda, double scale, double offset = 0.0);
    /// τ(x) = offset + γ|x − apex|, |γ| ≤ 1
    static AchronalSurface cone(double gamma, const Vec3& apex = Vec3::Zero(), double offset = 0.0);
    /// Trilinear interpolation of node values on a bounded grid; validated
    /// against |τᵢ − τⱼ| ≤ |xᵢ − xⱼ| + 1e-12 on all 26-neighbour pairs.
    static AchronalSurface sampled(const SpatialGrid& grid, std::vector<double> values);

    /// Throws domain outside the domain of a bounded surface.
    double tau(const Vec3& x) const;
    Vec3 gradient(const Vec3& x) const { return gradient_info(x).value; }
    GradientSample gradient_info(const Vec3& x) const;

    SurfaceKind kind() const;
    /// Exact Lipschitz constant for analytic families, discrete estimate for
    /// sampled surfaces, a bound for transformed ones.
    double lipschitz() const;
    /// Domain is all of ℝ³.
    bool maximal() const;
    bool in_domain(const Vec3& x) const;
    std::string describe() const;

    /// (e, offset) when the surface is a hyperplane.
    std::optional<std::pair<Vec3, double>> plane() const;

    /// τ ↦ γτ for γ in [0, 1]; requires a maximal surface.
    AchronalSurface flatten(double gamma) const;

    /// Effective parameters (γ·λ etc.), for reports and tests.
    double scale_factor() const { return scale_; }
    double parameter() const;  // λ for bump, γ for cone, |e| for tilted, t0 for flat

    const SurfaceImpl& impl() const { return *impl_; }

private:
    AchronalSurface(std::shared_ptr<const SurfaceImpl> impl, double scale) : impl_(std::move(impl)), scale_(scale) {}

    std::shared_ptr<const SurfaceImpl> impl_;
    double scale_ = 1.0;

    friend class SurfaceTransform;
};

class SurfaceImpl {
public:
    virtual ~SurfaceImpl() = default;
    virtual double tau(const Vec3& x) const = 0;
    virtual GradientSample gradient(const Vec3& x) const = 0;
    virtual SurfaceKind kind() const = 0;
    virtual double lipschitz() const = 0;
    virtual bool maximal() const { return true; }
    virtual bool in_domain(const Vec3&) const { return true; }
    virtual std::string describe() const = 0;
    virtual double parameter() const = 0;
};

struct CauchyReport {
    bool spacelike_cauchy = false;
    double max_pair_ratio = 0.0;    // max |Δτ|/|Δx| over sample pairs
    double asymptotic_slope = 0.0;  // max |τ(x) − τ(0)|/|x| on the outer shell
    std::optional<std::pair<Vec3, Vec3>> witness;
    std::string reason;
};

/// Strict pairwise slope test on the samples plus an asymptotic-slope test
/// on a shell of radius shell_radius.
CauchyReport is_spacelike_cauchy(const AchronalSurface& s, std::span<const Vec3> samples,
                                 double shell_radius = 1e6);

/// Image of a surface under g: S(x) = spatial part of g·(τ(x), x).
class SurfaceTransform {
public:
    SurfaceTransform(const PoincareElement& g, AchronalSurface base);

    const PoincareElement& element() const { return g_; }
    const AchronalSurface& base() const { return base_; }
    /// Image surface y ↦ τ_g(y); closed form for hyperplanes.
    const AchronalSurface& surface() const { return image_; }

    Vec3 forward(const Vec3& x) const;
    /// S⁻¹(y) by a safeguarded Newton iteration; throws fold_over.
    Vec3 inverse(const Vec3& y) const;
    Mat3 jacobian(const Vec3& x) const;
    double jacobian_det(const Vec3& x) const { return jacobian(x).determinant(); }

private:
    PoincareElement g_;
    AchronalSurface base_;
    AchronalSurface image_;
};

/// Builds the transform and verifies S⁻¹(S(x)) = x on the samples
/// (fold_over otherwise).
SurfaceTransform transform_surface(const PoincareElement& g, const AchronalSurface& s,
                                   std::span<const Vec3> samples = {});

/// Solves t − τ(ℓ⃗) = 0 for the preimage ℓ = Λ⁻¹((t, y) − a) on the graph of
/// τ; returns (t, ℓ⃗). Throws fold_over after 50 iterations.
std::pair<double, Vec3> graph_preimage(const PoincareElement& g, const AchronalSurface& s, const Vec3& y);

/// ∇τ_g at S(x) from ∇τ at x: DS^{-T}(Λ₀₀∇τ + Λ₀ₛᵀ).
Vec3 transformed_gradient(const LorentzTransform& L, const Vec3& grad);

/// max-norm residual of (1, ∇τ_g) − |det DS|⁻¹ Λ(1, ∇τ) for Λ = boost_z(ρ),
/// using the closed-form rows of DS⁻¹.
double boost_jacobian_identity_residual(double rapidity, const Vec3& grad);
/// Same identity for a general Λ with DS inverted numerically.
double jacobian_identity_residual(const LorentzTransform& L, const Vec3& grad);

}  // namespace achronal
