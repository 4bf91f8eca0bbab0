#pragma once

// Localization probabilities as the flux of a conserved current through an
// achronal surface:
//
//   ⟨φ, T(Δ)φ⟩ = ∫_mask (J₀(τ(x), x) − J(τ(x), x)·∇τ(x)) d³x.

#include "achronal/currents.hpp"
#include "achronal/surfaces.hpp"

#include <Eigen/Geometry>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace achronal {

using Box3 = Eigen::AlignedBox3d;

enum class MaskKind { empty, full, ball, box, half_space, complement, unite, intersect, pullback, shadow };

class MaskNode;

/// Subset of the spatial projection of a surface.
class Mask {
public:
    static Mask empty();
    static Mask full();
    static Mask ball(const Vec3& center, double radius);
    static Mask box(const Vec3& lo, const Vec3& hi);
    /// {x : n·x > c}, n normalized internally.
    static Mask half_space(const Vec3& normal, double c);
    static Mask unite(const Mask& a, const Mask& b);
    static Mask intersect(const Mask& a, const Mask& b);
    /// {y : S⁻¹(y) ∈ m} for the spatial map S of a surface transform.
    static Mask pullback(const SurfaceTransform& tr, const Mask& m);
    /// Points y of the target surface causally connected to the source mask
    /// placed on flat(t0): dist(y, source) ≤ |τ(y) − t0|. The source needs an
    /// exact signed distance (ball or box); unsupported otherwise.
    static Mask shadow(const Mask& source, double t0, const AchronalSurface& target);

    Mask complement() const;

    bool contains(const Vec3& x) const;
    /// Signed distance bound: |sd| never exceeds the distance to the boundary,
    /// negative inside (up to boundary ties, which `contains` decides).
    double sd(const Vec3& x) const;
    /// Bounding box, or nullopt when unbounded.
    std::optional<Box3> bounds() const;
    MaskKind kind() const;
    std::string describe() const;

    /// Ball parameters when kind() == ball.
    std::optional<std::pair<Vec3, double>> as_ball() const;

private:
    explicit Mask(std::shared_ptr<const MaskNode> n) : node_(std::move(n)) {}
    std::shared_ptr<const MaskNode> node_;
};

struct Region {
    AchronalSurface surface = AchronalSurface::flat();
    Mask mask = Mask::full();
    std::string describe() const { return surface.describe() + " | " + mask.describe(); }
};

struct LocalizationOptions {
    int oversample = 2;       // window lattice spacing π/(oversample·P) for unbounded masks
    int window_nodes = 0;     // native nodes per axis, 0 selects 2N/3
    int refine = 8;           // bounded masks: local spacing π/(refine·P)
    int pad = 2;              // extra local cells around the mask
    int max_local_nodes = 160;// per axis; the local spacing grows beyond this
    int subsamples = 4;       // per axis in boundary cells
    bool centroid_correction = true;
    double chebyshev_tolerance = 1e-13;
    double tail_budget = 1e-3;  // exterior flux budget relative to ‖φ‖²
};

struct LocalizationResult {
    double probability = 0.0;
    double error = 0.0;          // interpolation bound + tail + boundary correction size
    std::string surface;
    std::string mask;
    std::string backend = "spectral";
    SpatialGrid grid;
    bool window_lattice = false; // FFT window lattice (true) or local grid
    int time_nodes = 0;
    double tail = 0.0;           // flux through the outer shell of the window
    bool tail_warning = false;
    double min_integrand = 0.0;  // min (J₀ − J·∇τ) relative to max J₀ on the grid
    double norm = 0.0;           // ‖φ‖²
};

/// Quadrature grid and integrand shared by several masks.
class FluxField {
public:
    FluxField(const CurrentSpec& spec, const AchronalSurface& surface, const SpatialGrid& grid, bool window_lattice,
              const LocalizationOptions& opt);

    const SpatialGrid& grid() const { return grid_; }
    bool window_lattice() const { return window_; }
    const std::vector<double>& integrand() const { return h_; }
    int time_nodes() const { return time_nodes_; }
    double interpolation_bound() const { return cheb_bound_; }
    double max_j0() const { return max_j0_; }

    LocalizationResult integrate(const Mask& mask) const;

    /// Cell fractions inside the mask (fractional on boundary cells).
    std::vector<double> weights(const Mask& mask) const;

private:
    struct Weights {
        std::vector<double> w;
        std::vector<std::array<int, 3>> offsets;  // Σ subsample offsets in units of δ/(2m)
    };
    Weights mask_weights(const Mask& mask) const;

    AchronalSurface surface_;
    SpatialGrid grid_;
    bool window_;
    LocalizationOptions opt_;
    std::vector<double> h_;
    std::vector<Vec3> grad_h_;
    std::vector<bool> defined_;
    int time_nodes_ = 0;
    double cheb_bound_ = 0.0;
    double max_j0_ = 0.0;
    double norm_ = 0.0;
};

/// Local grid for bounded masks, window lattice otherwise.
SpatialGrid quadrature_grid(const MomentumGrid& mg, const Mask& mask, const LocalizationOptions& opt, bool* window);
/// Window lattice regardless of the mask.
SpatialGrid window_quadrature_grid(const MomentumGrid& mg, const LocalizationOptions& opt);

LocalizationResult probability(const CurrentSpec& spec, const Region& region, const LocalizationOptions& opt = {});

struct InvarianceReport {
    std::vector<LocalizationResult> results;
    double max_deviation = 0.0;  // max pairwise |pᵢ − pⱼ| / max(pᵢ, pⱼ)
    bool tail_warning = false;
};

InvarianceReport flux_invariance_report(const CurrentSpec& spec, const std::vector<AchronalSurface>& surfaces,
                                        const LocalizationOptions& opt = {});

struct CovarianceResult {
    LocalizationResult lhs;  // W(g)⁻¹φ on the original region
    LocalizationResult rhs;  // φ on g·region
    double relative_difference = 0.0;
};

CovarianceResult covariance_check(const CurrentSpec& spec, const PoincareElement& g, const Region& region,
                                  const LocalizationOptions& opt = {},
                                  InterpolationMethod interp = InterpolationMethod::tricubic);

struct AdditivityResult {
    std::vector<double> probabilities;
    double sum = 0.0;
    double norm = 0.0;
    double residual = 0.0;  // |Σp − ‖φ‖²| / ‖φ‖²
};

/// Throws overlap when two masks share a node weight beyond rounding.
AdditivityResult additivity_check(const CurrentSpec& spec, const AchronalSurface& surface,
                                  const std::vector<Mask>& partition, const LocalizationOptions& opt = {});

/// ¼ Σ_ζ ζ q(ζφ + ψ), ζ ∈ {1, −1, i, −i}; conjugate-linear in φ.
cplx matrix_element(const WavePacket& phi, const WavePacket& psi, const KernelSpec& kernel, const Region& region,
                    const LocalizationOptions& opt = {});

struct MonotonicityResult {
    LocalizationResult source;
    LocalizationResult target;
    Region target_region;
    double margin = 0.0;  // p_Δ′ − p_Δ
};

/// Δ = ball (or full) mask on a flat surface; Δ′ = target ∩ causal shadow.
MonotonicityResult causal_monotonicity_check(const CurrentSpec& spec, const Region& delta,
                                             const AchronalSurface& target, const LocalizationOptions& opt = {});

}  // namespace achronal
