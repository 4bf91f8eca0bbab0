#pragma once

// Conserved covariant currents
//
//   J(φ,x) = (2π)^{-3} Σ_k Σ_p h⁶ K(k,p) conj(a_k(x)) a_p(x),
//   a_p(x) = φ(p) e^{−i(ε(p)x₀ − p·x)},
//
// for the causal kernel or the stress-energy kernel, with a direct oracle,
// a separable fast path and exact Fourier slices.

#include "achronal/kernels.hpp"
#include "achronal/wavepacket.hpp"

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace achronal {

enum class Backend { direct, fast };

std::string to_string(Backend b);
Backend backend_from_string(const std::string& s);

struct CurrentSample {
    FourVector point;
    Vec4 value = Vec4::Zero();
    Backend backend = Backend::direct;
    double error = 0.0;  // imaginary residue (direct) or truncation bound (fast)
};

/// Packet restricted to its support, bound to a kernel.
class CurrentSpec {
public:
    CurrentSpec(WavePacket phi, KernelSpec kernel);

    const WavePacket& packet() const { return *phi_; }
    const KernelSpec& kernel() const { return kernel_; }
    double mass() const { return phi_->mass(); }
    bool is_causal() const { return std::holds_alternative<CausalKernel>(kernel_); }

    std::size_t size() const { return p_.size(); }
    const std::vector<Vec3>& momenta() const { return p_; }
    const std::vector<double>& energies() const { return eps_; }
    const std::vector<cplx>& values() const { return val_; }
    const std::vector<std::array<int, 3>>& coords() const { return idx_; }

    /// (2π)^{-3} h⁶
    double prefactor() const { return pref_; }

    /// max ε − min ε over the support: the temporal bandwidth of J.
    double bandwidth() const;

    /// Kernel between support nodes a and b.
    Vec4 pair_kernel(std::size_t a, std::size_t b) const;

    /// K^μ(a, b) for b in [0, count); out holds 4 rows of length count.
    void kernel_row(std::size_t a, std::size_t count, double* k0, double* k1, double* k2, double* k3) const;

    /// a_p(x) over the support.
    void phases(const FourVector& x, double* re, double* im) const;

    CurrentSpec with_packet(WavePacket phi) const { return CurrentSpec(std::move(phi), kernel_); }
    CurrentSpec with_kernel(KernelSpec k) const { return CurrentSpec(*phi_, std::move(k)); }

private:
    std::shared_ptr<const WavePacket> phi_;
    KernelSpec kernel_;
    std::vector<Vec3> p_;
    std::vector<double> eps_;
    std::vector<cplx> val_;
    std::vector<std::array<int, 3>> idx_;
    double pref_ = 0.0;
    // structure-of-arrays copies for the inner loops
    std::vector<double> px_, py_, pz_, w_, pn_;
};

/// Full double sum over support nodes.
CurrentSample eval_direct(const CurrentSpec& spec, const FourVector& x);
std::vector<CurrentSample> eval_direct(const CurrentSpec& spec, std::span<const FourVector> xs);

struct FastOptions {
    double tolerance = 1e-8;  // relative residual trace of the g-matrix factorization
    int max_rank = 0;         // 0: no cap
    bool full_rank = false;   // exact eigendecomposition
};

/// Separable representation J^μ = c Σ_terms coeff · Re(conj(A_i) A_j) with
/// A_i(x) = Σ_p f_i(p) a_p(x). Exact for stress-energy kernels; for causal
/// kernels built from a truncated factorization of [g(ε_kε_p − k·p)].
class FastCurrent {
public:
    struct Term {
        int a, b;   // field indices
        Vec4 coeff; // contribution to (J0, J1, J2, J3)
    };

    static FastCurrent build(const CurrentSpec& spec, const FastOptions& opt = {});

    CurrentSample eval(const FourVector& x) const;
    std::vector<CurrentSample> eval(std::span<const FourVector> xs) const;

    int rank() const { return rank_; }
    double residual() const { return residual_; }      // relative discarded trace (causal) or 0
    double error_bound() const { return bound_; }      // absolute bound on |ΔJ_μ|
    std::uint64_t packet_checksum() const { return checksum_; }
    bool indefinite() const { return indefinite_; }

    /// Field f_i at support node p: fields()(p, i).
    const Eigen::MatrixXd& fields() const { return fields_; }
    const std::vector<Term>& terms() const { return terms_; }
    const CurrentSpec& spec() const { return spec_; }

    /// Combines field values into the current (without the prefactor).
    Vec4 combine(std::span<const cplx> A) const;

private:
    explicit FastCurrent(const CurrentSpec& spec) : spec_(spec) {}

    CurrentSpec spec_;
    Eigen::MatrixXd fields_;
    std::vector<Term> terms_;
    // stress-energy combination uses a closed form instead of terms_
    bool tensor_ = false;
    int rank_ = 0;
    double residual_ = 0.0;
    double bound_ = 0.0;
    bool indefinite_ = false;
    std::uint64_t checksum_ = 0;
};

FastCurrent build_fast(const CurrentSpec& spec, const FastOptions& opt = {});

/// Uniform spatial tensor grid: node(i,j,k) = origin + spacing·(i,j,k).
struct SpatialGrid {
    std::array<int, 3> n{0, 0, 0};
    double spacing = 0.0;
    Vec3 origin = Vec3::Zero();

    std::size_t size() const { return std::size_t(n[0]) * n[1] * n[2]; }
    std::size_t index(int i, int j, int k) const { return (std::size_t(i) * n[1] + j) * n[2] + k; }
    Vec3 node(int i, int j, int k) const { return origin + spacing * Vec3(i, j, k); }
    Vec3 node(std::size_t idx) const;
    double axis(int a, int i) const { return origin[a] + spacing * i; }
    bool operator==(const SpatialGrid& o) const = default;
};

struct Slice {
    double x0 = 0.0;
    SpatialGrid grid;
    std::array<std::vector<double>, 4> J;  // J[μ][node]

    Vec4 at(std::size_t idx) const { return {J[0][idx], J[1][idx], J[2][idx], J[3][idx]}; }
};

struct SliceOptions {
    int oversample = 1;     // spatial spacing π/(oversample·P)
    int window_nodes = 0;   // native nodes per axis; 0 selects 2N/3 rounded to even
};

/// Centred window of oversample·window_nodes nodes per axis on the lattice
/// x = (l − S/2)·2π/(S h), S = oversample·N, so that it embeds in the FFT grid.
SpatialGrid window_grid(const MomentumGrid& grid, const SliceOptions& opt);

/// Difference spectrum F^μ(q) = Σ_{k−p=q} K^μ(k,p) conj(ψ_k) ψ_p at one time,
/// ψ_p = φ(p) e^{−iε(p)x₀}, so that J(x₀, x) = c Σ_q F(q) e^{−iq·x} exactly.
class PairSpectrum {
public:
    static PairSpectrum compute(const CurrentSpec& spec, double x0);

    double x0() const { return x0_; }
    const std::array<int, 3>& half_width() const { return D_; }

    Vec4 eval(const Vec3& x) const;
    /// Values on an arbitrary tensor grid via separable partial sums.
    Slice on_grid(const SpatialGrid& g) const;
    /// Values on the window lattice via a real inverse FFT.
    Slice fft(const SliceOptions& opt) const;

    /// Σ_q F(q)·w(q) for a weight given in closed form (spectral integrals).
    Vec4 contract(const std::function<cplx(const Vec3&)>& w) const;

private:
    PairSpectrum() = default;

    double x0_ = 0.0;
    double h_ = 0.0;
    double pref_ = 0.0;
    int n_ = 0;
    std::array<int, 3> D_{0, 0, 0};
    std::array<int, 3> dims_{0, 0, 0};
    std::vector<std::array<cplx, 4>> F_;
};

/// Exact slice on the window lattice (pair spectrum + FFT).
Slice slice_exact(const CurrentSpec& spec, double x0, const SliceOptions& opt = {});

/// Slice from the separable fields (one complex FFT per field).
Slice slice_separable(const FastCurrent& fast, double x0, const SliceOptions& opt = {});

/// Batched point evaluator used by the diagnostics.
using PointEvaluator = std::function<std::vector<Vec4>(std::span<const FourVector>)>;

PointEvaluator direct_evaluator(const CurrentSpec& spec);
PointEvaluator fast_evaluator(const FastCurrent& fast);

struct ContinuityResult {
    double residual = 0.0;     // |∂_μJ^μ| / max_μ |∂_μJ^μ|
    double divergence = 0.0;
    Vec4 partials = Vec4::Zero();
};

/// Fourth-order central differences with step h.
ContinuityResult check_continuity(const PointEvaluator& J, const FourVector& x, double h);

/// J₀ − |J|
double check_causal_pointwise(const CurrentSample& s);

struct CausalScan {
    double min_margin = 0.0;
    double max_j0 = 0.0;
    Vec3 argmin = Vec3::Zero();
    std::size_t nodes = 0;
};

CausalScan scan_causal(const Slice& s);

struct DecayOptions {
    double r_min_factor = 2.0;  // radii in [r_min_factor, r_max_factor]·width,
    double r_max_factor = 8.0;  // capped at 0.4 of the spatial period 2π/h
    int radii = 16;
    double noise_floor = 1e-11; // relative to max J0 at t = 0
};

struct DecayFit {
    double exponent = 0.0;  // N̂ in J₀ ~ C(1+|x|)^{-N̂}
    double log_constant = 0.0;
    double residual = 0.0;  // RMS of the log fit
    double width = 0.0;     // RMS radius of J₀ at t = 0
    int samples = 0;
    int rejected = 0;
};

/// Fits log J₀ against log(1+|x|) along 13 lattice ray directions, radii
/// chosen from the packet width.
DecayFit decay_scan(const CurrentSpec& spec, double x0, const DecayOptions& opt = {});
/// Same with explicit radii (each ≥ |x0|).
DecayFit decay_scan(const CurrentSpec& spec, double x0, std::span<const double> radii, double noise_floor = 1e-11);

/// RMS radius of J₀(0,·) about its centroid.
double packet_width(const Slice& s);

}  // namespace achronal
