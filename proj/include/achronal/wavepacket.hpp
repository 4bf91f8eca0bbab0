#pragma once

// One-particle states of the massive scalar boson in the momentum
// representation L²(ℝ³, d³p), sampled on a uniform cubic grid, together with
// the unitary mass-shell representation
//
//   (W(a,A)φ)(p) = √(ε(q)/ε(p)) e^{i(a₀ε(p) − a⃗·p)} φ(q),   𝔮 = A⁻¹𝔭.

#include "achronal/minkowski.hpp"

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace achronal {

using cplx = std::complex<double>;

inline double energy(const Vec3& p, double mass) { return std::sqrt(mass * mass + p.squaredNorm()); }

/// Nodes p_i = (i − N/2)h, h = 2P/N, i = 0..N−1 on each axis; flat index is
/// row-major with axis 1 slowest.
class MomentumGrid {
public:
    MomentumGrid(int points_per_axis, double extent);

    int n() const { return n_; }
    double extent() const { return extent_; }
    double spacing() const { return 2.0 * extent_ / n_; }
    double cell_volume() const { const double h = spacing(); return h * h * h; }
    std::size_t size() const { return std::size_t(n_) * n_ * n_; }

    double node(int i) const { return (i - n_ / 2) * spacing(); }
    std::size_t index(int i1, int i2, int i3) const { return (std::size_t(i1) * n_ + i2) * n_ + i3; }
    std::array<int, 3> coords(std::size_t idx) const;
    Vec3 momentum(std::size_t idx) const;
    Vec3 momentum(const std::array<int, 3>& c) const { return {node(c[0]), node(c[1]), node(c[2])}; }

    bool operator==(const MomentumGrid& o) const { return n_ == o.n_ && extent_ == o.extent_; }

private:
    int n_;
    double extent_;
};

enum class InterpolationMethod { tricubic, fourier };

std::string to_string(InterpolationMethod m);
InterpolationMethod interpolation_from_string(const std::string& s);

/// Immutable sampled state. The outermost `margin` nodes on every side hold
/// exact zeros (discrete compact support).
class WavePacket {
public:
    WavePacket(MomentumGrid grid, double mass, std::vector<cplx> amplitudes, int margin = -1);

    const MomentumGrid& grid() const { return grid_; }
    double mass() const { return mass_; }
    int margin() const { return margin_; }
    std::span<const cplx> amplitudes() const { return amp_; }
    cplx amplitude(std::size_t idx) const { return amp_[idx]; }

    /// Flat indices of nodes with non-zero amplitude, ascending.
    const std::vector<std::size_t>& support() const { return support_; }

    bool interior(const std::array<int, 3>& c) const;

    /// FNV-1a over grid, mass and amplitude bytes.
    std::uint64_t checksum() const;

    WavePacket scaled(cplx factor) const;

private:
    MomentumGrid grid_;
    double mass_;
    int margin_;
    std::vector<cplx> amp_;
    std::vector<std::size_t> support_;
};

WavePacket operator+(const WavePacket& a, const WavePacket& b);
inline WavePacket operator*(cplx s, const WavePacket& a) { return a.scaled(s); }

enum class PacketKind { mollified_gaussian, mollified_gaussian_boosted, custom };

std::string to_string(PacketKind k);
PacketKind packet_kind_from_string(const std::string& s);

/// Gaussian exp(−|p−p₀|²/(2σ²)) times a C^∞ plateau window that equals 1 for
/// |p−p₀| ≤ core_radius and vanishes for |p−p₀| ≥ support_radius. The boosted
/// kind applies W(boost(axis, rapidity)) to that packet; `position` applies a
/// spatial translation afterwards.
struct PacketParams {
    PacketKind kind = PacketKind::mollified_gaussian;
    double sigma = 1.0;
    Vec3 center = Vec3::Zero();
    double support_radius = 1.6;
    double core_radius = 0.4;
    double rapidity = 0.0;
    Vec3 boost_axis = Vec3::UnitZ();
    Vec3 position = Vec3::Zero();
    cplx amplitude = 1.0;
    std::function<cplx(const Vec3&)> custom;  // custom kind only
};

/// C^∞ step: 1 on (−∞,0], 0 on [1,∞).
double smooth_step_down(double s);

WavePacket make_packet(const MomentumGrid& grid, double mass, const PacketParams& params,
                       int margin = -1, InterpolationMethod interp = InterpolationMethod::tricubic);

double norm_squared(const WavePacket& phi);

/// ⟨φ,ψ⟩ = h³ Σ conj(φ)ψ, conjugate-linear in the first argument.
cplx inner_product(const WavePacket& phi, const WavePacket& psi);

WavePacket apply_poincare(const PoincareElement& g, const WavePacket& phi,
                          InterpolationMethod interp = InterpolationMethod::tricubic);

/// True when Λ is a signed permutation of the spatial axes (exact on grids).
bool is_grid_rotation(const LorentzTransform& L);

}  // namespace achronal
