#include "achronal/wavepacket.hpp"

#include "achronal/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <sstream>

namespace achronal {

MomentumGrid::MomentumGrid(int points_per_axis, double extent) : n_(points_per_axis), extent_(extent) {
    if (n_ < 8 || n_ % 2 != 0) {
        throw Error(ErrorKind::invalid_argument, "momentum grid needs an even number of points per axis >= 8");
    }
    if (!(extent_ > 0.0) || !std::isfinite(extent_)) {
        throw Error(ErrorKind::invalid_argument, "momentum grid extent must be positive");
    }
}

std::array<int, 3> MomentumGrid::coords(std::size_t idx) const {
    const int i3 = int(idx % n_);
    idx /= n_;
    const int i2 = int(idx % n_);
    const int i1 = int(idx / n_);
    return {i1, i2, i3};
}

Vec3 MomentumGrid::momentum(std::size_t idx) const { return momentum(coords(idx)); }

std::string to_string(InterpolationMethod m) {
    return m == InterpolationMethod::tricubic ? "tricubic" : "fourier";
}

InterpolationMethod interpolation_from_string(const std::string& s) {
    if (s == "tricubic") return InterpolationMethod::tricubic;
    if (s == "fourier") return InterpolationMethod::fourier;
    throw Error(ErrorKind::config, "unknown interpolation method '" + s + "'");
}

WavePacket::WavePacket(MomentumGrid grid, double mass, std::vector<cplx> amplitudes, int margin)
    : grid_(grid), mass_(mass), margin_(margin < 0 ? grid.n() / 8 : margin), amp_(std::move(amplitudes)) {
    if (!(mass_ > 0.0) || !std::isfinite(mass_)) throw Error(ErrorKind::invalid_argument, "mass must be positive");
    if (amp_.size() != grid_.size()) throw Error(ErrorKind::invalid_argument, "amplitude array does not match grid");
    if (2 * margin_ >= grid_.n()) throw Error(ErrorKind::invalid_argument, "margin leaves no interior");
    for (std::size_t i = 0; i < amp_.size(); ++i) {
        const cplx a = amp_[i];
        if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) {
            throw Error(ErrorKind::invalid_argument, "non-finite amplitude");
        }
        if (a == cplx{}) continue;
        if (!interior(grid_.coords(i))) {
            std::ostringstream os;
            os << "packet support touches the grid margin at p = " << grid_.momentum(i).transpose();
            throw Error(ErrorKind::support, os.str());
        }
        support_.push_back(i);
    }
}

bool WavePacket::interior(const std::array<int, 3>& c) const {
    const int lo = margin_;
    const int hi = grid_.n() - margin_;
    return c[0] >= lo && c[0] < hi && c[1] >= lo && c[1] < hi && c[2] >= lo && c[2] < hi;
}

std::uint64_t WavePacket::checksum() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* data, std::size_t len) {
        auto* b = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    };
    const int n = grid_.n();
    const double P = grid_.extent();
    mix(&n, sizeof n);
    mix(&P, sizeof P);
    mix(&mass_, sizeof mass_);
    mix(amp_.data(), amp_.size() * sizeof(cplx));
    return h;
}

WavePacket WavePacket::scaled(cplx factor) const {
    std::vector<cplx> a(amp_);
    for (auto& v : a) v *= factor;
    return WavePacket(grid_, mass_, std::move(a), margin_);
}

WavePacket operator+(const WavePacket& a, const WavePacket& b) {
    if (!(a.grid() == b.grid()) || a.mass() != b.mass()) {
        throw Error(ErrorKind::grid_mismatch, "cannot add packets on different grids or masses");
    }
    std::vector<cplx> s(a.amplitudes().begin(), a.amplitudes().end());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] += b.amplitude(i);
    return WavePacket(a.grid(), a.mass(), std::move(s), std::min(a.margin(), b.margin()));
}

std::string to_string(PacketKind k) {
    switch (k) {
        case PacketKind::mollified_gaussian: return "mollified_gaussian";
        case PacketKind::mollified_gaussian_boosted: return "mollified_gaussian_boosted";
        case PacketKind::custom: return "custom";
    }
    return "unknown";
}

PacketKind packet_kind_from_string(const std::string& s) {
    if (s == "mollified_gaussian") return PacketKind::mollified_gaussian;
    if (s == "mollified_gaussian_boosted") return PacketKind::mollified_gaussian_boosted;
    if (s == "custom") return PacketKind::custom;
    throw Error(ErrorKind::config, "unknown packet kind '" + s + "'");
}

double smooth_step_down(double s) {
    if (s <= 0.0) return 1.0;
    if (s >= 1.0) return 0.0;
    const double a = std::exp(-1.0 / (1.0 - s));
    const double b = std::exp(-1.0 / s);
    return a / (a + b);
}

double norm_squared(const WavePacket& phi) {
    double s = 0.0;
    for (std::size_t i : phi.support()) s += std::norm(phi.amplitude(i));
    return s * phi.grid().cell_volume();
}

cplx inner_product(const WavePacket& phi, const WavePacket& psi) {
    if (!(phi.grid() == psi.grid()) || phi.mass() != psi.mass()) {
        throw Error(ErrorKind::grid_mismatch, "inner product of packets on different grids or masses");
    }
    cplx s{};
    for (std::size_t i : phi.support()) s += std::conj(phi.amplitude(i)) * psi.amplitude(i);
    return s * phi.grid().cell_volume();
}

bool is_grid_rotation(const LorentzTransform& L) {
    const Mat4& m = L.matrix();
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            const double r = std::round(m(i, j));
            if (std::abs(m(i, j) - r) > 1e-12 || std::abs(r) > 1.0) return false;
        }
    }
    return std::round(m(0, 0)) == 1.0;
}

namespace {

// Evaluates the sampled amplitude at off-grid momenta.
class Resampler {
public:
    Resampler(const WavePacket& phi, InterpolationMethod method) : phi_(phi), method_(method) {
        const int n = phi.grid().n();
        lo_ = {n, n, n};
        hi_ = {-1, -1, -1};
        for (std::size_t i : phi.support()) {
            const auto c = phi.grid().coords(i);
            for (int a = 0; a < 3; ++a) {
                lo_[a] = std::min(lo_[a], c[a]);
                hi_[a] = std::max(hi_[a], c[a]);
            }
        }
    }

    // Zero when every corner of the enclosing cell is outside the support.
    cplx operator()(const Vec3& q) const {
        if (phi_.support().empty()) return {};
        const auto& g = phi_.grid();
        const double h = g.spacing();
        const int n = g.n();
        std::array<double, 3> u{};
        std::array<int, 3> base{};
        for (int a = 0; a < 3; ++a) {
            u[a] = q[a] / h + n / 2;
            base[a] = int(std::floor(u[a]));
            if (base[a] + 1 < lo_[a] || base[a] > hi_[a]) return {};
        }
        bool touches = false;
        for (int d = 0; d < 8 && !touches; ++d) {
            const std::array<int, 3> c{base[0] + (d & 1), base[1] + ((d >> 1) & 1), base[2] + ((d >> 2) & 1)};
            touches = at(c) != cplx{};
        }
        if (!touches) return {};
        return method_ == InterpolationMethod::tricubic ? tricubic(u, base) : fourier(u);
    }

private:
    cplx at(const std::array<int, 3>& c) const {
        const int n = phi_.grid().n();
        for (int a = 0; a < 3; ++a) {
            if (c[a] < 0 || c[a] >= n) return {};
        }
        return phi_.amplitude(phi_.grid().index(c[0], c[1], c[2]));
    }

    static std::array<double, 4> cubic_weights(double t) {
        return {-t * (t - 1.0) * (t - 2.0) / 6.0, (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
                -(t + 1.0) * t * (t - 2.0) / 2.0, (t + 1.0) * t * (t - 1.0) / 6.0};
    }

    cplx tricubic(const std::array<double, 3>& u, const std::array<int, 3>& base) const {
        std::array<std::array<double, 4>, 3> w;
        for (int a = 0; a < 3; ++a) w[a] = cubic_weights(u[a] - base[a]);
        cplx s{};
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                cplx row{};
                for (int k = 0; k < 4; ++k) {
                    row += w[2][k] * at({base[0] + i - 1, base[1] + j - 1, base[2] + k - 1});
                }
                s += w[0][i] * w[1][j] * row;
            }
        }
        return s;
    }

    // Periodic trigonometric interpolant (Dirichlet kernel for even n), summed
    // over the support bounding box only.
    cplx fourier(const std::array<double, 3>& u) const {
        const int n = phi_.grid().n();
        std::array<std::vector<double>, 3> w;
        for (int a = 0; a < 3; ++a) {
            w[a].resize(hi_[a] - lo_[a] + 1);
            for (int j = lo_[a]; j <= hi_[a]; ++j) {
                const double d = u[a] - j;
                const double x = std::numbers::pi * d / n;
                const double s = std::sin(std::numbers::pi * d);
                w[a][j - lo_[a]] = std::abs(d) < 1e-14 ? 1.0 : s / (n * std::tan(x));
            }
        }
        cplx s{};
        for (int i = lo_[0]; i <= hi_[0]; ++i) {
            cplx plane{};
            for (int j = lo_[1]; j <= hi_[1]; ++j) {
                cplx row{};
                const std::size_t off = phi_.grid().index(i, j, 0);
                for (int k = lo_[2]; k <= hi_[2]; ++k) row += w[2][k - lo_[2]] * phi_.amplitude(off + k);
                plane += w[1][j - lo_[1]] * row;
            }
            s += w[0][i - lo_[0]] * plane;
        }
        return s;
    }

    const WavePacket& phi_;
    InterpolationMethod method_;
    std::array<int, 3> lo_, hi_;
};

Vec3 spatial(const FourVector& v) { return v.x; }

}  // namespace

WavePacket apply_poincare(const PoincareElement& g, const WavePacket& phi, InterpolationMethod interp) {
    const MomentumGrid& grid = phi.grid();
    const double m = phi.mass();
    const int n = grid.n();
    std::vector<cplx> out(grid.size(), cplx{});

    auto phase = [&](const Vec3& p, double eps) {
        const double arg = g.a.t * eps - g.a.x.dot(p);
        return cplx(std::cos(arg), std::sin(arg));
    };

    if (g.L.is_identity()) {
        for (std::size_t i : phi.support()) {
            const Vec3 p = grid.momentum(i);
            out[i] = phase(p, energy(p, m)) * phi.amplitude(i);
        }
        return WavePacket(grid, m, std::move(out), phi.margin());
    }

    const LorentzTransform inv = g.L.inverse();

    if (is_grid_rotation(g.L)) {
        // q = R⁻¹p maps nodes to nodes; ε(q) = ε(p).
        Eigen::Matrix3i r = g.L.matrix().block<3, 3>(1, 1).array().round().cast<int>();
        for (std::size_t i : phi.support()) {
            const auto c = grid.coords(i);
            const Eigen::Vector3i src(c[0] - n / 2, c[1] - n / 2, c[2] - n / 2);
            const Eigen::Vector3i dst = r * src;
            const std::array<int, 3> d{dst[0] + n / 2, dst[1] + n / 2, dst[2] + n / 2};
            if (!phi.interior(d)) {
                throw Error(ErrorKind::support, "rotated support leaves the grid interior");
            }
            const std::size_t j = grid.index(d[0], d[1], d[2]);
            const Vec3 p = grid.momentum(j);
            out[j] = phase(p, energy(p, m)) * phi.amplitude(i);
        }
        return WavePacket(grid, m, std::move(out), phi.margin());
    }

    // Forward image of the support must stay one node inside the interior so
    // the interpolated result vanishes on the margin.
    const double h = grid.spacing();
    const double lo = grid.node(phi.margin() + 1) - 1e-12;
    const double hi = grid.node(n - phi.margin() - 2) + 1e-12;
    for (std::size_t i : phi.support()) {
        const Vec3 q = grid.momentum(i);
        const Vec3 p = spatial(g.L(on_shell(q, m)));
        if ((p.array() < lo).any() || (p.array() > hi).any()) {
            std::ostringstream os;
            os << "transformed support leaves the grid interior (node " << q.transpose() << " -> "
               << p.transpose() << ", interior [" << lo << ", " << hi << "], h = " << h << ")";
            throw Error(ErrorKind::support, os.str());
        }
    }

    const Resampler sample(phi, interp);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto c = grid.coords(i);
        if (!phi.interior(c)) continue;
        const Vec3 p = grid.momentum(c);
        const double eps_p = energy(p, m);
        const Vec3 q = spatial(inv(FourVector(eps_p, p)));
        const cplx v = sample(q);
        if (v == cplx{}) continue;
        out[i] = std::sqrt(energy(q, m) / eps_p) * phase(p, eps_p) * v;
    }
    return WavePacket(grid, m, std::move(out), phi.margin());
}

WavePacket make_packet(const MomentumGrid& grid, double mass, const PacketParams& params, int margin,
                       InterpolationMethod interp) {
    std::vector<cplx> amp(grid.size(), cplx{});
    const int marg = margin < 0 ? grid.n() / 8 : margin;
    auto interior = [&](const std::array<int, 3>& c) {
        const int lo = marg, hi = grid.n() - marg;
        return c[0] >= lo && c[0] < hi && c[1] >= lo && c[1] < hi && c[2] >= lo && c[2] < hi;
    };

    if (params.kind == PacketKind::custom) {
        if (!params.custom) throw Error(ErrorKind::invalid_argument, "custom packet needs an amplitude function");
        for (std::size_t i = 0; i < grid.size(); ++i) amp[i] = params.custom(grid.momentum(i));
    } else {
        if (!(params.sigma > 0.0)) throw Error(ErrorKind::invalid_argument, "sigma must be positive");
        if (!(params.support_radius > params.core_radius) || params.core_radius < 0.0) {
            throw Error(ErrorKind::invalid_argument, "need 0 <= core_radius < support_radius");
        }
        const double width = params.support_radius - params.core_radius;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const Vec3 d = grid.momentum(i) - params.center;
            const double r = d.norm();
            if (r >= params.support_radius) continue;
            const double window = smooth_step_down((r - params.core_radius) / width);
            const double v = std::exp(-r * r / (2.0 * params.sigma * params.sigma)) * window;
            if (v == 0.0) continue;
            if (!interior(grid.coords(i))) {
                throw Error(ErrorKind::support, "packet window touches the grid margin");
            }
            amp[i] = params.amplitude * v;
        }
    }
    WavePacket phi(grid, mass, std::move(amp), marg);

    if (params.kind == PacketKind::mollified_gaussian_boosted && params.rapidity != 0.0) {
        phi = apply_poincare(PoincareElement::lorentz(LorentzTransform::boost(params.boost_axis, params.rapidity)),
                             phi, interp);
    }
    if (params.position != Vec3::Zero()) {
        phi = apply_poincare(PoincareElement::translation(FourVector(0.0, params.position)), phi, interp);
    }
    return phi;
}

}  // namespace achronal
