#include "achronal/currents.hpp"

#include "achronal/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <numbers>

namespace achronal {

namespace {

int default_window(int n) {
    int w = (2 * n + 2) / 3;
    return w + (w % 2);
}

struct FftwReal {
    double* p;
    explicit FftwReal(std::size_t n) : p(fftw_alloc_real(n)) {
        if (!p) throw Error(ErrorKind::io, "FFTW allocation failed");
    }
    ~FftwReal() { fftw_free(p); }
    FftwReal(const FftwReal&) = delete;
    FftwReal& operator=(const FftwReal&) = delete;
};

struct FftwComplex {
    fftw_complex* p;
    explicit FftwComplex(std::size_t n) : p(fftw_alloc_complex(n)) {
        if (!p) throw Error(ErrorKind::io, "FFTW allocation failed");
    }
    ~FftwComplex() { fftw_free(p); }
    FftwComplex(const FftwComplex&) = delete;
    FftwComplex& operator=(const FftwComplex&) = delete;
};

int wrap(int d, int s) { return ((d % s) + s) % s; }

}  // namespace

Vec3 SpatialGrid::node(std::size_t idx) const {
    const std::size_t plane = std::size_t(n[1]) * n[2];
    return node(int(idx / plane), int((idx / n[2]) % n[1]), int(idx % n[2]));
}

SpatialGrid window_grid(const MomentumGrid& grid, const SliceOptions& opt) {
    if (opt.oversample < 1) throw Error(ErrorKind::invalid_argument, "oversample must be >= 1");
    const int w = opt.window_nodes > 0 ? opt.window_nodes : default_window(grid.n());
    if (w > grid.n() || w % 2 != 0) {
        throw Error(ErrorKind::invalid_argument, "window must be an even number of nodes not exceeding N");
    }
    SpatialGrid g;
    const int m = opt.oversample * w;
    g.n = {m, m, m};
    g.spacing = std::numbers::pi / (opt.oversample * grid.extent());
    g.origin = Vec3::Constant(-0.5 * m * g.spacing);
    return g;
}

PairSpectrum PairSpectrum::compute(const CurrentSpec& spec, double x0) {
    PairSpectrum ps;
    ps.x0_ = x0;
    ps.h_ = spec.packet().grid().spacing();
    ps.pref_ = spec.prefactor();
    ps.n_ = spec.packet().grid().n();
    const auto& idx = spec.coords();
    const std::size_t S = spec.size();
    if (S == 0) {
        ps.dims_ = {1, 1, 1};
        ps.F_.assign(1, {cplx{}, cplx{}, cplx{}, cplx{}});
        return ps;
    }
    std::array<int, 3> lo = idx[0], hi = idx[0];
    for (const auto& c : idx) {
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], c[a]);
            hi[a] = std::max(hi[a], c[a]);
        }
    }
    for (int a = 0; a < 3; ++a) {
        ps.D_[a] = hi[a] - lo[a];
        ps.dims_[a] = 2 * ps.D_[a] + 1;
    }
    const long s1 = ps.dims_[2], s0 = long(ps.dims_[1]) * ps.dims_[2];
    ps.F_.assign(std::size_t(s0) * ps.dims_[0], {cplx{}, cplx{}, cplx{}, cplx{}});
    const long center = ps.D_[0] * s0 + ps.D_[1] * s1 + ps.D_[2];

    std::vector<cplx> psi(S);
    std::vector<long> lin(S);
    for (std::size_t b = 0; b < S; ++b) {
        psi[b] = spec.values()[b] * std::polar(1.0, -spec.energies()[b] * x0);
        lin[b] = idx[b][0] * s0 + idx[b][1] * s1 + idx[b][2];
    }
    std::vector<double> k0(S), k1(S), k2(S), k3(S);
    for (std::size_t a = 0; a < S; ++a) {
        // pairs b ≤ a; the mirrored pair contributes the conjugate at −d
        spec.kernel_row(a, a + 1, k0.data(), k1.data(), k2.data(), k3.data());
        const cplx ca = std::conj(psi[a]);
        for (std::size_t b = 0; b <= a; ++b) {
            const cplx v = ca * psi[b];
            auto& f = ps.F_[std::size_t(center + lin[a] - lin[b])];
            f[0] += k0[b] * v;
            f[1] += k1[b] * v;
            f[2] += k2[b] * v;
            f[3] += k3[b] * v;
            if (b != a) {
                const cplx w = std::conj(v);
                auto& g = ps.F_[std::size_t(center - lin[a] + lin[b])];
                g[0] += k0[b] * w;
                g[1] += k1[b] * w;
                g[2] += k2[b] * w;
                g[3] += k3[b] * w;
            }
        }
    }
    return ps;
}

Vec4 PairSpectrum::eval(const Vec3& x) const {
    std::array<std::vector<cplx>, 3> e;
    for (int a = 0; a < 3; ++a) {
        e[a].resize(dims_[a]);
        for (int d = -D_[a]; d <= D_[a]; ++d) e[a][d + D_[a]] = std::polar(1.0, -h_ * d * x[a]);
    }
    std::array<cplx, 4> acc{};
    std::size_t i = 0;
    for (int a = 0; a < dims_[0]; ++a) {
        for (int b = 0; b < dims_[1]; ++b) {
            const cplx eab = e[0][a] * e[1][b];
            std::array<cplx, 4> row{};
            for (int c = 0; c < dims_[2]; ++c, ++i) {
                for (int mu = 0; mu < 4; ++mu) row[mu] += F_[i][mu] * e[2][c];
            }
            for (int mu = 0; mu < 4; ++mu) acc[mu] += eab * row[mu];
        }
    }
    return pref_ * Vec4(acc[0].real(), acc[1].real(), acc[2].real(), acc[3].real());
}

Slice PairSpectrum::on_grid(const SpatialGrid& g) const {
    Slice out;
    out.x0 = x0_;
    out.grid = g;
    for (auto& v : out.J) v.assign(g.size(), 0.0);
    const int n0 = g.n[0], n1 = g.n[1], n2 = g.n[2];
    const int d0 = dims_[0], d1 = dims_[1], d2 = dims_[2];
    auto phase = [&](int axis, int count) {
        std::vector<cplx> e(std::size_t(count) * dims_[axis]);
        for (int i = 0; i < count; ++i) {
            const double x = g.axis(axis, i);
            for (int d = -D_[axis]; d <= D_[axis]; ++d) e[std::size_t(i) * dims_[axis] + d + D_[axis]] = std::polar(1.0, -h_ * d * x);
        }
        return e;
    };
    const auto e0 = phase(0, n0), e1 = phase(1, n1), e2 = phase(2, n2);

    using C4 = std::array<cplx, 4>;
    // contract axis 0: T1[i0][d1][d2]
    std::vector<C4> T1(std::size_t(n0) * d1 * d2, C4{});
    for (int i0 = 0; i0 < n0; ++i0) {
        C4* t = &T1[std::size_t(i0) * d1 * d2];
        for (int a = 0; a < d0; ++a) {
            const cplx e = e0[std::size_t(i0) * d0 + a];
            const C4* f = &F_[std::size_t(a) * d1 * d2];
            for (int r = 0; r < d1 * d2; ++r) {
                for (int mu = 0; mu < 4; ++mu) t[r][mu] += e * f[r][mu];
            }
        }
    }
    // contract axis 1: T2[i0][i1][d2]
    std::vector<C4> T2(std::size_t(n0) * n1 * d2, C4{});
    for (int i0 = 0; i0 < n0; ++i0) {
        for (int i1 = 0; i1 < n1; ++i1) {
            C4* t = &T2[(std::size_t(i0) * n1 + i1) * d2];
            for (int b = 0; b < d1; ++b) {
                const cplx e = e1[std::size_t(i1) * d1 + b];
                const C4* s = &T1[(std::size_t(i0) * d1 + b) * d2];
                for (int c = 0; c < d2; ++c) {
                    for (int mu = 0; mu < 4; ++mu) t[c][mu] += e * s[c][mu];
                }
            }
        }
    }
    // contract axis 2
    for (std::size_t r = 0; r < std::size_t(n0) * n1; ++r) {
        const C4* s = &T2[r * d2];
        for (int i2 = 0; i2 < n2; ++i2) {
            const cplx* e = &e2[std::size_t(i2) * d2];
            double acc[4] = {0, 0, 0, 0};
            for (int c = 0; c < d2; ++c) {
                for (int mu = 0; mu < 4; ++mu) acc[mu] += (e[c] * s[c][mu]).real();
            }
            for (int mu = 0; mu < 4; ++mu) out.J[mu][r * n2 + i2] = pref_ * acc[mu];
        }
    }
    return out;
}

Slice PairSpectrum::fft(const SliceOptions& opt) const {
    const MomentumGrid mg(n_, 0.5 * n_ * h_);
    Slice out;
    out.x0 = x0_;
    out.grid = window_grid(mg, opt);
    const int S = opt.oversample * n_;
    const int half = S / 2 + 1;
    const std::size_t ncplx = std::size_t(S) * S * half, nreal = std::size_t(S) * S * S;
    FftwComplex in(ncplx);
    FftwReal res(nreal);
    fftw_plan plan = fftw_plan_dft_c2r_3d(S, S, S, in.p, res.p, FFTW_ESTIMATE);
    const int m = out.grid.n[0];
    const int l0 = S / 2 - m / 2;
    for (int mu = 0; mu < 4; ++mu) {
        std::fill(in.p[0], in.p[0] + 2 * ncplx, 0.0);
        std::size_t i = 0;
        for (int a = -D_[0]; a <= D_[0]; ++a) {
            for (int b = -D_[1]; b <= D_[1]; ++b) {
                for (int c = -D_[2]; c <= D_[2]; ++c, ++i) {
                    const int w3 = wrap(c, S);
                    if (w3 > S / 2) continue;
                    // X = conj(F·(−1)^d) so that the +i transform yields Σ F(−1)^d e^{−2πi d·l/S}
                    cplx v = std::conj(F_[i][mu]);
                    if ((a + b + c) & 1) v = -v;
                    const std::size_t k = (std::size_t(wrap(a, S)) * S + wrap(b, S)) * half + w3;
                    in.p[k][0] += v.real();
                    in.p[k][1] += v.imag();
                }
            }
        }
        fftw_execute(plan);
        auto& J = out.J[mu];
        J.resize(out.grid.size());
        std::size_t o = 0;
        for (int x = 0; x < m; ++x) {
            for (int y = 0; y < m; ++y) {
                const double* row = res.p + (std::size_t(l0 + x) * S + (l0 + y)) * S + l0;
                for (int z = 0; z < m; ++z) J[o++] = pref_ * row[z];
            }
        }
    }
    fftw_destroy_plan(plan);
    return out;
}

Vec4 PairSpectrum::contract(const std::function<cplx(const Vec3&)>& w) const {
    std::array<cplx, 4> acc{};
    std::size_t i = 0;
    for (int a = -D_[0]; a <= D_[0]; ++a) {
        for (int b = -D_[1]; b <= D_[1]; ++b) {
            for (int c = -D_[2]; c <= D_[2]; ++c, ++i) {
                const cplx wq = w(h_ * Vec3(a, b, c));
                for (int mu = 0; mu < 4; ++mu) acc[mu] += F_[i][mu] * wq;
            }
        }
    }
    return pref_ * Vec4(acc[0].real(), acc[1].real(), acc[2].real(), acc[3].real());
}

Slice slice_exact(const CurrentSpec& spec, double x0, const SliceOptions& opt) {
    return PairSpectrum::compute(spec, x0).fft(opt);
}

Slice slice_separable(const FastCurrent& fast, double x0, const SliceOptions& opt) {
    const CurrentSpec& spec = fast.spec();
    const MomentumGrid& mg = spec.packet().grid();
    Slice out;
    out.x0 = x0;
    out.grid = window_grid(mg, opt);
    for (auto& v : out.J) v.assign(out.grid.size(), 0.0);
    const int N = mg.n(), S = opt.oversample * N, m = out.grid.n[0], l0 = S / 2 - m / 2;
    const std::size_t total = std::size_t(S) * S * S, W = out.grid.size();
    FftwComplex buf(total);
    fftw_plan plan = fftw_plan_dft_3d(S, S, S, buf.p, buf.p, FFTW_BACKWARD, FFTW_ESTIMATE);

    std::vector<cplx> psi(spec.size());
    std::vector<std::size_t> slot(spec.size());
    for (std::size_t b = 0; b < spec.size(); ++b) {
        const auto& c = spec.coords()[b];
        const int i1 = c[0] - N / 2, i2 = c[1] - N / 2, i3 = c[2] - N / 2;
        // lattice origin shift contributes (−1)^{i'}
        psi[b] = spec.values()[b] * std::polar(1.0, -spec.energies()[b] * x0) * (((i1 + i2 + i3) & 1) ? -1.0 : 1.0);
        slot[b] = (std::size_t(wrap(i1, S)) * S + wrap(i2, S)) * S + wrap(i3, S);
    }
    const Eigen::MatrixXd& F = fast.fields();
    const int nf = int(F.cols());
    constexpr int group = 5;
    std::vector<std::vector<cplx>> vals(group, std::vector<cplx>(W));
    std::array<cplx, group> A{};
    for (int g0 = 0; g0 < nf; g0 += group) {
        for (int f = 0; f < group; ++f) {
            std::fill(buf.p[0], buf.p[0] + 2 * total, 0.0);
            for (std::size_t b = 0; b < spec.size(); ++b) {
                const cplx v = F(Eigen::Index(b), g0 + f) * psi[b];
                buf.p[slot[b]][0] = v.real();
                buf.p[slot[b]][1] = v.imag();
            }
            fftw_execute(plan);
            std::size_t o = 0;
            for (int x = 0; x < m; ++x) {
                for (int y = 0; y < m; ++y) {
                    const std::size_t base = (std::size_t(l0 + x) * S + (l0 + y)) * S + l0;
                    for (int z = 0; z < m; ++z, ++o) vals[f][o] = cplx(buf.p[base + z][0], buf.p[base + z][1]);
                }
            }
        }
        if (nf == group && fast.terms().empty()) {
            for (std::size_t o = 0; o < W; ++o) {
                for (int f = 0; f < group; ++f) A[f] = vals[f][o];
                const Vec4 J = fast.combine(A);
                for (int mu = 0; mu < 4; ++mu) out.J[mu][o] += spec.prefactor() * J[mu];
            }
            continue;
        }
        for (const auto& t : fast.terms()) {
            if (t.a < g0 || t.a >= g0 + group || t.b < g0 || t.b >= g0 + group) continue;
            const auto& va = vals[t.a - g0];
            const auto& vb = vals[t.b - g0];
            for (std::size_t o = 0; o < W; ++o) {
                const double r = spec.prefactor() * (std::conj(va[o]) * vb[o]).real();
                for (int mu = 0; mu < 4; ++mu) out.J[mu][o] += t.coeff[mu] * r;
            }
        }
    }
    fftw_destroy_plan(plan);
    return out;
}

}  // namespace achronal
