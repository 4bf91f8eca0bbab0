#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "achronal/currents.hpp"
#include "achronal/error.hpp"

#include <numbers>
#include <random>

using namespace achronal;

namespace {

const MomentumGrid grid48(48, 4.0);
const MomentumGrid grid16(16, 2.0);

WavePacket default_packet() {
    PacketParams pp;
    pp.center = Vec3(0.2, -0.1, 0.3);
    return make_packet(grid48, 1.0, pp);
}

WavePacket small_packet() {
    PacketParams pp;
    pp.sigma = 0.5;
    pp.support_radius = 0.7;
    pp.core_radius = 0.2;
    pp.center = Vec3(0.25, 0.0, -0.25);
    return make_packet(grid16, 1.0, pp);
}

std::vector<FourVector> random_points(int n, double spread, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-spread, spread);
    std::vector<FourVector> xs;
    for (int i = 0; i < n; ++i) xs.emplace_back(u(rng), u(rng), u(rng), u(rng));
    return xs;
}

double max_abs(const std::vector<CurrentSample>& s) {
    double m = 0.0;
    for (const auto& v : s) m = std::max(m, v.value.cwiseAbs().maxCoeff());
    return m;
}

double max_diff(const std::vector<CurrentSample>& a, const std::vector<CurrentSample>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, (a[i].value - b[i].value).cwiseAbs().maxCoeff());
    return m;
}

}  // namespace

TEST_CASE("zero packet gives zero current") {
    const WavePacket zero(grid16, 1.0, std::vector<cplx>(grid16.size()));
    const CurrentSpec spec(zero, CausalKernel{});
    CHECK(spec.size() == 0);
    const auto d = eval_direct(spec, FourVector(0.3, 0.1, 0.2, -0.4));
    CHECK(d.value.isZero());
    const auto fast = build_fast(spec);
    CHECK(fast.rank() == 0);
    CHECK(fast.eval(FourVector(0.3, 0.1, 0.2, -0.4)).value.isZero());
    const Slice s = slice_exact(spec, 0.0);
    for (const auto& J : s.J) {
        for (double v : J) CHECK(v == 0.0);
    }
}

TEST_CASE("two-node current by hand") {
    std::vector<cplx> amp(grid16.size());
    const std::size_t i1 = grid16.index(8, 8, 9), i2 = grid16.index(7, 9, 8);
    const cplx f1(0.7, 0.2), f2(-0.3, 0.5);
    amp[i1] = f1;
    amp[i2] = f2;
    const WavePacket phi(grid16, 1.0, amp);
    const CausalKernel kern{GFunction::basic(1.5)};
    const CurrentSpec spec(phi, kern);
    const FourVector x(0.4, -0.3, 1.1, 0.25);

    const Vec3 p1 = grid16.momentum(i1), p2 = grid16.momentum(i2);
    auto wave = [&](const Vec3& p, cplx f) {
        return f * std::exp(cplx(0, -(energy(p, 1.0) * x.t - p.dot(x.x))));
    };
    const cplx a1 = wave(p1, f1), a2 = wave(p2, f2);
    const double c = std::pow(grid16.spacing(), 6) / std::pow(2 * std::numbers::pi, 3);
    const Vec4 expect = c * (kernel_K(p1, p1, kern) * std::norm(a1) + kernel_K(p2, p2, kern) * std::norm(a2) +
                             2.0 * kernel_K(p1, p2, kern) * (std::conj(a1) * a2).real());
    const auto got = eval_direct(spec, x);
    for (int mu = 0; mu < 4; ++mu) CHECK(got.value[mu] == doctest::Approx(expect[mu]).epsilon(1e-13));
    CHECK(got.error < 1e-18);
    const Vec4 ps = PairSpectrum::compute(spec, x.t).eval(x.x);
    CHECK((ps - expect).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("current of a centred packet is parity symmetric") {
    const WavePacket phi = make_packet(grid16, 1.0, [] {
        PacketParams pp;
        pp.sigma = 0.5;
        pp.support_radius = 0.7;
        pp.core_radius = 0.2;
        return pp;
    }());
    const CurrentSpec spec(phi, CausalKernel{});
    const FourVector x(0.5, 0.7, -0.2, 0.4), y(0.5, -0.7, 0.2, -0.4);
    const Vec4 a = eval_direct(spec, x).value, b = eval_direct(spec, y).value;
    CHECK(a[0] == doctest::Approx(b[0]).epsilon(1e-12));
    for (int j = 1; j < 4; ++j) CHECK(a[j] == doctest::Approx(-b[j]).epsilon(1e-12));
}

TEST_CASE("slice normalization and refinement") {
    auto residual = [](int n) {
        const MomentumGrid g(n, 4.0);
        const WavePacket phi = make_packet(g, 1.0, PacketParams{});
        const Slice s = slice_exact(CurrentSpec(phi, CausalKernel{}), 0.0);
        double sum = 0.0;
        for (double v : s.J[0]) sum += v;
        return std::abs(sum * std::pow(s.grid.spacing, 3) / norm_squared(phi) - 1.0);
    };
    const double r48 = residual(48), r64 = residual(64);
    CHECK(r48 < 1e-4);
    CHECK(r64 < r48);
    const SpatialGrid w = window_grid(grid48, SliceOptions{});
    CHECK(w.n == std::array<int, 3>{32, 32, 32});
    CHECK(w.spacing == doctest::Approx(std::numbers::pi / 4.0).epsilon(1e-15));
}

TEST_CASE("fast backend matches the direct sum") {
    const WavePacket phi = default_packet();
    const auto xs = random_points(20, 2.0, 11);

    SUBCASE("causal kernel at truncation 1e-8") {
        const CurrentSpec spec(phi, CausalKernel{});
        const auto fast = build_fast(spec);
        CHECK(fast.residual() <= 1e-8);
        CHECK(fast.packet_checksum() == phi.checksum());
        const auto d = eval_direct(spec, xs);
        const auto f = fast.eval(xs);
        const double diff = max_diff(d, f);
        CHECK(diff <= 1e-6 * max_abs(d));
        CHECK(diff <= f[0].error);
    }
    SUBCASE("stress-energy kernel is exactly separable") {
        for (auto variant : {TensorVariant::standard, TensorVariant::as_printed}) {
            for (auto norm : {TensorNorm::raw, TensorNorm::energy_weighted}) {
                const FourVector n = LorentzTransform::boost_z(0.3)(FourVector(1, 0, 0, 0));
                const CurrentSpec spec(phi, TensorKernel::make(n, 1.0, variant, norm));
                const auto d = eval_direct(spec, xs);
                const auto f = build_fast(spec).eval(xs);
                CHECK(max_diff(d, f) <= 1e-12 * max_abs(d));
            }
        }
    }
}

TEST_CASE("full-rank factorization is exact") {
    const CurrentSpec spec(small_packet(), CausalKernel{GFunction::basic(2.5)});
    FastOptions opt;
    opt.full_rank = true;
    const auto fast = build_fast(spec, opt);
    CHECK(fast.rank() == int(spec.size()));
    const auto xs = random_points(10, 3.0, 5);
    const auto d = eval_direct(spec, xs);
    CHECK(max_diff(d, fast.eval(xs)) <= 1e-12 * max_abs(d));
}

TEST_CASE("indefinite profile falls back to an eigendecomposition") {
    const CurrentSpec spec(small_packet(), CausalKernel{GFunction::oscillatory(50.0)});
    const auto fast = build_fast(spec);
    CHECK(fast.indefinite());
    const auto xs = random_points(5, 2.0, 3);
    const auto d = eval_direct(spec, xs);
    CHECK(max_diff(d, fast.eval(xs)) <= 1e-6 * max_abs(d));
}

TEST_CASE("rank cap raises a factorization error") {
    const CurrentSpec spec(default_packet(), CausalKernel{});
    FastOptions opt;
    opt.max_rank = 10;
    try {
        (void)build_fast(spec, opt);
        FAIL("expected a factorization error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::factorization);
    }
}

TEST_CASE("kernel and packet masses must agree") {
    const WavePacket phi = make_packet(grid16, 1.5, PacketParams{.sigma = 0.5, .support_radius = 0.7, .core_radius = 0.2});
    CHECK_THROWS_AS(CurrentSpec(phi, CausalKernel{}), Error);
}

TEST_CASE("slice paths agree with pointwise evaluation") {
    const CurrentSpec spec(small_packet(), CausalKernel{});
    const PairSpectrum ps = PairSpectrum::compute(spec, 0.6);
    SliceOptions opt;
    opt.oversample = 2;
    const Slice s = ps.fft(opt);
    CHECK(s.grid.n[0] == 2 * 12);

    SpatialGrid g;
    g.n = {5, 4, 6};
    g.spacing = 0.37;
    g.origin = Vec3(-1.0, 0.3, -0.8);
    const Slice z = ps.on_grid(g);
    std::vector<FourVector> pts;
    for (std::size_t i = 0; i < g.size(); ++i) pts.emplace_back(0.6, g.node(i));
    const auto d = eval_direct(spec, pts);
    double scale = max_abs(d), err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, (z.at(i) - d[i].value).cwiseAbs().maxCoeff());
    CHECK(err <= 1e-12 * scale);

    err = 0.0;
    for (std::size_t i = 0; i < s.grid.size(); i += 37) {
        err = std::max(err, (s.at(i) - eval_direct(spec, FourVector(0.6, s.grid.node(i))).value).cwiseAbs().maxCoeff());
    }
    CHECK(err <= 1e-12 * scale);

    FastOptions full;
    full.full_rank = true;
    const Slice sep = slice_separable(build_fast(spec, full), 0.6, opt);
    err = 0.0;
    for (std::size_t i = 0; i < s.grid.size(); ++i) err = std::max(err, (sep.at(i) - s.at(i)).cwiseAbs().maxCoeff());
    CHECK(err <= 1e-12 * scale);

    const CurrentSpec tspec(small_packet(), TensorKernel::make(FourVector(1, 0, 0, 0)));
    const Slice te = slice_exact(tspec, 0.6, opt), ts = slice_separable(build_fast(tspec), 0.6, opt);
    err = 0.0;
    for (std::size_t i = 0; i < te.grid.size(); ++i) err = std::max(err, (te.at(i) - ts.at(i)).cwiseAbs().maxCoeff());
    CHECK(err <= 1e-12 * scale);
}

TEST_CASE("spectral contraction reproduces point values") {
    const CurrentSpec spec(small_packet(), CausalKernel{});
    const PairSpectrum ps = PairSpectrum::compute(spec, 0.2);
    const Vec3 x(0.3, -0.5, 0.9);
    const Vec4 viaw = ps.contract([&](const Vec3& q) { return std::exp(cplx(0, -q.dot(x))); });
    CHECK((viaw - ps.eval(x)).cwiseAbs().maxCoeff() < 1e-16);
}

TEST_CASE("continuity residual is fourth order") {
    const CurrentSpec spec(default_packet(), CausalKernel{});
    const auto J = fast_evaluator(build_fast(spec));
    const auto xs = random_points(4, 0.5, 17);
    for (const auto& x : xs) {
        const auto a = check_continuity(J, x, 0.1), b = check_continuity(J, x, 0.05);
        CHECK(a.residual / b.residual == doctest::Approx(16.0).epsilon(0.3));
    }
}

TEST_CASE("causal positivity on exact slices") {
    const CurrentSpec spec(default_packet(), CausalKernel{});
    for (double t : {0.0, 1.0}) {
        const CausalScan c = scan_causal(slice_exact(spec, t));
        CHECK(c.min_margin >= -1e-9 * c.max_j0);
    }
    const auto s = eval_direct(spec, FourVector(0.2, 0.1, 0.0, -0.1));
    CHECK(check_causal_pointwise(s) > 0.0);
}

TEST_CASE("oscillatory profile violates positivity") {
    const CurrentSpec spec(default_packet(), CausalKernel{GFunction::oscillatory(50.0)});
    const CausalScan c = scan_causal(slice_exact(spec, 0.0));
    CHECK(c.min_margin < -1e-6 * c.max_j0);
}

TEST_CASE("current decays faster than a cubic") {
    const CurrentSpec spec(default_packet(), CausalKernel{});
    const DecayFit fit = decay_scan(spec, 0.0);
    CHECK(fit.samples >= 3);
    CHECK(fit.exponent >= 3.0);
    CHECK(fit.width > 0.0);

    const std::vector<double> radii{1e3, 2e3};  // past the spatial period
    CHECK_THROWS_AS(decay_scan(spec, 0.0, radii), Error);
    const std::vector<double> inside{0.1};
    CHECK_THROWS_AS(decay_scan(spec, 1.0, inside), Error);
}

TEST_CASE("backend names") {
    CHECK(backend_from_string(to_string(Backend::fast)) == Backend::fast);
    CHECK(backend_from_string("direct") == Backend::direct);
    CHECK_THROWS_AS(backend_from_string("gpu"), Error);
}
