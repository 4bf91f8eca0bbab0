#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "achronal/error.hpp"
#include "achronal/localization.hpp"

#include <random>

using namespace achronal;

namespace {

const MomentumGrid grid48(48, 4.0);

const WavePacket& packet() {
    static const WavePacket phi = make_packet(grid48, 1.0, PacketParams{});
    return phi;
}

const WavePacket& other_packet() {
    static const WavePacket psi = [] {
        PacketParams pp;
        pp.center = Vec3(0.2, 0.1, -0.1);
        pp.sigma = 0.8;
        pp.position = Vec3(0.5, 0, 0);
        pp.amplitude = cplx(0.6, 0.8);
        return make_packet(grid48, 1.0, pp);
    }();
    return psi;
}

const CurrentSpec& spec() {
    static const CurrentSpec s(packet(), CausalKernel{});
    return s;
}

}  // namespace

TEST_CASE("mask primitives") {
    const Mask b = Mask::ball(Vec3(1, 0, 0), 2);
    CHECK(b.contains(Vec3(2.5, 0, 0)));
    CHECK_FALSE(b.contains(Vec3(3.5, 0, 0)));
    CHECK(b.sd(Vec3(4, 0, 0)) == doctest::Approx(1.0));
    CHECK(b.bounds()->min() == Vec3(-1, -2, -2));

    const Mask bx = Mask::box(Vec3(-1, -1, -1), Vec3(1, 2, 1));
    CHECK(bx.sd(Vec3(0, 0, 0)) == doctest::Approx(-1.0));
    CHECK(bx.sd(Vec3(2, 3, 0)) == doctest::Approx(std::sqrt(2.0)));

    const Mask h = Mask::half_space(Vec3(0, 0, 2), 1);
    CHECK(h.contains(Vec3(0, 0, 0.6)));
    CHECK_FALSE(h.contains(Vec3(0, 0, 0.4)));
    CHECK(h.sd(Vec3(0, 0, 0)) == doctest::Approx(0.5));
    CHECK_FALSE(h.bounds().has_value());

    const Mask c = h.complement();
    for (const Vec3& x : {Vec3(0, 0, 0.5), Vec3(1, 2, 0.7), Vec3(0, 0, 0.2)}) CHECK(c.contains(x) != h.contains(x));
    CHECK(Mask::full().complement().bounds()->isEmpty());

    const Mask u = Mask::unite(b, bx), in = Mask::intersect(b, h);
    CHECK(u.contains(Vec3(0, 1.9, 0)));
    CHECK(in.contains(Vec3(1, 0, 1)));
    CHECK_FALSE(in.contains(Vec3(1, 0, 0)));
    CHECK(in.bounds().has_value());
    CHECK(Mask::full().contains(Vec3(1e9, 0, 0)));
    CHECK_FALSE(Mask::empty().contains(Vec3::Zero()));

    CHECK_THROWS_AS(Mask::ball(Vec3::Zero(), -1), Error);
    CHECK_THROWS_AS(Mask::half_space(Vec3::Zero(), 0), Error);
}

TEST_CASE("pullback and shadow masks") {
    const AchronalSurface flat = AchronalSurface::flat();
    const SurfaceTransform tr(PoincareElement::lorentz(boost_z(0.5)), flat);
    const Mask b = Mask::ball(Vec3(0, 0, 0.5), 1.0);
    const Mask pb = Mask::pullback(tr, b);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int i = 0; i < 200; ++i) {
        const Vec3 x(u(rng), u(rng), u(rng));
        CHECK(pb.contains(tr.forward(x)) == b.contains(x));
        if (b.contains(x)) CHECK(pb.bounds()->contains(tr.forward(x)));
    }
    // the image of the ball is an ellipsoid stretched by cosh along x₃
    CHECK(pb.bounds()->sizes()[2] >= 2 * std::cosh(0.5) - 1e-6);

    const Mask sh = Mask::shadow(Mask::ball(Vec3::Zero(), 1), 0.0, AchronalSurface::tilted(Vec3(0, 0, 0.5), 0.2));
    CHECK(sh.contains(Vec3(0, 0, 1.5)));   // τ = 0.95, distance 0.5
    CHECK_FALSE(sh.contains(Vec3(0, 0, -3)));  // τ = −1.3, distance 2
    CHECK(sh.bounds().has_value());
    CHECK_THROWS_AS(Mask::shadow(Mask::half_space(Vec3(1, 0, 0), 0), 0.0, flat), Error);
    CHECK_THROWS_AS(Mask::shadow(Mask::unite(b, b), 0.0, flat), Error);
}

TEST_CASE("probability on flat surfaces") {
    const double norm = norm_squared(packet());
    const auto empty = probability(spec(), Region{AchronalSurface::flat(), Mask::empty()});
    CHECK(empty.probability == 0.0);

    const auto full = probability(spec(), Region{AchronalSurface::flat(), Mask::full()});
    CHECK(full.probability == doctest::Approx(norm).epsilon(1e-3));
    CHECK(full.window_lattice);
    CHECK(full.time_nodes == 1);
    CHECK(full.min_integrand >= -1e-9);
    CHECK_FALSE(full.tail_warning);

    const auto half = probability(spec(), Region{AchronalSurface::flat(), Mask::half_space(Vec3(0, 0, 1), 0)});
    CHECK(half.probability == doctest::Approx(0.5 * norm).epsilon(1e-2));

    const auto small = probability(spec(), Region{AchronalSurface::flat(), Mask::ball(Vec3::Zero(), 0.05)});
    const auto mid = probability(spec(), Region{AchronalSurface::flat(), Mask::ball(Vec3::Zero(), 2)});
    CHECK_FALSE(mid.window_lattice);
    CHECK(small.probability >= 0.0);
    CHECK(small.probability < 1e-4 * norm);
    CHECK(mid.probability > small.probability);
    CHECK(mid.probability < norm);
}

TEST_CASE("nested masks on shared nodes") {
    const SpatialGrid g = window_quadrature_grid(grid48, {});
    const FluxField f(spec(), AchronalSurface::flat(), g, true, {});
    const double a = f.integrate(Mask::ball(Vec3::Zero(), 2)).probability;
    const double b = f.integrate(Mask::ball(Vec3::Zero(), 3)).probability;
    const double c = f.integrate(Mask::full()).probability;
    CHECK(a <= b + 1e-12);
    CHECK(b <= c + 1e-12);
}

TEST_CASE("additivity") {
    const double norm = norm_squared(packet());
    const AchronalSurface flat = AchronalSurface::flat();
    const auto full = additivity_check(spec(), flat, {Mask::full()});
    const Mask up = Mask::half_space(Vec3(0, 0, 1), 0.3);
    const auto two = additivity_check(spec(), flat, {up, up.complement()});
    CHECK(two.residual <= 1e-2);
    CHECK(two.sum == doctest::Approx(full.sum).epsilon(1e-12));

    std::vector<Mask> octants;
    for (int s = 0; s < 8; ++s) {
        Mask m = Mask::full();
        for (int a = 0; a < 3; ++a) {
            const Mask h = Mask::half_space(Vec3::Unit(a), 0.1 * (a + 1));
            m = Mask::intersect(m, (s >> a) & 1 ? h : h.complement());
        }
        octants.push_back(m);
    }
    const auto eight = additivity_check(spec(), flat, octants);
    CHECK(eight.sum == doctest::Approx(full.sum).epsilon(1e-12));
    CHECK(full.residual == doctest::Approx(std::abs(full.sum - norm) / norm));

    try {
        (void)additivity_check(spec(), flat, {up, Mask::ball(Vec3(0, 0, 0.3), 1.0)});
        FAIL("expected an overlap error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::overlap);
    }
}

TEST_CASE("flux through tilted surfaces") {
    const auto rep = flux_invariance_report(spec(), {AchronalSurface::flat(), AchronalSurface::flat()});
    CHECK(rep.max_deviation == 0.0);
    const auto tilt = flux_invariance_report(spec(), {AchronalSurface::flat(), AchronalSurface::tilted(Vec3(0.3, 0, 0))});
    CHECK(tilt.max_deviation <= 2e-2);
    CHECK(tilt.results[1].time_nodes > 1);
    CHECK(tilt.results[1].min_integrand >= -1e-9);
    CHECK_THROWS_AS(flux_invariance_report(spec(), {AchronalSurface::sampled(
                                                        SpatialGrid{{2, 2, 2}, 1.0, Vec3::Zero()}, std::vector<double>(8))}),
                    Error);
}

TEST_CASE("covariance") {
    const Region ball{AchronalSurface::flat(), Mask::ball(Vec3::Zero(), 2)};
    const auto id = covariance_check(spec(), PoincareElement::identity(), ball);
    CHECK(id.lhs.probability == doctest::Approx(id.rhs.probability).epsilon(1e-14));

    const auto tr = covariance_check(spec(), PoincareElement::translation(FourVector(0, 0.3, -0.2, 0.5)), ball);
    CHECK(tr.relative_difference <= 1e-3);

    const auto rot = covariance_check(spec(), PoincareElement::lorentz(rotation(Vec3::UnitZ(), std::numbers::pi / 2)),
                                      Region{AchronalSurface::flat(), Mask::ball(Vec3(0.4, 0, 0), 1.5)});
    CHECK(rot.relative_difference <= 1e-3);

    const auto boost = covariance_check(spec(), PoincareElement::lorentz(boost_z(0.4)), ball);
    CHECK(boost.relative_difference <= 3e-2);
}

TEST_CASE("stress-energy covariance transforms the index") {
    const CurrentSpec se(packet(), TensorKernel::make(FourVector(1, 0, 0, 0)));
    const Region ball{AchronalSurface::flat(), Mask::ball(Vec3::Zero(), 2)};
    const auto r = covariance_check(se, PoincareElement::lorentz(boost_z(0.4)), ball);
    CHECK(r.relative_difference <= 3e-2);
}

TEST_CASE("polarization") {
    const Region ball{AchronalSurface::flat(), Mask::ball(Vec3(0.2, 0, 0), 1.5)};
    const KernelSpec k = CausalKernel{};
    const double p = probability(spec(), ball).probability;
    const cplx diag = matrix_element(packet(), packet(), k, ball);
    CHECK(std::abs(diag - p) <= 1e-10 * p);

    const cplx ab = matrix_element(packet(), other_packet(), k, ball);
    const cplx ba = matrix_element(other_packet(), packet(), k, ball);
    CHECK(std::abs(ab - std::conj(ba)) <= 1e-10 * std::abs(ab));

    const Region full{AchronalSurface::flat(), Mask::full()};
    const cplx expect = inner_product(packet(), other_packet());
    CHECK(std::abs(matrix_element(packet(), other_packet(), k, full) - expect) <= 1e-2 * std::abs(expect));

    CHECK_THROWS_AS(matrix_element(packet(), make_packet(MomentumGrid(32, 4.0), 1.0, PacketParams{}), k, ball), Error);
}

TEST_CASE("causal condition") {
    const Region delta{AchronalSurface::flat(), Mask::ball(Vec3::Zero(), 1)};
    const auto flat = causal_monotonicity_check(spec(), delta, AchronalSurface::flat(0.3));
    REQUIRE(flat.target_region.mask.as_ball().has_value());
    CHECK(flat.target_region.mask.as_ball()->second == doctest::Approx(1.3));
    CHECK(flat.source.probability <= flat.target.probability + 1e-3);

    const auto tilted = causal_monotonicity_check(spec(), delta, AchronalSurface::tilted(Vec3(0.2, 0, 0), 0.5));
    CHECK(tilted.target_region.mask.kind() == MaskKind::shadow);
    CHECK(tilted.source.probability <= tilted.target.probability + 1e-3);

    const auto full = causal_monotonicity_check(spec(), Region{AchronalSurface::flat(), Mask::full()},
                                                AchronalSurface::flat(0.5));
    CHECK(full.target.probability == doctest::Approx(full.source.probability).epsilon(1e-3));

    CHECK_THROWS_AS(causal_monotonicity_check(spec(), Region{AchronalSurface::tilted(Vec3(0.1, 0, 0)), Mask::full()},
                                              AchronalSurface::flat()),
                    Error);
}
