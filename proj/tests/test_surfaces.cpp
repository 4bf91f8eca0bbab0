#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "achronal/error.hpp"
#include "achronal/surfaces.hpp"

#include <random>

using namespace achronal;

namespace {

std::vector<Vec3> random_points(int n, double spread, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-spread, spread);
    std::vector<Vec3> out;
    for (int i = 0; i < n; ++i) out.emplace_back(u(rng), u(rng), u(rng));
    return out;
}

Vec3 fd_gradient(const AchronalSurface& s, const Vec3& x, double h = 1e-5) {
    Vec3 g;
    for (int a = 0; a < 3; ++a) {
        Vec3 e = Vec3::Zero();
        e[a] = h;
        g[a] = (s.tau(x + e) - s.tau(x - e)) / (2 * h);
    }
    return g;
}

AchronalSurface sampled_bump(double h) {
    const AchronalSurface b = AchronalSurface::bump(0.6, 1.0);
    SpatialGrid g;
    const int n = int(std::lround(4.0 / h)) + 1;
    g.n = {n, n, n};
    g.spacing = h;
    g.origin = Vec3::Constant(-2.0);
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) v[i] = b.tau(g.node(i));
    return AchronalSurface::sampled(g, v);
}

}  // namespace

TEST_CASE("analytic families and gradients") {
    const AchronalSurface flat = AchronalSurface::flat(0.0);
    CHECK(flat.tau(Vec3(1, 2, 3)) == 0.0);
    CHECK(flat.gradient(Vec3(1, 2, 3)).isZero());

    const AchronalSurface tilt = AchronalSurface::tilted(Vec3(0, 0, 0.5), 0.25);
    CHECK(tilt.gradient(Vec3(4, -1, 2)) == Vec3(0, 0, 0.5));
    CHECK(tilt.tau(Vec3(4, -1, 2)) == 1.25);
    CHECK(tilt.lipschitz() == 0.5);

    const AchronalSurface cone = AchronalSurface::cone(0.8);
    CHECK((cone.gradient(Vec3(1, 0, 0)) - Vec3(0.8, 0, 0)).norm() < 1e-15);
    const GradientSample apex = cone.gradient_info(Vec3::Zero());
    CHECK_FALSE(apex.differentiable);
    CHECK(apex.value.norm() == doctest::Approx(0.8));

    const AchronalSurface bump = AchronalSurface::bump(0.6, 1.5);
    for (const Vec3& x : random_points(20, 3.0, 1)) {
        CHECK((bump.gradient(x) - fd_gradient(bump, x)).norm() < 1e-9);
        CHECK(bump.gradient(x).norm() < 0.6);
    }
    CHECK(bump.tau(Vec3(1e-9, 0, 0)) > 0.0);

    CHECK_THROWS_AS(AchronalSurface::tilted(Vec3(0, 0, 1.1)), Error);
    CHECK_THROWS_AS(AchronalSurface::bump(1.0, 1.0), Error);
    CHECK_THROWS_AS(AchronalSurface::cone(-1.2), Error);
}

TEST_CASE("flattening") {
    const AchronalSurface cone = AchronalSurface::cone(1.0, Vec3(0.3, 0, 0), 0.2);
    for (const Vec3& x : random_points(10, 2.0, 2)) {
        CHECK(cone.flatten(1.0).tau(x) == cone.tau(x));
        CHECK(cone.flatten(0.0).tau(x) == 0.0);
        CHECK(cone.flatten(0.8).tau(x) ==
              doctest::Approx(AchronalSurface::cone(0.8, Vec3(0.3, 0, 0), 0.16).tau(x)).epsilon(1e-15));
        CHECK(cone.flatten(0.8).flatten(0.5).tau(x) == cone.flatten(0.4).tau(x));
    }
    CHECK(cone.flatten(0.8).lipschitz() == doctest::Approx(0.8));
    CHECK(cone.flatten(0.8).parameter() == doctest::Approx(0.8));
    CHECK_THROWS_AS(cone.flatten(1.5), Error);
    CHECK_THROWS_AS(sampled_bump(0.5).flatten(0.5), Error);
}

TEST_CASE("spacelike Cauchy check") {
    const auto pts = random_points(40, 3.0, 3);
    CHECK(is_spacelike_cauchy(AchronalSurface::flat(), pts).spacelike_cauchy);
    CHECK(is_spacelike_cauchy(AchronalSurface::tilted(Vec3(0.3, 0, 0.4)), pts).spacelike_cauchy);
    CHECK(is_spacelike_cauchy(AchronalSurface::bump(0.6, 1.0), pts).spacelike_cauchy);

    const CauchyReport light = is_spacelike_cauchy(AchronalSurface::cone(1.0), pts);
    CHECK_FALSE(light.spacelike_cauchy);
    REQUIRE(light.witness.has_value());
    const auto [a, b] = *light.witness;
    const AchronalSurface c1 = AchronalSurface::cone(1.0);
    CHECK(std::abs(c1.tau(a) - c1.tau(b)) >= (a - b).norm() * (1 - 1e-12));
    CHECK(light.asymptotic_slope == doctest::Approx(1.0));

    CHECK(is_spacelike_cauchy(AchronalSurface::cone(1.0).flatten(0.9), pts).spacelike_cauchy);
    CHECK_FALSE(is_spacelike_cauchy(sampled_bump(0.5), pts).spacelike_cauchy);
}

TEST_CASE("sampled surfaces") {
    SpatialGrid g;
    g.n = {5, 4, 3};
    g.spacing = 0.5;
    g.origin = Vec3(-1, -1, -0.5);
    const Vec3 e(0.3, -0.2, 0.4);
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) v[i] = e.dot(g.node(i)) + 1.0;
    const AchronalSurface s = AchronalSurface::sampled(g, v);
    const Vec3 x(0.37, -0.11, 0.2);
    CHECK(s.tau(x) == doctest::Approx(e.dot(x) + 1.0).epsilon(1e-14));
    CHECK((s.gradient(x) - e).norm() < 1e-13);
    CHECK((s.gradient(g.node(0)) - e).norm() < 1e-13);
    CHECK_FALSE(s.maximal());
    CHECK(s.in_domain(Vec3(1, 0.5, 0.5)));
    CHECK_FALSE(s.in_domain(Vec3(1.01, 0, 0)));
    try {
        (void)s.tau(Vec3(2, 0, 0));
        FAIL("expected a domain error");
    } catch (const Error& err) {
        CHECK(err.kind() == ErrorKind::domain);
    }

    v[g.index(2, 2, 1)] += 0.6;
    CHECK_THROWS_AS(AchronalSurface::sampled(g, v), Error);
}

TEST_CASE("sampled gradients converge at second order") {
    const AchronalSurface b = AchronalSurface::bump(0.6, 1.0);
    const auto pts = random_points(10, 1.5, 4);
    auto err = [&](double h) {
        const AchronalSurface s = sampled_bump(h);
        double m = 0.0;
        for (const Vec3& x : pts) m = std::max(m, (s.gradient(x) - b.gradient(x)).norm());
        return m;
    };
    const double ratio = err(0.1) / err(0.05);
    CHECK(ratio == doctest::Approx(4.0).epsilon(0.3));
}

TEST_CASE("transforms of planes are closed form") {
    const AchronalSurface flat = AchronalSurface::flat();
    for (double rho : {-0.7, 0.4, 1.0}) {
        const SurfaceTransform tr(PoincareElement::lorentz(boost_z(rho)), flat);
        const auto p = tr.surface().plane();
        REQUIRE(p.has_value());
        CHECK((p->first - Vec3(0, 0, std::tanh(rho))).norm() < 1e-15);
        CHECK(std::abs(p->second) < 1e-15);
        CHECK(tr.jacobian_det(Vec3(0.3, 1, -2)) == doctest::Approx(std::cosh(rho)).epsilon(1e-15));
    }

    const AchronalSurface tilt = AchronalSurface::tilted(Vec3(0.2, -0.3, 0.5), 0.4);
    const PoincareElement g{FourVector(0.3, -1, 0.5, 2), rotation(Vec3(0, 1, 0), 0.7) * boost_z(0.6)};
    const SurfaceTransform tr(g, tilt);
    for (const Vec3& x : random_points(10, 2.0, 5)) {
        const FourVector X = act(g, FourVector(tilt.tau(x), x));
        CHECK(tr.surface().tau(X.x) == doctest::Approx(X.t).epsilon(1e-13));
        CHECK((tr.inverse(X.x) - x).norm() < 1e-12);
    }
}

TEST_CASE("transforms of curved surfaces") {
    const std::vector<AchronalSurface> surfaces{AchronalSurface::bump(0.6, 1.0, 0.1),
                                                AchronalSurface::cone(0.8, Vec3(0.2, 0, 0)),
                                                AchronalSurface::cone(1.0)};
    const PoincareElement g{FourVector(0.2, 0.1, 0, -0.3), boost_z(0.4) * rotation(Vec3(1, 0, 0), 0.3)};
    const auto pts = random_points(30, 2.5, 6);
    for (const auto& s : surfaces) {
        const SurfaceTransform tr = transform_surface(g, s, pts);
        const AchronalSurface& img = tr.surface();
        CHECK(img.kind() == SurfaceKind::transformed);
        std::vector<FourVector> X;
        for (const Vec3& x : pts) {
            X.push_back(act(g, FourVector(s.tau(x), x)));
            CHECK(img.tau(X.back().x) == doctest::Approx(X.back().t).epsilon(1e-12));
        }
        // achronality of the image
        for (std::size_t i = 0; i < X.size(); ++i) {
            for (std::size_t j = i + 1; j < X.size(); ++j) {
                CHECK(std::abs(X[i].t - X[j].t) <= (X[i].x - X[j].x).norm() + 1e-12);
            }
        }
        if (s.kind() == SurfaceKind::bump) {
            for (int i = 0; i < 5; ++i) CHECK((img.gradient(X[i].x) - fd_gradient(img, X[i].x)).norm() < 1e-7);
        }
    }
    const auto id = transform_surface(PoincareElement::identity(), surfaces[0], pts);
    for (const Vec3& x : pts) {
        CHECK(id.surface().tau(x) == doctest::Approx(surfaces[0].tau(x)).epsilon(1e-14));
        CHECK((id.forward(x) - x).norm() == 0.0);
        CHECK(id.jacobian_det(x) == doctest::Approx(1.0));
    }
}

TEST_CASE("boost Jacobian identity") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0, worst_general = 0.0;
    for (int i = 0; i < 100; ++i) {
        Vec3 z(u(rng), u(rng), u(rng));
        while (z.norm() >= 1.0) z *= 0.5;
        const double rho = u(rng);
        worst = std::max(worst, boost_jacobian_identity_residual(rho, z));
        const LorentzTransform L = rotation(Vec3(0, 0, 1), 2 * u(rng)) * boost_z(rho) * rotation(Vec3(1, 0, 0), u(rng));
        worst_general = std::max(worst_general, jacobian_identity_residual(L, z));
    }
    CHECK(worst <= 1e-12);
    CHECK(worst_general <= 1e-12);
}

TEST_CASE("preimage outside a bounded domain") {
    const AchronalSurface s = sampled_bump(0.5);
    const SurfaceTransform tr(PoincareElement::lorentz(boost_z(0.3)), s);
    CHECK(tr.surface().in_domain(tr.forward(Vec3(0.5, 0.5, 0.5))));
    CHECK_FALSE(tr.surface().in_domain(Vec3(5, 0, 0)));
}
