#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "achronal/causal_logic.hpp"
#include "achronal/error.hpp"

#include <random>

using namespace achronal;

namespace {

FourVector random_point(std::mt19937_64& rng, double half) {
    std::uniform_real_distribution<double> U(-half, half);
    return {U(rng), U(rng), U(rng), U(rng)};
}

Vec3 random_in_ball(std::mt19937_64& rng, const Vec3& c, double r) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (;;) {
        const Vec3 v(U(rng), U(rng), U(rng));
        if (v.squaredNorm() <= 1.0) return c + r * v;
    }
}

// escaping line x + s(1, v) reaches the plane t0 outside the ball
bool line_escapes_ball(const FourVector& x, const Vec3& v, double t0, const Vec3& c, double r) {
    const Vec3 y = x.x + (t0 - x.t) * v;
    return v.norm() < 1.0 && (y - c).norm() > r;
}

}  // namespace

TEST_CASE("achronal separateness") {
    const FourVector x(0.3, 1, 2, 3);
    CHECK_FALSE(achronally_separated(x, x));
    CHECK(achronally_separated(x, x + FourVector(0, 1, 0, 0)));
    CHECK(achronally_separated(x, x + FourVector(1, 1, 0, 0)));
    CHECK_FALSE(achronally_separated(x, x + FourVector(1.1, 1, 0, 0)));

    std::mt19937_64 rng(3);
    for (int i = 0; i < 1000; ++i) {
        const FourVector a = random_point(rng, 2), b = random_point(rng, 2);
        CHECK(achronally_separated(a, b) == achronally_separated(b, a));
    }
}

TEST_CASE("causal complement of a ball") {
    const auto M = SpacetimeRegion::ball_in_plane(0, Vec3::Zero(), 1);
    CHECK(causal_complement_member(M, FourVector(0, 3, 0, 0)).member());

    const auto no = causal_complement_member(M, FourVector(2, 1.5, 0, 0));
    REQUIRE(no.verdict == Verdict::not_member);
    REQUIRE(no.witness);
    CHECK(M.contains(*no.witness));
    CHECK_FALSE(achronally_separated(FourVector(2, 1.5, 0, 0), *no.witness));

    // interior points at the plane time coincide with a ball point
    CHECK(causal_complement_member(M, FourVector(0, 0.5, 0, 0)).verdict == Verdict::not_member);
    CHECK(causal_complement_member(M, FourVector(0, 1, 0, 0)).verdict == Verdict::not_member);
    // lightlike to the rim is allowed
    CHECK(causal_complement_member(M, FourVector(1, 2, 0, 0)).member());

    // closed form against brute force over ball points
    std::mt19937_64 rng(5);
    std::vector<FourVector> ys;
    for (int i = 0; i < 4000; ++i) ys.emplace_back(0.0, random_in_ball(rng, Vec3::Zero(), 1));
    int members = 0;
    for (int i = 0; i < 400; ++i) {
        const FourVector x = random_point(rng, 3);
        const auto m = causal_complement_member(M, x);
        if (m.member()) {
            ++members;
            for (const auto& y : ys) REQUIRE(achronally_separated(x, y));
        } else {
            REQUIRE(m.witness);
            CHECK(M.contains(*m.witness));
            CHECK_FALSE(achronally_separated(x, *m.witness));
        }
    }
    CHECK(members > 20);
}

TEST_CASE("causal complement of the full plane is empty off the plane") {
    const auto M = SpacetimeRegion::graph_patch({AchronalSurface::flat(0), Mask::full()});
    CHECK(M.kind() == RegionKind::graph_patch);
    std::mt19937_64 rng(7);
    for (int i = 0; i < 50; ++i) {
        FourVector x = random_point(rng, 3);
        if (x.t == 0.0) continue;
        const auto m = causal_complement_member(M, x);
        REQUIRE(m.verdict == Verdict::not_member);
        CHECK(M.contains(*m.witness));
        CHECK_FALSE(achronally_separated(x, *m.witness));
    }
}

TEST_CASE("sampled complement agrees with closed forms") {
    // the same ball, hidden from the closed form behind an intersection mask
    const Region hidden{AchronalSurface::flat(0.5), Mask::intersect(Mask::ball(Vec3(0.2, 0, 0), 1), Mask::full())};
    const auto G = SpacetimeRegion::graph_patch(hidden);
    REQUIRE(G.kind() == RegionKind::graph_patch);
    const auto B = SpacetimeRegion::ball_in_plane(0.5, Vec3(0.2, 0, 0), 1);

    std::mt19937_64 rng(11);
    int decided = 0;
    for (int i = 0; i < 200; ++i) {
        const FourVector x = random_point(rng, 3);
        const auto g = causal_complement_member(G, x);
        const auto b = causal_complement_member(B, x);
        if (g.verdict == Verdict::inconclusive) {
            CHECK(std::abs(b.margin) < 0.2);
            continue;
        }
        ++decided;
        CHECK(g.verdict == b.verdict);
    }
    CHECK(decided > 150);

    // a tilted patch: member verdicts hold against dense sampling
    const Region tilted{AchronalSurface::tilted(Vec3(0.4, 0.2, 0)), Mask::ball(Vec3::Zero(), 1)};
    const auto T = SpacetimeRegion::graph_patch(tilted);
    std::vector<FourVector> ys;
    for (int i = 0; i < 4000; ++i) {
        const Vec3 y = random_in_ball(rng, Vec3::Zero(), 1);
        ys.emplace_back(tilted.surface.tau(y), y);
    }
    for (int i = 0; i < 100; ++i) {
        const FourVector x = random_point(rng, 3);
        const auto m = causal_complement_member(T, x);
        if (m.member()) {
            for (const auto& y : ys) REQUIRE(achronally_separated(x, y));
        } else if (m.verdict == Verdict::not_member) {
            CHECK(T.contains(*m.witness));
            CHECK_FALSE(achronally_separated(x, *m.witness));
        }
    }
}

TEST_CASE("determinacy of a ball") {
    const double r = 1.5;
    const auto D = SpacetimeRegion::ball_in_plane(0, Vec3::Zero(), r);
    CHECK(determinacy_member(D, FourVector(0, 0, 0, 0)).member());
    for (double t : {-r, -0.7, 0.0, 1.2, r}) CHECK(determinacy_member(D, FourVector(t, 0, 0, 0)).member());

    std::mt19937_64 rng(13);
    for (int i = 0; i < 500; ++i) {
        const FourVector x = random_point(rng, 2.5);
        const auto m = determinacy_member(D, x);
        const bool inside = std::abs(x.t) + x.x.norm() <= r;
        CHECK(m.member() == inside);
        if (!inside) {
            REQUIRE(m.velocity);
            CHECK(line_escapes_ball(x, *m.velocity, 0, Vec3::Zero(), r));
        }
    }
    // points of the plane outside the ball: the vertical line escapes
    const auto m = determinacy_member(D, FourVector(0, 2, 0, 0));
    CHECK(m.verdict == Verdict::not_member);
    CHECK(line_escapes_ball(FourVector(0, 2, 0, 0), *m.velocity, 0, Vec3::Zero(), r));

    const auto full = SpacetimeRegion::graph_patch({AchronalSurface::bump(0.5, 1.0), Mask::full()});
    for (int i = 0; i < 20; ++i) CHECK(determinacy_member(full, random_point(rng, 50)).member());
    CHECK(determinacy_member(SpacetimeRegion::graph_patch({AchronalSurface::flat(0), Mask::full()}),
                             FourVector(1e6, 0, 0, 0))
              .member());

    const auto P = SpacetimeRegion::point(FourVector(1, 2, 3, 4));
    CHECK(determinacy_member(P, FourVector(1, 2, 3, 4)).member());
    CHECK(determinacy_member(P, FourVector(0, 2, 3, 4)).verdict == Verdict::not_member);
    CHECK_THROWS_AS(determinacy_member(SpacetimeRegion::diamond(0, Vec3::Zero(), 1), FourVector()), Error);
}

TEST_CASE("sampled determinacy matches the diamond") {
    const double r = 1.0;
    const auto diamond = SpacetimeRegion::diamond(0, Vec3::Zero(), r);
    const Region flat_hidden{AchronalSurface::flat(0), Mask::intersect(Mask::ball(Vec3::Zero(), r), Mask::full())};
    const Region cone{AchronalSurface::cone(-0.5, Vec3::Zero(), 0.5 * r), Mask::ball(Vec3::Zero(), r)};

    std::mt19937_64 rng(17);
    for (const Region& reg : {flat_hidden, cone}) {
        const auto D = SpacetimeRegion::graph_patch(reg);
        REQUIRE(D.kind() == RegionKind::graph_patch);
        int decided = 0, total = 0;
        for (int i = 0; i < 300; ++i) {
            const FourVector x = random_point(rng, 1.5 * r);
            const auto m = determinacy_member(D, x);
            ++total;
            if (m.verdict == Verdict::inconclusive) continue;
            ++decided;
            CHECK(m.member() == diamond.contains(x));
            if (m.verdict == Verdict::not_member) {
                REQUIRE(m.velocity);
                CHECK(m.velocity->norm() < 1.0);
            }
        }
        CHECK(decided > total * 3 / 4);
    }
    // the apex and the centre are deep inside
    const auto C = SpacetimeRegion::graph_patch(cone);
    CHECK(determinacy_member(C, FourVector(0, 0, 0, 0)).member());
    CHECK(determinacy_member(C, FourVector(0.5, 0, 0, 0)).member());
    CHECK(determinacy_member(C, FourVector(0.5, 0.6, 0, 0)).verdict == Verdict::not_member);
}

TEST_CASE("completion equals determinacy") {
    const double r = 1.0;
    const auto B = SpacetimeRegion::ball_in_plane(0.3, Vec3(0.1, -0.2, 0.4), r);
    const auto rep = completion_equals_determinacy_check(B, 10000, 42, 1e-3 * r);
    CHECK(rep.samples == 10000);
    CHECK(rep.considered + rep.shell + rep.inconclusive == rep.samples);
    CHECK(rep.inconclusive == 0);
    CHECK(rep.counterexamples.empty());
    CHECK(rep.agreement() == 1.0);
    CHECK(rep.considered > 9900);

    const auto P = SpacetimeRegion::point(FourVector(0.5, 1, 0, 0));
    const auto rp = completion_equals_determinacy_check(P, 500, 1, 0.0);
    CHECK(rp.agreement() == 1.0);
    CHECK(double_complement_member(P, P.bottom()).member());
    const auto off = double_complement_member(P, FourVector(0.7, 1, 0, 0));
    REQUIRE(off.witness);
    CHECK(causal_complement_member(P, *off.witness).member());
    CHECK_FALSE(achronally_separated(FourVector(0.7, 1, 0, 0), *off.witness));

    // a boosted diamond is causally complete
    const auto g = PoincareElement{FourVector(0.2, 1, 0, -1), LorentzTransform::boost(Vec3(0, 0.6, 0.8), 0.7)};
    const auto D = SpacetimeRegion::diamond(0, Vec3::Zero(), r).transformed(g);
    const auto rd = completion_equals_determinacy_check(D, 5000, 9, 1e-3 * r);
    CHECK(rd.agreement() == 1.0);
    CHECK(rd.counterexamples.empty());
}

TEST_CASE("completion is extensive and the complement region composes") {
    const auto B = SpacetimeRegion::ball_in_plane(0, Vec3::Zero(), 1);
    const auto D = SpacetimeRegion::diamond(FourVector(-1, 0, 0, 0), FourVector(2, 0.5, 0, 0));
    std::mt19937_64 rng(19);
    for (int i = 0; i < 500; ++i) {
        const Vec3 y = random_in_ball(rng, Vec3::Zero(), 1);
        CHECK(double_complement_member(B, FourVector(0, y)).member());
        FourVector x = random_point(rng, 2);
        x.t += 0.5;
        if (D.contains(x)) CHECK(double_complement_member(D, x).member());
    }

    const auto C = SpacetimeRegion::complement(B);
    CHECK(C.contains(FourVector(0, 3, 0, 0)));
    CHECK_FALSE(C.contains(FourVector(0, 0, 0, 0)));
    CHECK(causal_complement_member(C, FourVector(0.5, 0, 0, 0)).member());

    const auto U = SpacetimeRegion::unite(B, SpacetimeRegion::ball_in_plane(0, Vec3(5, 0, 0), 1));
    CHECK(causal_complement_member(U, FourVector(0, 2.5, 0, 0)).member());
    CHECK(causal_complement_member(U, FourVector(1.0, 3.5, 0, 0)).verdict == Verdict::not_member);
    CHECK(U.contains(FourVector(0, 5.5, 0, 0)));

    const auto I = SpacetimeRegion::intersect(B, SpacetimeRegion::ball_in_plane(0, Vec3(1, 0, 0), 1));
    CHECK(causal_complement_member(I, FourVector(0, 3, 0, 0)).member());
    CHECK(causal_complement_member(I, FourVector(0, 0.5, 0, 0)).verdict == Verdict::not_member);
}

TEST_CASE("complements are Poincare equivariant") {
    std::mt19937_64 rng(23);
    const auto D = SpacetimeRegion::diamond(0.2, Vec3(0.3, 0, 0), 1);
    const auto g = PoincareElement{FourVector(1, -2, 0.5, 0), LorentzTransform::boost(Vec3(1, 0, 0), 0.9) *
                                                                  LorentzTransform::rotation(Vec3(0, 0, 1), 0.4)};
    const auto gD = D.transformed(g);
    const auto B = SpacetimeRegion::ball_in_plane(0, Vec3(0.3, 0, 0), 1);
    const auto rot = PoincareElement{FourVector(1, -2, 0.5, 0), LorentzTransform::rotation(Vec3(0, 0, 1), 0.4)};
    const auto gB = B.transformed(rot);
    CHECK_THROWS_AS(B.transformed(g), Error);

    int checked = 0;
    for (int i = 0; i < 2000; ++i) {
        const FourVector x = random_point(rng, 3);
        const auto a = causal_complement_member(D, x);
        if (std::abs(a.margin) > 1e-9) {
            ++checked;
            CHECK(a.verdict == causal_complement_member(gD, act(g, x)).verdict);
            CHECK(double_complement_member(D, x).verdict == double_complement_member(gD, act(g, x)).verdict);
        }
        const auto b = causal_complement_member(B, x);
        if (std::abs(b.margin) > 1e-9) CHECK(b.verdict == causal_complement_member(gB, act(rot, x)).verdict);
    }
    CHECK(checked > 1900);
}

TEST_CASE("probabilities through determinacy sets") {
    const MomentumGrid grid(48, 4.0);
    const CurrentSpec spec(make_packet(grid, 1.0, PacketParams{}), CausalKernel{});
    const double r = 2.0;
    const auto M = SpacetimeRegion::diamond(0, Vec3::Zero(), r);
    const Region flat{AchronalSurface::flat(0), Mask::ball(Vec3::Zero(), r)};
    const Region cone{AchronalSurface::cone(-0.5, Vec3::Zero(), 0.5 * r), Mask::ball(Vec3::Zero(), r)};

    const auto same = rcl_well_defined_check(spec, M, flat, flat, 50, 1);
    CHECK(same.p1.probability == same.p2.probability);

    const auto res = rcl_well_defined_check(spec, M, flat, cone, 300, 2);
    CHECK(res.precondition.counterexamples.empty());
    CHECK(res.precondition.considered > 200);
    CHECK(res.p1.probability > 0.2 * res.p1.norm);
    CHECK(res.relative_difference <= 2e-2);

    const Region small{AchronalSurface::cone(-0.5, Vec3::Zero(), 0.5), Mask::ball(Vec3::Zero(), 1.0)};
    try {
        rcl_well_defined_check(spec, M, flat, small, 300, 3);
        FAIL("expected a determinacy error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::determinacy);
    }
}
