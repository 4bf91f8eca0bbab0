#include "achronal/causal_logic.hpp"

#include "achronal/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace achronal {

namespace {

std::string fmt(const FourVector& x) {
    std::ostringstream os;
    os.precision(17);
    os << "(" << x.t << "," << x.x[0] << "," << x.x[1] << "," << x.x[2] << ")";
    return os.str();
}

std::string fmt(const Vec3& x) {
    std::ostringstream os;
    os.precision(17);
    os << "(" << x[0] << "," << x[1] << "," << x[2] << ")";
    return os.str();
}

bool same_point(const FourVector& a, const FourVector& b) { return a.t == b.t && a.x == b.x; }

// future causal: d₀ ≥ |d⃗|
bool future_causal(const FourVector& d) { return d.t >= d.x.norm(); }

// future timelike: d₀ > |d⃗|
bool future_timelike(const FourVector& d) { return d.t > d.x.norm(); }

// Rest frame of a diamond: x ↦ L(x − m) maps the tips to (∓r, 0).
struct RestFrame {
    FourVector m;
    LorentzTransform L;
    double r = 0.0;

    FourVector to(const FourVector& x) const { return L(x - m); }
    FourVector from(const FourVector& y) const { return m + L.inverse()(y); }
};

RestFrame rest_frame(const FourVector& p, const FourVector& q) {
    const FourVector u = q - p;
    RestFrame f;
    f.m = 0.5 * (p + q);
    f.r = 0.5 * std::sqrt(minkowski_square(u));
    const double speed = u.x.norm() / u.t;
    if (speed == 0.0) return f;
    const Vec3 axis = u.x.normalized();
    const double eta = std::atanh(speed);
    f.L = LorentzTransform::boost(axis, -eta);
    if (f.L(u).x.norm() > 1e-9 * u.t) f.L = LorentzTransform::boost(axis, eta);
    return f;
}

Membership verdict(Verdict v, double margin, std::size_t samples = 0) {
    Membership m;
    m.verdict = v;
    m.margin = margin;
    m.samples = samples;
    return m;
}

// D^⊥ = complement of D ∪ I⁺(p) ∪ I⁻(q)
Membership diamond_complement(const FourVector& p, const FourVector& q, const FourVector& x) {
    const RestFrame f = rest_frame(p, q);
    const FourVector y = f.to(x);
    const double slack = y.x.norm() - f.r - std::abs(y.t);
    if (!future_causal(x - p) || !future_causal(q - x)) {
        // outside the diamond
        if (!future_timelike(x - p) && !future_timelike(q - x)) return verdict(Verdict::member, std::max(slack, 0.0));
        Membership m = verdict(Verdict::not_member, slack);
        m.witness = future_timelike(x - p) ? p : q;
        return m;
    }
    Membership m = verdict(Verdict::not_member, slack);
    m.witness = x;
    return m;
}

// (D^⊥)^⊥ from sup over z ∈ D^⊥ of |x₀ − z₀| − |x⃗ − z⃗| in the rest frame.
// z at radius ρ > r on the ray of x⃗ with |z₀| = ρ − r gives
// F(ρ) = |x₀| + (ρ − r) − |ρ − a|.
Membership diamond_double_complement(const FourVector& p, const FourVector& q, const FourVector& x) {
    const RestFrame f = rest_frame(p, q);
    const FourVector y = f.to(x);
    const double a = y.x.norm();
    const double r = f.r;
    const double lo = r + 1e-12 * std::max(r, 1.0);
    const double cand[] = {lo, std::max(a, lo), std::max(a, r) + 1.0, std::max(a, r) + 10.0 * (r + 1.0)};
    double best = -std::numeric_limits<double>::infinity();
    double rho_best = lo;
    for (double rho : cand) {
        const double F = std::abs(y.t) + (rho - r) - std::abs(rho - a);
        if (F > best) best = F, rho_best = rho;
    }
    if (best <= 0.0) return verdict(Verdict::member, -best);
    Membership m = verdict(Verdict::not_member, -best);
    const Vec3 dir = a > 0.0 ? Vec3(y.x / a) : Vec3::UnitX();
    const double z0 = (y.t >= 0.0 ? -1.0 : 1.0) * (rho_best - r);
    m.witness = f.from(FourVector(z0, rho_best * dir));
    return m;
}

// Monotone root of f(s) = x₀ + s − τ(x⃗ + s v).
std::optional<double> line_hit(const AchronalSurface& s, const FourVector& x, const Vec3& v, double L) {
    auto f = [&](double t) { return x.t + t - s.tau(x.x + t * v); };
    const double f0 = f(0.0);
    if (f0 == 0.0) return 0.0;
    const double slope = std::max(1.0 - L * v.norm(), 1e-12);
    double step = std::abs(f0) / slope;
    double a, b, fa, fb;
    if (f0 < 0.0) {
        a = 0.0, fa = f0, b = step, fb = f(b);
        for (int i = 0; i < 8 && fb < 0.0; ++i) b += step, fb = f(b);
    } else {
        b = 0.0, fb = f0, a = -step, fa = f(a);
        for (int i = 0; i < 8 && fa > 0.0; ++i) a -= step, fa = f(a);
    }
    if (fa > 0.0 || fb < 0.0) return std::nullopt;
    // Illinois regula falsi
    int side = 0;
    for (int it = 0; it < 200; ++it) {
        const double c = (a * fb - b * fa) / (fb - fa);
        const double fc = f(c);
        if (fc == 0.0 || std::abs(b - a) <= 1e-14 * (1.0 + std::abs(a) + std::abs(b))) return c;
        if (fc < 0.0) {
            a = c, fa = fc;
            if (side == -1) fb *= 0.5;
            side = -1;
        } else {
            b = c, fb = fc;
            if (side == 1) fa *= 0.5;
            side = 1;
        }
    }
    return 0.5 * (a + b);
}

Membership patch_determinacy(const Region& patch, const FourVector& x, const DeterminacyOptions& opt) {
    const AchronalSurface& s = patch.surface;
    if (!s.maximal()) throw Error(ErrorKind::unsupported, "determinacy: patch surface must be maximal");
    if (patch.mask.kind() == MaskKind::full) return verdict(Verdict::member, std::numeric_limits<double>::infinity(), 1);
    if (patch.mask.kind() == MaskKind::empty) {
        Membership m = verdict(Verdict::not_member, 0.0, 1);
        m.velocity = Vec3::Zero();
        return m;
    }
    if (opt.speeds.empty() || opt.directions.empty())
        throw Error(ErrorKind::invalid_argument, "determinacy: empty direction sampling");
    const double L = s.lipschitz();
    const double vmax = *std::max_element(opt.speeds.begin(), opt.speeds.end());
    if (!(vmax < 1.0) || *std::min_element(opt.speeds.begin(), opt.speeds.end()) <= 0.0)
        throw Error(ErrorKind::invalid_argument, "determinacy: speeds must lie in (0, 1)");

    std::size_t lines = 0;
    double margin = -std::numeric_limits<double>::infinity();
    // returns false when the line misses the patch
    auto probe = [&](const Vec3& v, double granularity_factor, double& line_margin) {
        ++lines;
        const auto hit = line_hit(s, x, v, L);
        if (!hit) {
            line_margin = -std::numeric_limits<double>::infinity();
            return true;  // undecided line: counts as zero margin
        }
        const Vec3 y = x.x + *hit * v;
        if (!patch.mask.contains(y)) {
            line_margin = patch.mask.sd(y);
            return false;
        }
        line_margin = -patch.mask.sd(y) - std::abs(*hit) * granularity_factor;
        return true;
    };

    for (int n : opt.directions) {
        const auto dirs = fibonacci_sphere(n);
        // hit points move by at most |s|·|δv|/(1 − L) as v varies over the
        // outer shell cell or towards the light cone
        const double theta = std::sqrt(4.0 * std::numbers::pi / n);
        const double factor = L < 1.0 ? (vmax * theta + (1.0 - vmax)) / (1.0 - L)
                                      : std::numeric_limits<double>::infinity();
        double level_margin = std::numeric_limits<double>::infinity();
        double lm = 0.0;
        if (!probe(Vec3::Zero(), 0.0, lm)) {
            Membership m = verdict(Verdict::not_member, lm, lines);
            m.velocity = Vec3::Zero();
            return m;
        }
        for (double sp : opt.speeds) {
            for (const Vec3& d : dirs) {
                const Vec3 v = sp * d;
                if (!probe(v, sp == vmax ? factor : 0.0, lm)) {
                    Membership m = verdict(Verdict::not_member, lm, lines);
                    m.velocity = v;
                    return m;
                }
                if (sp == vmax) level_margin = std::min(level_margin, lm);
            }
        }
        margin = level_margin;
        if (level_margin > 0.0) return verdict(Verdict::member, level_margin, lines);
    }
    return verdict(Verdict::inconclusive, margin, lines);
}

// Certified sampling of sup over y ∈ patch of |x₀ − τ(y)| − |x⃗ − y⃗|.
Membership patch_complement(const Region& patch, const FourVector& x, const ComplementOptions& opt) {
    const AchronalSurface& s = patch.surface;
    const double L = s.lipschitz();
    std::optional<Box3> box = patch.mask.bounds();
    if (s.maximal() && L < 1.0) {
        // far points are spacelike to x
        const double R = std::abs(x.t - s.tau(x.x)) / (1.0 - L) + 1e-9;
        Box3 near(Vec3(x.x.array() - R), Vec3(x.x.array() + R));
        box = box ? box->intersection(near) : near;
    }
    if (!box) return verdict(Verdict::inconclusive, -std::numeric_limits<double>::infinity());
    if (box->isEmpty()) return verdict(Verdict::member, std::numeric_limits<double>::infinity());

    std::size_t count = 0;
    double margin = -std::numeric_limits<double>::infinity();
    for (int n : opt.samples_per_axis) {
        const Vec3 ext = box->sizes();
        const double d = std::max(ext.maxCoeff() / std::max(n - 1, 1), 1e-12);
        std::array<int, 3> k;
        for (int a = 0; a < 3; ++a) k[a] = int(std::ceil(ext[a] / d)) + 1;
        const double reach = 0.5 * std::sqrt(3.0) * d;
        double mn = std::numeric_limits<double>::infinity();
        for (int i = 0; i < k[0]; ++i)
            for (int j = 0; j < k[1]; ++j)
                for (int l = 0; l < k[2]; ++l) {
                    const Vec3 y = box->min() + d * Vec3(i, j, l);
                    if (patch.mask.sd(y) > reach || !s.in_domain(y)) continue;
                    ++count;
                    const double t = s.tau(y);
                    const double m = (x.x - y).norm() - std::abs(x.t - t);
                    if (patch.mask.contains(y) && (m < 0.0 || (m == 0.0 && same_point(x, FourVector(t, y))))) {
                        Membership out = verdict(Verdict::not_member, m, count);
                        out.witness = FourVector(t, y);
                        return out;
                    }
                    mn = std::min(mn, m);
                }
        margin = mn - (1.0 + L) * reach;
        if (margin > 0.0) return verdict(Verdict::member, margin, count);
    }
    return verdict(Verdict::inconclusive, margin, count);
}

std::string region_error(const SpacetimeRegion& r, const std::string& what) {
    return what + ": " + r.describe();
}

}  // namespace

bool achronally_separated(const FourVector& x, const FourVector& y) {
    if (same_point(x, y)) return false;
    return minkowski_square(x - y) <= 0.0;
}

std::string to_string(RegionKind k) {
    switch (k) {
        case RegionKind::ball_in_plane: return "ball_in_plane";
        case RegionKind::diamond: return "diamond";
        case RegionKind::point: return "point";
        case RegionKind::graph_patch: return "graph_patch";
        case RegionKind::unite: return "union";
        case RegionKind::intersect: return "intersection";
        case RegionKind::causal_complement: return "causal_complement";
    }
    return "?";
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::member: return "member";
        case Verdict::not_member: return "not_member";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "?";
}

SpacetimeRegion SpacetimeRegion::ball_in_plane(double t0, const Vec3& center, double r) {
    if (!(r > 0.0) || !std::isfinite(r) || !std::isfinite(t0) || !center.allFinite())
        throw Error(ErrorKind::invalid_argument, "ball_in_plane: radius must be positive and finite");
    SpacetimeRegion s;
    s.kind_ = RegionKind::ball_in_plane;
    s.t0_ = t0;
    s.c_ = center;
    s.r_ = r;
    s.p_ = FourVector(t0 - r, center);
    s.q_ = FourVector(t0 + r, center);
    s.patch_ = std::make_shared<Region>(Region{AchronalSurface::flat(t0), Mask::ball(center, r)});
    return s;
}

SpacetimeRegion SpacetimeRegion::diamond(const FourVector& p, const FourVector& q) {
    if (!p.is_finite() || !q.is_finite() || !future_timelike(q - p))
        throw Error(ErrorKind::invalid_argument, "diamond: q − p must be future timelike");
    SpacetimeRegion s;
    s.kind_ = RegionKind::diamond;
    s.p_ = p;
    s.q_ = q;
    const RestFrame f = rest_frame(p, q);
    s.r_ = f.r;
    s.t0_ = f.m.t;
    s.c_ = f.m.x;
    return s;
}

SpacetimeRegion SpacetimeRegion::diamond(double t0, const Vec3& center, double r) {
    if (!(r > 0.0)) throw Error(ErrorKind::invalid_argument, "diamond: radius must be positive");
    return diamond(FourVector(t0 - r, center), FourVector(t0 + r, center));
}

SpacetimeRegion SpacetimeRegion::point(const FourVector& p) {
    if (!p.is_finite()) throw Error(ErrorKind::invalid_argument, "point: non-finite coordinates");
    SpacetimeRegion s;
    s.kind_ = RegionKind::point;
    s.p_ = s.q_ = p;
    s.t0_ = p.t;
    s.c_ = p.x;
    return s;
}

SpacetimeRegion SpacetimeRegion::graph_patch(const Region& r) {
    if (auto pl = r.surface.plane(); pl && pl->first.isZero(0.0)) {
        if (auto b = r.mask.as_ball()) return ball_in_plane(pl->second, b->first, b->second);
    }
    SpacetimeRegion s;
    s.kind_ = RegionKind::graph_patch;
    s.patch_ = std::make_shared<Region>(r);
    return s;
}

SpacetimeRegion SpacetimeRegion::unite(const SpacetimeRegion& a, const SpacetimeRegion& b) {
    SpacetimeRegion s;
    s.kind_ = RegionKind::unite;
    s.parts_ = {a, b};
    return s;
}

SpacetimeRegion SpacetimeRegion::intersect(const SpacetimeRegion& a, const SpacetimeRegion& b) {
    SpacetimeRegion s;
    s.kind_ = RegionKind::intersect;
    s.parts_ = {a, b};
    return s;
}

SpacetimeRegion SpacetimeRegion::complement(const SpacetimeRegion& m) {
    SpacetimeRegion s;
    s.kind_ = RegionKind::causal_complement;
    s.parts_ = {m};
    return s;
}

const Region& SpacetimeRegion::patch() const {
    if (!patch_) throw Error(ErrorKind::invalid_argument, region_error(*this, "not a graph patch"));
    return *patch_;
}

bool SpacetimeRegion::contains(const FourVector& x) const {
    switch (kind_) {
        case RegionKind::ball_in_plane: return x.t == t0_ && (x.x - c_).norm() <= r_;
        case RegionKind::diamond: return future_causal(x - p_) && future_causal(q_ - x);
        case RegionKind::point: return same_point(x, p_);
        case RegionKind::graph_patch:
            return patch_->surface.in_domain(x.x) && patch_->mask.contains(x.x) && patch_->surface.tau(x.x) == x.t;
        case RegionKind::unite: return parts_[0].contains(x) || parts_[1].contains(x);
        case RegionKind::intersect: return parts_[0].contains(x) && parts_[1].contains(x);
        case RegionKind::causal_complement: return causal_complement_member(parts_[0], x).member();
    }
    return false;
}

std::string SpacetimeRegion::describe() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind_) {
        case RegionKind::ball_in_plane: os << "ball_in_plane(t0=" << t0_ << ",c=" << fmt(c_) << ",r=" << r_ << ")"; break;
        case RegionKind::diamond: os << "diamond(p=" << fmt(p_) << ",q=" << fmt(q_) << ")"; break;
        case RegionKind::point: os << "point" << fmt(p_); break;
        case RegionKind::graph_patch: os << "graph_patch(" << patch_->describe() << ")"; break;
        case RegionKind::unite: os << "union(" << parts_[0].describe() << "," << parts_[1].describe() << ")"; break;
        case RegionKind::intersect:
            os << "intersection(" << parts_[0].describe() << "," << parts_[1].describe() << ")";
            break;
        case RegionKind::causal_complement: os << "complement(" << parts_[0].describe() << ")"; break;
    }
    return os.str();
}

SpacetimeRegion SpacetimeRegion::transformed(const PoincareElement& g) const {
    switch (kind_) {
        case RegionKind::point: return point(act(g, p_));
        case RegionKind::diamond: return diamond(act(g, p_), act(g, q_));
        case RegionKind::ball_in_plane: {
            const Mat4& M = g.L.matrix();
            if (std::abs(M(0, 0) - 1.0) > 1e-14)
                throw Error(ErrorKind::unsupported, "ball_in_plane: only rotations and translations keep the form");
            const FourVector c = act(g, FourVector(t0_, c_));
            return ball_in_plane(c.t, c.x, r_);
        }
        case RegionKind::unite: return unite(parts_[0].transformed(g), parts_[1].transformed(g));
        case RegionKind::intersect: return intersect(parts_[0].transformed(g), parts_[1].transformed(g));
        case RegionKind::causal_complement: return complement(parts_[0].transformed(g));
        case RegionKind::graph_patch: break;
    }
    throw Error(ErrorKind::unsupported, region_error(*this, "transformed"));
}

Membership causal_complement_member(const SpacetimeRegion& M, const FourVector& x, const ComplementOptions& opt) {
    switch (M.kind()) {
        case RegionKind::point: {
            const bool sep = achronally_separated(x, M.bottom());
            const FourVector d = x - M.bottom();
            Membership m = verdict(sep ? Verdict::member : Verdict::not_member, d.x.norm() - std::abs(d.t));
            if (!sep) m.witness = M.bottom();
            return m;
        }
        case RegionKind::diamond: return diamond_complement(M.bottom(), M.top(), x);
        case RegionKind::ball_in_plane: {
            // ball^⊥ equals the complement of its diamond; the witness is
            // the nearest ball point
            Membership m = diamond_complement(M.bottom(), M.top(), x);
            if (m.verdict == Verdict::not_member) {
                const Vec3 d = x.x - M.center();
                const double a = d.norm();
                Vec3 y = x.x;
                if (a > M.radius()) {
                    Vec3 e = (M.radius() / a) * d;
                    while (e.norm() > M.radius()) e *= 1.0 - 0x1p-52;
                    y = M.center() + e;
                }
                m.witness = FourVector(M.t0(), y);
            }
            return m;
        }
        case RegionKind::graph_patch: return patch_complement(M.patch(), x, opt);
        case RegionKind::unite: {
            const Membership a = causal_complement_member(M.parts()[0], x, opt);
            if (a.verdict == Verdict::not_member) return a;
            const Membership b = causal_complement_member(M.parts()[1], x, opt);
            if (b.verdict == Verdict::not_member) return b;
            Membership m = verdict(a.member() && b.member() ? Verdict::member : Verdict::inconclusive,
                                   std::min(a.margin, b.margin), a.samples + b.samples);
            return m;
        }
        case RegionKind::intersect: {
            // A^⊥ ∪ B^⊥ ⊆ (A ∩ B)^⊥
            const Membership a = causal_complement_member(M.parts()[0], x, opt);
            if (a.member()) return a;
            const Membership b = causal_complement_member(M.parts()[1], x, opt);
            if (b.member()) return b;
            if (M.contains(x)) {
                Membership m = verdict(Verdict::not_member, 0.0);
                m.witness = x;
                return m;
            }
            return verdict(Verdict::inconclusive, std::max(a.margin, b.margin), a.samples + b.samples);
        }
        case RegionKind::causal_complement: return double_complement_member(M.parts()[0], x);
    }
    return {};
}

Membership double_complement_member(const SpacetimeRegion& M, const FourVector& x) {
    switch (M.kind()) {
        case RegionKind::point: {
            const FourVector p = M.bottom();
            if (same_point(x, p)) return verdict(Verdict::member, 0.0);
            // z ∈ {p}^⊥ timelike to x
            const FourVector d = x - p;
            const double sgn = d.t >= 0.0 ? 1.0 : -1.0;
            FourVector w;
            const double dn = d.x.norm();
            if (dn > 0.0) {
                w = FourVector(-sgn * dn, d.x);
            } else {
                const double e = 0.5 * std::abs(d.t);
                w = FourVector(-sgn * e, e * Vec3::UnitX());
            }
            Membership m = verdict(Verdict::not_member, -(std::abs(d.t - w.t) - (d.x - w.x).norm()));
            m.witness = p + w;
            return m;
        }
        case RegionKind::diamond:
        case RegionKind::ball_in_plane: return diamond_double_complement(M.bottom(), M.top(), x);
        default: break;
    }
    throw Error(ErrorKind::unsupported, region_error(M, "double complement has no closed form"));
}

Membership determinacy_member(const SpacetimeRegion& delta, const FourVector& x, const DeterminacyOptions& opt) {
    switch (delta.kind()) {
        case RegionKind::point: {
            const FourVector p = delta.bottom();
            if (same_point(x, p)) return verdict(Verdict::member, 0.0, 0);
            Membership m = verdict(Verdict::not_member, 0.0, 1);
            // the line through x with velocity v meets p iff p − x = s(1, v)
            const FourVector d = p - x;
            const bool vertical_hits = d.x.isZero(0.0);
            m.velocity = vertical_hits ? Vec3(0.5 * Vec3::UnitX()) : Vec3(Vec3::Zero());
            return m;
        }
        case RegionKind::ball_in_plane: {
            const Vec3 d = x.x - delta.center();
            const double a = d.norm();
            const double dt = std::abs(x.t - delta.t0());
            const double slack = delta.radius() - (dt + a);
            if (slack >= 0.0) return verdict(Verdict::member, slack, 0);
            Membership m = verdict(Verdict::not_member, slack, 1);
            // escaping line: reaches the plane at distance a + β·dt from c
            const Vec3 u = a > 0.0 ? Vec3(d / a) : Vec3::UnitX();
            double beta = 0.0;
            if (dt > 0.0) {
                const double need = (delta.radius() - a) / dt;
                beta = need < 0.0 ? 0.0 : 0.5 * (need + 1.0);
            }
            const double toward = x.t <= delta.t0() ? 1.0 : -1.0;
            m.velocity = toward * beta * u;
            return m;
        }
        case RegionKind::graph_patch: return patch_determinacy(delta.patch(), x, opt);
        default: break;
    }
    throw Error(ErrorKind::invalid_argument, region_error(delta, "determinacy requires a graph patch"));
}

namespace {

struct SampleBox {
    FourVector center;
    double half = 0.0;
};

SampleBox sample_box(const SpacetimeRegion& r) {
    switch (r.kind()) {
        case RegionKind::point: return {r.bottom(), 1.0};
        case RegionKind::ball_in_plane:
        case RegionKind::diamond: return {0.5 * (r.bottom() + r.top()), 0.75 * (r.top().t - r.bottom().t)};
        default: break;
    }
    throw Error(ErrorKind::unsupported, region_error(r, "no closed-form completion check"));
}

// signed offset from the diamond boundary in its rest frame
double boundary_offset(const SpacetimeRegion& r, const FourVector& x) {
    if (r.kind() == RegionKind::point) return std::numeric_limits<double>::infinity();
    const RestFrame f = rest_frame(r.bottom(), r.top());
    const FourVector y = f.to(x);
    return std::abs(y.t) + y.x.norm() - f.r;
}

std::vector<FourVector> stratified(const SampleBox& box, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<FourVector> out;
    out.reserve(n);
    std::size_t k = std::size_t(std::floor(std::pow(double(n), 0.25) + 1e-9));
    while (k > 1 && k * k * k * k > n) --k;
    const double w = 2.0 * box.half / double(std::max<std::size_t>(k, 1));
    auto coord = [&](std::size_t cell) { return -box.half + w * (double(cell) + U(rng)); };
    if (k >= 1)
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b)
                for (std::size_t c = 0; c < k; ++c)
                    for (std::size_t d = 0; d < k; ++d) {
                        if (out.size() == n) break;
                        out.push_back(box.center + FourVector(coord(a), coord(b), coord(c), coord(d)));
                    }
    while (out.size() < n) {
        auto u = [&] { return -box.half + 2.0 * box.half * U(rng); };
        out.push_back(box.center + FourVector(u(), u(), u(), u()));
    }
    return out;
}

Verdict determinacy_side(const SpacetimeRegion& d, const FourVector& x) {
    if (d.kind() == RegionKind::diamond) return d.contains(x) ? Verdict::member : Verdict::not_member;
    return determinacy_member(d, x).verdict;
}

}  // namespace

LogicReport completion_equals_determinacy_check(const SpacetimeRegion& delta, std::size_t samples, std::uint64_t seed,
                                                double shell) {
    const SampleBox box = sample_box(delta);
    std::vector<FourVector> xs = stratified(box, samples, seed);
    if (delta.kind() == RegionKind::point && !xs.empty()) xs.front() = delta.bottom();

    LogicReport rep;
    rep.samples = xs.size();
    for (const FourVector& x : xs) {
        if (std::abs(boundary_offset(delta, x)) < shell) {
            ++rep.shell;
            continue;
        }
        const Verdict a = determinacy_side(delta, x);
        const Verdict b = double_complement_member(delta, x).verdict;
        if (a == Verdict::inconclusive || b == Verdict::inconclusive) {
            ++rep.inconclusive;
            continue;
        }
        ++rep.considered;
        if (a == b) {
            ++rep.agreements;
        } else if (determinacy_side(delta, x) != double_complement_member(delta, x).verdict) {
            rep.counterexamples.push_back(x);
        }
    }
    return rep;
}

RclResult rcl_well_defined_check(const CurrentSpec& spec, const SpacetimeRegion& diamond, const Region& d1,
                                 const Region& d2, std::size_t samples, std::uint64_t seed,
                                 const LocalizationOptions& opt) {
    if (diamond.kind() != RegionKind::diamond)
        throw Error(ErrorKind::invalid_argument, region_error(diamond, "rcl check needs a diamond"));
    const SpacetimeRegion D1 = SpacetimeRegion::graph_patch(d1);
    const SpacetimeRegion D2 = SpacetimeRegion::graph_patch(d2);
    const double shell = 1e-3 * diamond.radius();

    RclResult out;
    LogicReport& rep = out.precondition;
    const std::vector<FourVector> xs = stratified(sample_box(diamond), samples, seed);
    rep.samples = xs.size();
    for (const FourVector& x : xs) {
        if (std::abs(boundary_offset(diamond, x)) < shell) {
            ++rep.shell;
            continue;
        }
        const Verdict want = diamond.contains(x) ? Verdict::member : Verdict::not_member;
        const Verdict v1 = determinacy_member(D1, x).verdict;
        const Verdict v2 = determinacy_member(D2, x).verdict;
        if (v1 == Verdict::inconclusive || v2 == Verdict::inconclusive) {
            ++rep.inconclusive;
            continue;
        }
        ++rep.considered;
        if (v1 == want && v2 == want) {
            ++rep.agreements;
        } else if (determinacy_member(D1, x).verdict != want || determinacy_member(D2, x).verdict != want) {
            rep.counterexamples.push_back(x);
        }
    }
    if (!rep.counterexamples.empty())
        throw Error(ErrorKind::determinacy, "determinacy sets differ from " + diamond.describe() + " at " +
                                                fmt(rep.counterexamples.front()) + " (" +
                                                std::to_string(rep.counterexamples.size()) + " points)");

    out.p1 = probability(spec, d1, opt);
    out.p2 = d1.describe() == d2.describe() ? out.p1 : probability(spec, d2, opt);
    out.relative_difference = std::abs(out.p1.probability - out.p2.probability) / out.p1.norm;
    return out;
}

}  // namespace achronal
