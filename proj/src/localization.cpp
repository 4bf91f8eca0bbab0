#include "achronal/localization.hpp"

#include "achronal/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace achronal {

class MaskNode {
public:
    virtual ~MaskNode() = default;
    virtual bool contains(const Vec3& x) const = 0;
    virtual double sd(const Vec3& x) const = 0;
    virtual std::optional<Box3> bounds() const = 0;
    virtual MaskKind kind() const = 0;
    virtual std::string describe() const = 0;
    // sd is the exact signed distance
    virtual bool exact_distance() const { return false; }
};

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

std::string fmt(const Vec3& v) {
    std::ostringstream os;
    os << '(' << v[0] << ',' << v[1] << ',' << v[2] << ')';
    return os.str();
}

Box3 empty_box() { return Box3(); }

class EmptyMask final : public MaskNode {
public:
    bool contains(const Vec3&) const override { return false; }
    double sd(const Vec3&) const override { return inf; }
    std::optional<Box3> bounds() const override { return empty_box(); }
    MaskKind kind() const override { return MaskKind::empty; }
    std::string describe() const override { return "empty"; }
};

class FullMask final : public MaskNode {
public:
    bool contains(const Vec3&) const override { return true; }
    double sd(const Vec3&) const override { return -inf; }
    std::optional<Box3> bounds() const override { return std::nullopt; }
    MaskKind kind() const override { return MaskKind::full; }
    std::string describe() const override { return "full"; }
};

class BallMask final : public MaskNode {
public:
    BallMask(const Vec3& c, double r) : c_(c), r_(r) {}
    bool contains(const Vec3& x) const override { return (x - c_).squaredNorm() < r_ * r_; }
    double sd(const Vec3& x) const override { return (x - c_).norm() - r_; }
    std::optional<Box3> bounds() const override { return Box3(c_ - Vec3::Constant(r_), c_ + Vec3::Constant(r_)); }
    MaskKind kind() const override { return MaskKind::ball; }
    std::string describe() const override {
        std::ostringstream os;
        os << "ball(center=" << fmt(c_) << ",r=" << r_ << ')';
        return os.str();
    }
    bool exact_distance() const override { return true; }
    Vec3 c_;
    double r_;
};

class BoxMask final : public MaskNode {
public:
    BoxMask(const Vec3& lo, const Vec3& hi) : lo_(lo), hi_(hi) {}
    bool contains(const Vec3& x) const override { return (x.array() > lo_.array()).all() && (x.array() < hi_.array()).all(); }
    double sd(const Vec3& x) const override {
        const Vec3 q = (lo_ - x).cwiseMax(x - hi_);
        return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
    }
    std::optional<Box3> bounds() const override { return Box3(lo_, hi_); }
    MaskKind kind() const override { return MaskKind::box; }
    std::string describe() const override { return "box(lo=" + fmt(lo_) + ",hi=" + fmt(hi_) + ")"; }
    bool exact_distance() const override { return true; }
    Vec3 lo_, hi_;
};

class HalfSpaceMask final : public MaskNode {
public:
    HalfSpaceMask(const Vec3& n, double c) : n_(n), c_(c) {}
    bool contains(const Vec3& x) const override { return n_.dot(x) > c_; }
    double sd(const Vec3& x) const override { return c_ - n_.dot(x); }
    std::optional<Box3> bounds() const override { return std::nullopt; }
    MaskKind kind() const override { return MaskKind::half_space; }
    std::string describe() const override {
        std::ostringstream os;
        os << "half_space(n=" << fmt(n_) << ",c=" << c_ << ')';
        return os.str();
    }
    bool exact_distance() const override { return true; }
    Vec3 n_;
    double c_;
};

class ComplementMask final : public MaskNode {
public:
    explicit ComplementMask(Mask m) : m_(std::move(m)) {}
    bool contains(const Vec3& x) const override { return !m_.contains(x); }
    double sd(const Vec3& x) const override { return -m_.sd(x); }
    std::optional<Box3> bounds() const override {
        if (m_.kind() == MaskKind::full) return empty_box();
        return std::nullopt;
    }
    MaskKind kind() const override { return MaskKind::complement; }
    std::string describe() const override { return "complement(" + m_.describe() + ")"; }
    Mask m_;
};

class UnionMask final : public MaskNode {
public:
    UnionMask(Mask a, Mask b) : a_(std::move(a)), b_(std::move(b)) {}
    bool contains(const Vec3& x) const override { return a_.contains(x) || b_.contains(x); }
    double sd(const Vec3& x) const override { return std::min(a_.sd(x), b_.sd(x)); }
    std::optional<Box3> bounds() const override {
        const auto a = a_.bounds(), b = b_.bounds();
        if (!a || !b) return std::nullopt;
        Box3 r = *a;
        r.extend(*b);
        return r;
    }
    MaskKind kind() const override { return MaskKind::unite; }
    std::string describe() const override { return "union(" + a_.describe() + "," + b_.describe() + ")"; }
    Mask a_, b_;
};

class IntersectMask final : public MaskNode {
public:
    IntersectMask(Mask a, Mask b) : a_(std::move(a)), b_(std::move(b)) {}
    bool contains(const Vec3& x) const override { return a_.contains(x) && b_.contains(x); }
    double sd(const Vec3& x) const override { return std::max(a_.sd(x), b_.sd(x)); }
    std::optional<Box3> bounds() const override {
        const auto a = a_.bounds(), b = b_.bounds();
        if (a && b) return a->intersection(*b);
        if (a) return a;
        return b;
    }
    MaskKind kind() const override { return MaskKind::intersect; }
    std::string describe() const override { return "intersection(" + a_.describe() + "," + b_.describe() + ")"; }
    Mask a_, b_;
};

class PullbackMask final : public MaskNode {
public:
    PullbackMask(const SurfaceTransform& tr, Mask m) : tr_(tr), m_(std::move(m)) {
        // S⁻¹ is Lipschitz with constant √2‖Λ⁻¹‖ because |dτ_g| ≤ |dy|
        const Mat4 Li = tr_.element().L.inverse().matrix();
        lip_ = std::sqrt(2.0) * Eigen::JacobiSVD<Mat4>(Li).singularValues()[0];
    }
    bool contains(const Vec3& y) const override {
        try {
            return m_.contains(tr_.inverse(y));
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::domain) return false;
            throw;
        }
    }
    double sd(const Vec3& y) const override {
        try {
            return m_.sd(tr_.inverse(y)) / lip_;
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::domain) return inf;
            throw;
        }
    }
    std::optional<Box3> bounds() const override {
        const auto b = m_.bounds();
        if (!b) return std::nullopt;
        if (b->isEmpty()) return b;
        // interval image of the graph over the box
        const AchronalSurface& s = tr_.base();
        const Vec3 c = b->center(), half = 0.5 * b->sizes();
        const double L = std::min(1.0, s.lipschitz());
        const double tc = s.tau(c), dt = L * half.norm();
        const Mat4& M = tr_.element().L.matrix();
        const Vec3 a = tr_.element().a.x;
        Vec3 lo, hi;
        for (int i = 0; i < 3; ++i) {
            double mid = a[i] + M(i + 1, 0) * tc, rad = std::abs(M(i + 1, 0)) * dt;
            for (int j = 0; j < 3; ++j) {
                mid += M(i + 1, j + 1) * c[j];
                rad += std::abs(M(i + 1, j + 1)) * half[j];
            }
            lo[i] = mid - rad - 1e-9;
            hi[i] = mid + rad + 1e-9;
        }
        return Box3(lo, hi);
    }
    MaskKind kind() const override { return MaskKind::pullback; }
    std::string describe() const override { return "pullback(" + m_.describe() + ")"; }
    SurfaceTransform tr_;
    Mask m_;
    double lip_;
};

class ShadowMask final : public MaskNode {
public:
    ShadowMask(Mask src, double t0, AchronalSurface target) : src_(std::move(src)), t0_(t0), target_(std::move(target)) {}
    bool contains(const Vec3& y) const override {
        if (!target_.in_domain(y)) return false;
        return src_.sd(y) <= std::abs(target_.tau(y) - t0_);
    }
    double sd(const Vec3& y) const override {
        if (!target_.in_domain(y)) return inf;
        return 0.5 * (src_.sd(y) - std::abs(target_.tau(y) - t0_));
    }
    std::optional<Box3> bounds() const override {
        const double L = target_.lipschitz();
        const auto b = src_.bounds();
        if (!b || !(L < 1.0) || !target_.maximal()) return std::nullopt;
        const Vec3 c = b->center();
        const double r = 0.5 * b->sizes().norm();
        const double R = (r + std::abs(target_.tau(c) - t0_)) / (1.0 - L) + 1e-9;
        return Box3(c - Vec3::Constant(R), c + Vec3::Constant(R));
    }
    MaskKind kind() const override { return MaskKind::shadow; }
    std::string describe() const override {
        std::ostringstream os;
        os << "shadow(" << src_.describe() << ",t0=" << t0_ << ",target=" << target_.describe() << ')';
        return os.str();
    }
    Mask src_;
    double t0_;
    AchronalSurface target_;
};

}  // namespace

Mask Mask::empty() { return Mask(std::make_shared<EmptyMask>()); }
Mask Mask::full() { return Mask(std::make_shared<FullMask>()); }

Mask Mask::ball(const Vec3& center, double radius) {
    if (!center.allFinite() || !(radius >= 0.0) || !std::isfinite(radius)) {
        throw Error(ErrorKind::invalid_argument, "ball mask needs a finite center and radius >= 0");
    }
    return Mask(std::make_shared<BallMask>(center, radius));
}

Mask Mask::box(const Vec3& lo, const Vec3& hi) {
    if (!lo.allFinite() || !hi.allFinite() || !(lo.array() <= hi.array()).all()) {
        throw Error(ErrorKind::invalid_argument, "box mask needs finite corners with lo <= hi");
    }
    return Mask(std::make_shared<BoxMask>(lo, hi));
}

Mask Mask::half_space(const Vec3& normal, double c) {
    const double n = normal.norm();
    if (!(n > 0.0) || !std::isfinite(n) || !std::isfinite(c)) {
        throw Error(ErrorKind::invalid_argument, "half-space mask needs a nonzero normal");
    }
    return Mask(std::make_shared<HalfSpaceMask>(normal / n, c / n));
}

Mask Mask::unite(const Mask& a, const Mask& b) { return Mask(std::make_shared<UnionMask>(a, b)); }
Mask Mask::intersect(const Mask& a, const Mask& b) { return Mask(std::make_shared<IntersectMask>(a, b)); }
Mask Mask::complement() const { return Mask(std::make_shared<ComplementMask>(*this)); }
Mask Mask::pullback(const SurfaceTransform& tr, const Mask& m) { return Mask(std::make_shared<PullbackMask>(tr, m)); }

Mask Mask::shadow(const Mask& source, double t0, const AchronalSurface& target) {
    if (!source.node_->exact_distance() || source.kind() == MaskKind::half_space) {
        throw Error(ErrorKind::unsupported, "no closed-form causal shadow for mask " + source.describe());
    }
    return Mask(std::make_shared<ShadowMask>(source, t0, target));
}

bool Mask::contains(const Vec3& x) const { return node_->contains(x); }
double Mask::sd(const Vec3& x) const { return node_->sd(x); }
std::optional<Box3> Mask::bounds() const { return node_->bounds(); }
MaskKind Mask::kind() const { return node_->kind(); }
std::string Mask::describe() const { return node_->describe(); }

std::optional<std::pair<Vec3, double>> Mask::as_ball() const {
    if (const auto* b = dynamic_cast<const BallMask*>(node_.get())) return std::pair{b->c_, b->r_};
    return std::nullopt;
}

SpatialGrid window_quadrature_grid(const MomentumGrid& mg, const LocalizationOptions& opt) {
    return window_grid(mg, SliceOptions{opt.oversample, opt.window_nodes});
}

SpatialGrid quadrature_grid(const MomentumGrid& mg, const Mask& mask, const LocalizationOptions& opt, bool* window) {
    const SpatialGrid w = window_quadrature_grid(mg, opt);
    const auto b = mask.bounds();
    const Box3 wbox(w.origin, w.node(w.n[0] - 1, w.n[1] - 1, w.n[2] - 1));
    if (!b || b->isEmpty() || !wbox.contains(*b)) {
        if (window) *window = true;
        return w;
    }
    if (opt.refine < 1 || opt.pad < 1) throw Error(ErrorKind::invalid_argument, "refine and pad must be >= 1");
    double d = std::numbers::pi / (opt.refine * mg.extent());
    const double ext = b->sizes().maxCoeff();
    const int cap = std::max(opt.max_local_nodes, 8);
    if (ext / d + 2 * opt.pad + 2 > cap) d = ext / (cap - 2 * opt.pad - 2);
    SpatialGrid g;
    g.spacing = d;
    std::array<long, 3> lo{};
    for (int a = 0; a < 3; ++a) {
        // aligned to the global lattice dℤ³ so that placement does not follow the mask
        lo[a] = long(std::floor(b->min()[a] / d)) - opt.pad;
        const long hi = long(std::ceil(b->max()[a] / d)) + opt.pad;
        g.n[a] = int(hi - lo[a] + 1);
        g.origin[a] = lo[a] * d;
    }
    if (window) *window = false;
    return g;
}

FluxField::FluxField(const CurrentSpec& spec, const AchronalSurface& surface, const SpatialGrid& grid,
                     bool window_lattice, const LocalizationOptions& opt)
    : surface_(surface), grid_(grid), window_(window_lattice), opt_(opt) {
    norm_ = norm_squared(spec.packet());
    const std::size_t n = grid_.size();
    h_.assign(n, 0.0);
    grad_h_.assign(n, Vec3::Zero());
    defined_.assign(n, true);
    std::vector<double> tau(n, 0.0);
    std::vector<Vec3> grad(n, Vec3::Zero());
    double tmin = inf, tmax = -inf;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 x = grid_.node(i);
        if (!surface_.in_domain(x)) {
            defined_[i] = false;
            continue;
        }
        tau[i] = surface_.tau(x);
        grad[i] = surface_.gradient(x);
        tmin = std::min(tmin, tau[i]);
        tmax = std::max(tmax, tau[i]);
    }
    if (!(tmin <= tmax)) return;

    // Chebyshev–Lobatto interpolation in time; J is a trigonometric sum with
    // frequencies in [−ω, ω], so the degree follows from (ωL/2)^{d+1}/(2^d (d+1)!)
    const double omega = spec.bandwidth(), len = tmax - tmin, mid = 0.5 * (tmin + tmax);
    int deg = 0;
    double bound = 0.0;
    if (len > 1e-14 * (1.0 + std::abs(mid)) && omega > 0.0) {
        const double q = 0.5 * omega * len;
        for (deg = 1; deg < 400; ++deg) {
            bound = std::exp((deg + 1) * std::log(q) - deg * std::log(2.0) - std::lgamma(deg + 2.0));
            if (bound <= opt.chebyshev_tolerance) break;
        }
    }
    std::vector<double> tk(deg + 1), lam(deg + 1);
    for (int k = 0; k <= deg; ++k) {
        tk[k] = deg == 0 ? mid : mid + 0.5 * len * std::cos(k * std::numbers::pi / deg);
        lam[k] = ((k % 2) ? -1.0 : 1.0) * ((k == 0 || k == deg) ? 0.5 : 1.0);
    }
    time_nodes_ = deg + 1;
    // |J^μ| ≤ c (Σ|φ|√ε)², used to scale the interpolation bound
    double amp = 0.0;
    for (std::size_t b = 0; b < spec.size(); ++b) amp += std::abs(spec.values()[b]) * std::sqrt(spec.energies()[b]);
    cheb_bound_ = 2.0 * bound * spec.prefactor() * amp * amp;

    std::vector<double> denom(n, 0.0);
    std::vector<int> hit(n, -1);
    if (deg > 0) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!defined_[i]) continue;
            for (int k = 0; k <= deg; ++k) {
                const double d = tau[i] - tk[k];
                if (d == 0.0) {
                    hit[i] = k;
                    break;
                }
                denom[i] += lam[k] / d;
            }
        }
    }
    const SliceOptions sopt{opt.oversample, opt.window_nodes};
    for (int k = 0; k <= deg; ++k) {
        const PairSpectrum ps = PairSpectrum::compute(spec, tk[k]);
        const Slice s = window_ ? ps.fft(sopt) : ps.on_grid(grid_);
        if (!(s.grid == grid_)) throw Error(ErrorKind::grid_mismatch, "slice grid differs from the quadrature grid");
        for (std::size_t i = 0; i < n; ++i) {
            if (!defined_[i]) continue;
            max_j0_ = std::max(max_j0_, s.J[0][i]);
            double l = 1.0;
            if (deg > 0) l = hit[i] >= 0 ? (hit[i] == k ? 1.0 : 0.0) : lam[k] / (tau[i] - tk[k]) / denom[i];
            if (l == 0.0) continue;
            h_[i] += l * (s.J[0][i] - s.J[1][i] * grad[i][0] - s.J[2][i] * grad[i][1] - s.J[3][i] * grad[i][2]);
        }
    }

    // central differences of the integrand for the boundary-cell correction
    const double dx = grid_.spacing;
    for (int i = 0; i < grid_.n[0]; ++i) {
        for (int j = 0; j < grid_.n[1]; ++j) {
            for (int k = 0; k < grid_.n[2]; ++k) {
                const std::size_t c = grid_.index(i, j, k);
                if (!defined_[c]) continue;
                for (int a = 0; a < 3; ++a) {
                    auto at = [&](int off) -> std::optional<double> {
                        int q[3] = {i, j, k};
                        q[a] += off;
                        if (q[a] < 0 || q[a] >= grid_.n[a]) return std::nullopt;
                        const std::size_t idx = grid_.index(q[0], q[1], q[2]);
                        if (!defined_[idx]) return std::nullopt;
                        return h_[idx];
                    };
                    const auto p = at(1), m = at(-1);
                    if (p && m) grad_h_[c][a] = (*p - *m) / (2 * dx);
                    else if (p) grad_h_[c][a] = (*p - h_[c]) / dx;
                    else if (m) grad_h_[c][a] = (h_[c] - *m) / dx;
                }
            }
        }
    }
}

FluxField::Weights FluxField::mask_weights(const Mask& mask) const {
    const std::size_t n = grid_.size();
    Weights W;
    W.w.assign(n, 0.0);
    W.offsets.assign(n, {0, 0, 0});
    const int m = std::max(opt_.subsamples, 1);
    const double d = grid_.spacing, half_diag = 0.5 * std::sqrt(3.0) * d;
    const double per = 1.0 / double(m * m * m);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 x = grid_.node(i);
        const double s = mask.sd(x);
        if (!(std::abs(s) < half_diag)) {
            if (mask.contains(x)) {
                if (!defined_[i]) throw Error(ErrorKind::domain, "mask extends beyond the surface domain at " + fmt(x));
                W.w[i] = 1.0;
            }
            continue;
        }
        int count = 0;
        std::array<int, 3> off{0, 0, 0};
        for (int a = 0; a < m; ++a) {
            for (int b = 0; b < m; ++b) {
                for (int c = 0; c < m; ++c) {
                    // offsets (2k+1−m)/(2m)·δ
                    const int oa = 2 * a + 1 - m, ob = 2 * b + 1 - m, oc = 2 * c + 1 - m;
                    const Vec3 y = x + (d / (2.0 * m)) * Vec3(oa, ob, oc);
                    if (mask.contains(y)) {
                        ++count;
                        off[0] += oa;
                        off[1] += ob;
                        off[2] += oc;
                    }
                }
            }
        }
        if (count > 0 && !defined_[i]) throw Error(ErrorKind::domain, "mask extends beyond the surface domain at " + fmt(x));
        W.w[i] = count * per;
        W.offsets[i] = off;
    }
    return W;
}

std::vector<double> FluxField::weights(const Mask& mask) const { return mask_weights(mask).w; }

LocalizationResult FluxField::integrate(const Mask& mask) const {
    LocalizationResult r;
    r.surface = surface_.describe();
    r.mask = mask.describe();
    r.grid = grid_;
    r.window_lattice = window_;
    r.time_nodes = time_nodes_;
    r.norm = norm_;
    const Weights W = mask_weights(mask);
    const int m = std::max(opt_.subsamples, 1);
    const double d = grid_.spacing, vol = d * d * d;
    const double unit = d / (2.0 * m) / double(m * m * m);
    double sum = 0.0, corr = 0.0, wsum = 0.0, tail = 0.0, hmin = inf;
    for (int i = 0; i < grid_.n[0]; ++i) {
        for (int j = 0; j < grid_.n[1]; ++j) {
            for (int k = 0; k < grid_.n[2]; ++k) {
                const std::size_t c = grid_.index(i, j, k);
                const double w = W.w[c];
                if (w == 0.0) continue;
                double v = w * h_[c];
                if (opt_.centroid_correction && w < 1.0) {
                    const auto& o = W.offsets[c];
                    const double dc = unit * (grad_h_[c][0] * o[0] + grad_h_[c][1] * o[1] + grad_h_[c][2] * o[2]);
                    corr += dc;
                    v += dc;
                }
                sum += v;
                wsum += w;
                hmin = std::min(hmin, h_[c]);
                const bool shell = i < 2 || j < 2 || k < 2 || i >= grid_.n[0] - 2 || j >= grid_.n[1] - 2 ||
                                   k >= grid_.n[2] - 2;
                if (shell) tail += std::abs(v);
            }
        }
    }
    r.probability = sum * vol;
    r.tail = window_ ? tail * vol : 0.0;
    r.tail_warning = window_ && r.tail > 0.1 * opt_.tail_budget * norm_;
    r.error = cheb_bound_ * wsum * vol + r.tail + std::abs(corr) * vol;
    r.min_integrand = (max_j0_ > 0.0 && hmin < inf) ? hmin / max_j0_ : 0.0;
    return r;
}

LocalizationResult probability(const CurrentSpec& spec, const Region& region, const LocalizationOptions& opt) {
    const auto b = region.mask.bounds();
    if (b && b->isEmpty()) {
        LocalizationResult r;
        r.surface = region.surface.describe();
        r.mask = region.mask.describe();
        r.norm = norm_squared(spec.packet());
        return r;
    }
    bool window = false;
    const SpatialGrid g = quadrature_grid(spec.packet().grid(), region.mask, opt, &window);
    return FluxField(spec, region.surface, g, window, opt).integrate(region.mask);
}

InvarianceReport flux_invariance_report(const CurrentSpec& spec, const std::vector<AchronalSurface>& surfaces,
                                        const LocalizationOptions& opt) {
    InvarianceReport rep;
    for (const auto& s : surfaces) {
        if (!s.maximal()) throw Error(ErrorKind::invalid_argument, "flux invariance needs maximal surfaces");
        rep.results.push_back(probability(spec, Region{s, Mask::full()}, opt));
        rep.tail_warning = rep.tail_warning || rep.results.back().tail_warning;
    }
    for (std::size_t i = 0; i < rep.results.size(); ++i) {
        for (std::size_t j = i + 1; j < rep.results.size(); ++j) {
            const double a = rep.results[i].probability, b = rep.results[j].probability;
            const double scale = std::max(std::abs(a), std::abs(b));
            if (scale > 0.0) rep.max_deviation = std::max(rep.max_deviation, std::abs(a - b) / scale);
        }
    }
    return rep;
}

CovarianceResult covariance_check(const CurrentSpec& spec, const PoincareElement& g, const Region& region,
                                  const LocalizationOptions& opt, InterpolationMethod interp) {
    CovarianceResult r;
    const CurrentSpec lhs_spec = spec.with_packet(apply_poincare(g.inverse(), spec.packet(), interp));
    r.lhs = probability(lhs_spec, region, opt);

    const SurfaceTransform tr(g, region.surface);
    Region image{tr.surface(), region.mask.kind() == MaskKind::full ? Mask::full() : Mask::pullback(tr, region.mask)};
    KernelSpec k = spec.kernel();
    if (const auto* t = std::get_if<TensorKernel>(&k)) k = t->transformed(g.L);
    r.rhs = probability(spec.with_kernel(k), image, opt);
    const double scale = std::max(std::abs(r.lhs.probability), std::abs(r.rhs.probability));
    r.relative_difference = scale > 0.0 ? std::abs(r.lhs.probability - r.rhs.probability) / scale : 0.0;
    return r;
}

AdditivityResult additivity_check(const CurrentSpec& spec, const AchronalSurface& surface,
                                  const std::vector<Mask>& partition, const LocalizationOptions& opt) {
    if (partition.empty()) throw Error(ErrorKind::invalid_argument, "empty partition");
    const SpatialGrid g = window_quadrature_grid(spec.packet().grid(), opt);
    const FluxField field(spec, surface, g, true, opt);
    std::vector<double> total(g.size(), 0.0);
    AdditivityResult r;
    r.norm = norm_squared(spec.packet());
    for (std::size_t k = 0; k < partition.size(); ++k) {
        const auto w = field.weights(partition[k]);
        for (std::size_t i = 0; i < w.size(); ++i) {
            total[i] += w[i];
            if (total[i] > 1.0 + 1e-9) {
                throw Error(ErrorKind::overlap, "mask " + partition[k].describe() + " overlaps an earlier mask near " +
                                                    fmt(g.node(i)));
            }
        }
        r.probabilities.push_back(field.integrate(partition[k]).probability);
        r.sum += r.probabilities.back();
    }
    r.residual = r.norm > 0.0 ? std::abs(r.sum - r.norm) / r.norm : std::abs(r.sum);
    return r;
}

cplx matrix_element(const WavePacket& phi, const WavePacket& psi, const KernelSpec& kernel, const Region& region,
                    const LocalizationOptions& opt) {
    if (!(phi.grid() == psi.grid()) || phi.mass() != psi.mass()) {
        throw Error(ErrorKind::grid_mismatch, "matrix element needs packets on the same grid and mass");
    }
    const auto b = region.mask.bounds();
    if (b && b->isEmpty()) return 0.0;
    bool window = false;
    const SpatialGrid g = quadrature_grid(phi.grid(), region.mask, opt, &window);
    const std::array<cplx, 4> zetas{cplx(1, 0), cplx(-1, 0), cplx(0, 1), cplx(0, -1)};
    cplx acc = 0.0;
    for (const cplx z : zetas) {
        const CurrentSpec s(phi.scaled(z) + psi, kernel);
        acc += z * FluxField(s, region.surface, g, window, opt).integrate(region.mask).probability;
    }
    return 0.25 * acc;
}

MonotonicityResult causal_monotonicity_check(const CurrentSpec& spec, const Region& delta,
                                             const AchronalSurface& target, const LocalizationOptions& opt) {
    const auto plane = delta.surface.plane();
    if (!plane || !plane->first.isZero(0.0)) {
        throw Error(ErrorKind::unsupported, "causal shadow needs a source region on a flat surface");
    }
    const double t0 = plane->second;
    MonotonicityResult r;
    r.target_region.surface = target;
    if (delta.mask.kind() == MaskKind::full) {
        r.target_region.mask = Mask::full();
    } else if (delta.mask.kind() == MaskKind::empty) {
        r.target_region.mask = Mask::empty();
    } else {
        const auto tp = target.plane();
        const auto ball = delta.mask.as_ball();
        if (ball && tp && tp->first.isZero(0.0)) {
            r.target_region.mask = Mask::ball(ball->first, ball->second + std::abs(tp->second - t0));
        } else {
            r.target_region.mask = Mask::shadow(delta.mask, t0, target);
        }
    }
    r.source = probability(spec, delta, opt);
    r.target = probability(spec, r.target_region, opt);
    r.margin = r.target.probability - r.source.probability;
    return r;
}

}  // namespace achronal
