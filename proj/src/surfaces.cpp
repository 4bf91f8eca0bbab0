#include "achronal/surfaces.hpp"

#include "achronal/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace achronal {

namespace {

constexpr double slope_slack = 1e-12;

std::string fmt(const Vec3& v) {
    std::ostringstream os;
    os << '(' << v[0] << ',' << v[1] << ',' << v[2] << ')';
    return os.str();
}

class FlatImpl final : public SurfaceImpl {
public:
    explicit FlatImpl(double t0) : t0_(t0) {}
    double tau(const Vec3&) const override { return t0_; }
    GradientSample gradient(const Vec3&) const override { return {}; }
    SurfaceKind kind() const override { return SurfaceKind::flat; }
    double lipschitz() const override { return 0.0; }
    std::string describe() const override { return "flat(t0=" + std::to_string(t0_) + ")"; }
    double parameter() const override { return t0_; }
    double t0_;
};

class TiltedImpl final : public SurfaceImpl {
public:
    TiltedImpl(const Vec3& e, double o) : e_(e), o_(o) {}
    double tau(const Vec3& x) const override { return e_.dot(x) + o_; }
    GradientSample gradient(const Vec3&) const override { return {e_, true}; }
    SurfaceKind kind() const override { return SurfaceKind::tilted; }
    double lipschitz() const override { return e_.norm(); }
    std::string describe() const override { return "tilted(e=" + fmt(e_) + ",offset=" + std::to_string(o_) + ")"; }
    double parameter() const override { return e_.norm(); }
    Vec3 e_;
    double o_;
};

class BumpImpl final : public SurfaceImpl {
public:
    BumpImpl(double l, double s, double o) : l_(l), s_(s), o_(o) {}
    double tau(const Vec3& x) const override {
        const double q = x.squaredNorm() / (s_ * s_);
        // s(√(1+q) − 1) = s q / (√(1+q) + 1) avoids cancellation near 0
        return o_ + l_ * s_ * q / (std::sqrt(1.0 + q) + 1.0);
    }
    GradientSample gradient(const Vec3& x) const override {
        return {l_ * x / (s_ * std::sqrt(1.0 + x.squaredNorm() / (s_ * s_))), true};
    }
    SurfaceKind kind() const override { return SurfaceKind::bump; }
    double lipschitz() const override { return std::abs(l_); }
    std::string describe() const override {
        return "bump(lambda=" + std::to_string(l_) + ",scale=" + std::to_string(s_) + ",offset=" + std::to_string(o_) + ")";
    }
    double parameter() const override { return l_; }
    double l_, s_, o_;
};

class ConeImpl final : public SurfaceImpl {
public:
    ConeImpl(double g, const Vec3& apex, double o) : g_(g), apex_(apex), o_(o) {}
    double tau(const Vec3& x) const override { return o_ + g_ * (x - apex_).norm(); }
    GradientSample gradient(const Vec3& x) const override {
        const Vec3 d = x - apex_;
        const double r = d.norm();
        // the apex reports the one-sided value along +x₁
        if (r == 0.0) return {g_ * Vec3::UnitX(), false};
        return {g_ * d / r, true};
    }
    SurfaceKind kind() const override { return SurfaceKind::cone; }
    double lipschitz() const override { return std::abs(g_); }
    std::string describe() const override {
        return "cone(gamma=" + std::to_string(g_) + ",apex=" + fmt(apex_) + ",offset=" + std::to_string(o_) + ")";
    }
    double parameter() const override { return g_; }
    double g_;
    Vec3 apex_;
    double o_;
};

class SampledImpl final : public SurfaceImpl {
public:
    SampledImpl(const SpatialGrid& g, std::vector<double> v) : grid_(g), val_(std::move(v)) {
        for (int a = 0; a < 3; ++a) {
            if (grid_.n[a] < 2) throw Error(ErrorKind::invalid_argument, "sampled surface needs two nodes per axis");
        }
        if (!(grid_.spacing > 0.0)) throw Error(ErrorKind::invalid_argument, "sampled surface spacing must be positive");
        if (val_.size() != grid_.size()) throw Error(ErrorKind::invalid_argument, "sampled surface value count mismatch");
        for (double v : val_) {
            if (!std::isfinite(v)) throw Error(ErrorKind::invalid_argument, "sampled surface values must be finite");
        }
        validate();
        node_gradients();
    }

    double tau(const Vec3& x) const override {
        double out = 0.0;
        interpolate(x, [&](std::size_t i, double w) { out += w * val_[i]; });
        return out;
    }
    GradientSample gradient(const Vec3& x) const override {
        Vec3 out = Vec3::Zero();
        interpolate(x, [&](std::size_t i, double w) { out += w * grad_[i]; });
        return {out, true};
    }
    SurfaceKind kind() const override { return SurfaceKind::sampled; }
    double lipschitz() const override { return L_; }
    bool maximal() const override { return false; }
    bool in_domain(const Vec3& x) const override {
        for (int a = 0; a < 3; ++a) {
            const double u = (x[a] - grid_.origin[a]) / grid_.spacing;
            if (!(u >= -1e-12 && u <= grid_.n[a] - 1 + 1e-12)) return false;
        }
        return true;
    }
    std::string describe() const override {
        std::ostringstream os;
        os << "sampled(n=" << grid_.n[0] << 'x' << grid_.n[1] << 'x' << grid_.n[2] << ",spacing=" << grid_.spacing
           << ",L=" << L_ << ')';
        return os.str();
    }
    double parameter() const override { return L_; }

private:
    template <class F>
    void interpolate(const Vec3& x, F&& f) const {
        if (!in_domain(x)) throw Error(ErrorKind::domain, "point " + fmt(x) + " outside the sampled surface domain");
        int c[3];
        double w[3];
        for (int a = 0; a < 3; ++a) {
            const double u = std::clamp((x[a] - grid_.origin[a]) / grid_.spacing, 0.0, double(grid_.n[a] - 1));
            c[a] = std::min(int(u), grid_.n[a] - 2);
            w[a] = u - c[a];
        }
        for (int i = 0; i < 8; ++i) {
            const int d0 = i >> 2, d1 = (i >> 1) & 1, d2 = i & 1;
            const double wt = (d0 ? w[0] : 1 - w[0]) * (d1 ? w[1] : 1 - w[1]) * (d2 ? w[2] : 1 - w[2]);
            if (wt != 0.0) f(grid_.index(c[0] + d0, c[1] + d1, c[2] + d2), wt);
        }
    }

    void validate() {
        L_ = 0.0;
        const auto& n = grid_.n;
        for (int i = 0; i < n[0]; ++i) {
            for (int j = 0; j < n[1]; ++j) {
                for (int k = 0; k < n[2]; ++k) {
                    for (int di = 0; di <= 1; ++di) {
                        for (int dj = -1; dj <= 1; ++dj) {
                            for (int dk = -1; dk <= 1; ++dk) {
                                // each unordered neighbour pair once
                                if (di == 0 && (dj < 0 || (dj == 0 && dk <= 0))) continue;
                                const int a = i + di, b = j + dj, c = k + dk;
                                if (a >= n[0] || b < 0 || b >= n[1] || c < 0 || c >= n[2]) continue;
                                const double dx = grid_.spacing * std::sqrt(double(di * di + dj * dj + dk * dk));
                                const double dt = std::abs(val_[grid_.index(i, j, k)] - val_[grid_.index(a, b, c)]);
                                L_ = std::max(L_, dt / dx);
                                if (dt > dx + slope_slack) {
                                    std::ostringstream os;
                                    os << "sampled surface is not 1-Lipschitz between nodes (" << i << ',' << j << ','
                                       << k << ") and (" << a << ',' << b << ',' << c << "): |dt| = " << dt
                                       << " > |dx| = " << dx;
                                    throw Error(ErrorKind::invalid_argument, os.str());
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    void node_gradients() {
        const auto& n = grid_.n;
        const double h = grid_.spacing;
        grad_.assign(grid_.size(), Vec3::Zero());
        for (int i = 0; i < n[0]; ++i) {
            for (int j = 0; j < n[1]; ++j) {
                for (int k = 0; k < n[2]; ++k) {
                    const int c[3] = {i, j, k};
                    Vec3 g;
                    for (int a = 0; a < 3; ++a) {
                        auto at = [&](int off) {
                            int d[3] = {i, j, k};
                            d[a] += off;
                            return val_[grid_.index(d[0], d[1], d[2])];
                        };
                        if (c[a] > 0 && c[a] < n[a] - 1) g[a] = (at(1) - at(-1)) / (2 * h);
                        else if (n[a] == 2) g[a] = c[a] == 0 ? (at(1) - at(0)) / h : (at(0) - at(-1)) / h;
                        else if (c[a] == 0) g[a] = (-3 * at(0) + 4 * at(1) - at(2)) / (2 * h);
                        else g[a] = (3 * at(0) - 4 * at(-1) + at(-2)) / (2 * h);
                    }
                    grad_[grid_.index(i, j, k)] = g;
                }
            }
        }
    }

    SpatialGrid grid_;
    std::vector<double> val_;
    std::vector<Vec3> grad_;
    double L_ = 0.0;
};

double boost_speed(const LorentzTransform& L) {
    const double g = L.matrix()(0, 0);
    return std::sqrt(std::max(0.0, 1.0 - 1.0 / (g * g)));
}

class TransformedImpl final : public SurfaceImpl {
public:
    TransformedImpl(const PoincareElement& g, AchronalSurface base) : g_(g), base_(std::move(base)) {
        // relativistic addition bounds the slope of the image
        const double l = std::min(1.0, base_.lipschitz()), v = boost_speed(g_.L);
        L_ = std::min(1.0, (l + v) / (1.0 + l * v));
    }
    double tau(const Vec3& y) const override { return graph_preimage(g_, base_, y).first; }
    GradientSample gradient(const Vec3& y) const override {
        const Vec3 x = graph_preimage(g_, base_, y).second;
        const GradientSample b = base_.gradient_info(x);
        return {transformed_gradient(g_.L, b.value), b.differentiable};
    }
    SurfaceKind kind() const override { return SurfaceKind::transformed; }
    double lipschitz() const override { return L_; }
    bool maximal() const override { return base_.maximal(); }
    bool in_domain(const Vec3& y) const override {
        if (base_.maximal()) return true;
        try {
            (void)graph_preimage(g_, base_, y);
            return true;
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::domain) return false;
            throw;
        }
    }
    std::string describe() const override { return "transformed(" + base_.describe() + ")"; }
    double parameter() const override { return L_; }

private:
    PoincareElement g_;
    AchronalSurface base_;
    double L_;
};

}  // namespace

std::string to_string(SurfaceKind k) {
    switch (k) {
        case SurfaceKind::flat: return "flat";
        case SurfaceKind::tilted: return "tilted";
        case SurfaceKind::bump: return "bump";
        case SurfaceKind::cone: return "cone";
        case SurfaceKind::sampled: return "sampled";
        case SurfaceKind::transformed: return "transformed";
    }
    return "?";
}

AchronalSurface AchronalSurface::flat(double t0) {
    if (!std::isfinite(t0)) throw Error(ErrorKind::invalid_argument, "flat surface time must be finite");
    return {std::make_shared<FlatImpl>(t0), 1.0};
}

AchronalSurface AchronalSurface::tilted(const Vec3& e, double offset) {
    if (!e.allFinite() || !std::isfinite(offset)) throw Error(ErrorKind::invalid_argument, "tilted surface must be finite");
    if (e.norm() > 1.0 + slope_slack) throw Error(ErrorKind::invalid_argument, "tilted surface needs |e| <= 1");
    return {std::make_shared<TiltedImpl>(e, offset), 1.0};
}

AchronalSurface AchronalSurface::bump(double lambda, double scale, double offset) {
    if (!(std::abs(lambda) < 1.0)) throw Error(ErrorKind::invalid_argument, "bump surface needs |lambda| < 1");
    if (!(scale > 0.0) || !std::isfinite(scale)) throw Error(ErrorKind::invalid_argument, "bump scale must be positive");
    if (!std::isfinite(offset)) throw Error(ErrorKind::invalid_argument, "bump offset must be finite");
    return {std::make_shared<BumpImpl>(lambda, scale, offset), 1.0};
}

AchronalSurface AchronalSurface::cone(double gamma, const Vec3& apex, double offset) {
    if (!(std::abs(gamma) <= 1.0)) throw Error(ErrorKind::invalid_argument, "cone surface needs |gamma| <= 1");
    if (!apex.allFinite() || !std::isfinite(offset)) throw Error(ErrorKind::invalid_argument, "cone apex must be finite");
    return {std::make_shared<ConeImpl>(gamma, apex, offset), 1.0};
}

AchronalSurface AchronalSurface::sampled(const SpatialGrid& grid, std::vector<double> values) {
    return {std::make_shared<SampledImpl>(grid, std::move(values)), 1.0};
}

double AchronalSurface::tau(const Vec3& x) const {
    if (!x.allFinite()) throw Error(ErrorKind::domain, "surface evaluated at a non-finite point");
    return scale_ * impl_->tau(x);
}

GradientSample AchronalSurface::gradient_info(const Vec3& x) const {
    if (!x.allFinite()) throw Error(ErrorKind::domain, "surface evaluated at a non-finite point");
    GradientSample g = impl_->gradient(x);
    g.value *= scale_;
    return g;
}

SurfaceKind AchronalSurface::kind() const { return impl_->kind(); }
double AchronalSurface::lipschitz() const { return scale_ * impl_->lipschitz(); }
bool AchronalSurface::maximal() const { return impl_->maximal(); }
bool AchronalSurface::in_domain(const Vec3& x) const { return impl_->in_domain(x); }
double AchronalSurface::parameter() const { return scale_ * impl_->parameter(); }

std::string AchronalSurface::describe() const {
    if (scale_ == 1.0) return impl_->describe();
    std::ostringstream os;
    os << scale_ << '*' << impl_->describe();
    return os.str();
}

std::optional<std::pair<Vec3, double>> AchronalSurface::plane() const {
    if (const auto* f = dynamic_cast<const FlatImpl*>(impl_.get())) return std::pair{Vec3(Vec3::Zero()), scale_ * f->t0_};
    if (const auto* t = dynamic_cast<const TiltedImpl*>(impl_.get())) return std::pair{Vec3(scale_ * t->e_), scale_ * t->o_};
    return std::nullopt;
}

AchronalSurface AchronalSurface::flatten(double gamma) const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error(ErrorKind::invalid_argument, "flatten needs gamma in [0, 1]");
    if (!maximal()) throw Error(ErrorKind::invalid_argument, "flatten needs a maximal surface");
    return {impl_, scale_ * gamma};
}

CauchyReport is_spacelike_cauchy(const AchronalSurface& s, std::span<const Vec3> samples, double shell_radius) {
    CauchyReport r;
    if (!s.maximal()) {
        r.reason = "surface domain is bounded";
        return r;
    }
    std::vector<double> t(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) t[i] = s.tau(samples[i]);
    bool pair_ok = true;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        for (std::size_t j = i + 1; j < samples.size(); ++j) {
            const double dx = (samples[i] - samples[j]).norm();
            if (dx == 0.0) continue;
            const double q = std::abs(t[i] - t[j]) / dx;
            if (q > r.max_pair_ratio) {
                r.max_pair_ratio = q;
                if (q >= 1.0 - slope_slack && pair_ok) {
                    pair_ok = false;
                    r.witness = std::pair{samples[i], samples[j]};
                }
            }
        }
    }
    const Vec3 origin = Vec3::Zero();
    const double t0 = s.tau(origin);
    std::optional<Vec3> worst;
    for (const Vec3& u : fibonacci_sphere(64)) {
        const double q = std::abs(s.tau(shell_radius * u) - t0) / shell_radius;
        if (q > r.asymptotic_slope) {
            r.asymptotic_slope = q;
            worst = shell_radius * u;
        }
    }
    const bool shell_ok = r.asymptotic_slope < 1.0 - 1e-9;
    if (!pair_ok) {
        r.reason = "lightlike or timelike sample pair";
    } else if (!shell_ok) {
        r.reason = "asymptotic slope reaches 1";
        r.witness = std::pair{origin, *worst};
    }
    r.spacelike_cauchy = pair_ok && shell_ok;
    return r;
}

std::pair<double, Vec3> graph_preimage(const PoincareElement& g, const AchronalSurface& s, const Vec3& y) {
    const Mat4 Li = g.L.inverse().matrix();
    const Vec4 b = Li * (Vec4(0.0, y[0], y[1], y[2]) - g.a.vec());
    const Vec4 u = Li.col(0);
    const Vec3 bs = b.tail<3>(), us = u.tail<3>();
    const double L = std::min(1.0, s.lipschitz());
    // f is increasing with slope in [u₀ − L|u⃗|, u₀ + L|u⃗|]
    const double lo = u[0] - L * us.norm(), hi = u[0] + L * us.norm();
    auto f = [&](double t) { return b[0] + t * u[0] - s.tau(bs + t * us); };
    const double f0 = f(0.0);
    if (f0 == 0.0) return {0.0, bs};
    double A = f0 > 0 ? -f0 / lo : -f0 / hi;
    double B = f0 > 0 ? -f0 / hi : -f0 / lo;
    const double widen = 1e-12 * (1.0 + std::abs(A) + std::abs(B));
    A -= widen;
    B += widen;
    double t = std::clamp(-f0 / u[0], A, B);
    for (int it = 0; it < 50; ++it) {
        const double ft = f(t);
        if (std::abs(ft) <= 1e-13 * (1.0 + std::abs(t))) return {t, bs + t * us};
        if (ft > 0) B = t;
        else A = t;
        if (B - A <= 1e-14 * (1.0 + std::abs(t))) return {t, bs + t * us};
        const double slope = u[0] - s.gradient(bs + t * us).dot(us);
        double next = t - ft / slope;
        if (!(slope > 0.0) || !(next > A && next < B)) next = 0.5 * (A + B);
        t = next;
    }
    throw Error(ErrorKind::fold_over, "surface inverse did not converge at y = " + fmt(y));
}

Vec3 transformed_gradient(const LorentzTransform& L, const Vec3& grad) {
    const Mat4& M = L.matrix();
    const Mat3 DS = M.block<3, 1>(1, 0) * grad.transpose() + M.block<3, 3>(1, 1);
    const Vec3 rhs = M(0, 0) * grad + M.block<1, 3>(0, 1).transpose();
    return DS.transpose().partialPivLu().solve(rhs);
}

double boost_jacobian_identity_residual(double rapidity, const Vec3& z) {
    const double c = std::cosh(rapidity), s = std::sinh(rapidity);
    const double det = c + s * z[2];
    // rows of DS⁻¹: (1,0,0), (0,1,0), (−s z₁, −s z₂, 1)/det
    Mat3 inv;
    inv << 1, 0, 0, 0, 1, 0, -s * z[0] / det, -s * z[1] / det, 1.0 / det;
    const Vec3 v(c * z[0], c * z[1], c * z[2] + s);
    const Vec3 grad_g = inv.transpose() * v;
    const Vec4 lhs(1.0, grad_g[0], grad_g[1], grad_g[2]);
    const Vec4 rhs = boost_z(rapidity).matrix() * Vec4(1.0, z[0], z[1], z[2]) / std::abs(det);
    return (lhs - rhs).cwiseAbs().maxCoeff();
}

double jacobian_identity_residual(const LorentzTransform& L, const Vec3& z) {
    const Mat4& M = L.matrix();
    const Mat3 DS = M.block<3, 1>(1, 0) * z.transpose() + M.block<3, 3>(1, 1);
    const Vec3 grad_g = transformed_gradient(L, z);
    const Vec4 lhs(1.0, grad_g[0], grad_g[1], grad_g[2]);
    const Vec4 rhs = M * Vec4(1.0, z[0], z[1], z[2]) / std::abs(DS.determinant());
    return (lhs - rhs).cwiseAbs().maxCoeff();
}

SurfaceTransform::SurfaceTransform(const PoincareElement& g, AchronalSurface base)
    : g_(g), base_(std::move(base)), image_(AchronalSurface::flat()) {
    if (const auto p = base_.plane()) {
        // covector ν = (1, −e) with ν·X = offset maps to ν' = νΛ⁻¹, offset' = offset + ν'·a
        const Vec4 nu(1.0, -p->first[0], -p->first[1], -p->first[2]);
        const Vec4 nup = g_.L.inverse().matrix().transpose() * nu;
        const double off = (p->second + nup.dot(g_.a.vec())) / nup[0];
        const Vec3 e = -nup.tail<3>() / nup[0];
        image_ = e.isZero(0.0) ? AchronalSurface::flat(off) : AchronalSurface::tilted(e, off);
    } else {
        image_ = AchronalSurface(std::make_shared<TransformedImpl>(g_, base_), 1.0);
    }
}

Vec3 SurfaceTransform::forward(const Vec3& x) const {
    return act(g_, FourVector(base_.tau(x), x)).x;
}

Vec3 SurfaceTransform::inverse(const Vec3& y) const { return graph_preimage(g_, base_, y).second; }

Mat3 SurfaceTransform::jacobian(const Vec3& x) const {
    const Mat4& M = g_.L.matrix();
    return M.block<3, 1>(1, 0) * base_.gradient(x).transpose() + M.block<3, 3>(1, 1);
}

SurfaceTransform transform_surface(const PoincareElement& g, const AchronalSurface& s, std::span<const Vec3> samples) {
    SurfaceTransform tr(g, s);
    for (const Vec3& x : samples) {
        const Vec3 back = tr.inverse(tr.forward(x));
        if ((back - x).norm() > 1e-9 * (1.0 + x.norm())) {
            throw Error(ErrorKind::fold_over, "surface transform is not invertible at x = " + fmt(x));
        }
    }
    return tr;
}

}  // namespace achronal
