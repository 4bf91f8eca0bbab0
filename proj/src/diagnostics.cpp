#include "achronal/currents.hpp"

#include "achronal/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace achronal {

PointEvaluator direct_evaluator(const CurrentSpec& spec) {
    return [spec](std::span<const FourVector> xs) {
        std::vector<Vec4> out;
        for (const auto& s : eval_direct(spec, xs)) out.push_back(s.value);
        return out;
    };
}

PointEvaluator fast_evaluator(const FastCurrent& fast) {
    auto f = std::make_shared<const FastCurrent>(fast);
    return [f](std::span<const FourVector> xs) {
        std::vector<Vec4> out;
        for (const auto& s : f->eval(xs)) out.push_back(s.value);
        return out;
    };
}

ContinuityResult check_continuity(const PointEvaluator& J, const FourVector& x, double h) {
    if (!(h > 0.0)) throw Error(ErrorKind::invalid_argument, "difference step must be positive");
    static constexpr double offs[4] = {2.0, 1.0, -1.0, -2.0};
    static constexpr double coef[4] = {-1.0, 8.0, -8.0, 1.0};
    std::vector<FourVector> pts;
    for (int mu = 0; mu < 4; ++mu) {
        for (double o : offs) {
            Vec4 v = x.vec();
            v[mu] += o * h;
            pts.push_back(FourVector::from_vec(v));
        }
    }
    const auto vals = J(pts);
    ContinuityResult r;
    for (int mu = 0; mu < 4; ++mu) {
        double d = 0.0;
        for (int k = 0; k < 4; ++k) d += coef[k] * vals[4 * mu + k][mu];
        r.partials[mu] = d / (12.0 * h);
    }
    r.divergence = r.partials.sum();
    const double scale = r.partials.cwiseAbs().maxCoeff();
    r.residual = scale > 0.0 ? std::abs(r.divergence) / scale : 0.0;
    return r;
}

double check_causal_pointwise(const CurrentSample& s) { return s.value[0] - s.value.tail<3>().norm(); }

CausalScan scan_causal(const Slice& s) {
    CausalScan c;
    c.nodes = s.grid.size();
    c.min_margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < c.nodes; ++i) {
        const double j0 = s.J[0][i];
        const double m = j0 - std::hypot(s.J[1][i], s.J[2][i], s.J[3][i]);
        c.max_j0 = std::max(c.max_j0, j0);
        if (m < c.min_margin) {
            c.min_margin = m;
            c.argmin = s.grid.node(i);
        }
    }
    if (c.nodes == 0) c.min_margin = 0.0;
    return c;
}

namespace {

Vec3 centroid(const Slice& s, double* total) {
    Vec3 c = Vec3::Zero();
    double w = 0.0;
    for (std::size_t i = 0; i < s.grid.size(); ++i) {
        const double j0 = std::max(s.J[0][i], 0.0);
        c += j0 * s.grid.node(i);
        w += j0;
    }
    if (total) *total = w;
    return w > 0.0 ? Vec3(c / w) : Vec3::Zero();
}

const std::array<Vec3, 13>& ray_directions() {
    static const std::array<Vec3, 13> dirs = [] {
        std::array<Vec3, 13> d = {Vec3(1, 0, 0),  Vec3(0, 1, 0),  Vec3(0, 0, 1),  Vec3(1, 1, 0),  Vec3(1, -1, 0),
                                  Vec3(1, 0, 1),  Vec3(1, 0, -1), Vec3(0, 1, 1),  Vec3(0, 1, -1), Vec3(1, 1, 1),
                                  Vec3(1, 1, -1), Vec3(1, -1, 1), Vec3(-1, 1, 1)};
        for (auto& v : d) v.normalize();
        return d;
    }();
    return dirs;
}

}  // namespace

double packet_width(const Slice& s) {
    double w = 0.0;
    const Vec3 c = centroid(s, &w);
    if (!(w > 0.0)) return 0.0;
    double m2 = 0.0;
    for (std::size_t i = 0; i < s.grid.size(); ++i) {
        m2 += std::max(s.J[0][i], 0.0) * (s.grid.node(i) - c).squaredNorm();
    }
    return std::sqrt(m2 / w);
}

DecayFit decay_scan(const CurrentSpec& spec, double x0, std::span<const double> radii, double noise_floor) {
    const double half_period = std::numbers::pi / spec.packet().grid().spacing();
    for (double r : radii) {
        if (!(r >= std::abs(x0))) throw Error(ErrorKind::invalid_argument, "decay radii must be at least |x0|");
        if (r > half_period) throw Error(ErrorKind::invalid_argument, "decay radius beyond half the spatial period");
    }
    const Slice s0 = slice_exact(spec, 0.0);
    double peak = 0.0;
    for (double v : s0.J[0]) peak = std::max(peak, v);
    const PairSpectrum ps = PairSpectrum::compute(spec, x0);

    DecayFit fit;
    fit.width = packet_width(s0);
    std::vector<double> lx, ly;
    for (const auto& u : ray_directions()) {
        for (double r : radii) {
            const double j0 = ps.eval(r * u)[0];
            if (j0 > noise_floor * peak) {
                lx.push_back(std::log1p(r));
                ly.push_back(std::log(j0));
            } else {
                ++fit.rejected;
            }
        }
    }
    fit.samples = int(lx.size());
    if (fit.samples < 3) {
        throw Error(ErrorKind::degenerate_fit, "fewer than three decay samples above the noise floor");
    }
    const Eigen::Map<const Eigen::VectorXd> X(lx.data(), Eigen::Index(lx.size()));
    const Eigen::Map<const Eigen::VectorXd> Y(ly.data(), Eigen::Index(ly.size()));
    const double mx = X.mean(), my = Y.mean();
    const double sxx = (X.array() - mx).square().sum();
    if (!(sxx > 0.0)) throw Error(ErrorKind::degenerate_fit, "decay samples share a single radius");
    const double slope = ((X.array() - mx) * (Y.array() - my)).sum() / sxx;
    fit.exponent = -slope;
    fit.log_constant = my - slope * mx;
    fit.residual = std::sqrt(((Y.array() - fit.log_constant - slope * X.array()).square()).mean());
    return fit;
}

DecayFit decay_scan(const CurrentSpec& spec, double x0, const DecayOptions& opt) {
    if (opt.radii < 3 || !(opt.r_min_factor > 0.0) || !(opt.r_max_factor > opt.r_min_factor)) {
        throw Error(ErrorKind::invalid_argument, "invalid decay radius schedule");
    }
    const double width = packet_width(slice_exact(spec, 0.0));
    if (!(width > 0.0)) throw Error(ErrorKind::degenerate_fit, "current vanishes at t = 0");
    std::vector<double> radii(opt.radii);
    // J is periodic with period 2π/h; beyond ~0.4 of it the images dominate
    const double cap = 0.4 * 2.0 * std::numbers::pi / spec.packet().grid().spacing();
    const double a = std::log(opt.r_min_factor * width), b = std::log(std::min(opt.r_max_factor * width, cap));
    if (!(b > a)) throw Error(ErrorKind::degenerate_fit, "packet too wide for the spatial period");
    for (int i = 0; i < opt.radii; ++i) radii[i] = std::max(std::exp(a + (b - a) * i / (opt.radii - 1)), std::abs(x0));
    return decay_scan(spec, x0, radii, opt.noise_floor);
}

}  // namespace achronal
