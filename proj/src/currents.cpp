#include "achronal/currents.hpp"

#include "achronal/error.hpp"

#include <algorithm>
#include <numbers>

namespace achronal {

std::string to_string(Backend b) { return b == Backend::direct ? "direct" : "fast"; }

Backend backend_from_string(const std::string& s) {
    if (s == "direct") return Backend::direct;
    if (s == "fast") return Backend::fast;
    throw Error(ErrorKind::config, "unknown backend '" + s + "'");
}

CurrentSpec::CurrentSpec(WavePacket phi, KernelSpec kernel)
    : phi_(std::make_shared<const WavePacket>(std::move(phi))), kernel_(std::move(kernel)) {
    if (kernel_mass(kernel_) != phi_->mass()) {
        throw Error(ErrorKind::invalid_argument, "kernel mass differs from the packet mass");
    }
    const auto& g = phi_->grid();
    const double m = phi_->mass();
    for (std::size_t i : phi_->support()) {
        const Vec3 p = g.momentum(i);
        p_.push_back(p);
        eps_.push_back(energy(p, m));
        val_.push_back(phi_->amplitude(i));
        idx_.push_back(g.coords(i));
        px_.push_back(p[0]);
        py_.push_back(p[1]);
        pz_.push_back(p[2]);
    }
    const double h = g.spacing();
    pref_ = std::pow(h * h / (2.0 * std::numbers::pi), 3);

    w_.resize(size());
    pn_.resize(size());
    if (const auto* t = std::get_if<TensorKernel>(&kernel_)) {
        const FourVector& n = t->n();
        for (std::size_t b = 0; b < size(); ++b) {
            pn_[b] = eps_[b] * n.t - p_[b].dot(n.x);
            w_[b] = 1.0 / std::sqrt(eps_[b]);
            if (t->norm() == TensorNorm::energy_weighted) w_[b] /= std::sqrt(pn_[b]);
        }
    } else {
        for (std::size_t b = 0; b < size(); ++b) w_[b] = 1.0 / std::sqrt(eps_[b]);
    }
}

double CurrentSpec::bandwidth() const {
    if (eps_.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(eps_.begin(), eps_.end());
    return *hi - *lo;
}

Vec4 CurrentSpec::pair_kernel(std::size_t a, std::size_t b) const {
    if (const auto* c = std::get_if<CausalKernel>(&kernel_)) return kernel_K(p_[a], p_[b], *c);
    return kernel_Kn(p_[a], p_[b], std::get<TensorKernel>(kernel_));
}

void CurrentSpec::kernel_row(std::size_t a, std::size_t count, double* k0, double* k1, double* k2,
                             double* k3) const {
    const double ea = eps_[a], xa = px_[a], ya = py_[a], za = pz_[a], wa = w_[a];
    const double* e = eps_.data();
    const double* x = px_.data();
    const double* y = py_.data();
    const double* z = pz_.data();
    const double* w = w_.data();
    if (const auto* c = std::get_if<CausalKernel>(&kernel_)) {
        const GFunction& g = c->g;
        for (std::size_t b = 0; b < count; ++b) {
            const double t = ea * e[b] - (xa * x[b] + ya * y[b] + za * z[b]);
            const double f = 0.5 * wa * w[b] * g.eval(t);
            k0[b] = f * (ea + e[b]);
            k1[b] = f * (xa + x[b]);
            k2[b] = f * (ya + y[b]);
            k3[b] = f * (za + z[b]);
        }
        return;
    }
    const auto& tk = std::get<TensorKernel>(kernel_);
    const FourVector& n = tk.n();
    const double m2 = mass() * mass();
    const bool standard = tk.variant() == TensorVariant::standard;
    const double kn = pn_[a];
    const double* pn = pn_.data();
    for (std::size_t b = 0; b < count; ++b) {
        const double kp = ea * e[b] - (xa * x[b] + ya * y[b] + za * z[b]);
        const double cn = standard ? (m2 - kp) : -(m2 + kp);
        const double f = 0.5 * wa * w[b];
        k0[b] = f * (kn * e[b] + pn[b] * ea + cn * n.t);
        k1[b] = f * (kn * x[b] + pn[b] * xa + cn * n.x[0]);
        k2[b] = f * (kn * y[b] + pn[b] * ya + cn * n.x[1]);
        k3[b] = f * (kn * z[b] + pn[b] * za + cn * n.x[2]);
    }
}

void CurrentSpec::phases(const FourVector& x, double* re, double* im) const {
    for (std::size_t b = 0; b < size(); ++b) {
        const double arg = -(eps_[b] * x.t - (px_[b] * x.x[0] + py_[b] * x.x[1] + pz_[b] * x.x[2]));
        const cplx a = val_[b] * cplx(std::cos(arg), std::sin(arg));
        re[b] = a.real();
        im[b] = a.imag();
    }
}

std::vector<CurrentSample> eval_direct(const CurrentSpec& spec, std::span<const FourVector> xs) {
    const auto S = Eigen::Index(spec.size());
    const auto B = Eigen::Index(xs.size());
    std::vector<CurrentSample> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        out[i].point = xs[i];
        out[i].backend = Backend::direct;
    }
    if (S == 0 || B == 0) return out;

    // columns: Re a for every point, then Im a
    Eigen::MatrixXd A(S, 2 * B);
    for (Eigen::Index b = 0; b < B; ++b) spec.phases(xs[b], A.col(b).data(), A.col(B + b).data());

    constexpr Eigen::Index block = 32;
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    RowMat K(4 * block, S);
    std::vector<std::array<cplx, 4>> acc(B, {cplx{}, cplx{}, cplx{}, cplx{}});
    for (Eigen::Index k0 = 0; k0 < S; k0 += block) {
        const Eigen::Index kb = std::min(block, S - k0);
        for (Eigen::Index r = 0; r < kb; ++r) {
            spec.kernel_row(std::size_t(k0 + r), std::size_t(S), K.row(4 * r).data(), K.row(4 * r + 1).data(),
                            K.row(4 * r + 2).data(), K.row(4 * r + 3).data());
        }
        const Eigen::MatrixXd P = K.topRows(4 * kb) * A;
        for (Eigen::Index r = 0; r < kb; ++r) {
            for (Eigen::Index b = 0; b < B; ++b) {
                const cplx ak(A(k0 + r, b), -A(k0 + r, B + b));  // conj(a_k)
                for (int mu = 0; mu < 4; ++mu) acc[b][mu] += ak * cplx(P(4 * r + mu, b), P(4 * r + mu, B + b));
            }
        }
    }
    const double c = spec.prefactor();
    for (Eigen::Index b = 0; b < B; ++b) {
        double imag = 0.0;
        for (int mu = 0; mu < 4; ++mu) {
            out[b].value[mu] = c * acc[b][mu].real();
            imag = std::max(imag, std::abs(c * acc[b][mu].imag()));
        }
        out[b].error = imag;
    }
    return out;
}

CurrentSample eval_direct(const CurrentSpec& spec, const FourVector& x) {
    return eval_direct(spec, std::span<const FourVector>(&x, 1)).front();
}

}  // namespace achronal
