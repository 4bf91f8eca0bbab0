#include "achronal/currents.hpp"

#include "achronal/error.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace achronal {

namespace {

struct Factor {
    Eigen::MatrixXd V;           // S × R
    std::vector<double> lambda;  // R
    double discarded = 0.0;      // trace (or |λ| sum) left out
    double total = 0.0;
    bool indefinite = false;
};

double g_entry(const CurrentSpec& s, const GFunction& g, std::size_t a, std::size_t b) {
    return g.eval(s.energies()[a] * s.energies()[b] - s.momenta()[a].dot(s.momenta()[b]));
}

Factor eigen_factor(const CurrentSpec& s, const GFunction& g, double tol, bool keep_all) {
    const auto S = Eigen::Index(s.size());
    Eigen::MatrixXd G(S, S);
    for (Eigen::Index a = 0; a < S; ++a) {
        for (Eigen::Index b = 0; b <= a; ++b) G(a, b) = G(b, a) = g_entry(s, g, a, b);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    const auto& ev = es.eigenvalues();
    std::vector<Eigen::Index> order(S);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return std::abs(ev[i]) > std::abs(ev[j]); });

    Factor f;
    f.total = ev.cwiseAbs().sum();
    f.indefinite = ev.minCoeff() < -1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    Eigen::Index keep = S;
    if (!keep_all) {
        // smallest prefix whose discarded |λ| tail is within tolerance
        double tail = 0.0;
        keep = S;
        for (Eigen::Index r = S - 1; r >= 0; --r) {
            if (tail + std::abs(ev[order[r]]) > tol * f.total) break;
            tail += std::abs(ev[order[r]]);
            keep = r;
        }
        f.discarded = tail;
    }
    f.V.resize(S, keep);
    for (Eigen::Index r = 0; r < keep; ++r) {
        f.V.col(r) = es.eigenvectors().col(order[r]);
        f.lambda.push_back(ev[order[r]]);
    }
    return f;
}

// Pivoted Cholesky of the PSD matrix [g(t_ab)]; returns nullopt-like
// indefinite flag when a Schur complement diagonal turns negative.
Factor pivoted_cholesky(const CurrentSpec& s, const GFunction& g, double tol, int max_rank) {
    const auto S = Eigen::Index(s.size());
    Factor f;
    std::vector<double> d(S);
    for (Eigen::Index i = 0; i < S; ++i) d[i] = g_entry(s, g, i, i);
    f.total = std::accumulate(d.begin(), d.end(), 0.0);
    const double neg_tol = 1e-10 * f.total / double(S);

    Eigen::Index cap = std::min<Eigen::Index>(S, 256);
    Eigen::MatrixXd L(S, cap);
    Eigen::VectorXd col(S);
    Eigen::Index r = 0;
    double residual = f.total;
    while (residual > tol * f.total && r < S) {
        if (max_rank > 0 && r >= max_rank) {
            std::ostringstream os;
            os << "factorization reached rank " << r << " with relative residual " << residual / f.total
               << " > " << tol;
            throw Error(ErrorKind::factorization, os.str());
        }
        const auto j = Eigen::Index(std::max_element(d.begin(), d.end()) - d.begin());
        if (!(d[j] > 0.0)) break;
        for (Eigen::Index i = 0; i < S; ++i) col[i] = g_entry(s, g, i, j);
        if (r > 0) col.noalias() -= L.leftCols(r) * L.row(j).head(r).transpose();
        col /= std::sqrt(d[j]);
        if (r == cap) {
            cap = std::min<Eigen::Index>(S, 2 * cap);
            L.conservativeResize(S, cap);
        }
        L.col(r) = col;
        residual = 0.0;
        for (Eigen::Index i = 0; i < S; ++i) {
            d[i] -= col[i] * col[i];
            if (d[i] < -neg_tol) f.indefinite = true;
            residual += std::max(d[i], 0.0);
        }
        d[j] = 0.0;
        ++r;
        if (f.indefinite) return f;
    }
    f.V = L.leftCols(r);
    f.lambda.assign(std::size_t(r), 1.0);
    f.discarded = residual;
    return f;
}

}  // namespace

FastCurrent FastCurrent::build(const CurrentSpec& spec, const FastOptions& opt) {
    FastCurrent fc(spec);
    fc.checksum_ = spec.packet().checksum();
    const auto S = Eigen::Index(spec.size());
    const auto& eps = spec.energies();
    const auto& p = spec.momenta();

    if (const auto* tk = std::get_if<TensorKernel>(&spec.kernel())) {
        fc.tensor_ = true;
        fc.fields_.resize(S, 5);
        for (Eigen::Index i = 0; i < S; ++i) {
            double w = 1.0 / std::sqrt(eps[i]);
            if (tk->norm() == TensorNorm::energy_weighted) {
                w /= std::sqrt(eps[i] * tk->n().t - p[i].dot(tk->n().x));
            }
            fc.fields_(i, 0) = eps[i] * w;
            fc.fields_(i, 1) = p[i][0] * w;
            fc.fields_(i, 2) = p[i][1] * w;
            fc.fields_(i, 3) = p[i][2] * w;
            fc.fields_(i, 4) = w;
        }
        fc.rank_ = 0;
        return fc;
    }

    if (!(opt.tolerance >= 0.0)) throw Error(ErrorKind::invalid_argument, "factorization tolerance must be >= 0");
    const GFunction& g = std::get<CausalKernel>(spec.kernel()).g;
    Factor f;
    if (S > 0) {
        if (opt.full_rank) {
            f = eigen_factor(spec, g, 0.0, true);
        } else {
            f = pivoted_cholesky(spec, g, opt.tolerance, opt.max_rank);
            if (f.indefinite) {
                f = eigen_factor(spec, g, opt.tolerance, false);
                if (opt.max_rank > 0 && f.V.cols() > opt.max_rank) {
                    throw Error(ErrorKind::factorization, "indefinite g-matrix needs more than max_rank terms");
                }
            }
        }
    }
    const auto R = f.V.cols();
    fc.rank_ = int(R);
    fc.indefinite_ = f.indefinite;
    fc.residual_ = f.total > 0.0 ? f.discarded / f.total : 0.0;
    fc.fields_.resize(S, 5 * R);
    for (Eigen::Index r = 0; r < R; ++r) {
        for (Eigen::Index i = 0; i < S; ++i) {
            const double v = f.V(i, r), se = std::sqrt(eps[i]);
            fc.fields_(i, 5 * r) = v / se;
            fc.fields_(i, 5 * r + 1) = v * se;
            fc.fields_(i, 5 * r + 2) = v * p[i][0] / se;
            fc.fields_(i, 5 * r + 3) = v * p[i][1] / se;
            fc.fields_(i, 5 * r + 4) = v * p[i][2] / se;
        }
        const double l = f.lambda[r];
        const int a = int(5 * r);
        fc.terms_.push_back({a, a + 1, Vec4(l, 0, 0, 0)});
        for (int j = 0; j < 3; ++j) {
            Vec4 c = Vec4::Zero();
            c[1 + j] = l;
            fc.terms_.push_back({a, a + 2 + j, c});
        }
    }
    // |x* D y| ≤ (discarded trace)·‖x‖‖y‖ with x, y the weighted amplitudes
    double n_inv = 0.0, n_e = 0.0, n_p = 0.0;
    for (Eigen::Index i = 0; i < S; ++i) {
        const double a2 = std::norm(spec.values()[i]);
        n_inv += a2 / eps[i];
        n_e += a2 * eps[i];
        n_p += a2 * p[i].squaredNorm() / eps[i];
    }
    fc.bound_ = spec.prefactor() * f.discarded * std::sqrt(n_inv * std::max(n_e, n_p));
    return fc;
}

FastCurrent build_fast(const CurrentSpec& spec, const FastOptions& opt) { return FastCurrent::build(spec, opt); }

Vec4 FastCurrent::combine(std::span<const cplx> A) const {
    Vec4 J = Vec4::Zero();
    if (tensor_) {
        const auto& tk = std::get<TensorKernel>(spec_.kernel());
        const Vec4 n = tk.n().vec();
        const cplx Un = n[0] * A[0] - n[1] * A[1] - n[2] * A[2] - n[3] * A[3];
        const double m2 = spec_.mass() * spec_.mass();
        const double sq = std::norm(A[0]) - std::norm(A[1]) - std::norm(A[2]) - std::norm(A[3]);
        const double sign = tk.variant() == TensorVariant::standard ? 1.0 : -1.0;
        const double scalar = 0.5 * (sign * m2 * std::norm(A[4]) - sq);
        for (int mu = 0; mu < 4; ++mu) J[mu] = (std::conj(Un) * A[mu]).real() + scalar * n[mu];
        return J;
    }
    for (const auto& t : terms_) J += t.coeff * (std::conj(A[t.a]) * A[t.b]).real();
    return J;
}

std::vector<CurrentSample> FastCurrent::eval(std::span<const FourVector> xs) const {
    const auto S = Eigen::Index(spec_.size());
    const auto B = Eigen::Index(xs.size());
    std::vector<CurrentSample> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        out[i].point = xs[i];
        out[i].backend = Backend::fast;
        out[i].error = bound_;
    }
    if (S == 0 || B == 0) return out;
    Eigen::MatrixXd A(S, 2 * B);
    for (Eigen::Index b = 0; b < B; ++b) spec_.phases(xs[b], A.col(b).data(), A.col(B + b).data());
    const Eigen::MatrixXd P = fields_.transpose() * A;
    std::vector<cplx> v(P.rows());
    for (Eigen::Index b = 0; b < B; ++b) {
        for (Eigen::Index i = 0; i < P.rows(); ++i) v[i] = cplx(P(i, b), P(i, B + b));
        out[b].value = spec_.prefactor() * combine(v);
    }
    return out;
}

CurrentSample FastCurrent::eval(const FourVector& x) const { return eval(std::span<const FourVector>(&x, 1)).front(); }

}  // namespace achronal
