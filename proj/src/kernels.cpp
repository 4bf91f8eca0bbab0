#include "achronal/kernels.hpp"

#include "achronal/error.hpp"

#include <algorithm>
#include <cstring>
#include <map>
#include <optional>
#include <sstream>

namespace achronal {

namespace {

void require_mass(double m) {
    if (!(m > 0.0) || !std::isfinite(m)) throw Error(ErrorKind::invalid_argument, "mass must be positive");
}

double on_shell_energy(const Vec3& p, double m) { return std::sqrt(m * m + p.squaredNorm()); }

}  // namespace

GFunction GFunction::basic(double r, double mass) {
    require_mass(mass);
    if (!(r >= 1.5) || !std::isfinite(r)) throw Error(ErrorKind::domain, "basic series needs r >= 3/2");
    GFunction g;
    g.variant_ = GVariant::basic;
    g.mass_ = mass;
    g.r_ = r;
    g.scale_ = std::pow(2.0 * mass * mass, r);
    const double twice = 2.0 * r;
    if (twice == std::round(twice) && twice <= 16.0) g.half_power_ = int(twice);
    return g;
}

GFunction GFunction::basic_printed(double r, double mass) {
    GFunction g = basic(r, mass);
    g.variant_ = GVariant::basic_printed;
    g.half_power_ = 0;
    return g;
}

GFunction GFunction::oscillatory(double omega, double mass) {
    require_mass(mass);
    if (!std::isfinite(omega)) throw Error(ErrorKind::invalid_argument, "frequency must be finite");
    GFunction g;
    g.variant_ = GVariant::oscillatory;
    g.mass_ = mass;
    g.omega_ = omega;
    return g;
}

GFunction GFunction::constant(double mass) {
    require_mass(mass);
    GFunction g;
    g.mass_ = mass;
    return g;
}

GFunction GFunction::custom(std::function<double(double)> fn, double mass, std::string label) {
    require_mass(mass);
    if (!fn) throw Error(ErrorKind::invalid_argument, "custom profile needs a callable");
    const double at_shell = fn(mass * mass);
    if (std::abs(at_shell - 1.0) > 1e-12) {
        throw Error(ErrorKind::invalid_argument, "custom profile must satisfy g(m^2) = 1");
    }
    GFunction g;
    g.variant_ = GVariant::custom;
    g.mass_ = mass;
    g.custom_ = std::move(fn);
    g.label_ = std::move(label);
    return g;
}

double GFunction::operator()(double t) const {
    const double m2 = mass_ * mass_;
    if (!(t >= m2 * (1.0 - 1e-12))) {
        std::ostringstream os;
        os << "g evaluated at t = " << t << " < m^2 = " << m2;
        throw Error(ErrorKind::domain, os.str());
    }
    return eval(t);
}

std::string GFunction::describe() const {
    std::ostringstream os;
    os.precision(17);
    switch (variant_) {
        case GVariant::basic: os << "basic:r=" << r_; break;
        case GVariant::basic_printed: os << "basic:r=" << r_ << ":printed"; break;
        case GVariant::oscillatory: os << "osc:w=" << omega_; break;
        case GVariant::constant: os << "const"; break;
        case GVariant::custom: os << label_; break;
    }
    return os.str();
}

double g_basic(double r, double t, double m) { return GFunction::basic(r, m)(t); }

Vec4 kernel_K(const Vec3& k, const Vec3& p, const CausalKernel& kern) {
    const double m = kern.mass();
    const double ek = on_shell_energy(k, m), ep = on_shell_energy(p, m);
    const double g = kern.g.eval(ek * ep - k.dot(p));
    const double f = g / (2.0 * std::sqrt(ek * ep));
    const Vec3 s = k + p;
    return {f * (ek + ep), f * s[0], f * s[1], f * s[2]};
}

std::string to_string(TensorVariant v) { return v == TensorVariant::standard ? "standard" : "as_printed"; }
std::string to_string(TensorNorm n) { return n == TensorNorm::raw ? "raw" : "energy_weighted"; }

TensorKernel TensorKernel::make(const FourVector& n, double mass, TensorVariant variant, TensorNorm norm) {
    require_mass(mass);
    if (!n.is_finite() || !(n.t > 0.0)) {
        throw Error(ErrorKind::invalid_argument, "tensor kernel index must be future-directed");
    }
    const double sq = minkowski_square(n);
    if (std::abs(sq - 1.0) > 1e-12 * std::max(1.0, n.t * n.t)) {
        std::ostringstream os;
        os << "tensor kernel index must satisfy n.n = 1 (got " << sq << ")";
        throw Error(ErrorKind::invalid_argument, os.str());
    }
    TensorKernel k;
    k.n_ = n;
    k.mass_ = mass;
    k.variant_ = variant;
    k.norm_ = norm;
    return k;
}

TensorKernel TensorKernel::transformed(const LorentzTransform& L) const {
    FourVector n = L(n_);
    // undo rounding drift so repeated transforms keep validating
    n = (1.0 / std::sqrt(minkowski_square(n))) * n;
    return make(n, mass_, variant_, norm_);
}

Vec4 kernel_Kn(const Vec3& k, const Vec3& p, const TensorKernel& kern) {
    const double m = kern.mass();
    const FourVector K = on_shell(k, m), P = on_shell(p, m);
    const FourVector& n = kern.n();
    const double kn = minkowski_product(K, n), pn = minkowski_product(P, n), kp = minkowski_product(K, P);
    const double c = kern.variant() == TensorVariant::standard ? (m * m - kp) : -(m * m + kp);
    double f = 1.0 / (2.0 * std::sqrt(K.t * P.t));
    if (kern.norm() == TensorNorm::energy_weighted) f /= std::sqrt(kn * pn);
    return f * (kn * P.vec() + pn * K.vec() + c * n.vec());
}

double kernel_mass(const KernelSpec& k) {
    return std::visit([](const auto& v) { return v.mass(); }, k);
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    int depth = 0;
    for (char c : s) {
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if (c == sep && depth == 0) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_number(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size() || v.empty()) throw Error(ErrorKind::config, "kernel option '" + key + "' is not a number: " + v);
    return x;
}

FourVector parse_four_vector(const std::string& v) {
    if (v.size() < 2 || v.front() != '(' || v.back() != ')') {
        throw Error(ErrorKind::config, "expected a four-vector '(t,x,y,z)', got " + v);
    }
    const auto parts = split(v.substr(1, v.size() - 2), ',');
    if (parts.size() != 4) throw Error(ErrorKind::config, "four-vector needs 4 components: " + v);
    return {parse_number("n", parts[0]), parse_number("n", parts[1]), parse_number("n", parts[2]),
            parse_number("n", parts[3])};
}

}  // namespace

KernelSpec parse_kernel(const std::string& text, double mass) {
    const auto tokens = split(text, ':');
    const std::string kind = tokens.front();
    std::map<std::string, std::string> opts;
    bool printed = false;
    for (std::size_t i = 1; i < tokens.size(); ++i) {
        const auto eq = tokens[i].find('=');
        if (eq == std::string::npos) {
            if (tokens[i] == "printed" && kind == "basic") {
                printed = true;
                continue;
            }
            throw Error(ErrorKind::config, "unknown kernel flag '" + tokens[i] + "' in " + text);
        }
        opts[tokens[i].substr(0, eq)] = tokens[i].substr(eq + 1);
    }
    auto take = [&](const std::string& key) -> std::optional<std::string> {
        auto it = opts.find(key);
        if (it == opts.end()) return std::nullopt;
        std::string v = it->second;
        opts.erase(it);
        return v;
    };
    auto finish = [&]() {
        if (!opts.empty()) throw Error(ErrorKind::config, "unknown kernel option '" + opts.begin()->first + "' in " + text);
    };

    try {
        if (kind == "basic") {
            const auto r = take("r");
            finish();
            const double rv = r ? parse_number("r", *r) : 1.5;
            return CausalKernel{printed ? GFunction::basic_printed(rv, mass) : GFunction::basic(rv, mass)};
        }
        if (kind == "osc") {
            const auto w = take("w");
            finish();
            return CausalKernel{GFunction::oscillatory(w ? parse_number("w", *w) : 50.0, mass)};
        }
        if (kind == "const") {
            finish();
            return CausalKernel{GFunction::constant(mass)};
        }
        if (kind == "tensor") {
            const auto n = take("n");
            const auto variant = take("variant");
            const auto norm = take("norm");
            finish();
            TensorVariant tv = TensorVariant::standard;
            if (variant) {
                if (*variant == "standard") tv = TensorVariant::standard;
                else if (*variant == "printed" || *variant == "as_printed") tv = TensorVariant::as_printed;
                else throw Error(ErrorKind::config, "unknown tensor variant '" + *variant + "'");
            }
            TensorNorm tn = TensorNorm::energy_weighted;
            if (norm) {
                if (*norm == "raw") tn = TensorNorm::raw;
                else if (*norm == "energy" || *norm == "energy_weighted") tn = TensorNorm::energy_weighted;
                else throw Error(ErrorKind::config, "unknown tensor normalization '" + *norm + "'");
            }
            return TensorKernel::make(n ? parse_four_vector(*n) : FourVector(1, 0, 0, 0), mass, tv, tn);
        }
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::config) throw;
        throw Error(ErrorKind::config, std::string("invalid kernel '") + text + "': " + e.what());
    }
    throw Error(ErrorKind::config, "unknown kernel kind '" + kind + "'");
}

std::string to_string(const KernelSpec& k) {
    if (const auto* c = std::get_if<CausalKernel>(&k)) return c->g.describe();
    const auto& t = std::get<TensorKernel>(k);
    std::ostringstream os;
    os.precision(17);
    os << "tensor:n=(" << t.n().t << "," << t.n().x[0] << "," << t.n().x[1] << "," << t.n().x[2]
       << "):variant=" << (t.variant() == TensorVariant::standard ? "standard" : "printed")
       << ":norm=" << (t.norm() == TensorNorm::raw ? "raw" : "energy");
    return os.str();
}

GramReport gram_report(std::span<const Vec3> points, const CausalKernel& kern) {
    if (points.empty()) throw Error(ErrorKind::invalid_argument, "Gram matrix needs at least one point");
    const auto n = Eigen::Index(points.size());
    std::vector<Vec3> sorted(points.begin(), points.end());
    std::sort(sorted.begin(), sorted.end(), [](const Vec3& a, const Vec3& b) {
        return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
    });
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i] == sorted[i - 1]) throw Error(ErrorKind::invalid_argument, "Gram points must be distinct");
    }

    Eigen::MatrixXd G(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double a = kernel_K(points[i], points[j], kern)[0];
            const double b = kernel_K(points[j], points[i], kern)[0];
            G(i, j) = G(j, i) = 0.5 * (a + b);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
    GramReport r;
    r.size = points.size();
    r.min_eigenvalue = es.eigenvalues().minCoeff();
    r.max_eigenvalue = es.eigenvalues().maxCoeff();
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& p : points) {
        const auto* b = reinterpret_cast<const unsigned char*>(p.data());
        for (std::size_t i = 0; i < 3 * sizeof(double); ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    }
    r.points_hash = h;
    return r;
}

double gram_min_eigenvalue(std::span<const Vec3> points, const CausalKernel& kern) {
    return gram_report(points, kern).min_eigenvalue;
}

}  // namespace achronal
