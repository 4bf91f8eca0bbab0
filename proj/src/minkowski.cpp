#include "achronal/minkowski.hpp"

#include "achronal/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace achronal {

namespace {

const Mat4& eta() {
    static const Mat4 e = Vec4(1.0, -1.0, -1.0, -1.0).asDiagonal();
    return e;
}

void require_unit(const Vec3& axis) {
    if (!axis.allFinite() || std::abs(axis.norm() - 1.0) > 1e-9) {
        std::ostringstream os;
        os << "axis must be a unit 3-vector, |axis| = " << axis.norm();
        throw Error(ErrorKind::invalid_argument, os.str());
    }
}

}  // namespace

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::domain: return "domain";
        case ErrorKind::invalid_argument: return "invalid_argument";
        case ErrorKind::support: return "support";
        case ErrorKind::grid_mismatch: return "grid_mismatch";
        case ErrorKind::factorization: return "factorization";
        case ErrorKind::fold_over: return "fold_over";
        case ErrorKind::unsupported: return "unsupported";
        case ErrorKind::overlap: return "overlap";
        case ErrorKind::determinacy: return "determinacy";
        case ErrorKind::degenerate_fit: return "degenerate_fit";
        case ErrorKind::io: return "io";
        case ErrorKind::config: return "config";
    }
    return "unknown";
}

CausalClass classify(const FourVector& z, double rel_tol) {
    CausalClass c;
    const double a = std::abs(z.t);
    const double b = z.x.norm();
    if (a == 0.0 && b == 0.0) return c;
    c.future_directed = z.t > 0.0;
    if (std::abs(a - b) <= rel_tol * std::max(a, b)) {
        c.type = CausalType::lightlike;
    } else if (a > b) {
        c.type = CausalType::timelike;
    } else {
        c.type = CausalType::spacelike;
    }
    return c;
}

std::string to_string(CausalType type) {
    switch (type) {
        case CausalType::zero: return "zero";
        case CausalType::timelike: return "timelike";
        case CausalType::lightlike: return "lightlike";
        case CausalType::spacelike: return "spacelike";
    }
    return "unknown";
}

LorentzTransform LorentzTransform::from_matrix(const Mat4& m, double tol) {
    if (!m.allFinite()) throw Error(ErrorKind::invalid_argument, "Lorentz matrix has non-finite entries");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    const double defect = (m.transpose() * eta() * m - eta()).cwiseAbs().maxCoeff();
    if (defect > tol * scale * scale) {
        std::ostringstream os;
        os << "matrix does not preserve the Minkowski metric (defect " << defect << ")";
        throw Error(ErrorKind::invalid_argument, os.str());
    }
    if (std::abs(m.determinant() - 1.0) > tol * std::pow(scale, 4)) {
        throw Error(ErrorKind::invalid_argument, "Lorentz matrix is not proper (det != 1)");
    }
    if (m(0, 0) < 1.0 - tol * scale) {
        throw Error(ErrorKind::invalid_argument, "Lorentz matrix is not orthochronous");
    }
    return LorentzTransform(m);
}

LorentzTransform LorentzTransform::boost_z(double rapidity) {
    if (!std::isfinite(rapidity)) throw Error(ErrorKind::invalid_argument, "rapidity must be finite");
    Mat4 m = Mat4::Identity();
    const double c = std::cosh(rapidity);
    const double s = std::sinh(rapidity);
    m(0, 0) = c;
    m(3, 3) = c;
    m(0, 3) = s;
    m(3, 0) = s;
    return LorentzTransform(m);
}

LorentzTransform LorentzTransform::boost(const Vec3& unit_axis, double rapidity) {
    require_unit(unit_axis);
    if (!std::isfinite(rapidity)) throw Error(ErrorKind::invalid_argument, "rapidity must be finite");
    const Vec3 n = unit_axis.normalized();
    const double c = std::cosh(rapidity);
    const double s = std::sinh(rapidity);
    Mat4 m = Mat4::Identity();
    m(0, 0) = c;
    m.block<1, 3>(0, 1) = s * n.transpose();
    m.block<3, 1>(1, 0) = s * n;
    m.block<3, 3>(1, 1) = Mat3::Identity() + (c - 1.0) * n * n.transpose();
    return LorentzTransform(m);
}

LorentzTransform LorentzTransform::rotation(const Vec3& unit_axis, double angle) {
    require_unit(unit_axis);
    if (!std::isfinite(angle)) throw Error(ErrorKind::invalid_argument, "angle must be finite");
    Mat4 m = Mat4::Identity();
    m.block<3, 3>(1, 1) = Eigen::AngleAxisd(angle, unit_axis.normalized()).toRotationMatrix();
    return LorentzTransform(m);
}

LorentzTransform LorentzTransform::inverse() const {
    return LorentzTransform(eta() * m_.transpose() * eta());
}

double LorentzTransform::metric_defect() const {
    return (m_.transpose() * eta() * m_ - eta()).cwiseAbs().maxCoeff();
}

bool LorentzTransform::is_identity(double tol) const {
    return (m_ - Mat4::Identity()).cwiseAbs().maxCoeff() <= tol;
}

PoincareElement PoincareElement::inverse() const {
    const LorentzTransform inv = L.inverse();
    return {-inv(a), inv};
}

}  // namespace achronal

namespace achronal {

std::vector<Vec3> fibonacci_sphere(int n) {
    std::vector<Vec3> out;
    out.reserve(std::size_t(std::max(n, 0)));
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
        const double z = 1.0 - (2.0 * i + 1.0) / n;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        out.emplace_back(r * std::cos(golden * i), r * std::sin(golden * i), z);
    }
    return out;
}

}  // namespace achronal
