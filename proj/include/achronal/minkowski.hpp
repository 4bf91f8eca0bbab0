#pragma once

// Minkowski-space primitives in natural units (c = 1), signature (+,-,-,-).

#include <Eigen/Dense>

#include <cmath>

#include <string>
#include <vector>

namespace achronal {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

struct FourVector {
    double t = 0.0;
    Vec3 x = Vec3::Zero();

    FourVector() = default;
    FourVector(double t_, const Vec3& x_) : t(t_), x(x_) {}
    FourVector(double t_, double x1, double x2, double x3) : t(t_), x(x1, x2, x3) {}

    static FourVector from_vec(const Vec4& v) { return {v[0], Vec3(v[1], v[2], v[3])}; }
    Vec4 vec() const { return {t, x[0], x[1], x[2]}; }

    double operator[](int mu) const { return mu == 0 ? t : x[mu - 1]; }

    bool is_finite() const { return std::isfinite(t) && x.allFinite(); }
};

inline FourVector operator+(const FourVector& a, const FourVector& b) { return {a.t + b.t, a.x + b.x}; }
inline FourVector operator-(const FourVector& a, const FourVector& b) { return {a.t - b.t, a.x - b.x}; }
inline FourVector operator-(const FourVector& a) { return {-a.t, -a.x}; }
inline FourVector operator*(double s, const FourVector& a) { return {s * a.t, s * a.x}; }

/// a·b = a₀b₀ − a⃗·b⃗
inline double minkowski_product(const FourVector& a, const FourVector& b) {
    return a.t * b.t - a.x.dot(b.x);
}

inline double minkowski_square(const FourVector& a) { return minkowski_product(a, a); }

/// Mass-shell four-momentum (ε(p), p).
inline FourVector on_shell(const Vec3& p, double mass) {
    return {std::sqrt(mass * mass + p.squaredNorm()), p};
}

enum class CausalType { zero, timelike, lightlike, spacelike };

struct CausalClass {
    CausalType type = CausalType::zero;
    bool future_directed = false;

    bool causal() const { return type == CausalType::timelike || type == CausalType::lightlike; }
};

/// Lightlike is decided with a relative tolerance on |z₀| − |z⃗|.
CausalClass classify(const FourVector& z, double rel_tol = 1e-12);

std::string to_string(CausalType type);

/// Proper orthochronous Lorentz transformation. Every instance satisfies
/// ΛᵀηΛ = η, det Λ = 1 and Λ₀₀ ≥ 1 up to rounding.
class LorentzTransform {
public:
    LorentzTransform() : m_(Mat4::Identity()) {}

    /// Validates the group invariants; throws invalid_argument otherwise.
    static LorentzTransform from_matrix(const Mat4& m, double tol = 1e-12);

    static LorentzTransform identity() { return {}; }
    static LorentzTransform boost_z(double rapidity);
    static LorentzTransform boost(const Vec3& unit_axis, double rapidity);
    static LorentzTransform rotation(const Vec3& unit_axis, double angle);

    const Mat4& matrix() const { return m_; }

    FourVector operator()(const FourVector& v) const { return FourVector::from_vec(m_ * v.vec()); }
    LorentzTransform operator*(const LorentzTransform& o) const { return LorentzTransform(m_ * o.m_); }

    /// Λ⁻¹ = η Λᵀ η.
    LorentzTransform inverse() const;

    /// max |ΛᵀηΛ − η| entry.
    double metric_defect() const;

    bool is_identity(double tol = 0.0) const;

private:
    explicit LorentzTransform(const Mat4& m) : m_(m) {}

    Mat4 m_;
};

inline LorentzTransform boost_z(double rapidity) { return LorentzTransform::boost_z(rapidity); }
inline LorentzTransform rotation(const Vec3& unit_axis, double angle) {
    return LorentzTransform::rotation(unit_axis, angle);
}

/// (a, Λ) acting by x ↦ a + Λx; composition (a,Λ)(a',Λ') = (a + Λa', ΛΛ').
struct PoincareElement {
    FourVector a;
    LorentzTransform L;

    static PoincareElement identity() { return {}; }
    static PoincareElement translation(const FourVector& a) { return {a, LorentzTransform{}}; }
    static PoincareElement lorentz(const LorentzTransform& L) { return {FourVector{}, L}; }

    PoincareElement operator*(const PoincareElement& o) const { return {a + L(o.a), L * o.L}; }
    PoincareElement inverse() const;
};

inline FourVector act(const PoincareElement& g, const FourVector& x) { return g.a + g.L(x); }

/// n nearly uniform unit vectors on the golden-angle spiral.
std::vector<Vec3> fibonacci_sphere(int n);

}  // namespace achronal
