#pragma once

// Achronal separateness, causal complements, determinacy sets and the
// consistency of probabilities assigned through determinacy sets.

#include "achronal/localization.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace achronal {

/// x ≠ y and (x − y)² ≤ 0.
bool achronally_separated(const FourVector& x, const FourVector& y);

enum class RegionKind { ball_in_plane, diamond, point, graph_patch, unite, intersect, causal_complement };

std::string to_string(RegionKind k);

class SpacetimeRegion {
public:
    /// {(t0, y) : |y − c| ≤ r}
    static SpacetimeRegion ball_in_plane(double t0, const Vec3& center, double r);
    /// {x : x − p and q − x future causal}, q − p future timelike.
    static SpacetimeRegion diamond(const FourVector& p, const FourVector& q);
    /// Diamond over ball_in_plane(t0, c, r): |x₀ − t0| + |x − c| ≤ r.
    static SpacetimeRegion diamond(double t0, const Vec3& center, double r);
    static SpacetimeRegion point(const FourVector& p);
    /// Graph of the surface over the mask (a ball mask on a flat surface
    /// becomes ball_in_plane).
    static SpacetimeRegion graph_patch(const Region& r);
    static SpacetimeRegion unite(const SpacetimeRegion& a, const SpacetimeRegion& b);
    static SpacetimeRegion intersect(const SpacetimeRegion& a, const SpacetimeRegion& b);
    /// M^⊥ as a region; membership is decided by causal_complement_member.
    static SpacetimeRegion complement(const SpacetimeRegion& m);

    RegionKind kind() const { return kind_; }
    bool contains(const FourVector& x) const;
    std::string describe() const;

    /// Image under g; ball_in_plane only under rotations and translations.
    SpacetimeRegion transformed(const PoincareElement& g) const;

    // parameters
    double t0() const { return t0_; }
    const Vec3& center() const { return c_; }
    double radius() const { return r_; }
    const FourVector& bottom() const { return p_; }
    const FourVector& top() const { return q_; }
    /// Graph patch behind ball_in_plane and graph_patch regions.
    const Region& patch() const;
    const std::vector<SpacetimeRegion>& parts() const { return parts_; }

private:
    SpacetimeRegion() = default;

    RegionKind kind_ = RegionKind::point;
    double t0_ = 0.0, r_ = 0.0;
    Vec3 c_ = Vec3::Zero();
    FourVector p_, q_;
    std::shared_ptr<const Region> patch_;
    std::vector<SpacetimeRegion> parts_;
};

enum class Verdict { member, not_member, inconclusive };

std::string to_string(Verdict v);

struct Membership {
    Verdict verdict = Verdict::inconclusive;
    std::optional<FourVector> witness;   // offending point (complements)
    std::optional<Vec3> velocity;        // escaping timelike line (determinacy)
    std::size_t samples = 0;             // Monte-Carlo points or sampled lines
    double margin = 0.0;                 // certified slack of the verdict

    bool member() const { return verdict == Verdict::member; }
};

struct ComplementOptions {
    std::vector<int> samples_per_axis{24, 48, 96};  // escalation levels for general graph patches
};

/// Closed form for ball, diamond, point and unions; certified sampling for
/// general graph patches. Intersections are decided only when x lies in the
/// complement of one of the parts.
Membership causal_complement_member(const SpacetimeRegion& M, const FourVector& x, const ComplementOptions& opt = {});

/// (M^⊥)^⊥ membership for ball, diamond and point regions, computed as a
/// supremum over the complement (independently of the determinacy formula).
/// Throws unsupported for other forms.
Membership double_complement_member(const SpacetimeRegion& M, const FourVector& x);

struct DeterminacyOptions {
    std::vector<double> speeds{0.5, 0.9, 0.99};
    std::vector<int> directions{64, 256, 1024};  // escalation levels
};

/// Every timelike line through x meets Δ. Closed form for ball_in_plane,
/// point and full maximal patches; sampled lines otherwise.
Membership determinacy_member(const SpacetimeRegion& delta, const FourVector& x, const DeterminacyOptions& opt = {});

struct LogicReport {
    std::size_t samples = 0;
    std::size_t considered = 0;    // outside the ε-shell and conclusive
    std::size_t agreements = 0;
    std::size_t shell = 0;         // skipped inside the ε-shell
    std::size_t inconclusive = 0;
    std::vector<FourVector> counterexamples;  // re-verified

    double agreement() const { return considered ? double(agreements) / double(considered) : 1.0; }
};

/// Compares determinacy and double-complement membership on stratified
/// samples of a box around the region's diamond.
LogicReport completion_equals_determinacy_check(const SpacetimeRegion& delta, std::size_t samples, std::uint64_t seed,
                                                double shell);

struct RclResult {
    LocalizationResult p1, p2;
    LogicReport precondition;
    double relative_difference = 0.0;  // |p1 − p2| / ‖φ‖²
};

/// Checks Δ₁~ = Δ₂~ = M on samples (determinacy error otherwise) and returns
/// both probabilities.
RclResult rcl_well_defined_check(const CurrentSpec& spec, const SpacetimeRegion& diamond, const Region& d1,
                                 const Region& d2, std::size_t samples = 2000, std::uint64_t seed = 1,
                                 const LocalizationOptions& opt = {});

}  // namespace achronal
