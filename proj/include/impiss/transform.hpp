#pragma once

// Integral transform of a decay rate and the ISS gains assembled from it.
//
//   value(q) = integral_1^q ds / rate(s)
//
// is strictly increasing wherever rate > 0. Its limit m as q -> 0+ is either
// finite (finite-time convergence, e.g. rate = sqrt(s)) or -infinity.

#include "impiss/comparison.hpp"

#include <array>
#include <memory>

namespace impiss {

inline constexpr double kDefaultQuadTol = 1e-10;

class MonotoneTransform {
public:
    /// Knots q_k = 10^(-8 + k/4), k = 0..64 (the middle knot is q = 1).
    static constexpr std::size_t kKnots = 65;

    MonotoneTransform() = default;

    [[nodiscard]] double value(double q) const;
    /// integral_a^b ds / rate(s), a, b > 0.
    [[nodiscard]] double integral(double a, double b) const;
    [[nodiscard]] double inverse(double y) const;

    [[nodiscard]] double lower_limit() const noexcept;
    [[nodiscard]] bool has_finite_lower_limit() const noexcept;
    [[nodiscard]] const Rate& rate() const noexcept;
    [[nodiscard]] double quad_tol() const noexcept;

private:
    friend MonotoneTransform build_transform(Rate rate, double quad_tol);
    struct State;
    std::shared_ptr<const State> state_;
};

/// Throws RateSign when the rate is not positive at a sampled knot.
MonotoneTransform build_transform(Rate rate, double quad_tol = kDefaultQuadTol);
inline MonotoneTransform build_transform(const ComparisonFunction& rate, double quad_tol = kDefaultQuadTol) {
    return build_transform(rate.as_rate(), quad_tol);
}

/// q >= 0 with value(q) = y; y equal to a finite lower limit maps to 0.
/// Throws Image for y below the lower limit or above the supremum of value.
double transform_inverse(const MonotoneTransform& t, double y);

/// Decay bound for v' <= -rate(v):
///   m = -inf:  b(v0, tau) = F^-1(F(v0) - tau)
///   m finite:  b(v0, tau) = F^-1(F(v0) - (F(v0) - m)(1 - exp(-tau / (F(v0) - m))))
KLFunction build_beta_tilde(const MonotoneTransform& t);

struct IssGains {
    KLFunction beta;
    ComparisonFunction gamma;
};

/// beta(r, s) = alpha1^-1(beta_tilde(alpha2(r), s)),
/// gamma      = alpha1^-1 o max{alpha3, chi}.
IssGains build_iss_gains(const ComparisonFunction& alpha1, const ComparisonFunction& alpha2,
                         const ComparisonFunction& alpha3, const ComparisonFunction& chi,
                         const KLFunction& beta_tilde);

}  // namespace impiss
