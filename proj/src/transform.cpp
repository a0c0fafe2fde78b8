#include "impiss/transform.hpp"

#include "impiss/errors.hpp"
#include "impiss/format.hpp"
#include "impiss/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace impiss {

namespace {

constexpr double kMinExponent = -8.0;
constexpr double kKnotStep = 0.25;  // decades
constexpr std::size_t kUnitKnot = 32;
constexpr double kDivergenceFloor = -1e6;
constexpr double kContractionLimit = 0.95;
constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

struct MonotoneTransform::State {
    Rate rate;
    double quad_tol = kDefaultQuadTol;
    std::array<double, kKnots> knot_q{};
    std::array<double, kKnots> knot_value{};
    double lower_limit = -kInf;

    // Integrand in w = ln s, so power-law rates become exponentials in w.
    double integrand(double w) const {
        const double s = std::exp(w);
        const double r = rate(s);
        if (!(r > 0.0) || !std::isfinite(r)) {
            throw Error(ErrorKind::RateSign, rate.name() + "(" + format_double(s) + ") = " + format_double(r) +
                                                 " is not positive");
        }
        return s / r;
    }

    double integral(double a, double b) const {
        if (!(a > 0.0) || !(b > 0.0)) throw Error(ErrorKind::Domain, "transform integral needs positive limits");
        if (a == b) return 0.0;
        return adaptive_simpson([this](double w) { return integrand(w); }, std::log(a), std::log(b), quad_tol);
    }

    std::size_t nearest_knot(double q) const {
        const double k = std::round((std::log10(q) - kMinExponent) / kKnotStep);
        return static_cast<std::size_t>(std::clamp(k, 0.0, static_cast<double>(kKnots - 1)));
    }

    double value(double q) const {
        if (q == 0.0) return lower_limit;
        if (!(q > 0.0)) throw Error(ErrorKind::Domain, "transform evaluated at negative argument");
        const std::size_t k = nearest_knot(q);
        return knot_value[k] + integral(knot_q[k], q);
    }
};

MonotoneTransform build_transform(Rate rate, double quad_tol) {
    if (!rate) throw Error(ErrorKind::Argument, "transform without rate");
    if (!(quad_tol > 0.0)) throw Error(ErrorKind::Argument, "quad_tol must be positive");
    auto st = std::make_shared<MonotoneTransform::State>();
    st->rate = std::move(rate);
    st->quad_tol = quad_tol;
    for (std::size_t k = 0; k < MonotoneTransform::kKnots; ++k) {
        st->knot_q[k] = k == kUnitKnot ? 1.0 : std::pow(10.0, kMinExponent + kKnotStep * static_cast<double>(k));
        const double r = st->rate(st->knot_q[k]);
        if (!(r > 0.0)) {
            throw Error(ErrorKind::RateSign, st->rate.name() + "(" + format_double(st->knot_q[k]) +
                                                 ") = " + format_double(r) + " is not positive");
        }
    }
    st->knot_value[kUnitKnot] = 0.0;
    for (std::size_t k = kUnitKnot + 1; k < MonotoneTransform::kKnots; ++k) {
        st->knot_value[k] = st->knot_value[k - 1] + st->integral(st->knot_q[k - 1], st->knot_q[k]);
    }
    for (std::size_t k = kUnitKnot; k-- > 0;) {
        st->knot_value[k] = st->knot_value[k + 1] - st->integral(st->knot_q[k], st->knot_q[k + 1]);
    }

    // Lower limit: partial integrals at q = 10^-j, j = 1..12. A geometric
    // contraction of successive decrements means convergence; the tail is
    // summed as a geometric series.
    std::array<double, 12> partial{};
    for (std::size_t j = 0; j < partial.size(); ++j) {
        partial[j] = st->value(std::pow(10.0, -static_cast<double>(j + 1)));
    }
    const double d_prev = partial[9] - partial[10];
    const double d_last = partial[10] - partial[11];
    const bool below_floor = std::any_of(partial.begin(), partial.end(), [](double p) { return p < kDivergenceFloor; });
    double m = -kInf;
    if (!below_floor) {
        if (d_last <= 0.0 || d_prev <= 0.0) {
            m = partial[11] - std::max(d_last, 0.0);
        } else {
            const double ratio = d_last / d_prev;
            if (ratio < kContractionLimit) m = partial[11] - d_last * ratio / (1.0 - ratio);
        }
        if (m < kDivergenceFloor) m = -kInf;
    }
    st->lower_limit = m;

    MonotoneTransform t;
    t.state_ = std::move(st);
    return t;
}

double MonotoneTransform::value(double q) const {
    return state_->value(q);
}

double MonotoneTransform::integral(double a, double b) const {
    return state_->integral(a, b);
}

double MonotoneTransform::lower_limit() const noexcept {
    return state_->lower_limit;
}

bool MonotoneTransform::has_finite_lower_limit() const noexcept {
    return std::isfinite(state_->lower_limit);
}

const Rate& MonotoneTransform::rate() const noexcept {
    return state_->rate;
}

double MonotoneTransform::quad_tol() const noexcept {
    return state_->quad_tol;
}

double MonotoneTransform::inverse(double y) const {
    const State& st = *state_;
    if (std::isnan(y)) throw Error(ErrorKind::Image, "NaN has no preimage");
    const double m = st.lower_limit;
    if (std::isfinite(m)) {
        if (y < m - kInverseTol * std::max(1.0, std::abs(m))) {
            throw Error(ErrorKind::Image, format_double(y) + " is below the lower limit " + format_double(m));
        }
        if (y <= m) return 0.0;
    } else if (y == -kInf) {
        return 0.0;
    }
    if (y == 0.0) return 1.0;

    const auto& kv = st.knot_value;
    const auto& kq = st.knot_q;
    std::size_t base = 0;
    double lo = 0.0;
    double hi = 0.0;
    if (y < kv.front()) {
        hi = kq.front();
        lo = hi;
        do {
            lo *= 0.1;
            if (lo < 1e-300) return 0.0;
        } while (kv.front() + st.integral(kq.front(), lo) > y);
    } else if (y > kv.back()) {
        base = kKnots - 1;
        lo = kq.back();
        hi = lo;
        do {
            hi *= 10.0;
            if (hi > 1e300) {
                throw Error(ErrorKind::Image, format_double(y) + " exceeds the supremum of the transform");
            }
        } while (kv.back() + st.integral(kq.back(), hi) < y);
    } else {
        const auto it = std::upper_bound(kv.begin(), kv.end(), y);
        base = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - kv.begin() - 1, 0));
        base = std::min(base, kKnots - 2);
        lo = kq[base];
        hi = kq[base + 1];
    }
    const double anchor_q = kq[base];
    const double anchor_v = kv[base];
    return solve_increasing([&st, anchor_q, anchor_v](double q) { return anchor_v + st.integral(anchor_q, q); }, y,
                            {lo, hi});
}

double transform_inverse(const MonotoneTransform& t, double y) {
    return t.inverse(y);
}

KLFunction build_beta_tilde(const MonotoneTransform& t) {
    return KLFunction([t](double v0, double tau) {
        if (v0 <= 0.0) return 0.0;
        if (tau <= 0.0) return v0;
        const double f0 = t.value(v0);
        if (!t.has_finite_lower_limit()) return t.inverse(f0 - tau);
        const double gap = f0 - t.lower_limit();
        return t.inverse(f0 + gap * std::expm1(-tau / gap));
    });
}

IssGains build_iss_gains(const ComparisonFunction& alpha1, const ComparisonFunction& alpha2,
                         const ComparisonFunction& alpha3, const ComparisonFunction& chi,
                         const KLFunction& beta_tilde) {
    IssGains gains;
    gains.beta = KLFunction([alpha1, alpha2, beta_tilde](double r, double s) {
        if (r <= 0.0) return 0.0;
        return impiss::inverse(alpha1, beta_tilde(alpha2(r), s));
    });
    gains.gamma = compose(inverse_function(alpha1), max_of(alpha3, chi)).with_tag(ClassTag::KInfinity);
    return gains;
}

}  // namespace impiss
