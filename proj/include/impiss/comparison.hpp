#pragma once

// Comparison functions (classes K, K-infinity, P) and KL functions.
//
// Class membership is an analytic property; everything here certifies it on
// finite grids only. K-infinity unboundedness in particular is a heuristic
// "still growing over the last decade" check, not a proof.

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace impiss {

using ScalarFn = std::function<double(double)>;

enum class ClassTag { K, KInfinity, P, Generic };

std::string_view to_string(ClassTag tag);

/// Absolute image tolerance of every monotone inversion in the library.
inline constexpr double kInverseTol = 1e-12;
inline constexpr int kInverseMaxIter = 200;
inline constexpr double kDefaultDomainHint = 1e6;

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Signed scalar rate. Unlike a comparison function it may take negative
/// values (the unstable-flow regime uses rho < 0).
class Rate {
public:
    Rate() = default;
    Rate(ScalarFn fn, std::string name) : fn_(std::move(fn)), name_(std::move(name)) {}

    double operator()(double s) const { return fn_(s); }
    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] explicit operator bool() const noexcept { return static_cast<bool>(fn_); }

    [[nodiscard]] Rate negated() const;
    [[nodiscard]] Rate scaled(double c) const;

private:
    ScalarFn fn_;
    std::string name_;
};

class ComparisonFunction {
public:
    ComparisonFunction() = default;
    ComparisonFunction(ScalarFn fn, ClassTag tag, std::string name = {},
                       double domain_hint = kDefaultDomainHint);

    /// Throws Domain for s < 0 and ClassViolation if the value is negative or NaN.
    double operator()(double s) const;

    [[nodiscard]] ClassTag tag() const noexcept { return tag_; }
    [[nodiscard]] double domain_hint() const noexcept { return domain_hint_; }
    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] explicit operator bool() const noexcept { return static_cast<bool>(fn_); }

    [[nodiscard]] ComparisonFunction with_tag(ClassTag tag) const;
    /// Attaches a closed-form inverse used by inverse() instead of root finding.
    [[nodiscard]] ComparisonFunction with_inverse(ScalarFn inv) const;
    [[nodiscard]] const ScalarFn& explicit_inverse() const noexcept { return inv_; }
    [[nodiscard]] Rate as_rate() const;

    static ComparisonFunction identity();
    static ComparisonFunction zero();
    /// a*s
    static ComparisonFunction linear(double a);
    /// c*s^p
    static ComparisonFunction power(double c, double p);
    /// c*(exp(k*s) - 1)
    static ComparisonFunction exp_scaled(double c, double k);
    /// Monotone piecewise-linear interpolation; xs must start at 0 and both
    /// columns must be strictly increasing. Extrapolates with the last slope.
    static ComparisonFunction table(std::vector<double> xs, std::vector<double> ys,
                                    std::string name = "table");
    /// Two numeric columns per line (comma or whitespace separated), '#' comments.
    static ComparisonFunction table_file(const std::string& path);

private:
    ScalarFn fn_;
    ScalarFn inv_;
    ClassTag tag_ = ClassTag::Generic;
    std::string name_;
    double domain_hint_ = kDefaultDomainHint;
};

/// Parses "linear:a", "power:c,p", "exp:c,k", "table:<path>" or "id".
ComparisonFunction parse_comparison(std::string_view spec, ClassTag tag = ClassTag::KInfinity);
/// Same syntax, no sign restriction ("linear:-2" is a valid rate).
Rate parse_rate(std::string_view spec);

/// Solves f(s) = y for s in the bracket by bisection interleaved with
/// Illinois secant steps. |f(s) - y| <= kInverseTol on return unless the
/// floating-point resolution of f is coarser than that.
double inverse(const ComparisonFunction& f, double y, Interval bracket);
/// Bracket [0, domain_hint], doubled upward until it contains y.
double inverse(const ComparisonFunction& f, double y);
/// Monotone solve for an arbitrary increasing scalar function.
double solve_increasing(const ScalarFn& f, double y, Interval bracket);

/// s -> inverse(f, s) as a comparison function (tagged like f).
ComparisonFunction inverse_function(const ComparisonFunction& f);
/// (f o g)(s) = f(g(s)); K-infinity when both are.
ComparisonFunction compose(const ComparisonFunction& f, const ComparisonFunction& g);
/// Pointwise maximum.
ComparisonFunction max_of(const ComparisonFunction& f, const ComparisonFunction& g);

class KLFunction {
public:
    KLFunction() = default;
    explicit KLFunction(std::function<double(double, double)> fn) : fn_(std::move(fn)) {}
    double operator()(double r, double s) const { return fn_(r, s); }

private:
    std::function<double(double, double)> fn_;
};

struct ClassViolation {
    std::string property;  // "zero", "increasing", "positive", "unbounded", "negative", "decay"
    double at = 0.0;       // first witnessing grid point
    double value = 0.0;
};

struct ClassReport {
    ClassTag tag = ClassTag::Generic;
    std::vector<ClassViolation> violations;
    [[nodiscard]] bool passed() const noexcept { return violations.empty(); }
};

std::vector<double> log_grid(double lo, double hi, std::size_t n);
/// 256 log-spaced points over [1e-9, domain_hint].
std::vector<double> default_grid(double domain_hint = kDefaultDomainHint);

ClassReport verify_class(const ComparisonFunction& f, ClassTag tag, const std::vector<double>& grid);
inline ClassReport verify_class(const ComparisonFunction& f, const std::vector<double>& grid) {
    return verify_class(f, f.tag(), grid);
}

/// Class-K in r for every sampled s; non-increasing in s for every sampled r,
/// and beta(r, s_last) <= vanish_ratio * beta(r, s_first).
ClassReport verify_kl(const KLFunction& beta, const std::vector<double>& r_grid,
                      const std::vector<double>& s_grid, double vanish_ratio = 1e-3);

}  // namespace impiss
