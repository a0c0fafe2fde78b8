#pragma once

// Candidate and time-varying ISS-Lyapunov functions and their trajectory-
// sampled verification. Every check is a sample of an inequality along a
// simulated trajectory; nothing here quantifies over all states.

#include "impiss/comparison.hpp"
#include "impiss/system.hpp"
#include "impiss/transform.hpp"

#include <json.hpp>

#include <iosfwd>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace impiss {

struct Certificates {
    ComparisonFunction alpha1;  // lower sandwich
    ComparisonFunction alpha2;  // upper sandwich
    ComparisonFunction chi;     // perturbation radius
    ComparisonFunction phi;     // decay rate, class P
    ComparisonFunction alpha3;  // jump bound below the radius
};

class TimeVaryingLyapunov {
public:
    using Fn = std::function<double(const SegmentClock&, const State&)>;

    TimeVaryingLyapunov() = default;
    TimeVaryingLyapunov(Fn fn, ImpulseSequence impulses, Certificates cert, std::string name = {})
        : fn_(std::move(fn)), impulses_(std::move(impulses)), cert_(std::move(cert)), name_(std::move(name)) {}

    /// Right-continuous value: t = t_i belongs to segment i.
    double operator()(double t, const State& x) const { return fn_(clock_at(impulses_, t), x); }
    double on_segment(const SegmentClock& c, const State& x) const { return fn_(c, x); }
    /// V(t^-, x): at an impulse time the formula of the segment that ends there.
    double left_limit(double t, const State& x) const;

    [[nodiscard]] const Certificates& certificates() const noexcept { return cert_; }
    [[nodiscard]] const ImpulseSequence& impulses() const noexcept { return impulses_; }
    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] const Fn& function() const noexcept { return fn_; }

private:
    Fn fn_;
    ImpulseSequence impulses_;
    Certificates cert_;
    std::string name_;
};

struct CandidateLyapunov {
    std::function<double(const State&)> V;
    ComparisonFunction psi1;
    ComparisonFunction psi2;
    ComparisonFunction eta;    // gate
    Rate rho;                  // flow rate, may be negative
    ComparisonFunction alpha;  // jump rate
    ComparisonFunction psi3;   // jump bound below the gate
    std::string name;
};

struct CheckEntry {
    std::string condition;
    double t = 0.0;
    double margin = 0.0;  // >= 0 passes
    bool pass = true;
    std::size_t trajectory = 0;
};

struct ConditionSummary {
    std::size_t checks = 0;
    std::size_t failures = 0;
    double worst_margin = 0.0;
    double worst_t = 0.0;
};

class VerificationReport {
public:
    explicit VerificationReport(std::string definition = {}) : definition_(std::move(definition)) {}

    void add(const std::string& condition, double t, double margin, std::size_t trajectory = 0);

    [[nodiscard]] const std::string& definition() const noexcept { return definition_; }
    [[nodiscard]] const std::vector<CheckEntry>& checks() const noexcept { return checks_; }
    [[nodiscard]] bool passed() const noexcept { return failures_ == 0; }
    [[nodiscard]] std::size_t failures() const noexcept { return failures_; }
    [[nodiscard]] double worst_margin() const noexcept { return worst_margin_; }
    [[nodiscard]] std::map<std::string, ConditionSummary> summary() const;
    [[nodiscard]] std::vector<CheckEntry> failing(const std::string& condition = {}) const;

    /// All entries when there are at most max_entries, otherwise the failing
    /// ones plus the worst entry of each condition ("truncated": true).
    [[nodiscard]] nlohmann::json to_json(std::size_t max_entries = 10000) const;

private:
    std::string definition_;
    std::vector<CheckEntry> checks_;
    std::size_t failures_ = 0;
    double worst_margin_ = std::numeric_limits<double>::infinity();
};

struct VerifyOptions {
    double h = 0.0;            // Dini step; 0 means the trajectory step
    double c_slack = 10.0;     // flow slack c_slack * h * (1 + |V|)
    double roundoff = 1e-9;    // relative tolerance of sandwich and jump checks
    double gate_strict = 1e-12;
};

/// max over h' in {h, h/2, h/4} of (V(t+h', x(t+h')) - V(t, x(t))) / h'.
/// Throws SegmentBoundary when t + h leaves the flow segment containing t.
double dini_derivative(const TimeVaryingLyapunov& V, const Trajectory& traj, double t, double h);

/// Conditions: sandwich_lower/upper (i); flow_decay and jump_nonincrease
/// gated by V >= chi(|u|_inf) (ii); jump_bound for V(t_i^-) < chi (iii).
VerificationReport verify_definition3(const TimeVaryingLyapunov& V, const std::vector<Trajectory>& trajectories,
                                      const VerifyOptions& opts = {});

/// Conditions: sandwich_lower/upper; flow_rate and jump_rate gated by
/// V_cand >= eta(|u|_inf) at the (left-limit) state; jump_bound below the gate.
VerificationReport verify_definition2(const CandidateLyapunov& C, const std::vector<Trajectory>& trajectories,
                                      const VerifyOptions& opts = {});

/// |x(t)| <= beta(|x0|, t - t0) + gamma(|u|_inf) at every stored sample.
VerificationReport check_iss_estimate(const Trajectory& traj, const IssGains& gains, std::size_t trajectory = 0,
                                      double roundoff = 1e-9);

/// Header t,V,chi_level,pre_jump; impulse times appear twice like the trajectory CSV.
void write_lyapunov_csv(std::ostream& os, const TimeVaryingLyapunov& V, const Trajectory& traj);

}  // namespace impiss
