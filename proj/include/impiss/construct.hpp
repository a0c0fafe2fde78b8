#pragma once

// Dwell-time conditions and the two ISS-Lyapunov constructions from a
// candidate function:
//
//   stable flow, unstable jumps (sfuj), gaps >= theta:
//     integral_a^{alpha(a)} ds / rho(s) <= theta - delta
//     V = max{v1, v2},
//     v1 = F^-1(max{F(Vc) - (t_{i+1} - t)/(t_{i+1} - t_i) (theta - delta), m}),  v2 = kappa(Vc)
//
//   unstable flow, stable jumps (ufsj), gaps <= theta, F built from -rho:
//     integral_{alpha(a)}^a ds / (-rho(s)) >= theta - delta
//     V = F^-1(max{F(Vc) - (t - t_i)/(t_{i+1} - t_i) (theta + delta), m})
//
// Both are applied on every segment including [t_0, t_1).

#include "impiss/comparison.hpp"
#include "impiss/lyapunov.hpp"
#include "impiss/system.hpp"
#include "impiss/transform.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace impiss {

/// Slack on the dwell comparisons; the shipped stable-flow example sits at equality.
inline constexpr double kDwellTol = 1e-9;

struct DwellParams {
    Rate rho;
    ComparisonFunction alpha;
    double theta = 0.0;
    double delta = 0.0;
    std::vector<double> a_grid = log_grid(1e-6, 1e6, 121);
};

struct DwellReport {
    std::string regime;
    double bound = 0.0;        // theta - delta
    std::vector<double> a;
    std::vector<double> integral;
    double extreme = 0.0;      // max (sfuj) or min (ufsj) of the integrals
    double margin = 0.0;       // >= 0 passes (before tolerance)
    bool passed = false;

    [[nodiscard]] nlohmann::json to_json() const;
};

/// max_a integral_a^{alpha(a)} ds / rho(s) <= theta - delta. Throws Argument
/// unless theta > delta > 0; rate-sign errors propagate.
DwellReport check_dwell_sfuj(const DwellParams& p);
/// min_a integral_{alpha(a)}^a ds / (-rho(s)) >= theta - delta. Throws
/// Orientation if alpha(a) >= a at a grid point.
DwellReport check_dwell_ufsj(const DwellParams& p);

struct SweepPoint {
    double theta = 0.0;
    double delta = 0.0;
    bool pass = false;
};

/// Dwell check ("sfuj" or "ufsj") at every (theta, delta) pair, theta-major.
/// Pairs violating theta > delta > 0 report false. Up to `threads` workers.
std::vector<SweepPoint> sweep_dwell(const std::string& regime, const Rate& rho, const ComparisonFunction& alpha,
                                    const std::vector<double>& thetas, const std::vector<double>& deltas,
                                    std::size_t threads = 1);

/// kappa(s) = c s^2 / (1 + s) with c = 0.99 inf_grid min{alpha^-1(s), s} (1 + s) / s^2.
struct Kappa {
    double c = 0.0;
    ComparisonFunction fn;

    [[nodiscard]] double operator()(double s) const { return fn(s); }
    [[nodiscard]] double derivative(double s) const;
    [[nodiscard]] double inverse(double v) const;
};

/// Throws Construction when c is not positive or a grid check fails.
Kappa default_kappa(const ComparisonFunction& alpha, const std::vector<double>& grid = default_grid());

/// phi(v) = min{(delta/theta) rho(v), kappa'(kappa^-1(v)) rho(kappa^-1(v))}, class-P checked on the grid.
ComparisonFunction build_phi(const CandidateLyapunov& C, const DwellParams& p, const Kappa& kappa,
                             const std::vector<double>& grid = default_grid());

struct ConstructionResult {
    TimeVaryingLyapunov V;
    DwellReport dwell;
    nlohmann::json provenance;
};

/// Throws Precondition when the dwell check fails, Sequence when an impulse gap is below theta.
ConstructionResult construct_sfuj(const CandidateLyapunov& C, const DwellParams& p, const ImpulseSequence& S,
                                  const Kappa& kappa);
ConstructionResult construct_sfuj(const CandidateLyapunov& C, const DwellParams& p, const ImpulseSequence& S);

/// Throws Precondition when the dwell check fails or when some grid point has
/// integral below theta + delta (needed for jump non-increase), Sequence when
/// an impulse gap exceeds theta.
ConstructionResult construct_ufsj(const CandidateLyapunov& C, const DwellParams& p, const ImpulseSequence& S);

/// Gains of the Lyapunov estimate: beta from phi, gamma from alpha1, alpha3, chi.
IssGains gains_from_certificates(const Certificates& c);

}  // namespace impiss
