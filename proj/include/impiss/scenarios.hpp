#pragma once

// Built-in scenarios and the JSON scenario loader.
//
// Config schema (all keys optional unless noted):
//
//   label
//   system.dim | system.grid.N                     (one required)
//   system.flow      {kind: linear|diagonal, matrix|diag, input_gain}
//                    {kind: heat, a, f_gain}
//   system.jumps     {kind: linear|diagonal, matrix|diag, input_gain}
//                    {kind: tanh, matrix, tanh_matrix}   g = M x + u tanh(B x)
//                    {kind: heat, profile: uniform|scaled-cap}
//   system.impulses  {periodic: c} | {list: [t1, ...]}, t0
//   input            {kind: constant, level}
//   x0               [..] | {kind: heat_bump, amplitude}
//   lyapunov         {form: heat|rotation2d, params: {drop_discount}}
//   candidate        {V: {kind: quadratic, P} , psi1, psi2, eta, rho, alpha, psi3}
//   construct        {regime: sfuj|ufsj, theta, delta}
//   run              {horizon, step}                    (required)

#include "impiss/lyapunov.hpp"
#include "impiss/system.hpp"

#include <json.hpp>

#include <memory>
#include <optional>
#include <string>

namespace impiss {

struct ConstructDefaults {
    std::string regime;  // "sfuj" or "ufsj"
    double theta = 0.0;
    double delta = 0.0;
};

struct Scenario {
    std::string label;
    std::shared_ptr<const ImpulsiveSystem> system;
    std::shared_ptr<const InputSignal> input;
    State x0;
    double horizon = 0.0;
    double step = 0.0;
    std::optional<TimeVaryingLyapunov> lyapunov;
    std::optional<CandidateLyapunov> candidate;
    std::optional<ConstructDefaults> construct;

    [[nodiscard]] Trajectory run() const { return simulate(system, x0, input, horizon, step); }
    [[nodiscard]] Trajectory run(const State& x) const { return simulate(system, x, input, horizon, step); }
};

struct RotationOptions {
    double u_level = 0.1;
    double horizon = 7.5;
    double step = 1e-4;
    State x0 = State::Constant(2, 1e3);
    bool drop_discount = false;
};

struct HeatOptions {
    std::size_t n = 201;
    double a = 0.1;
    double f_gain = 2.0;
    double u_level = 0.1;
    double period = 0.5;
    double amplitude = 2.0;  // x0(y) = amplitude * (y^2 - 1)^2
    double horizon = 2.0;
    double step = 1e-3;
    HeatJump jump = HeatJump::Uniform;
};

/// x' = A x with A = [[1, 1], [-1, 1]], g(x, u) = (2 x1, u tanh(x2)), t_i = i pi/2,
/// V(t, x) = e^{-4 tau} x^T R(tau) D R(tau)^T x with tau = t - t_n, D = diag(1/4, 2 e^{2 pi}).
Scenario scenario_rotation2d(const RotationOptions& opts = {});
TimeVaryingLyapunov rotation2d_lyapunov(const ImpulseSequence& impulses, bool drop_discount = false);

/// Semidiscretized heat equation with V(t, x) = |e^{-h(t)} x|_2^2,
/// h(t) = (t - t_n) / (t_{n+1} - t_n) - 1/2.
Scenario scenario_heat(const HeatOptions& opts = {});
TimeVaryingLyapunov heat_lyapunov(const ImpulsiveSystem& sys, double a);
State heat_bump(const GridMeta& grid, double amplitude);

/// x' = -x, x -> sqrt(2) x, gaps 1, V_cand = x^2, rho = 2v, alpha = 2a;
/// construct defaults theta = 1, delta = 1 - ln(2)/2.
Scenario scenario_scalar_sfuj(double x0 = 1.0, double horizon = 5.0, double step = 1e-3);
/// x' = x, x -> x/2, gaps 1/2, V_cand = x^2, rho = -2v, alpha = a/4;
/// construct defaults theta = 1/2, delta = 1/10.
Scenario scenario_scalar_ufsj(double x0 = 1.0, double horizon = 5.0, double step = 1e-3);

/// Names accepted by builtin_scenario: heat, rotation2d, scalar-sfuj, scalar-ufsj.
std::optional<Scenario> builtin_scenario(const std::string& name);

/// Throws ConfigError naming the offending path.
Scenario load_scenario(const nlohmann::json& config);
Scenario load_scenario_file(const std::string& path);
/// Built-in name or path to a JSON file.
Scenario resolve_scenario(const std::string& name_or_path);

}  // namespace impiss
