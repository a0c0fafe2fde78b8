#pragma once

// Impulsive systems
//
//   x'(t) = flow(t, x, u(t))              between impulses
//   x(t_i) = jump(i, x^-(t_i), u^-(t_i))  at impulses
//
// and a fixed-step RK4 simulator that lands exactly on every impulse time.

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace impiss {

using State = Eigen::VectorXd;

inline constexpr double kBlowUpThreshold = 1e12;
inline constexpr double kInputLeftOffset = 1e-12;

/// t_0 < t_1 < t_2 < ... ; index 0 is the initial time, impulses are i >= 1.
/// An explicit list is continued periodically with its last gap.
class ImpulseSequence {
public:
    ImpulseSequence() = default;

    static ImpulseSequence periodic(double period, double t0 = 0.0);
    static ImpulseSequence list(std::vector<double> times, double t0 = 0.0);

    [[nodiscard]] double t0() const noexcept { return t0_; }
    [[nodiscard]] double time(std::size_t i) const;
    /// Largest i with time(i) <= t; throws Range for t < t0.
    [[nodiscard]] std::size_t segment_index(double t) const;
    /// Gaps t_{i+1} - t_i over i >= 0 (the list plus its periodic tail).
    [[nodiscard]] double min_gap() const;
    [[nodiscard]] double max_gap() const;

    [[nodiscard]] bool is_periodic() const noexcept { return listed_.empty(); }
    [[nodiscard]] double period() const noexcept { return period_; }
    [[nodiscard]] const std::vector<double>& listed() const noexcept { return listed_; }

private:
    double t0_ = 0.0;
    double period_ = 1.0;
    std::vector<double> listed_;
};

/// Scalar input signal with a declared sup-norm over the horizon.
struct InputSignal {
    std::function<double(double)> eval;
    double sup_norm = 0.0;
    std::string label;

    static InputSignal constant(double level);
    double operator()(double t) const { return eval(t); }
};

/// Uniform grid on [-1, 1] with zero Dirichlet boundary; nodes are interior only.
struct GridMeta {
    std::vector<double> nodes;
    double spacing = 0.0;
};

using FlowFn = std::function<State(double t, const State& x, double u)>;
using JumpFn = std::function<State(std::size_t i, const State& x, double u)>;

struct ImpulsiveSystem {
    std::size_t dim = 0;
    FlowFn flow;
    JumpFn jump;
    ImpulseSequence impulses;
    std::optional<GridMeta> grid;
    /// Largest RK4 substep for which the flow is numerically stable (stiff
    /// semidiscretizations); sample steps above it are split evenly.
    double max_substep = std::numeric_limits<double>::infinity();
    std::string label;

    /// L2 norm on the grid when present, Euclidean otherwise.
    [[nodiscard]] double norm(const State& x) const;
};

/// Position of t inside a flow segment [start, end) with end the next impulse.
struct SegmentClock {
    std::size_t index = 0;
    double start = 0.0;
    double end = 0.0;
    double t = 0.0;

    [[nodiscard]] double elapsed() const noexcept { return t - start; }
    [[nodiscard]] double fraction() const noexcept { return (t - start) / (end - start); }
};

SegmentClock clock_at(const ImpulseSequence& s, double t);

struct Sample {
    double t = 0.0;
    State x;
};

struct Segment {
    std::size_t index = 0;
    double start = 0.0;
    double next_impulse = 0.0;
    double stop = 0.0;  // min(next_impulse, horizon)
    bool ends_with_jump = false;
    /// First sample is the post-jump state at start; last sample is at stop
    /// (the left limit when ends_with_jump).
    std::vector<Sample> samples;

    [[nodiscard]] SegmentClock clock(double t) const { return {index, start, next_impulse, t}; }
};

class Trajectory {
public:
    [[nodiscard]] const std::vector<Segment>& segments() const noexcept { return segments_; }
    [[nodiscard]] double t0() const noexcept { return segments_.front().start; }
    [[nodiscard]] double horizon() const noexcept { return horizon_; }
    [[nodiscard]] double step() const noexcept { return step_; }
    [[nodiscard]] const State& x0() const noexcept { return segments_.front().samples.front().x; }
    [[nodiscard]] const ImpulsiveSystem& system() const noexcept { return *system_; }
    [[nodiscard]] const InputSignal& input() const noexcept { return *input_; }

    /// Right-continuous state; between samples one RK4 step from the previous sample.
    [[nodiscard]] State state_at(double t) const;
    [[nodiscard]] const Segment& segment_at(double t) const;
    /// One RK4 step of length h from (t, x) with the trajectory's input.
    [[nodiscard]] State advance(double t, const State& x, double h) const;
    [[nodiscard]] std::vector<double> impulse_times() const;

private:
    friend Trajectory simulate(std::shared_ptr<const ImpulsiveSystem>, const State&,
                               std::shared_ptr<const InputSignal>, double, double);
    std::vector<Segment> segments_;
    double horizon_ = 0.0;
    double step_ = 0.0;
    std::shared_ptr<const ImpulsiveSystem> system_;
    std::shared_ptr<const InputSignal> input_;
};

/// Classical RK4 with the last substep of every segment shortened to land on
/// the impulse time. Impulses strictly inside (t0, horizon) are applied.
/// Throws BlowUp when a component leaves [-1e12, 1e12] or is not finite.
Trajectory simulate(std::shared_ptr<const ImpulsiveSystem> sys, const State& x0,
                    std::shared_ptr<const InputSignal> u, double horizon, double step);
Trajectory simulate(const ImpulsiveSystem& sys, const State& x0, const InputSignal& u, double horizon,
                    double step);

/// Stored pre-jump state at impulse times, the continuous state elsewhere.
State left_limit(const Trajectory& traj, double t);

State rk4_step(const FlowFn& flow, const std::function<double(double)>& u, double t, const State& x, double h);
/// rk4_step repeated over ceil(h / max_substep) equal substeps.
State integrate(const FlowFn& flow, const std::function<double(double)>& u, double t, const State& x, double h,
                double max_substep);

enum class HeatJump { Uniform, ScaledCap };

HeatJump parse_heat_jump(const std::string& name);
std::string to_string(HeatJump kind);

/// Second-order central differences on N odd interior nodes of [-1, 1];
/// flow = a * Laplacian + f_gain * x. Jumps set node values to
/// sqrt(|u| * ||x||_2) (uniform) or cap them at that level keeping the shape
/// (scaled-cap).
ImpulsiveSystem semidiscretize_heat(double a, std::size_t n, double f_gain, HeatJump jump,
                                    ImpulseSequence impulses);

/// Composite trapezoid rule including the zero boundary values.
double l2_norm(const State& x, const std::optional<GridMeta>& grid);
double l2_norm(const State& x, const GridMeta& grid);
/// Forward-difference derivative norm with the boundary zeros included.
double l2_gradient_norm(const State& x, const GridMeta& grid);

/// Value attached to each CSV row, evaluated on the row's segment clock.
using SegmentValue = std::function<double(const SegmentClock&, const State&)>;

/// Header t,norm,V,pre_jump,x0..x{n-1}. Impulse times appear twice: the
/// left-limit row with pre_jump=1, then the post-jump row with pre_jump=0.
/// V is left empty when no value function is given.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const SegmentValue& value = {},
                          bool node_columns = true);
void write_grid_csv(std::ostream& os, const GridMeta& grid);

}  // namespace impiss
