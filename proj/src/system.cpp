#include "impiss/system.hpp"

#include "impiss/errors.hpp"
#include "impiss/format.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace impiss {

namespace {

constexpr double kMergeFraction = 1e-9;

bool finite_and_bounded(const State& x) {
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        if (!std::isfinite(x[k]) || std::abs(x[k]) > kBlowUpThreshold) return false;
    }
    return true;
}

}  // namespace

ImpulseSequence ImpulseSequence::periodic(double period, double t0) {
    if (!(period > 0.0) || !std::isfinite(period)) throw Error(ErrorKind::Argument, "impulse period must be positive");
    ImpulseSequence s;
    s.t0_ = t0;
    s.period_ = period;
    return s;
}

ImpulseSequence ImpulseSequence::list(std::vector<double> times, double t0) {
    if (times.empty()) throw Error(ErrorKind::Argument, "impulse list is empty");
    double prev = t0;
    for (double t : times) {
        if (!(t > prev)) throw Error(ErrorKind::Argument, "impulse times must be strictly increasing and after t0");
        prev = t;
    }
    ImpulseSequence s;
    s.t0_ = t0;
    s.listed_ = std::move(times);
    const std::size_t n = s.listed_.size();
    s.period_ = n >= 2 ? s.listed_[n - 1] - s.listed_[n - 2] : s.listed_[0] - t0;
    return s;
}

double ImpulseSequence::time(std::size_t i) const {
    if (i == 0) return t0_;
    if (listed_.empty()) return t0_ + period_ * static_cast<double>(i);
    if (i <= listed_.size()) return listed_[i - 1];
    return listed_.back() + period_ * static_cast<double>(i - listed_.size());
}

std::size_t ImpulseSequence::segment_index(double t) const {
    if (!(t >= t0_)) throw Error(ErrorKind::Range, "time " + format_double(t) + " precedes t0");
    std::size_t i = 0;
    if (listed_.empty()) {
        i = static_cast<std::size_t>(std::floor((t - t0_) / period_));
    } else if (t < listed_.back()) {
        i = static_cast<std::size_t>(std::upper_bound(listed_.begin(), listed_.end(), t) - listed_.begin());
        return i;
    } else {
        i = listed_.size() + static_cast<std::size_t>(std::floor((t - listed_.back()) / period_));
    }
    while (i > 0 && time(i) > t) --i;
    while (time(i + 1) <= t) ++i;
    return i;
}

double ImpulseSequence::min_gap() const {
    double g = period_;
    for (std::size_t i = 0; i < listed_.size(); ++i) g = std::min(g, time(i + 1) - time(i));
    return g;
}

double ImpulseSequence::max_gap() const {
    double g = period_;
    for (std::size_t i = 0; i < listed_.size(); ++i) g = std::max(g, time(i + 1) - time(i));
    return g;
}

InputSignal InputSignal::constant(double level) {
    return {[level](double) { return level; }, std::abs(level), "constant:" + format_double(level)};
}

double ImpulsiveSystem::norm(const State& x) const {
    return grid ? l2_norm(x, *grid) : x.norm();
}

SegmentClock clock_at(const ImpulseSequence& s, double t) {
    const std::size_t i = s.segment_index(t);
    return {i, s.time(i), s.time(i + 1), t};
}

State rk4_step(const FlowFn& flow, const std::function<double(double)>& u, double t, const State& x, double h) {
    const double half = 0.5 * h;
    const State k1 = flow(t, x, u(t));
    const State k2 = flow(t + half, x + half * k1, u(t + half));
    const State k3 = flow(t + half, x + half * k2, u(t + half));
    const State k4 = flow(t + h, x + h * k3, u(t + h));
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

State integrate(const FlowFn& flow, const std::function<double(double)>& u, double t, const State& x, double h,
                double max_substep) {
    if (!(h > max_substep)) return rk4_step(flow, u, t, x, h);
    const auto n = static_cast<std::size_t>(std::ceil(h / max_substep));
    const double sub = h / static_cast<double>(n);
    State y = x;
    for (std::size_t k = 0; k < n; ++k) y = rk4_step(flow, u, t + sub * static_cast<double>(k), y, sub);
    return y;
}

Trajectory simulate(std::shared_ptr<const ImpulsiveSystem> sys, const State& x0,
                    std::shared_ptr<const InputSignal> u, double horizon, double step) {
    if (!sys || !u) throw Error(ErrorKind::Argument, "simulate needs a system and an input");
    const ImpulseSequence& imp = sys->impulses;
    if (!(horizon > imp.t0())) throw Error(ErrorKind::Argument, "horizon must exceed t0");
    if (!(step > 0.0)) throw Error(ErrorKind::Argument, "step must be positive");
    if (!(step < imp.min_gap())) throw Error(ErrorKind::Argument, "step must be below the minimal impulse gap");
    if (static_cast<std::size_t>(x0.size()) != sys->dim) {
        throw Error(ErrorKind::Argument, "x0 has length " + std::to_string(x0.size()) + ", system dimension is " +
                                             std::to_string(sys->dim));
    }
    if (!finite_and_bounded(x0)) throw BlowUpError(imp.t0(), "initial state is not finite");

    const auto input = [&u](double t) { return u->eval(t); };
    Trajectory traj;
    traj.horizon_ = horizon;
    traj.step_ = step;
    State x = x0;
    for (std::size_t i = 0;; ++i) {
        Segment seg;
        seg.index = i;
        seg.start = imp.time(i);
        seg.next_impulse = imp.time(i + 1);
        seg.ends_with_jump = seg.next_impulse < horizon;
        seg.stop = seg.ends_with_jump ? seg.next_impulse : horizon;
        seg.samples.push_back({seg.start, x});

        double t = seg.start;
        for (std::size_t k = 1;; ++k) {
            double next = seg.start + step * static_cast<double>(k);
            if (next > seg.stop - kMergeFraction * step) next = seg.stop;
            x = integrate(sys->flow, input, t, x, next - t, sys->max_substep);
            if (!finite_and_bounded(x)) {
                throw BlowUpError(t, "state left the finite range after t = " + format_double(t));
            }
            t = next;
            seg.samples.push_back({t, x});
            if (t == seg.stop) break;
        }
        traj.segments_.push_back(std::move(seg));
        if (t >= horizon) break;

        x = sys->jump(i + 1, x, u->eval(t - kInputLeftOffset));
        if (static_cast<std::size_t>(x.size()) != sys->dim) {
            throw Error(ErrorKind::Argument, "jump map returned the wrong dimension");
        }
        if (!finite_and_bounded(x)) throw BlowUpError(t, "jump at t = " + format_double(t) + " left the finite range");
    }
    traj.system_ = std::move(sys);
    traj.input_ = std::move(u);
    return traj;
}

Trajectory simulate(const ImpulsiveSystem& sys, const State& x0, const InputSignal& u, double horizon,
                    double step) {
    return simulate(std::make_shared<const ImpulsiveSystem>(sys), x0, std::make_shared<const InputSignal>(u),
                    horizon, step);
}

const Segment& Trajectory::segment_at(double t) const {
    if (!(t >= t0()) || !(t <= horizon_)) {
        throw Error(ErrorKind::Range, "time " + format_double(t) + " is outside [" + format_double(t0()) + ", " +
                                          format_double(horizon_) + "]");
    }
    const auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                                     [](double v, const Segment& s) { return v < s.start; });
    return *std::prev(it);
}

State Trajectory::state_at(double t) const {
    const Segment& seg = segment_at(t);
    const auto it = std::upper_bound(seg.samples.begin(), seg.samples.end(), t,
                                     [](double v, const Sample& s) { return v < s.t; });
    const Sample& s = *std::prev(it);
    if (s.t == t) return s.x;
    return advance(s.t, s.x, t - s.t);
}

State Trajectory::advance(double t, const State& x, double h) const {
    return integrate(system_->flow, [this](double s) { return input_->eval(s); }, t, x, h, system_->max_substep);
}

std::vector<double> Trajectory::impulse_times() const {
    std::vector<double> out;
    for (std::size_t k = 1; k < segments_.size(); ++k) out.push_back(segments_[k].start);
    return out;
}

State left_limit(const Trajectory& traj, double t) {
    const Segment& seg = traj.segment_at(t);
    if (seg.index > 0 && seg.start == t) {
        return traj.segments()[&seg - traj.segments().data() - 1].samples.back().x;
    }
    return traj.state_at(t);
}

HeatJump parse_heat_jump(const std::string& name) {
    if (name == "uniform") return HeatJump::Uniform;
    if (name == "scaled-cap") return HeatJump::ScaledCap;
    throw Error(ErrorKind::Argument, "unknown heat jump '" + name + "' (expected uniform or scaled-cap)");
}

std::string to_string(HeatJump kind) {
    return kind == HeatJump::Uniform ? "uniform" : "scaled-cap";
}

ImpulsiveSystem semidiscretize_heat(double a, std::size_t n, double f_gain, HeatJump jump,
                                    ImpulseSequence impulses) {
    if (n < 3 || n % 2 == 0) throw Error(ErrorKind::Grid, "heat grid needs an odd number N >= 3 of interior nodes");
    if (!(a > 0.0)) throw Error(ErrorKind::Argument, "diffusivity must be positive");
    GridMeta grid;
    grid.spacing = 2.0 / static_cast<double>(n + 1);
    for (std::size_t j = 0; j < n; ++j) grid.nodes.push_back(-1.0 + grid.spacing * static_cast<double>(j + 1));
    // y = 0 lands on the middle node exactly
    grid.nodes[n / 2] = 0.0;

    const double inv_h2 = 1.0 / (grid.spacing * grid.spacing);
    ImpulsiveSystem sys;
    sys.dim = n;
    sys.label = "heat";
    sys.impulses = std::move(impulses);
    // RK4 covers [-2.78, 0] on the real axis; keep a margin
    sys.max_substep = 2.5 / (4.0 * a * inv_h2 + std::abs(f_gain));
    sys.flow = [a, f_gain, inv_h2, n](double, const State& x, double) {
        State dx(static_cast<Eigen::Index>(n));
        for (std::size_t j = 0; j < n; ++j) {
            const double left = j == 0 ? 0.0 : x[static_cast<Eigen::Index>(j - 1)];
            const double right = j + 1 == n ? 0.0 : x[static_cast<Eigen::Index>(j + 1)];
            const double mid = x[static_cast<Eigen::Index>(j)];
            dx[static_cast<Eigen::Index>(j)] = a * (left - 2.0 * mid + right) * inv_h2 + f_gain * mid;
        }
        return dx;
    };
    sys.jump = [grid, jump](std::size_t, const State& x, double u) {
        const double level = std::sqrt(std::abs(u) * l2_norm(x, grid));
        if (jump == HeatJump::Uniform) return State(State::Constant(x.size(), level));
        const double peak = x.cwiseAbs().maxCoeff();
        State g = State::Zero(x.size());
        if (peak == 0.0) return g;
        for (Eigen::Index j = 0; j < x.size(); ++j) {
            const double mag = std::abs(x[j]);
            g[j] = std::copysign(std::min(mag, level) * (mag / peak), x[j]);
        }
        return g;
    };
    sys.grid = std::move(grid);
    return sys;
}

double l2_norm(const State& x, const GridMeta& grid) {
    return std::sqrt(grid.spacing * x.squaredNorm());
}

double l2_norm(const State& x, const std::optional<GridMeta>& grid) {
    if (!grid) throw Error(ErrorKind::Argument, "l2_norm needs grid metadata");
    return l2_norm(x, *grid);
}

double l2_gradient_norm(const State& x, const GridMeta& grid) {
    double sum = 0.0;
    double prev = 0.0;
    for (Eigen::Index j = 0; j <= x.size(); ++j) {
        const double cur = j < x.size() ? x[j] : 0.0;
        sum += (cur - prev) * (cur - prev);
        prev = cur;
    }
    return std::sqrt(sum / grid.spacing);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const SegmentValue& value, bool node_columns) {
    const ImpulsiveSystem& sys = traj.system();
    os << "t,norm,V,pre_jump";
    if (node_columns) {
        for (std::size_t j = 0; j < sys.dim; ++j) os << ",x" << j;
    }
    os << '\n';
    for (const Segment& seg : traj.segments()) {
        for (std::size_t k = 0; k < seg.samples.size(); ++k) {
            const Sample& s = seg.samples[k];
            const bool pre = seg.ends_with_jump && k + 1 == seg.samples.size();
            os << format_double(s.t) << ',' << format_double(sys.norm(s.x)) << ',';
            if (value) os << format_double(value(seg.clock(s.t), s.x));
            os << ',' << (pre ? 1 : 0);
            if (node_columns) {
                for (Eigen::Index j = 0; j < s.x.size(); ++j) os << ',' << format_double(s.x[j]);
            }
            os << '\n';
        }
    }
}

void write_grid_csv(std::ostream& os, const GridMeta& grid) {
    os << "node,y\n";
    for (std::size_t j = 0; j < grid.nodes.size(); ++j) os << j << ',' << format_double(grid.nodes[j]) << '\n';
}

}  // namespace impiss
