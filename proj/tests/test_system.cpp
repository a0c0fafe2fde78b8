#include <doctest.h>

#include "impiss/errors.hpp"
#include "impiss/system.hpp"

#include <cmath>
#include <sstream>

using namespace impiss;

namespace {

ImpulsiveSystem halving() {
    ImpulsiveSystem sys;
    sys.dim = 1;
    sys.flow = [](double, const State& x, double) { return State(State::Zero(x.size())); };
    sys.jump = [](std::size_t, const State& x, double) { return State(0.5 * x); };
    sys.impulses = ImpulseSequence::periodic(1.0);
    return sys;
}

Eigen::Matrix2d rotation(double tau) {
    Eigen::Matrix2d r;
    r << std::cos(tau), std::sin(tau), -std::sin(tau), std::cos(tau);
    return r;
}

ImpulsiveSystem rotation_system() {
    ImpulsiveSystem sys;
    sys.dim = 2;
    sys.flow = [](double, const State& x, double) {
        State dx(2);
        dx << x[0] + x[1], -x[0] + x[1];
        return dx;
    };
    sys.jump = [](std::size_t, const State& x, double u) {
        State g(2);
        g << 2.0 * x[0], u * std::tanh(x[1]);
        return g;
    };
    sys.impulses = ImpulseSequence::periodic(M_PI / 2.0);
    return sys;
}

// Exact trajectory: e^{tau} R(tau) x_n inside each segment, jumps applied to exact left limits.
State rotation_exact(const State& x0, double u, double t) {
    const double gap = M_PI / 2.0;
    State x = x0;
    double start = 0.0;
    while (start + gap <= t) {
        x = std::exp(gap) * rotation(gap) * x;
        State g(2);
        g << 2.0 * x[0], u * std::tanh(x[1]);
        x = g;
        start += gap;
    }
    return std::exp(t - start) * rotation(t - start) * x;
}

double max_error(const Trajectory& traj, double u) {
    double err = 0.0;
    for (const auto& seg : traj.segments()) {
        for (const auto& s : seg.samples) {
            if (s.t == seg.stop && seg.ends_with_jump) continue;
            err = std::max(err, (s.x - rotation_exact(traj.x0(), u, s.t)).norm());
        }
    }
    return err;
}

State heat_profile(const GridMeta& grid) {
    State x(static_cast<Eigen::Index>(grid.nodes.size()));
    for (std::size_t j = 0; j < grid.nodes.size(); ++j) {
        const double y = grid.nodes[j];
        x[static_cast<Eigen::Index>(j)] = 2.0 * (y * y - 1.0) * (y * y - 1.0);
    }
    return x;
}

}  // namespace

TEST_CASE("impulse sequences") {
    const auto p = ImpulseSequence::periodic(0.5);
    CHECK(p.time(0) == 0.0);
    CHECK(p.time(3) == 1.5);
    CHECK(p.segment_index(0.0) == 0);
    CHECK(p.segment_index(0.5) == 1);
    CHECK(p.segment_index(0.49) == 0);
    CHECK(p.segment_index(1.7) == 3);
    CHECK_THROWS_AS((void)p.segment_index(-1.0), Error);

    const auto l = ImpulseSequence::list({1.0, 1.5, 3.0});
    CHECK(l.time(3) == 3.0);
    CHECK(l.time(5) == 6.0);
    CHECK(l.segment_index(1.2) == 1);
    CHECK(l.segment_index(4.6) == 4);
    CHECK(l.min_gap() == 0.5);
    CHECK(l.max_gap() == 1.5);
    CHECK_THROWS_AS((void)ImpulseSequence::list({1.0, 0.5}), Error);
}

TEST_CASE("halving example") {
    const auto traj = simulate(halving(), State::Constant(1, 8.0), InputSignal::constant(0.0), 3.0, 0.1);
    CHECK(traj.state_at(2.5)[0] == 2.0);
    CHECK(left_limit(traj, 1.0)[0] == 8.0);
    CHECK(traj.state_at(1.0)[0] == 4.0);
    CHECK(left_limit(traj, 0.5)[0] == 8.0);
    CHECK(traj.impulse_times() == std::vector<double>{1.0, 2.0});
    try {
        (void)left_limit(traj, 3.5);
        FAIL("expected range error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Range);
    }
}

TEST_CASE("right-continuity and left limits are exact") {
    const auto sys = rotation_system();
    const auto traj = simulate(sys, State::Ones(2), InputSignal::constant(0.1), 2.0 * M_PI, 1e-3);
    const auto& segs = traj.segments();
    REQUIRE(segs.size() == 4);
    for (std::size_t k = 1; k < segs.size(); ++k) {
        const auto& prev = segs[k - 1];
        CHECK(prev.samples.back().t == segs[k].start);
        CHECK(left_limit(traj, segs[k].start) == prev.samples.back().x);
        CHECK(segs[k].samples.front().x == sys.jump(k, prev.samples.back().x, 0.1));
    }
}

TEST_CASE("rotation flow matches the matrix exponential") {
    const State x0 = (State(2) << 0.3, -1.2).finished();
    const auto traj = simulate(rotation_system(), x0, InputSignal::constant(0.0), M_PI / 2.0 - 1e-6, 1e-3);
    for (const auto& s : traj.segments().front().samples) {
        const double expected = std::exp(s.t) * x0.norm();
        CHECK(std::abs(s.x.norm() - expected) <= 1e-6 * expected);
    }
}

TEST_CASE("RK4 error shrinks by about 16 per step halving") {
    const State x0 = (State(2) << 1.0, 0.5).finished();
    const auto sys = rotation_system();
    const double e1 = max_error(simulate(sys, x0, InputSignal::constant(0.1), 6.0, 1e-2), 0.1);
    const double e2 = max_error(simulate(sys, x0, InputSignal::constant(0.1), 6.0, 5e-3), 0.1);
    const double ratio = e1 / e2;
    CAPTURE(ratio);
    CHECK(ratio >= 8.0);
    CHECK(ratio <= 32.0);
}

TEST_CASE("restart from an intermediate state reproduces the tail") {
    const auto sys = rotation_system();
    const State x0 = (State(2) << 1.0, -0.7).finished();
    const auto u = InputSignal::constant(0.1);
    const auto full = simulate(sys, x0, u, 2.0 * M_PI, 1e-3);
    auto tail_sys = sys;
    tail_sys.impulses = ImpulseSequence::list({M_PI / 2.0, M_PI, 1.5 * M_PI, 2.0 * M_PI}, 1.0);
    const auto tail = simulate(tail_sys, full.state_at(1.0), u, 2.0 * M_PI, 1e-3);
    for (const auto& seg : tail.segments()) {
        for (const auto& s : seg.samples) {
            const State expected = seg.ends_with_jump && s.t == seg.stop ? left_limit(full, s.t) : full.state_at(s.t);
            CHECK((s.x - expected).norm() <= 1e-9 * std::max(1.0, expected.norm()));
        }
    }
}

TEST_CASE("blow-up reports the last finite time") {
    ImpulsiveSystem sys;
    sys.dim = 1;
    sys.flow = [](double, const State& x, double) { return State(x); };
    sys.jump = [](std::size_t, const State& x, double) { return x; };
    sys.impulses = ImpulseSequence::periodic(100.0);
    try {
        (void)simulate(sys, State::Ones(1), InputSignal::constant(0.0), 50.0, 0.01);
        FAIL("expected blow-up");
    } catch (const BlowUpError& e) {
        CHECK(e.last_finite_time() == doctest::Approx(12.0 * std::log(10.0)).epsilon(1e-3));
    }
}

TEST_CASE("simulate validates its arguments") {
    const auto sys = halving();
    CHECK_THROWS_AS((void)simulate(sys, State::Ones(2), InputSignal::constant(0.0), 1.0, 0.1), Error);
    CHECK_THROWS_AS((void)simulate(sys, State::Ones(1), InputSignal::constant(0.0), 1.0, 1.5), Error);
    CHECK_THROWS_AS((void)simulate(sys, State::Ones(1), InputSignal::constant(0.0), 0.0, 0.1), Error);
}

TEST_CASE("heat semidiscretization") {
    const auto sys = semidiscretize_heat(1.0, 3, 0.0, HeatJump::Uniform, ImpulseSequence::periodic(0.5));
    REQUIRE(sys.grid);
    CHECK(sys.grid->spacing == 0.5);
    const State e = (State(3) << 0.0, 1.0, 0.0).finished();
    const State d = sys.flow(0.0, e, 0.0);
    CHECK(d[1] == -8.0);
    CHECK(d[0] == 4.0);
    CHECK(sys.flow(0.0, State::Zero(3), 0.0).isZero());

    try {
        (void)semidiscretize_heat(1.0, 4, 0.0, HeatJump::Uniform, ImpulseSequence::periodic(0.5));
        FAIL("expected grid error");
    } catch (const Error& err) {
        CHECK(err.kind() == ErrorKind::Grid);
    }
    const auto big = semidiscretize_heat(0.1, 201, 2.0, HeatJump::Uniform, ImpulseSequence::periodic(0.5));
    CHECK(big.grid->nodes[100] == 0.0);
    CHECK(big.grid->nodes.front() == doctest::Approx(-1.0 + 2.0 / 202.0));
}

TEST_CASE("heat jump maps respect the envelope") {
    for (auto kind : {HeatJump::Uniform, HeatJump::ScaledCap}) {
        const auto sys = semidiscretize_heat(0.1, 51, 2.0, kind, ImpulseSequence::periodic(0.5));
        const State x = heat_profile(*sys.grid);
        const double level = std::sqrt(0.1 * l2_norm(x, *sys.grid));
        const State g = sys.jump(1, x, 0.1);
        CHECK(g.cwiseAbs().maxCoeff() <= level * (1.0 + 1e-15));
        if (kind == HeatJump::Uniform) CHECK(g.minCoeff() == g.maxCoeff());
    }
    CHECK(parse_heat_jump("scaled-cap") == HeatJump::ScaledCap);
    CHECK_THROWS_AS((void)parse_heat_jump("bump"), Error);
}

TEST_CASE("l2 norm on the heat grid") {
    const auto sys = semidiscretize_heat(0.1, 201, 2.0, HeatJump::Uniform, ImpulseSequence::periodic(0.5));
    const GridMeta& grid = *sys.grid;
    const State ones = State::Ones(201);
    // boundary zeros make the trapezoid error first order for a constant
    CHECK(std::abs(l2_norm(ones, grid) - std::sqrt(2.0)) <= grid.spacing);
    CHECK(l2_norm(State::Zero(201), grid) == 0.0);
    const double sq = std::pow(l2_norm(heat_profile(grid), grid), 2);
    CHECK(std::abs(sq - 1024.0 / 315.0) <= 1e-3);
    try {
        (void)l2_norm(ones, std::optional<GridMeta>{});
        FAIL("expected argument error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Argument);
    }
}

TEST_CASE("heat trajectory: bounded, contracting jumps, discrete Friedrichs") {
    const auto sys = semidiscretize_heat(0.1, 201, 2.0, HeatJump::Uniform, ImpulseSequence::periodic(0.5));
    const State x0 = heat_profile(*sys.grid);
    CHECK(x0.maxCoeff() == doctest::Approx(2.0));
    CHECK(x0[100] == 2.0);
    const auto traj = simulate(sys, x0, InputSignal::constant(0.1), 2.0, 1e-3);
    CHECK(traj.impulse_times() == std::vector<double>{0.5, 1.0, 1.5});
    double sup = 0.0;
    for (const auto& seg : traj.segments()) {
        for (const auto& s : seg.samples) {
            const double n = sys.norm(s.x);
            sup = std::max(sup, n);
            CHECK(n <= 2.0 * l2_gradient_norm(s.x, *sys.grid));
        }
    }
    CHECK(std::isfinite(sup));
    CHECK(sup == doctest::Approx(sys.norm(left_limit(traj, 0.5))));
    for (double t : {0.5, 1.0, 1.5}) CHECK(sys.norm(traj.state_at(t)) < sys.norm(x0));
    CHECK(sys.norm(left_limit(traj, 0.5)) > sys.norm(traj.state_at(0.5)));
}

TEST_CASE("trajectory CSV duplicates impulse rows") {
    const auto traj = simulate(halving(), State::Constant(1, 8.0), InputSignal::constant(0.0), 2.5, 0.5);
    std::ostringstream os;
    write_trajectory_csv(os, traj, [](const SegmentClock& c, const State& x) { return x[0] * x[0] + c.fraction(); });
    const std::string csv = os.str();
    CHECK(csv.rfind("t,norm,V,pre_jump,x0\n", 0) == 0);
    CHECK(csv.find("\n1,8,65,1,8\n1,4,16,0,4\n") != std::string::npos);
    CHECK(csv.find("\n2,4,17,1,4\n2,2,4,0,2\n") != std::string::npos);
    CHECK(csv.find("\n2.5,2,4.5,0,2\n") != std::string::npos);

    std::ostringstream bare;
    write_trajectory_csv(bare, traj, {}, false);
    CHECK(bare.str().rfind("t,norm,V,pre_jump\n0,8,,0\n", 0) == 0);
}
