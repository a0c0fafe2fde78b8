#include "impiss/scenarios.hpp"

#include "impiss/errors.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

namespace impiss {

using nlohmann::json;

namespace {

const double kE = std::exp(1.0);

Eigen::Matrix2d rotation(double tau) {
    Eigen::Matrix2d r;
    r << std::cos(tau), std::sin(tau), -std::sin(tau), std::cos(tau);
    return r;
}

ComparisonFunction square(double c, ClassTag tag = ClassTag::KInfinity) {
    return ComparisonFunction::power(c, 2.0).with_tag(tag);
}

// ---- config helpers ------------------------------------------------------

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

const json& need(const json& node, const std::string& key, const std::string& path) {
    if (!node.is_object()) throw ConfigError(path, "expected an object");
    const auto it = node.find(key);
    if (it == node.end()) throw ConfigError(join(path, key), "missing required key");
    return *it;
}

const json* maybe(const json& node, const std::string& key) {
    if (!node.is_object()) return nullptr;
    const auto it = node.find(key);
    return it == node.end() ? nullptr : &*it;
}

double number(const json& node, const std::string& path) {
    if (!node.is_number()) throw ConfigError(path, "expected a number");
    return node.get<double>();
}

double number_or(const json& node, const std::string& key, double fallback, const std::string& path) {
    const json* v = maybe(node, key);
    return v ? number(*v, join(path, key)) : fallback;
}

std::string text(const json& node, const std::string& path) {
    if (!node.is_string()) throw ConfigError(path, "expected a string");
    return node.get<std::string>();
}

State vector_of(const json& node, const std::string& path, std::size_t expected) {
    if (!node.is_array()) throw ConfigError(path, "expected an array");
    if (node.size() != expected) {
        throw ConfigError(path, "dimension mismatch: expected " + std::to_string(expected) + " entries, got " +
                                    std::to_string(node.size()));
    }
    State v(static_cast<Eigen::Index>(expected));
    for (std::size_t i = 0; i < expected; ++i) v[static_cast<Eigen::Index>(i)] = number(node[i], path + "[" + std::to_string(i) + "]");
    return v;
}

Eigen::MatrixXd matrix_of(const json& node, const std::string& path, std::size_t dim) {
    if (!node.is_array() || node.size() != dim) {
        throw ConfigError(path, "dimension mismatch: expected " + std::to_string(dim) + " rows");
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) {
        m.row(static_cast<Eigen::Index>(i)) = vector_of(node[i], path + "[" + std::to_string(i) + "]", dim).transpose();
    }
    return m;
}

// Linear part of a flow or jump spec: matrix / diag plus optional input_gain.
std::pair<Eigen::MatrixXd, State> linear_part(const json& spec, const std::string& path, std::size_t dim,
                                              const std::string& kind) {
    Eigen::MatrixXd m;
    if (kind == "diagonal") {
        m = vector_of(need(spec, "diag", path), join(path, "diag"), dim).asDiagonal();
    } else {
        m = matrix_of(need(spec, "matrix", path), join(path, "matrix"), dim);
    }
    State b = State::Zero(static_cast<Eigen::Index>(dim));
    if (const json* g = maybe(spec, "input_gain")) b = vector_of(*g, join(path, "input_gain"), dim);
    return {m, b};
}

ComparisonFunction comparison_at(const json& node, const std::string& path, ClassTag tag) {
    try {
        return parse_comparison(text(node, path), tag);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(path, e.what());
    }
}

Rate rate_at(const json& node, const std::string& path) {
    try {
        return parse_rate(text(node, path));
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(path, e.what());
    }
}

ImpulseSequence impulses_of(const json& spec, const std::string& path) {
    const double t0 = number_or(spec, "t0", 0.0, path);
    try {
        if (const json* p = maybe(spec, "periodic")) return ImpulseSequence::periodic(number(*p, join(path, "periodic")), t0);
        if (const json* l = maybe(spec, "list")) {
            if (!l->is_array()) throw ConfigError(join(path, "list"), "expected an array");
            std::vector<double> times;
            for (std::size_t i = 0; i < l->size(); ++i) times.push_back(number((*l)[i], join(path, "list") + "[" + std::to_string(i) + "]"));
            return ImpulseSequence::list(std::move(times), t0);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(path, e.what());
    }
    throw ConfigError(path, "expected 'periodic' or 'list'");
}

CandidateLyapunov candidate_of(const json& spec, const ImpulsiveSystem& sys, const std::string& path) {
    CandidateLyapunov c;
    const json& v = need(spec, "V", path);
    const std::string vpath = join(path, "V");
    const std::string kind = text(need(v, "kind", vpath), join(vpath, "kind"));
    if (kind == "quadratic") {
        Eigen::MatrixXd p = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(sys.dim), static_cast<Eigen::Index>(sys.dim));
        if (const json* pj = maybe(v, "P")) p = matrix_of(*pj, join(vpath, "P"), sys.dim);
        c.V = [p](const State& x) { return x.dot(p * x); };
    } else if (kind == "l2_squared") {
        auto s = std::make_shared<const ImpulsiveSystem>(sys);
        c.V = [s](const State& x) { return std::pow(s->norm(x), 2); };
    } else {
        throw ConfigError(join(vpath, "kind"), "unknown candidate form '" + kind + "'");
    }
    c.psi1 = comparison_at(need(spec, "psi1", path), join(path, "psi1"), ClassTag::KInfinity);
    c.psi2 = comparison_at(need(spec, "psi2", path), join(path, "psi2"), ClassTag::KInfinity);
    c.eta = comparison_at(need(spec, "eta", path), join(path, "eta"), ClassTag::KInfinity);
    c.rho = rate_at(need(spec, "rho", path), join(path, "rho"));
    c.alpha = comparison_at(need(spec, "alpha", path), join(path, "alpha"), ClassTag::KInfinity);
    c.psi3 = comparison_at(need(spec, "psi3", path), join(path, "psi3"), ClassTag::K);
    c.name = kind;
    return c;
}

CandidateLyapunov square_candidate(const std::string& rho, const std::string& alpha, const std::string& psi3) {
    CandidateLyapunov c;
    c.V = [](const State& x) { return x.squaredNorm(); };
    c.psi1 = square(1.0);
    c.psi2 = square(1.0);
    c.eta = square(1.0);
    c.rho = parse_rate(rho);
    c.alpha = parse_comparison(alpha);
    c.psi3 = parse_comparison(psi3, ClassTag::K);
    c.name = "x^2";
    return c;
}

ImpulsiveSystem scalar_linear(double flow_gain, double jump_gain, double period, const std::string& label) {
    ImpulsiveSystem sys;
    sys.dim = 1;
    sys.label = label;
    sys.flow = [flow_gain](double, const State& x, double) { return State(flow_gain * x); };
    sys.jump = [jump_gain](std::size_t, const State& x, double) { return State(jump_gain * x); };
    sys.impulses = ImpulseSequence::periodic(period);
    return sys;
}

}  // namespace

// ---- built-ins -------------------------------------------------------------

TimeVaryingLyapunov rotation2d_lyapunov(const ImpulseSequence& impulses, bool drop_discount) {
    const Eigen::Matrix2d d = Eigen::Vector2d(0.25, 2.0 * std::exp(2.0 * M_PI)).asDiagonal();
    auto fn = [d, drop_discount](const SegmentClock& c, const State& x) {
        const double tau = c.elapsed();
        const Eigen::Matrix2d r = rotation(tau);
        const Eigen::Vector2d y = r.transpose() * Eigen::Vector2d(x[0], x[1]);
        const double q = y.dot(d * y);
        return drop_discount ? q : std::exp(-4.0 * tau) * q;
    };
    Certificates cert;
    cert.alpha1 = square(std::exp(-2.0 * M_PI) / 4.0);
    cert.alpha2 = square(2.0 * std::exp(2.0 * M_PI));
    cert.chi = square(8.0 * std::exp(6.0 * M_PI));
    cert.phi = ComparisonFunction::linear(2.0).with_tag(ClassTag::P);
    cert.alpha3 = square(4.0 * std::exp(6.0 * M_PI) + 2.0 * std::exp(2.0 * M_PI), ClassTag::K);
    return {fn, impulses, cert, drop_discount ? "rotation2d-undiscounted" : "rotation2d"};
}

Scenario scenario_rotation2d(const RotationOptions& opts) {
    if (!(opts.horizon > 0.0)) throw Error(ErrorKind::Argument, "horizon must be positive");
    if (opts.x0.size() != 2) throw Error(ErrorKind::Argument, "rotation2d needs a 2-vector x0");
    ImpulsiveSystem sys;
    sys.dim = 2;
    sys.label = "rotation2d";
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

    Scenario s;
    s.label = "rotation2d";
    s.lyapunov = rotation2d_lyapunov(sys.impulses, opts.drop_discount);
    s.system = std::make_shared<const ImpulsiveSystem>(std::move(sys));
    s.input = std::make_shared<const InputSignal>(InputSignal::constant(opts.u_level));
    s.x0 = opts.x0;
    s.horizon = opts.horizon;
    s.step = opts.step;
    return s;
}

State heat_bump(const GridMeta& grid, double amplitude) {
    State x(static_cast<Eigen::Index>(grid.nodes.size()));
    for (std::size_t j = 0; j < grid.nodes.size(); ++j) {
        const double w = grid.nodes[j] * grid.nodes[j] - 1.0;
        x[static_cast<Eigen::Index>(j)] = amplitude * w * w;
    }
    return x;
}

TimeVaryingLyapunov heat_lyapunov(const ImpulsiveSystem& sys, double a) {
    if (!sys.grid) throw Error(ErrorKind::Argument, "heat Lyapunov function needs a grid");
    const GridMeta grid = *sys.grid;
    auto fn = [grid](const SegmentClock& c, const State& x) {
        const double h = c.fraction() - 0.5;
        return std::exp(-2.0 * h) * grid.spacing * x.squaredNorm();
    };
    Certificates cert;
    cert.alpha1 = square(1.0 / kE);
    cert.alpha2 = square(kE);
    cert.chi = square(4.0 * std::exp(5.0));
    cert.phi = ComparisonFunction::linear(0.5 * a).with_tag(ClassTag::P);
    cert.alpha3 = square(4.0 * std::exp(4.0), ClassTag::K);
    return {fn, sys.impulses, cert, "heat"};
}

Scenario scenario_heat(const HeatOptions& opts) {
    auto sys = semidiscretize_heat(opts.a, opts.n, opts.f_gain, opts.jump, ImpulseSequence::periodic(opts.period));
    Scenario s;
    s.label = "heat";
    s.x0 = heat_bump(*sys.grid, opts.amplitude);
    s.lyapunov = heat_lyapunov(sys, opts.a);
    s.system = std::make_shared<const ImpulsiveSystem>(std::move(sys));
    s.input = std::make_shared<const InputSignal>(InputSignal::constant(opts.u_level));
    s.horizon = opts.horizon;
    s.step = opts.step;
    return s;
}

Scenario scenario_scalar_sfuj(double x0, double horizon, double step) {
    Scenario s;
    s.label = "scalar-sfuj";
    s.system = std::make_shared<const ImpulsiveSystem>(scalar_linear(-1.0, std::sqrt(2.0), 1.0, s.label));
    s.input = std::make_shared<const InputSignal>(InputSignal::constant(0.0));
    s.x0 = State::Constant(1, x0);
    s.horizon = horizon;
    s.step = step;
    s.candidate = square_candidate("linear:2", "linear:2", "power:2,2");
    s.construct = ConstructDefaults{"sfuj", 1.0, 1.0 - std::log(2.0) / 2.0};
    return s;
}

Scenario scenario_scalar_ufsj(double x0, double horizon, double step) {
    Scenario s;
    s.label = "scalar-ufsj";
    s.system = std::make_shared<const ImpulsiveSystem>(scalar_linear(1.0, 0.5, 0.5, s.label));
    s.input = std::make_shared<const InputSignal>(InputSignal::constant(0.0));
    s.x0 = State::Constant(1, x0);
    s.horizon = horizon;
    s.step = step;
    s.candidate = square_candidate("linear:-2", "linear:0.25", "power:0.25,2");
    s.construct = ConstructDefaults{"ufsj", 0.5, 0.1};
    return s;
}

std::optional<Scenario> builtin_scenario(const std::string& name) {
    if (name == "heat") return scenario_heat();
    if (name == "rotation2d") return scenario_rotation2d();
    if (name == "scalar-sfuj") return scenario_scalar_sfuj();
    if (name == "scalar-ufsj") return scenario_scalar_ufsj();
    return std::nullopt;
}

// ---- loader ----------------------------------------------------------------

Scenario load_scenario(const json& config) {
    if (!config.is_object()) throw ConfigError("", "scenario config must be an object");
    const json& sysj = need(config, "system", "");
    ImpulsiveSystem sys;
    const ImpulseSequence impulses = impulses_of(need(sysj, "impulses", "system"), "system.impulses");
    const json& flow = need(sysj, "flow", "system");
    const std::string flow_kind = text(need(flow, "kind", "system.flow"), "system.flow.kind");
    double heat_a = 0.0;

    if (flow_kind == "heat") {
        const json& grid = need(sysj, "grid", "system");
        const double n = number(need(grid, "N", "system.grid"), "system.grid.N");
        if (n < 0 || n != std::floor(n)) throw ConfigError("system.grid.N", "expected a non-negative integer");
        heat_a = number(need(flow, "a", "system.flow"), "system.flow.a");
        const double f_gain = number_or(flow, "f_gain", 0.0, "system.flow");
        HeatJump profile = HeatJump::Uniform;
        const json& jumps = need(sysj, "jumps", "system");
        const std::string jkind = text(need(jumps, "kind", "system.jumps"), "system.jumps.kind");
        if (jkind != "heat") throw ConfigError("system.jumps.kind", "heat flow needs heat jumps");
        try {
            if (const json* p = maybe(jumps, "profile")) profile = parse_heat_jump(text(*p, "system.jumps.profile"));
            sys = semidiscretize_heat(heat_a, static_cast<std::size_t>(n), f_gain, profile, impulses);
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            throw ConfigError(e.kind() == ErrorKind::Grid ? "system.grid.N" : "system", e.what());
        }
    } else if (flow_kind == "linear" || flow_kind == "diagonal") {
        const double dim = number(need(sysj, "dim", "system"), "system.dim");
        if (dim < 1 || dim != std::floor(dim)) throw ConfigError("system.dim", "expected a positive integer");
        sys.dim = static_cast<std::size_t>(dim);
        sys.impulses = impulses;
        auto [a, b] = linear_part(flow, "system.flow", sys.dim, flow_kind);
        sys.flow = [a = std::move(a), b = std::move(b)](double, const State& x, double u) {
            return State(a * x + u * b);
        };
        const json& jumps = need(sysj, "jumps", "system");
        const std::string jkind = text(need(jumps, "kind", "system.jumps"), "system.jumps.kind");
        if (jkind == "linear" || jkind == "diagonal") {
            auto [m, g] = linear_part(jumps, "system.jumps", sys.dim, jkind);
            sys.jump = [m = std::move(m), g = std::move(g)](std::size_t, const State& x, double u) {
                return State(m * x + u * g);
            };
        } else if (jkind == "tanh") {
            const Eigen::MatrixXd m = matrix_of(need(jumps, "matrix", "system.jumps"), "system.jumps.matrix", sys.dim);
            const Eigen::MatrixXd bm =
                matrix_of(need(jumps, "tanh_matrix", "system.jumps"), "system.jumps.tanh_matrix", sys.dim);
            sys.jump = [m, bm](std::size_t, const State& x, double u) {
                return State(m * x + u * (bm * x).array().tanh().matrix());
            };
        } else {
            throw ConfigError("system.jumps.kind", "unknown jump form '" + jkind + "'");
        }
    } else {
        throw ConfigError("system.flow.kind", "unknown flow form '" + flow_kind + "'");
    }

    Scenario s;
    s.label = config.contains("label") ? text(config["label"], "label") : flow_kind;
    sys.label = s.label;

    double level = 0.0;
    if (const json* in = maybe(config, "input")) {
        const std::string kind = text(need(*in, "kind", "input"), "input.kind");
        if (kind != "constant") throw ConfigError("input.kind", "unknown input form '" + kind + "'");
        level = number(need(*in, "level", "input"), "input.level");
    }
    s.input = std::make_shared<const InputSignal>(InputSignal::constant(level));

    const json& x0 = need(config, "x0", "");
    if (x0.is_object()) {
        const std::string kind = text(need(x0, "kind", "x0"), "x0.kind");
        if (kind != "heat_bump" || !sys.grid) throw ConfigError("x0.kind", "'" + kind + "' needs a heat grid");
        s.x0 = heat_bump(*sys.grid, number_or(x0, "amplitude", 2.0, "x0"));
    } else {
        s.x0 = vector_of(x0, "x0", sys.dim);
    }

    if (const json* ly = maybe(config, "lyapunov")) {
        const std::string form = text(need(*ly, "form", "lyapunov"), "lyapunov.form");
        const json params = ly->value("params", json::object());
        if (form == "heat") {
            if (flow_kind != "heat") throw ConfigError("lyapunov.form", "heat form needs a heat system");
            s.lyapunov = heat_lyapunov(sys, heat_a);
        } else if (form == "rotation2d") {
            if (sys.dim != 2) throw ConfigError("lyapunov.form", "rotation2d form needs dim 2");
            bool drop = false;
            if (const json* d = maybe(params, "drop_discount")) {
                if (!d->is_boolean()) throw ConfigError("lyapunov.params.drop_discount", "expected a boolean");
                drop = d->get<bool>();
            }
            s.lyapunov = rotation2d_lyapunov(sys.impulses, drop);
        } else {
            throw ConfigError("lyapunov.form", "unknown Lyapunov form '" + form + "'");
        }
    }
    if (const json* c = maybe(config, "candidate")) s.candidate = candidate_of(*c, sys, "candidate");
    if (const json* c = maybe(config, "construct")) {
        ConstructDefaults d;
        d.regime = text(need(*c, "regime", "construct"), "construct.regime");
        if (d.regime != "sfuj" && d.regime != "ufsj") throw ConfigError("construct.regime", "expected sfuj or ufsj");
        d.theta = number(need(*c, "theta", "construct"), "construct.theta");
        d.delta = number(need(*c, "delta", "construct"), "construct.delta");
        s.construct = d;
    }

    const json& run = need(config, "run", "");
    s.horizon = number(need(run, "horizon", "run"), "run.horizon");
    s.step = number(need(run, "step", "run"), "run.step");
    if (!(s.horizon > sys.impulses.t0())) throw ConfigError("run.horizon", "must exceed t0");
    if (!(s.step > 0.0)) throw ConfigError("run.step", "must be positive");
    s.system = std::make_shared<const ImpulsiveSystem>(std::move(sys));
    return s;
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, "cannot open scenario file");
    json config;
    try {
        config = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError(path, std::string("invalid JSON: ") + e.what());
    }
    return load_scenario(config);
}

Scenario resolve_scenario(const std::string& name_or_path) {
    if (auto s = builtin_scenario(name_or_path)) return *s;
    return load_scenario_file(name_or_path);
}

}  // namespace impiss
