// impiss: simulate, verify, construct and sweep impulsive systems.
//
// Exit codes: 0 pass, 1 verification failure, 2 blow-up, 3 configuration
// error, 4 dwell or construction precondition failure.

#include "impiss/construct.hpp"
#include "impiss/errors.hpp"
#include "impiss/format.hpp"
#include "impiss/lyapunov.hpp"
#include "impiss/scenarios.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace impiss;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit : int { kPass = 0, kFail = 1, kBlowUp = 2, kConfig = 3, kPrecondition = 4 };

struct Common {
    std::string scenario;
    std::string out = "out";
    std::optional<double> step;
    std::optional<double> horizon;
};

struct VerifyArgs {
    std::string which = "def3";
    bool drop_discount = false;
};

struct ConstructArgs {
    std::optional<std::string> regime;
    std::optional<double> theta;
    std::optional<double> delta;
};

struct SweepArgs {
    std::string regime = "sfuj";
    std::string rho = "linear:1";
    std::string alpha = "linear:2";
    double theta_min = 1.0, theta_max = 1.0;
    std::size_t theta_n = 1;
    double delta_min = 0.05, delta_max = 0.95;
    std::size_t delta_n = 19;
};

void write_json(const fs::path& path, const json& j) {
    std::ofstream os(path);
    os << j.dump(2) << '\n';
}

template <class Fn>
void write_file(const fs::path& path, Fn&& fn) {
    std::ofstream os(path);
    fn(os);
}

json manifest_base(const std::string& command, const Common& c) {
    return {{"command", command},
            {"scenario", c.scenario},
            {"out", c.out},
            {"step", c.step ? json(*c.step) : json(nullptr)},
            {"horizon", c.horizon ? json(*c.horizon) : json(nullptr)},
            {"deterministic", true},
            {"version", kVersion}};
}

Scenario load(const Common& c) {
    Scenario s = resolve_scenario(c.scenario);
    if (c.step) s.step = *c.step;
    if (c.horizon) s.horizon = *c.horizon;
    return s;
}

void finish(json manifest, const Common& c, int code) {
    manifest["exit_code"] = code;
    write_json(fs::path(c.out) / "manifest.json", manifest);
}

int cmd_simulate(const Common& c) {
    json manifest = manifest_base("simulate", c);
    const Scenario s = load(c);
    manifest["resolved"] = {{"step", s.step}, {"horizon", s.horizon}, {"label", s.label}};
    try {
        const Trajectory traj = s.run();
        SegmentValue value;
        if (s.lyapunov) value = s.lyapunov->function();
        write_file(fs::path(c.out) / "trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, traj, value); });
        if (s.system->grid) {
            write_file(fs::path(c.out) / "grid.csv", [&](std::ostream& os) { write_grid_csv(os, *s.system->grid); });
        }
    } catch (const BlowUpError& e) {
        manifest["last_finite_time"] = e.last_finite_time();
        manifest["error"] = e.what();
        finish(manifest, c, kBlowUp);
        std::cerr << e.what() << '\n';
        return kBlowUp;
    }
    finish(manifest, c, kPass);
    return kPass;
}

void write_candidate_csv(std::ostream& os, const CandidateLyapunov& C, const Trajectory& traj) {
    const double gate = C.eta(traj.input().sup_norm);
    os << "t,V,chi_level,pre_jump\n";
    for (const Segment& seg : traj.segments()) {
        for (std::size_t k = 0; k < seg.samples.size(); ++k) {
            const bool pre = seg.ends_with_jump && k + 1 == seg.samples.size();
            os << format_double(seg.samples[k].t) << ',' << format_double(C.V(seg.samples[k].x)) << ','
               << format_double(gate) << ',' << (pre ? 1 : 0) << '\n';
        }
    }
}

DwellParams dwell_params(const CandidateLyapunov& C, const ConstructDefaults& d) {
    return {C.rho, C.alpha, d.theta, d.delta};
}

ConstructionResult construct(const Scenario& s, const ConstructDefaults& d) {
    if (!s.candidate) throw ConfigError("candidate", "scenario has no candidate Lyapunov function");
    if (d.regime == "sfuj") return construct_sfuj(*s.candidate, dwell_params(*s.candidate, d), s.system->impulses);
    if (d.regime == "ufsj") return construct_ufsj(*s.candidate, dwell_params(*s.candidate, d), s.system->impulses);
    throw ConfigError("construct.regime", "expected sfuj or ufsj, got '" + d.regime + "'");
}

int cmd_verify(const Common& c, const VerifyArgs& v) {
    json manifest = manifest_base("verify", c);
    manifest["which"] = v.which;
    manifest["drop_discount"] = v.drop_discount;
    Scenario s = load(c);
    if (v.drop_discount) {
        if (!s.lyapunov || s.lyapunov->name().rfind("rotation2d", 0) != 0) {
            throw ConfigError("lyapunov.params.drop_discount", "only the rotation2d form has a discount to drop");
        }
        s.lyapunov = rotation2d_lyapunov(s.system->impulses, true);
    }
    const fs::path out(c.out);
    try {
        const Trajectory traj = s.run();
        std::optional<VerificationReport> rep;
        if (v.which == "def3") {
            if (!s.lyapunov) throw ConfigError("lyapunov", "def3 needs a time-varying Lyapunov function");
            rep = verify_definition3(*s.lyapunov, {traj});
            write_file(out / "lyapunov.csv", [&](std::ostream& os) { write_lyapunov_csv(os, *s.lyapunov, traj); });
        } else if (v.which == "def2") {
            if (!s.candidate) throw ConfigError("candidate", "def2 needs a candidate Lyapunov function");
            rep = verify_definition2(*s.candidate, {traj});
            write_file(out / "lyapunov.csv", [&](std::ostream& os) { write_candidate_csv(os, *s.candidate, traj); });
        } else if (v.which == "def1") {
            std::optional<TimeVaryingLyapunov> V = s.lyapunov;
            if (!V && s.candidate && s.construct) V = construct(s, *s.construct).V;
            if (!V) throw ConfigError("lyapunov", "def1 needs a Lyapunov function or a construct section");
            rep = check_iss_estimate(traj, gains_from_certificates(V->certificates()));
            write_file(out / "lyapunov.csv", [&](std::ostream& os) { write_lyapunov_csv(os, *V, traj); });
        } else {
            throw ConfigError("--which", "expected def1, def2 or def3");
        }
        write_json(out / "report.json", rep->to_json());
        const int code = rep->passed() ? kPass : kFail;
        manifest["verdict"] = rep->passed() ? "pass" : "fail";
        finish(manifest, c, code);
        return code;
    } catch (const BlowUpError& e) {
        manifest["last_finite_time"] = e.last_finite_time();
        manifest["error"] = e.what();
        finish(manifest, c, kBlowUp);
        std::cerr << e.what() << '\n';
        return kBlowUp;
    }
}

int cmd_construct(const Common& c, const ConstructArgs& a) {
    json manifest = manifest_base("construct", c);
    const Scenario s = load(c);
    if (!s.candidate) throw ConfigError("candidate", "scenario has no candidate Lyapunov function");
    ConstructDefaults d = s.construct.value_or(ConstructDefaults{});
    if (a.regime) d.regime = *a.regime;
    if (a.theta) d.theta = *a.theta;
    if (a.delta) d.delta = *a.delta;
    manifest["regime"] = d.regime;
    manifest["theta"] = d.theta;
    manifest["delta"] = d.delta;
    const fs::path out(c.out);

    std::optional<ConstructionResult> built;
    try {
        built = construct(s, d);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::Precondition && e.kind() != ErrorKind::Sequence &&
            e.kind() != ErrorKind::Construction && e.kind() != ErrorKind::Orientation &&
            e.kind() != ErrorKind::Argument && e.kind() != ErrorKind::RateSign) {
            throw;
        }
        json report = {{"verdict", "precondition_failed"}, {"error", e.what()}, {"error_kind", to_string(e.kind())}};
        try {
            const auto p = dwell_params(*s.candidate, d);
            report["dwell"] = (d.regime == "ufsj" ? check_dwell_ufsj(p) : check_dwell_sfuj(p)).to_json();
        } catch (const Error&) {
        }
        write_json(out / "report.json", report);
        finish(manifest, c, kPrecondition);
        std::cerr << e.what() << '\n';
        return kPrecondition;
    }

    std::vector<Trajectory> runs;
    try {
        for (double scale : {1.0, -0.5, 3.0}) runs.push_back(s.run(scale * s.x0));
    } catch (const BlowUpError& e) {
        manifest["last_finite_time"] = e.last_finite_time();
        finish(manifest, c, kBlowUp);
        std::cerr << e.what() << '\n';
        return kBlowUp;
    }
    const VerificationReport def3 = verify_definition3(built->V, runs);
    const IssGains gains = gains_from_certificates(built->V.certificates());
    bool iss_ok = true;
    json iss = json::array();
    for (std::size_t k = 0; k < runs.size(); ++k) {
        const auto r = check_iss_estimate(runs[k], gains, k);
        iss_ok = iss_ok && r.passed();
        iss.push_back({{"trajectory", k}, {"verdict", r.passed() ? "pass" : "fail"}, {"worst_margin", r.worst_margin()}});
    }
    json report = def3.to_json();
    report["dwell"] = built->dwell.to_json();
    report["iss_estimate"] = iss;
    const bool ok = def3.passed() && iss_ok;
    report["verdict"] = ok ? "pass" : "fail";
    write_json(out / "report.json", report);
    json prov = built->provenance;
    prov["initial_conditions"] = json::array();
    for (const auto& r : runs) prov["initial_conditions"].push_back(std::vector<double>(r.x0().begin(), r.x0().end()));
    write_json(out / "provenance.json", prov);
    write_file(out / "lyapunov.csv", [&](std::ostream& os) { write_lyapunov_csv(os, built->V, runs.front()); });
    write_file(out / "trajectory.csv",
               [&](std::ostream& os) { write_trajectory_csv(os, runs.front(), built->V.function()); });
    const int code = ok ? kPass : kFail;
    finish(manifest, c, code);
    return code;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    if (n == 1) return {lo};
    std::vector<double> v(n);
    for (std::size_t k = 0; k < n; ++k) v[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
    return v;
}

std::size_t thread_cap() {
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("IMPULSIVE_ISS_THREADS")) {
        try {
            const long cap = std::stol(env);
            if (cap >= 1) n = std::min(n, static_cast<std::size_t>(cap));
        } catch (const std::exception&) {
            throw ConfigError("IMPULSIVE_ISS_THREADS", "expected a positive integer");
        }
    }
    return n;
}

int cmd_sweep(const Common& c, const SweepArgs& a) {
    json manifest = manifest_base("sweep", c);
    manifest["regime"] = a.regime;
    manifest["rho"] = a.rho;
    manifest["alpha"] = a.alpha;
    manifest["theta"] = {{"min", a.theta_min}, {"max", a.theta_max}, {"n", a.theta_n}};
    manifest["delta"] = {{"min", a.delta_min}, {"max", a.delta_max}, {"n", a.delta_n}};
    if (a.regime != "sfuj" && a.regime != "ufsj") throw ConfigError("--regime", "expected sfuj or ufsj");
    if (a.theta_n == 0 || a.delta_n == 0) throw ConfigError("--theta-n/--delta-n", "grid sizes must be positive");
    Rate rho;
    ComparisonFunction alpha;
    try {
        rho = parse_rate(a.rho);
        alpha = parse_comparison(a.alpha);
    } catch (const Error& e) {
        throw ConfigError("--rho/--alpha", e.what());
    }

    const std::size_t n_threads = thread_cap();
    std::vector<SweepPoint> region;
    try {
        region = sweep_dwell(a.regime, rho, alpha, linspace(a.theta_min, a.theta_max, a.theta_n),
                             linspace(a.delta_min, a.delta_max, a.delta_n), n_threads);
    } catch (const Error& e) {
        manifest["error"] = e.what();
        finish(manifest, c, kPrecondition);
        std::cerr << e.what() << '\n';
        return kPrecondition;
    }

    write_file(fs::path(c.out) / "region.csv", [&](std::ostream& os) {
        os << "theta,delta,pass\n";
        for (const auto& pt : region) {
            os << format_double(pt.theta) << ',' << format_double(pt.delta) << ',' << (pt.pass ? 1 : 0) << '\n';
        }
    });
    manifest["threads"] = n_threads;
    finish(manifest, c, kPass);
    return kPass;
}

void add_common(CLI::App* sub, Common& c, bool needs_scenario = true) {
    auto* opt = sub->add_option("--scenario", c.scenario, "built-in name or scenario JSON path");
    if (needs_scenario) opt->required();
    sub->add_option("--out", c.out, "output directory");
    sub->add_option("--step", c.step, "integration step");
    sub->add_option("--horizon", c.horizon, "simulation horizon");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Impulsive-system ISS-Lyapunov toolkit"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    Common common;
    VerifyArgs verify;
    ConstructArgs cons;
    SweepArgs sweep;

    auto* sim = app.add_subcommand("simulate", "integrate a scenario and write trajectory.csv");
    add_common(sim, common);

    auto* ver = app.add_subcommand("verify", "check a Lyapunov definition along a simulated trajectory");
    add_common(ver, common);
    ver->add_option("--which", verify.which, "def1, def2 or def3")->check(CLI::IsMember({"def1", "def2", "def3"}));
    ver->add_flag("--drop-discount", verify.drop_discount, "remove the time discount of the rotation2d function");

    auto* con = app.add_subcommand("construct", "build V from a candidate and verify it");
    add_common(con, common);
    con->add_option("--regime", cons.regime, "sfuj or ufsj")->check(CLI::IsMember({"sfuj", "ufsj"}));
    con->add_option("--theta", cons.theta, "dwell bound");
    con->add_option("--delta", cons.delta, "dwell margin");

    auto* swp = app.add_subcommand("sweep", "dwell condition over a (theta, delta) grid");
    add_common(swp, common, false);
    swp->add_option("--regime", sweep.regime, "sfuj or ufsj");
    swp->add_option("--rho", sweep.rho, "flow rate, e.g. linear:1");
    swp->add_option("--alpha", sweep.alpha, "jump rate, e.g. linear:2");
    swp->add_option("--theta-min", sweep.theta_min);
    swp->add_option("--theta-max", sweep.theta_max);
    swp->add_option("--theta-n", sweep.theta_n);
    swp->add_option("--delta-min", sweep.delta_min);
    swp->add_option("--delta-max", sweep.delta_max);
    swp->add_option("--delta-n", sweep.delta_n);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kPass : kConfig;
    }

    try {
        fs::create_directories(common.out);
        if (*sim) return cmd_simulate(common);
        if (*ver) return cmd_verify(common, verify);
        if (*con) return cmd_construct(common, cons);
        if (*swp) return cmd_sweep(common, sweep);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << '\n';
        json manifest = manifest_base(app.get_subcommands().front()->get_name(), common);
        manifest["error"] = e.what();
        try {
            finish(manifest, common, kConfig);
        } catch (const std::exception&) {
        }
        return kConfig;
    } catch (const Error& e) {
        std::cerr << e.what() << '\n';
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return kConfig;
    }
    return kConfig;
}
