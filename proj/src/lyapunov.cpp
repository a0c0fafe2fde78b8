#include "impiss/lyapunov.hpp"

#include "impiss/errors.hpp"
#include "impiss/format.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace impiss {

namespace {

using SegmentFn = std::function<double(const SegmentClock&, const State&)>;

double dini_on_segment(const SegmentFn& value, const Trajectory& traj, const Segment& seg, double t,
                       const State& x, double v, double h) {
    double best = -std::numeric_limits<double>::infinity();
    for (double hp : {h, 0.5 * h, 0.25 * h}) {
        const State y = traj.advance(t, x, hp);
        best = std::max(best, (value(seg.clock(t + hp), y) - v) / hp);
    }
    return best;
}

double step_of(const Trajectory& traj, const VerifyOptions& opts) {
    return opts.h > 0.0 ? opts.h : traj.step();
}

// Stop strictly before the segment end so that t + h stays inside the segment.
bool dini_fits(const Segment& seg, double t, double h) {
    return t + h <= seg.stop;
}

}  // namespace

double TimeVaryingLyapunov::left_limit(double t, const State& x) const {
    const std::size_t i = impulses_.segment_index(t);
    if (i > 0 && impulses_.time(i) == t) return fn_({i - 1, impulses_.time(i - 1), t, t}, x);
    return fn_({i, impulses_.time(i), impulses_.time(i + 1), t}, x);
}

void VerificationReport::add(const std::string& condition, double t, double margin, std::size_t trajectory) {
    const bool pass = margin >= 0.0;
    if (!pass) ++failures_;
    worst_margin_ = std::min(worst_margin_, margin);
    checks_.push_back({condition, t, margin, pass, trajectory});
}

std::map<std::string, ConditionSummary> VerificationReport::summary() const {
    std::map<std::string, ConditionSummary> out;
    for (const auto& c : checks_) {
        auto [it, fresh] = out.try_emplace(c.condition);
        ConditionSummary& s = it->second;
        if (fresh || c.margin < s.worst_margin) {
            s.worst_margin = c.margin;
            s.worst_t = c.t;
        }
        ++s.checks;
        if (!c.pass) ++s.failures;
    }
    return out;
}

std::vector<CheckEntry> VerificationReport::failing(const std::string& condition) const {
    std::vector<CheckEntry> out;
    for (const auto& c : checks_) {
        if (!c.pass && (condition.empty() || c.condition == condition)) out.push_back(c);
    }
    return out;
}

nlohmann::json VerificationReport::to_json(std::size_t max_entries) const {
    auto entry = [](const CheckEntry& c) {
        return nlohmann::json{{"condition_id", c.condition}, {"t", c.t}, {"margin", c.margin}, {"pass", c.pass},
                              {"trajectory", c.trajectory}};
    };
    nlohmann::json j;
    j["definition"] = definition_;
    j["verdict"] = passed() ? "pass" : "fail";
    j["checks_total"] = checks_.size();
    j["failures"] = failures_;
    j["worst_margin"] = checks_.empty() ? nlohmann::json(nullptr) : nlohmann::json(worst_margin_);
    nlohmann::json summ = nlohmann::json::object();
    for (const auto& [name, s] : summary()) {
        summ[name] = {{"checks", s.checks}, {"failures", s.failures}, {"worst_margin", s.worst_margin},
                      {"worst_t", s.worst_t}};
    }
    j["summary"] = summ;
    nlohmann::json entries = nlohmann::json::array();
    const bool truncated = checks_.size() > max_entries;
    if (!truncated) {
        for (const auto& c : checks_) entries.push_back(entry(c));
    } else {
        std::map<std::string, const CheckEntry*> worst;
        for (const auto& c : checks_) {
            auto& w = worst[c.condition];
            if (!w || c.margin < w->margin) w = &c;
        }
        for (const auto& c : checks_) {
            if (!c.pass || worst[c.condition] == &c) entries.push_back(entry(c));
        }
    }
    j["truncated"] = truncated;
    j["checks"] = std::move(entries);
    return j;
}

double dini_derivative(const TimeVaryingLyapunov& V, const Trajectory& traj, double t, double h) {
    if (!(h > 0.0)) throw Error(ErrorKind::Argument, "Dini step must be positive");
    const Segment& seg = traj.segment_at(t);
    if (!dini_fits(seg, t, h)) {
        throw Error(ErrorKind::SegmentBoundary, "t = " + format_double(t) + " is within h of the segment end " +
                                                    format_double(seg.stop));
    }
    const State x = traj.state_at(t);
    return dini_on_segment(V.function(), traj, seg, t, x, V.on_segment(seg.clock(t), x), h);
}

VerificationReport verify_definition3(const TimeVaryingLyapunov& V, const std::vector<Trajectory>& trajectories,
                                      const VerifyOptions& opts) {
    VerificationReport rep("def3");
    const Certificates& c = V.certificates();
    for (std::size_t k = 0; k < trajectories.size(); ++k) {
        const Trajectory& traj = trajectories[k];
        const ImpulsiveSystem& sys = traj.system();
        const double h = step_of(traj, opts);
        const double usup = traj.input().sup_norm;
        const double chi_level = c.chi(usup);
        const double a3_level = c.alpha3(usup);
        const auto& segs = traj.segments();
        for (std::size_t si = 0; si < segs.size(); ++si) {
            const Segment& seg = segs[si];
            for (const Sample& s : seg.samples) {
                const double v = V.on_segment(seg.clock(s.t), s.x);
                const double n = sys.norm(s.x);
                const double tol = opts.roundoff * (1.0 + std::abs(v));
                rep.add("sandwich_lower", s.t, v - c.alpha1(n) + tol, k);
                rep.add("sandwich_upper", s.t, c.alpha2(n) - v + tol, k);
                if (v >= chi_level && dini_fits(seg, s.t, h)) {
                    const double d = dini_on_segment(V.function(), traj, seg, s.t, s.x, v, h);
                    const double slack = opts.c_slack * h * (1.0 + std::abs(v));
                    rep.add("flow_decay", s.t, -c.phi(v) + slack - d, k);
                }
            }
            if (!seg.ends_with_jump) continue;
            const Sample& pre = seg.samples.back();
            const Segment& next = segs[si + 1];
            const double v_pre = V.on_segment(seg.clock(pre.t), pre.x);
            const double v_post = V.on_segment(next.clock(next.start), next.samples.front().x);
            if (v_pre >= chi_level) {
                rep.add("jump_nonincrease", pre.t, v_pre - v_post + opts.roundoff * (1.0 + std::abs(v_pre)), k);
            } else if (v_pre < chi_level - opts.gate_strict) {
                rep.add("jump_bound", pre.t, a3_level - v_post + opts.roundoff * (1.0 + a3_level), k);
            }
        }
    }
    return rep;
}

VerificationReport verify_definition2(const CandidateLyapunov& C, const std::vector<Trajectory>& trajectories,
                                      const VerifyOptions& opts) {
    VerificationReport rep("def2");
    const SegmentFn value = [&C](const SegmentClock&, const State& x) { return C.V(x); };
    for (std::size_t k = 0; k < trajectories.size(); ++k) {
        const Trajectory& traj = trajectories[k];
        const ImpulsiveSystem& sys = traj.system();
        const double h = step_of(traj, opts);
        const double usup = traj.input().sup_norm;
        const double gate = C.eta(usup);
        const double psi3_level = C.psi3(usup);
        const auto& segs = traj.segments();
        for (std::size_t si = 0; si < segs.size(); ++si) {
            const Segment& seg = segs[si];
            for (const Sample& s : seg.samples) {
                const double v = C.V(s.x);
                const double n = sys.norm(s.x);
                const double tol = opts.roundoff * (1.0 + std::abs(v));
                rep.add("sandwich_lower", s.t, v - C.psi1(n) + tol, k);
                rep.add("sandwich_upper", s.t, C.psi2(n) - v + tol, k);
                if (v >= gate && dini_fits(seg, s.t, h)) {
                    const double d = dini_on_segment(value, traj, seg, s.t, s.x, v, h);
                    const double slack = opts.c_slack * h * (1.0 + std::abs(v));
                    rep.add("flow_rate", s.t, -C.rho(v) + slack - d, k);
                }
            }
            if (!seg.ends_with_jump) continue;
            const Sample& pre = seg.samples.back();
            const double v_pre = C.V(pre.x);
            const double v_post = C.V(segs[si + 1].samples.front().x);
            if (v_pre >= gate) {
                const double bound = C.alpha(v_pre);
                rep.add("jump_rate", pre.t, bound - v_post + opts.roundoff * (1.0 + bound), k);
            } else if (v_pre < gate - opts.gate_strict) {
                rep.add("jump_bound", pre.t, psi3_level - v_post + opts.roundoff * (1.0 + psi3_level), k);
            }
        }
    }
    return rep;
}

VerificationReport check_iss_estimate(const Trajectory& traj, const IssGains& gains, std::size_t trajectory,
                                      double roundoff) {
    VerificationReport rep("def1");
    const ImpulsiveSystem& sys = traj.system();
    const double r = sys.norm(traj.x0());
    const double g = gains.gamma(traj.input().sup_norm);
    for (const Segment& seg : traj.segments()) {
        for (const Sample& s : seg.samples) {
            const double bound = gains.beta(r, s.t - traj.t0()) + g;
            rep.add("iss_estimate", s.t, bound - sys.norm(s.x) + roundoff * (1.0 + bound), trajectory);
        }
    }
    return rep;
}

void write_lyapunov_csv(std::ostream& os, const TimeVaryingLyapunov& V, const Trajectory& traj) {
    const double chi_level = V.certificates().chi(traj.input().sup_norm);
    os << "t,V,chi_level,pre_jump\n";
    for (const Segment& seg : traj.segments()) {
        for (std::size_t k = 0; k < seg.samples.size(); ++k) {
            const Sample& s = seg.samples[k];
            const bool pre = seg.ends_with_jump && k + 1 == seg.samples.size();
            os << format_double(s.t) << ',' << format_double(V.on_segment(seg.clock(s.t), s.x)) << ','
               << format_double(chi_level) << ',' << (pre ? 1 : 0) << '\n';
        }
    }
}

}  // namespace impiss
