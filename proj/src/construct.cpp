#include "impiss/construct.hpp"

#include "impiss/errors.hpp"
#include "impiss/format.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace impiss {

namespace {

void validate(const DwellParams& p) {
    if (!(p.delta > 0.0) || !(p.theta > p.delta)) {
        throw Error(ErrorKind::Argument, "dwell parameters need theta > delta > 0 (theta = " + format_double(p.theta) +
                                             ", delta = " + format_double(p.delta) + ")");
    }
    if (p.a_grid.empty()) throw Error(ErrorKind::Argument, "empty dwell grid");
    for (double a : p.a_grid) {
        if (!(a > 0.0)) throw Error(ErrorKind::Argument, "dwell grid must be positive");
    }
}

// integral_lo^hi ds / rate(s) with lo = 0 allowed.
double integral_from(const MonotoneTransform& t, double lo, double hi) {
    if (lo > 0.0) return t.integral(lo, hi);
    return t.value(hi) - t.lower_limit();
}

// F^-1(max{y, m}) with F^-1(m) = 0.
double clamped_inverse(const MonotoneTransform& t, double y) {
    if (y <= t.lower_limit()) return 0.0;
    return t.inverse(y);
}

}  // namespace

nlohmann::json DwellReport::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t k = 0; k < a.size(); ++k) rows.push_back({{"a", a[k]}, {"integral", integral[k]}});
    return {{"regime", regime}, {"bound", bound},     {"extreme", extreme}, {"margin", margin},
            {"pass", passed},   {"tolerance", kDwellTol}, {"grid", rows}};
}

DwellReport check_dwell_sfuj(const DwellParams& p) {
    validate(p);
    const auto t = build_transform(p.rho);
    DwellReport r;
    r.regime = "sfuj";
    r.bound = p.theta - p.delta;
    r.extreme = -std::numeric_limits<double>::infinity();
    for (double a : p.a_grid) {
        const double v = integral_from(t, a, p.alpha(a));
        r.a.push_back(a);
        r.integral.push_back(v);
        r.extreme = std::max(r.extreme, v);
    }
    r.margin = r.bound - r.extreme;
    r.passed = r.margin >= -kDwellTol;
    return r;
}

DwellReport check_dwell_ufsj(const DwellParams& p) {
    validate(p);
    const auto t = build_transform(p.rho.negated());
    DwellReport r;
    r.regime = "ufsj";
    r.bound = p.theta - p.delta;
    r.extreme = std::numeric_limits<double>::infinity();
    for (double a : p.a_grid) {
        const double target = p.alpha(a);
        if (!(target < a)) {
            throw Error(ErrorKind::Orientation, "alpha(" + format_double(a) + ") = " + format_double(target) +
                                                    " does not contract");
        }
        const double v = integral_from(t, target, a);
        r.a.push_back(a);
        r.integral.push_back(v);
        r.extreme = std::min(r.extreme, v);
    }
    r.margin = r.extreme - r.bound;
    r.passed = r.margin >= -kDwellTol;
    return r;
}

std::vector<SweepPoint> sweep_dwell(const std::string& regime, const Rate& rho, const ComparisonFunction& alpha,
                                    const std::vector<double>& thetas, const std::vector<double>& deltas,
                                    std::size_t threads) {
    if (regime != "sfuj" && regime != "ufsj") throw Error(ErrorKind::Argument, "unknown regime '" + regime + "'");
    std::vector<SweepPoint> out;
    for (double theta : thetas) {
        for (double delta : deltas) out.push_back({theta, delta, false});
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t k = next++; k < out.size(); k = next++) {
            SweepPoint& pt = out[k];
            if (!(pt.theta > pt.delta && pt.delta > 0.0)) continue;
            try {
                const DwellParams p{rho, alpha, pt.theta, pt.delta};
                pt.pass = (regime == "sfuj" ? check_dwell_sfuj(p) : check_dwell_ufsj(p)).passed;
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const std::size_t n = std::max<std::size_t>(1, std::min(threads, out.size()));
    std::vector<std::thread> pool;
    for (std::size_t i = 1; i < n; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return out;
}

double Kappa::derivative(double s) const {
    return c * (s * s + 2.0 * s) / ((1.0 + s) * (1.0 + s));
}

double Kappa::inverse(double v) const {
    if (v <= 0.0) return 0.0;
    return (v + std::sqrt(v * v + 4.0 * c * v)) / (2.0 * c);
}

Kappa default_kappa(const ComparisonFunction& alpha, const std::vector<double>& grid) {
    double inf = std::numeric_limits<double>::infinity();
    for (double s : grid) {
        if (!(s > 0.0)) continue;
        const double lower = std::min(impiss::inverse(alpha, s), s);
        inf = std::min(inf, lower * (1.0 + s) / (s * s));
    }
    const double c = 0.99 * inf;
    if (!(c > 0.0) || !std::isfinite(c)) {
        throw Error(ErrorKind::Construction, "kappa coefficient " + format_double(c) + " is not positive");
    }
    Kappa k;
    k.c = c;
    k.fn = ComparisonFunction([c](double s) { return c * s * s / (1.0 + s); }, ClassTag::KInfinity, "kappa");
    for (double s : grid) {
        if (k(s) > std::min(impiss::inverse(alpha, s), s) * (1.0 + 1e-12)) {
            throw Error(ErrorKind::Construction, "kappa exceeds min{alpha^-1, id} at s = " + format_double(s));
        }
    }
    const ComparisonFunction prime([k](double s) { return k.derivative(s); }, ClassTag::P, "kappa'");
    if (!verify_class(prime, ClassTag::P, grid).passed()) {
        throw Error(ErrorKind::Construction, "kappa' fails the class-P check");
    }
    return k;
}

ComparisonFunction build_phi(const CandidateLyapunov& C, const DwellParams& p, const Kappa& kappa,
                             const std::vector<double>& grid) {
    const double ratio = p.delta / p.theta;
    const Rate rho = C.rho;
    ComparisonFunction phi(
        [ratio, rho, kappa](double v) {
            if (v <= 0.0) return 0.0;
            const double w = kappa.inverse(v);
            return std::min(ratio * rho(v), kappa.derivative(w) * rho(w));
        },
        ClassTag::P, "phi");
    const auto report = verify_class(phi, ClassTag::P, grid);
    if (!report.passed()) {
        const auto& v = report.violations.front();
        throw Error(ErrorKind::Construction,
                    "phi violates '" + v.property + "' at v = " + format_double(v.at));
    }
    return phi;
}

ConstructionResult construct_sfuj(const CandidateLyapunov& C, const DwellParams& p, const ImpulseSequence& S,
                                  const Kappa& kappa) {
    DwellReport dwell = check_dwell_sfuj(p);
    if (!dwell.passed) {
        throw Error(ErrorKind::Precondition, "dwell condition fails: max integral " + format_double(dwell.extreme) +
                                                 " > theta - delta = " + format_double(dwell.bound));
    }
    if (S.min_gap() < p.theta - kDwellTol) {
        throw Error(ErrorKind::Sequence, "impulse gap " + format_double(S.min_gap()) + " is below theta = " +
                                             format_double(p.theta));
    }
    const auto F = build_transform(C.rho);
    const double discount = p.theta - p.delta;
    const auto Vc = C.V;
    auto fn = [F, Vc, kappa, discount](const SegmentClock& c, const State& x) {
        const double vc = Vc(x);
        if (vc <= 0.0) return 0.0;
        const double remaining = (c.end - c.t) / (c.end - c.start);
        const double v1 = clamped_inverse(F, F.value(vc) - remaining * discount);
        return std::max(v1, kappa(vc));
    };

    Certificates cert;
    const ComparisonFunction psi1 = C.psi1;
    cert.alpha1 = compose(kappa.fn, psi1)
                      .with_tag(ClassTag::KInfinity)
                      .with_inverse([kappa, psi1](double w) { return inverse(psi1, kappa.inverse(w)); });
    cert.alpha2 = C.psi2;
    cert.chi = compose(C.alpha, C.eta).with_tag(ClassTag::KInfinity);
    cert.phi = build_phi(C, p, kappa);
    cert.alpha3 = max_of(C.psi3, cert.chi).with_tag(ClassTag::K);

    ConstructionResult r{TimeVaryingLyapunov(fn, S, cert, "sfuj"), std::move(dwell), {}};
    r.provenance = {
        {"regime", "sfuj"},
        {"theta", p.theta},
        {"delta", p.delta},
        {"kappa", {{"form", "c*s^2/(1+s)"}, {"c", kappa.c}}},
        {"impulse_gaps", {{"min", S.min_gap()}, {"max", S.max_gap()}}},
        {"lower_limit", F.has_finite_lower_limit() ? nlohmann::json(F.lower_limit()) : nlohmann::json("-inf")},
        {"dwell", r.dwell.to_json()},
        {"certificates",
         {{"alpha1", "kappa o psi1"},
          {"alpha2", "psi2"},
          {"chi", "alpha o eta"},
          {"phi", "min{(delta/theta) rho(v), kappa'(kappa^-1(v)) rho(kappa^-1(v))}"},
          {"alpha3", "max{psi3, chi}"}}},
        {"initial_segment", "formula applied on [t0, t1) with i = 0"},
    };
    return r;
}

ConstructionResult construct_sfuj(const CandidateLyapunov& C, const DwellParams& p, const ImpulseSequence& S) {
    return construct_sfuj(C, p, S, default_kappa(C.alpha));
}

ConstructionResult construct_ufsj(const CandidateLyapunov& C, const DwellParams& p, const ImpulseSequence& S) {
    DwellReport dwell = check_dwell_ufsj(p);
    if (!dwell.passed) {
        throw Error(ErrorKind::Precondition, "dwell condition fails: min integral " + format_double(dwell.extreme) +
                                                 " < theta - delta = " + format_double(dwell.bound));
    }
    const double growth = p.theta + p.delta;
    if (dwell.extreme < growth - kDwellTol) {
        throw Error(ErrorKind::Precondition, "min integral " + format_double(dwell.extreme) +
                                                 " < theta + delta = " + format_double(growth) +
                                                 "; jumps could increase V");
    }
    if (S.max_gap() > p.theta + kDwellTol) {
        throw Error(ErrorKind::Sequence, "impulse gap " + format_double(S.max_gap()) + " exceeds theta = " +
                                             format_double(p.theta));
    }
    const Rate neg = C.rho.negated();
    const auto F = build_transform(neg);
    const auto Vc = C.V;
    auto fn = [F, Vc, growth](const SegmentClock& c, const State& x) {
        const double vc = Vc(x);
        if (vc <= 0.0) return 0.0;
        return clamped_inverse(F, F.value(vc) - c.fraction() * growth);
    };

    Certificates cert;
    const ComparisonFunction psi1 = C.psi1;
    cert.alpha1 = ComparisonFunction(
        [F, psi1, growth](double s) {
            const double v = psi1(s);
            return v <= 0.0 ? 0.0 : clamped_inverse(F, F.value(v) - growth);
        },
        ClassTag::KInfinity, "alpha1")
                      .with_inverse([F, psi1, growth](double w) {
                          return w <= 0.0 ? 0.0 : inverse(psi1, F.inverse(F.value(w) + growth));
                      });
    cert.alpha2 = C.psi2;
    cert.chi = C.eta;
    const double ratio = p.delta / p.theta;
    cert.phi = ComparisonFunction([neg, ratio](double v) { return v <= 0.0 ? 0.0 : ratio * neg(v); }, ClassTag::P,
                                  "phi");
    const auto phi_report = verify_class(cert.phi, ClassTag::P, default_grid());
    if (!phi_report.passed()) throw Error(ErrorKind::Construction, "phi = (delta/theta)(-rho) is not positive definite");
    cert.alpha3 = max_of(C.psi3, cert.chi).with_tag(ClassTag::K);

    ConstructionResult r{TimeVaryingLyapunov(fn, S, cert, "ufsj"), std::move(dwell), {}};
    r.provenance = {
        {"regime", "ufsj"},
        {"theta", p.theta},
        {"delta", p.delta},
        {"impulse_gaps", {{"min", S.min_gap()}, {"max", S.max_gap()}}},
        {"jump_margin", r.dwell.extreme - growth},
        {"dwell", r.dwell.to_json()},
        {"certificates",
         {{"alpha1", "F^-1(max{F(psi1(s)) - (theta + delta), m})"},
          {"alpha2", "psi2"},
          {"chi", "eta"},
          {"phi", "(delta/theta) (-rho)"},
          {"alpha3", "max{psi3, chi}"}}},
        {"certificate_origin", "completed here by mirroring the stable-flow construction"},
        {"initial_segment", "formula applied on [t0, t1) with i = 0"},
    };
    return r;
}

IssGains gains_from_certificates(const Certificates& c) {
    return build_iss_gains(c.alpha1, c.alpha2, c.alpha3, c.chi, build_beta_tilde(build_transform(c.phi)));
}

}  // namespace impiss
