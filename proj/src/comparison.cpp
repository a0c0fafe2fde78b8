#include "impiss/comparison.hpp"

#include "impiss/errors.hpp"
#include "impiss/format.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace impiss {

std::string_view to_string(ClassTag tag) {
    switch (tag) {
        case ClassTag::K: return "K";
        case ClassTag::KInfinity: return "K_infinity";
        case ClassTag::P: return "P";
        case ClassTag::Generic: return "generic";
    }
    return "generic";
}

Rate Rate::negated() const {
    auto fn = fn_;
    return Rate([fn](double s) { return -fn(s); }, "-(" + name_ + ")");
}

Rate Rate::scaled(double c) const {
    auto fn = fn_;
    return Rate([fn, c](double s) { return c * fn(s); }, format_double(c) + "*(" + name_ + ")");
}

ComparisonFunction::ComparisonFunction(ScalarFn fn, ClassTag tag, std::string name, double domain_hint)
    : fn_(std::move(fn)), tag_(tag), name_(std::move(name)), domain_hint_(domain_hint) {
    if (!fn_) throw Error(ErrorKind::Argument, "comparison function without evaluator");
    if (!(domain_hint_ > 0.0)) throw Error(ErrorKind::Argument, "domain hint must be positive");
}

double ComparisonFunction::operator()(double s) const {
    if (!(s >= 0.0)) {
        throw Error(ErrorKind::Domain, name_ + " evaluated at negative or NaN argument " + format_double(s));
    }
    const double v = fn_(s);
    if (!(v >= 0.0)) {
        throw Error(ErrorKind::ClassViolation, name_ + "(" + format_double(s) + ") = " + format_double(v) +
                                                   " is negative");
    }
    return v;
}

ComparisonFunction ComparisonFunction::with_tag(ClassTag tag) const {
    ComparisonFunction copy = *this;
    copy.tag_ = tag;
    return copy;
}

ComparisonFunction ComparisonFunction::with_inverse(ScalarFn inv) const {
    ComparisonFunction copy = *this;
    copy.inv_ = std::move(inv);
    return copy;
}

Rate ComparisonFunction::as_rate() const {
    return Rate(fn_, name_);
}

ComparisonFunction ComparisonFunction::identity() {
    return {[](double s) { return s; }, ClassTag::KInfinity, "id"};
}

ComparisonFunction ComparisonFunction::zero() {
    return {[](double) { return 0.0; }, ClassTag::Generic, "zero"};
}

ComparisonFunction ComparisonFunction::linear(double a) {
    ComparisonFunction f{[a](double s) { return a * s; }, ClassTag::KInfinity, "linear:" + format_double(a)};
    if (a > 0.0) return f.with_inverse([a](double y) { return y / a; });
    return f;
}

ComparisonFunction ComparisonFunction::power(double c, double p) {
    ComparisonFunction f{[c, p](double s) { return c * std::pow(s, p); }, ClassTag::KInfinity,
                         "power:" + format_double(c) + "," + format_double(p)};
    if (c > 0.0 && p > 0.0) return f.with_inverse([c, p](double y) { return std::pow(y / c, 1.0 / p); });
    return f;
}

ComparisonFunction ComparisonFunction::exp_scaled(double c, double k) {
    return {[c, k](double s) { return c * std::expm1(k * s); }, ClassTag::KInfinity,
            "exp:" + format_double(c) + "," + format_double(k)};
}

ComparisonFunction ComparisonFunction::table(std::vector<double> xs, std::vector<double> ys, std::string name) {
    if (xs.size() != ys.size() || xs.size() < 2) {
        throw Error(ErrorKind::Argument, "table needs at least two (x, y) rows of equal length");
    }
    if (xs.front() != 0.0) throw Error(ErrorKind::Argument, "table must start at x = 0");
    for (std::size_t i = 1; i < xs.size(); ++i) {
        if (!(xs[i] > xs[i - 1]) || !(ys[i] > ys[i - 1])) {
            throw Error(ErrorKind::Argument, "table columns must be strictly increasing");
        }
    }
    auto fn = [xs = std::move(xs), ys = std::move(ys)](double s) {
        auto it = std::upper_bound(xs.begin(), xs.end(), s);
        std::size_t hi = static_cast<std::size_t>(it - xs.begin());
        hi = std::clamp<std::size_t>(hi, 1, xs.size() - 1);
        const std::size_t lo = hi - 1;
        const double w = (s - xs[lo]) / (xs[hi] - xs[lo]);
        return ys[lo] + w * (ys[hi] - ys[lo]);
    };
    return {std::move(fn), ClassTag::KInfinity, std::move(name)};
}

ComparisonFunction ComparisonFunction::table_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Argument, "cannot open table " + path);
    std::vector<double> xs;
    std::vector<double> ys;
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        double x = 0.0;
        double y = 0.0;
        if (row >> x >> y) {
            xs.push_back(x);
            ys.push_back(y);
        }
    }
    return table(std::move(xs), std::move(ys), "table:" + path);
}

namespace {

std::vector<double> parse_numbers(std::string_view args, std::string_view spec) {
    std::vector<double> out;
    std::string buf(args);
    std::replace(buf.begin(), buf.end(), ',', ' ');
    std::istringstream in(buf);
    double v = 0.0;
    while (in >> v) out.push_back(v);
    if (!in.eof()) throw Error(ErrorKind::Argument, "malformed numbers in function spec '" + std::string(spec) + "'");
    return out;
}

ScalarFn parse_evaluator(std::string_view spec, std::string& canonical) {
    const auto colon = spec.find(':');
    const std::string_view kind = spec.substr(0, colon);
    const std::string_view args = colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);

    if (kind == "id" || kind == "identity") {
        canonical = "id";
        return [](double s) { return s; };
    }
    if (kind == "table") {
        auto f = ComparisonFunction::table_file(std::string(args));
        canonical = f.name();
        return [f](double s) { return f(s); };
    }
    const auto nums = parse_numbers(args, spec);
    if (kind == "linear" && nums.size() == 1) {
        const double a = nums[0];
        canonical = "linear:" + format_double(a);
        return [a](double s) { return a * s; };
    }
    if (kind == "power" && nums.size() == 2) {
        const double c = nums[0];
        const double p = nums[1];
        canonical = "power:" + format_double(c) + "," + format_double(p);
        return [c, p](double s) { return c * std::pow(s, p); };
    }
    if (kind == "exp" && nums.size() == 2) {
        const double c = nums[0];
        const double k = nums[1];
        canonical = "exp:" + format_double(c) + "," + format_double(k);
        return [c, k](double s) { return c * std::expm1(k * s); };
    }
    throw Error(ErrorKind::Argument, "unknown function spec '" + std::string(spec) + "'");
}

}  // namespace

ComparisonFunction parse_comparison(std::string_view spec, ClassTag tag) {
    std::string canonical;
    auto fn = parse_evaluator(spec, canonical);
    return {std::move(fn), tag, canonical};
}

Rate parse_rate(std::string_view spec) {
    std::string canonical;
    auto fn = parse_evaluator(spec, canonical);
    return {std::move(fn), canonical};
}

double solve_increasing(const ScalarFn& f, double y, Interval bracket) {
    double lo = bracket.lo;
    double hi = bracket.hi;
    if (!(lo <= hi)) throw Error(ErrorKind::Argument, "empty bracket");
    double flo = f(lo);
    double fhi = f(hi);
    if (flo > fhi) throw Error(ErrorKind::ClassViolation, "function decreases across the bracket");
    if (y < flo - kInverseTol || y > fhi + kInverseTol || std::isnan(y)) {
        throw Error(ErrorKind::Bracketing, "target " + format_double(y) + " outside bracket image [" +
                                               format_double(flo) + ", " + format_double(fhi) + "]");
    }
    if (y <= flo) return lo;
    if (y >= fhi) return hi;

    double best = lo;
    double best_err = y - flo;
    if (fhi - y < best_err) {
        best = hi;
        best_err = fhi - y;
    }
    for (int iter = 0; iter < kInverseMaxIter; ++iter) {
        double x = lo + 0.5 * (hi - lo);
        if (iter % 2 == 0 && fhi > flo) {
            const double secant = lo + (y - flo) * ((hi - lo) / (fhi - flo));
            if (secant > lo && secant < hi) x = secant;
        }
        if (!(x > lo && x < hi)) break;  // bracket at floating-point resolution
        double fx = f(x);
        // Quadrature-backed functions jitter at the 1e-15 relative level.
        const double jitter = 1e-12 * std::max({1.0, std::abs(flo), std::abs(fhi)});
        if (!(fx >= flo - jitter && fx <= fhi + jitter)) {
            throw Error(ErrorKind::ClassViolation, "non-monotone sample at s = " + format_double(x));
        }
        fx = std::clamp(fx, flo, fhi);
        const double err = std::abs(fx - y);
        if (err < best_err) {
            best = x;
            best_err = err;
        }
        if (fx == y) return x;
        if (fx < y) {
            lo = x;
            flo = fx;
        } else {
            hi = x;
            fhi = fx;
        }
        if (best_err <= kInverseTol && hi - lo <= 1e-14 * std::abs(best)) break;
    }
    return best;
}

double inverse(const ComparisonFunction& f, double y, Interval bracket) {
    if (bracket.lo < 0.0) throw Error(ErrorKind::Domain, "bracket reaches negative arguments");
    return solve_increasing([&f](double s) { return f(s); }, y, bracket);
}

double inverse(const ComparisonFunction& f, double y) {
    if (!(y >= 0.0)) throw Error(ErrorKind::Domain, "inverse of negative value " + format_double(y));
    if (f.explicit_inverse()) return f.explicit_inverse()(y);
    double lo = 0.0;
    double hi = std::max(1.0, f.domain_hint());
    for (int k = 0; f(hi) < y; ++k) {
        if (k > 1000 || !std::isfinite(hi)) {
            throw Error(ErrorKind::Bracketing, f.name() + " never reaches " + format_double(y));
        }
        lo = hi;
        hi *= 2.0;
    }
    return inverse(f, y, {lo, hi});
}

ComparisonFunction inverse_function(const ComparisonFunction& f) {
    ComparisonFunction inv{[f](double y) { return inverse(f, y); }, f.tag(), "inv(" + f.name() + ")", f.domain_hint()};
    return inv.with_inverse([f](double s) { return f(s); });
}

ComparisonFunction compose(const ComparisonFunction& f, const ComparisonFunction& g) {
    ClassTag tag = ClassTag::Generic;
    if (f.tag() == ClassTag::KInfinity && g.tag() == ClassTag::KInfinity) {
        tag = ClassTag::KInfinity;
    } else if ((f.tag() == ClassTag::K || f.tag() == ClassTag::KInfinity) &&
               (g.tag() == ClassTag::K || g.tag() == ClassTag::KInfinity)) {
        tag = ClassTag::K;
    }
    return {[f, g](double s) { return f(g(s)); }, tag, f.name() + " o " + g.name(), g.domain_hint()};
}

ComparisonFunction max_of(const ComparisonFunction& f, const ComparisonFunction& g) {
    ClassTag tag = ClassTag::Generic;
    if (f.tag() == ClassTag::KInfinity || g.tag() == ClassTag::KInfinity) {
        tag = ClassTag::KInfinity;
    } else if (f.tag() == g.tag()) {
        tag = f.tag();
    }
    return {[f, g](double s) { return std::max(f(s), g(s)); }, tag, "max{" + f.name() + ", " + g.name() + "}",
            std::max(f.domain_hint(), g.domain_hint())};
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0) || !(hi >= lo) || n == 0) throw Error(ErrorKind::Argument, "bad log grid");
    if (n == 1) return {lo};
    std::vector<double> out(n);
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    }
    out.front() = lo;
    out.back() = hi;
    return out;
}

std::vector<double> default_grid(double domain_hint) {
    return log_grid(1e-9, domain_hint, 256);
}

namespace {

// Evaluates without the sign guard so that violations are reported, not thrown.
struct Sample {
    double value = 0.0;
    bool ok = true;
};

Sample sample(const ComparisonFunction& f, double s) {
    try {
        return {f(s), true};
    } catch (const Error&) {
        return {std::numeric_limits<double>::quiet_NaN(), false};
    }
}

}  // namespace

ClassReport verify_class(const ComparisonFunction& f, ClassTag tag, const std::vector<double>& grid) {
    if (grid.empty()) throw Error(ErrorKind::Argument, "empty grid");
    if (grid.front() < 0.0 || !std::is_sorted(grid.begin(), grid.end())) {
        throw Error(ErrorKind::Argument, "grid must be sorted and non-negative");
    }
    ClassReport report;
    report.tag = tag;
    auto flag = [&report](const char* property, double at, double value) {
        for (const auto& v : report.violations) {
            if (v.property == property) return;
        }
        report.violations.push_back({property, at, value});
    };

    std::vector<double> values(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Sample s = sample(f, grid[i]);
        values[i] = s.value;
        if (!s.ok) flag("negative", grid[i], s.value);
    }
    if (tag == ClassTag::Generic) return report;

    const Sample at_zero = sample(f, 0.0);
    if (!at_zero.ok || at_zero.value != 0.0) flag("zero", 0.0, at_zero.value);

    if (tag == ClassTag::P) {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (grid[i] > 0.0 && !(values[i] > 0.0)) flag("positive", grid[i], values[i]);
        }
        return report;
    }

    double prev_s = 0.0;
    double prev_v = at_zero.value;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] > prev_s && !(values[i] > prev_v)) flag("increasing", grid[i], values[i]);
        prev_s = grid[i];
        prev_v = values[i];
    }

    if (tag == ClassTag::KInfinity && grid.front() > 0.0 && grid.back() >= 10.0 * grid.front()) {
        const double decade = grid.back() / 10.0;
        std::size_t j = 0;
        while (j + 1 < grid.size() && grid[j + 1] <= decade) ++j;
        const double top = values.back();
        if (!(top - values[j] >= 1e-3 * top)) flag("unbounded", grid.back(), top);
    }
    return report;
}

ClassReport verify_kl(const KLFunction& beta, const std::vector<double>& r_grid, const std::vector<double>& s_grid,
                      double vanish_ratio) {
    if (r_grid.empty() || s_grid.empty()) throw Error(ErrorKind::Argument, "empty grid");
    ClassReport report;
    report.tag = ClassTag::Generic;
    auto flag = [&report](const char* property, double at, double value) {
        for (const auto& v : report.violations) {
            if (v.property == property) return;
        }
        report.violations.push_back({property, at, value});
    };
    for (double s : s_grid) {
        if (beta(0.0, s) != 0.0) flag("zero", s, beta(0.0, s));
        double prev = 0.0;
        for (double r : r_grid) {
            const double v = beta(r, s);
            // equal zeros are floating-point underflow of a converged tail
            if (r > 0.0 && !(v > prev) && !(v == 0.0 && prev == 0.0)) flag("increasing", r, v);
            prev = v;
        }
    }
    for (double r : r_grid) {
        double prev = std::numeric_limits<double>::infinity();
        for (double s : s_grid) {
            const double v = beta(r, s);
            if (v > prev) flag("decay", s, v);
            prev = v;
        }
        const double first = beta(r, s_grid.front());
        const double last = beta(r, s_grid.back());
        if (first > 0.0 && !(last <= vanish_ratio * first)) flag("vanish", r, last);
    }
    return report;
}

}  // namespace impiss
