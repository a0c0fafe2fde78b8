#include <doctest.h>

#include "impiss/comparison.hpp"
#include "impiss/errors.hpp"

#include <cmath>
#include <random>

using namespace impiss;

namespace {

const double kE5 = std::exp(5.0);

ComparisonFunction chi_heat() {
    return {[](double s) { return 4.0 * kE5 * s * s; }, ClassTag::KInfinity, "chi"};
}

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an impiss::Error");
    return ErrorKind::Argument;
}

}  // namespace

TEST_CASE("eval returns closed-form values") {
    CHECK(ComparisonFunction::linear(2.0)(0.0) == 0.0);
    CHECK(chi_heat()(0.1) == doctest::Approx(5.93652636).epsilon(1e-9));
    const auto chi_rot = ComparisonFunction::power(8.0 * std::exp(6.0 * M_PI), 2.0);
    CHECK(chi_rot(1.0) == doctest::Approx(8.0 * std::exp(6.0 * M_PI)).epsilon(1e-15));
}

TEST_CASE("eval rejects negative input") {
    CHECK(kind_of([] { (void)ComparisonFunction::linear(2.0)(-1.0); }) == ErrorKind::Domain);
}

TEST_CASE("inverse of closed forms") {
    CHECK(inverse(ComparisonFunction::linear(2.0), 1.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(inverse(ComparisonFunction::power(1.0, 2.0), 4.0, {0.0, 10.0}) == doctest::Approx(2.0).epsilon(1e-12));
    const double y = chi_heat()(0.1);
    CHECK(inverse(chi_heat(), y) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(std::abs(inverse(chi_heat(), 5.93652636) - 0.1) < 1e-9);
}

TEST_CASE("inverse error paths") {
    const auto sq = ComparisonFunction::power(1.0, 2.0);
    CHECK(kind_of([&] { (void)inverse(sq, 200.0, {0.0, 10.0}); }) == ErrorKind::Bracketing);
    const ComparisonFunction bump([](double s) { return (s - 1.0) * (s - 1.0); }, ClassTag::Generic, "bump");
    CHECK(kind_of([&] { (void)inverse(bump, 2.0, {0.0, 3.0}); }) == ErrorKind::ClassViolation);
}

TEST_CASE("compose") {
    const auto id = ComparisonFunction::identity();
    const auto g = ComparisonFunction::power(3.0, 1.5);
    for (double s : {0.0, 0.3, 2.0, 50.0}) CHECK(compose(id, g)(s) == g(s));
    CHECK(compose(ComparisonFunction::power(1.0, 2.0), ComparisonFunction::linear(2.0))(3.0) == doctest::Approx(36.0));
    CHECK(compose(ComparisonFunction::linear(1.0), ComparisonFunction::linear(2.0)).tag() == ClassTag::KInfinity);

    // gamma = alpha1^-1 o max{alpha3, chi}, alpha1(s) = s/e
    const auto alpha1 = ComparisonFunction::linear(std::exp(-1.0));
    const auto alpha3 = ComparisonFunction::power(4.0 * std::exp(4.0), 2.0);
    const auto gamma = compose(inverse_function(alpha1), max_of(alpha3, chi_heat()));
    CHECK(gamma(0.1) == doctest::Approx(0.04 * std::exp(6.0)).epsilon(1e-11));
    CHECK(gamma(0.1) == doctest::Approx(16.137).epsilon(1e-4));
}

TEST_CASE("verify_class examples") {
    CHECK(verify_class(ComparisonFunction::identity(), ClassTag::KInfinity, log_grid(1e-6, 1e6, 256)).passed());

    const ComparisonFunction shifted([](double s) { return 1.0 + s; }, ClassTag::K, "1+s");
    const auto bad = verify_class(shifted, ClassTag::K, {0.0, 1.0, 2.0});
    REQUIRE_FALSE(bad.passed());
    CHECK(bad.violations.front().property == "zero");

    const ComparisonFunction kappa_prime([](double s) { return 0.5 * (s * s + 2.0 * s) / ((1.0 + s) * (1.0 + s)); },
                                         ClassTag::P, "kappa'");
    std::vector<double> grid;
    for (int i = 0; i <= 100; ++i) grid.push_back(0.1 * i);
    CHECK(verify_class(kappa_prime, ClassTag::P, grid).passed());

    CHECK(kind_of([&] { (void)verify_class(kappa_prime, ClassTag::P, {}); }) == ErrorKind::Argument);
}

TEST_CASE("verify_class flags bounded and non-monotone functions") {
    const ComparisonFunction saturating([](double s) { return s / (1.0 + s); }, ClassTag::K, "sat");
    CHECK(verify_class(saturating, ClassTag::K, default_grid()).passed());
    const auto r = verify_class(saturating, ClassTag::KInfinity, default_grid());
    REQUIRE_FALSE(r.passed());
    CHECK(r.violations.front().property == "unbounded");

    const ComparisonFunction wiggle([](double s) { return s + 2.0 * std::sin(s); }, ClassTag::K, "wiggle");
    std::vector<double> grid;
    for (int i = 1; i <= 100; ++i) grid.push_back(0.1 * i);
    const auto w = verify_class(wiggle, ClassTag::K, grid);
    REQUIRE_FALSE(w.passed());
    CHECK(w.violations.front().property == "increasing");
}

TEST_CASE("parse named functions") {
    CHECK(parse_comparison("linear:2.5")(2.0) == doctest::Approx(5.0));
    CHECK(parse_comparison("power:3,2")(2.0) == doctest::Approx(12.0));
    CHECK(parse_comparison("exp:1,1")(1.0) == doctest::Approx(std::exp(1.0) - 1.0));
    CHECK(parse_rate("linear:-2")(3.0) == doctest::Approx(-6.0));
    CHECK(kind_of([] { (void)parse_comparison("cubic:1"); }) == ErrorKind::Argument);
}

TEST_CASE("table interpolation is monotone and extrapolates linearly") {
    const auto t = ComparisonFunction::table({0.0, 1.0, 2.0}, {0.0, 1.0, 4.0});
    CHECK(t(0.5) == doctest::Approx(0.5));
    CHECK(t(1.5) == doctest::Approx(2.5));
    CHECK(t(3.0) == doctest::Approx(7.0));
    CHECK(verify_class(t, ClassTag::KInfinity, default_grid()).passed());
}

TEST_CASE("property: inverse round trip on the image") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> pick(-6.0, 6.0);
    const std::vector<ComparisonFunction> fs = {
        ComparisonFunction::linear(0.3), ComparisonFunction::power(2.0, 3.0), ComparisonFunction::power(1.0, 0.5),
        ComparisonFunction::exp_scaled(0.5, 0.2), chi_heat()};
    for (const auto& f : fs) {
        for (int i = 0; i < 50; ++i) {
            const double y = f(std::pow(10.0, pick(rng) / 2.0));
            const double s = inverse(f, y);
            CHECK(std::abs(f(s) - y) <= kInverseTol * std::max(1.0, y));
        }
    }
}

TEST_CASE("property: composition is associative on samples") {
    const auto f = ComparisonFunction::power(2.0, 1.3);
    const auto g = ComparisonFunction::exp_scaled(0.1, 0.7);
    const auto h = ComparisonFunction::linear(3.0);
    for (double s : log_grid(1e-4, 5.0, 40)) {
        const double left = compose(compose(f, g), h)(s);
        const double right = compose(f, compose(g, h))(s);
        CHECK(std::abs(left - right) <= 1e-12 * std::abs(left));
    }
}

TEST_CASE("property: K-infinity on a grid implies invertibility on its image") {
    const auto grid = log_grid(1e-6, 1e3, 64);
    for (const auto& f : {ComparisonFunction::power(1.0, 2.0), ComparisonFunction::exp_scaled(1.0, 0.01)}) {
        REQUIRE(verify_class(f, ClassTag::KInfinity, grid).passed());
        for (double s : grid) {
            const double y = f(s);
            CHECK(std::abs(f(inverse(f, y)) - y) <= kInverseTol * std::max(1.0, y));
        }
    }
}

TEST_CASE("KL check accepts an exponential decay and rejects growth") {
    const KLFunction decay([](double r, double s) { return r * std::exp(-s); });
    CHECK(verify_kl(decay, log_grid(1e-3, 1e3, 20), {0.0, 1.0, 5.0, 10.0}).passed());
    const KLFunction growth([](double r, double s) { return r * (1.0 + s); });
    CHECK_FALSE(verify_kl(growth, log_grid(1e-3, 1e3, 20), {0.0, 1.0, 5.0, 10.0}).passed());
}
