#include <segm/penalty.hpp>

#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <vector>

using namespace segm;

namespace {

std::vector<double> grid(double top, int count) {
    std::vector<double> g;
    for (int i = 0; i <= count; ++i) g.push_back(top * i / count);
    return g;
}

const PenaltyFamily kFamilies[] = {PenaltyFamily::CappedL1, PenaltyFamily::Scad, PenaltyFamily::Mcp,
                                   PenaltyFamily::Lasso};

// Kink points of the derivative, where quadrature pieces are split.
std::vector<double> kinks(const PenaltySpec& s) {
    switch (s.family) {
        case PenaltyFamily::CappedL1: return {s.shape * s.lambda};
        case PenaltyFamily::Scad: return {s.lambda, s.shape * s.lambda};
        case PenaltyFamily::Mcp: return {s.shape * s.lambda};
        case PenaltyFamily::Lasso: return {};
    }
    return {};
}

}  // namespace

TEST_CASE("penalty value examples") {
    auto cap = PenaltySpec::make(PenaltyFamily::CappedL1, 0.5);
    CHECK(penalty_value(cap, 0.3) == doctest::Approx(0.15));
    CHECK(penalty_value(cap, 0.8) == doctest::Approx(0.25));
    for (auto f : kFamilies) CHECK(penalty_value(PenaltySpec::make(f, 0.7), 0.0) == 0.0);
    CHECK_THROWS_AS(penalty_value(cap, -0.1), UsageError);
}

TEST_CASE("penalty derivative examples") {
    for (auto f : kFamilies) CHECK(penalty_rderiv(PenaltySpec::make(f, 0.7), 0.0) == 0.7);
    CHECK(penalty_rderiv(PenaltySpec::make(PenaltyFamily::CappedL1, 0.5), 0.6) == 0.0);
    auto mcp = PenaltySpec::make(PenaltyFamily::Mcp, 0.5);
    CHECK(penalty_rderiv(mcp, 0.9) == doctest::Approx(0.2));
    const double h = 1e-6;
    CHECK((penalty_value(mcp, 0.9 + h) - penalty_value(mcp, 0.9 - h)) / (2 * h) == doctest::Approx(0.2).epsilon(1e-8));
    CHECK_THROWS_AS(penalty_rderiv(mcp, -1.0), UsageError);
    // Right derivative at the capped-l1 kink is the flat side.
    CHECK(penalty_rderiv(PenaltySpec::make(PenaltyFamily::CappedL1, 0.5), 0.5) == 0.0);
}

TEST_CASE("defaults and validation") {
    CHECK(PenaltySpec::default_shape(PenaltyFamily::Scad) == 3.7);
    CHECK(PenaltySpec::default_shape(PenaltyFamily::Mcp) == 3.0);
    CHECK(PenaltySpec::default_shape(PenaltyFamily::CappedL1) == 1.0);
    PenaltySpec bad = PenaltySpec::make(PenaltyFamily::Scad, 1.0);
    bad.shape = 2.0;
    CHECK_THROWS_AS(bad.validate(), UsageError);
    bad = PenaltySpec::make(PenaltyFamily::Mcp, 1.0);
    bad.shape = 1.0;
    CHECK_THROWS_AS(bad.validate(), UsageError);
    CHECK_THROWS_AS(PenaltySpec::make(PenaltyFamily::Lasso, 0.0).validate(), UsageError);
    CHECK(parse_penalty_family("capped-l1") == PenaltyFamily::CappedL1);
    CHECK_THROWS_AS(parse_penalty_family("ridge"), UsageError);
}

TEST_CASE("value is the integral of the derivative and stays below lambda u") {
    for (auto f : kFamilies) {
        auto s = PenaltySpec::make(f, 0.6);
        for (double u : grid(5.0, 200)) {
            std::vector<double> pts{0.0};
            for (double k : kinks(s))
                if (k < u) pts.push_back(k);
            pts.push_back(u);
            double integral = 0.0;
            for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
                integral += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
                    [&](double v) { return penalty_rderiv(s, v); }, pts[i], pts[i + 1], 0, 0);
            }
            CHECK(penalty_value(s, u) == doctest::Approx(integral).epsilon(1e-8));
            CHECK(penalty_value(s, u) <= s.lambda * u + 1e-15);
        }
        double prev = penalty_rderiv(s, 0.0);
        for (double u : grid(5.0, 5000)) {
            double cur = penalty_rderiv(s, u);
            CHECK(cur <= prev);
            prev = cur;
        }
    }
}

TEST_CASE("penalty conditions") {
    auto g = grid(4.0, 400);
    for (auto f : kFamilies) {
        auto rep = check_penalty_conditions(PenaltySpec::make(f, 0.5), g);
        CHECK(rep.all());
    }
    auto lasso = check_penalty_conditions(PenaltySpec::make(PenaltyFamily::Lasso, 0.5), g);
    CHECK(lasso.c1 == 1.0);
    auto cap = check_penalty_conditions(PenaltySpec::make(PenaltyFamily::CappedL1, 0.5), g);
    CHECK(cap.c1 == 1.0);
    CHECK(cap.c2 < 1.0);
    CHECK(cap.c2 > 0.999);

    // Convex "penalty": lambda u + u^2.
    const double lam = 0.5;
    auto convex = check_penalty_conditions([&](double u) { return lam * u + u * u; },
                                           [&](double u) { return lam + 2 * u; }, lam, g, 1.0, 1.0);
    CHECK_FALSE(convex.concave);
    CHECK_FALSE(convex.all());
}
