#pragma once

#include <segm/types.hpp>

#include <functional>
#include <span>
#include <string>
#include <string_view>

namespace segm {

enum class PenaltyFamily { CappedL1, Scad, Mcp, Lasso };

std::string to_string(PenaltyFamily f);
PenaltyFamily parse_penalty_family(std::string_view name);

/**
 * A concave penalty p_lambda on [0, inf) with p(0) = 0 and p'(0+) = lambda.
 *
 * shape is the family parameter: the cap multiplier c for capped-l1
 * (p = lambda * min(u, c * lambda)), a for SCAD, gamma for MCP. Lasso
 * ignores it.
 */
struct PenaltySpec {
    PenaltyFamily family = PenaltyFamily::CappedL1;
    double lambda = 1.0;
    double shape = 1.0;

    static double default_shape(PenaltyFamily f);
    static PenaltySpec make(PenaltyFamily f, double lambda);

    void validate() const;
    // Same family and shape, different lambda.
    PenaltySpec with_lambda(double lambda) const;
};

double penalty_value(const PenaltySpec& spec, double u);
// Right derivative p'(u+).
double penalty_rderiv(const PenaltySpec& spec, double u);

struct PenaltyConditionReport {
    bool zero_at_origin = false;      // p(0) = 0
    bool nondecreasing = false;
    bool concave = false;             // derivative nonincreasing on the grid
    bool slope_at_origin = false;     // p'(0+) = lambda
    bool plateau = false;             // p'(u) >= c1 * lambda on [0, c2 * lambda]
    double c1 = 0.0;
    double c2 = 0.0;

    bool all() const { return zero_at_origin && nondecreasing && concave && slope_at_origin && plateau; }
};

// Plateau constants the families are documented to satisfy.
std::pair<double, double> documented_plateau(const PenaltySpec& spec);

// Checks a generic penalty given as value/derivative callables.
PenaltyConditionReport check_penalty_conditions(const std::function<double(double)>& value,
                                                const std::function<double(double)>& rderiv,
                                                double lambda, std::span<const double> grid,
                                                double c1, double c2);

PenaltyConditionReport check_penalty_conditions(const PenaltySpec& spec, std::span<const double> grid);

}  // namespace segm
