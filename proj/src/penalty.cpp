#include <segm/penalty.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

namespace segm {

std::string to_string(PenaltyFamily f) {
    switch (f) {
        case PenaltyFamily::CappedL1: return "capped-l1";
        case PenaltyFamily::Scad: return "scad";
        case PenaltyFamily::Mcp: return "mcp";
        case PenaltyFamily::Lasso: return "lasso";
    }
    return "unknown";
}

PenaltyFamily parse_penalty_family(std::string_view name) {
    if (name == "capped-l1") return PenaltyFamily::CappedL1;
    if (name == "scad") return PenaltyFamily::Scad;
    if (name == "mcp") return PenaltyFamily::Mcp;
    if (name == "lasso") return PenaltyFamily::Lasso;
    throw UsageError("unknown penalty family '" + std::string(name) +
                     "' (expected capped-l1, scad, mcp or lasso)");
}

double PenaltySpec::default_shape(PenaltyFamily f) {
    switch (f) {
        case PenaltyFamily::CappedL1: return 1.0;
        case PenaltyFamily::Scad: return 3.7;
        case PenaltyFamily::Mcp: return 3.0;
        case PenaltyFamily::Lasso: return 0.0;
    }
    return 0.0;
}

PenaltySpec PenaltySpec::make(PenaltyFamily f, double lambda) {
    PenaltySpec s{f, lambda, default_shape(f)};
    s.validate();
    return s;
}

PenaltySpec PenaltySpec::with_lambda(double new_lambda) const {
    PenaltySpec s = *this;
    s.lambda = new_lambda;
    s.validate();
    return s;
}

void PenaltySpec::validate() const {
    require(std::isfinite(lambda) && lambda > 0, "penalty lambda must be positive");
    switch (family) {
        case PenaltyFamily::CappedL1: require(shape > 0, "capped-l1 cap multiplier must be positive"); break;
        case PenaltyFamily::Scad: require(shape > 2, "SCAD parameter a must exceed 2"); break;
        case PenaltyFamily::Mcp: require(shape > 1, "MCP parameter gamma must exceed 1"); break;
        case PenaltyFamily::Lasso: break;
    }
}

double penalty_value(const PenaltySpec& spec, double u) {
    require(u >= 0, "penalty argument must be nonnegative");
    const double lam = spec.lambda;
    switch (spec.family) {
        case PenaltyFamily::Lasso: return lam * u;
        case PenaltyFamily::CappedL1: return lam * std::min(u, spec.shape * lam);
        case PenaltyFamily::Scad: {
            const double a = spec.shape;
            if (u <= lam) return lam * u;
            if (u <= a * lam) return (2 * a * lam * u - u * u - lam * lam) / (2 * (a - 1));
            return lam * lam * (a + 1) / 2;
        }
        case PenaltyFamily::Mcp: {
            const double g = spec.shape;
            if (u <= g * lam) return lam * u - u * u / (2 * g);
            return g * lam * lam / 2;
        }
    }
    return 0.0;
}

double penalty_rderiv(const PenaltySpec& spec, double u) {
    require(u >= 0, "penalty argument must be nonnegative");
    const double lam = spec.lambda;
    switch (spec.family) {
        case PenaltyFamily::Lasso: return lam;
        case PenaltyFamily::CappedL1: return u < spec.shape * lam ? lam : 0.0;
        case PenaltyFamily::Scad: {
            if (u <= lam) return lam;
            return std::max(spec.shape * lam - u, 0.0) / (spec.shape - 1);
        }
        case PenaltyFamily::Mcp: return std::max(lam - u / spec.shape, 0.0);
    }
    return 0.0;
}

std::pair<double, double> documented_plateau(const PenaltySpec& spec) {
    switch (spec.family) {
        case PenaltyFamily::Lasso: return {1.0, 1.0};
        // Derivative is lambda on [0, c * lambda).
        case PenaltyFamily::CappedL1: return {1.0, spec.shape * (1 - 1e-9)};
        // Derivative is lambda on [0, lambda].
        case PenaltyFamily::Scad: return {1.0, 1.0};
        // lambda - u / gamma >= lambda / 2 on [0, gamma * lambda / 2].
        case PenaltyFamily::Mcp: return {0.5, spec.shape / 2};
    }
    return {0.0, 0.0};
}

PenaltyConditionReport check_penalty_conditions(const std::function<double(double)>& value,
                                                const std::function<double(double)>& rderiv,
                                                double lambda, std::span<const double> grid,
                                                double c1, double c2) {
    constexpr double tol = 1e-12;
    std::vector<double> pts(grid.begin(), grid.end());
    pts.push_back(0.0);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

    PenaltyConditionReport rep;
    rep.c1 = c1;
    rep.c2 = c2;
    rep.zero_at_origin = std::abs(value(0.0)) <= tol;
    rep.slope_at_origin = std::abs(rderiv(0.0) - lambda) <= tol * std::max(1.0, lambda);
    rep.nondecreasing = true;
    rep.concave = true;
    rep.plateau = true;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        double v = value(pts[i]);
        double dv = rderiv(pts[i]);
        if (dv < -tol) rep.nondecreasing = false;
        if (i > 0) {
            double scale = tol * std::max(1.0, std::abs(v));
            if (v < value(pts[i - 1]) - scale) rep.nondecreasing = false;
            if (dv > rderiv(pts[i - 1]) + tol) rep.concave = false;
            // Secant slopes must not increase either.
            if (i > 1) {
                double s_prev = (value(pts[i - 1]) - value(pts[i - 2])) / (pts[i - 1] - pts[i - 2]);
                double s_cur = (v - value(pts[i - 1])) / (pts[i] - pts[i - 1]);
                if (s_cur > s_prev + 1e-9 * std::max(1.0, std::abs(s_prev))) rep.concave = false;
            }
        }
        if (pts[i] <= c2 * lambda && dv < c1 * lambda - tol) rep.plateau = false;
    }
    return rep;
}

PenaltyConditionReport check_penalty_conditions(const PenaltySpec& spec, std::span<const double> grid) {
    spec.validate();
    auto [c1, c2] = documented_plateau(spec);
    return check_penalty_conditions([&](double u) { return penalty_value(spec, u); },
                                    [&](double u) { return penalty_rderiv(spec, u); }, spec.lambda, grid,
                                    c1, c2);
}

}  // namespace segm
