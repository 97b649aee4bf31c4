#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pulse/stats.hpp"

namespace pulse {

// Rectangular basis for the gap distribution: F is a step function jumping
// by weights[i] at knots[i]. Weights are non-negative and sum to one once
// fitted.
struct BasisSpec {
    std::vector<double> knots;    // strictly increasing, seconds
    std::vector<double> weights;  // filled in by the fit

    void validate() const;

    // Uniform knots at the grid spacing, extended half a step below the
    // first grid point and to twice the last one so probability mass just
    // outside the measured span stays representable.
    static BasisSpec for_grid(const std::vector<double>& grid);
};

struct CcdfEstimate {
    std::vector<double> grid;        // x values, seconds
    std::vector<double> ccdf;        // 1 - F(x), non-increasing, in [0, 1]
    double mean_pulse_duration = 0.0;  // E[S] estimate, seconds
    double mean_gap = 0.0;             // E[Delta] estimate, seconds
    double mean_cycle = 0.0;           // E[S + Delta] estimate, seconds
    double residual_norm = 0.0;        // fit quality
    BasisSpec basis;                   // knots and fitted weights
    bool degenerate = false;           // no losses observed anywhere
    std::vector<std::string> warnings;

    double ccdf_at(double x) const;  // right-continuous step evaluation
    double cdf_at(double x) const { return 1.0 - ccdf_at(x); }
};

// Inverts the renewal loss identity
//   p(T_D) = 1 - E[(Delta - T_D)^+] / E[S + Delta]
// by constrained least squares over the basis weights, with the pulse
// duration pinned to zero. Requires carrier-sense-free data (the caller
// asserts). Scale is anchored at p(0) = 0, so a duration-independent loss
// factor (collisions) is absorbed rather than biasing the shape.
CcdfEstimate recover_ccdf_direct(const LossCurve& curve, const BasisSpec& basis);
CcdfEstimate recover_ccdf_direct(const LossCurve& curve);

// Same system with the carrier-sense bias model
//   p~(T_D) = 1 - (E[S] Fc(T_D) + E[(Delta - T_D)^+]) / E[S + Delta],
// fitting E[S] >= 0 jointly with the weights (profile search over E[S],
// non-negative least squares inside).
CcdfEstimate recover_ccdf_bias_corrected(const LossCurve& curve, const BasisSpec& basis);
CcdfEstimate recover_ccdf_bias_corrected(const LossCurve& curve);

// Weighted least-squares line through the origin on points with p_hat < 0.9;
// returns 1/slope. Throws when every point is saturated.
double fit_periodic_slope(const LossCurve& curve);

// Least-squares slope of -log(1 - p_hat) against T_D (with intercept, so a
// duration-independent offset does not bias the rate). Points with
// p_hat = 1 are excluded with a warning.
double fit_poisson_rate(const LossCurve& curve, std::vector<std::string>* warnings = nullptr);

// Ccdf CSV, schema: x_s,ccdf.
void export_ccdf(const CcdfEstimate& est, std::ostream& out);
void export_ccdf(const CcdfEstimate& est, const std::string& path);

}  // namespace pulse
