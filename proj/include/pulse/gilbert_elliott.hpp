#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pulse/nonparam.hpp"
#include "pulse/stats.hpp"

namespace pulse {

// Two-state interference model parameters. lambda_b is the rate of entering
// the bad state (so good dwells are Exp(lambda_b)), lambda_g the rate of
// leaving it. p_cs follows the printed definition alpha * lambda_g /
// (lambda_g + lambda_b); see stationary_bad_probability for the occupancy
// implied by the dwell convention, which differs unless lambda_b = lambda_g.
struct GEParams {
    double lambda_b = 1.0;  // 1/seconds
    double lambda_g = 1.0;  // 1/seconds
    double p_g = 0.0;       // loss probability in the good state
    double p_b = 1.0;       // loss probability in the bad state
    double alpha = 0.0;     // carrier-sense coupling, [0, 1]

    double p_cs() const { return alpha * lambda_g / (lambda_g + lambda_b); }

    void validate() const;  // throws std::invalid_argument
};

// Probability that the interference enters the bad state during a
// transmission of duration t_d: 1 - exp(-lambda_b t_d).
double prob_enter_bad(double t_d, double lambda_b);

// Stationary probability of the bad state under the enter/leave dwell
// convention: lambda_b / (lambda_b + lambda_g).
double stationary_bad_probability(double lambda_b, double lambda_g);

// Stationary distribution (idle, transmitting, loss) of the slotted chain
// with carrier-sense probability p_cs and in-transmission entry probability
// p_i.
std::array<double, 3> stationary_distribution(double p_cs, double p_i);

// First-packet loss probability G1 with explicit inputs.
double loss_first(double p_i, double p_cs, double p_g, double p_b);
// Second-packet loss probability G2 with an explicit bad-state-at-start
// probability (the printed equations use lambda_b / (lambda_b + lambda_g)).
double loss_second(double p_i, double bad_at_start, double p_g, double p_b);

double loss_first(double t_d, const GEParams& params);
double loss_second(double t_d, const GEParams& params);

// Stacked model predictions [G1(t1), G2(t1), G1(t2), G2(t2), ...].
std::vector<double> model_curve(const std::vector<double>& grid, const GEParams& params);

struct FitOptions {
    GEParams init;
    GEParams lower{1e-2, 1e-2, 0.0, 0.0, 0.0};
    GEParams upper{1e5, 1e6, 1.0, 1.0, 1.0};
    bool pin_alpha = false;  // hold alpha at its initial value
    bool pin_p_g = false;    // hold p_g at its initial value
    bool weight_by_variance = false;  // per-point 1/var weights from CI widths
    int max_iterations = 10000;
    double tolerance = 1e-8;  // simplex diameter in scaled parameters
};

struct ParamFitResult {
    GEParams params;
    double residual = 0.0;  // sum of squared errors over the stacked system
    int iterations = 0;
    bool converged = false;
    bool identifiability_warning = false;  // alpha / p_g nearly indistinguishable
};

// Least-squares fit of the stacked (p1, p2) measurements to (G1, G2); the
// per-packet transmit duration is t_d for single-packet curves and t_d / 2
// for pair curves. Deterministic given the options.
ParamFitResult fit_ml(const LossCurve& curve, const FitOptions& options);

// Structured fit report as key=value lines.
void write_fit_report(const ParamFitResult& fit, std::ostream& out);

// Fitted-versus-measured curve CSV: t_d_s,p1_hat,p1_model,p2_hat,p2_model.
void write_fit_curve(const LossCurve& curve, const GEParams& params, std::ostream& out);

struct ConvergencePoint {
    std::size_t sample_size = 0;
    double parametric_distance = 0.0;     // mean sup-norm to the full-trace fit
    double nonparametric_distance = 0.0;
    std::size_t replicates = 0;
};

// Subsampling convergence study: for each N, draws `replicates` random
// subsamples of N records, estimates F by the parametric route (fit, then
// invert the model's combined loss curve) and by the direct non-parametric
// route, and reports the mean sup-norm distance to the corresponding
// full-trace estimate. Replicates whose subsample misses a grid cell are
// redrawn, up to a bounded number of retries.
std::vector<ConvergencePoint> convergence_study(
    const std::vector<TransmissionRecord>& records,
    const std::vector<std::size_t>& sample_sizes, std::size_t replicates,
    std::uint64_t seed, const FitOptions& fit_options);

}  // namespace pulse
